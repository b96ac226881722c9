//! Double-coset algebras of symmetric groups relative to wreath-product
//! subgroups.
//!
//! For a fixed block size `k ≥ 2`, the symmetric group `S_{kn}` contains the
//! wreath product `H_n = S_k ≀ S_n` as the stabilizer of the partition of
//! `{1..kn}` into `n` consecutive blocks of size `k`.  The `(H_n, H_n)`
//! double cosets of `S_{kn}` index a basis of the associated double-coset
//! (Hecke) algebra.  This crate:
//!
//! * parameterizes double cosets by isomorphism classes of "coset type"
//!   multigraphs, independent of `n` once isolated vertices are removed
//!   ([`type_graph`]);
//! * computes canonical minimal representatives inside each coset
//!   ([`cosets`]);
//! * computes structure constants of the double-coset algebra by two
//!   independent engines — a convolution-counting oracle and a
//!   centralizer-orbit formula — and cross-checks them ([`hecke`]);
//! * fits structure constants as exact polynomials in `n` and verifies the
//!   weight filtration and top-degree stability ([`polyfit`]);
//! * realizes the limiting graded algebra on formal symbols and checks its
//!   associativity ([`universal`]);
//! * provides the edge-replacement calculus used to prove the filtration
//!   bound, as executable checks on explicit multigraphs ([`evolution`]).
//!
//! All counting is exact (arbitrary-precision integers, exact rationals).
//! Scans over `S_{kn}` and over triple families run in parallel when the
//! default `parallel` feature is enabled, and sequentially otherwise; the
//! sequential entry points remain available either way for benchmarking.

pub mod cosets;
pub mod error;
pub mod evolution;
pub(crate) mod exec;
pub mod hecke;
pub mod perm;
pub mod polyfit;
pub mod type_graph;
pub mod universal;

pub use error::{Error, Result};
pub use perm::{Permutation, WreathContext};
pub use type_graph::ModifiedType;

/// Version tag embedded in every serialized artifact (tables, reports,
/// caches).  Bump when an on-disk format changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// Sizes the process-wide worker pool; call once, before any parallel work.
/// `0` keeps the library default.  Without the `parallel` feature there is
/// no pool and the call does nothing.
pub fn configure_workers(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}
