//! Structure constants by direct convolution counting.
//!
//! With `g` a fixed element of the `L` double coset, the coefficient of
//! that coset in the product of the averaged indicator sums of the `M`
//! and `N` cosets is
//!
//! `c = #{ x : type(x) = M, type(x⁻¹ g) = N } / |H_n|`,
//!
//! and the division is exact.  This engine evaluates the count by
//! streaming all of `S_{kn}`, which is assumption-free but only feasible
//! for small degrees; it is the reference the centralizer engine is
//! checked against.

use num_traits::ToPrimitive;

use crate::cosets::coset_size;
use crate::error::{Error, Result};
use crate::exec;
use crate::perm::{factorial, for_each_permutation_in_range, Permutation, WreathContext};
use crate::type_graph::{modified_type, representative_of_type, ModifiedType};

/// Largest degree `kn` for which the oracle will stream `S_{kn}`.
pub const ORACLE_DEGREE_LIMIT: usize = 10;

/// The structure constant `c_{M,N}^L` at level `ctx.n()`, by brute-force
/// pair counting.  Walks whichever of the `M` and `N` classes is smaller.
pub fn conv_constant_oracle(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
) -> Result<u64> {
    oracle_inner(ctx, m, n_ty, l, false)
}

/// Sequential variant of [`conv_constant_oracle`] (same value).
pub fn conv_constant_oracle_sequential(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
) -> Result<u64> {
    oracle_inner(ctx, m, n_ty, l, true)
}

fn oracle_inner(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
    force_sequential: bool,
) -> Result<u64> {
    super::check_triple(ctx, m, n_ty, l)?;
    let degree = ctx.degree();
    if degree > ORACLE_DEGREE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "oracle streams S_{{kn}} and kn = {degree} exceeds {ORACLE_DEGREE_LIMIT}"
        )));
    }
    let (g, _) = representative_of_type(l, ctx.n())?;
    let m_size = coset_size(ctx, &representative_of_type(m, ctx.n())?.0)?;
    let n_size = coset_size(ctx, &representative_of_type(n_ty, ctx.n())?.0)?;

    // Walking x through the M class pairs it with g2 = x⁻¹ g; walking the
    // N class pairs x with g1 = g x⁻¹.  Either way x's partner completes a
    // factorization g1 g2 = g, so pick the cheaper side.
    let count = if m_size <= n_size {
        stream_count(ctx, m, n_ty, force_sequential, |x| x.inverse().compose(&g))?
    } else {
        stream_count(ctx, n_ty, m, force_sequential, |x| g.compose(&x.inverse()))?
    };

    let order = ctx
        .subgroup_order()
        .to_u64()
        .ok_or_else(|| Error::SizeLimit("|H_n| does not fit in u64".into()))?;
    if count % order != 0 {
        return Err(Error::InternalConsistency(format!(
            "pair count {count} for ({}, {}, {}) at n = {} is not a multiple of |H_n| = {order}",
            m.key(),
            n_ty.key(),
            l.key(),
            ctx.n()
        )));
    }
    Ok(count / order)
}

/// Counts `x` in `S_{kn}` with `type(x) = walk` and `type(partner(x)) =
/// other`, in parallel rank chunks.
fn stream_count<P>(
    ctx: &WreathContext,
    walk: &ModifiedType,
    other: &ModifiedType,
    force_sequential: bool,
    partner: P,
) -> Result<u64>
where
    P: Fn(&Permutation) -> Permutation + Sync,
{
    let degree = ctx.degree();
    let ranges = exec::split_ranges(factorial(degree), exec::default_chunks());
    let partials = exec::map_ranges(&ranges, force_sequential, |start, end| -> Result<u64> {
        let mut count = 0u64;
        let mut failure = None;
        for_each_permutation_in_range(degree, start, end, |images| {
            if failure.is_some() {
                return;
            }
            match pair_matches(ctx, images, walk, other, &partner) {
                Ok(true) => count += 1,
                Ok(false) => {}
                Err(e) => failure = Some(e),
            }
        })?;
        failure.map_or(Ok(count), Err)
    });
    let mut total = 0u64;
    for partial in partials {
        total += partial?;
    }
    Ok(total)
}

fn pair_matches<P>(
    ctx: &WreathContext,
    images: &[usize],
    walk: &ModifiedType,
    other: &ModifiedType,
    partner: &P,
) -> Result<bool>
where
    P: Fn(&Permutation) -> Permutation,
{
    let x = Permutation::from_images(images.to_vec())?;
    if &modified_type(ctx, &x)? != walk {
        return Ok(false);
    }
    Ok(&modified_type(ctx, &partner(&x))? == other)
}
