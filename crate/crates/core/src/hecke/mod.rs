//! Structure constants of the double coset algebra, two ways.
//!
//! For types `M`, `N` the product of the averaged coset sums `S_M S_N`
//! expands over coset types `L` with non-negative integer coefficients
//! `c_{M,N}^L`; these are the structure constants of the double coset
//! algebra of `H_n = S_k ≀ S_n` inside `S_{kn}`.  Two independent engines
//! compute them: [`conv_constant_oracle`] counts convolution pairs by
//! streaming `S_{kn}`, [`conv_constant_centralizer`] sums orbit index
//! terms and scales polynomially in `n`.  This module also assembles
//! complete tables, serializes them, and audits the ring axioms.

mod centralizer;
mod fiber;
mod oracle;

pub use centralizer::{
    centralizer_orbit_summands, centralizer_orbit_summands_sequential, conv_constant_centralizer,
    conv_constant_centralizer_sequential, OrbitSummand, CENTRALIZER_CANDIDATE_LIMIT,
};
pub use fiber::{
    fiber_orbits, stabilizer_size, FiberOrbit, FIBER_DEGREE_LIMIT, FIBER_PAIR_LIMIT,
    STABILIZER_SCAN_LIMIT,
};
pub use oracle::{conv_constant_oracle, conv_constant_oracle_sequential, ORACLE_DEGREE_LIMIT};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::WreathContext;
use crate::type_graph::{enumerate_modified_types, ModifiedType};
use crate::SCHEMA_VERSION;

/// Block size and realizability checks shared by every constant computation.
pub(crate) fn check_triple(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
) -> Result<()> {
    for ty in [m, n_ty, l] {
        if ty.k() != ctx.k() {
            return Err(Error::Domain(format!(
                "type {} has block size {} but the context has k = {}",
                ty.key(),
                ty.k(),
                ctx.k()
            )));
        }
        if !ty.is_realizable(ctx.n()) {
            return Err(Error::Unrealizable {
                type_key: ty.key(),
                n: ctx.n(),
                needed: ty.vertex_count(),
            });
        }
    }
    Ok(())
}

/// Which counting strategy produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Oracle,
    Centralizer,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Oracle => "oracle",
            Engine::Centralizer => "centralizer",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Engine> {
        match s {
            "oracle" => Ok(Engine::Oracle),
            "centralizer" => Ok(Engine::Centralizer),
            other => Err(Error::Domain(format!(
                "unknown engine {other:?}, expected \"oracle\" or \"centralizer\""
            ))),
        }
    }
}

/// One structure constant with the chosen engine.
pub fn conv_constant(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
    engine: Engine,
) -> Result<u64> {
    match engine {
        Engine::Oracle => conv_constant_oracle(ctx, m, n_ty, l),
        Engine::Centralizer => conv_constant_centralizer(ctx, m, n_ty, l),
    }
}

/// One `(n, M, N, L)` cell of a [`StructureTable`], tagged by engine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub k: usize,
    pub n: usize,
    pub m_key: String,
    pub n_key: String,
    pub l_key: String,
    pub value: u64,
    pub engine: Engine,
}

/// Structure constants for one block size, indexed by `(n, M, N, L)`,
/// possibly carrying values from both engines (which must agree).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureTable {
    k: usize,
    cells: BTreeMap<(usize, String, String, String), BTreeMap<Engine, u64>>,
}

impl StructureTable {
    pub fn new(k: usize) -> Self {
        StructureTable { k, cells: BTreeMap::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Records a value; refuses silently divergent engines.
    pub fn insert(
        &mut self,
        n: usize,
        m: &ModifiedType,
        n_ty: &ModifiedType,
        l: &ModifiedType,
        engine: Engine,
        value: u64,
    ) -> Result<()> {
        for ty in [m, n_ty, l] {
            if ty.k() != self.k {
                return Err(Error::Domain(format!(
                    "type {} does not belong to a k = {} table",
                    ty.key(),
                    self.k
                )));
            }
        }
        let cell = self
            .cells
            .entry((n, m.key(), n_ty.key(), l.key()))
            .or_default();
        if let Some((other_engine, other)) = cell.iter().find(|&(_, &v)| v != value) {
            return Err(Error::InternalConsistency(format!(
                "engines disagree on ({}, {}, {}) at n = {n}: {other_engine} gave {other}, \
                 {engine} gave {value}",
                m.key(),
                n_ty.key(),
                l.key()
            )));
        }
        cell.insert(engine, value);
        Ok(())
    }

    /// The value of a cell from any engine.
    pub fn value(
        &self,
        n: usize,
        m: &ModifiedType,
        n_ty: &ModifiedType,
        l: &ModifiedType,
    ) -> Option<u64> {
        self.cells
            .get(&(n, m.key(), n_ty.key(), l.key()))
            .and_then(|cell| cell.values().next().copied())
    }

    pub fn value_from(
        &self,
        n: usize,
        m: &ModifiedType,
        n_ty: &ModifiedType,
        l: &ModifiedType,
        engine: Engine,
    ) -> Option<u64> {
        self.cells
            .get(&(n, m.key(), n_ty.key(), l.key()))
            .and_then(|cell| cell.get(&engine).copied())
    }

    /// All rows in key order, engines inner-most.
    pub fn rows(&self) -> Vec<TableRow> {
        let mut rows = Vec::new();
        for ((n, m_key, n_key, l_key), cell) in &self.cells {
            for (&engine, &value) in cell {
                rows.push(TableRow {
                    k: self.k,
                    n: *n,
                    m_key: m_key.clone(),
                    n_key: n_key.clone(),
                    l_key: l_key.clone(),
                    value,
                    engine,
                });
            }
        }
        rows
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Every constant between types realizable at level `ctx.n()`, for
    /// each requested engine.
    pub fn compute(ctx: &WreathContext, engines: &[Engine]) -> Result<StructureTable> {
        let mut table = StructureTable::new(ctx.k());
        let types = enumerate_modified_types(ctx.k(), ctx.n())?;
        for m in &types {
            for n_ty in &types {
                for l in &types {
                    for &engine in engines {
                        let value = conv_constant(ctx, m, n_ty, l, engine)?;
                        table.insert(ctx.n(), m, n_ty, l, engine, value)?;
                    }
                }
            }
        }
        Ok(table)
    }

    /// CSV rendering, header included; key order, stable across runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n,M_key,N_key,L_key,value,engine\n");
        for row in self.rows() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.k, row.n, row.m_key, row.n_key, row.l_key, row.value, row.engine
            ));
        }
        out
    }

    /// JSON rendering with the schema version stamped in.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Document {
            schema_version: u32,
            k: usize,
            rows: Vec<TableRow>,
        }
        let doc = Document { schema_version: SCHEMA_VERSION, k: self.k, rows: self.rows() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// One broken instance of associativity.
#[derive(Clone, Debug, Serialize)]
pub struct AssociativityFailure {
    pub m_key: String,
    pub n_key: String,
    pub p_key: String,
    pub q_key: String,
    pub lhs: u128,
    pub rhs: u128,
}

/// A pair of types whose products differ in the two orders.
#[derive(Clone, Debug, Serialize)]
pub struct CommutationWitness {
    pub m_key: String,
    pub n_key: String,
    pub l_key: String,
    pub forward: u64,
    pub backward: u64,
}

/// Outcome of the ring-axiom audit of a complete level-`n` table.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub k: usize,
    pub n: usize,
    pub type_count: usize,
    pub associative: bool,
    pub associativity_failures: Vec<AssociativityFailure>,
    pub unit_ok: bool,
    pub unit_failures: Vec<String>,
    pub symmetric: bool,
    pub noncommutative_witness: Option<CommutationWitness>,
}

/// Audits associativity, the two unit laws, and commutativity on a table
/// that is complete at level `ctx.n()`.  Missing cells are an error, not
/// a silent pass.
pub fn check_algebra_axioms(table: &StructureTable, ctx: &WreathContext) -> Result<AxiomReport> {
    if table.k() != ctx.k() {
        return Err(Error::Domain(format!(
            "table is for k = {}, context for k = {}",
            table.k(),
            ctx.k()
        )));
    }
    let n = ctx.n();
    let types = enumerate_modified_types(ctx.k(), n)?;
    let get = |m: &ModifiedType, n_ty: &ModifiedType, l: &ModifiedType| -> Result<u64> {
        table.value(n, m, n_ty, l).ok_or_else(|| {
            Error::MissingConstant(format!(
                "({}, {}, {}) at n = {n}",
                m.key(),
                n_ty.key(),
                l.key()
            ))
        })
    };

    let empty = ModifiedType::empty(ctx.k());
    let mut unit_failures = Vec::new();
    for t in &types {
        for l in &types {
            let want = u64::from(t == l);
            if get(&empty, t, l)? != want {
                unit_failures.push(format!("left unit at ({}, {})", t.key(), l.key()));
            }
            if get(t, &empty, l)? != want {
                unit_failures.push(format!("right unit at ({}, {})", t.key(), l.key()));
            }
        }
    }

    let mut associativity_failures = Vec::new();
    for m in &types {
        for n_ty in &types {
            for p in &types {
                for q in &types {
                    let mut lhs = 0u128;
                    let mut rhs = 0u128;
                    for l in &types {
                        lhs += u128::from(get(m, n_ty, l)?) * u128::from(get(l, p, q)?);
                        rhs += u128::from(get(n_ty, p, l)?) * u128::from(get(m, l, q)?);
                    }
                    if lhs != rhs {
                        associativity_failures.push(AssociativityFailure {
                            m_key: m.key(),
                            n_key: n_ty.key(),
                            p_key: p.key(),
                            q_key: q.key(),
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
    }

    let mut noncommutative_witness = None;
    'outer: for m in &types {
        for n_ty in &types {
            for l in &types {
                let forward = get(m, n_ty, l)?;
                let backward = get(n_ty, m, l)?;
                if forward != backward {
                    noncommutative_witness = Some(CommutationWitness {
                        m_key: m.key(),
                        n_key: n_ty.key(),
                        l_key: l.key(),
                        forward,
                        backward,
                    });
                    break 'outer;
                }
            }
        }
    }

    Ok(AxiomReport {
        k: ctx.k(),
        n,
        type_count: types.len(),
        associative: associativity_failures.is_empty(),
        associativity_failures,
        unit_ok: unit_failures.is_empty(),
        unit_failures,
        symmetric: noncommutative_witness.is_none(),
        noncommutative_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{factorial, for_each_permutation_in_range, Permutation};
    use crate::type_graph::modified_type;
    use std::collections::HashMap;

    fn ctx(k: usize, n: usize) -> WreathContext {
        WreathContext::new(k, n).unwrap()
    }

    fn ty(k: usize, key: &str) -> ModifiedType {
        ModifiedType::parse_key(k, key).unwrap()
    }

    #[test]
    fn engine_names_round_trip() {
        for engine in [Engine::Oracle, Engine::Centralizer] {
            assert_eq!(engine.name().parse::<Engine>().unwrap(), engine);
        }
        assert!("fast".parse::<Engine>().is_err());
        assert_eq!(serde_json::to_string(&Engine::Oracle).unwrap(), "\"oracle\"");
    }

    #[test]
    fn table_rejects_engine_disagreement_and_wrong_k() {
        let e = ty(2, "v0:");
        let mut table = StructureTable::new(2);
        table.insert(2, &e, &e, &e, Engine::Oracle, 1).unwrap();
        let err = table.insert(2, &e, &e, &e, Engine::Centralizer, 2).unwrap_err();
        assert!(matches!(err, Error::InternalConsistency(_)), "{err}");
        let err = table.insert(2, &ty(3, "v0:"), &e, &e, Engine::Oracle, 1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
        // Re-inserting the agreeing value is fine and idempotent.
        table.insert(2, &e, &e, &e, Engine::Centralizer, 1).unwrap();
        assert_eq!(table.rows().len(), 2);
    }

    #[test]
    fn csv_snapshot_of_the_smallest_complete_table() {
        let c = ctx(2, 2);
        let table = StructureTable::compute(&c, &[Engine::Oracle]).unwrap();
        let expected = "\
k,n,M_key,N_key,L_key,value,engine
2,2,v0:,v0:,v0:,1,oracle
2,2,v0:,v0:,v2:1.2|1.2,0,oracle
2,2,v0:,v2:1.2|1.2,v0:,0,oracle
2,2,v0:,v2:1.2|1.2,v2:1.2|1.2,1,oracle
2,2,v2:1.2|1.2,v0:,v0:,0,oracle
2,2,v2:1.2|1.2,v0:,v2:1.2|1.2,1,oracle
2,2,v2:1.2|1.2,v2:1.2|1.2,v0:,2,oracle
2,2,v2:1.2|1.2,v2:1.2|1.2,v2:1.2|1.2,1,oracle
";
        assert_eq!(table.to_csv(), expected);
    }

    #[test]
    fn json_rendering_carries_the_schema_version() {
        let c = ctx(2, 2);
        let table = StructureTable::compute(&c, &[Engine::Centralizer]).unwrap();
        let json = table.to_json().unwrap();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["schema_version"], u64::from(SCHEMA_VERSION));
        assert_eq!(doc["k"], 2);
        assert_eq!(doc["rows"].as_array().unwrap().len(), 8);
        assert_eq!(doc["rows"][0]["engine"], "centralizer");
    }

    #[test]
    fn both_engines_fill_identical_tables() {
        for (k, n) in [(2, 2), (2, 3), (3, 2)] {
            let c = ctx(k, n);
            let table = StructureTable::compute(&c, &[Engine::Oracle, Engine::Centralizer])
                .unwrap();
            for row in table.rows() {
                let m = ty(k, &row.m_key);
                let n_ty = ty(k, &row.n_key);
                let l = ty(k, &row.l_key);
                assert_eq!(
                    table.value_from(n, &m, &n_ty, &l, Engine::Oracle),
                    table.value_from(n, &m, &n_ty, &l, Engine::Centralizer),
                );
            }
        }
    }

    #[test]
    fn axioms_hold_on_small_complete_tables() {
        for (k, n) in [(2, 2), (2, 3), (3, 2)] {
            let c = ctx(k, n);
            let table = StructureTable::compute(&c, &[Engine::Centralizer]).unwrap();
            let report = check_algebra_axioms(&table, &c).unwrap();
            assert!(report.associative, "associativity at (k, n) = ({k}, {n})");
            assert!(report.unit_ok, "unit laws at (k, n) = ({k}, {n})");
            if k == 2 {
                assert!(report.symmetric, "k = 2 tables must be symmetric");
                assert!(report.noncommutative_witness.is_none());
            }
        }
    }

    #[test]
    fn axiom_check_requires_a_complete_table() {
        let c = ctx(2, 2);
        let mut table = StructureTable::new(2);
        let e = ty(2, "v0:");
        table.insert(2, &e, &e, &e, Engine::Oracle, 1).unwrap();
        let err = check_algebra_axioms(&table, &c).unwrap_err();
        assert!(matches!(err, Error::MissingConstant(_)), "{err}");
    }

    /// `(g₁, g₂) ↦ (g₂⁻¹, g₁⁻¹)` bijects the convolution pairs behind
    /// `c_{M,N}^L` with those behind `c_{N*,M*}^{L*}`, where `*` is
    /// [`crate::type_graph::inverse_type`]; the constants coincide.
    #[test]
    fn products_transpose_through_inverse_types() {
        use crate::type_graph::inverse_type;
        for (k, n, engine) in [(2, 2, Engine::Oracle), (3, 2, Engine::Oracle)] {
            let c = ctx(k, n);
            let types = enumerate_modified_types(k, n).unwrap();
            for m in &types {
                for n_ty in &types {
                    for l in &types {
                        let lhs = conv_constant(&c, m, n_ty, l, engine).unwrap();
                        let rhs = conv_constant(
                            &c,
                            &inverse_type(n_ty).unwrap(),
                            &inverse_type(m).unwrap(),
                            &inverse_type(l).unwrap(),
                            engine,
                        )
                        .unwrap();
                        assert_eq!(lhs, rhs, "transpose of ({m}, {n_ty}, {l})");
                    }
                }
            }
        }
        // A genuinely asymmetric instance: at k = 3 the two v = 5 types
        // below are each other's inverses and separate the two orders.
        let c = ctx(3, 5);
        let m = ty(3, "v3:1.1.2|1.2.3|2.3.3");
        let n_ty = ty(3, "v3:1.2.3|1.2.3|1.2.3");
        let l = ty(3, "v5:1.1.2|1.3.4|2.3.4|2.5.5|3.4.5");
        let l_inv = ty(3, "v5:1.1.2|1.3.4|2.3.5|2.3.5|4.4.5");
        let fwd = conv_constant(&c, &m, &n_ty, &l, Engine::Centralizer).unwrap();
        let bwd = conv_constant(&c, &n_ty, &m, &l, Engine::Centralizer).unwrap();
        assert_eq!((fwd, bwd), (0, 1));
        let fwd_inv = conv_constant(&c, &m, &n_ty, &l_inv, Engine::Centralizer).unwrap();
        assert_eq!(fwd_inv, 1, "the transposed triple carries the mass");
    }

    /// A complete table really is the multiplication law: expanding
    /// `S_M S_N` densely in the group algebra of S_6 reproduces, on every
    /// single group element, |H| times the tabulated constant.
    #[test]
    fn dense_expansion_matches_the_table_at_degree_six() {
        let c = ctx(2, 3);
        let table = StructureTable::compute(&c, &[Engine::Centralizer]).unwrap();
        let a = ty(2, "v2:1.2|1.2");

        let mut by_type: HashMap<ModifiedType, Vec<Permutation>> = HashMap::new();
        for_each_permutation_in_range(6, 0, factorial(6), |images| {
            let p = Permutation::from_images(images.to_vec()).unwrap();
            by_type.entry(modified_type(&c, &p).unwrap()).or_default().push(p);
        })
        .unwrap();

        let members = &by_type[&a];
        let mut product: HashMap<Vec<usize>, u64> = HashMap::new();
        for x in members {
            for y in members {
                *product.entry(x.compose(y).images().to_vec()).or_insert(0) += 1;
            }
        }
        let order = 48u64;
        for (l, zs) in &by_type {
            let want = order * table.value(3, &a, &a, l).unwrap();
            for z in zs {
                assert_eq!(
                    product.get(z.images()).copied().unwrap_or(0),
                    want,
                    "coefficient at {z} of type {l}"
                );
            }
        }
    }
}
