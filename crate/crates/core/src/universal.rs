//! The universal graded algebra on modified types.
//!
//! At the top of the weight filtration the structure constants are
//! level-independent, so formal sums of indeterminates `X_M` carry a
//! well-defined graded product `X_M · X_N = Σ_{||L|| = ||M|| + ||N||}
//! c_{M,N}^L X_L` with plain integer coefficients, one algebra for all
//! levels at once.  This module materializes that product from verified
//! constant fits, exposes it on formal sums, and checks graded
//! associativity and the unit laws on the generators.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hecke::Engine;
use crate::polyfit::fit_structure_polynomial;
use crate::type_graph::{enumerate_types_up_to_weight, inverse_type, ModifiedType};
use crate::SCHEMA_VERSION;

/// An integer combination of indeterminates `X_M`, the elements of the
/// universal algebra.  Terms with coefficient zero are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalSum {
    k: usize,
    terms: BTreeMap<ModifiedType, u64>,
}

impl FormalSum {
    pub fn zero(k: usize) -> Self {
        FormalSum { k, terms: BTreeMap::new() }
    }

    /// The single indeterminate `X_M`.
    pub fn generator(ty: &ModifiedType) -> Self {
        let mut sum = FormalSum::zero(ty.k());
        sum.terms.insert(ty.clone(), 1);
        sum
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, ty: &ModifiedType) -> u64 {
        self.terms.get(ty).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ModifiedType, u64)> {
        self.terms.iter().map(|(t, &c)| (t, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, ty: ModifiedType, coefficient: u64) -> Result<()> {
        if ty.k() != self.k {
            return Err(Error::Domain(format!(
                "term {} does not belong to a k = {} sum",
                ty.key(),
                self.k
            )));
        }
        if coefficient == 0 {
            return Ok(());
        }
        let slot = self.terms.entry(ty).or_insert(0);
        *slot = slot.checked_add(coefficient).ok_or_else(|| {
            Error::InternalConsistency("coefficient overflow in a formal sum".into())
        })?;
        Ok(())
    }

    /// The common weight of all terms, `None` for the zero sum, an error
    /// if the sum is not homogeneous.
    pub fn homogeneous_weight(&self) -> Result<Option<usize>> {
        let mut weight = None;
        for ty in self.terms.keys() {
            match weight {
                None => weight = Some(ty.weight()),
                Some(w) if w == ty.weight() => {}
                Some(w) => {
                    return Err(Error::Domain(format!(
                        "mixed weights {w} and {} in one homogeneous component",
                        ty.weight()
                    )))
                }
            }
        }
        Ok(weight)
    }
}

impl fmt::Display for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (ty, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if *c != 1 {
                write!(f, "{c}*")?;
            }
            write!(f, "X[{}]", ty.key())?;
        }
        Ok(())
    }
}

impl Serialize for FormalSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for (ty, c) in &self.terms {
            map.serialize_entry(&ty.key(), c)?;
        }
        map.end()
    }
}

/// The graded product on generators up to a weight cap, backed by
/// verified level-independent constants.
///
/// Products are registered for every ordered pair with one factor of
/// weight at most `max_weight` and the other at most twice that, which
/// is exactly what re-multiplying a product by a generator requires.
pub struct UniversalAlgebra {
    k: usize,
    max_weight: usize,
    products: BTreeMap<(String, String), FormalSum>,
    generators: Vec<ModifiedType>,
}

impl UniversalAlgebra {
    /// Computes and verifies every registered constant with the given
    /// engine.  Each candidate coefficient is fitted as a polynomial in
    /// the level and must validate as a constant; anything else is
    /// reported as a missing (unverified) constant.
    pub fn compute(k: usize, max_weight: usize, engine: Engine) -> Result<UniversalAlgebra> {
        let generators = enumerate_types_up_to_weight(k, max_weight)?;
        let extended = enumerate_types_up_to_weight(k, 2 * max_weight)?;
        let mut algebra = UniversalAlgebra {
            k,
            max_weight,
            products: BTreeMap::new(),
            generators,
        };
        for a in &extended {
            for b in &algebra.generators.clone() {
                algebra.register_pair(a, b, engine)?;
                algebra.register_pair(b, a, engine)?;
            }
        }
        Ok(algebra)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    /// The generators `X_M` with `||M|| ≤ max_weight`.
    pub fn generators(&self) -> &[ModifiedType] {
        &self.generators
    }

    fn register_pair(&mut self, m: &ModifiedType, n: &ModifiedType, engine: Engine) -> Result<()> {
        let key = (m.key(), n.key());
        if self.products.contains_key(&key) {
            return Ok(());
        }
        let target = m.weight() + n.weight();
        let max_vertices = m.vertex_count() + n.vertex_count();
        let mut sum = FormalSum::zero(self.k);
        for l in enumerate_types_up_to_weight(self.k, target)? {
            if l.weight() != target || l.vertex_count() > max_vertices {
                continue;
            }
            let value = verified_constant(m, n, &l, engine)?;
            sum.add_term(l, value)?;
        }
        self.products.insert(key, sum);
        Ok(())
    }

    /// `X_M · X_N` in the top weight component.
    pub fn top_product(&self, m: &ModifiedType, n: &ModifiedType) -> Result<&FormalSum> {
        self.products.get(&(m.key(), n.key())).ok_or_else(|| {
            Error::MissingConstant(format!(
                "product of {} and {} is outside the registered envelope \
                 (one factor must have weight ≤ {}, the other ≤ {})",
                m.key(),
                n.key(),
                self.max_weight,
                2 * self.max_weight
            ))
        })
    }

    /// Bilinear extension of the graded product to formal sums.
    pub fn product_of_sums(&self, a: &FormalSum, b: &FormalSum) -> Result<FormalSum> {
        let mut out = FormalSum::zero(self.k);
        for (s, cs) in a.terms() {
            for (t, ct) in b.terms() {
                let scale = cs.checked_mul(ct).ok_or_else(|| {
                    Error::InternalConsistency("coefficient overflow in a product".into())
                })?;
                for (l, cl) in self.top_product(s, t)?.terms() {
                    let contribution = scale.checked_mul(cl).ok_or_else(|| {
                        Error::InternalConsistency("coefficient overflow in a product".into())
                    })?;
                    out.add_term(l.clone(), contribution)?;
                }
            }
        }
        Ok(out)
    }

    /// All registered products as JSON keyed by canonical type keys.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            m_key: &'a str,
            n_key: &'a str,
            product: &'a FormalSum,
        }
        #[derive(Serialize)]
        struct Document<'a> {
            schema_version: u32,
            k: usize,
            max_weight: usize,
            products: Vec<Row<'a>>,
        }
        let products = self
            .products
            .iter()
            .map(|((m, n), sum)| Row { m_key: m, n_key: n, product: sum })
            .collect();
        let doc = Document {
            schema_version: SCHEMA_VERSION,
            k: self.k,
            max_weight: self.max_weight,
            products,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// One verified level-independent constant `c_{M,N}^L`.
///
/// The fit is taken with the smaller factor first, using the transpose
/// identity `c_{M,N}^L = c_{N*,M*}^{L*}` (inverting every member of a
/// coset swaps the factors and transposes the types), which keeps the
/// interpolation degree bound at the smaller vertex count.
fn verified_constant(
    m: &ModifiedType,
    n: &ModifiedType,
    l: &ModifiedType,
    engine: Engine,
) -> Result<u64> {
    let fit = if n.vertex_count() < m.vertex_count() {
        fit_structure_polynomial(&inverse_type(n)?, &inverse_type(m)?, &inverse_type(l)?, engine)?
    } else {
        fit_structure_polynomial(m, n, l, engine)?
    };
    if !fit.validated || !fit.polynomial.is_constant() {
        return Err(Error::MissingConstant(format!(
            "c({}, {}; {}) did not verify as level-independent: fitted {}",
            m.key(),
            n.key(),
            l.key(),
            fit.polynomial
        )));
    }
    if fit.polynomial.is_zero() {
        return Ok(0);
    }
    let value = &fit.polynomial.coefficients()[0];
    if !value.is_integer() {
        return Err(Error::InternalConsistency(format!(
            "constant coefficient {value} is not an integer"
        )));
    }
    u64::try_from(value.to_integer()).map_err(|_| {
        Error::InternalConsistency(format!("constant coefficient {value} is out of range"))
    })
}

/// A triple of generators where the two association orders disagree.
#[derive(Clone, Debug, Serialize)]
pub struct GradedAssociativityFailure {
    pub m_key: String,
    pub n_key: String,
    pub p_key: String,
    pub left: FormalSum,
    pub right: FormalSum,
}

/// Outcome of the generator-level audit of the graded product.
#[derive(Clone, Debug, Serialize)]
pub struct GradedAssociativityReport {
    pub k: usize,
    pub max_weight: usize,
    pub generator_count: usize,
    pub triples_checked: usize,
    pub associative: bool,
    pub failures: Vec<GradedAssociativityFailure>,
    pub unit_ok: bool,
    pub unit_failures: Vec<String>,
}

/// Checks `(X_M · X_N) · X_P = X_M · (X_N · X_P)` for all generators of
/// weight at most `max_weight`, plus the two unit laws for `X_∅`, on an
/// algebra computed from scratch with the given engine.
pub fn graded_associativity_check(
    k: usize,
    max_weight: usize,
    engine: Engine,
) -> Result<GradedAssociativityReport> {
    let algebra = UniversalAlgebra::compute(k, max_weight, engine)?;
    check_graded_associativity(&algebra)
}

/// The audit itself, reusable on a precomputed algebra.
pub fn check_graded_associativity(algebra: &UniversalAlgebra) -> Result<GradedAssociativityReport> {
    let empty = ModifiedType::empty(algebra.k());
    let mut unit_failures = Vec::new();
    let extended = enumerate_types_up_to_weight(algebra.k(), 2 * algebra.max_weight())?;
    for t in &extended {
        let x = FormalSum::generator(t);
        if algebra.top_product(&empty, t)? != &x {
            unit_failures.push(format!("left unit at {}", t.key()));
        }
        if algebra.top_product(t, &empty)? != &x {
            unit_failures.push(format!("right unit at {}", t.key()));
        }
    }

    let mut failures = Vec::new();
    let mut triples_checked = 0;
    for m in algebra.generators() {
        let xm = FormalSum::generator(m);
        for n in algebra.generators() {
            let mn = algebra.top_product(m, n)?.clone();
            for p in algebra.generators() {
                let xp = FormalSum::generator(p);
                let left = algebra.product_of_sums(&mn, &xp)?;
                let np = algebra.top_product(n, p)?.clone();
                let right = algebra.product_of_sums(&xm, &np)?;
                triples_checked += 1;
                if left != right {
                    failures.push(GradedAssociativityFailure {
                        m_key: m.key(),
                        n_key: n.key(),
                        p_key: p.key(),
                        left,
                        right,
                    });
                }
            }
        }
    }

    Ok(GradedAssociativityReport {
        k: algebra.k(),
        max_weight: algebra.max_weight(),
        generator_count: algebra.generators().len(),
        triples_checked,
        associative: failures.is_empty(),
        failures,
        unit_ok: unit_failures.is_empty(),
        unit_failures,
    })
}
