//! Exact interpolation of structure constants as polynomials in the level.
//!
//! For fixed types `M`, `N`, `L` the map `n ↦ c_{M,N}^L(n)` is a
//! polynomial whose degree is bounded by the vertex count of `M`.  This
//! module fits that polynomial from exact samples by Newton divided
//! differences over arbitrary-precision rationals, validates the fit on
//! held-out levels, and classifies every triple in a weight range:
//! constants vanish above the weight bound `||L|| ≤ ||M|| + ||N||`, are
//! level-independent at equality, and are genuine polynomials below it.
//! No floating point is used anywhere.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hecke::{centralizer_orbit_summands, conv_constant, Engine};
use crate::perm::WreathContext;
use crate::type_graph::{enumerate_modified_types, enumerate_types_up_to_weight, ModifiedType};

/// A polynomial with exact rational coefficients, stored in ascending
/// degree with no trailing zeros.  The zero polynomial has no
/// coefficients and degree `None`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

impl RationalPolynomial {
    pub fn zero() -> Self {
        RationalPolynomial { coeffs: Vec::new() }
    }

    /// Builds from ascending monomial coefficients, trimming trailing zeros.
    pub fn from_coefficients(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RationalPolynomial { coeffs }
    }

    pub fn constant(value: BigRational) -> Self {
        Self::from_coefficients(vec![value])
    }

    /// `None` for the zero polynomial, otherwise the exponent of the
    /// (nonzero) leading term.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn evaluate(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn evaluate_at(&self, n: usize) -> BigRational {
        self.evaluate(&BigRational::from_integer(BigInt::from(n)))
    }

    /// Coefficients `a_j` of the falling-factorial expansion
    /// `p(n) = Σ_j a_j (n)_j` with `(n)_j = n(n−1)…(n−j+1)`, obtained by
    /// repeated synthetic division at the roots `0, 1, 2, …`.
    pub fn falling_factorial_coefficients(&self) -> Vec<BigRational> {
        let mut rest = self.coeffs.clone();
        let mut out = Vec::new();
        let mut root = 0u32;
        while !rest.is_empty() {
            let r = BigRational::from_integer(BigInt::from(root));
            let (quotient, remainder) = synthetic_divide(&rest, &r);
            out.push(remainder);
            rest = quotient;
            root += 1;
        }
        out
    }

    /// Rendering in the monomial basis, highest degree first, e.g.
    /// `n^2 - n` or `1/2*n^3 + 2`.
    pub fn monomial_string(&self) -> String {
        render_terms(
            self.coeffs
                .iter()
                .enumerate()
                .rev()
                .map(|(j, c)| (c, monomial_symbol(j))),
        )
    }

    /// Rendering in the falling-factorial basis, e.g. `(n)_2 + 3*(n)_1`
    /// with `(n)_j = n(n−1)…(n−j+1)`.
    pub fn falling_factorial_string(&self) -> String {
        let coeffs = self.falling_factorial_coefficients();
        render_terms(
            coeffs
                .iter()
                .enumerate()
                .rev()
                .map(|(j, c)| (c, if j == 0 { String::new() } else { format!("(n)_{j}") }))
                .collect::<Vec<_>>()
                .into_iter(),
        )
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.monomial_string())
    }
}

impl Serialize for RationalPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("RationalPolynomial", 4)?;
        s.serialize_field("degree", &self.degree())?;
        let coeffs: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        s.serialize_field("coefficients", &coeffs)?;
        s.serialize_field("monomial", &self.monomial_string())?;
        s.serialize_field("falling_factorial", &self.falling_factorial_string())?;
        s.end()
    }
}

fn monomial_symbol(power: usize) -> String {
    match power {
        0 => String::new(),
        1 => "n".to_string(),
        j => format!("n^{j}"),
    }
}

/// Joins `(coefficient, symbol)` terms into a signed sum, skipping zero
/// coefficients and the factor `1` in front of a symbol.
fn render_terms<'a, I>(terms: I) -> String
where
    I: Iterator<Item = (&'a BigRational, String)>,
{
    let mut out = String::new();
    for (c, symbol) in terms {
        if c.is_zero() {
            continue;
        }
        let magnitude = c.abs();
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else if c.is_negative() {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if symbol.is_empty() {
            out.push_str(&magnitude.to_string());
        } else if magnitude.is_one() {
            out.push_str(&symbol);
        } else {
            out.push_str(&format!("{magnitude}*{symbol}"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Divides `p` (ascending coefficients, non-empty) by `x − r`, returning
/// the quotient and the remainder `p(r)`.
fn synthetic_divide(c: &[BigRational], r: &BigRational) -> (Vec<BigRational>, BigRational) {
    let d = c.len() - 1;
    if d == 0 {
        return (Vec::new(), c[0].clone());
    }
    let mut q = vec![BigRational::zero(); d];
    q[d - 1] = c[d].clone();
    for i in (1..d).rev() {
        q[i - 1] = &c[i] + &(r * &q[i]);
    }
    let remainder = &c[0] + &(r * &q[0]);
    (q, remainder)
}

/// The unique polynomial of degree `< points.len()` through the given
/// integer points, by Newton divided differences in exact arithmetic.
pub fn interpolate(points: &[(i64, BigInt)]) -> Result<RationalPolynomial> {
    let mut seen = BTreeSet::new();
    for (x, _) in points {
        if !seen.insert(*x) {
            return Err(Error::Domain(format!("duplicate abscissa {x} in interpolation")));
        }
    }
    let xs: Vec<BigRational> =
        points.iter().map(|(x, _)| BigRational::from_integer(BigInt::from(*x))).collect();
    let mut dd: Vec<BigRational> =
        points.iter().map(|(_, y)| BigRational::from_integer(y.clone())).collect();
    for stage in 1..dd.len() {
        for i in (stage..dd.len()).rev() {
            let numer = &dd[i] - &dd[i - 1];
            let denom = &xs[i] - &xs[i - stage];
            dd[i] = numer / denom;
        }
    }

    // Expand the Newton form Σ dd[i]·Π_{j<i}(x − x_j) into monomials.
    let mut coeffs: Vec<BigRational> = Vec::new();
    let mut basis = vec![BigRational::one()];
    for (i, c) in dd.iter().enumerate() {
        if coeffs.len() < basis.len() {
            coeffs.resize(basis.len(), BigRational::zero());
        }
        for (t, b) in basis.iter().enumerate() {
            coeffs[t] += c * b;
        }
        if i + 1 < dd.len() {
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (t, b) in basis.iter().enumerate() {
                next[t + 1] += b;
                next[t] -= &xs[i] * b;
            }
            basis = next;
        }
    }
    Ok(RationalPolynomial::from_coefficients(coeffs))
}

/// A held-out level where the fitted polynomial missed the sampled value.
#[derive(Clone, Debug, Serialize)]
pub struct FitMismatch {
    pub n: usize,
    pub sampled: u64,
    pub fitted: String,
}

/// A validated interpolation of one triple's structure constant.
#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub k: usize,
    pub m_key: String,
    pub n_key: String,
    pub l_key: String,
    /// The degree bound actually used (the vertex count of `M`, raised
    /// by two on a failed validation).
    pub degree_bound: usize,
    pub raised: bool,
    pub polynomial: RationalPolynomial,
    pub samples: Vec<(usize, u64)>,
    pub holdouts: Vec<(usize, u64)>,
    pub validated: bool,
    pub mismatches: Vec<FitMismatch>,
}

fn sample_constant(
    k: usize,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
    n: usize,
    engine: Engine,
) -> Result<u64> {
    let ctx = WreathContext::new(k, n)?;
    conv_constant(&ctx, m, n_ty, l, engine)
}

/// Fitted polynomial, interpolation samples, hold-out samples, mismatches.
type FitAttempt = (RationalPolynomial, Vec<(usize, u64)>, Vec<(usize, u64)>, Vec<FitMismatch>);

fn fit_attempt(
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
    n_min: usize,
    bound: usize,
    engine: Engine,
) -> Result<FitAttempt> {
    let k = m.k();
    let mut samples = Vec::new();
    for n in n_min..=n_min + bound {
        samples.push((n, sample_constant(k, m, n_ty, l, n, engine)?));
    }
    let points: Vec<(i64, BigInt)> =
        samples.iter().map(|&(n, v)| (n as i64, BigInt::from(v))).collect();
    let polynomial = interpolate(&points)?;

    let mut holdouts = Vec::new();
    let mut mismatches = Vec::new();
    for n in n_min + bound + 1..=n_min + bound + 2 {
        let value = sample_constant(k, m, n_ty, l, n, engine)?;
        holdouts.push((n, value));
        let fitted = polynomial.evaluate_at(n);
        if fitted != BigRational::from_integer(BigInt::from(value)) {
            mismatches.push(FitMismatch { n, sampled: value, fitted: fitted.to_string() });
        }
    }
    Ok((polynomial, samples, holdouts, mismatches))
}

/// Fits `n ↦ c_{M,N}^L(n)` with degree bound `|V_M|`, sampling from the
/// first level where all three types are realizable, and validates the
/// result on two held-out larger levels.  A failed validation raises the
/// bound by two and retries once; a persistent failure is returned with
/// `validated: false` rather than silently accepted.
pub fn fit_structure_polynomial(
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
    engine: Engine,
) -> Result<FitResult> {
    let k = m.k();
    if n_ty.k() != k || l.k() != k {
        return Err(Error::Domain(format!(
            "mixed block sizes {} / {} / {} in one fit",
            m.k(),
            n_ty.k(),
            l.k()
        )));
    }
    let n_min = m
        .vertex_count()
        .max(n_ty.vertex_count())
        .max(l.vertex_count())
        .max(1);
    let bound = m.vertex_count();
    let (polynomial, samples, holdouts, mismatches) =
        fit_attempt(m, n_ty, l, n_min, bound, engine)?;
    let mut result = FitResult {
        k,
        m_key: m.key(),
        n_key: n_ty.key(),
        l_key: l.key(),
        degree_bound: bound,
        raised: false,
        polynomial,
        samples,
        holdouts,
        validated: mismatches.is_empty(),
        mismatches,
    };
    if !result.validated {
        let raised_bound = bound + 2;
        let (polynomial, samples, holdouts, mismatches) =
            fit_attempt(m, n_ty, l, n_min, raised_bound, engine)?;
        result = FitResult {
            k,
            m_key: m.key(),
            n_key: n_ty.key(),
            l_key: l.key(),
            degree_bound: raised_bound,
            raised: true,
            polynomial,
            samples,
            holdouts,
            validated: mismatches.is_empty(),
            mismatches,
        };
    }
    Ok(result)
}

/// How a triple's constant behaves in the level, predicted from weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// `||L|| > ||M|| + ||N||`: the constant is 0 at every level.
    Vanishes,
    /// `||L|| = ||M|| + ||N||`: the constant is level-independent.
    Constant,
    /// `||L|| < ||M|| + ||N||`: a genuine polynomial is expected.
    Polynomial,
}

/// Verdict, samples, and fit for one `(M, N, L)` triple.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub k: usize,
    pub m_key: String,
    pub n_key: String,
    pub l_key: String,
    pub weight_m: usize,
    pub weight_n: usize,
    pub weight_l: usize,
    pub verdict: Verdict,
    /// `(n, value)` at every level of the requested range where all
    /// three types are realizable.
    pub samples: Vec<(usize, u64)>,
    /// True when every orbit representative `g₁` moves only blocks
    /// inside the support of the product representative; this forces a
    /// level-independent constant.
    pub support_criterion: bool,
    pub fit: Option<FitResult>,
    pub ok: bool,
    pub detail: Option<String>,
}

/// Evaluates the support-inclusion criterion for level-independence at a
/// level where the orbit census has stabilized.
fn support_criterion(m: &ModifiedType, n_ty: &ModifiedType, l: &ModifiedType) -> Result<bool> {
    let v_l = l.vertex_count();
    let n_stab = (m.vertex_count() + v_l).max(n_ty.vertex_count()).max(1);
    let ctx = WreathContext::new(m.k(), n_stab)?;
    for summand in centralizer_orbit_summands(&ctx, m, n_ty, l)? {
        let support = ctx.h_support(&summand.g1)?;
        if support.block_indices().iter().any(|&b| b > v_l) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Classifies every triple of types with `||M||, ||N|| ≤ max_weight` and
/// `L` realizable in the range: vanishing above the weight bound,
/// constancy at equality, and a validated polynomial fit throughout.
/// Violations are returned as failing reports, never panics.
pub fn verify_stability(
    k: usize,
    max_weight: usize,
    n_range: RangeInclusive<usize>,
    engine: Engine,
) -> Result<Vec<StabilityReport>> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo < 1 || lo > hi {
        return Err(Error::Domain(format!("invalid level range {lo}..={hi}")));
    }
    let pair_types: Vec<ModifiedType> = enumerate_types_up_to_weight(k, max_weight)?
        .into_iter()
        .filter(|t| t.vertex_count() <= hi)
        .collect();
    let candidates = enumerate_modified_types(k, hi)?;

    let mut reports = Vec::new();
    for m in &pair_types {
        for n_ty in &pair_types {
            for l in &candidates {
                reports.push(assess_triple(m, n_ty, l, lo, hi, engine)?);
            }
        }
    }
    Ok(reports)
}

fn assess_triple(
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
    lo: usize,
    hi: usize,
    engine: Engine,
) -> Result<StabilityReport> {
    let k = m.k();
    let first = lo
        .max(m.vertex_count())
        .max(n_ty.vertex_count())
        .max(l.vertex_count())
        .max(1);
    let mut samples = Vec::new();
    for n in first..=hi {
        samples.push((n, sample_constant(k, m, n_ty, l, n, engine)?));
    }

    let top = m.weight() + n_ty.weight();
    let verdict = match l.weight() {
        w if w > top => Verdict::Vanishes,
        w if w == top => Verdict::Constant,
        _ => Verdict::Polynomial,
    };

    let mut ok = true;
    let mut detail = None;
    match verdict {
        Verdict::Vanishes => {
            if let Some(&(n, v)) = samples.iter().find(|&&(_, v)| v != 0) {
                ok = false;
                detail = Some(format!("expected 0 above the weight bound, got {v} at n = {n}"));
            }
        }
        Verdict::Constant => {
            if let Some(&(n, v)) = samples.iter().find(|&&(_, v)| v != samples[0].1) {
                ok = false;
                detail = Some(format!(
                    "expected a level-independent value, got {} at n = {} but {v} at n = {n}",
                    samples[0].1, samples[0].0
                ));
            }
        }
        Verdict::Polynomial => {}
    }

    let fit = match fit_structure_polynomial(m, n_ty, l, engine) {
        Ok(fit) => {
            if !fit.validated {
                ok = false;
                detail.get_or_insert_with(|| {
                    format!("fit failed held-out validation at {:?}", fit.mismatches)
                });
            }
            // The in-range samples must lie on the fitted polynomial too.
            for &(n, v) in &samples {
                if fit.polynomial.evaluate_at(n) != BigRational::from_integer(BigInt::from(v)) {
                    ok = false;
                    detail.get_or_insert_with(|| {
                        format!("fitted polynomial misses the sampled value at n = {n}")
                    });
                }
            }
            match verdict {
                Verdict::Vanishes if !fit.polynomial.is_zero() => {
                    ok = false;
                    detail.get_or_insert_with(|| "nonzero fit above the weight bound".to_string());
                }
                Verdict::Constant if !fit.polynomial.is_constant() => {
                    ok = false;
                    detail.get_or_insert_with(|| "non-constant fit at the weight bound".to_string());
                }
                _ => {}
            }
            Some(fit)
        }
        // An engine that cannot reach the held-out levels is a skipped
        // fit, not a failure; anything else is a real error.
        Err(Error::SizeLimit(msg)) => {
            detail.get_or_insert_with(|| format!("fit skipped: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };

    let support_criterion = support_criterion(m, n_ty, l)?;
    if support_criterion && samples.iter().any(|&(_, v)| v != samples[0].1) {
        ok = false;
        detail.get_or_insert_with(|| {
            "support criterion predicts a level-independent value, samples disagree".to_string()
        });
    }

    Ok(StabilityReport {
        k,
        m_key: m.key(),
        n_key: n_ty.key(),
        l_key: l.key(),
        weight_m: m.weight(),
        weight_n: n_ty.weight(),
        weight_l: l.weight(),
        verdict,
        samples,
        support_criterion,
        fit,
        ok,
        detail,
    })
}

/// A fixed-width text rendering of stability reports, one line per triple.
pub fn render_stability_table(reports: &[StabilityReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:<24} {:<28} {:<10} {:<6} {}\n",
        "M", "N", "L", "verdict", "ok", "polynomial"
    ));
    for r in reports {
        let polynomial = r
            .fit
            .as_ref()
            .map(|f| f.polynomial.monomial_string())
            .unwrap_or_else(|| "(not fitted)".to_string());
        out.push_str(&format!(
            "{:<24} {:<24} {:<28} {:<10} {:<6} {}\n",
            r.m_key,
            r.n_key,
            r.l_key,
            format!("{:?}", r.verdict).to_lowercase(),
            r.ok,
            polynomial
        ));
    }
    out
}
