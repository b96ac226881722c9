//! Permutations of `{1..d}` and the wreath-product subgroup `S_k ≀ S_n`.
//!
//! Points are 1-based everywhere, matching the usual one-line and cycle
//! notations.  A permutation is stored as its image table; composition is
//! right-to-left: `(g1 * g2)(x) = g1(g2(x))`.
//!
//! For a context `(k, n)` the ambient group is `S_{kn}`, partitioned into
//! blocks `Γ_i = {k(i-1)+1, .., ki}`.  The subgroup `H_n` consists of the
//! permutations mapping every block onto a block; it is generated by the
//! within-block symmetric groups and the block swaps [`WreathContext::tau`].

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Block index of a point: `⌈r/k⌉` for 1-based `r`.
pub fn gamma_part(r: usize, k: usize) -> Result<usize> {
    if r == 0 {
        return Err(Error::Domain("gamma_part: point must be ≥ 1".into()));
    }
    if k < 2 {
        return Err(Error::Domain(format!("gamma_part: block size k = {k} must be ≥ 2")));
    }
    Ok((r - 1) / k + 1)
}

/// A permutation of `{1..d}`, stored as its image table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    /// `images[i]` is the image of point `i + 1`; values are `1..=d`.
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Permutation { images: (1..=degree).collect() }
    }

    /// Builds a permutation from a 1-based image table, validating that it
    /// is a bijection of `{1..d}`.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &v in &images {
            if v == 0 || v > d {
                return Err(Error::Domain(format!(
                    "image {v} outside 1..={d} in permutation table"
                )));
            }
            if seen[v - 1] {
                return Err(Error::Domain(format!("image {v} repeated in permutation table")));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { images })
    }

    /// Builds a permutation of `{1..degree}` from disjoint cycles written in
    /// 1-based points.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (1..=degree).collect();
        let mut moved = vec![false; degree];
        for cycle in cycles {
            for w in 0..cycle.len() {
                let a = cycle[w];
                let b = cycle[(w + 1) % cycle.len()];
                if a == 0 || a > degree {
                    return Err(Error::Domain(format!("cycle point {a} outside 1..={degree}")));
                }
                if moved[a - 1] {
                    return Err(Error::Domain(format!("point {a} appears in two cycles")));
                }
                moved[a - 1] = true;
                images[a - 1] = b;
            }
        }
        Permutation::from_images(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of the 1-based point `r`.
    #[inline]
    pub fn apply(&self, r: usize) -> usize {
        self.images[r - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0usize; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            images[v - 1] = i + 1;
        }
        Permutation { images }
    }

    /// Right-to-left composition: `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        debug_assert_eq!(self.degree(), other.degree());
        let images = other.images.iter().map(|&v| self.images[v - 1]).collect();
        Permutation { images }
    }

    /// `h ∘ self ∘ h⁻¹`.
    pub fn conjugated_by(&self, h: &Permutation) -> Permutation {
        let h_inv = h.inverse();
        h.compose(&self.compose(&h_inv))
    }

    pub fn pow(&self, mut e: usize) -> Permutation {
        let mut acc = Permutation::identity(self.degree());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = base.compose(&acc);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// Moved points, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.images
            .iter()
            .enumerate()
            .filter(|&(i, &v)| v != i + 1)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Nontrivial cycles, each rotated to start at its least point, sorted by
    /// that point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let d = self.degree();
        let mut seen = vec![false; d];
        let mut out = Vec::new();
        for start in 1..=d {
            if seen[start - 1] || self.apply(start) == start {
                continue;
            }
            let mut cycle = vec![start];
            seen[start - 1] = true;
            let mut p = self.apply(start);
            while p != start {
                seen[p - 1] = true;
                cycle.push(p);
                p = self.apply(p);
            }
            out.push(cycle);
        }
        out
    }

    /// Reinterprets the permutation inside a larger symmetric group, fixing
    /// all new points.
    pub fn extended_to(&self, degree: usize) -> Result<Permutation> {
        if degree < self.degree() {
            return Err(Error::DegreeMismatch(format!(
                "cannot extend a degree-{} permutation to degree {degree}",
                self.degree()
            )));
        }
        let mut images = self.images.clone();
        images.extend(self.degree() + 1..=degree);
        Ok(Permutation { images })
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation; the identity prints as `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (i, p) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.images.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        Permutation::from_images(images).map_err(D::Error::custom)
    }
}

/// The pair `(k, n)`: blocks of size `k ≥ 2`, `n ≥ 1` of them, ambient group
/// `S_{kn}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WreathContext {
    k: usize,
    n: usize,
}

impl WreathContext {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("block size k = {k} must be ≥ 2")));
        }
        if n == 0 {
            return Err(Error::Domain("block count n must be ≥ 1".into()));
        }
        Ok(WreathContext { k, n })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k * self.n
    }

    /// `|H_n| = n! (k!)^n`.
    pub fn subgroup_order(&self) -> BigUint {
        let mut o = factorial_big(self.n);
        let kf = factorial_big(self.k);
        for _ in 0..self.n {
            o *= &kf;
        }
        o
    }

    /// Block index of a point (1-based both ways).
    pub fn part_of(&self, r: usize) -> Result<usize> {
        let p = gamma_part(r, self.k)?;
        if p > self.n {
            return Err(Error::Domain(format!(
                "point {r} outside 1..={} for (k, n) = ({}, {})",
                self.degree(),
                self.k,
                self.n
            )));
        }
        Ok(p)
    }

    /// The points of block `Γ_i`, ascending.
    pub fn block_points(&self, i: usize) -> Result<std::ops::RangeInclusive<usize>> {
        if i == 0 || i > self.n {
            return Err(Error::Domain(format!("block index {i} outside 1..={}", self.n)));
        }
        Ok(self.k * (i - 1) + 1..=self.k * i)
    }

    fn check_degree(&self, g: &Permutation) -> Result<()> {
        if g.degree() != self.degree() {
            return Err(Error::DegreeMismatch(format!(
                "permutation degree {} but context degree {}",
                g.degree(),
                self.degree()
            )));
        }
        Ok(())
    }

    /// The involution swapping blocks `Γ_i` and `Γ_j` position-by-position:
    /// the product of the `k` transpositions `(k(i-1)+r, k(j-1)+r)`.
    pub fn tau(&self, i: usize, j: usize) -> Result<Permutation> {
        if i == j {
            return Err(Error::Domain(format!("tau requires distinct blocks, got i = j = {i}")));
        }
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::Domain(format!(
                "tau block indices ({i}, {j}) outside 1..={}",
                self.n
            )));
        }
        let mut images: Vec<usize> = (1..=self.degree()).collect();
        for r in 1..=self.k {
            let a = self.k * (i - 1) + r;
            let b = self.k * (j - 1) + r;
            images[a - 1] = b;
            images[b - 1] = a;
        }
        Ok(Permutation { images })
    }

    /// Position-preserving embedding `S_n → S_{kn}` sending a block
    /// permutation `σ` to the map `k(i-1)+r ↦ k(σ(i)-1)+r`.  Its image is
    /// the subgroup generated by the `tau` involutions.
    pub fn embed_block_permutation(&self, sigma: &Permutation) -> Result<Permutation> {
        if sigma.degree() != self.n {
            return Err(Error::DegreeMismatch(format!(
                "block permutation degree {} but n = {}",
                sigma.degree(),
                self.n
            )));
        }
        let mut images = vec![0usize; self.degree()];
        for i in 1..=self.n {
            let ti = sigma.apply(i);
            for r in 1..=self.k {
                images[self.k * (i - 1) + r - 1] = self.k * (ti - 1) + r;
            }
        }
        Ok(Permutation { images })
    }

    /// Whether `g` maps every block onto a block, i.e. `g ∈ H_n`.
    pub fn is_wreath_member(&self, g: &Permutation) -> Result<bool> {
        self.check_degree(g)?;
        for i in 1..=self.n {
            let base = self.k * (i - 1);
            let first = (g.apply(base + 1) - 1) / self.k;
            for r in 2..=self.k {
                if (g.apply(base + r) - 1) / self.k != first {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The blocks `Γ_i` with `g(Γ_i)` not equal to any block, as indices,
    /// plus the union of their points.  Blocks mapped onto a block (even a
    /// different one) are excluded.
    pub fn h_support(&self, g: &Permutation) -> Result<HSupport> {
        self.check_degree(g)?;
        let mut block_indices = BTreeSet::new();
        for i in 1..=self.n {
            let base = self.k * (i - 1);
            let first = (g.apply(base + 1) - 1) / self.k;
            if (2..=self.k).any(|r| (g.apply(base + r) - 1) / self.k != first) {
                block_indices.insert(i);
            }
        }
        Ok(HSupport { k: self.k, block_indices })
    }

    /// Generators of `H_n`: adjacent within-block transpositions and
    /// adjacent block swaps.
    pub fn wreath_generators(&self) -> Vec<Permutation> {
        let mut gens = Vec::new();
        for i in 1..=self.n {
            for r in 1..self.k {
                let a = self.k * (i - 1) + r;
                let mut images: Vec<usize> = (1..=self.degree()).collect();
                images.swap(a - 1, a);
                gens.push(Permutation { images });
            }
        }
        for i in 1..self.n {
            gens.push(self.tau(i, i + 1).expect("adjacent blocks are distinct"));
        }
        gens
    }

    /// Streams every element of `H_n` exactly once, ordered
    /// lexicographically by (block permutation, within-block image tuples).
    /// Each element is the within-block part composed after the embedded
    /// block permutation.
    pub fn enumerate_wreath(&self) -> WreathIter {
        WreathIter::new(*self)
    }

    /// Reinterprets `g ∈ S_{kn}` inside `S_{k(n+extra)}`, fixing the new
    /// blocks pointwise.
    pub fn lift(&self, g: &Permutation, extra: usize) -> Result<(Permutation, WreathContext)> {
        self.check_degree(g)?;
        let target = WreathContext::new(self.k, self.n + extra)?;
        Ok((g.extended_to(target.degree())?, target))
    }
}

/// The blocks genuinely mixed by a permutation: every `Γ_i` whose image is
/// not a block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HSupport {
    k: usize,
    block_indices: BTreeSet<usize>,
}

impl HSupport {
    pub fn block_indices(&self) -> &BTreeSet<usize> {
        &self.block_indices
    }

    pub fn block_count(&self) -> usize {
        self.block_indices.len()
    }

    /// Union of the points of the supported blocks, ascending.
    pub fn points(&self) -> Vec<usize> {
        let mut pts = Vec::with_capacity(self.k * self.block_indices.len());
        for &i in &self.block_indices {
            pts.extend(self.k * (i - 1) + 1..=self.k * i);
        }
        pts
    }

    pub fn contains_block(&self, i: usize) -> bool {
        self.block_indices.contains(&i)
    }

    pub fn is_subset_of(&self, other: &HSupport) -> bool {
        self.block_indices.is_subset(&other.block_indices)
    }
}

/// Iterator over `H_n`; see [`WreathContext::enumerate_wreath`].
pub struct WreathIter {
    ctx: WreathContext,
    sigma: Option<Vec<usize>>,
    within: Vec<Vec<usize>>,
}

impl WreathIter {
    fn new(ctx: WreathContext) -> Self {
        WreathIter {
            ctx,
            sigma: Some((1..=ctx.n).collect()),
            within: vec![(1..=ctx.k).collect(); ctx.n],
        }
    }

    fn assemble(&self) -> Permutation {
        let (k, n) = (self.ctx.k, self.ctx.n);
        let sigma = self.sigma.as_ref().expect("assemble called on exhausted iterator");
        let mut images = vec![0usize; k * n];
        for i in 1..=n {
            let ti = sigma[i - 1];
            let y = &self.within[ti - 1];
            for r in 1..=k {
                images[k * (i - 1) + r - 1] = k * (ti - 1) + y[r - 1];
            }
        }
        Permutation { images }
    }

    fn advance(&mut self) {
        // Odometer over (within-block tuples, then block permutation), the
        // last block being the fastest digit.
        for slot in (0..self.ctx.n).rev() {
            if next_permutation(&mut self.within[slot]) {
                return;
            }
            self.within[slot] = (1..=self.ctx.k).collect();
        }
        let sigma = self.sigma.as_mut().expect("advance called on exhausted iterator");
        if !next_permutation(sigma) {
            self.sigma = None;
        }
    }
}

impl Iterator for WreathIter {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        self.sigma.as_ref()?;
        let out = self.assemble();
        self.advance();
        Some(out)
    }
}

/// In-place lexicographic successor; `false` when the input was the last
/// arrangement (it is then left reversed, i.e. sorted descending).
pub fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        a.reverse();
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

pub fn factorial(m: usize) -> u64 {
    (1..=m as u64).product()
}

pub fn factorial_big(m: usize) -> BigUint {
    let mut f = BigUint::from(1u32);
    for i in 2..=m as u64 {
        f *= i;
    }
    f
}

/// The permutation of `{1..degree}` at lexicographic `rank`
/// (0-based, factorial number system).
pub fn permutation_at_rank(degree: usize, mut rank: u64) -> Result<Permutation> {
    let total = factorial(degree);
    if rank >= total {
        return Err(Error::Domain(format!(
            "rank {rank} outside 0..{total} for degree {degree}"
        )));
    }
    let mut pool: Vec<usize> = (1..=degree).collect();
    let mut images = Vec::with_capacity(degree);
    for pos in 0..degree {
        let block = factorial(degree - pos - 1);
        let idx = (rank / block) as usize;
        rank %= block;
        images.push(pool.remove(idx));
    }
    Ok(Permutation { images })
}

/// Applies `f` to every permutation of `{1..degree}` with lexicographic rank
/// in `[start, end)`, in rank order.  The slice passed to `f` is the image
/// table; it must not be retained.
pub fn for_each_permutation_in_range<F: FnMut(&[usize])>(
    degree: usize,
    start: u64,
    end: u64,
    mut f: F,
) -> Result<()> {
    if start >= end {
        return Ok(());
    }
    let mut current = permutation_at_rank(degree, start)?.images;
    let mut remaining = end - start;
    loop {
        f(&current);
        remaining -= 1;
        if remaining == 0 {
            return Ok(());
        }
        if !next_permutation(&mut current) {
            return Err(Error::Domain(format!(
                "rank range {start}..{end} exceeds {degree}! permutations"
            )));
        }
    }
}
