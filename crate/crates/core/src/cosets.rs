//! Double cosets `H g H` of `S_{kn}` relative to the block subgroup `H_n`,
//! their distinguished representatives, sizes, and a catalogue keyed by
//! modified type.
//!
//! Every double coset contains *minimal* elements: those fixing pointwise
//! each block they map onto a block, and fixing every point whose image
//! stays in its own block.  Among minimal elements we further normalize to
//! *closed* ones, where each component of the interaction graph occupies
//! exactly its own blocks.  Both normal forms are reached by deterministic
//! sequences of left multiplications by subgroup elements, so the results
//! stay in the coset by construction and carry a certificate.

use std::collections::BTreeMap;
use std::io::{BufRead, Write as _};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::perm::{factorial, factorial_big, for_each_permutation_in_range, Permutation, WreathContext};
use crate::type_graph::{labelled_components, modified_type, representative_of_type, enumerate_modified_types, ModifiedType};

/// Largest subgroup order we are willing to sweep element by element.
const SUBGROUP_SCAN_LIMIT: u64 = 40_000_000;

/// Whether `g` fixes pointwise every block it maps onto a block, and fixes
/// every point whose image stays in its own block.
pub fn is_minimal(ctx: &WreathContext, g: &Permutation) -> Result<bool> {
    let (k, d) = (ctx.k(), ctx.degree());
    if g.degree() != d {
        return Err(Error::DegreeMismatch(format!(
            "permutation degree {} but context degree {d}",
            g.degree()
        )));
    }
    for i in 1..=ctx.n() {
        if block_image(ctx, g, i).is_some() {
            for s in ctx.block_points(i)? {
                if g.apply(s) != s {
                    return Ok(false);
                }
            }
        }
    }
    for s in 1..=d {
        let t = g.apply(s);
        if t != s && (t - 1) / k == (s - 1) / k {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Some(j)` when `g(Γ_i) = Γ_j`.
fn block_image(ctx: &WreathContext, g: &Permutation, i: usize) -> Option<usize> {
    let k = ctx.k();
    let base = k * (i - 1);
    let j = (g.apply(base + 1) - 1) / k;
    for r in 2..=k {
        if (g.apply(base + r) - 1) / k != j {
            return None;
        }
    }
    Some(j + 1)
}

/// A normalized element together with the subgroup element producing it:
/// `minimal = left · g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalForm {
    pub minimal: Permutation,
    pub left: Permutation,
}

/// The deterministic minimal element reached from `g` by left
/// multiplications: first every block mapped onto a block is pinned to the
/// identity (in increasing block order, swapping the target block home and
/// undoing the within-block twist), then in-block point violations are
/// repaired smallest first.
pub fn minimal_representative(ctx: &WreathContext, g: &Permutation) -> Result<MinimalForm> {
    let d = ctx.degree();
    if g.degree() != d {
        return Err(Error::DegreeMismatch(format!(
            "permutation degree {} but context degree {d}",
            g.degree()
        )));
    }
    let mut current = g.clone();
    let mut left = Permutation::identity(d);
    for i in 1..=ctx.n() {
        let Some(j) = block_image(ctx, &current, i) else { continue };
        if j != i {
            let t = ctx.tau(i, j)?;
            current = t.compose(&current);
            left = t.compose(&left);
        }
        let mut h_images: Vec<usize> = (1..=d).collect();
        for s in ctx.block_points(i)? {
            h_images[s - 1] = current.apply(s);
        }
        let h = Permutation::from_images(h_images)?;
        if !h.is_identity() {
            let h_inv = h.inverse();
            current = h_inv.compose(&current);
            left = h_inv.compose(&left);
        }
    }
    current = repair_points(ctx, current, &mut left);
    debug_assert!(is_minimal(ctx, &current)?);
    debug_assert!(ctx.is_wreath_member(&left)?);
    debug_assert_eq!(left.compose(g), current);
    Ok(MinimalForm { minimal: current, left })
}

/// Left-multiplies by in-block transpositions until no point maps to a
/// different point of its own block.
fn repair_points(ctx: &WreathContext, mut current: Permutation, left: &mut Permutation) -> Permutation {
    let (k, d) = (ctx.k(), ctx.degree());
    loop {
        let mut violation = None;
        for s in 1..=d {
            let t = current.apply(s);
            if t != s && (t - 1) / k == (s - 1) / k {
                violation = Some((s, t));
                break;
            }
        }
        let Some((s, t)) = violation else { return current };
        let mut images: Vec<usize> = (1..=d).collect();
        images.swap(s - 1, t - 1);
        let tr = Permutation::from_images(images).expect("transposition is a bijection");
        current = tr.compose(&current);
        *left = tr.compose(left);
    }
}

/// Whether each interaction-graph component occupies exactly its own
/// blocks: `g(J_C) = J_C` for the points `J_C` of every component `C`, and
/// every block mapped onto a block maps onto itself.
pub fn is_closed(ctx: &WreathContext, g: &Permutation) -> Result<bool> {
    let lc = labelled_components(ctx, g)?;
    if lc.isolated_pairs.iter().any(|&(v, j)| v != j) {
        return Ok(false);
    }
    Ok(lc.components.iter().all(|c| c.values == c.positions))
}

/// Sends a minimal element to its closed form: the block permutation moving
/// each component's image blocks home (order-preservingly) is applied on the
/// left, then in-block points are repaired.  Errors unless `g` is minimal.
pub fn closed_components_form(ctx: &WreathContext, g: &Permutation) -> Result<Permutation> {
    Ok(closed_components_form_with_left(ctx, g)?.minimal)
}

fn closed_components_form_with_left(ctx: &WreathContext, g: &Permutation) -> Result<MinimalForm> {
    if !is_minimal(ctx, g)? {
        return Err(Error::Domain(
            "closed_components_form requires a minimal element; normalize first".into(),
        ));
    }
    let lc = labelled_components(ctx, g)?;
    let mut sigma_images = vec![0usize; ctx.n()];
    for &(value, position) in &lc.isolated_pairs {
        sigma_images[position - 1] = value;
    }
    for c in &lc.components {
        for (&position, &value) in c.positions.iter().zip(&c.values) {
            sigma_images[position - 1] = value;
        }
    }
    let sigma = Permutation::from_images(sigma_images)?;
    let embedded = ctx.embed_block_permutation(&sigma)?;
    let mut left = embedded.clone();
    let current = repair_points(ctx, embedded.compose(g), &mut left);
    debug_assert!(is_minimal(ctx, &current)?);
    debug_assert!(is_closed(ctx, &current)?);
    Ok(MinimalForm { minimal: current, left })
}

/// Full normalization: minimal, then closed.  `left` certifies membership
/// in the double coset of `g`.
pub fn minimal_closed_representative(ctx: &WreathContext, g: &Permutation) -> Result<MinimalForm> {
    let first = minimal_representative(ctx, g)?;
    let second = closed_components_form_with_left(ctx, &first.minimal)?;
    Ok(MinimalForm { minimal: second.minimal, left: second.left.compose(&first.left) })
}

/// `|H g H| = |H|² / |H ∩ g⁻¹ H g|`, computed by sweeping the subgroup.
pub fn coset_size(ctx: &WreathContext, g: &Permutation) -> Result<BigUint> {
    if g.degree() != ctx.degree() {
        return Err(Error::DegreeMismatch(format!(
            "permutation degree {} but context degree {}",
            g.degree(),
            ctx.degree()
        )));
    }
    let order = ctx.subgroup_order();
    match order.to_u64() {
        Some(o) if o <= SUBGROUP_SCAN_LIMIT => {}
        _ => {
            return Err(Error::SizeLimit(format!(
                "subgroup order {order} exceeds the element sweep limit {SUBGROUP_SCAN_LIMIT}"
            )))
        }
    }
    let g_inv = g.inverse();
    let (k, n) = (ctx.k(), ctx.n());
    let mut intersection = 0u64;
    for h in ctx.enumerate_wreath() {
        // g h g⁻¹ ∈ H, checked blockwise without materializing the product.
        let mut member = true;
        'blocks: for i in 0..n {
            let base = k * i;
            let part = (g.apply(h.apply(g_inv.apply(base + 1))) - 1) / k;
            for r in 2..=k {
                if (g.apply(h.apply(g_inv.apply(base + r))) - 1) / k != part {
                    member = false;
                    break 'blocks;
                }
            }
        }
        if member {
            intersection += 1;
        }
    }
    let total = &order * &order;
    let (size, rem) = num_integer::div_rem(total, BigUint::from(intersection));
    if rem != BigUint::from(0u32) {
        return Err(Error::InternalConsistency(format!(
            "|H|² not divisible by intersection size {intersection}"
        )));
    }
    Ok(size)
}

/// Small-scale closure of `H g H` by repeated multiplication with subgroup
/// generators; refuses degrees whose full orbit could not fit in memory.
pub fn double_coset_closure(
    ctx: &WreathContext,
    g: &Permutation,
) -> Result<std::collections::BTreeSet<Permutation>> {
    if ctx.degree() > 8 {
        return Err(Error::SizeLimit(format!(
            "double coset closure by search is limited to degree ≤ 8, got {}",
            ctx.degree()
        )));
    }
    let gens = ctx.wreath_generators();
    let mut seen = std::collections::BTreeSet::new();
    let mut frontier = vec![g.clone()];
    seen.insert(g.clone());
    while let Some(x) = frontier.pop() {
        for gen in &gens {
            for next in [gen.compose(&x), x.compose(gen)] {
                if !seen.contains(&next) {
                    seen.insert(next.clone());
                    frontier.push(next);
                }
            }
        }
    }
    Ok(seen)
}

/// How much of `S_{kn}` a [`DoubleCosetTable`] materializes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableMode {
    /// Member lists per double coset; degree ≤ 8.
    Full,
    /// Sizes and representatives only; degree ≤ 10.
    Compact,
}

const FULL_DEGREE_LIMIT: usize = 8;
const COMPACT_DEGREE_LIMIT: usize = 10;

#[derive(Clone, Debug)]
pub struct TableEntry {
    pub ty: ModifiedType,
    pub size: BigUint,
    pub representative: Permutation,
}

/// The catalogue of double cosets of `S_{kn}` relative to `H_n`: one entry
/// per realizable modified type, with exact sizes obtained by sweeping the
/// ambient group, and the canonical representative of each type.
pub struct DoubleCosetTable {
    ctx: WreathContext,
    mode: TableMode,
    entries: Vec<TableEntry>,
    members: Option<BTreeMap<ModifiedType, Vec<Permutation>>>,
}

impl DoubleCosetTable {
    pub fn build(ctx: &WreathContext, mode: TableMode) -> Result<Self> {
        Self::build_inner(ctx, mode, false)
    }

    /// Identical to [`DoubleCosetTable::build`] but never fans out to worker
    /// threads; used to benchmark the parallel sweep against a baseline.
    pub fn build_sequential(ctx: &WreathContext, mode: TableMode) -> Result<Self> {
        Self::build_inner(ctx, mode, true)
    }

    fn build_inner(ctx: &WreathContext, mode: TableMode, force_sequential: bool) -> Result<Self> {
        let d = ctx.degree();
        let limit = match mode {
            TableMode::Full => FULL_DEGREE_LIMIT,
            TableMode::Compact => COMPACT_DEGREE_LIMIT,
        };
        if d > limit {
            return Err(Error::SizeLimit(format!(
                "degree {d} exceeds the {mode:?} table limit {limit}"
            )));
        }
        type Partial = (BTreeMap<ModifiedType, u64>, Vec<(ModifiedType, Permutation)>);
        let total = factorial(d);
        let ranges = exec::split_ranges(total, exec::default_chunks());
        let keep_members = mode == TableMode::Full;
        let partials: Vec<Result<Partial>> =
            exec::map_ranges(&ranges, force_sequential, |a, b| {
                let mut counts: BTreeMap<ModifiedType, u64> = BTreeMap::new();
                let mut members = Vec::new();
                let mut first_err = None;
                for_each_permutation_in_range(d, a, b, |im| {
                    if first_err.is_some() {
                        return;
                    }
                    let g = match Permutation::from_images(im.to_vec()) {
                        Ok(g) => g,
                        Err(e) => {
                            first_err = Some(e);
                            return;
                        }
                    };
                    match modified_type(ctx, &g) {
                        Ok(ty) => {
                            *counts.entry(ty.clone()).or_insert(0) += 1;
                            if keep_members {
                                members.push((ty, g));
                            }
                        }
                        Err(e) => first_err = Some(e),
                    }
                })?;
                match first_err {
                    Some(e) => Err(e),
                    None => Ok((counts, members)),
                }
            });
        let mut counts: BTreeMap<ModifiedType, u64> = BTreeMap::new();
        let mut members: BTreeMap<ModifiedType, Vec<Permutation>> = BTreeMap::new();
        for partial in partials {
            let (c, m) = partial?;
            for (ty, count) in c {
                *counts.entry(ty).or_insert(0) += count;
            }
            for (ty, g) in m {
                members.entry(ty).or_default().push(g);
            }
        }
        let entries = Self::entries_from_counts(ctx, &counts)?;
        Ok(DoubleCosetTable {
            ctx: *ctx,
            mode,
            entries,
            members: keep_members.then_some(members),
        })
    }

    fn entries_from_counts(
        ctx: &WreathContext,
        counts: &BTreeMap<ModifiedType, u64>,
    ) -> Result<Vec<TableEntry>> {
        let realizable: Vec<ModifiedType> = enumerate_modified_types(ctx.k(), ctx.n())?;
        if realizable.len() != counts.len() || realizable.iter().any(|t| !counts.contains_key(t)) {
            return Err(Error::InternalConsistency(format!(
                "swept {} coset types but {} are realizable at n = {}",
                counts.len(),
                realizable.len(),
                ctx.n()
            )));
        }
        let mut sum = BigUint::from(0u32);
        let mut entries = Vec::with_capacity(counts.len());
        for (ty, &count) in counts {
            sum += count;
            let (rep, _) = representative_of_type(ty, ctx.n())?;
            entries.push(TableEntry { ty: ty.clone(), size: BigUint::from(count), representative: rep });
        }
        if sum != factorial_big(ctx.degree()) {
            return Err(Error::InternalConsistency(format!(
                "coset sizes sum to {sum}, expected {}!",
                ctx.degree()
            )));
        }
        Ok(entries)
    }

    pub fn context(&self) -> &WreathContext {
        &self.ctx
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    /// Entries ordered by type key.
    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn entry(&self, ty: &ModifiedType) -> Option<&TableEntry> {
        self.entries.iter().find(|e| &e.ty == ty)
    }

    /// Member lists; present only in [`TableMode::Full`].
    pub fn members(&self, ty: &ModifiedType) -> Option<&[Permutation]> {
        self.members.as_ref()?.get(ty).map(|v| v.as_slice())
    }

    fn cache_path(ctx: &WreathContext, dir: &Path) -> PathBuf {
        dir.join(format!(
            "cosets-k{}-n{}-s{}.jsonl",
            ctx.k(),
            ctx.n(),
            crate::SCHEMA_VERSION
        ))
    }

    /// Serializes sizes and representatives, one JSON object per line, with
    /// a header line first.  Output bytes are deterministic.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = Self::cache_path(&self.ctx, dir);
        let mut out = Vec::new();
        let header = CacheHeader {
            schema: crate::SCHEMA_VERSION,
            k: self.ctx.k(),
            n: self.ctx.n(),
            cosets: self.entries.len(),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for e in &self.entries {
            let line = CacheLine {
                ty: e.ty.key(),
                size: e.size.to_string(),
                rep: e.representative.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
        std::fs::write(&path, out)?;
        Ok(path)
    }

    /// Loads a cached table (always [`TableMode::Compact`]: member lists are
    /// never cached).
    pub fn load(ctx: &WreathContext, dir: &Path) -> Result<Self> {
        let path = Self::cache_path(ctx, dir);
        let file = std::fs::File::open(&path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header: CacheHeader = serde_json::from_str(
            &lines
                .next()
                .ok_or_else(|| Error::Domain(format!("{}: empty cache file", path.display())))??,
        )?;
        if header.schema != crate::SCHEMA_VERSION || header.k != ctx.k() || header.n != ctx.n() {
            return Err(Error::Domain(format!(
                "{}: cache header does not match (k, n, schema)",
                path.display()
            )));
        }
        let mut entries = Vec::with_capacity(header.cosets);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CacheLine = serde_json::from_str(&line)?;
            let ty = ModifiedType::parse_key(ctx.k(), &parsed.ty)?;
            let size = parsed
                .size
                .parse::<BigUint>()
                .map_err(|e| Error::Domain(format!("bad size in cache: {e}")))?;
            entries.push(TableEntry { ty, size, representative: parsed.rep });
        }
        if entries.len() != header.cosets {
            return Err(Error::Domain(format!(
                "{}: header promises {} cosets, found {}",
                path.display(),
                header.cosets,
                entries.len()
            )));
        }
        entries.sort_by(|a, b| a.ty.cmp(&b.ty));
        Ok(DoubleCosetTable { ctx: *ctx, mode: TableMode::Compact, entries, members: None })
    }

    /// Uses the cache when valid, otherwise builds and writes it.  Requests
    /// for [`TableMode::Full`] always run the sweep (member lists are cheap
    /// at full-mode degrees and never cached).
    pub fn load_or_build(ctx: &WreathContext, mode: TableMode, cache_dir: &Path) -> Result<Self> {
        if mode == TableMode::Compact {
            if let Ok(table) = Self::load(ctx, cache_dir) {
                return Ok(table);
            }
        }
        let table = Self::build(ctx, mode)?;
        table.save(cache_dir)?;
        Ok(table)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    schema: u32,
    k: usize,
    n: usize,
    cosets: usize,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    ty: String,
    size: String,
    rep: Permutation,
}
