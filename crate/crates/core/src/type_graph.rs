//! Block-interaction types of double cosets.
//!
//! For `g ∈ S_{kn}` and each block `Γ_u`, record which blocks feed into
//! `Γ_u`: the multiset `{part_of(g⁻¹(r)) : r ∈ Γ_u}`.  The list of these
//! multisets, up to independent relabelling of positions and of values, is a
//! complete invariant of the double coset `H g H`.
//!
//! A block mapped exactly onto a block contributes a constant multiset;
//! dropping those (and the values that only they contain) leaves the
//! *modified type*: `v` non-constant multisets over `v` values, every value
//! appearing exactly `k` times.  Viewing values as vertices and co-occurrence
//! inside a multiset as adjacency gives a multigraph whose component
//! structure drives everything downstream: the weight `‖M‖ = v - #components`
//! is the grading degree of the double-coset algebra.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::perm::{Permutation, WreathContext};

/// Plain union-find over `0..n`.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    /// Members of each class, classes ordered by least member.
    pub(crate) fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
        out.sort_by_key(|c| c[0]);
        out
    }
}

/// The per-block source multisets of `g`: entry `u - 1` is the sorted
/// multiset `{part_of(g⁻¹(r)) : r ∈ Γ_u}`.
pub fn raw_coset_type(ctx: &WreathContext, g: &Permutation) -> Result<Vec<Vec<usize>>> {
    if g.degree() != ctx.degree() {
        return Err(Error::DegreeMismatch(format!(
            "permutation degree {} but context degree {}",
            g.degree(),
            ctx.degree()
        )));
    }
    let g_inv = g.inverse();
    let mut blocks = Vec::with_capacity(ctx.n());
    for u in 1..=ctx.n() {
        let mut b: Vec<usize> = ctx
            .block_points(u)?
            .map(|r| (g_inv.apply(r) - 1) / ctx.k() + 1)
            .collect();
        b.sort_unstable();
        blocks.push(b);
    }
    Ok(blocks)
}

/// Canonical modified type: `vertex_count` sorted multisets (blocks) over the
/// values `1..=vertex_count`, none constant, each value appearing exactly `k`
/// times, blocks sorted, and the value labelling chosen lexicographically
/// least among all relabellings.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ModifiedType {
    k: usize,
    blocks: Vec<Vec<usize>>,
}

impl ModifiedType {
    /// The type with no blocks (the class of the subgroup itself).
    pub fn empty(k: usize) -> Self {
        ModifiedType { k, blocks: Vec::new() }
    }

    /// Canonicalizes an arbitrary list of source multisets: constant blocks
    /// are dropped, values are compacted and relabelled canonically.  Values
    /// may be arbitrary labels; each must occur either `k` times or, for a
    /// value occurring only in constant blocks, exactly in one constant
    /// block.
    pub fn from_raw_blocks(k: usize, raw: &[Vec<usize>]) -> Result<ModifiedType> {
        if k < 2 {
            return Err(Error::Domain(format!("block size k = {k} must be ≥ 2")));
        }
        let mut kept: Vec<Vec<usize>> = Vec::new();
        for b in raw {
            if b.len() != k {
                return Err(Error::Domain(format!(
                    "source multiset {b:?} has {} entries, expected {k}",
                    b.len()
                )));
            }
            let mut b = b.clone();
            b.sort_unstable();
            if b[0] != b[k - 1] {
                kept.push(b);
            }
        }
        // Compact the surviving values order-preservingly; this normalized
        // form is the memo key.
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        for b in &kept {
            for &v in b {
                let next = relabel.len() + 1;
                relabel.entry(v).or_insert(next);
            }
        }
        let mut compacted: Vec<Vec<usize>> = kept
            .iter()
            .map(|b| {
                let mut c: Vec<usize> = b.iter().map(|v| relabel[v]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        compacted.sort();
        let v = relabel.len();
        if compacted.len() != v {
            return Err(Error::Domain(format!(
                "{} non-constant source multisets over {v} values; counts must agree",
                compacted.len()
            )));
        }
        let mut occurrences = vec![0usize; v];
        for b in &compacted {
            for &x in b {
                occurrences[x - 1] += 1;
            }
        }
        if occurrences.iter().any(|&c| c != k) {
            return Err(Error::Domain(format!(
                "value occurrence counts {occurrences:?} differ from k = {k}"
            )));
        }

        let memo = canon_memo();
        let memo_key = serialize_blocks(&compacted);
        if let Some(hit) = memo.read().expect("type memo poisoned").get(&(k, memo_key.clone())) {
            return Ok(hit.clone());
        }
        let blocks = canonical_labelling(v, &compacted);
        let ty = ModifiedType { k, blocks };
        memo.write().expect("type memo poisoned").insert((k, memo_key), ty.clone());
        Ok(ty)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of values (= number of blocks).
    pub fn vertex_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Connected components of the co-occurrence multigraph, each listed as
    /// ascending values, ordered by least value.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let v = self.vertex_count();
        let mut uf = UnionFind::new(v);
        for b in &self.blocks {
            for w in b.windows(2) {
                uf.union(w[0] - 1, w[1] - 1);
            }
        }
        uf.classes()
            .into_iter()
            .map(|c| c.into_iter().map(|x| x + 1).collect())
            .collect()
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    /// Component sizes, descending: the partition attached to the type.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.components().iter().map(|c| c.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// `vertex_count - component_count`, the grading degree.
    pub fn weight(&self) -> usize {
        self.vertex_count() - self.component_count()
    }

    /// Whether a representative exists in `S_{kn}`.
    pub fn is_realizable(&self, n: usize) -> bool {
        self.vertex_count() <= n
    }

    /// Stable text form, e.g. `v3:1.2|1.3|2.3`; safe inside CSV fields.
    pub fn key(&self) -> String {
        format!("v{}:{}", self.vertex_count(), serialize_blocks(&self.blocks))
    }

    /// Parses the [`ModifiedType::key`] form (re-canonicalizing, so any
    /// relabelling of a valid type is accepted).
    pub fn parse_key(k: usize, s: &str) -> Result<ModifiedType> {
        let rest = s
            .strip_prefix('v')
            .ok_or_else(|| Error::Domain(format!("type key {s:?} must start with 'v'")))?;
        let (count, body) = rest
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("type key {s:?} missing ':'")))?;
        let count: usize = count
            .parse()
            .map_err(|_| Error::Domain(format!("bad vertex count in type key {s:?}")))?;
        let mut blocks = Vec::new();
        if !body.is_empty() {
            for part in body.split('|') {
                let block: Vec<usize> = part
                    .split('.')
                    .map(|x| {
                        x.parse::<usize>()
                            .map_err(|_| Error::Domain(format!("bad value {x:?} in type key {s:?}")))
                    })
                    .collect::<Result<_>>()?;
                blocks.push(block);
            }
        }
        let ty = ModifiedType::from_raw_blocks(k, &blocks)?;
        if ty.vertex_count() != count {
            return Err(Error::Domain(format!(
                "type key {s:?} declares {count} vertices but has {}",
                ty.vertex_count()
            )));
        }
        Ok(ty)
    }
}

impl PartialOrd for ModifiedType {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModifiedType {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.k, self.blocks.len(), &self.blocks).cmp(&(other.k, other.blocks.len(), &other.blocks))
    }
}

impl fmt::Display for ModifiedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl fmt::Debug for ModifiedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModifiedType(k={}, {})", self.k, self.key())
    }
}

impl<'de> Deserialize<'de> for ModifiedType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            k: usize,
            blocks: Vec<Vec<usize>>,
        }
        let repr = Repr::deserialize(d)?;
        ModifiedType::from_raw_blocks(repr.k, &repr.blocks).map_err(serde::de::Error::custom)
    }
}

fn serialize_blocks(blocks: &[Vec<usize>]) -> String {
    blocks
        .iter()
        .map(|b| b.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("."))
        .collect::<Vec<_>>()
        .join("|")
}

fn canon_memo() -> &'static RwLock<HashMap<(usize, String), ModifiedType>> {
    static MEMO: OnceLock<RwLock<HashMap<(usize, String), ModifiedType>>> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Finds the relabelling of values `1..=v` minimizing the sorted block list,
/// lexicographically.  Values are first split by iterated neighbourhood
/// signatures (colour refinement); only the orders compatible with the
/// refined cells are tried exhaustively.
fn canonical_labelling(v: usize, blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    if v == 0 {
        return Vec::new();
    }
    // colour[x] for value x+1.
    let mut colour = vec![0usize; v];
    loop {
        // Signature: own colour plus the multiset of blocks seen as
        // multisets of colours (with own-slot multiplicity kept).
        let mut sigs: Vec<(usize, Vec<Vec<usize>>)> = (0..v).map(|x| (colour[x], Vec::new())).collect();
        for b in blocks {
            let cols: Vec<usize> = b.iter().map(|&x| colour[x - 1]).collect();
            for &x in b {
                let mut c = cols.clone();
                c.sort_unstable();
                sigs[x - 1].1.push(c);
            }
        }
        for s in &mut sigs {
            s.1.sort();
        }
        let mut distinct: Vec<&(usize, Vec<Vec<usize>>)> = sigs.iter().collect();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = sigs
            .iter()
            .map(|s| distinct.binary_search(&s).expect("own signature present"))
            .collect();
        if next == colour {
            break;
        }
        colour = next;
    }

    // Cells ordered by colour; relabellings must label cell by cell.
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (x, &c) in colour.iter().enumerate() {
        cells.entry(c).or_default().push(x + 1);
    }
    let cells: Vec<Vec<usize>> = cells.into_values().collect();

    let mut best: Option<Vec<Vec<usize>>> = None;
    let mut relabel = vec![0usize; v + 1];
    try_labellings(&cells, 0, 1, &mut relabel, blocks, &mut best);
    best.expect("at least one labelling exists")
}

fn try_labellings(
    cells: &[Vec<usize>],
    cell_idx: usize,
    next_label: usize,
    relabel: &mut Vec<usize>,
    blocks: &[Vec<usize>],
    best: &mut Option<Vec<Vec<usize>>>,
) {
    if cell_idx == cells.len() {
        let mut out: Vec<Vec<usize>> = blocks
            .iter()
            .map(|b| {
                let mut c: Vec<usize> = b.iter().map(|&x| relabel[x]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        out.sort();
        if best.as_ref().is_none_or(|b| out < *b) {
            *best = Some(out);
        }
        return;
    }
    let cell = &cells[cell_idx];
    let mut order: Vec<usize> = cell.clone();
    // Heap-style enumeration of all orders of this cell.
    permute_all(&mut order, 0, &mut |arrangement| {
        for (offset, &x) in arrangement.iter().enumerate() {
            relabel[x] = next_label + offset;
        }
        try_labellings(cells, cell_idx + 1, next_label + cell.len(), relabel, blocks, best);
    });
}

fn permute_all<F: FnMut(&[usize])>(a: &mut Vec<usize>, start: usize, f: &mut F) {
    if start == a.len() {
        f(a);
        return;
    }
    for i in start..a.len() {
        a.swap(start, i);
        permute_all(a, start + 1, f);
        a.swap(start, i);
    }
}

/// The modified type of the double coset `H g H`.
pub fn modified_type(ctx: &WreathContext, g: &Permutation) -> Result<ModifiedType> {
    let raw = raw_coset_type(ctx, g)?;
    ModifiedType::from_raw_blocks(ctx.k(), &raw)
}

/// The components of `g`'s interaction graph kept in the ambient labelling:
/// `values` are the graph vertices of one component, `positions` the blocks
/// whose source multisets draw from those values.  The two lists always have
/// equal length.  `isolated_pairs` lists `(value i, position j)` for blocks
/// with `g(Γ_i) = Γ_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledComponents {
    pub components: Vec<ComponentCluster>,
    pub isolated_pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentCluster {
    /// Ascending graph vertices (source block indices) of the component.
    pub values: Vec<usize>,
    /// Ascending target block indices drawing from these values.
    pub positions: Vec<usize>,
}

pub fn labelled_components(ctx: &WreathContext, g: &Permutation) -> Result<LabelledComponents> {
    let raw = raw_coset_type(ctx, g)?;
    let n = ctx.n();
    let mut uf = UnionFind::new(n);
    let mut isolated_pairs = Vec::new();
    let mut constant = vec![false; n + 1];
    for (idx, b) in raw.iter().enumerate() {
        if b[0] == b[ctx.k() - 1] {
            isolated_pairs.push((b[0], idx + 1));
            constant[idx + 1] = true;
        } else {
            for w in b.windows(2) {
                uf.union(w[0] - 1, w[1] - 1);
            }
        }
    }
    isolated_pairs.sort_unstable();
    let isolated: std::collections::BTreeSet<usize> =
        isolated_pairs.iter().map(|&(v, _)| v).collect();
    let mut clusters: BTreeMap<usize, ComponentCluster> = BTreeMap::new();
    for value in 1..=n {
        if isolated.contains(&value) {
            continue;
        }
        let root = uf.find(value - 1);
        clusters.entry(root).or_insert_with(|| ComponentCluster {
            values: Vec::new(),
            positions: Vec::new(),
        });
    }
    for value in 1..=n {
        if !isolated.contains(&value) {
            let root = uf.find(value - 1);
            clusters.get_mut(&root).expect("cluster created above").values.push(value);
        }
    }
    for (idx, b) in raw.iter().enumerate() {
        if !constant[idx + 1] {
            let root = uf.find(b[0] - 1);
            clusters.get_mut(&root).expect("values of this block are clustered").positions.push(idx + 1);
        }
    }
    let mut components: Vec<ComponentCluster> = clusters.into_values().collect();
    components.sort_by_key(|c| c.values[0]);
    for c in &components {
        debug_assert_eq!(c.values.len(), c.positions.len());
    }
    Ok(LabelledComponents { components, isolated_pairs })
}

/// All modified types with at most `max_vertices` values, ordered by
/// (vertex count, key).  The empty type is included.
pub fn enumerate_modified_types(k: usize, max_vertices: usize) -> Result<Vec<ModifiedType>> {
    if k < 2 {
        return Err(Error::Domain(format!("block size k = {k} must be ≥ 2")));
    }
    let mut out = vec![ModifiedType::empty(k)];
    for v in 2..=max_vertices {
        let mut seen = std::collections::BTreeSet::new();
        let mut remaining = vec![k; v];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        assemble_types(k, v, &mut remaining, &mut blocks, &mut seen);
        out.extend(seen);
    }
    out.sort();
    Ok(out)
}

/// All types of weight at most `max_weight`.  Every component of a modified
/// type has at least two values, so `v ≤ 2 · weight` bounds the search.
pub fn enumerate_types_up_to_weight(k: usize, max_weight: usize) -> Result<Vec<ModifiedType>> {
    let all = enumerate_modified_types(k, 2 * max_weight)?;
    Ok(all.into_iter().filter(|t| t.weight() <= max_weight).collect())
}

/// Backtracking over sorted block lists: blocks are chosen non-decreasing,
/// each consuming from per-value remaining occurrence counts.
fn assemble_types(
    k: usize,
    v: usize,
    remaining: &mut Vec<usize>,
    blocks: &mut Vec<Vec<usize>>,
    seen: &mut std::collections::BTreeSet<ModifiedType>,
) {
    if blocks.len() == v {
        if remaining.iter().all(|&r| r == 0) {
            if let Ok(ty) = ModifiedType::from_raw_blocks(k, blocks) {
                if ty.vertex_count() == v {
                    seen.insert(ty);
                }
            }
        }
        return;
    }
    let floor = blocks.last().cloned();
    let mut block = Vec::with_capacity(k);
    extend_block(k, v, remaining, &mut block, &floor, blocks, seen);
}

fn extend_block(
    k: usize,
    v: usize,
    remaining: &mut Vec<usize>,
    block: &mut Vec<usize>,
    floor: &Option<Vec<usize>>,
    blocks: &mut Vec<Vec<usize>>,
    seen: &mut std::collections::BTreeSet<ModifiedType>,
) {
    if block.len() == k {
        if block[0] == block[k - 1] {
            return; // constant block
        }
        if let Some(f) = floor {
            if block.as_slice() < f.as_slice() {
                return; // keep the block list sorted
            }
        }
        blocks.push(block.clone());
        assemble_types(k, v, remaining, blocks, seen);
        blocks.pop();
        return;
    }
    let min = block.last().copied().unwrap_or(1);
    for val in min..=v {
        if remaining[val - 1] == 0 {
            continue;
        }
        remaining[val - 1] -= 1;
        block.push(val);
        extend_block(k, v, remaining, block, floor, blocks, seen);
        block.pop();
        remaining[val - 1] += 1;
    }
}

/// A canonical coset representative of the type inside `S_{kn}`: value `i`
/// is realized on block `Γ_i` for `i ≤ vertex_count`, the remaining blocks
/// are fixed pointwise.  The output is the distinguished element of its
/// double coset (see [`crate::cosets::is_minimal`] and
/// [`crate::cosets::closed_components_form`]).
pub fn representative_of_type(ty: &ModifiedType, n: usize) -> Result<(Permutation, WreathContext)> {
    let v = ty.vertex_count();
    if v > n {
        return Err(Error::Unrealizable { type_key: ty.key(), n, needed: v });
    }
    let ctx = WreathContext::new(ty.k(), n)?;
    let k = ty.k();
    let degree = ctx.degree();
    // images[s - 1] = g(s); slot r gets source s means g(s) = r.
    let mut images = vec![0usize; degree];
    // Next unconsumed source point of each value's block.
    let mut next_source: Vec<usize> = (0..v).map(|i| k * i + 1).collect();
    let mut consumed = vec![false; degree];

    for (idx, block) in ty.blocks().iter().enumerate() {
        let u = idx + 1;
        let slots: Vec<usize> = ctx.block_points(u)?.collect();
        let self_mult = block.iter().filter(|&&val| val == u).count();
        let mut filled = vec![false; k];
        // Occurrences of value u inside block u must be fixed points of g,
        // so pin the smallest unconsumed sources of Γ_u to themselves.
        let mut pinned = 0;
        for r in 0..k {
            if pinned == self_mult {
                break;
            }
            let s = slots[r];
            if !consumed[s - 1] {
                images[s - 1] = s;
                consumed[s - 1] = true;
                filled[r] = true;
                pinned += 1;
            }
        }
        debug_assert_eq!(pinned, self_mult, "enough sources remain for self occurrences");
        // Remaining slots ascending, sources of the other values in block
        // order (the block is sorted, ties broken by consumption order).
        let mut slot_iter = (0..k).filter(|&r| !filled[r]);
        for &val in block.iter().filter(|&&val| val != u) {
            let r = slot_iter.next().expect("slot counts match value counts");
            let mut s = next_source[val - 1];
            while consumed[s - 1] {
                s += 1;
            }
            debug_assert!(s <= k * val, "source stays within Γ_val");
            next_source[val - 1] = s + 1;
            images[s - 1] = slots[r];
            consumed[s - 1] = true;
        }
    }
    for s in k * v + 1..=degree {
        images[s - 1] = s;
    }
    // Any slot never assigned corresponds to a never-consumed source.
    for s in 1..=k * v {
        if images[s - 1] == 0 {
            return Err(Error::InternalConsistency(format!(
                "type representative construction left source {s} unassigned for {}",
                ty.key()
            )));
        }
    }
    let g = Permutation::from_images(images)?;
    let normalized = crate::cosets::closed_components_form(&ctx, &g)?;
    if !crate::cosets::is_minimal(&ctx, &normalized)? {
        return Err(Error::InternalConsistency(format!(
            "type representative for {} is not minimal",
            ty.key()
        )));
    }
    let check = modified_type(&ctx, &normalized)?;
    if &check != ty {
        return Err(Error::InternalConsistency(format!(
            "type representative realizes {} instead of {}",
            check.key(),
            ty.key()
        )));
    }
    Ok((normalized, ctx))
}

/// The type of the inverses of a type's members.  Inverting a permutation
/// swaps the roles of source and target blocks, which transposes the
/// interaction graph; many small types are fixed by this (all of them at
/// k = 2), but from k = 3, five vertices onwards genuinely asymmetric
/// types appear.  Well-defined because `(h₁gh₂)⁻¹ = h₂⁻¹g⁻¹h₁⁻¹` keeps
/// inverses in one double coset.
pub fn inverse_type(ty: &ModifiedType) -> Result<ModifiedType> {
    let v = ty.vertex_count();
    if v == 0 {
        return Ok(ty.clone());
    }
    let (g, ctx) = representative_of_type(ty, v)?;
    modified_type(&ctx, &g.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(k: usize, n: usize) -> WreathContext {
        WreathContext::new(k, n).unwrap()
    }

    fn example_g() -> Permutation {
        Permutation::from_cycles(
            21,
            &[&[1, 8, 18, 21, 6, 10, 13, 2, 11, 3, 12], &[4, 16, 19], &[5, 17, 20]],
        )
        .unwrap()
    }

    #[test]
    fn raw_type_of_running_example() {
        let c = ctx(3, 7);
        let raw = raw_coset_type(&c, &example_g()).unwrap();
        assert_eq!(
            raw,
            vec![
                vec![4, 4, 5],
                vec![7, 7, 7],
                vec![1, 3, 3],
                vec![1, 1, 2],
                vec![4, 5, 5],
                vec![2, 2, 3],
                vec![6, 6, 6],
            ]
        );
    }

    #[test]
    fn modified_type_of_running_example() {
        let c = ctx(3, 7);
        let ty = modified_type(&c, &example_g()).unwrap();
        assert_eq!(ty.key(), "v5:1.1.2|1.2.2|3.3.4|3.5.5|4.4.5");
        assert_eq!(ty.vertex_count(), 5);
        assert_eq!(ty.component_count(), 2);
        assert_eq!(ty.component_sizes(), vec![3, 2]);
        assert_eq!(ty.weight(), 3);
    }

    #[test]
    fn identity_and_subgroup_elements_have_empty_type() {
        let c = ctx(2, 3);
        let ty = modified_type(&c, &Permutation::identity(6)).unwrap();
        assert!(ty.is_empty());
        assert_eq!(ty.key(), "v0:");
        assert_eq!(ty.weight(), 0);
        let t = c.tau(1, 3).unwrap();
        assert!(modified_type(&c, &t).unwrap().is_empty());
        let y = Permutation::from_cycles(6, &[&[1, 2], &[5, 6]]).unwrap();
        assert!(modified_type(&c, &y).unwrap().is_empty());
    }

    #[test]
    fn type_is_constant_on_double_cosets() {
        let c = ctx(2, 3);
        let g = Permutation::from_cycles(6, &[&[2, 3]]).unwrap();
        let ty = modified_type(&c, &g).unwrap();
        assert_eq!(ty.key(), "v2:1.2|1.2");
        for h1 in c.enumerate_wreath().step_by(7) {
            for h2 in c.enumerate_wreath().step_by(5) {
                let conj = h1.compose(&g).compose(&h2);
                assert_eq!(modified_type(&c, &conj).unwrap(), ty);
            }
        }
    }

    #[test]
    fn relabelled_inputs_canonicalize_identically() {
        // A 4-cycle handed over with scrambled labels.
        let a = ModifiedType::from_raw_blocks(
            2,
            &[vec![7, 3], vec![3, 9], vec![9, 1], vec![1, 7]],
        )
        .unwrap();
        let b = ModifiedType::from_raw_blocks(
            2,
            &[vec![1, 2], vec![2, 3], vec![3, 4], vec![1, 4]],
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.key(), "v4:1.2|1.3|2.4|3.4");
    }

    #[test]
    fn constant_blocks_are_dropped() {
        let ty = ModifiedType::from_raw_blocks(
            2,
            &[vec![3, 3], vec![1, 2], vec![1, 2]],
        )
        .unwrap();
        assert_eq!(ty.key(), "v2:1.2|1.2");
    }

    #[test]
    fn two_vertex_types_are_unique_for_small_k() {
        // k = 2: the double edge.  k = 3: the unique pair of mixed triples.
        let k2 = enumerate_modified_types(2, 2).unwrap();
        assert_eq!(
            k2.iter().map(|t| t.key()).collect::<Vec<_>>(),
            vec!["v0:", "v2:1.2|1.2"]
        );
        let k3 = enumerate_modified_types(3, 2).unwrap();
        assert_eq!(
            k3.iter().map(|t| t.key()).collect::<Vec<_>>(),
            vec!["v0:", "v2:1.1.2|1.2.2"]
        );
    }

    #[test]
    fn small_block_types_match_cycle_partitions() {
        // For k = 2 the modified types with v values are the loopless
        // 2-regular multigraphs, i.e. partitions of v into parts ≥ 2:
        // counts 1, 0, 1, 1, 2, 2 for v = 0..5.
        let all = enumerate_modified_types(2, 5).unwrap();
        let keys: Vec<String> = all.iter().map(|t| t.key()).collect();
        assert_eq!(
            keys,
            vec![
                "v0:",
                "v2:1.2|1.2",
                "v3:1.2|1.3|2.3",
                "v4:1.2|1.2|3.4|3.4",
                "v4:1.2|1.3|2.4|3.4",
                "v5:1.2|1.2|3.4|3.5|4.5",
                "v5:1.2|1.3|2.4|3.5|4.5",
            ]
        );
        let weights: Vec<usize> = all.iter().map(|t| t.weight()).collect();
        assert_eq!(weights, vec![0, 1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn weight_bound_halves_vertex_count() {
        for ty in enumerate_types_up_to_weight(2, 2).unwrap() {
            assert!(ty.weight() <= 2);
            assert!(ty.vertex_count() <= 4);
        }
        // Every type of weight ≤ 2 shows up among vertex counts ≤ 4.
        assert_eq!(enumerate_types_up_to_weight(2, 2).unwrap().len(), 4);
    }

    #[test]
    fn key_roundtrip() {
        for ty in enumerate_modified_types(3, 4).unwrap() {
            let parsed = ModifiedType::parse_key(3, &ty.key()).unwrap();
            assert_eq!(parsed, ty);
        }
        assert!(ModifiedType::parse_key(2, "x3:1.2").is_err());
        assert!(ModifiedType::parse_key(2, "v2:1.2|1.3").is_err());
    }

    #[test]
    fn serde_roundtrip_recanonicalizes() {
        let ty = ModifiedType::from_raw_blocks(2, &[vec![1, 2], vec![1, 2]]).unwrap();
        let s = serde_json::to_string(&ty).unwrap();
        let back: ModifiedType = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ty);
        let scrambled = r#"{"k":2,"blocks":[[5,2],[2,5]]}"#;
        let back: ModifiedType = serde_json::from_str(scrambled).unwrap();
        assert_eq!(back, ty);
    }

    #[test]
    fn types_lift_unchanged() {
        let c = ctx(2, 3);
        let g = Permutation::from_cycles(6, &[&[2, 3], &[4, 5]]).unwrap();
        let ty = modified_type(&c, &g).unwrap();
        let (lg, lc) = c.lift(&g, 3).unwrap();
        assert_eq!(modified_type(&lc, &lg).unwrap(), ty);
    }

    #[test]
    fn inverse_type_is_an_involution_preserving_the_grading() {
        for (k, v) in [(2, 6), (3, 4), (4, 4)] {
            for ty in enumerate_modified_types(k, v).unwrap() {
                let inv = inverse_type(&ty).unwrap();
                assert_eq!(inv.vertex_count(), ty.vertex_count());
                assert_eq!(inv.weight(), ty.weight());
                assert_eq!(inverse_type(&inv).unwrap(), ty);
                if k == 2 {
                    assert_eq!(inv, ty, "all k = 2 types are self-inverse");
                }
            }
        }
    }

    #[test]
    fn asymmetric_types_swap_under_inversion() {
        let a = ModifiedType::parse_key(4, "v4:1.1.1.2|1.2.3.3|2.3.3.4|2.4.4.4").unwrap();
        let b = ModifiedType::parse_key(4, "v4:1.1.1.2|1.2.3.4|2.2.3.3|3.4.4.4").unwrap();
        assert_eq!(inverse_type(&a).unwrap(), b);
        assert_eq!(inverse_type(&b).unwrap(), a);
        let c =
            ModifiedType::parse_key(3, "v5:1.1.2|1.3.4|2.3.4|2.5.5|3.4.5").unwrap();
        let d =
            ModifiedType::parse_key(3, "v5:1.1.2|1.3.4|2.3.5|2.3.5|4.4.5").unwrap();
        assert_eq!(inverse_type(&c).unwrap(), d);
    }

    #[test]
    fn inverse_type_matches_inverting_arbitrary_members() {
        for (k, n) in [(2usize, 4usize), (3, 2), (4, 2)] {
            let c = ctx(k, n);
            for seed in 0..30 {
                let g = crate::perm::tests::random_perm(k * n, 1000 + seed);
                let ty = modified_type(&c, &g).unwrap();
                let inv_ty = modified_type(&c, &g.inverse()).unwrap();
                assert_eq!(inverse_type(&ty).unwrap(), inv_ty, "member {g}");
            }
        }
    }
}
