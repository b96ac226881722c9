//! Edge-level calculus on coset graphs.
//!
//! `type_graph` stores a coset graph as a block multiset; here the edges are
//! materialized.  Every block `Γ_u` contributes a cluster of `k(k-1)/2` edges
//! whose endpoints are the blocks holding the preimages of its points, and
//! the full graph on vertices `1..=n` is the disjoint union of the clusters.
//! On top of that this module implements edge-set sizes (absolute and
//! relative to an ambient graph), evolution chains that rewrite groups of
//! edges with matching end-point sets, the stepwise and aggregate weight
//! bounds obeyed by such chains, and the construction that evolves the graph
//! of `g2` into the graph of `g1·g2` along the components of `g1`'s graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cosets;
use crate::error::{Error, Result};
use crate::perm::{Permutation, WreathContext};
use crate::type_graph::{labelled_components, UnionFind};

/// One materialized edge of a coset graph.
///
/// The identity of an edge is its defining point pair `{r, s}`, both points
/// lying in block `Γ_cluster`; the endpoints are the indices of the blocks
/// containing the preimages of `r` and `s` under the defining permutation.
/// Loops (equal endpoints) are kept: they contribute end-points even though
/// they never join components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    /// Index of the block containing both defining points.
    pub cluster: usize,
    /// Defining points `(r, s)`, stored with `r < s`.
    pub points: (usize, usize),
    /// Endpoint vertices, stored sorted.
    pub ends: (usize, usize),
}

impl Edge {
    pub fn new(cluster: usize, points: (usize, usize), ends: (usize, usize)) -> Edge {
        let points = if points.0 <= points.1 { points } else { (points.1, points.0) };
        let ends = if ends.0 <= ends.1 { ends } else { (ends.1, ends.0) };
        Edge { cluster, points, ends }
    }

    pub fn is_loop(&self) -> bool {
        self.ends.0 == self.ends.1
    }
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "e({},{})@{}[v{}-v{}]",
            self.points.0, self.points.1, self.cluster, self.ends.0, self.ends.1
        )
    }
}

/// A set of edges inside the ambient vertex set `{1, ..., vertex_count}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    vertex_count: usize,
    edges: BTreeSet<Edge>,
}

impl EdgeSet {
    pub fn new(vertex_count: usize) -> EdgeSet {
        EdgeSet { vertex_count, edges: BTreeSet::new() }
    }

    pub fn from_edges(vertex_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<EdgeSet> {
        let mut set = EdgeSet::new(vertex_count);
        for e in edges {
            set.insert(e)?;
        }
        Ok(set)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn insert(&mut self, e: Edge) -> Result<bool> {
        if e.ends.1 > self.vertex_count || e.ends.0 == 0 {
            return Err(Error::Domain(format!(
                "edge {e} has endpoints outside 1..={}",
                self.vertex_count
            )));
        }
        if e.points.0 == 0 || e.points.0 >= e.points.1 {
            return Err(Error::Domain(format!("edge {e} has a malformed point pair")));
        }
        Ok(self.edges.insert(e))
    }

    pub fn is_disjoint(&self, other: &EdgeSet) -> bool {
        self.edges.is_disjoint(&other.edges)
    }

    /// Set union; both operands must share the ambient vertex set.
    pub fn union(&self, other: &EdgeSet) -> Result<EdgeSet> {
        if self.vertex_count != other.vertex_count {
            return Err(Error::DegreeMismatch(format!(
                "edge sets live on {} and {} vertices",
                self.vertex_count, other.vertex_count
            )));
        }
        let mut out = self.clone();
        out.edges.extend(other.edges.iter().copied());
        Ok(out)
    }

    /// The edges whose defining point pair appears in `pairs`.
    pub fn select_by_points(&self, pairs: &[(usize, usize)]) -> EdgeSet {
        let wanted: BTreeSet<(usize, usize)> = pairs
            .iter()
            .map(|&(r, s)| if r <= s { (r, s) } else { (s, r) })
            .collect();
        EdgeSet {
            vertex_count: self.vertex_count,
            edges: self.edges.iter().filter(|e| wanted.contains(&e.points)).copied().collect(),
        }
    }

    pub fn end_points(&self) -> BTreeSet<usize> {
        let mut v = BTreeSet::new();
        for e in &self.edges {
            v.insert(e.ends.0);
            v.insert(e.ends.1);
        }
        v
    }
}

/// The set of end-point vertices of `d`.
pub fn end_points(d: &EdgeSet) -> BTreeSet<usize> {
    d.end_points()
}

/// The number of connected components of the graph spanned by `d` on its own
/// end-point set.  The empty edge set has size 0.
pub fn nonrelative_size(d: &EdgeSet) -> usize {
    let verts: Vec<usize> = d.end_points().into_iter().collect();
    if verts.is_empty() {
        return 0;
    }
    let index: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::new(verts.len());
    for e in d.iter() {
        uf.union(index[&e.ends.0], index[&e.ends.1]);
    }
    uf.classes().len()
}

/// A multigraph on the fixed vertex set `{1, ..., vertex_count}`.  Vertices
/// not met by any edge count as singleton components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multigraph {
    vertex_count: usize,
    edges: BTreeSet<Edge>,
}

impl Multigraph {
    pub fn new(vertex_count: usize) -> Multigraph {
        Multigraph { vertex_count, edges: BTreeSet::new() }
    }

    pub fn from_edge_set(d: &EdgeSet) -> Multigraph {
        Multigraph { vertex_count: d.vertex_count, edges: d.edges.clone() }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edge_set(&self) -> EdgeSet {
        EdgeSet { vertex_count: self.vertex_count, edges: self.edges.clone() }
    }

    /// Connected components, each ascending, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.vertex_count);
        for e in &self.edges {
            uf.union(e.ends.0 - 1, e.ends.1 - 1);
        }
        uf.classes()
            .into_iter()
            .map(|c| c.into_iter().map(|x| x + 1).collect())
            .collect()
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    /// Sum of (size - 1) over components; singleton components contribute 0.
    pub fn weight(&self) -> usize {
        self.vertex_count - self.component_count()
    }
}

/// The number of components of `m` that meet the end-points of `d`.
pub fn relative_size(m: &Multigraph, d: &EdgeSet) -> Result<usize> {
    relative_size_of_vertices(m, &d.end_points())
}

/// The number of components of `m` that meet the vertex set `w`.
pub fn relative_size_of_vertices(m: &Multigraph, w: &BTreeSet<usize>) -> Result<usize> {
    if let Some(&v) = w.iter().next_back() {
        if v > m.vertex_count {
            return Err(Error::Domain(format!(
                "vertex v{v} is outside the ambient graph on {} vertices",
                m.vertex_count
            )));
        }
    }
    if w.iter().next() == Some(&0) {
        return Err(Error::Domain("vertices are numbered from 1".into()));
    }
    Ok(m.components().iter().filter(|c| c.iter().any(|v| w.contains(v))).count())
}

fn check_degree(ctx: &WreathContext, g: &Permutation, name: &str) -> Result<()> {
    if g.degree() != ctx.degree() {
        return Err(Error::DegreeMismatch(format!(
            "{name} has degree {} but the context needs {}",
            g.degree(),
            ctx.degree()
        )));
    }
    Ok(())
}

fn cluster_edges_from_inverse(ctx: &WreathContext, g_inv: &Permutation, u: usize) -> Result<EdgeSet> {
    let points: Vec<usize> = ctx.block_points(u)?.collect();
    let mut set = EdgeSet::new(ctx.n());
    for a in 0..points.len() {
        for b in (a + 1)..points.len() {
            let (r, s) = (points[a], points[b]);
            let i = ctx.part_of(g_inv.apply(r))?;
            let j = ctx.part_of(g_inv.apply(s))?;
            set.insert(Edge::new(u, (r, s), (i, j)))?;
        }
    }
    Ok(set)
}

/// The cluster of `g`'s graph attached to block `u`: one edge per point pair
/// of `Γ_u`, with endpoints the blocks of the preimages.
pub fn edges_of_cluster(ctx: &WreathContext, g: &Permutation, u: usize) -> Result<EdgeSet> {
    check_degree(ctx, g, "g")?;
    cluster_edges_from_inverse(ctx, &g.inverse(), u)
}

/// Union of the clusters of `g`'s graph attached to the given blocks.
pub fn cluster_union(ctx: &WreathContext, g: &Permutation, blocks: &[usize]) -> Result<EdgeSet> {
    check_degree(ctx, g, "g")?;
    let g_inv = g.inverse();
    let mut out = EdgeSet::new(ctx.n());
    for &u in blocks {
        out = out.union(&cluster_edges_from_inverse(ctx, &g_inv, u)?)?;
    }
    Ok(out)
}

/// Size of a cluster union against its block count.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClusterBound {
    /// Number of components spanned by the union of the chosen clusters.
    pub size: usize,
    /// The bound: the number of chosen blocks.
    pub bound: usize,
}

/// Checks that the union of the chosen clusters spans at most `blocks.len()`
/// components.  Each single cluster is connected, so the bound follows from
/// subadditivity; a violation is reported as an internal error.
pub fn cluster_union_size_bound(
    ctx: &WreathContext,
    g: &Permutation,
    blocks: &[usize],
) -> Result<ClusterBound> {
    let distinct: BTreeSet<usize> = blocks.iter().copied().collect();
    let distinct: Vec<usize> = distinct.into_iter().collect();
    let union = cluster_union(ctx, g, &distinct)?;
    let size = nonrelative_size(&union);
    let bound = distinct.len();
    if size > bound {
        return Err(Error::InternalConsistency(format!(
            "cluster union over {bound} blocks spans {size} components"
        )));
    }
    Ok(ClusterBound { size, bound })
}

/// The full coset graph of `g`: all clusters on vertices `1..=n`.
pub fn graph_of(ctx: &WreathContext, g: &Permutation) -> Result<Multigraph> {
    check_degree(ctx, g, "g")?;
    let g_inv = g.inverse();
    let mut graph = Multigraph::new(ctx.n());
    for u in 1..=ctx.n() {
        for e in cluster_edges_from_inverse(ctx, &g_inv, u)?.iter() {
            graph.edges.insert(*e);
        }
    }
    Ok(graph)
}

/// An evolution chain: graphs `G_0, ..., G_t` where step `i` replaces the
/// edge group `E0_i` with `E1_i`.  The removal groups partition the edges of
/// `G_0`, the insertion groups partition the edges of `G_t`, and the two
/// groups of a pair span the same end-point set.
#[derive(Clone, Debug, Serialize)]
pub struct EvolutionChain {
    graphs: Vec<Multigraph>,
    pairs: Vec<(EdgeSet, EdgeSet)>,
}

impl EvolutionChain {
    pub fn steps(&self) -> usize {
        self.pairs.len()
    }

    pub fn graphs(&self) -> &[Multigraph] {
        &self.graphs
    }

    pub fn pairs(&self) -> &[(EdgeSet, EdgeSet)] {
        &self.pairs
    }

    pub fn initial(&self) -> &Multigraph {
        &self.graphs[0]
    }

    pub fn final_graph(&self) -> &Multigraph {
        self.graphs.last().expect("a chain holds at least one graph")
    }
}

/// Builds the evolution chain that starts at `m0` and applies the replacement
/// pairs in order.  Validation failures name the failing pair (1-based);
/// index 0 stands for the chain as a whole.
pub fn evolve(m0: &Multigraph, pairs: &[(EdgeSet, EdgeSet)]) -> Result<EvolutionChain> {
    let n = m0.vertex_count;
    let mut graphs = vec![m0.clone()];
    let mut consumed: BTreeSet<Edge> = BTreeSet::new();
    for (idx, (removed, inserted)) in pairs.iter().enumerate() {
        let step = idx + 1;
        if removed.vertex_count != n || inserted.vertex_count != n {
            return Err(Error::InvalidEvolution {
                index: step,
                reason: format!("edge sets do not live on the ambient {n} vertices"),
            });
        }
        if removed.is_empty() && inserted.is_empty() {
            return Err(Error::InvalidEvolution {
                index: step,
                reason: "empty replacement pair".into(),
            });
        }
        if removed.end_points() != inserted.end_points() {
            return Err(Error::InvalidEvolution {
                index: step,
                reason: format!(
                    "end-point sets differ: removed spans {:?}, inserted spans {:?}",
                    removed.end_points(),
                    inserted.end_points()
                ),
            });
        }
        let mut next = graphs.last().expect("chain is nonempty").clone();
        for e in removed.iter() {
            if !m0.contains(e) {
                return Err(Error::InvalidEvolution {
                    index: step,
                    reason: format!("removed edge {e} is not an edge of the initial graph"),
                });
            }
            if !consumed.insert(*e) {
                return Err(Error::InvalidEvolution {
                    index: step,
                    reason: format!("edge {e} is removed by two different steps"),
                });
            }
            next.edges.remove(e);
        }
        for e in inserted.iter() {
            if next.edges.contains(e) {
                return Err(Error::InvalidEvolution {
                    index: step,
                    reason: format!("inserted edge {e} is already present"),
                });
            }
            next.edges.insert(*e);
        }
        graphs.push(next);
    }
    if consumed.len() != m0.edge_count() {
        let missed = m0.edges.iter().find(|e| !consumed.contains(e)).expect("some edge is uncovered");
        return Err(Error::InvalidEvolution {
            index: 0,
            reason: format!("removal groups do not cover the initial graph: {missed} untouched"),
        });
    }
    Ok(EvolutionChain { graphs, pairs: pairs.to_vec() })
}

/// Weight accounting for one step of an evolution chain.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepMargin {
    /// 1-based index of the step.
    pub index: usize,
    /// Number of components spanned by the removed group.
    pub removed_size: usize,
    pub weight_before: usize,
    pub weight_after: usize,
    /// Allowed growth minus actual growth; nonnegative when the step bound
    /// `weight_after <= weight_before + removed_size - 1` holds.
    pub margin: i64,
}

/// Stepwise and aggregate weight bounds of an evolution chain.
#[derive(Clone, Debug, Serialize)]
pub struct WeightReport {
    pub steps: Vec<StepMargin>,
    pub initial_weight: usize,
    pub final_weight: usize,
    /// Total allowed growth: sum of (removed_size - 1) over the steps.
    pub aggregate_allowance: i64,
    /// Allowed growth minus actual growth over the whole chain.
    pub aggregate_margin: i64,
    /// True when the final weight meets the aggregate bound exactly.
    pub aggregate_equality: bool,
    /// True when every component of the initial graph is contained in a
    /// component of the final graph.  Guaranteed whenever
    /// `aggregate_equality` holds.
    pub components_merge: bool,
    /// True when every stepwise margin and the aggregate margin are
    /// nonnegative.
    pub holds: bool,
}

/// Computes the weight margins of each step and of the whole chain, plus the
/// component-merge diagnosis of the initial graph inside the final one.
pub fn check_weight_inequality(chain: &EvolutionChain) -> WeightReport {
    let mut steps = Vec::with_capacity(chain.steps());
    for (idx, (removed, _)) in chain.pairs.iter().enumerate() {
        let weight_before = chain.graphs[idx].weight();
        let weight_after = chain.graphs[idx + 1].weight();
        let removed_size = nonrelative_size(removed);
        let margin =
            weight_before as i64 + removed_size as i64 - 1 - weight_after as i64;
        steps.push(StepMargin { index: idx + 1, removed_size, weight_before, weight_after, margin });
    }
    let initial_weight = chain.initial().weight();
    let final_weight = chain.final_graph().weight();
    let aggregate_allowance: i64 = steps.iter().map(|s| s.removed_size as i64 - 1).sum();
    let aggregate_margin = initial_weight as i64 + aggregate_allowance - final_weight as i64;
    let final_components = chain.final_graph().components();
    let mut root_of = vec![0usize; chain.final_graph().vertex_count + 1];
    for (ci, comp) in final_components.iter().enumerate() {
        for &v in comp {
            root_of[v] = ci;
        }
    }
    let components_merge = chain
        .initial()
        .components()
        .iter()
        .all(|comp| comp.iter().all(|&v| root_of[v] == root_of[comp[0]]));
    WeightReport {
        holds: steps.iter().all(|s| s.margin >= 0) && aggregate_margin >= 0,
        aggregate_equality: aggregate_margin == 0,
        steps,
        initial_weight,
        final_weight,
        aggregate_allowance,
        aggregate_margin,
        components_merge,
    }
}

/// Evolves the graph of `g2` into the graph of `g1·g2`.
///
/// `g1` must be a minimal representative with closed components.  Each
/// component of `g1`'s graph contributes one replacement pair: the clusters
/// of `g2` attached to the component's blocks are swapped for the clusters of
/// the product on the same blocks.  Components are processed in order of
/// least vertex.  The two edge groups of every pair span the same end-point
/// set, so the chain always validates; the final graph is the product's
/// graph.
pub fn evolution_from_pair(
    ctx: &WreathContext,
    g1: &Permutation,
    g2: &Permutation,
) -> Result<EvolutionChain> {
    check_degree(ctx, g1, "g1")?;
    check_degree(ctx, g2, "g2")?;
    if !(cosets::is_minimal(ctx, g1)? && cosets::is_closed(ctx, g1)?) {
        return Err(Error::Domain(
            "g1 must be a minimal representative with closed components".into(),
        ));
    }
    let product = g1.compose(g2);
    let parts = labelled_components(ctx, g1)?;
    let mut index_sets: Vec<Vec<usize>> =
        parts.components.into_iter().map(|c| c.values).collect();
    for (value, _) in parts.isolated_pairs {
        index_sets.push(vec![value]);
    }
    index_sets.sort_by_key(|s| s[0]);
    let g2_inv = g2.inverse();
    let product_inv = product.inverse();
    let mut pairs = Vec::with_capacity(index_sets.len());
    for blocks in &index_sets {
        let mut removed = EdgeSet::new(ctx.n());
        let mut inserted = EdgeSet::new(ctx.n());
        for &u in blocks {
            removed = removed.union(&cluster_edges_from_inverse(ctx, &g2_inv, u)?)?;
            inserted = inserted.union(&cluster_edges_from_inverse(ctx, &product_inv, u)?)?;
        }
        pairs.push((removed, inserted));
    }
    let chain = evolve(&graph_of(ctx, g2)?, &pairs)?;
    let product_graph = graph_of(ctx, &product)?;
    if chain.final_graph() != &product_graph {
        return Err(Error::InternalConsistency(
            "evolved graph differs from the product's graph".into(),
        ));
    }
    Ok(chain)
}

/// The three coset-support inclusions that hold at exact weight additivity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupportInclusions {
    /// Coset support of `g2` inside the coset support of `g1·g2`.
    pub coset_support_g2: bool,
    /// Moved points of `g2` inside the coset support of `g1·g2`.
    pub moved_points_g2: bool,
    /// Coset support of `g1` inside the coset support of `g1·g2`.
    pub coset_support_g1: bool,
}

impl SupportInclusions {
    pub fn all(&self) -> bool {
        self.coset_support_g2 && self.moved_points_g2 && self.coset_support_g1
    }
}

/// Checks the support inclusions of the pair `(g1, g2)` against `g1·g2`.
/// They are guaranteed when `g1` is minimal with closed components, `g1·g2`
/// is minimal, and the product's weight is exactly the sum of the factors'
/// weights.
pub fn support_inclusions(
    ctx: &WreathContext,
    g1: &Permutation,
    g2: &Permutation,
) -> Result<SupportInclusions> {
    check_degree(ctx, g1, "g1")?;
    check_degree(ctx, g2, "g2")?;
    let product = g1.compose(g2);
    let s1 = ctx.h_support(g1)?;
    let s2 = ctx.h_support(g2)?;
    let sp = ctx.h_support(&product)?;
    let moved_points_g2 = g2
        .support()
        .into_iter()
        .map(|r| ctx.part_of(r))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|b| sp.contains_block(b));
    Ok(SupportInclusions {
        coset_support_g2: s2.is_subset_of(&sp),
        moved_points_g2,
        coset_support_g1: s1.is_subset_of(&sp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::tests::random_perm;
    use crate::perm::{factorial, for_each_permutation_in_range};
    use crate::type_graph::modified_type;
    use proptest::prelude::*;

    fn running_example() -> (WreathContext, Permutation) {
        let ctx = WreathContext::new(3, 7).unwrap();
        let g = Permutation::from_cycles(
            21,
            &[&[1, 8, 18, 6, 10, 13, 2, 11, 3, 12], &[4, 16], &[5, 17]],
        )
        .unwrap();
        (ctx, g)
    }

    #[test]
    fn clusters_of_running_example() {
        let (ctx, g) = running_example();
        let c1 = edges_of_cluster(&ctx, &g, 1).unwrap();
        let got: Vec<Edge> = c1.iter().copied().collect();
        assert_eq!(
            got,
            vec![
                Edge::new(1, (1, 2), (4, 5)),
                Edge::new(1, (1, 3), (4, 4)),
                Edge::new(1, (2, 3), (4, 5)),
            ]
        );
        let c2 = edges_of_cluster(&ctx, &g, 2).unwrap();
        assert!(c2.iter().all(|e| e.ends == (6, 6)));
        assert_eq!(c2.len(), 3);
        assert_eq!(end_points(&c2), [6].into_iter().collect());
    }

    #[test]
    fn running_example_graph_layout() {
        let (ctx, g) = running_example();
        let graph = graph_of(&ctx, &g).unwrap();
        assert_eq!(graph.edge_count(), 7 * 3);
        assert_eq!(
            graph.components(),
            vec![vec![1, 2, 3], vec![4, 5], vec![6], vec![7]]
        );
        assert_eq!(graph.weight(), 3);
        assert_eq!(graph.weight(), modified_type(&ctx, &g).unwrap().weight());
    }

    #[test]
    fn selected_edges_of_running_example() {
        let (ctx, g) = running_example();
        let graph = graph_of(&ctx, &g).unwrap();
        let d = graph.edge_set().select_by_points(&[(7, 8), (16, 17), (14, 15)]);
        assert_eq!(d.len(), 3);
        assert_eq!(end_points(&d), [1, 2, 3, 5].into_iter().collect());
        assert_eq!(nonrelative_size(&d), 3);
        assert_eq!(relative_size(&graph, &d).unwrap(), 2);
        assert_eq!(
            relative_size_of_vertices(&graph, &[1, 2, 3, 5].into_iter().collect()).unwrap(),
            2
        );
    }

    #[test]
    fn identity_graph_is_all_loops() {
        let ctx = WreathContext::new(3, 4).unwrap();
        let graph = graph_of(&ctx, &Permutation::identity(12)).unwrap();
        assert_eq!(graph.edge_count(), 4 * 3);
        assert!(graph.edges().all(|e| e.is_loop()));
        assert_eq!(graph.weight(), 0);
        assert_eq!(graph.component_count(), 4);
    }

    #[test]
    fn empty_edge_set_has_size_zero() {
        let d = EdgeSet::new(5);
        assert_eq!(nonrelative_size(&d), 0);
        assert!(end_points(&d).is_empty());
        assert_eq!(relative_size(&Multigraph::new(5), &d).unwrap(), 0);
    }

    #[test]
    fn edge_set_rejects_out_of_range_edges() {
        let mut d = EdgeSet::new(3);
        assert!(d.insert(Edge::new(1, (1, 2), (1, 4))).is_err());
        assert!(d.insert(Edge::new(1, (2, 2), (1, 2))).is_err());
        assert!(d.insert(Edge::new(1, (1, 2), (3, 1))).is_ok());
    }

    /// The end-point set of a cluster is exactly the set of blocks meeting
    /// the preimage of the cluster's block, and every cluster is connected.
    #[test]
    fn cluster_end_points_match_preimage_blocks() {
        for (k, n) in [(2usize, 3usize), (3, 2)] {
            let ctx = WreathContext::new(k, n).unwrap();
            let degree = k * n;
            for_each_permutation_in_range(degree, 0, factorial(degree), |images| {
                let g = Permutation::from_images(images.to_vec()).unwrap();
                let g_inv = g.inverse();
                for u in 1..=n {
                    let cluster = edges_of_cluster(&ctx, &g, u).unwrap();
                    let mut expected = BTreeSet::new();
                    for r in ctx.block_points(u).unwrap() {
                        expected.insert(ctx.part_of(g_inv.apply(r)).unwrap());
                    }
                    assert_eq!(end_points(&cluster), expected);
                    assert_eq!(nonrelative_size(&cluster), 1);
                }
            })
            .unwrap();
        }
    }

    #[test]
    fn cluster_union_bound_on_random_inputs() {
        for seed in 0..80u64 {
            let k = if seed % 2 == 0 { 2 } else { 3 };
            let n = 3 + (seed % 2) as usize;
            let ctx = WreathContext::new(k, n).unwrap();
            let g = random_perm(k * n, seed);
            let blocks: Vec<usize> = (1..=n).filter(|u| (seed >> u) & 1 == 0).collect();
            let check = cluster_union_size_bound(&ctx, &g, &blocks).unwrap();
            assert!(check.size <= check.bound);
            if blocks.len() == 1 {
                assert_eq!(check.size, 1);
            }
        }
        let ctx = WreathContext::new(2, 4).unwrap();
        let all: Vec<usize> = (1..=4).collect();
        let id = Permutation::identity(8);
        let check = cluster_union_size_bound(&ctx, &id, &all).unwrap();
        assert_eq!((check.size, check.bound), (4, 4));
    }

    #[test]
    fn size_is_subadditive_on_disjoint_splits() {
        for seed in 0..60u64 {
            let ctx = WreathContext::new(2, 4).unwrap();
            let g = random_perm(8, seed);
            let all = graph_of(&ctx, &g).unwrap().edge_set();
            let mut left = EdgeSet::new(4);
            let mut right = EdgeSet::new(4);
            for (i, e) in all.iter().enumerate() {
                if (seed >> (i % 60)) & 1 == 0 {
                    left.insert(*e).unwrap();
                } else {
                    right.insert(*e).unwrap();
                }
            }
            assert!(left.is_disjoint(&right));
            let whole = left.union(&right).unwrap();
            assert!(nonrelative_size(&whole) <= nonrelative_size(&left) + nonrelative_size(&right));
        }
    }

    #[test]
    fn relative_size_is_dominated_by_nonrelative_size() {
        for seed in 0..60u64 {
            let ctx = WreathContext::new(3, 3).unwrap();
            let g = random_perm(9, seed);
            let graph = graph_of(&ctx, &g).unwrap();
            let mut d = EdgeSet::new(3);
            for (i, e) in graph.edges().enumerate() {
                if (seed >> (i % 60)) & 1 == 1 {
                    d.insert(*e).unwrap();
                }
            }
            assert!(relative_size(&graph, &d).unwrap() <= nonrelative_size(&d));
        }
    }

    #[test]
    fn evolve_rejects_malformed_chains() {
        let ctx = WreathContext::new(2, 2).unwrap();
        let g = Permutation::from_cycles(4, &[&[2, 3]]).unwrap();
        let graph = graph_of(&ctx, &g).unwrap();
        let c1 = edges_of_cluster(&ctx, &g, 1).unwrap();
        let c2 = edges_of_cluster(&ctx, &g, 2).unwrap();

        // Leaves cluster 2 untouched.
        let err = evolve(&graph, &[(c1.clone(), c1.clone())]).unwrap_err();
        assert!(matches!(err, Error::InvalidEvolution { index: 0, .. }), "{err}");

        // Inserted group spans a different end-point set.
        let loop_at_1 = EdgeSet::from_edges(2, [Edge::new(1, (1, 2), (1, 1))]).unwrap();
        let err = evolve(&graph, &[(c1.clone(), loop_at_1), (c2.clone(), c2.clone())]).unwrap_err();
        assert!(matches!(err, Error::InvalidEvolution { index: 1, .. }), "{err}");

        // Same group removed twice.
        let err = evolve(&graph, &[(c1.clone(), c1.clone()), (c1.clone(), c1.clone())])
            .unwrap_err();
        assert!(matches!(err, Error::InvalidEvolution { index: 2, .. }), "{err}");

        // Empty pair.
        let err = evolve(&graph, &[(EdgeSet::new(2), EdgeSet::new(2))]).unwrap_err();
        assert!(matches!(err, Error::InvalidEvolution { index: 1, .. }), "{err}");

        // Removed edge not in the initial graph.
        let stray = EdgeSet::from_edges(2, [Edge::new(1, (1, 2), (2, 2))]).unwrap();
        let err = evolve(&graph, &[(stray, c1.clone()), (c2.clone(), c2.clone())]).unwrap_err();
        assert!(matches!(err, Error::InvalidEvolution { index: 1, .. }), "{err}");
    }

    #[test]
    fn identity_replacements_change_nothing() {
        let ctx = WreathContext::new(2, 3).unwrap();
        let g = random_perm(6, 11);
        let graph = graph_of(&ctx, &g).unwrap();
        let pairs: Vec<(EdgeSet, EdgeSet)> = (1..=3)
            .map(|u| {
                let c = edges_of_cluster(&ctx, &g, u).unwrap();
                (c.clone(), c)
            })
            .collect();
        let chain = evolve(&graph, &pairs).unwrap();
        assert_eq!(chain.steps(), 3);
        assert_eq!(chain.final_graph(), &graph);
        let report = check_weight_inequality(&chain);
        assert!(report.holds);
        assert!(report.components_merge);
        for step in &report.steps {
            assert_eq!(step.margin, step.removed_size as i64 - 1);
        }
    }

    #[test]
    fn empty_chain_is_allowed_for_empty_graph() {
        let chain = evolve(&Multigraph::new(3), &[]).unwrap();
        assert_eq!(chain.steps(), 0);
        assert_eq!(chain.final_graph(), chain.initial());
        let report = check_weight_inequality(&chain);
        assert!(report.holds && report.aggregate_equality && report.components_merge);
    }

    #[test]
    fn pair_evolution_requires_closed_minimal_g1() {
        let ctx = WreathContext::new(2, 2).unwrap();
        let swap_blocks = ctx.tau(1, 2).unwrap();
        let err = evolution_from_pair(&ctx, &swap_blocks, &Permutation::identity(4)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");

        // Minimal but with a component occupying blocks other than its own:
        // block 1 and block 3 both draw from blocks {1, 2}.
        let ctx = WreathContext::new(2, 4).unwrap();
        let g = Permutation::from_images(vec![1, 5, 2, 6, 3, 7, 4, 8]).unwrap();
        assert!(cosets::is_minimal(&ctx, &g).unwrap());
        assert!(!cosets::is_closed(&ctx, &g).unwrap());
        let err = evolution_from_pair(&ctx, &g, &Permutation::identity(8)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
    }

    #[test]
    fn pair_evolution_with_identity_g1_is_a_noop() {
        let ctx = WreathContext::new(3, 2).unwrap();
        let g2 = random_perm(6, 5);
        let chain = evolution_from_pair(&ctx, &Permutation::identity(6), &g2).unwrap();
        assert_eq!(chain.steps(), 2);
        assert_eq!(chain.final_graph(), chain.initial());
        assert!(check_weight_inequality(&chain).holds);
    }

    /// Exhaustive sweep in degree 6 (both block shapes): every pair with a
    /// minimal closed g1 evolves, the weight bounds hold, the product's
    /// weight never exceeds the sum, and at exact additivity the components
    /// merge and, when the product is also minimal, the support inclusions
    /// hold.
    #[test]
    fn pair_evolution_exhaustive_degree_six() {
        for (k, n) in [(2usize, 3usize), (3, 2)] {
            let ctx = WreathContext::new(k, n).unwrap();
            let degree = k * n;
            let mut all: Vec<Permutation> = Vec::new();
            for_each_permutation_in_range(degree, 0, factorial(degree), |images| {
                all.push(Permutation::from_images(images.to_vec()).unwrap());
            })
            .unwrap();
            let firsts: Vec<&Permutation> = all
                .iter()
                .filter(|g| {
                    cosets::is_minimal(&ctx, g).unwrap() && cosets::is_closed(&ctx, g).unwrap()
                })
                .collect();
            assert!(firsts.contains(&&Permutation::identity(degree)));
            let mut equalities = 0usize;
            for g1 in &firsts {
                let w1 = graph_of(&ctx, g1).unwrap().weight();
                for g2 in &all {
                    let chain = evolution_from_pair(&ctx, g1, g2).unwrap();
                    let report = check_weight_inequality(&chain);
                    assert!(report.holds);
                    let product = g1.compose(g2);
                    let w2 = chain.initial().weight();
                    let wp = chain.final_graph().weight();
                    assert_eq!(wp, modified_type(&ctx, &product).unwrap().weight());
                    assert!(wp <= w1 + w2);
                    if wp == w1 + w2 {
                        equalities += 1;
                        assert!(report.components_merge);
                        if cosets::is_minimal(&ctx, &product).unwrap() {
                            assert!(support_inclusions(&ctx, g1, g2).unwrap().all());
                        }
                    }
                }
            }
            assert!(equalities > 0);
        }
    }

    #[test]
    fn weight_report_serializes_with_diagnosis() {
        let ctx = WreathContext::new(2, 3).unwrap();
        let g2 = random_perm(6, 23);
        let chain = evolution_from_pair(&ctx, &Permutation::identity(6), &g2).unwrap();
        let report = check_weight_inequality(&chain);
        let json = serde_json::to_string(&report).unwrap();
        for field in ["aggregate_margin", "components_merge", "removed_size", "holds"] {
            assert!(json.contains(field), "missing {field} in {json}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Random pairs in degree 8 with g1 normalized to minimal closed
        /// form: the chain builds, the bounds hold, and weights filter.
        #[test]
        fn random_pairs_evolve_and_filter(seed1 in 0u64..10_000, seed2 in 0u64..10_000) {
            let ctx = WreathContext::new(2, 4).unwrap();
            let g1 = cosets::minimal_closed_representative(&ctx, &random_perm(8, seed1))
                .unwrap()
                .minimal;
            let g2 = random_perm(8, seed2.wrapping_add(99_991));
            let chain = evolution_from_pair(&ctx, &g1, &g2).unwrap();
            let report = check_weight_inequality(&chain);
            prop_assert!(report.holds);
            let w1 = graph_of(&ctx, &g1).unwrap().weight();
            let wp = chain.final_graph().weight();
            prop_assert!(wp <= w1 + chain.initial().weight());
            if report.aggregate_equality {
                prop_assert!(report.components_merge);
            }
        }
    }
}
