//! Structure constants from the centralizer orbit formula.
//!
//! Fix `g`, the distinguished representative of the `L` coset at level
//! `n`.  Factorizations `g1 g2 = g` with `type(g1) = M` and `type(g2) = N`
//! fill whole right cosets `g1 H_n`, and a right coset is the same thing
//! as the unordered partition `{g1(Γ_1), …, g1(Γ_n)}` of the points into
//! `k`-subsets.  A partition corresponds to a valid factorization exactly
//! when its occupancy pattern over the blocks has type `M` and its
//! preimage pattern through `g` has type `N`.  The centralizer
//! `C = C_{H_n}(g)` permutes those partitions, the pair orbits of the
//! fiber correspond to the `C`-orbits, and for any compatible `g1` the
//! triple intersection `C ∩ g1 H_n g1⁻¹` is the stabilizer of the
//! partition in `C`.  Each orbit therefore contributes the integer
//! `|C| / |Stab_C(P)|` and
//!
//! `c_{M,N}^L = Σ_orbits |C| / |Stab_C(P)|`.
//!
//! Because `g` is minimal with closed components, `C` splits into the
//! centralizer on the support blocks plus a full wreath factor on the
//! remaining blocks, so its order and generators are available at every
//! `n` from one small scan; only partitions moving `|V_M|` blocks can
//! qualify, so the whole computation is polynomial in `n` for a fixed
//! triple of types.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::{Arc, OnceLock, RwLock};

use itertools::Itertools;
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exec;
use crate::perm::{factorial_big, Permutation, WreathContext};
use crate::type_graph::{modified_type, raw_coset_type, representative_of_type, ModifiedType};

/// Cap on `C(n, |V_M|)` times the number of `k`-set partitions of the
/// moved points, the candidate budget of one constant.
pub const CENTRALIZER_CANDIDATE_LIMIT: u128 = 20_000_000;

/// Cap on the filtered support-centralizer scan: interaction-graph
/// automorphisms times `(k!)^v` per-block fillings.
const PACK_SCAN_LIMIT: u128 = 10_000_000;

/// Cap on `v!`, the spine candidates screened for graph automorphisms.
const PACK_SPINE_LIMIT: u128 = 4_000_000;

/// One orbit term of the centralizer formula.
#[derive(Clone, Debug)]
pub struct OrbitSummand {
    /// A factorization from the orbit; `g1 g2` is the distinguished `L`
    /// representative.
    pub g1: Permutation,
    pub g2: Permutation,
    /// Orbit size of the block-image partition of `g1 H_n` under
    /// `C_{H_n}(g1 g2)`.
    pub partition_orbit_size: u64,
    /// `|C_{H_n}(g1 g2)|`.
    pub centralizer_order: BigUint,
    /// `|C_{H_n}(g1 g2) ∩ g1 H_n g1⁻¹|`.
    pub stabilizer_order: BigUint,
    /// `centralizer_order / stabilizer_order`, this orbit's contribution.
    pub summand: u64,
}

/// The structure constant `c_{M,N}^L` at level `ctx.n()` by the orbit
/// formula.
pub fn conv_constant_centralizer(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
) -> Result<u64> {
    Ok(summands_inner(ctx, m, n_ty, l, false)?.iter().map(|o| o.summand).sum())
}

/// Sequential variant of [`conv_constant_centralizer`] (same value).
pub fn conv_constant_centralizer_sequential(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
) -> Result<u64> {
    Ok(summands_inner(ctx, m, n_ty, l, true)?.iter().map(|o| o.summand).sum())
}

/// The full orbit decomposition behind [`conv_constant_centralizer`], one
/// entry per orbit with representatives and index data.
pub fn centralizer_orbit_summands(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
) -> Result<Vec<OrbitSummand>> {
    summands_inner(ctx, m, n_ty, l, false)
}

/// Sequential variant of [`centralizer_orbit_summands`].
pub fn centralizer_orbit_summands_sequential(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
) -> Result<Vec<OrbitSummand>> {
    summands_inner(ctx, m, n_ty, l, true)
}

/// Everything per-candidate work needs about the `L` representative.
struct Setting<'a> {
    ctx: &'a WreathContext,
    g: Permutation,
    g_inv: Permutation,
    v_l: usize,
    /// Raw source multiset of `g` at every block position.
    g_raw: Vec<Vec<usize>>,
}

/// A candidate is the list of moved parts (each sorted, ordered by least
/// point); the untouched blocks are implied.
type Candidate = Vec<Vec<usize>>;

fn summands_inner(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    l: &ModifiedType,
    force_sequential: bool,
) -> Result<Vec<OrbitSummand>> {
    super::check_triple(ctx, m, n_ty, l)?;
    let n = ctx.n();
    let k = ctx.k();
    let v_l = l.vertex_count();

    let budget = candidate_budget(k, n, m.vertex_count());
    if budget > CENTRALIZER_CANDIDATE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "candidate budget {budget} for ({}, {}, {}) at n = {n} exceeds {}",
            m.key(),
            n_ty.key(),
            l.key(),
            CENTRALIZER_CANDIDATE_LIMIT
        )));
    }

    let pack = pack_data(l)?;
    let (g, _) = representative_of_type(l, n)?;
    if g.images()[..k * v_l] != pack.images[..] {
        return Err(Error::InternalConsistency(format!(
            "support restriction of the {} representative changed between levels",
            l.key()
        )));
    }
    let g_raw = raw_coset_type(ctx, &g)?;
    let setting = Setting { ctx, g_inv: g.inverse(), g, v_l, g_raw };

    let candidates = enumerate_candidates(&setting, m, n_ty, force_sequential)?;
    let candidate_set: HashSet<Candidate> = candidates.iter().cloned().collect();
    let generators = centralizer_generators(&setting, &pack)?;
    let centralizer_order = split_centralizer_order(&pack, ctx, v_l);

    let mut visited: HashSet<Candidate> = HashSet::new();
    let mut out = Vec::new();
    for candidate in &candidates {
        if visited.contains(candidate) {
            continue;
        }
        let orbit = orbit_of(candidate, &generators, &candidate_set, &mut visited)?;
        let (g1, g2) = reconstruct_pair(&setting, candidate)?;
        if modified_type(ctx, &g1)? != *m || modified_type(ctx, &g2)? != *n_ty {
            return Err(Error::InternalConsistency(format!(
                "orbit representative for ({}, {}, {}) realizes the wrong types",
                m.key(),
                n_ty.key(),
                l.key()
            )));
        }
        let (stabilizer_order, rem) = centralizer_order.div_rem(&BigUint::from(orbit));
        if !rem.is_zero() {
            return Err(Error::InternalConsistency(format!(
                "partition orbit size {orbit} does not divide |C| = {centralizer_order}"
            )));
        }
        out.push(OrbitSummand {
            g1,
            g2,
            partition_orbit_size: orbit,
            centralizer_order: centralizer_order.clone(),
            stabilizer_order,
            summand: orbit,
        });
    }

    let total: u64 = out.iter().map(|o| o.summand).sum();
    if total != candidates.len() as u64 {
        return Err(Error::InternalConsistency(format!(
            "orbits cover {total} of {} valid partitions",
            candidates.len()
        )));
    }
    Ok(out)
}

/// `|C_{H_n}(g)| = |C_pack| · (n - v)! · (k!)^(n - v)` for the minimal
/// closed `L` representative whose support occupies the first `v` blocks.
fn split_centralizer_order(pack: &PackData, ctx: &WreathContext, v_l: usize) -> BigUint {
    let mut order = BigUint::from(pack.order) * factorial_big(ctx.n() - v_l);
    let k_fact = factorial_big(ctx.k());
    for _ in 0..ctx.n() - v_l {
        order *= &k_fact;
    }
    order
}

fn candidate_budget(k: usize, n: usize, v: usize) -> u128 {
    binomial(n, v).saturating_mul(partition_count(k, v))
}

fn binomial(n: usize, v: usize) -> u128 {
    if v > n {
        return 0;
    }
    let mut b = BigUint::one();
    for i in 0..v {
        b = b * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    b.try_into().unwrap_or(u128::MAX)
}

/// Number of partitions of `kv` points into `v` unordered `k`-subsets.
fn partition_count(k: usize, v: usize) -> u128 {
    let mut denom = factorial_big(v);
    let k_fact = factorial_big(k);
    for _ in 0..v {
        denom *= &k_fact;
    }
    (factorial_big(k * v) / denom).try_into().unwrap_or(u128::MAX)
}

/// All valid candidates: for every choice of `|V_M|` moved blocks, every
/// blockless partition of their points whose occupancy type is `M` and
/// whose preimage type through `g` is `N`.
fn enumerate_candidates(
    setting: &Setting<'_>,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    force_sequential: bool,
) -> Result<Vec<Candidate>> {
    let v_m = m.vertex_count();
    if v_m == 0 {
        // Only the untouched partition, valid when the leftover pattern
        // of g itself is N.
        let ok = preimage_type(setting, &BTreeSet::new(), &[])? == *n_ty;
        return Ok(if ok { vec![Vec::new()] } else { Vec::new() });
    }
    let combos: Vec<Vec<usize>> = (1..=setting.ctx.n()).combinations(v_m).collect();
    let chunks = exec::map_items(&combos, force_sequential, |combo| -> Result<Vec<Candidate>> {
        let moved: BTreeSet<usize> = combo.iter().copied().collect();
        let mut points = Vec::with_capacity(setting.ctx.k() * v_m);
        for &u in combo {
            points.extend(setting.ctx.block_points(u)?);
        }
        let mut found = Vec::new();
        let mut current = Vec::new();
        fill_parts(setting.ctx, &points, &mut current, &mut |parts| {
            if occupancy_type(setting.ctx, parts)? != *m {
                return Ok(());
            }
            if preimage_type(setting, &moved, parts)? != *n_ty {
                return Ok(());
            }
            found.push(parts.to_vec());
            Ok(())
        })?;
        Ok(found)
    });
    let mut out = Vec::new();
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

/// Recursively partitions `available` into `k`-subsets, skipping any part
/// that is a whole block, and hands each complete partition to `sink`.
fn fill_parts(
    ctx: &WreathContext,
    available: &[usize],
    current: &mut Vec<Vec<usize>>,
    sink: &mut impl FnMut(&[Vec<usize>]) -> Result<()>,
) -> Result<()> {
    if available.is_empty() {
        return sink(current);
    }
    let anchor = available[0];
    let k = ctx.k();
    for companions in available[1..].iter().copied().combinations(k - 1) {
        let mut part = Vec::with_capacity(k);
        part.push(anchor);
        part.extend(companions);
        // A sorted k-subset is a whole block exactly when its endpoints
        // share one.
        if ctx.part_of(part[0])? == ctx.part_of(part[k - 1])? {
            continue;
        }
        let remaining: Vec<usize> =
            available[1..].iter().copied().filter(|p| !part[1..].contains(p)).collect();
        current.push(part);
        fill_parts(ctx, &remaining, current, sink)?;
        current.pop();
    }
    Ok(())
}

/// Type of the occupancy pattern of the moved parts over the blocks they
/// cover, with part identities as values.
fn occupancy_type(ctx: &WreathContext, parts: &[Vec<usize>]) -> Result<ModifiedType> {
    let mut per_block: HashMap<usize, Vec<usize>> = HashMap::new();
    for (id, part) in parts.iter().enumerate() {
        for &p in part {
            per_block.entry(ctx.part_of(p)?).or_default().push(id + 1);
        }
    }
    let raw: Vec<Vec<usize>> = per_block.into_values().collect();
    ModifiedType::from_raw_blocks(ctx.k(), &raw)
}

/// Type of `g1⁻¹ g` for any `g1` whose block images are the candidate:
/// untouched blocks keep their raw pattern from `g`, moved parts pull
/// back through `g`.
fn preimage_type(
    setting: &Setting<'_>,
    moved: &BTreeSet<usize>,
    parts: &[Vec<usize>],
) -> Result<ModifiedType> {
    let mut raw: Vec<Vec<usize>> = Vec::new();
    for (idx, block) in setting.g_raw.iter().enumerate() {
        if moved.contains(&(idx + 1)) {
            continue;
        }
        if block[0] != block[block.len() - 1] {
            raw.push(block.clone());
        }
    }
    for part in parts {
        let mut block: Vec<usize> = part
            .iter()
            .map(|&p| setting.ctx.part_of(setting.g_inv.apply(p)))
            .collect::<Result<_>>()?;
        block.sort_unstable();
        if block[0] != block[block.len() - 1] {
            raw.push(block);
        }
    }
    ModifiedType::from_raw_blocks(setting.ctx.k(), &raw)
}

/// Generators of `C_{H_n}(g)`: the support centralizer's generators plus
/// full wreath freedom on the blocks past the support.
fn centralizer_generators(setting: &Setting<'_>, pack: &PackData) -> Result<Vec<Permutation>> {
    let ctx = setting.ctx;
    let (k, n, degree) = (ctx.k(), ctx.n(), ctx.degree());
    let mut gens = Vec::new();
    for p in &pack.generators {
        gens.push(p.extended_to(degree)?);
    }
    for u in setting.v_l + 1..n {
        gens.push(ctx.tau(u, u + 1)?);
    }
    for u in setting.v_l + 1..=n {
        let base = k * (u - 1);
        for r in 1..k {
            let mut images: Vec<usize> = (1..=degree).collect();
            images.swap(base + r - 1, base + r);
            gens.push(Permutation::from_images(images)?);
        }
    }
    Ok(gens)
}

/// Breadth-first orbit of one candidate; marks everything it visits and
/// insists the action never leaves the valid set.
fn orbit_of(
    start: &Candidate,
    generators: &[Permutation],
    candidate_set: &HashSet<Candidate>,
    visited: &mut HashSet<Candidate>,
) -> Result<u64> {
    let mut queue: VecDeque<Candidate> = VecDeque::new();
    visited.insert(start.clone());
    queue.push_back(start.clone());
    let mut size = 0u64;
    while let Some(current) = queue.pop_front() {
        size += 1;
        for gen in generators {
            let image = apply_to_parts(gen, &current);
            if !candidate_set.contains(&image) {
                return Err(Error::InternalConsistency(
                    "centralizer action left the valid partition set".into(),
                ));
            }
            if !visited.contains(&image) {
                visited.insert(image.clone());
                queue.push_back(image);
            }
        }
    }
    Ok(size)
}

fn apply_to_parts(h: &Permutation, parts: &[Vec<usize>]) -> Candidate {
    let mut out: Candidate = parts
        .iter()
        .map(|part| {
            let mut q: Vec<usize> = part.iter().map(|&p| h.apply(p)).collect();
            q.sort_unstable();
            q
        })
        .collect();
    out.sort();
    out
}

/// A factorization `g1 g2 = g` whose block-image partition is the
/// candidate: moved blocks map onto the parts in order, the rest stay put.
fn reconstruct_pair(setting: &Setting<'_>, parts: &[Vec<usize>]) -> Result<(Permutation, Permutation)> {
    let ctx = setting.ctx;
    let mut moved: BTreeSet<usize> = BTreeSet::new();
    for part in parts {
        for &p in part {
            moved.insert(ctx.part_of(p)?);
        }
    }
    debug_assert_eq!(moved.len(), parts.len());
    let mut images: Vec<usize> = (1..=ctx.degree()).collect();
    for (&u, part) in moved.iter().zip(parts.iter()) {
        for (src, &dst) in ctx.block_points(u)?.zip(part.iter()) {
            images[src - 1] = dst;
        }
    }
    let g1 = Permutation::from_images(images)?;
    let g2 = g1.inverse().compose(&setting.g);
    Ok((g1, g2))
}

/// Support-block centralizer of the `L` representative, independent of
/// the level: order, generators, and the packed image table.
struct PackData {
    order: u64,
    generators: Vec<Permutation>,
    images: Vec<usize>,
}

type PackCache = RwLock<HashMap<(usize, String), Arc<PackData>>>;

fn pack_cache() -> &'static PackCache {
    static CACHE: OnceLock<PackCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn pack_data(l: &ModifiedType) -> Result<Arc<PackData>> {
    let key = (l.k(), l.key());
    if let Some(hit) = pack_cache().read().expect("pack cache poisoned").get(&key) {
        return Ok(hit.clone());
    }
    let data = Arc::new(build_pack_data(l)?);
    pack_cache().write().expect("pack cache poisoned").insert(key, data.clone());
    Ok(data)
}

fn build_pack_data(l: &ModifiedType) -> Result<PackData> {
    let v = l.vertex_count();
    if v == 0 {
        return Ok(PackData { order: 1, generators: Vec::new(), images: Vec::new() });
    }
    let k = l.k();
    let (g, _) = representative_of_type(l, v)?;
    let g_img = g.images();

    // How many points of Γ_u the representative sends into Γ_w; the spine
    // of any commuting element of H_v must preserve this multigraph, which
    // prunes the scan from |H_v| to |Aut| · (k!)^v.
    let mut mult = vec![vec![0u32; v]; v];
    for u in 0..v {
        for r in 0..k {
            mult[u][(g_img[k * u + r] - 1) / k] += 1;
        }
    }

    let spine_budget: u128 = (1..=v as u128).product();
    if spine_budget > PACK_SPINE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "support centralizer spine enumeration {v}! exceeds {PACK_SPINE_LIMIT}"
        )));
    }
    let spines: Vec<Vec<usize>> = (0..v)
        .permutations(v)
        .filter(|sigma| (0..v).all(|u| (0..v).all(|w| mult[sigma[u]][sigma[w]] == mult[u][w])))
        .collect();

    let block_maps: Vec<Vec<usize>> = (0..k).permutations(k).collect();
    let fillings = (block_maps.len() as u128).pow(v as u32);
    let scan = spines.len() as u128 * fillings;
    if scan > PACK_SCAN_LIMIT {
        return Err(Error::SizeLimit(format!(
            "support centralizer scan {scan} for {} exceeds {PACK_SCAN_LIMIT}",
            l.key()
        )));
    }

    let mut elements = Vec::new();
    let mut h_img = vec![0usize; k * v];
    for sigma in &spines {
        for code in 0..fillings as usize {
            let mut rest = code;
            for u in 0..v {
                let map = &block_maps[rest % block_maps.len()];
                rest /= block_maps.len();
                let base = k * sigma[u];
                for r in 0..k {
                    h_img[k * u + r] = base + map[r] + 1;
                }
            }
            let commutes = (0..k * v).all(|x| h_img[g_img[x] - 1] == g_img[h_img[x] - 1]);
            if commutes {
                elements.push(Permutation::from_images(h_img.clone())?);
            }
        }
    }
    let generators = small_generating_set(&elements);
    Ok(PackData { order: elements.len() as u64, generators, images: g_img.to_vec() })
}

/// A small generating set of the subgroup listed in `elements` (which is
/// closed under composition and contains the identity).
fn small_generating_set(elements: &[Permutation]) -> Vec<Permutation> {
    let mut generators: Vec<Permutation> = Vec::new();
    let mut generated: HashSet<Vec<usize>> = HashSet::new();
    let Some(first) = elements.first() else {
        return generators;
    };
    generated.insert(Permutation::identity(first.degree()).images().to_vec());
    for e in elements {
        if generated.contains(e.images()) {
            continue;
        }
        generators.push(e.clone());
        let mut queue: VecDeque<Vec<usize>> = generated.iter().cloned().collect();
        while let Some(images) = queue.pop_front() {
            let x = Permutation::from_images(images).expect("closure holds permutations");
            for gen in &generators {
                let y = x.compose(gen);
                if generated.insert(y.images().to_vec()) {
                    queue.push_back(y.images().to_vec());
                }
            }
        }
    }
    debug_assert_eq!(generated.len(), elements.len());
    generators
}
