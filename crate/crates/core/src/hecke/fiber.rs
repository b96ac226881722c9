//! Explicit fiber orbits of the two-sided action, and stabilizer scans.
//!
//! The pairs `(g1, g2)` with `type(g1) = M`, `type(g2) = N`, and `g1 g2`
//! in the double coset of `g` carry the action `(h1, h2) · (g1, g2) =
//! (h1 g1 h2⁻¹, h2 g2 h1⁻¹)` of `H_n × H_n`; the product moves by
//! conjugation, so the fiber is a union of orbits.  This module builds
//! that fiber literally and decomposes it by breadth-first search, which
//! is only feasible at small degree but makes no structural assumptions;
//! the centralizer engine's orbit bookkeeping is checked against it.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::cosets::{coset_size, is_closed, is_minimal};
use crate::error::{Error, Result};
use crate::perm::{factorial, for_each_permutation_in_range, Permutation, WreathContext};
use crate::type_graph::{modified_type, representative_of_type, ModifiedType};

/// Largest degree `kn` for which fibers are enumerated pairwise.
pub const FIBER_DEGREE_LIMIT: usize = 8;

/// Largest fiber size admitted to the breadth-first decomposition.
pub const FIBER_PAIR_LIMIT: u64 = 2_000_000;

/// Largest `|H_n|` for the direct stabilizer scan.
pub const STABILIZER_SCAN_LIMIT: u64 = 2_000_000;

/// One orbit of the two-sided action on a product fiber.
#[derive(Clone, Debug)]
pub struct FiberOrbit {
    pub g1: Permutation,
    pub g2: Permutation,
    pub orbit_size: BigUint,
    /// Stabilizer order of the pair, equal to
    /// `|C_{H_n}(g1 g2) ∩ g1 H_n g1⁻¹|`; the two fields multiply to
    /// `|H_n|²`.
    pub stabilizer_size: BigUint,
}

/// Decomposes the fiber over the double coset of `g` (which must be the
/// minimal representative with closed components) into orbits of the
/// two-sided action, by explicit breadth-first search.
pub fn fiber_orbits(
    ctx: &WreathContext,
    m: &ModifiedType,
    n_ty: &ModifiedType,
    g: &Permutation,
) -> Result<Vec<FiberOrbit>> {
    let l = modified_type(ctx, g)?;
    super::check_triple(ctx, m, n_ty, &l)?;
    if !is_minimal(ctx, g)? || !is_closed(ctx, g)? {
        return Err(Error::Domain(
            "fiber decomposition expects the distinguished coset representative".into(),
        ));
    }
    let degree = ctx.degree();
    if degree > FIBER_DEGREE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "fiber enumeration at kn = {degree} exceeds {FIBER_DEGREE_LIMIT}"
        )));
    }
    let order = ctx
        .subgroup_order()
        .to_u64()
        .ok_or_else(|| Error::SizeLimit("|H_n| does not fit in u64".into()))?;

    // The double coset of g meets the fiber only through its conjugacy
    // class under H_n (the product of a fiber pair conjugates, it never
    // leaves the class).
    let mut class: BTreeSet<Vec<usize>> = BTreeSet::new();
    for h in ctx.enumerate_wreath() {
        class.insert(g.conjugated_by(&h).images().to_vec());
    }

    let m_count = coset_size(ctx, &representative_of_type(m, ctx.n())?.0)?
        .to_u64()
        .ok_or_else(|| Error::SizeLimit("class size does not fit in u64".into()))?;
    let estimate = m_count.saturating_mul(class.len() as u64);
    if estimate > FIBER_PAIR_LIMIT {
        return Err(Error::SizeLimit(format!(
            "fiber estimate {estimate} exceeds {FIBER_PAIR_LIMIT}"
        )));
    }

    let mut fiber: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let mut failure = None;
    for_each_permutation_in_range(degree, 0, factorial(degree), |images| {
        if failure.is_some() {
            return;
        }
        let result = (|| -> Result<()> {
            let g1 = Permutation::from_images(images.to_vec())?;
            if &modified_type(ctx, &g1)? != m {
                return Ok(());
            }
            let g1_inv = g1.inverse();
            for x in &class {
                let g2_images: Vec<usize> = x.iter().map(|&p| g1_inv.apply(p)).collect();
                let g2 = Permutation::from_images(g2_images)?;
                if &modified_type(ctx, &g2)? == n_ty {
                    fiber.insert((g1.images().to_vec(), g2.images().to_vec()));
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let generators: Vec<(Permutation, Permutation)> = ctx
        .wreath_generators()
        .into_iter()
        .map(|y| {
            let inv = y.inverse();
            (y, inv)
        })
        .collect();

    let order_big = BigUint::from(order);
    let order_sq = &order_big * &order_big;
    let mut orbits = Vec::new();
    let mut visited: HashSet<(Vec<usize>, Vec<usize>)> = HashSet::new();
    let mut covered = 0u64;
    for pair in &fiber {
        if visited.contains(pair) {
            continue;
        }
        let mut queue: VecDeque<(Vec<usize>, Vec<usize>)> = VecDeque::new();
        visited.insert(pair.clone());
        queue.push_back(pair.clone());
        let mut size = 0u64;
        while let Some((a, b)) = queue.pop_front() {
            size += 1;
            for (y, y_inv) in &generators {
                // (h1, h2) = (y, id) and (id, y) generate the whole of
                // H × H; the action mixes the sides.
                let moves = [
                    (comp(y.images(), &a), comp(&b, y_inv.images())),
                    (comp(&a, y_inv.images()), comp(y.images(), &b)),
                ];
                for next in moves {
                    if !fiber.contains(&next) {
                        return Err(Error::InternalConsistency(
                            "two-sided action left the fiber".into(),
                        ));
                    }
                    if !visited.contains(&next) {
                        visited.insert(next.clone());
                        queue.push_back(next);
                    }
                }
            }
        }
        covered += size;
        let size_big = BigUint::from(size);
        let (stab, rem) = order_sq.div_rem(&size_big);
        if !rem.is_zero() {
            return Err(Error::InternalConsistency(format!(
                "orbit size {size} does not divide |H_n|²"
            )));
        }
        orbits.push(FiberOrbit {
            g1: Permutation::from_images(pair.0.clone())?,
            g2: Permutation::from_images(pair.1.clone())?,
            orbit_size: size_big,
            stabilizer_size: stab,
        });
    }
    if covered != fiber.len() as u64 {
        return Err(Error::InternalConsistency(format!(
            "orbits cover {covered} of {} fiber pairs",
            fiber.len()
        )));
    }
    Ok(orbits)
}

/// `(a ∘ b)` on image tables, `a` applied second.
fn comp(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x - 1]).collect()
}

/// `|C_{H_n}(g1 g2) ∩ g1 H_n g1⁻¹|` by a direct scan of `H_n`.
pub fn stabilizer_size(ctx: &WreathContext, g1: &Permutation, g2: &Permutation) -> Result<u64> {
    if g1.degree() != ctx.degree() || g2.degree() != ctx.degree() {
        return Err(Error::DegreeMismatch(format!(
            "stabilizer scan needs degree {} permutations, got {} and {}",
            ctx.degree(),
            g1.degree(),
            g2.degree()
        )));
    }
    if ctx.subgroup_order() > BigUint::from(STABILIZER_SCAN_LIMIT) {
        return Err(Error::SizeLimit(format!(
            "stabilizer scan over |H_n| = {} exceeds {STABILIZER_SCAN_LIMIT}",
            ctx.subgroup_order()
        )));
    }
    let product = g1.compose(g2);
    let g1_inv = g1.inverse();
    let mut count = 0u64;
    for h in ctx.enumerate_wreath() {
        if h.compose(&product) != product.compose(&h) {
            continue;
        }
        let pulled = g1_inv.compose(&h).compose(g1);
        if ctx.is_wreath_member(&pulled)? {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosets::minimal_representative;
    use crate::hecke::centralizer_orbit_summands;
    use crate::perm::tests::random_perm;
    use crate::type_graph::enumerate_modified_types;

    fn ctx(k: usize, n: usize) -> WreathContext {
        WreathContext::new(k, n).unwrap()
    }

    fn ty(k: usize, key: &str) -> ModifiedType {
        ModifiedType::parse_key(k, key).unwrap()
    }

    fn members(c: &WreathContext, t: &ModifiedType) -> Vec<Permutation> {
        let mut out = Vec::new();
        for_each_permutation_in_range(c.degree(), 0, factorial(c.degree()), |images| {
            let p = Permutation::from_images(images.to_vec()).unwrap();
            if &modified_type(c, &p).unwrap() == t {
                out.push(p);
            }
        })
        .unwrap();
        out
    }

    #[test]
    fn empty_fiber_is_one_orbit_of_inverse_pairs() {
        let c = ctx(2, 2);
        let e = ty(2, "v0:");
        let orbits = fiber_orbits(&c, &e, &e, &Permutation::identity(4)).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].orbit_size, BigUint::from(8u32));
        assert_eq!(orbits[0].stabilizer_size, BigUint::from(8u32));
        assert!(orbits[0].g1.compose(&orbits[0].g2).is_identity());
    }

    #[test]
    fn frozen_orbits_for_two_blocks_of_size_two() {
        let c = ctx(2, 2);
        let a = ty(2, "v2:1.2|1.2");
        let (g, _) = representative_of_type(&a, 2).unwrap();

        let orbits = fiber_orbits(&c, &a, &a, &g).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].orbit_size, BigUint::from(32u32));
        assert_eq!(orbits[0].stabilizer_size, BigUint::from(2u32));

        let orbits = fiber_orbits(&c, &a, &a, &Permutation::identity(4)).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].orbit_size, BigUint::from(16u32));
        assert_eq!(orbits[0].stabilizer_size, BigUint::from(4u32));
    }

    #[test]
    fn orbit_sizes_sum_to_the_directly_counted_fiber() {
        for (k, n) in [(2, 2), (3, 2)] {
            let c = ctx(k, n);
            let types = enumerate_modified_types(k, n).unwrap();
            let order_sq = c.subgroup_order() * c.subgroup_order();
            for m in &types {
                for n_ty in &types {
                    for l in &types {
                        let (g, _) = representative_of_type(l, n).unwrap();
                        let mut class: HashSet<Vec<usize>> = HashSet::new();
                        for h in c.enumerate_wreath() {
                            class.insert(g.conjugated_by(&h).images().to_vec());
                        }
                        let mut direct = 0u64;
                        for g1 in members(&c, m) {
                            for g2 in members(&c, n_ty) {
                                if class.contains(g1.compose(&g2).images()) {
                                    direct += 1;
                                }
                            }
                        }
                        let orbits = fiber_orbits(&c, m, n_ty, &g).unwrap();
                        let total: BigUint = orbits.iter().map(|o| o.orbit_size.clone()).sum();
                        assert_eq!(total, BigUint::from(direct), "({m}, {n_ty}, {l})");
                        for o in &orbits {
                            assert_eq!(&o.orbit_size * &o.stabilizer_size, order_sq);
                            assert_eq!(
                                BigUint::from(stabilizer_size(&c, &o.g1, &o.g2).unwrap()),
                                o.stabilizer_size
                            );
                        }
                    }
                }
            }
        }
    }

    /// The two engines see the same orbit census: pair orbit sizes from
    /// the explicit decomposition match `|H|² · (partition orbit) / |C|`
    /// from the centralizer route, stabilizers included.
    #[test]
    fn matches_centralizer_orbit_census() {
        for (k, n) in [(2, 2), (2, 3), (3, 2)] {
            let c = ctx(k, n);
            let types = enumerate_modified_types(k, n).unwrap();
            let order_sq = c.subgroup_order() * c.subgroup_order();
            for m in &types {
                for n_ty in &types {
                    for l in &types {
                        let (g, _) = representative_of_type(l, n).unwrap();
                        let mut explicit: Vec<(BigUint, BigUint)> = fiber_orbits(&c, m, n_ty, &g)
                            .unwrap()
                            .into_iter()
                            .map(|o| (o.orbit_size, o.stabilizer_size))
                            .collect();
                        let mut derived: Vec<(BigUint, BigUint)> =
                            centralizer_orbit_summands(&c, m, n_ty, l)
                                .unwrap()
                                .into_iter()
                                .map(|o| {
                                    let pair_orbit = &order_sq / &o.stabilizer_order;
                                    (pair_orbit, o.stabilizer_order)
                                })
                                .collect();
                        explicit.sort();
                        derived.sort();
                        assert_eq!(explicit, derived, "census for ({m}, {n_ty}, {l})");
                    }
                }
            }
        }
    }

    #[test]
    fn stabilizer_equals_two_sided_pair_stabilizer() {
        let c = ctx(2, 2);
        let a = ty(2, "v2:1.2|1.2");
        let (g, _) = representative_of_type(&a, 2).unwrap();
        for o in fiber_orbits(&c, &a, &a, &g).unwrap() {
            let elements: Vec<Permutation> = c.enumerate_wreath().collect();
            let mut direct = 0u64;
            for h1 in &elements {
                for h2 in &elements {
                    let moved1 = h1.compose(&o.g1).compose(&h2.inverse());
                    let moved2 = h2.compose(&o.g2).compose(&h1.inverse());
                    if moved1 == o.g1 && moved2 == o.g2 {
                        direct += 1;
                    }
                }
            }
            assert_eq!(BigUint::from(direct), o.stabilizer_size);
        }
    }

    /// For minimal g1 and minimal g1 g2 the stabilizer splits across
    /// `T = support(g1 g2) ∪ support(g1)`: the count over `H_T` times a
    /// full wreath order on the remaining blocks.
    #[test]
    fn stabilizer_splits_along_the_joint_support() {
        for (k, n) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
            let c = ctx(k, n);
            for seed in 0..6 {
                let g1 = minimal_representative(&c, &random_perm(c.degree(), 100 + seed))
                    .unwrap()
                    .minimal;
                let x = minimal_representative(&c, &random_perm(c.degree(), 200 + seed))
                    .unwrap()
                    .minimal;
                let g2 = g1.inverse().compose(&x);
                assert_eq!(g1.compose(&g2), x);

                let mut joint: BTreeSet<usize> = BTreeSet::new();
                joint.extend(c.h_support(&x).unwrap().block_indices());
                joint.extend(c.h_support(&g1).unwrap().block_indices());
                let t_blocks: Vec<usize> = joint.iter().copied().collect();

                let inner = if t_blocks.is_empty() {
                    1
                } else {
                    let sub = WreathContext::new(k, t_blocks.len()).unwrap();
                    let g1_inv = g1.inverse();
                    let mut count = 0u64;
                    for h_small in sub.enumerate_wreath() {
                        let h = embed_on_blocks(&c, &t_blocks, &h_small);
                        if h.compose(&x) != x.compose(&h) {
                            continue;
                        }
                        let pulled = g1_inv.compose(&h).compose(&g1);
                        if c.is_wreath_member(&pulled).unwrap() {
                            count += 1;
                        }
                    }
                    count
                };
                let rest = n - t_blocks.len();
                let rest_order = WreathContext::new(k, rest.max(1))
                    .map(|sub| if rest == 0 { 1 } else { sub.subgroup_order().to_u64().unwrap() })
                    .unwrap_or(1);
                assert_eq!(
                    stabilizer_size(&c, &g1, &g2).unwrap(),
                    inner * rest_order,
                    "(k, n, seed) = ({k}, {n}, {seed})"
                );
            }
        }
    }

    fn embed_on_blocks(c: &WreathContext, blocks: &[usize], h: &Permutation) -> Permutation {
        let k = c.k();
        let mut images: Vec<usize> = (1..=c.degree()).collect();
        for (i, &bi) in blocks.iter().enumerate() {
            for r in 1..=k {
                let img = h.apply(k * i + r);
                let j = (img - 1) / k;
                let s = img - k * j;
                images[k * (bi - 1) + r - 1] = k * (blocks[j] - 1) + s;
            }
        }
        Permutation::from_images(images).unwrap()
    }

    #[test]
    fn rejects_unsuitable_representatives_and_degrees() {
        let c = ctx(2, 2);
        let a = ty(2, "v2:1.2|1.2");
        let not_minimal = c.tau(1, 2).unwrap();
        let err = fiber_orbits(&c, &a, &a, &not_minimal).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");

        let big = ctx(3, 3);
        let err = fiber_orbits(&big, &ty(3, "v0:"), &ty(3, "v0:"), &Permutation::identity(9))
            .unwrap_err();
        assert!(matches!(err, Error::SizeLimit(_)), "{err}");
    }
}
