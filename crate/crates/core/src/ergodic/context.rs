use std::collections::HashSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::bratteli::{BratteliPath, Node, SupertileTree};
use crate::cocycle::{CollaredTileSet, Cocycle, NeighborIndex};
use crate::geometry::{PlacedTile, Region, Relation, TileShape, Vector, EPS};
use crate::substitution::TypeHFamily;
use crate::{Error, Result};

/// A level-`K` supertile around the origin with every node's class known.
///
/// Classes are prototiles, or collared classes when a [`CollaredTileSet`] is
/// supplied; in the collared case the root is given the first class whose
/// centre matches its type, and descendants inherit classes from the
/// collared substitution.
pub struct TilingContext<'a> {
    pub family: &'a TypeHFamily,
    pub tree: SupertileTree<'a>,
    pub set: Option<&'a CollaredTileSet>,
    pub cocycle: Cocycle,
    pub path: BratteliPath,
    pub root: Node,
    pub root_class: usize,
    /// `counts[ℓ]`: column `t` holds the level-0 class counts inside a level-`ℓ` node of class `t`.
    counts: Vec<DMatrix<f64>>,
}

/// Result of hierarchical integration over a region.
#[derive(Clone, Debug, Serialize)]
pub struct Packing {
    pub value: f64,
    /// `kappa[ℓ][v]`: number of level-`ℓ` supertiles of type `v` taken inside the region.
    pub kappa: Vec<Vec<u64>>,
    /// Level-0 tiles cut by the region boundary.
    pub residual: Vec<PlacedTile>,
    /// Highest level with a taken supertile.
    pub top_level: Option<usize>,
}

impl Packing {
    pub fn level_totals(&self) -> Vec<u64> {
        self.kappa.iter().map(|k| k.iter().sum()).collect()
    }
}

impl<'a> TilingContext<'a> {
    pub fn new(family: &'a TypeHFamily, path: BratteliPath, set: Option<&'a CollaredTileSet>) -> Result<Self> {
        path.check(family)?;
        let k = path.len();
        let tree = SupertileTree::new(family, &path.word[..k]);
        let root = Node { level: k, proto: path.vertex(k), translation: path.root_translation(family, k) };
        let (cocycle, root_class) = match set {
            None => (Cocycle::uncollared(family), root.proto),
            Some(s) => {
                for &r in &path.word {
                    if !s.alphabet.contains(&r) {
                        return Err(Error::UnknownSymbol(format!("rule {} outside the collared alphabet", r + 1)));
                    }
                }
                let rc = (0..s.len()).find(|&i| s.center(i) == root.proto).ok_or(Error::UnknownCollar)?;
                (Cocycle::collared(family, s)?, rc)
            }
        };
        let c = cocycle.size;
        let mut counts = vec![DMatrix::<f64>::identity(c, c)];
        for &r in &path.word[..k] {
            let m = cocycle.matrix(r)?.to_f64();
            let next = counts.last().unwrap() * m;
            counts.push(next);
        }
        Ok(TilingContext { family, tree, set, cocycle, path, root, root_class, counts })
    }

    pub fn depth(&self) -> usize {
        self.root.level
    }

    pub fn n_classes(&self) -> usize {
        self.cocycle.size
    }

    pub fn support(&self) -> TileShape {
        self.tree.support(&self.root)
    }

    /// Level-0 class counts inside a level-`level` node of class `class`.
    pub fn class_counts(&self, level: usize, class: usize) -> Vec<f64> {
        self.counts[level].column(class).iter().copied().collect()
    }

    /// `W_ℓ = C_{x_ℓ}ᵀ ⋯ C_{x_1}ᵀ β` for `ℓ = 0..=K`.
    pub fn weights(&self, beta: &[f64]) -> Result<Vec<Vec<f64>>> {
        if beta.len() != self.n_classes() {
            return Err(Error::BasisMismatch { expected: self.n_classes(), found: beta.len() });
        }
        Ok(self.counts.iter().map(|m| (m.transpose() * nalgebra::DVector::from_column_slice(beta)).iter().copied().collect()).collect())
    }

    /// Children of a classified node with their classes.
    pub fn children(&self, node: &Node, class: usize) -> Vec<(Node, usize)> {
        match self.set {
            None => self.tree.children(node).map(|(_, c)| (c, c.proto)).collect(),
            Some(s) => {
                let rule = self.path.word[node.level - 1];
                let table = s.children(rule, class).expect("rule in alphabet");
                self.tree.children(node).zip(table).map(|((_, c), &(_, k))| (c, k)).collect()
            }
        }
    }

    /// Classes of all level-0 tiles in depth-first child order (the order of [`crate::bratteli::approximant`]).
    pub fn leaf_classes(&self) -> Vec<usize> {
        fn walk(ctx: &TilingContext, node: Node, class: usize, out: &mut Vec<usize>) {
            if node.level == 0 {
                out.push(class);
                return;
            }
            for (c, k) in ctx.children(&node, class) {
                walk(ctx, c, k, out);
            }
        }
        let mut out = Vec::new();
        walk(self, self.root, self.root_class, &mut out);
        out
    }

    pub fn covers(&self, region: &Region) -> bool {
        region_within(region, &self.support())
    }

    /// Weighted anchor count `Σ_j β_j #(class-j anchors in region)`, taking whole supertiles where possible.
    pub fn integrate(&self, beta: &[f64], region: &Region) -> Result<Packing> {
        if !self.covers(region) {
            return Err(Error::Coverage(self.depth()));
        }
        let w = self.weights(beta)?;
        let m = self.family.m();
        let mut out = Packing { value: 0.0, kappa: vec![vec![0; m]; self.depth() + 1], residual: Vec::new(), top_level: None };
        let mut stack = vec![(self.root, self.root_class)];
        while let Some((node, class)) = stack.pop() {
            let scale = self.tree.scale(node.level);
            match region.relation(self.family.shape(node.proto), scale, node.translation, EPS) {
                Relation::Outside => {}
                Relation::Inside => {
                    out.value += w[node.level][class];
                    out.kappa[node.level][node.proto] += 1;
                    out.top_level = Some(out.top_level.map_or(node.level, |l| l.max(node.level)));
                }
                Relation::Partial if node.level == 0 => {
                    if region.contains_point(node.translation, EPS) {
                        out.value += beta[class];
                    }
                    out.residual.push(PlacedTile::new(node.proto, node.translation));
                }
                Relation::Partial => stack.extend(self.children(&node, class)),
            }
        }
        Ok(out)
    }

    /// Root neighbours at level `K`, from the root's collar (empty when uncollared).
    fn root_neighbors(&self) -> Vec<Node> {
        self.set.map_or(Vec::new(), |s| neighbor_nodes(&self.tree, &self.root, &s.classes[self.root_class].neighbors))
    }

    /// Leaves with anchors in `region` and their classes, found geometrically.
    pub fn classified_leaves(&self, region: &Region) -> Result<Vec<(PlacedTile, usize)>> {
        if !self.covers(region) {
            return Err(Error::Coverage(self.depth()));
        }
        let query = region.bbox().inflate(2.0 * self.family.max_diameter());
        let mut inside = Vec::new();
        self.tree.leaves_near(&[self.root], &region.bbox(), EPS, &mut |n| {
            if region.contains_point(n.translation, EPS) {
                inside.push(PlacedTile::new(n.proto, n.translation));
            }
        });
        let Some(set) = self.set else {
            return Ok(inside.into_iter().map(|t| {
                let p = t.proto;
                (t, p)
            }).collect());
        };
        let mut context: Vec<(usize, Vector)> = inside.iter().map(|t| (t.proto, t.translation)).collect();
        let own: HashSet<(usize, i64, i64)> = inside.iter().map(|t| t.key()).collect();
        let mut roots = vec![self.root];
        roots.extend(self.root_neighbors());
        self.tree.leaves_near(&roots, &query, EPS, &mut |n| {
            let t = PlacedTile::new(n.proto, n.translation);
            if !own.contains(&t.key()) {
                context.push((n.proto, n.translation));
            }
        });
        let idx = NeighborIndex::new(self.family, &context);
        inside
            .iter()
            .enumerate()
            .map(|(i, t)| set.lookup(&idx.collar(i).key).map(|c| (t.clone(), c)).ok_or(Error::UnknownCollar))
            .collect()
    }

    /// Direct anchor summation over geometrically classified leaves.
    pub fn integrate_brute(&self, beta: &[f64], region: &Region) -> Result<f64> {
        if beta.len() != self.n_classes() {
            return Err(Error::BasisMismatch { expected: self.n_classes(), found: beta.len() });
        }
        Ok(self.classified_leaves(region)?.iter().map(|(_, c)| beta[*c]).sum())
    }
}

fn neighbor_nodes(tree: &SupertileTree, node: &Node, neighbors: &[(usize, Vector)]) -> Vec<Node> {
    let s = tree.scale(node.level);
    neighbors.iter().map(|&(q, off)| Node { level: node.level, proto: q, translation: node.translation + s * off }).collect()
}

/// Whether `region` lies in the closed shape.
pub fn region_within(region: &Region, support: &TileShape) -> bool {
    match (region, region.vertices()) {
        (Region::Disk { center, radius }, _) => support.depth(*center) >= radius - EPS,
        (_, Some(v)) => v.iter().all(|p| support.contains_point(*p, EPS)),
        _ => false,
    }
}

/// Level-0 collared class counts of the level-`word.len()` supertile of class `class`,
/// found by collaring its leaves geometrically together with the leaves of its neighbours.
/// Leaves are processed in blocks of level-`block` nodes.
pub fn geometric_class_counts(family: &TypeHFamily, set: &CollaredTileSet, word: &[usize], class: usize, block: usize) -> Result<Vec<u64>> {
    let tree = SupertileTree::new(family, word);
    let n = word.len();
    let root = Node { level: n, proto: set.center(class), translation: Vector::ZERO };
    let mut roots = vec![root];
    roots.extend(neighbor_nodes(&tree, &root, &set.classes[class].neighbors));
    let block = block.min(n);
    let mut blocks = Vec::new();
    collect_level(&tree, &root, block, &mut blocks);
    let reach = 2.0 * family.max_diameter();
    let partial: Vec<Vec<u64>> = blocks
        .par_iter()
        .map(|b| {
            let own = tree.leaves(b);
            let keys: HashSet<(usize, i64, i64)> = own.iter().map(|t| t.key()).collect();
            let mut tiles: Vec<(usize, Vector)> = own.iter().map(|t| (t.proto, t.translation)).collect();
            tree.leaves_near(&roots, &tree.support_bbox(b).inflate(reach), EPS, &mut |l| {
                if !keys.contains(&PlacedTile::new(l.proto, l.translation).key()) {
                    tiles.push((l.proto, l.translation));
                }
            });
            let idx = NeighborIndex::new(family, &tiles);
            let mut counts = vec![0u64; set.len()];
            for i in 0..own.len() {
                let c = set.lookup(&idx.collar(i).key).ok_or(Error::UnknownCollar)?;
                counts[c] += 1;
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0u64; set.len()];
    for p in partial {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    Ok(total)
}

fn collect_level(tree: &SupertileTree, node: &Node, level: usize, out: &mut Vec<Node>) {
    if node.level == level {
        out.push(*node);
        return;
    }
    for (_, c) in tree.children(node) {
        collect_level(tree, &c, level, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bratteli::PathPolicy;
    use crate::cocycle::collared_tiles;
    use crate::fixtures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leftmost(f: &TypeHFamily, k: usize) -> BratteliPath {
        BratteliPath::extend(f, &vec![0; k], 0, &PathPolicy::Leftmost)
    }

    #[test]
    fn exact_supertile_is_one_piece() {
        let f = fixtures::four1d();
        let ctx = TilingContext::new(&f, leftmost(&f, 5), None).unwrap();
        // the leftmost level-3 supertile of type a occupies [-0.5, 63.5]
        let p = ctx.integrate(&[1.0, 1.0], &Region::Interval { lo: -0.5, hi: 63.5 }).unwrap();
        assert_eq!(p.level_totals(), vec![0, 0, 0, 1, 0, 0]);
        assert_eq!(p.value, 64.0);
        assert!(p.residual.is_empty());
    }

    #[test]
    fn greedy_packing_of_72() {
        let f = fixtures::four1d();
        let ctx = TilingContext::new(&f, leftmost(&f, 5), None).unwrap();
        let region = Region::Interval { lo: -0.5, hi: 71.5 };
        let p = ctx.integrate(&[1.0, 1.0], &region).unwrap();
        assert_eq!(p.level_totals(), vec![0, 2, 0, 1, 0, 0]);
        let covered: u64 = p.level_totals().iter().enumerate().map(|(l, &k)| k * 4u64.pow(l as u32)).sum();
        assert_eq!(covered, 72);
        assert_eq!(ctx.integrate_brute(&[1.0, 1.0], &region).unwrap(), 72.0);
    }

    #[test]
    fn aligned_eigenvector_integrals() {
        let f = fixtures::four1d();
        let ctx = TilingContext::new(&f, leftmost(&f, 8), None).unwrap();
        for k in 0..=7 {
            let hi = 4f64.powi(k) - 0.5;
            let v = ctx.integrate(&[1.0, -1.0], &Region::Interval { lo: -0.5, hi }).unwrap().value;
            assert_eq!(v, 2f64.powi(k));
        }
    }

    #[test]
    fn zero_and_counting_observables() {
        let f = fixtures::fib1d();
        let ctx = TilingContext::new(&f, leftmost(&f, 12), None).unwrap();
        let r = Region::Interval { lo: 0.0, hi: 50.0 };
        assert_eq!(ctx.integrate(&[0.0, 0.0], &r).unwrap().value, 0.0);
        let n = ctx.integrate(&[1.0, 1.0], &r).unwrap().value;
        assert_eq!(n, ctx.integrate_brute(&[1.0, 1.0], &r).unwrap());
        assert!(n > 0.0);
    }

    #[test]
    fn coverage_error() {
        let f = fixtures::four1d();
        let ctx = TilingContext::new(&f, leftmost(&f, 2), None).unwrap();
        assert!(matches!(ctx.integrate(&[1.0, 1.0], &Region::Interval { lo: 0.0, hi: 100.0 }), Err(Error::Coverage(2))));
    }

    #[test]
    fn hierarchical_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (f, set_alphabet) in [(fixtures::four1d(), vec![0]), (fixtures::fib1d(), vec![0]), (fixtures::degenerate(), vec![0])] {
            let set = collared_tiles(&f, &set_alphabet, 2, 50).unwrap();
            let path = BratteliPath::extend(&f, &[0; 9], 0, &PathPolicy::Random(5));
            let ctx = TilingContext::new(&f, path, Some(&set)).unwrap();
            let beta: Vec<f64> = (0..set.len()).map(|_| rng.gen_range(-3..=3) as f64).collect();
            let support = ctx.support().bbox();
            for _ in 0..10 {
                let len = rng.gen_range(1.0..60.0);
                let lo = rng.gen_range(support.lo.x..support.hi.x - len);
                let r = Region::Interval { lo, hi: lo + len };
                assert_eq!(ctx.integrate(&beta, &r).unwrap().value, ctx.integrate_brute(&beta, &r).unwrap());
            }
        }
    }

    #[test]
    fn two_dimensional_regions() {
        let f = fixtures::prod2d();
        let set = collared_tiles(&f, &[0], 2, 50).unwrap();
        let path = BratteliPath::extend(&f, &[0; 4], 0, &PathPolicy::Cyclic(vec![1, 2]));
        let ctx = TilingContext::new(&f, path, Some(&set)).unwrap();
        let beta: Vec<f64> = (0..set.len()).map(|i| (i % 5) as f64 - 2.0).collect();
        let bb = ctx.support().bbox();
        let c = 0.5 * (bb.lo + bb.hi);
        for r in [
            Region::Box { lo: c + Vector::new(-30.2, -50.0), hi: c + Vector::new(47.5, 29.0) },
            Region::Disk { center: c + Vector::new(1.0, 2.0), radius: 40.3 },
        ] {
            assert_eq!(ctx.integrate(&beta, &r).unwrap().value, ctx.integrate_brute(&beta, &r).unwrap());
        }
    }

    #[test]
    fn leaf_classes_follow_approximant_order() {
        let f = fixtures::four1d();
        let set = collared_tiles(&f, &[0], 2, 50).unwrap();
        let path = BratteliPath::extend(&f, &[0; 4], 0, &PathPolicy::Random(2));
        let patch = crate::bratteli::approximant(&f, &path, 4).unwrap();
        let ctx = TilingContext::new(&f, path, Some(&set)).unwrap();
        let classes = ctx.leaf_classes();
        assert_eq!(classes.len(), patch.tiles.len());
        for (t, &c) in patch.tiles.iter().zip(&classes) {
            assert_eq!(set.center(c), t.proto);
        }
        // interior leaves agree with geometric collaring
        let tiles: Vec<(usize, Vector)> = patch.tiles.iter().map(|t| (t.proto, t.translation)).collect();
        let idx = NeighborIndex::new(&f, &tiles);
        for (i, &c) in classes.iter().enumerate().take(tiles.len() - 1).skip(1) {
            assert_eq!(set.lookup(&idx.collar(i).key), Some(c));
        }
    }

    #[test]
    fn geometric_counts_match_cocycle() {
        let f = fixtures::four1d();
        let set = collared_tiles(&f, &[0, 1], 2, 50).unwrap();
        let c = Cocycle::collared(&f, &set).unwrap();
        let word = [1, 0, 0, 1];
        for t in 0..set.len() {
            let geo = geometric_class_counts(&f, &set, &word, t, 2).unwrap();
            let mut e = vec![0i128; set.len()];
            for j in 0..set.len() {
                e.iter_mut().for_each(|x| *x = 0);
                e[j] = 1;
                // entry t of the transported indicator of class j counts class-j leaves
                let v = c.apply_exact(&e, &word).unwrap();
                assert_eq!(v[t], geo[j] as i128);
            }
        }
    }
}
