//! Supertile hierarchies with one memoized prototype per (level, type).

use rayon::prelude::*;

use crate::geometry::{BBox, PlacedTile, TileShape, Vector};
use crate::substitution::TypeHFamily;

/// A child of a supertile prototype, positioned relative to the parent's anchor.
#[derive(Clone, Debug)]
pub struct ChildSlot {
    pub proto: usize,
    pub branch: usize,
    pub offset: Vector,
}

#[derive(Clone, Debug)]
pub struct SupertileProto {
    pub children: Vec<ChildSlot>,
    /// Number of level-0 tiles of each prototile inside the supertile.
    pub leaf_counts: Vec<f64>,
}

/// A placed supertile: the level-`level` supertile of type `proto` with anchor at `translation`.
/// Its support is `scale(level)·A_proto + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub level: usize,
    pub proto: usize,
    pub translation: Vector,
}

/// Supertile prototypes for the word `x_1..x_K`.
#[derive(Clone, Debug)]
pub struct SupertileTree<'a> {
    pub family: &'a TypeHFamily,
    pub word: Vec<usize>,
    scales: Vec<f64>,
    protos: Vec<Vec<SupertileProto>>,
    proto_boxes: Vec<BBox>,
}

impl<'a> SupertileTree<'a> {
    pub fn new(family: &'a TypeHFamily, word: &[usize]) -> Self {
        let m = family.m();
        let mut scales = vec![1.0];
        for &r in word {
            let s = scales.last().unwrap() / family.rules[r].theta;
            scales.push(s);
        }
        let mut protos: Vec<Vec<SupertileProto>> = vec![(0..m)
            .map(|v| {
                let mut leaf_counts = vec![0.0; m];
                leaf_counts[v] = 1.0;
                SupertileProto { children: Vec::new(), leaf_counts }
            })
            .collect()];
        for (l, &r) in word.iter().enumerate() {
            let level = l + 1;
            let rule = &family.rules[r];
            let below = &protos[level - 1];
            let s = scales[level];
            let row: Vec<SupertileProto> = (0..m)
                .into_par_iter()
                .map(|v| {
                    let children: Vec<ChildSlot> = rule
                        .branches_into(v)
                        .map(|k| {
                            let b = &rule.branches[k];
                            ChildSlot { proto: b.source, branch: k, offset: s * b.offset }
                        })
                        .collect();
                    let mut leaf_counts = vec![0.0; m];
                    for c in &children {
                        for (acc, x) in leaf_counts.iter_mut().zip(&below[c.proto].leaf_counts) {
                            *acc += x;
                        }
                    }
                    SupertileProto { children, leaf_counts }
                })
                .collect();
            protos.push(row);
        }
        let proto_boxes = family.prototiles.iter().map(|p| p.shape.bbox()).collect();
        SupertileTree { family, word: word.to_vec(), scales, protos, proto_boxes }
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    /// Blow-up factor `θ_(level)^{-1}`.
    pub fn scale(&self, level: usize) -> f64 {
        self.scales[level]
    }

    pub fn proto(&self, level: usize, v: usize) -> &SupertileProto {
        &self.protos[level][v]
    }

    pub fn leaf_count(&self, node: &Node) -> f64 {
        self.protos[node.level][node.proto].leaf_counts.iter().sum()
    }

    pub fn children<'s>(&'s self, node: &Node) -> impl Iterator<Item = (usize, Node)> + 's {
        let t = node.translation;
        let level = node.level;
        let slots: &'s [ChildSlot] = if level == 0 { &[] } else { &self.protos[level][node.proto].children };
        slots.iter().map(move |c| (c.branch, Node { level: level - 1, proto: c.proto, translation: t + c.offset }))
    }

    pub fn support(&self, node: &Node) -> TileShape {
        self.family.shape(node.proto).transformed(self.scales[node.level], node.translation)
    }

    pub fn support_bbox(&self, node: &Node) -> BBox {
        self.proto_boxes[node.proto].transformed(self.scales[node.level], node.translation)
    }

    /// Level-0 tiles of `node` in child order.
    pub fn leaves(&self, node: &Node) -> Vec<PlacedTile> {
        let mut out = Vec::with_capacity(self.leaf_count(node) as usize);
        self.visit_leaves(node, &mut |_| true, &mut |n| out.push(PlacedTile::new(n.proto, n.translation)));
        out
    }

    /// Depth-first walk that descends only into nodes accepted by `keep`.
    pub fn visit_leaves(&self, node: &Node, keep: &mut impl FnMut(&Node) -> bool, f: &mut impl FnMut(&Node)) {
        if !keep(node) {
            return;
        }
        if node.level == 0 {
            f(node);
            return;
        }
        for (_, c) in self.children(node) {
            self.visit_leaves(&c, keep, f);
        }
    }

    /// Leaves of `roots` whose bounding boxes meet `query` (inflated by `tol`).
    pub fn leaves_near(&self, roots: &[Node], query: &BBox, tol: f64, f: &mut impl FnMut(&Node)) {
        for r in roots {
            self.visit_leaves(r, &mut |n| self.support_bbox(n).overlaps(query, tol), f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn memoized_counts_follow_matrix_powers() {
        let f = fixtures::fib1d();
        let t = SupertileTree::new(&f, &[0; 6]);
        let counts: Vec<f64> = (0..=6).map(|l| t.proto(l, 0).leaf_counts.iter().sum()).collect();
        assert_eq!(counts, vec![1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0]);
        assert_eq!(t.proto(3, 0).leaf_counts, vec![3.0, 2.0]);
    }

    #[test]
    fn leaves_tile_the_support() {
        let f = fixtures::prod2d();
        let t = SupertileTree::new(&f, &[0, 1]);
        let root = Node { level: 2, proto: 1, translation: Vector::new(0.3, -0.2) };
        let leaves = t.leaves(&root);
        assert_eq!(leaves.len(), 256);
        let vol: f64 = leaves.iter().map(|l| f.shape(l.proto).volume()).sum();
        assert!((vol - t.support(&root).volume()).abs() < 1e-9);
    }
}
