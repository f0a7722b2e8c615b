//! Collared tiles: a tile together with the prototiles and relative positions
//! of every tile touching it.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::bratteli::{Node, SupertileTree};
use crate::geometry::{touches, BBox, Vector, EPS};
use crate::matrix::IntMatrix;
use crate::substitution::TypeHFamily;
use crate::{Error, Result};

/// Identity of a collared class: centre prototile and snapped neighbour offsets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CollarKey {
    pub center: usize,
    /// `(dx, dy, prototile)` on the snapping grid, sorted.
    pub neighbors: Vec<(i64, i64, usize)>,
}

/// A class with one representative collar in exact coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollaredClass {
    pub key: CollarKey,
    pub neighbors: Vec<(usize, Vector)>,
}

/// Stabilized list of collared classes, closed under the rules of `alphabet`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollaredTileSet {
    pub classes: Vec<CollaredClass>,
    pub alphabet: Vec<usize>,
    /// Closure rounds until no new class appeared.
    pub rounds: usize,
    pub warnings: Vec<String>,
    #[serde(skip)]
    index: HashMap<CollarKey, usize>,
    /// `children[rule][class]`: `(branch, child class)` in the order of `branches_into`.
    children: Vec<Vec<Vec<(usize, usize)>>>,
}

impl CollaredTileSet {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn lookup(&self, key: &CollarKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn center(&self, class: usize) -> usize {
        self.classes[class].key.center
    }

    /// Children of a class under `rule`, or `None` for rules outside the alphabet.
    pub fn children(&self, rule: usize, class: usize) -> Option<&[(usize, usize)]> {
        self.children.get(rule).filter(|c| !c.is_empty()).map(|c| c[class].as_slice())
    }
}

/// Spatial hash over placed tiles for neighbour queries.
pub struct NeighborIndex<'a> {
    family: &'a TypeHFamily,
    tiles: &'a [(usize, Vector)],
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
    boxes: Vec<BBox>,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(family: &'a TypeHFamily, tiles: &'a [(usize, Vector)]) -> Self {
        let cell = 2.0 * family.max_diameter();
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, (_, t)) in tiles.iter().enumerate() {
            grid.entry(cell_of(*t, cell)).or_default().push(i);
        }
        let boxes = family.prototiles.iter().map(|p| p.shape.bbox()).collect();
        NeighborIndex { family, tiles, cell, grid, boxes }
    }

    /// Indices of the tiles touching tile `i`, excluding `i`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let (p, t) = self.tiles[i];
        let (cx, cy) = cell_of(t, self.cell);
        let own = self.boxes[p].transformed(1.0, t);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.grid.get(&(cx + dx, cy + dy)) {
                    for &j in list {
                        let (q, u) = self.tiles[j];
                        if j != i && own.overlaps(&self.boxes[q].transformed(1.0, u), EPS) && touches(self.family.shape(p), t, self.family.shape(q), u, EPS) {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn collar(&self, i: usize) -> CollaredClass {
        let (p, t) = self.tiles[i];
        let neighbors: Vec<(usize, Vector)> = self.neighbors(i).into_iter().map(|j| (self.tiles[j].0, self.tiles[j].1 - t)).collect();
        make_class(p, neighbors)
    }
}

fn cell_of(t: Vector, cell: f64) -> (i64, i64) {
    ((t.x / cell).floor() as i64, (t.y / cell).floor() as i64)
}

pub fn make_class(center: usize, mut neighbors: Vec<(usize, Vector)>) -> CollaredClass {
    neighbors.sort_by_key(|(q, v)| {
        let (x, y) = v.snapped();
        (x, y, *q)
    });
    let key = CollarKey {
        center,
        neighbors: neighbors
            .iter()
            .map(|(q, v)| {
                let (x, y) = v.snapped();
                (x, y, *q)
            })
            .collect(),
    };
    CollaredClass { key, neighbors }
}

/// Collars of the children of `class` under `rule`, in the order of `branches_into(center)`.
fn substitute(family: &TypeHFamily, class: &CollaredClass, rule: usize) -> Vec<(usize, CollaredClass)> {
    let r = &family.rules[rule];
    let inv = 1.0 / r.theta;
    let mut tiles: Vec<(usize, Vector)> = Vec::new();
    let mut centre_children = Vec::new();
    for k in r.branches_into(class.key.center) {
        centre_children.push((k, tiles.len()));
        tiles.push((r.branches[k].source, inv * r.branches[k].offset));
    }
    for (q, p) in &class.neighbors {
        for k in r.branches_into(*q) {
            tiles.push((r.branches[k].source, inv * (*p + r.branches[k].offset)));
        }
    }
    let idx = NeighborIndex::new(family, &tiles);
    centre_children.into_iter().map(|(k, i)| (k, idx.collar(i))).collect()
}

/// Collars of the leaves of one supertile that do not touch its boundary.
fn interior_collars(family: &TypeHFamily, tree: &SupertileTree, top: usize) -> Vec<CollaredClass> {
    let root = Node { level: tree.depth(), proto: top, translation: Vector::ZERO };
    let support = tree.support(&root);
    let tiles: Vec<(usize, Vector)> = tree.leaves(&root).into_iter().map(|t| (t.proto, t.translation)).collect();
    let idx = NeighborIndex::new(family, &tiles);
    (0..tiles.len())
        .filter(|&i| support.boundary_gap(&family.shape(tiles[i].0).translated(tiles[i].1)) > EPS)
        .map(|i| idx.collar(i))
        .collect()
}

fn words(alphabet: &[usize], len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| alphabet.iter().map(move |&a| [w.clone(), vec![a]].concat())).collect();
    }
    out
}

/// Collared classes of tilings built from rules in `alphabet`.
///
/// Classes are seeded from the interiors of all level-`seed_depth` supertiles and
/// closed under substitution; the result is confirmed against the interiors of
/// level-`seed_depth + 1` supertiles. Classes are in lexicographic key order.
pub fn collared_tiles(family: &TypeHFamily, alphabet: &[usize], seed_depth: usize, max_rounds: usize) -> Result<CollaredTileSet> {
    let mut alphabet = alphabet.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    let mut found: HashMap<CollarKey, CollaredClass> = HashMap::new();
    let mut frontier: Vec<CollarKey> = Vec::new();
    let add = |c: CollaredClass, found: &mut HashMap<CollarKey, CollaredClass>, frontier: &mut Vec<CollarKey>| {
        if !found.contains_key(&c.key) {
            frontier.push(c.key.clone());
            found.insert(c.key.clone(), c);
        }
    };
    let mut depth = seed_depth.max(1);
    loop {
        for w in words(&alphabet, depth) {
            let tree = SupertileTree::new(family, &w);
            for top in 0..family.m() {
                for c in interior_collars(family, &tree, top) {
                    add(c, &mut found, &mut frontier);
                }
            }
        }
        if !found.is_empty() {
            break;
        }
        depth += 1;
        if depth > seed_depth + 4 {
            return Err(Error::NotStabilized(0));
        }
    }
    let mut rounds = 0;
    let mut verified = false;
    loop {
        while !frontier.is_empty() {
            rounds += 1;
            if rounds > max_rounds {
                return Err(Error::NotStabilized(max_rounds));
            }
            let batch = std::mem::take(&mut frontier);
            for key in batch {
                let class = found[&key].clone();
                for &r in &alphabet {
                    for (_, c) in substitute(family, &class, r) {
                        add(c, &mut found, &mut frontier);
                    }
                }
            }
        }
        if verified {
            break;
        }
        verified = true;
        for w in words(&alphabet, depth + 1) {
            let tree = SupertileTree::new(family, &w);
            for top in 0..family.m() {
                for c in interior_collars(family, &tree, top) {
                    add(c, &mut found, &mut frontier);
                }
            }
        }
        if !frontier.is_empty() {
            verified = false;
        }
    }
    let keys: BTreeSet<CollarKey> = found.keys().cloned().collect();
    let classes: Vec<CollaredClass> = keys.into_iter().map(|k| found.remove(&k).unwrap()).collect();
    let index: HashMap<CollarKey, usize> = classes.iter().enumerate().map(|(i, c)| (c.key.clone(), i)).collect();
    let mut children = vec![Vec::new(); family.n_rules()];
    for &r in &alphabet {
        children[r] = classes
            .iter()
            .map(|c| substitute(family, c, r).into_iter().map(|(k, cc)| (k, index[&cc.key])).collect())
            .collect();
    }
    let mut warnings = Vec::new();
    if classes.len() == 1 {
        warnings.push("single collared class: the tilings are periodic".to_string());
    }
    Ok(CollaredTileSet { classes, alphabet, rounds, warnings, index, children })
}

/// Entry `(j, i)` counts the children of collared class `j` inside the substitution of a class-`i` tile.
pub fn collared_matrix(set: &CollaredTileSet, rule: usize) -> Result<IntMatrix> {
    let n = set.len();
    let mut m = IntMatrix::zeros(n, n);
    for i in 0..n {
        let kids = set.children(rule, i).ok_or(Error::UnknownSymbol(format!("rule {} outside the collared alphabet", rule + 1)))?;
        for &(_, j) in kids {
            m.add_to(j, i, 1);
        }
    }
    Ok(m)
}

/// Classes of tiles `which` within `tiles`, looked up from their geometric collars.
pub fn classify(family: &TypeHFamily, set: &CollaredTileSet, tiles: &[(usize, Vector)], which: impl Iterator<Item = usize>) -> Vec<Option<usize>> {
    let idx = NeighborIndex::new(family, tiles);
    which.map(|i| set.lookup(&idx.collar(i).key)).collect()
}
