use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::tree::{Node, SupertileTree};
use super::BratteliPath;
use crate::geometry::{PlacedTile, TileShape, Vector};
use crate::substitution::TypeHFamily;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupertileRecord {
    pub proto: usize,
    /// Anchor of the supertile; its support is `θ_(ℓ)^{-1}·A_proto + translation`.
    pub translation: Vector,
    /// Indices into the level below (tiles for level 1).
    pub children: Vec<usize>,
}

/// A finite patch with its supertile grouping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchWindow {
    pub dim: usize,
    /// Rules `x_1..x_k` of the retained levels.
    pub word: Vec<usize>,
    pub tiles: Vec<PlacedTile>,
    /// `levels[ℓ-1]` holds the level-`ℓ` supertiles.
    pub levels: Vec<Vec<SupertileRecord>>,
    pub origin_path: Option<BratteliPath>,
    /// Index of the tile containing the origin.
    pub origin_tile: usize,
    /// Scale of level-`ℓ` supports relative to level 0, for `ℓ = 0..=levels.len()`.
    pub scales: Vec<f64>,
}

impl PatchWindow {
    pub fn translated(&self, t: Vector) -> PatchWindow {
        let mut p = self.clone();
        for tile in &mut p.tiles {
            tile.translation += t;
        }
        for level in &mut p.levels {
            for s in level {
                s.translation += t;
            }
        }
        p
    }

    /// Snapped `(prototile, x, y)` keys of all tiles.
    pub fn tile_keys(&self) -> BTreeSet<(usize, i64, i64)> {
        self.tiles.iter().map(|t| t.key()).collect()
    }

    /// Support of the top supertile (or the single tile of a level-0 patch).
    pub fn support(&self, family: &TypeHFamily) -> TileShape {
        match self.levels.last() {
            Some(top) if top.len() == 1 => family.shape(top[0].proto).transformed(*self.scales.last().unwrap(), top[0].translation),
            _ => family.shape(self.tiles[0].proto).translated(self.tiles[0].translation),
        }
    }

    /// One JSON object per tile: `{"proto": id, "collared": class|null, "x": [..]}`.
    pub fn write_jsonl(&self, family: &TypeHFamily, mut w: impl Write) -> std::io::Result<()> {
        for t in &self.tiles {
            let line = serde_json::json!({
                "proto": family.prototiles[t.proto].id,
                "collared": t.collared,
                "x": t.translation.coords(self.dim),
            });
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct TileLine {
    proto: String,
    collared: Option<usize>,
    x: Vec<f64>,
}

pub fn read_jsonl(family: &TypeHFamily, r: impl BufRead) -> Result<Vec<PlacedTile>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let t: TileLine = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        let proto = family.prototile_index(&t.proto).ok_or(Error::UnknownPrototile { id: t.proto.clone(), line: i + 1 })?;
        if t.x.len() != family.dim {
            return Err(Error::DimensionMismatch { expected: family.dim, found: t.x.len() });
        }
        out.push(PlacedTile { proto, translation: Vector::from_slice(&t.x)?, collared: t.collared });
    }
    Ok(out)
}

/// The `k`-th approximant `f_{ē|k}^{-1}(A_{r(ē|k)})`, placed so the tile indexed by `ē|_k` has its anchor at the origin.
pub fn approximant(family: &TypeHFamily, path: &BratteliPath, k: usize) -> Result<PatchWindow> {
    if k > path.len() {
        return Err(Error::PathTooShort { requested: k, available: path.len() });
    }
    path.check(family)?;
    let tree = SupertileTree::new(family, &path.word[..k]);
    let root = Node { level: k, proto: path.vertex(k), translation: path.root_translation(family, k) };
    let mut patch = PatchWindow {
        dim: family.dim,
        word: path.word[..k].to_vec(),
        tiles: Vec::new(),
        levels: vec![Vec::new(); k],
        origin_path: Some(path.prefix(k)),
        origin_tile: usize::MAX,
        scales: (0..=k).map(|l| tree.scale(l)).collect(),
    };
    build(&tree, &root, Some(path), &mut patch);
    Ok(patch)
}

fn build(tree: &SupertileTree, node: &Node, on_path: Option<&BratteliPath>, patch: &mut PatchWindow) -> usize {
    if node.level == 0 {
        if on_path.is_some() {
            patch.origin_tile = patch.tiles.len();
        }
        patch.tiles.push(PlacedTile::new(node.proto, node.translation));
        return patch.tiles.len() - 1;
    }
    let children: Vec<usize> = tree
        .children(node)
        .map(|(branch, c)| {
            let follow = on_path.filter(|p| p.edges[node.level - 1].branch == branch);
            build(tree, &c, follow, patch)
        })
        .collect();
    let level = &mut patch.levels[node.level - 1];
    level.push(SupertileRecord { proto: node.proto, translation: node.translation, children });
    level.len() - 1
}

/// `P_0(ē) ⊂ P_1(ē) ⊂ … ⊂ P_{k_max}(ē)`.
pub fn nested_expand(family: &TypeHFamily, path: &BratteliPath, k_max: usize) -> Result<Vec<PatchWindow>> {
    (0..=k_max).map(|k| approximant(family, path, k)).collect()
}

/// Replaces each level-1 supertile by its type, scaled by `θ_{x_1}`; the result lives over `σ(x)`.
pub fn renormalize_patch(family: &TypeHFamily, patch: &PatchWindow) -> Result<PatchWindow> {
    let first = patch.levels.first().ok_or(Error::NoGrouping)?;
    let theta = family.rules[patch.word[0]].theta;
    let tiles = first.iter().map(|s| PlacedTile::new(s.proto, theta * s.translation)).collect();
    let levels = patch.levels[1..]
        .iter()
        .map(|lv| lv.iter().map(|s| SupertileRecord { proto: s.proto, translation: theta * s.translation, children: s.children.clone() }).collect())
        .collect();
    let origin_tile = first.iter().position(|s| s.children.contains(&patch.origin_tile)).unwrap_or(usize::MAX);
    let origin_path = patch.origin_path.as_ref().map(|p| {
        let mut q = p.clone();
        q.word.remove(0);
        let e = q.edges.remove(0);
        q.start = e.target;
        for e in &mut q.edges {
            e.level -= 1;
        }
        q
    });
    Ok(PatchWindow {
        dim: patch.dim,
        word: patch.word[1..].to_vec(),
        tiles,
        levels,
        origin_path,
        origin_tile,
        scales: patch.scales[1..].iter().map(|s| s * theta).collect(),
    })
}
