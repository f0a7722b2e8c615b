//! Bratteli diagrams over a rule sequence.
//!
//! Level `ℓ` edges are the branches of rule `x_ℓ`; an edge runs from its source
//! prototile (level `ℓ-1`) to its target prototile (level `ℓ`). A path
//! `e_1, e_2, …` therefore describes the origin tile, then the level-1
//! supertile containing it, and so on.

mod patch;
mod tree;

pub use patch::{approximant, nested_expand, read_jsonl, renormalize_patch, PatchWindow, SupertileRecord};
pub use tree::{ChildSlot, Node, SupertileProto, SupertileTree};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{AffineContraction, Vector, EPS};
use crate::substitution::TypeHFamily;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BratteliEdge {
    /// One-based level.
    pub level: usize,
    pub source: usize,
    pub target: usize,
    /// Index into the branch list of rule `x_level`.
    pub branch: usize,
}

/// How to pick the next edge when extending a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PathPolicy {
    /// First branch (in file order) leaving the current vertex.
    Leftmost,
    /// Uniform choice from a seeded stream.
    Random(u64),
    /// At level `ℓ`, the `pattern[ℓ mod len]`-th branch leaving the vertex (wrapping).
    Cyclic(Vec<usize>),
}

/// A finite path prefix together with the rules `x_1..x_k` it was built on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BratteliPath {
    pub word: Vec<usize>,
    /// Prototile `s(e_1)` of the origin tile.
    pub start: usize,
    pub edges: Vec<BratteliEdge>,
}

impl BratteliPath {
    /// Path from explicit branch choices; `branches[ℓ-1]` indexes rule `word[ℓ-1]`.
    pub fn from_branches(family: &TypeHFamily, word: &[usize], start: usize, branches: &[usize]) -> Result<Self> {
        if branches.len() > word.len() {
            return Err(Error::PathTooShort { requested: branches.len(), available: word.len() });
        }
        let mut edges = Vec::with_capacity(branches.len());
        let mut cur = start;
        for (l, &k) in branches.iter().enumerate() {
            let rule = &family.rules[word[l]];
            let b = rule.branches.get(k).ok_or_else(|| Error::EdgeMismatch { level: l + 1, message: format!("rule {} has no branch {k}", rule.id) })?;
            if b.source != cur {
                return Err(Error::EdgeMismatch {
                    level: l + 1,
                    message: format!("branch {k} starts at {} but the path is at {}", family.prototiles[b.source].id, family.prototiles[cur].id),
                });
            }
            edges.push(BratteliEdge { level: l + 1, source: b.source, target: b.target, branch: k });
            cur = b.target;
        }
        Ok(BratteliPath { word: word.to_vec(), start, edges })
    }

    /// Extends from `start` through all of `word` using `policy`.
    pub fn extend(family: &TypeHFamily, word: &[usize], start: usize, policy: &PathPolicy) -> Self {
        let mut rng = match policy {
            PathPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        let mut branches = Vec::with_capacity(word.len());
        let mut cur = start;
        for (l, &r) in word.iter().enumerate() {
            let options: Vec<usize> = family.rules[r].branches_from(cur).collect();
            let pick = match policy {
                PathPolicy::Leftmost => 0,
                PathPolicy::Random(_) => rng.as_mut().unwrap().gen_range(0..options.len()),
                PathPolicy::Cyclic(p) => p[(l + 1) % p.len()] % options.len(),
            };
            let k = options[pick];
            branches.push(k);
            cur = family.rules[r].branches[k].target;
        }
        Self::from_branches(family, word, start, &branches).expect("policy follows the diagram")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `r(ē|_k)`, with `r(ē|_0) = s(e_1)`.
    pub fn vertex(&self, k: usize) -> usize {
        if k == 0 {
            self.start
        } else {
            self.edges[k - 1].target
        }
    }

    pub fn prefix(&self, k: usize) -> BratteliPath {
        BratteliPath { word: self.word[..k].to_vec(), start: self.start, edges: self.edges[..k].to_vec() }
    }

    pub fn check(&self, family: &TypeHFamily) -> Result<()> {
        let mut cur = self.start;
        for (l, e) in self.edges.iter().enumerate() {
            let r = *self.word.get(l).ok_or(Error::PathTooShort { requested: l + 1, available: self.word.len() })?;
            let b = family.rules[r].branches.get(e.branch);
            let ok = e.level == l + 1 && e.source == cur && b.is_some_and(|b| b.source == e.source && b.target == e.target);
            if !ok {
                return Err(Error::EdgeMismatch { level: l + 1, message: "edge does not match the rule or the previous edge".into() });
            }
            cur = e.target;
        }
        Ok(())
    }

    /// Anchor of the level-`k` approximant: `-Σ_{ℓ≤k} θ_(ℓ)^{-1} b_{e_ℓ}`.
    pub fn root_translation(&self, family: &TypeHFamily, k: usize) -> Vector {
        let mut s = 1.0;
        let mut acc = Vector::ZERO;
        for (l, e) in self.edges[..k].iter().enumerate() {
            let rule = &family.rules[self.word[l]];
            s /= rule.theta;
            acc += s * rule.branches[e.branch].offset;
        }
        -acc
    }
}

/// `f_{e_k} ∘ … ∘ f_{e_1}`.
pub fn compose_path_map(family: &TypeHFamily, path: &BratteliPath) -> Result<AffineContraction> {
    path.check(family)?;
    let mut f = AffineContraction::identity(family.dim);
    for (l, e) in path.edges.iter().enumerate() {
        f = family.rules[path.word[l]].map(e.branch, family.dim).compose(&f)?;
    }
    Ok(f)
}

/// `flags[ℓ-1]` is true iff the level-0 tile's image under `f_{e_ℓ}∘…∘f_{e_1}` touches
/// `∂A_{r(e_ℓ)}`. `margin` is measured in level-0 tile units.
pub fn boundary_flags(family: &TypeHFamily, path: &BratteliPath, margin: f64) -> Vec<bool> {
    let mut img = family.shape(path.start).clone();
    let mut theta = 1.0;
    path.edges
        .iter()
        .enumerate()
        .map(|(l, e)| {
            let b = &family.rules[path.word[l]].branches[e.branch];
            img = img.transformed(b.scale, b.offset);
            theta *= b.scale;
            family.shape(e.target).boundary_gap(&img) <= margin * theta
        })
        .collect()
}

pub fn is_boundary_path(family: &TypeHFamily, path: &BratteliPath, level: usize, margin: f64) -> Result<bool> {
    if level > path.len() {
        return Err(Error::PathTooShort { requested: level, available: path.len() });
    }
    if level == 0 {
        return Ok(true);
    }
    Ok(boundary_flags(family, &path.prefix(level), margin)[level - 1])
}

/// Translation `τ` with `P_k(e1) = P_k(e2) + τ` for paths that agree above level `k`.
pub fn translation_between(family: &TypeHFamily, e1: &BratteliPath, e2: &BratteliPath, k: usize) -> Result<Vector> {
    if k > e1.len() || k > e2.len() {
        return Err(Error::PathTooShort { requested: k, available: e1.len().min(e2.len()) });
    }
    if e1.len() != e2.len() || e1.word[..e1.len()] != e2.word[..e2.len()] || e1.edges[k..] != e2.edges[k..] || e1.vertex(k) != e2.vertex(k) {
        return Err(Error::NotTailEquivalent(k));
    }
    Ok(e1.root_translation(family, k) - e2.root_translation(family, k))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthRates {
    /// `log|E_v|/k` for `k = 1..=depth`, one row per level.
    pub per_level: Vec<Vec<f64>>,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// `λ+ − λ− < λ+/d`
    pub condition: bool,
}

/// Path-count growth rates along `word[..depth]`.
pub fn growth_rates(family: &TypeHFamily, word: &[usize], depth: usize) -> Result<GrowthRates> {
    if depth > word.len() {
        return Err(Error::PathTooShort { requested: depth, available: word.len() });
    }
    let m = family.m();
    let mut c = vec![1.0; m];
    let mut log_scale = 0.0;
    let mut per_level = Vec::with_capacity(depth);
    for (l, &r) in word[..depth].iter().enumerate() {
        let mut next = vec![0.0; m];
        for b in &family.rules[r].branches {
            next[b.target] += c[b.source];
        }
        if next.contains(&0.0) {
            return Err(Error::DegenerateProduct(format!("no paths into some vertex at level {}", l + 1)));
        }
        let mx = next.iter().cloned().fold(0.0, f64::max);
        log_scale += mx.ln();
        c = next.iter().map(|x| x / mx).collect();
        let k = (l + 1) as f64;
        per_level.push(c.iter().map(|x| (x.ln() + log_scale) / k).collect());
    }
    let last: Vec<f64> = per_level.last().cloned().unwrap_or_default();
    let lambda_minus = last.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_plus = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let condition = lambda_plus - lambda_minus < lambda_plus / family.dim as f64;
    Ok(GrowthRates { per_level, lambda_minus, lambda_plus, condition })
}

/// Default boundary margin.
pub const MARGIN: f64 = EPS;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn compose_examples() {
        let f = fixtures::four1d();
        let empty = BratteliPath::from_branches(&f, &[], 0, &[]).unwrap();
        assert_eq!(compose_path_map(&f, &empty).unwrap(), AffineContraction::identity(1));
        let one = BratteliPath::from_branches(&f, &[0], 0, &[0]).unwrap();
        let m = compose_path_map(&f, &one).unwrap();
        assert_eq!((m.scale, m.offset.x), (0.25, -0.375));
        let two = BratteliPath::from_branches(&f, &[0, 0], 0, &[0, 0]).unwrap();
        let m = compose_path_map(&f, &two).unwrap();
        assert_eq!((m.scale, m.offset.x), (1.0 / 16.0, -15.0 / 32.0));
    }

    #[test]
    fn incompatible_edges_rejected() {
        let f = fixtures::four1d();
        // branch 3 of rule 1 is b -> a, but the path starts at a
        assert!(matches!(BratteliPath::from_branches(&f, &[0], 0, &[3]), Err(Error::EdgeMismatch { level: 1, .. })));
        let mut p = BratteliPath::from_branches(&f, &[0, 0], 0, &[0, 0]).unwrap();
        p.edges[1].source = 1;
        assert!(compose_path_map(&f, &p).is_err());
    }

    #[test]
    fn boundary_examples() {
        let f = fixtures::four1d();
        let left = BratteliPath::from_branches(&f, &[0, 0], 0, &[0, 1]).unwrap();
        assert!(is_boundary_path(&f, &left, 1, MARGIN).unwrap());
        assert!(!is_boundary_path(&f, &left, 2, MARGIN).unwrap());
        let second = BratteliPath::from_branches(&f, &[0, 0], 0, &[1, 2]).unwrap();
        assert!(!is_boundary_path(&f, &second, 1, MARGIN).unwrap());
        assert!(!is_boundary_path(&f, &second, 2, MARGIN).unwrap());
        let all_left = BratteliPath::extend(&f, &[0; 12], 0, &PathPolicy::Leftmost);
        assert!(boundary_flags(&f, &all_left, MARGIN).iter().all(|&b| b));
    }

    #[test]
    fn translation_examples() {
        let f = fixtures::four1d();
        let a = BratteliPath::from_branches(&f, &[0, 0, 0], 0, &[0, 1, 2]).unwrap();
        assert_eq!(translation_between(&f, &a, &a, 1).unwrap(), Vector::ZERO);
        let b = BratteliPath::from_branches(&f, &[0, 0, 0], 0, &[1, 1, 2]).unwrap();
        assert_eq!(translation_between(&f, &a, &b, 1).unwrap().x, 1.0);
        assert_eq!(translation_between(&f, &b, &a, 1).unwrap().x, -1.0);
        assert!(matches!(translation_between(&f, &a, &b, 0), Err(Error::NotTailEquivalent(0))));
    }

    #[test]
    fn growth_four_is_exact() {
        let f = fixtures::four1d();
        let g = growth_rates(&f, &[0; 20], 20).unwrap();
        assert!((g.lambda_minus - 4f64.ln()).abs() < 1e-12);
        assert!((g.lambda_plus - 4f64.ln()).abs() < 1e-12);
        assert!(g.condition);
    }

    #[test]
    fn growth_fib_matches_fibonacci_counts() {
        // |E_a| = F(k+2), |E_b| = F(k+1) with F(1) = F(2) = 1
        let f = fixtures::fib1d();
        let g = growth_rates(&f, &[0; 30], 30).unwrap();
        let (fa, fb) = (2_178_309f64, 1_346_269f64);
        assert!((g.per_level[29][0] - fa.ln() / 30.0).abs() < 1e-12);
        assert!((g.per_level[29][1] - fb.ln() / 30.0).abs() < 1e-12);
        assert!(g.condition);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let g = growth_rates(&f, &[0; 80], 80).unwrap();
        assert!((g.lambda_minus - phi.ln()).abs() < 0.01);
        assert!((g.lambda_plus - phi.ln()).abs() < 0.01);
    }

    #[test]
    fn policies_are_deterministic() {
        let f = fixtures::four1d();
        let word = [0, 1, 0, 1, 1, 0];
        let p = BratteliPath::extend(&f, &word, 0, &PathPolicy::Random(5));
        assert_eq!(p, BratteliPath::extend(&f, &word, 0, &PathPolicy::Random(5)));
        assert_eq!(p.prefix(3), BratteliPath::extend(&f, &word[..3], 0, &PathPolicy::Random(5)));
        let c = BratteliPath::extend(&f, &[0; 4], 0, &PathPolicy::Cyclic(vec![1, 2]));
        assert!(c.edges.iter().all(|e| e.branch == 1 || e.branch == 2 || e.branch == 5 || e.branch == 6));
    }
}
