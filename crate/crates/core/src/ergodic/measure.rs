use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::context::TilingContext;
use super::fit_line;
use crate::bratteli::{boundary_flags, growth_rates, BratteliPath, Node, PathPolicy, SupertileTree, MARGIN};
use crate::cocycle::CollaredTileSet;
use crate::geometry::{Region, Vector};
use crate::sequence::Law;
use crate::substitution::{transition_matrix, TypeHFamily};
use crate::{Error, Result};

/// Fixture-level constants of the packing bounds
/// `Vol(T·B) ≤ K1 θ_(n)^{-d}` and `Σ_v κ_ℓ(v) ≤ K2 Vol(∂(T·B)) θ_(ℓ)^{d-1}`.
#[derive(Clone, Debug, Serialize)]
pub struct PackingConstants {
    pub k1: f64,
    pub k2: f64,
    /// Largest number of children of one supertile.
    pub max_children: u64,
}

/// Constants for convex `region` and the rules in `alphabet`.
pub fn packing_constants(family: &TypeHFamily, alphabet: &[usize], region: &Region) -> PackingConstants {
    let d = family.dim as i32;
    let diam = family.max_diameter();
    let theta_min = alphabet.iter().map(|&r| family.rules[r].theta).fold(1.0, f64::min);
    let k1 = region.volume() * (diam / (theta_min * region.inradius())).powi(d);
    let max_children = alphabet.iter().flat_map(|&r| transition_matrix(family, r).col_sums()).max().unwrap_or(0);
    let n = max_children as f64;
    let a = family.min_volume();
    // a crossing supertile meets ∂(T·B); in the plane they fill a tube of width one supertile diameter
    let k2 = if d == 1 { n } else { n * (2.0 * diam / a + diam * diam / (2.0 * a * family.min_anchor_depth())) };
    PackingConstants { k1, k2, max_children }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryDecay {
    pub levels: Vec<usize>,
    /// Fraction of sampled paths on the boundary at each level.
    pub mu: Vec<f64>,
    pub hits: Vec<u64>,
    /// `exp` of the fitted slope of `log μ̂_k` over levels with at least `MIN_HITS` hits.
    pub rate: f64,
    pub fit_levels: Vec<usize>,
    pub partial_sums: Vec<f64>,
    /// Fitted (or observed, if larger) mass at the last level over the partial sum.
    pub relative_increment: f64,
    /// Growth-rate condition `λ+ − λ− < λ+/d`.
    pub lambda_condition: bool,
    pub samples: usize,
    pub seed: u64,
}

pub const MIN_HITS: u64 = 10;

/// Samples level-0 tiles of a level-`k_max` patch uniformly (top type ∝ its tile count,
/// then children ∝ theirs); sample `i` uses seed `seed + i`.
pub fn boundary_measure_decay(family: &TypeHFamily, law: &Law, k_max: usize, samples: usize, seed: u64) -> Result<BoundaryDecay> {
    let word = law.sample(k_max, seed);
    let tree = SupertileTree::new(family, &word);
    let tops: Vec<f64> = (0..family.m()).map(|v| tree.proto(k_max, v).leaf_counts.iter().sum()).collect();
    let top_dist = WeightedIndex::new(&tops).map_err(|e| Error::DegenerateProduct(e.to_string()))?;
    let flags: Vec<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut node = Node { level: k_max, proto: top_dist.sample(&mut rng), translation: Vector::ZERO };
            let mut branches = vec![0; k_max];
            while node.level > 0 {
                let kids: Vec<(usize, Node)> = tree.children(&node).collect();
                let w: Vec<f64> = kids.iter().map(|(_, c)| tree.leaf_count(c)).collect();
                let (b, c) = kids[WeightedIndex::new(&w).expect("positive counts").sample(&mut rng)];
                branches[node.level - 1] = b;
                node = c;
            }
            let path = BratteliPath::from_branches(family, &word, node.proto, &branches).expect("sampled from the tree");
            boundary_flags(family, &path, MARGIN)
        })
        .collect();
    let levels: Vec<usize> = (1..=k_max).collect();
    let hits: Vec<u64> = (0..k_max).map(|k| flags.iter().filter(|f| f[k]).count() as u64).collect();
    let mu: Vec<f64> = hits.iter().map(|&h| h as f64 / samples as f64).collect();
    let fit_levels: Vec<usize> = levels.iter().copied().filter(|&k| hits[k - 1] >= MIN_HITS).collect();
    if fit_levels.len() < 2 {
        return Err(Error::TooFewHits);
    }
    let x: Vec<f64> = fit_levels.iter().map(|&k| k as f64).collect();
    let y: Vec<f64> = fit_levels.iter().map(|&k| mu[k - 1].ln()).collect();
    let (a, b) = fit_line(&x, &y);
    let partial_sums: Vec<f64> = mu.iter().scan(0.0, |s, m| {
        *s += m;
        Some(*s)
    }).collect();
    let last = (a + b * k_max as f64).exp().max(mu[k_max - 1]);
    let growth = growth_rates(family, &law.sample(k_max.max(1), seed), k_max.max(1))?;
    Ok(BoundaryDecay {
        levels,
        mu,
        hits,
        rate: b.exp(),
        fit_levels,
        relative_increment: last / partial_sums[k_max - 1],
        partial_sums,
        lambda_condition: growth.condition,
        samples,
        seed,
    })
}

/// Smallest `L ≤ cap` with `M_{x_1} ⋯ M_{x_L}` positive along a sampled word.
pub fn is_minimal(family: &TypeHFamily, law: &Law, cap: usize, seed: u64) -> Result<usize> {
    let m = family.m();
    let word = law.sample(cap, seed);
    let mut p = vec![vec![false; m]; m];
    for (i, row) in p.iter_mut().enumerate() {
        row[i] = true;
    }
    for (l, &r) in word.iter().enumerate() {
        let t = transition_matrix(family, r);
        p = (0..m).map(|i| (0..m).map(|j| (0..m).any(|k| p[i][k] && t.get(k, j) > 0)).collect()).collect();
        if p.iter().all(|row| row.iter().all(|&x| x)) {
            return Ok(l + 1);
        }
    }
    Err(Error::NotMinimal(cap))
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyReport {
    pub depths: Vec<usize>,
    /// Class frequencies of the first path's patch at each depth.
    pub frequencies: Vec<Vec<f64>>,
    /// Same for the second path.
    pub alternate: Vec<Vec<f64>>,
    /// Max-norm difference between the two at each depth.
    pub discrepancy: Vec<f64>,
    /// Word length at which the transition product became positive.
    pub minimal_at: usize,
    pub collared: bool,
    pub seed: u64,
}

/// Anchor-count fractions per class of approximants along two seeded paths
/// (start `0` with seed `seed`, start `m-1` with seed `seed + 1`) over the same word.
pub fn patch_frequencies(family: &TypeHFamily, set: Option<&CollaredTileSet>, law: &Law, depths: &[usize], seed: u64) -> Result<FrequencyReport> {
    let minimal_at = is_minimal(family, law, 64, seed)?;
    let top = depths.iter().copied().max().unwrap_or(0);
    let word = law.sample(top, seed);
    let freq = |start: usize, s: u64, k: usize| -> Result<Vec<f64>> {
        let path = BratteliPath::extend(family, &word[..k], start, &PathPolicy::Random(s));
        let ctx = TilingContext::new(family, path, set)?;
        let counts = ctx.class_counts(k, ctx.root_class);
        let total: f64 = counts.iter().sum();
        Ok(counts.iter().map(|c| c / total).collect())
    };
    let mut report = FrequencyReport {
        depths: depths.to_vec(),
        frequencies: Vec::new(),
        alternate: Vec::new(),
        discrepancy: Vec::new(),
        minimal_at,
        collared: set.is_some(),
        seed,
    };
    for &k in depths {
        let a = freq(0, seed, k)?;
        let b = freq(family.m() - 1, seed.wrapping_add(1), k)?;
        report.discrepancy.push(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        report.frequencies.push(a);
        report.alternate.push(b);
    }
    Ok(report)
}
