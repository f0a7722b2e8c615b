use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::context::{Packing, TilingContext};
use super::{fit_line, Observable};
use crate::bratteli::{BratteliPath, PathPolicy};
use crate::cocycle::{lyapunov_spectrum, oseledets_filtration, CollaredTileSet, SpectrumParams};
use crate::geometry::{Region, Vector};
use crate::sequence::Law;
use crate::substitution::TypeHFamily;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct DeviationParams {
    pub t0: f64,
    pub t_max: f64,
    /// Envelope windows over `log T`.
    pub windows: usize,
    /// Word length for the finite-time filtration.
    pub filtration_n: usize,
    /// Relative threshold for a nonzero filtration coefficient.
    pub alpha_tol: f64,
    /// Slope tolerance of the verdict.
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for DeviationParams {
    fn default() -> Self {
        DeviationParams { t0: 4.0, t_max: 4f64.powi(10), windows: 6, filtration_n: 60, alpha_tol: 1e-6, tol: 0.05, max_depth: 40 }
    }
}

/// Which statement the verdict checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Slope equals the normalized exponent of the first component.
    Exponent,
    /// All rapidly expanding components vanish; slope is at most `d - 1`.
    BoundaryBound,
}

#[derive(Clone, Debug, Serialize)]
pub struct Subsequence {
    pub levels: Vec<usize>,
    pub t: Vec<f64>,
    pub integrals: Vec<f64>,
    pub translations: Vec<Vec<f64>>,
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationReport {
    pub t_grid: Vec<f64>,
    pub integrals: Vec<f64>,
    /// Per grid point, supertiles taken at each level.
    pub level_counts: Vec<Vec<u64>>,
    pub envelope_t: Vec<f64>,
    pub envelope_i: Vec<f64>,
    pub upper_envelope_slope: f64,
    pub alpha: Vec<f64>,
    pub leading_index: Option<usize>,
    pub normalized_exponents: Vec<f64>,
    pub predicted: f64,
    pub claim: Claim,
    pub tolerance: f64,
    pub pass: bool,
    pub subsequence: Subsequence,
    pub depth: usize,
    pub region: Region,
    pub beta: Vec<f64>,
    pub word: Vec<usize>,
    pub seed: u64,
}

impl DeviationReport {
    /// Columns `T,I,logT,logAbsI,level_counts_json`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "T,I,logT,logAbsI,level_counts_json")?;
        for ((t, i), k) in self.t_grid.iter().zip(&self.integrals).zip(&self.level_counts) {
            let log_i = if *i == 0.0 { String::new() } else { format!("{}", i.abs().ln()) };
            writeln!(w, "{t},{i},{},{log_i},\"{}\"", t.ln(), serde_json::to_string(k).unwrap())?;
        }
        Ok(())
    }
}

/// `T_m = T_0 θ_max^{-m/2}` up to `t_max`.
pub fn t_grid(family: &TypeHFamily, t0: f64, t_max: f64) -> Result<Vec<f64>> {
    let ratio = family.theta_max().recip().sqrt();
    let n = ((t_max / t0).ln() / ratio.ln() + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|m| t0 * ratio.powi(m as i32)).collect();
    if grid.len() < 8 {
        return Err(Error::GridTooSmall(grid.len()));
    }
    Ok(grid)
}

/// Window maxima of `|I|` over `log T` and the least-squares slope through them.
pub fn upper_envelope(t: &[f64], i: &[f64], windows: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let (lo, hi) = (t[0].ln(), t[t.len() - 1].ln());
    let width = (hi - lo) / windows as f64;
    let mut et = Vec::new();
    let mut ei = Vec::new();
    for w in 0..windows {
        let best = (0..t.len())
            .filter(|&k| {
                let pos = ((t[k].ln() - lo) / width).floor() as usize;
                pos.min(windows - 1) == w && i[k] != 0.0
            })
            .max_by(|&a, &b| i[a].abs().total_cmp(&i[b].abs()));
        if let Some(k) = best {
            et.push(t[k]);
            ei.push(i[k]);
        }
    }
    if et.len() < 4 {
        return Err(Error::TooFewEnvelopePoints(et.len()));
    }
    let x: Vec<f64> = et.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = ei.iter().map(|v| v.abs().ln()).collect();
    Ok((et, ei, fit_line(&x, &y).1))
}

/// Where the tiling comes from: a law, a path policy and the collared classes (if any).
pub struct TilingSpec<'a> {
    pub family: &'a TypeHFamily,
    pub set: Option<&'a CollaredTileSet>,
    pub law: &'a Law,
    pub start: usize,
    pub policy: PathPolicy,
}

impl TilingSpec<'_> {
    /// Smallest context whose root covers `region`.
    pub fn context_covering(&self, region: &Region, seed: u64, max_depth: usize) -> Result<TilingContext<'_>> {
        let word = self.law.sample(max_depth, seed);
        for k in 1..=max_depth {
            let path = BratteliPath::extend(self.family, &word[..k], self.start, &self.policy);
            let ctx = TilingContext::new(self.family, path, self.set)?;
            if ctx.covers(region) {
                return Ok(ctx);
            }
        }
        Err(Error::Coverage(max_depth))
    }
}

/// Ergodic integrals of `observable` over `T·B` on the grid, with the fitted envelope slope
/// compared against the exponent predicted by the observable's filtration coefficients.
pub fn deviation_series(spec: &TilingSpec, observable: &Observable, region: &Region, p: &DeviationParams, seed: u64) -> Result<DeviationReport> {
    let family = spec.family;
    let grid = t_grid(family, p.t0, p.t_max)?;
    let ctx = spec.context_covering(&region.transformed(p.t_max, Vector::ZERO), seed, p.max_depth)?;
    observable.check(&ctx.cocycle, &spec.law.sample(400, seed))?;
    let packings: Vec<Packing> = grid.par_iter().map(|&t| ctx.integrate(&observable.beta, &region.transformed(t, Vector::ZERO))).collect::<Result<_>>()?;
    let integrals: Vec<f64> = packings.iter().map(|k| k.value).collect();
    let level_counts = packings.iter().map(|k| k.level_totals()).collect();
    let (envelope_t, envelope_i, slope) = upper_envelope(&grid, &integrals, p.windows)?;

    let word = spec.law.sample(p.filtration_n.max(ctx.depth()), seed);
    let filtration = oseledets_filtration(&ctx.cocycle, &word, p.filtration_n)?;
    let alpha = filtration.coefficients(&observable.beta)?;
    let scale = observable.beta.iter().fold(0.0f64, |m, b| m.max(b.abs())).max(f64::MIN_POSITIVE);
    let leading_index = alpha.iter().position(|a| a.abs() > p.alpha_tol * scale);
    let spectrum = lyapunov_spectrum(&ctx.cocycle, spec.law, &SpectrumParams { n: 200, samples: if spec.law.is_random() { 20 } else { 1 }, seed, warmup: 64 })?;
    let d = family.dim as f64;
    let (predicted, claim) = match leading_index {
        Some(j) if spectrum.mask[j] => (spectrum.normalized[j], Claim::Exponent),
        _ => (d - 1.0, Claim::BoundaryBound),
    };
    let pass = match claim {
        Claim::Exponent => (slope - predicted).abs() <= p.tol,
        Claim::BoundaryBound => slope <= predicted + p.tol,
    };
    Ok(DeviationReport {
        t_grid: grid,
        integrals,
        level_counts,
        envelope_t,
        envelope_i,
        upper_envelope_slope: slope,
        alpha,
        leading_index,
        normalized_exponents: spectrum.normalized,
        predicted,
        claim,
        tolerance: p.tol,
        pass,
        subsequence: subsequence(&ctx, &observable.beta)?,
        depth: ctx.depth(),
        region: region.clone(),
        beta: observable.beta.clone(),
        word: ctx.path.word.clone(),
        seed,
    })
}

/// For each level `n`, the node within three level-`n` diameters of the origin with the largest
/// `|integral|`; the slope of `log|I_n|` against `log θ_(n)^{-1}` is the subsequence estimate.
pub fn subsequence(ctx: &TilingContext, beta: &[f64]) -> Result<Subsequence> {
    let w = ctx.weights(beta)?;
    let diam = ctx.family.max_diameter();
    let mut best: Vec<Option<(f64, Vector)>> = vec![None; ctx.depth() + 1];
    let mut stack = vec![(ctx.root, ctx.root_class)];
    while let Some((node, class)) = stack.pop() {
        let s = ctx.tree.scale(node.level);
        let reach = 3.0 * s * diam;
        let bb = ctx.tree.support_bbox(&node);
        let gap = Vector::new(bb.lo.x.max(-bb.hi.x).max(0.0), bb.lo.y.max(-bb.hi.y).max(0.0));
        if gap.norm() > reach {
            continue;
        }
        let v = w[node.level][class];
        if node.translation.norm() <= reach && best[node.level].is_none_or(|(b, _)| v.abs() > b.abs()) {
            best[node.level] = Some((v, node.translation));
        }
        if node.level > 0 {
            stack.extend(ctx.children(&node, class));
        }
    }
    let mut out = Subsequence { levels: Vec::new(), t: Vec::new(), integrals: Vec::new(), translations: Vec::new(), slope: None };
    for (l, b) in best.iter().enumerate().skip(1) {
        if let Some((v, t)) = b {
            out.levels.push(l);
            out.t.push(ctx.tree.scale(l));
            out.integrals.push(*v);
            out.translations.push(t.coords(ctx.family.dim));
        }
    }
    let pts: Vec<(f64, f64)> = out.t.iter().zip(&out.integrals).filter(|(_, i)| **i != 0.0).map(|(t, i)| (t.ln(), i.abs().ln())).collect();
    if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        out.slope = Some(fit_line(&x, &y).1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn grid_is_geometric() {
        let f = fixtures::four1d();
        let g = t_grid(&f, 4.0, 4f64.powi(10)).unwrap();
        assert_eq!(g.len(), 19);
        assert!((g[2] - 16.0).abs() < 1e-9 && (g[18] - 4f64.powi(10)).abs() < 1e-3);
        assert!(matches!(t_grid(&f, 4.0, 64.0), Err(Error::GridTooSmall(5))));
    }

    #[test]
    fn envelope_of_power_law() {
        let t: Vec<f64> = (0..20).map(|k| 2f64.powi(k)).collect();
        let i: Vec<f64> = t.iter().enumerate().map(|(k, x)| if k % 3 == 0 { x.powf(0.7) } else { 0.1 * x.powf(0.7) }).collect();
        let (_, _, s) = upper_envelope(&t, &i, 6).unwrap();
        assert!((s - 0.7).abs() < 0.05);
        assert!(matches!(upper_envelope(&t, &[0.0; 20], 6), Err(Error::TooFewEnvelopePoints(0))));
    }

    #[test]
    fn four_mean_zero_slope() {
        let f = fixtures::four1d();
        let law = Law::Periodic(vec![0]);
        let spec = TilingSpec { family: &f, set: None, law: &law, start: 0, policy: PathPolicy::Leftmost };
        let obs = Observable::new(vec![1.0, -1.0], true);
        let r = deviation_series(&spec, &obs, &Region::Interval { lo: 0.0, hi: 1.0 }, &DeviationParams::default(), 0).unwrap();
        assert_eq!(r.claim, Claim::Exponent);
        assert!((r.predicted - 0.5).abs() < 1e-9);
        assert!(r.pass, "slope {}", r.upper_envelope_slope);
        assert!((r.subsequence.slope.unwrap() - 0.5).abs() < 0.05);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 20);
    }
}
