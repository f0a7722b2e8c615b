//! Ergodic integrals over growing regions, packing bounds, deviation exponents,
//! boundary-path measures and patch frequencies.

mod context;
mod deviation;
mod measure;

pub use context::{geometric_class_counts, region_within, Packing, TilingContext};
pub use deviation::{deviation_series, subsequence, t_grid, upper_envelope, Claim, DeviationParams, DeviationReport, Subsequence, TilingSpec};
pub use measure::{
    boundary_measure_decay, is_minimal, packing_constants, patch_frequencies, BoundaryDecay, FrequencyReport, PackingConstants,
};

use serde::Serialize;

use crate::cocycle::Cocycle;
use crate::{Error, Result};

/// Dirac comb with weight `beta[j]` at each anchor of class `j`.
#[derive(Clone, Debug, Serialize)]
pub struct Observable {
    pub beta: Vec<f64>,
    pub mean_removed: bool,
}

/// Tolerance on the frequency-weighted mean of a mean-removed observable.
pub const MEAN_TOL: f64 = 1e-6;

impl Observable {
    pub fn new(beta: Vec<f64>, mean_removed: bool) -> Self {
        Observable { beta, mean_removed }
    }

    /// `Σ_j β_j freq_j`.
    pub fn mean(&self, freqs: &[f64]) -> f64 {
        self.beta.iter().zip(freqs).map(|(b, f)| b * f).sum()
    }

    /// Checks length and, for mean-removed observables, the mean against the class frequencies along `word`.
    pub fn check(&self, cocycle: &Cocycle, word: &[usize]) -> Result<()> {
        if self.beta.len() != cocycle.size {
            return Err(Error::BasisMismatch { expected: cocycle.size, found: self.beta.len() });
        }
        if self.mean_removed {
            let mean = self.mean(&class_frequencies(cocycle, word)?);
            if mean.abs() > MEAN_TOL * self.beta.iter().fold(1.0f64, |m, b| m.max(b.abs())) {
                return Err(Error::NonzeroMean(mean));
            }
        }
        Ok(())
    }
}

/// Class frequencies of the tiling over `word`: `C_{x_1} ⋯ C_{x_n} 1`, normalized.
pub fn class_frequencies(cocycle: &Cocycle, word: &[usize]) -> Result<Vec<f64>> {
    let mut v = vec![1.0 / cocycle.size as f64; cocycle.size];
    for &r in word.iter().rev() {
        let m = cocycle.matrix(r)?;
        v = (0..cocycle.size).map(|j| (0..cocycle.size).map(|i| m.get(j, i) as f64 * v[i]).sum()).collect();
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
    }
    Ok(v)
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (my - b * mx, b)
}
