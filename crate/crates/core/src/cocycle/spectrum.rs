use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::collared::{collared_matrix, CollaredTileSet};
use crate::matrix::IntMatrix;
use crate::sequence::Law;
use crate::substitution::{transition_matrix, TypeHFamily};
use crate::{Error, Result};

/// Transition matrices acting on cochain weights by transpose.
#[derive(Clone, Debug)]
pub struct Cocycle {
    /// Tiling dimension `d`.
    pub dim: usize,
    /// Number of weights `c`.
    pub size: usize,
    /// `matrices[rule]`, or `None` for rules without a matrix (outside the collared alphabet).
    pub matrices: Vec<Option<IntMatrix>>,
    pub thetas: Vec<f64>,
    /// Prototile under each weight index.
    pub centers: Vec<usize>,
}

impl Cocycle {
    pub fn uncollared(family: &TypeHFamily) -> Self {
        Cocycle {
            dim: family.dim,
            size: family.m(),
            matrices: (0..family.n_rules()).map(|r| Some(transition_matrix(family, r))).collect(),
            thetas: family.rules.iter().map(|r| r.theta).collect(),
            centers: (0..family.m()).collect(),
        }
    }

    pub fn collared(family: &TypeHFamily, set: &CollaredTileSet) -> Result<Self> {
        let matrices = (0..family.n_rules())
            .map(|r| if set.alphabet.contains(&r) { collared_matrix(set, r).map(Some) } else { Ok(None) })
            .collect::<Result<_>>()?;
        Ok(Cocycle {
            dim: family.dim,
            size: set.len(),
            matrices,
            thetas: family.rules.iter().map(|r| r.theta).collect(),
            centers: (0..set.len()).map(|i| set.center(i)).collect(),
        })
    }

    pub fn from_matrices(dim: usize, thetas: Vec<f64>, matrices: Vec<IntMatrix>) -> Self {
        let size = matrices[0].rows;
        Cocycle { dim, size, matrices: matrices.into_iter().map(Some).collect(), thetas, centers: (0..size).collect() }
    }

    pub fn matrix(&self, rule: usize) -> Result<&IntMatrix> {
        self.matrices.get(rule).and_then(|m| m.as_ref()).ok_or_else(|| Error::UnknownSymbol(format!("{}", rule + 1)))
    }

    /// `C_ruleᵀ` as a float matrix.
    pub fn factor(&self, rule: usize) -> Result<DMatrix<f64>> {
        Ok(self.matrix(rule)?.transpose().to_f64())
    }

    /// Lifts weights on prototiles to weights on classes by centre type.
    pub fn lift(&self, beta: &[f64]) -> Vec<f64> {
        self.centers.iter().map(|&c| beta[c]).collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.size {
            return Err(Error::BasisMismatch { expected: self.size, found: n });
        }
        Ok(())
    }

    /// `C_{x_n}ᵀ ⋯ C_{x_1}ᵀ β`.
    pub fn apply(&self, beta: &[f64], word: &[usize]) -> Result<Vec<f64>> {
        self.check_len(beta.len())?;
        let mut v = beta.to_vec();
        for &r in word {
            let m = self.matrix(r)?;
            v = (0..self.size).map(|i| (0..self.size).map(|j| m.get(j, i) as f64 * v[j]).sum()).collect();
        }
        Ok(v)
    }

    /// Exact version of [`Cocycle::apply`].
    pub fn apply_exact(&self, beta: &[i128], word: &[usize]) -> Result<Vec<i128>> {
        self.check_len(beta.len())?;
        let mut v = beta.to_vec();
        for &r in word {
            let m = self.matrix(r)?;
            v = (0..self.size)
                .map(|i| {
                    (0..self.size).try_fold(0i128, |acc, j| (m.get(j, i) as i128).checked_mul(v[j]).and_then(|x| acc.checked_add(x)))
                })
                .collect::<Option<_>>()
                .ok_or(Error::Overflow)?;
        }
        Ok(v)
    }
}

/// `max_k |β_k|`.
pub fn class_norm(beta: &[f64]) -> f64 {
    beta.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Clone, Debug)]
pub struct SpectrumParams {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Steps run before accumulation so the frame aligns with the flag.
    pub warmup: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams { n: 200, samples: 1, seed: 0, warmup: 64 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovReport {
    pub exponents: Vec<f64>,
    pub normalized: Vec<f64>,
    pub mask: Vec<bool>,
    /// Exponents within `1e-9` of the threshold `(d-1)λ_1/d`.
    pub threshold_ties: Vec<bool>,
    pub stderr: Vec<f64>,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub warmup: usize,
}

const TIE: f64 = 1e-9;
const ZERO_DIAG: f64 = 1e-13;

fn check_law(cocycle: &Cocycle, law: &Law) -> Result<()> {
    for r in law.support() {
        let m = cocycle.matrix(r)?;
        if let Some(i) = (0..m.cols).find(|&i| (0..m.rows).all(|j| m.get(j, i) == 0)) {
            return Err(Error::DegenerateProduct(format!("rule {} has a zero column at {}", r + 1, i + 1)));
        }
    }
    Ok(())
}

/// Per-step QR of `A_k Q`; returns the summed `log |R_ii|` over the steps after `warmup`.
fn qr_exponents(factors: &[DMatrix<f64>], word: &[usize], warmup: usize) -> Vec<f64> {
    let c = factors[word[0]].nrows();
    let mut q = DMatrix::<f64>::identity(c, c);
    let mut acc = vec![0.0; c];
    for (k, &r) in word.iter().enumerate() {
        let a = &factors[r] * &q;
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let qr = a.qr();
        let rr = qr.r();
        q = qr.q();
        if k >= warmup {
            for i in 0..c {
                let d = rr[(i, i)].abs();
                acc[i] += if d <= ZERO_DIAG * scale { f64::NEG_INFINITY } else { d.ln() };
            }
        }
    }
    acc
}

fn factors(cocycle: &Cocycle) -> Vec<DMatrix<f64>> {
    (0..cocycle.matrices.len())
        .map(|r| cocycle.factor(r).unwrap_or_else(|_| DMatrix::zeros(cocycle.size, cocycle.size)))
        .collect()
}

/// Lyapunov exponents of the transposed cocycle along words drawn from `law`.
/// Sample `i` uses seed `seed + i`.
pub fn lyapunov_spectrum(cocycle: &Cocycle, law: &Law, p: &SpectrumParams) -> Result<LyapunovReport> {
    check_law(cocycle, law)?;
    if p.n == 0 || p.samples == 0 {
        return Err(Error::InvalidLaw("n and samples must be positive".into()));
    }
    let fs = factors(cocycle);
    let runs: Vec<Vec<f64>> = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let word = law.sample(p.warmup + p.n, p.seed.wrapping_add(i as u64));
            let mut e: Vec<f64> = qr_exponents(&fs, &word, p.warmup).into_iter().map(|x| x / p.n as f64).collect();
            e.sort_by(|a, b| b.total_cmp(a));
            e
        })
        .collect();
    let c = cocycle.size;
    let s = p.samples as f64;
    let exponents: Vec<f64> = (0..c).map(|j| runs.iter().map(|r| r[j]).sum::<f64>() / s).collect();
    let stderr: Vec<f64> = (0..c)
        .map(|j| {
            if !exponents[j].is_finite() || p.samples < 2 {
                return 0.0;
            }
            let var = runs.iter().map(|r| (r[j] - exponents[j]).powi(2)).sum::<f64>() / (s - 1.0);
            (var / s).sqrt()
        })
        .collect();
    Ok(finish(cocycle.dim, exponents, stderr, p))
}

fn finish(dim: usize, exponents: Vec<f64>, stderr: Vec<f64>, p: &SpectrumParams) -> LyapunovReport {
    let d = dim as f64;
    let l1 = exponents[0];
    let mut normalized: Vec<f64> = exponents.iter().map(|l| d * l / l1).collect();
    normalized[0] = d;
    let threshold = (d - 1.0) * l1 / d;
    let mask = exponents.iter().map(|&l| l >= threshold - TIE).collect();
    let threshold_ties = exponents.iter().map(|&l| (l - threshold).abs() <= TIE).collect();
    LyapunovReport { exponents, normalized, mask, threshold_ties, stderr, n: p.n, samples: p.samples, seed: p.seed, warmup: p.warmup }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lambda1Report {
    pub lambda1: f64,
    /// `d` times the mean of `-log θ` over the sampled words.
    pub predicted: f64,
    pub difference: f64,
}

pub fn lambda1_consistency(cocycle: &Cocycle, law: &Law, p: &SpectrumParams) -> Result<Lambda1Report> {
    let report = lyapunov_spectrum(cocycle, law, p)?;
    let mean: f64 = (0..p.samples)
        .map(|i| {
            let word = law.sample(p.warmup + p.n, p.seed.wrapping_add(i as u64));
            word[p.warmup..].iter().map(|&r| -cocycle.thetas[r].ln()).sum::<f64>() / p.n as f64
        })
        .sum::<f64>()
        / p.samples as f64;
    let predicted = cocycle.dim as f64 * mean;
    Ok(Lambda1Report { lambda1: report.exponents[0], predicted, difference: (report.exponents[0] - predicted).abs() })
}

fn sorted_svd(m: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_columns(&idx.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let vt = DMatrix::from_rows(&idx.iter().map(|&i| vt.row(i).into_owned()).collect::<Vec<_>>());
    (u, s, vt)
}

fn numeric_rank(s: &[f64], tol: f64) -> usize {
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > tol * top && x > 0.0).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizedSubspace {
    /// Stabilized rank `R` of the products.
    pub rank: usize,
    /// Prefix length at which the rank was first attained.
    pub steps: usize,
    /// Orthonormal basis vectors of the complement of the stabilized kernel.
    pub basis: Vec<Vec<f64>>,
    /// Rank of `P_m` for `m = 1..`.
    pub ranks: Vec<usize>,
}

pub const RANK_TOL: f64 = 1e-10;

/// Ranks of `P_m = C_{x_m}ᵀ ⋯ C_{x_1}ᵀ` for growing `m` until they repeat `patience` times.
pub fn stabilized_subspace(cocycle: &Cocycle, word: &[usize], patience: usize) -> Result<StabilizedSubspace> {
    let c = cocycle.size;
    let mut q = DMatrix::<f64>::identity(c, c);
    let mut ranks = Vec::new();
    let mut run = 0;
    for &r in word {
        let a = cocycle.factor(r)? * &q;
        let (u, s, _) = sorted_svd(a);
        let rank = numeric_rank(&s, RANK_TOL);
        q = u.columns(0, rank).into_owned();
        if ranks.last() == Some(&rank) {
            run += 1;
        } else {
            run = 0;
        }
        ranks.push(rank);
        if run + 1 >= patience || rank == 0 {
            let steps = ranks.iter().position(|&x| x == rank).unwrap() + 1;
            let mut p = DMatrix::<f64>::identity(c, c);
            for &r in &word[..steps] {
                p = cocycle.factor(r)? * p;
                let n = p.amax();
                if n > 0.0 {
                    p /= n;
                }
            }
            let (_, s, vt) = sorted_svd(p);
            let basis = (0..numeric_rank(&s, RANK_TOL)).map(|i| vt.row(i).iter().copied().collect()).collect();
            return Ok(StabilizedSubspace { rank, steps, basis, ranks });
        }
    }
    Err(Error::RankNotStable(word.len()))
}

/// Finite-time Oseledets directions in cochain space.
#[derive(Clone, Debug, Serialize)]
pub struct Filtration {
    /// Orthonormal directions, fastest first.
    pub basis: Vec<Vec<f64>>,
    /// Growth rate `(1/n) log` along each direction.
    pub growth: Vec<f64>,
    /// Groups of basis indices whose rates agree within the merge tolerance.
    pub blocks: Vec<Vec<usize>>,
    pub n: usize,
}

pub const MERGE_TOL: f64 = 1e-8;

impl Filtration {
    /// Coefficients `α_i(β) = ⟨v_i, β⟩`.
    pub fn coefficients(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.basis.len() {
            return Err(Error::BasisMismatch { expected: self.basis.len(), found: beta.len() });
        }
        Ok(self.basis.iter().map(|v| v.iter().zip(beta).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn reconstruct(&self, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.len()];
        for (a, v) in alpha.iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += a * x;
            }
        }
        out
    }

    /// Index of the first direction with `|α_i| > tol`.
    pub fn leading_index(&self, beta: &[f64], tol: f64) -> Result<Option<usize>> {
        Ok(self.coefficients(beta)?.iter().position(|a| a.abs() > tol))
    }
}

/// Right singular directions of `P_n = C_{x_n}ᵀ ⋯ C_{x_1}ᵀ`, via QR of `P_nᵀ` accumulated from the innermost factor.
pub fn oseledets_filtration(cocycle: &Cocycle, word: &[usize], n: usize) -> Result<Filtration> {
    if word.len() < n || n == 0 {
        return Err(Error::PathTooShort { requested: n, available: word.len() });
    }
    let c = cocycle.size;
    let mut q = DMatrix::<f64>::identity(c, c);
    let mut logs = vec![0.0; c];
    for &r in word[..n].iter().rev() {
        let a = cocycle.matrix(r)?.to_f64() * &q;
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let qr = a.qr();
        let rr = qr.r();
        q = qr.q();
        for i in 0..c {
            let d = rr[(i, i)].abs();
            logs[i] += if d <= ZERO_DIAG * scale { f64::NEG_INFINITY } else { d.ln() };
        }
    }
    let growth: Vec<f64> = logs.iter().map(|l| l / n as f64).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| growth[b].total_cmp(&growth[a]));
    let basis: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let v: DVector<f64> = q.column(i).into_owned();
            let sign = v.iter().find(|x| x.abs() > 1e-12).map_or(1.0, |x| x.signum());
            v.iter().map(|x| x * sign).collect()
        })
        .collect();
    let growth: Vec<f64> = order.iter().map(|&i| growth[i]).collect();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..c {
        let merge = i > 0 && {
            let (a, b) = (growth[i - 1], growth[i]);
            a == b || (a - b).abs() <= MERGE_TOL * a.abs().max(b.abs()).max(1.0)
        };
        if merge {
            blocks.last_mut().unwrap().push(i);
        } else {
            blocks.push(vec![i]);
        }
    }
    Ok(Filtration { basis, growth, blocks, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::collared_tiles;
    use crate::fixtures;
    use proptest::prelude::*;

    const PHI: f64 = 1.618_033_988_749_895;

    #[test]
    fn apply_examples() {
        let deg = Cocycle::uncollared(&fixtures::degenerate());
        assert_eq!(deg.apply(&[1.0], &[0, 0, 0]).unwrap(), vec![8.0]);
        assert_eq!(deg.apply(&[1.0], &[]).unwrap(), vec![1.0]);
        let four = Cocycle::uncollared(&fixtures::four1d());
        for n in 0..10 {
            let v = four.apply_exact(&[1, -1], &vec![0; n]).unwrap();
            assert_eq!(v, vec![1i128 << n, -(1i128 << n)]);
        }
        assert!(matches!(four.apply(&[1.0], &[0]), Err(Error::BasisMismatch { .. })));
        assert!(matches!(four.apply(&[1.0, 0.0], &[5]), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(class_norm(&[0.0, 0.0]), 0.0);
        assert_eq!(class_norm(&[3.0, -5.0, 1.0]), 5.0);
    }

    fn fixed(c: &Cocycle, word: Vec<usize>) -> LyapunovReport {
        lyapunov_spectrum(c, &Law::Periodic(word), &SpectrumParams { n: 120, ..Default::default() }).unwrap()
    }

    #[test]
    fn fixed_word_spectra() {
        let r = fixed(&Cocycle::uncollared(&fixtures::four1d()), vec![0]);
        assert!((r.exponents[0] - 4f64.ln()).abs() < 1e-6 && (r.exponents[1] - 2f64.ln()).abs() < 1e-6);
        assert_eq!(r.normalized[0], 1.0);
        assert!((r.normalized[1] - 0.5).abs() < 1e-9);
        assert_eq!(r.mask, vec![true, true]);
        assert_eq!(r.threshold_ties, vec![false, false]);
        let r = fixed(&Cocycle::uncollared(&fixtures::fib1d()), vec![0]);
        assert!((r.exponents[0] - PHI.ln()).abs() < 1e-6 && (r.exponents[1] + PHI.ln()).abs() < 1e-6);
        let r = fixed(&Cocycle::uncollared(&fixtures::prod2d()), vec![0]);
        let want = [16f64.ln(), 8f64.ln(), 8f64.ln(), 4f64.ln()];
        for (a, b) in r.exponents.iter().zip(want) {
            assert!((a - b).abs() < 1e-6, "{:?}", r.exponents);
        }
        assert_eq!(r.normalized[0], 2.0);
        // (d-1)λ_1/d = log 4 sits exactly on the threshold
        assert_eq!(r.mask, vec![true, true, true, true]);
        assert_eq!(r.threshold_ties, vec![false, false, false, true]);
    }

    #[test]
    fn bernoulli_commuting_pair() {
        let c = Cocycle::uncollared(&fixtures::four1d());
        let p = SpectrumParams { n: 200, samples: 200, seed: 7, warmup: 64 };
        let r = lyapunov_spectrum(&c, &Law::Bernoulli(vec![0.5, 0.5]), &p).unwrap();
        for (e, (w, se)) in r.exponents.iter().zip([4f64.ln(), 2f64.ln()].iter().zip(&r.stderr)) {
            assert!((e - w).abs() <= 3.0 * se.max(1e-10));
        }
    }

    #[test]
    fn spectrum_is_reproducible_across_thread_counts() {
        let c = Cocycle::uncollared(&fixtures::four1d());
        let p = SpectrumParams { n: 50, samples: 16, seed: 3, warmup: 8 };
        let law = Law::Bernoulli(vec![0.3, 0.7]);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| lyapunov_spectrum(&c, &law, &p).unwrap());
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| lyapunov_spectrum(&c, &law, &p).unwrap());
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
    }

    #[test]
    fn collared_spectrum_contains_uncollared() {
        let f = fixtures::fib1d();
        let set = collared_tiles(&f, &[0], 2, 50).unwrap();
        let r = fixed(&Cocycle::collared(&f, &set).unwrap(), vec![0]);
        assert!((r.exponents[0] - PHI.ln()).abs() < 1e-6);
        assert!(r.exponents.iter().any(|e| (e + PHI.ln()).abs() < 1e-6) || r.exponents.iter().any(|e| !e.is_finite()));
    }

    #[test]
    fn lambda1_matches_volume_growth() {
        let c = Cocycle::uncollared(&fixtures::prod2d());
        let r = lambda1_consistency(&c, &Law::Periodic(vec![0]), &SpectrumParams::default()).unwrap();
        assert!((r.predicted - 2.0 * 4f64.ln()).abs() < 1e-12);
        assert!(r.difference < 1e-6);
        let c = Cocycle::uncollared(&fixtures::four1d());
        let p = SpectrumParams { n: 100, samples: 10, seed: 1, warmup: 10 };
        assert!(lambda1_consistency(&c, &Law::Bernoulli(vec![0.5, 0.5]), &p).unwrap().difference < 1e-6);
    }

    #[test]
    fn zero_column_is_degenerate() {
        let c = Cocycle::from_matrices(1, vec![0.5], vec![IntMatrix::from_rows(&[vec![1, 0], vec![1, 0]])]);
        assert!(matches!(lyapunov_spectrum(&c, &Law::Periodic(vec![0]), &SpectrumParams::default()), Err(Error::DegenerateProduct(_))));
    }

    #[test]
    fn stabilization_examples() {
        let s = stabilized_subspace(&Cocycle::uncollared(&fixtures::degenerate()), &[0; 10], 3).unwrap();
        assert_eq!((s.rank, s.basis.len()), (1, 1));
        let s = stabilized_subspace(&Cocycle::uncollared(&fixtures::four1d()), &[0; 10], 3).unwrap();
        assert_eq!(s.rank, 2);
        assert!(matches!(stabilized_subspace(&Cocycle::uncollared(&fixtures::four1d()), &[0; 2], 3), Err(Error::RankNotStable(2))));
    }

    fn brute_rank(c: &Cocycle, word: &[usize]) -> usize {
        let mut p = DMatrix::<f64>::identity(c.size, c.size);
        for &r in word {
            p = c.factor(r).unwrap() * p;
        }
        let (_, s, _) = sorted_svd(p);
        numeric_rank(&s, RANK_TOL)
    }

    #[test]
    fn nilpotent_direction_drops_rank_once() {
        // rule 1 is invertible, rule 2 kills one direction of its transpose
        let a = IntMatrix::from_rows(&[vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 2]]);
        let b = IntMatrix::from_rows(&[vec![1, 1, 1], vec![1, 1, 1], vec![1, 0, 1]]);
        let c = Cocycle::from_matrices(1, vec![0.25, 0.25], vec![a, b]);
        let word = [0, 0, 1, 0, 1, 1, 0, 0, 1, 0];
        let s = stabilized_subspace(&c, &word, 3).unwrap();
        for m in 1..=s.ranks.len() {
            assert_eq!(s.ranks[m - 1], brute_rank(&c, &word[..m]));
        }
        assert_eq!(s.ranks, vec![3, 3, 2, 2, 2]);
        assert_eq!((s.rank, s.steps), (2, 3));
        // ker P_3 = (Aᵀ)^{-2} ker Bᵀ with ker Bᵀ = span(1, -1, 0)
        let at = c.factor(0).unwrap();
        let k = (&at * &at).lu().solve(&DVector::from_vec(vec![1.0, -1.0, 0.0])).unwrap();
        for v in &s.basis {
            let dot: f64 = v.iter().zip(k.iter()).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-9);
        }
    }

    #[test]
    fn filtration_of_symmetric_matrix() {
        let f = oseledets_filtration(&Cocycle::uncollared(&fixtures::four1d()), &[0; 60], 60).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[h, h], [h, -h]];
        for (v, w) in f.basis.iter().zip(want) {
            assert!((v[0] - w[0]).abs() < 1e-6 && (v[1] - w[1]).abs() < 1e-6, "{:?}", f.basis);
        }
        // finite-time rates carry an O(1/n) alignment term
        assert!((f.growth[0] - 4f64.ln()).abs() < 0.02 && (f.growth[1] - 2f64.ln()).abs() < 0.02);
        assert_eq!(f.blocks, vec![vec![0], vec![1]]);
        assert!(f.coefficients(&[1.0, 1.0]).unwrap()[1].abs() < 1e-12);
        let beta = [0.0, 1.0];
        let back = f.reconstruct(&f.coefficients(&beta).unwrap());
        assert!((back[0] - beta[0]).abs() < 1e-9 && (back[1] - beta[1]).abs() < 1e-9);
        assert_eq!(f.leading_index(&[1.0, -1.0], 1e-9).unwrap(), Some(1));
    }

    #[test]
    fn repeated_rates_merge() {
        let f = oseledets_filtration(&Cocycle::uncollared(&fixtures::prod2d()), &[0; 60], 60).unwrap();
        assert_eq!(f.blocks, vec![vec![0], vec![1, 2], vec![3]]);
    }

    proptest! {
        #[test]
        fn norm_axioms(a in proptest::collection::vec(-1e3f64..1e3, 4), b in proptest::collection::vec(-1e3f64..1e3, 4), t in -10f64..10.0) {
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert!(class_norm(&sum) <= class_norm(&a) + class_norm(&b) + 1e-9);
            let scaled: Vec<f64> = a.iter().map(|x| t * x).collect();
            prop_assert!((class_norm(&scaled) - t.abs() * class_norm(&a)).abs() < 1e-9);
        }

        #[test]
        fn mask_is_monotone(seed in 0u64..50) {
            let f = fixtures::four1d();
            let set = collared_tiles(&f, &[0, 1], 2, 50).unwrap();
            let c = Cocycle::collared(&f, &set).unwrap();
            let p = SpectrumParams { n: 30, samples: 2, seed, warmup: 8 };
            let r = lyapunov_spectrum(&c, &Law::Bernoulli(vec![0.5, 0.5]), &p).unwrap();
            prop_assert!(r.exponents.windows(2).all(|w| w[0] >= w[1]));
            prop_assert_eq!(r.normalized[0], 1.0);
            for i in 0..r.mask.len() {
                for j in 0..i {
                    prop_assert!(!r.mask[i] || r.mask[j]);
                }
            }
        }

        #[test]
        fn exact_and_float_apply_agree(beta in proptest::collection::vec(-50i64..50, 2), word in proptest::collection::vec(0usize..2, 0..8)) {
            let c = Cocycle::uncollared(&fixtures::four1d());
            let exact = c.apply_exact(&beta.iter().map(|&x| x as i128).collect::<Vec<_>>(), &word).unwrap();
            let float = c.apply(&beta.iter().map(|&x| x as f64).collect::<Vec<_>>(), &word).unwrap();
            for (e, f) in exact.iter().zip(float) {
                prop_assert_eq!(*e as f64, f);
            }
        }
    }
}
