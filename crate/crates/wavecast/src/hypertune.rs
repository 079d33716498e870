//! Hyperparameter search over a fixed grid with a Gaussian-process surrogate
//! and expected improvement, in the style of classic Bayesian optimization
//! services: a handful of random space-filling draws first, then EI argmax
//! over a Monte-Carlo sample of the unobserved grid.
//!
//! Failed objective evaluations are penalized with π/2 (the MAAPE ceiling)
//! so the surrogate steers away from broken regions, and every evaluation is
//! appended to a CSV ledger that later runs resume from.

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// One searchable dimension: a name and its discrete value list.
#[derive(Debug, Clone, PartialEq)]
pub struct Dimension {
    pub name: String,
    pub values: Vec<f64>,
}

impl Dimension {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "dimension {name} has no values");
        Dimension { name: name.to_string(), values }
    }
}

/// Cartesian grid of candidate settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub dims: Vec<Dimension>,
}

/// One grid point, identified by per-dimension indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub indices: Vec<usize>,
}

impl ParamGrid {
    pub fn new(dims: Vec<Dimension>) -> Self {
        assert!(!dims.is_empty());
        ParamGrid { dims }
    }

    /// The default forecasting search space: hidden width, input steps,
    /// batch size, learning rate, stacked layers, regularization strength and
    /// the forcing-decay constant as a fraction of the epoch budget.
    pub fn forecasting_default() -> Self {
        ParamGrid::new(vec![
            Dimension::new("hidden", vec![32.0, 64.0]),
            Dimension::new("input_steps", vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0]),
            Dimension::new("batch_size", vec![16.0, 32.0, 64.0, 128.0, 256.0]),
            Dimension::new("learning_rate", (1..=10).map(|i| i as f64 * 0.001).collect()),
            Dimension::new("layers", vec![1.0, 2.0, 4.0]),
            Dimension::new("lambda", (1..=10).map(|i| i as f64 * 0.001).collect()),
            Dimension::new("k_fraction", (1..=10).map(|i| i as f64 * 0.1).collect()),
        ])
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.dims.iter().map(|d| d.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mixed-radix decode of a flat index.
    pub fn candidate(&self, mut flat: usize) -> Candidate {
        assert!(flat < self.len(), "flat index out of range");
        let mut indices = vec![0; self.dims.len()];
        for (k, d) in self.dims.iter().enumerate().rev() {
            indices[k] = flat % d.values.len();
            flat /= d.values.len();
        }
        Candidate { indices }
    }

    /// Inverse of [`candidate`](Self::candidate).
    pub fn flat_index(&self, c: &Candidate) -> usize {
        let mut flat = 0;
        for (k, d) in self.dims.iter().enumerate() {
            flat = flat * d.values.len() + c.indices[k];
        }
        flat
    }

    /// Concrete values of a candidate, dimension order.
    pub fn values(&self, c: &Candidate) -> Vec<f64> {
        self.dims
            .iter()
            .zip(&c.indices)
            .map(|(d, &i)| d.values[i])
            .collect()
    }

    pub fn value(&self, c: &Candidate, name: &str) -> Option<f64> {
        self.dims
            .iter()
            .position(|d| d.name == name)
            .map(|k| self.dims[k].values[c.indices[k]])
    }

    /// Map a candidate to the unit cube: index/(len−1) per dimension, 0 for
    /// single-value dimensions.
    pub fn normalize(&self, c: &Candidate) -> Vec<f64> {
        self.dims
            .iter()
            .zip(&c.indices)
            .map(|(d, &i)| {
                if d.values.len() > 1 {
                    i as f64 / (d.values.len() - 1) as f64
                } else {
                    0.0
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Gaussian-process surrogate
// ---------------------------------------------------------------------------

const JITTER: f64 = 1e-6;

/// Matérn 5/2 covariance at distance `r`.
pub fn matern52(r: f64, lengthscale: f64, signal_var: f64) -> f64 {
    let s = 5.0f64.sqrt() * r / lengthscale;
    signal_var * (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix
/// stored as dense rows. Returns `None` when the matrix is not SPD.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn solve_lower(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

fn solve_upper_from_lower(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    // solves Lᵀ x = b
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Fitted GP posterior over normalized grid coordinates.
#[derive(Debug, Clone)]
pub struct GpSurrogate {
    x: Vec<Vec<f64>>,
    mean: f64,
    pub lengthscale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
    chol: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    pub log_marginal: f64,
}

impl GpSurrogate {
    fn fit_fixed(x: &[Vec<f64>], y: &[f64], lengthscale: f64, signal_var: f64, noise_var: f64) -> Option<Self> {
        let n = x.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = matern52(euclidean(&x[i], &x[j]), lengthscale, signal_var);
                k[i][j] = v;
                k[j][i] = v;
            }
            k[i][i] += noise_var + JITTER;
        }
        let chol = cholesky(&k)?;
        let tmp = solve_lower(&chol, &centered);
        let alpha = solve_upper_from_lower(&chol, &tmp);
        let log_det: f64 = chol.iter().enumerate().map(|(i, row)| row[i].ln()).sum();
        let log_marginal = -0.5
            * centered
                .iter()
                .zip(&alpha)
                .map(|(a, b)| a * b)
                .sum::<f64>()
            - log_det
            - n as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln();
        Some(GpSurrogate {
            x: x.to_vec(),
            mean,
            lengthscale,
            signal_var,
            noise_var,
            chol,
            alpha,
            log_marginal,
        })
    }

    /// Posterior mean and variance at a query point.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let k_star: Vec<f64> = self
            .x
            .iter()
            .map(|xi| matern52(euclidean(xi, q), self.lengthscale, self.signal_var))
            .collect();
        let mu = self.mean
            + k_star
                .iter()
                .zip(&self.alpha)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let v = solve_lower(&self.chol, &k_star);
        let var = self.signal_var - v.iter().map(|x| x * x).sum::<f64>();
        (mu, var.max(0.0))
    }
}

/// Select kernel hyperparameters by marginal likelihood over a small fixed
/// grid of lengthscales and noise levels; signal variance follows the sample
/// variance of the observations.
pub fn gp_fit(x: &[Vec<f64>], y: &[f64]) -> Option<GpSurrogate> {
    assert_eq!(x.len(), y.len());
    if x.is_empty() {
        return None;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).max(1e-10);
    let mut best: Option<GpSurrogate> = None;
    for &ls in &[0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
        for &noise_frac in &[1e-6, 1e-4, 1e-2] {
            if let Some(gp) = GpSurrogate::fit_fixed(x, y, ls, var, var * noise_frac) {
                if best.as_ref().map_or(true, |b| gp.log_marginal > b.log_marginal) {
                    best = Some(gp);
                }
            }
        }
    }
    best
}

/// Expected improvement for minimization: with z = (best − μ)/σ,
/// EI = σ·(z·Φ(z) + φ(z)); zero when the posterior is (numerically)
/// deterministic.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma <= 1e-12 {
        return 0.0;
    }
    let z = (best - mu) / sigma;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    sigma * (z * std_normal.cdf(z) + std_normal.pdf(z))
}

// ---------------------------------------------------------------------------
// The search loop
// ---------------------------------------------------------------------------

/// Score assigned when the objective reports failure; matches the MAAPE
/// ceiling so broken settings rank behind every working one.
pub const FAILURE_PENALTY: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone)]
pub struct TuneConfig {
    /// Total objective evaluations.
    pub budget: usize,
    /// Random space-filling draws before the surrogate takes over.
    pub init_random: usize,
    /// Monte-Carlo sample size of unobserved candidates per suggestion.
    pub mc_candidates: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            budget: 100,
            init_random: 5,
            mc_candidates: 10_000,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneRecord {
    pub flat_index: usize,
    pub score: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: Candidate,
    pub best_score: f64,
    pub history: Vec<TuneRecord>,
}

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("budget exhausted with no successful evaluation")]
    NothingEvaluated,
    #[error("ledger io: {0}")]
    Io(#[from] std::io::Error),
    #[error("ledger line {0} is malformed")]
    BadLedgerLine(usize),
}

/// Pick the next grid point to evaluate.
pub fn suggest_next(
    grid: &ParamGrid,
    history: &[TuneRecord],
    cfg: &TuneConfig,
    rng: &mut impl Rng,
) -> Option<usize> {
    let observed: HashSet<usize> = history.iter().map(|r| r.flat_index).collect();
    let total = grid.len();
    if observed.len() >= total {
        return None;
    }

    if history.len() < cfg.init_random {
        loop {
            let i = rng.gen_range(0..total);
            if !observed.contains(&i) {
                return Some(i);
            }
        }
    }

    let x: Vec<Vec<f64>> = history
        .iter()
        .map(|r| grid.normalize(&grid.candidate(r.flat_index)))
        .collect();
    let y: Vec<f64> = history.iter().map(|r| r.score).collect();
    let best = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let gp = match gp_fit(&x, &y) {
        Some(gp) => gp,
        None => {
            // degenerate surrogate: fall back to a random unobserved draw
            loop {
                let i = rng.gen_range(0..total);
                if !observed.contains(&i) {
                    return Some(i);
                }
            }
        }
    };

    let unobserved_count = total - observed.len();
    let pool: Vec<usize> = if unobserved_count <= cfg.mc_candidates {
        (0..total).filter(|i| !observed.contains(i)).collect()
    } else {
        let mut seen = HashSet::new();
        let mut pool = Vec::with_capacity(cfg.mc_candidates);
        while pool.len() < cfg.mc_candidates {
            let i = rng.gen_range(0..total);
            if !observed.contains(&i) && seen.insert(i) {
                pool.push(i);
            }
        }
        pool
    };

    pool.into_iter()
        .map(|i| {
            let (mu, var) = gp.predict(&grid.normalize(&grid.candidate(i)));
            (i, expected_improvement(mu, var.sqrt(), best))
        })
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
}

/// Run the search. The objective returns the score to minimize (typically
/// validation MAAPE); `Err` marks a failed setting and costs [`FAILURE_PENALTY`].
/// When a ledger path is given, previous evaluations are replayed from it and
/// new ones appended.
pub fn tune<F>(
    grid: &ParamGrid,
    mut objective: F,
    cfg: &TuneConfig,
    rng: &mut impl Rng,
    ledger: Option<&Path>,
) -> Result<TuneResult, TuneError>
where
    F: FnMut(&Candidate) -> Result<f64, String>,
{
    let mut history = match ledger {
        Some(path) if path.exists() => read_ledger(path)?,
        _ => Vec::new(),
    };

    while history.len() < cfg.budget {
        let flat = match suggest_next(grid, &history, cfg, rng) {
            Some(i) => i,
            None => break,
        };
        let candidate = grid.candidate(flat);
        let (score, failed) = match objective(&candidate) {
            Ok(s) if s.is_finite() => (s, false),
            _ => (FAILURE_PENALTY, true),
        };
        let record = TuneRecord { flat_index: flat, score, failed };
        if let Some(path) = ledger {
            append_ledger(path, &record, history.is_empty())?;
        }
        history.push(record);
    }

    let best = history
        .iter()
        .min_by(|a, b| a.score.partial_cmp(&b.score).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or(TuneError::NothingEvaluated)?;
    Ok(TuneResult {
        best: grid.candidate(best.flat_index),
        best_score: best.score,
        history: history.clone(),
    })
}

const LEDGER_HEADER: &str = "flat_index,score,failed";

fn append_ledger(path: &Path, record: &TuneRecord, first: bool) -> Result<(), std::io::Error> {
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    if first && file.metadata()?.len() == 0 {
        writeln!(file, "{LEDGER_HEADER}")?;
    }
    writeln!(file, "{},{:.17e},{}", record.flat_index, record.score, record.failed)?;
    Ok(())
}

fn read_ledger(path: &Path) -> Result<Vec<TuneRecord>, TuneError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line == LEDGER_HEADER {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(TuneError::BadLedgerLine(lineno + 1));
        }
        out.push(TuneRecord {
            flat_index: parts[0].parse().map_err(|_| TuneError::BadLedgerLine(lineno + 1))?,
            score: parts[1].parse().map_err(|_| TuneError::BadLedgerLine(lineno + 1))?,
            failed: parts[2].parse().map_err(|_| TuneError::BadLedgerLine(lineno + 1))?,
        });
    }
    Ok(out)
}

/// Deterministic space-filling shuffle of all flat indices, useful for
/// exhaustive sweeps of small grids.
pub fn shuffled_indices(grid: &ParamGrid, rng: &mut impl Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    idx.shuffle(rng);
    idx
}
