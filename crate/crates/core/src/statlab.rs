//! Kolmogorov–Smirnov tests, empirical copulas, an exchangeability test and
//! the sampler scaling benchmark.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::batch::SampleBatch;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::frailty::sample_definetti;
use crate::pickands::sample_pickands;
use crate::stdf::CopulaModel;

/// Smallest sample accepted by [`ks_uniform`].
pub const KS_MIN_SAMPLES: usize = 100;

/// Outcome of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub alpha: f64,
    pub pass: bool,
}

/// Asymptotic `c(α) = sqrt(−ln(α/2)/2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-0.5 * (0.5 * alpha).ln()).sqrt()
}

fn ks_result(statistic: f64, critical: f64, alpha: f64) -> KsResult {
    KsResult { statistic, critical, alpha, pass: statistic < critical }
}

/// One-sample KS statistic of `samples` against a continuous `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("KS test needs at least one sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("KS test got NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(ks_result(d, ks_coefficient(alpha) / n.sqrt(), alpha))
}

/// KS test of `samples` against the uniform law on `[0, 1]`.
pub fn ks_uniform(samples: &[f64], alpha: f64) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "KS uniformity test needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(x) = samples.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
        return Err(Error::InvalidInput(format!("value {x} is outside [0, 1]")));
    }
    ks_one_sample(samples, |x| x, alpha)
}

/// Two-sample KS test with critical value `c(α)·sqrt((n+m)/(nm))`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("two-sample KS test needs non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(ks_result(d, ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt(), alpha))
}

/// `min_i (Y_i / t_i) · ℓ(t)` per row, with `Y_i = −ln U_i`. Since
/// `P(Y > y) = exp(−ℓ(y))`, this is unit exponential when `ell = ℓ(t)`.
pub fn scaled_weighted_minimum(batch: &SampleBatch, t: &[f64], ell: f64) -> Result<Vec<f64>> {
    if t.len() != batch.dim() {
        return Err(Error::InvalidInput(format!("expected {} weights, got {}", batch.dim(), t.len())));
    }
    Ok(batch
        .iter_rows()
        .map(|row| {
            row.iter().zip(t).map(|(u, ti)| -u.ln() / ti).fold(f64::INFINITY, f64::min) * ell
        })
        .collect())
}

/// Rank-based empirical copula of a batch.
#[derive(Debug, Clone)]
pub struct EmpiricalCopula {
    n: usize,
    d: usize,
    // Row-major pseudo-observations rank / n.
    pseudo: Vec<f64>,
}

impl EmpiricalCopula {
    pub fn new(batch: &SampleBatch) -> Self {
        let (n, d) = (batch.rows(), batch.dim());
        let mut pseudo = vec![0.0; n * d];
        let mut order: Vec<usize> = (0..n).collect();
        for j in 0..d {
            order.sort_by(|&a, &b| batch.row(a)[j].total_cmp(&batch.row(b)[j]).then(a.cmp(&b)));
            for (rank, &row) in order.iter().enumerate() {
                pseudo[row * d + j] = (rank + 1) as f64 / n as f64;
            }
        }
        EmpiricalCopula { n, d, pseudo }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    /// `Ĉ(u) = #{rows with every pseudo-observation ≤ u_j} / n`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.d, "argument dimension");
        if self.n == 0 {
            return 0.0;
        }
        let count = self
            .pseudo
            .chunks(self.d)
            .filter(|row| row.iter().zip(u).all(|(r, uj)| r <= uj))
            .count();
        count as f64 / self.n as f64
    }
}

/// The 9-point grid `{0.1, …, 0.9}` used per axis by the copula checks.
pub fn unit_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

/// Outcome of [`asymmetry_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryResult {
    /// `max |Ĉ(u,v) − Ĉ(v,u)|` over the 9×9 grid.
    pub statistic: f64,
    /// `4·sqrt(0.25/n)`.
    pub threshold: f64,
    /// Grid point attaining the statistic.
    pub argmax: (f64, f64),
    /// All exceedances of the threshold share one sign.
    pub sign_consistent: bool,
    pub significant: bool,
}

/// Tests a bivariate batch for exchangeability.
pub fn asymmetry_test(batch: &SampleBatch) -> Result<AsymmetryResult> {
    if batch.dim() != 2 {
        return Err(Error::InvalidInput(format!("asymmetry test needs d = 2, got {}", batch.dim())));
    }
    if batch.rows() == 0 {
        return Err(Error::InvalidInput("asymmetry test needs a non-empty batch".into()));
    }
    let ec = EmpiricalCopula::new(batch);
    let threshold = 4.0 * (0.25 / batch.rows() as f64).sqrt();
    let grid = unit_grid();
    let mut statistic = 0.0;
    let mut argmax = (grid[0], grid[0]);
    let (mut above, mut below) = (0, 0);
    for (a, &u) in grid.iter().enumerate() {
        for &v in &grid[a + 1..] {
            let diff = ec.eval(&[u, v]) - ec.eval(&[v, u]);
            if diff.abs() > statistic {
                statistic = diff.abs();
                argmax = (u, v);
            }
            if diff > threshold {
                above += 1;
            } else if diff < -threshold {
                below += 1;
            }
        }
    }
    let sign_consistent = above == 0 || below == 0;
    Ok(AsymmetryResult {
        statistic,
        threshold,
        argmax,
        sign_consistent,
        significant: statistic > threshold && sign_consistent,
    })
}

/// Sampler measured by [`bench_scaling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Definetti,
    Pickands,
}

impl Sampler {
    pub fn label(self) -> &'static str {
        match self {
            Sampler::Definetti => "De Finetti",
            Sampler::Pickands => "Pickands",
        }
    }

    pub fn sample(self, model: &CopulaModel, n: usize, seed: u64, threads: usize) -> Result<SampleBatch> {
        match self {
            Sampler::Definetti => sample_definetti(model, n, seed, threads),
            Sampler::Pickands => sample_pickands(model, n, seed, threads),
        }
    }
}

/// Wall-clock seconds of one `(sampler, d)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub sampler: Sampler,
    pub d: usize,
    /// Median over repetitions.
    pub seconds: f64,
    pub repetitions: usize,
}

/// Timings of both samplers on the exchangeable `uniform_half` model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub seed: u64,
    pub threads: usize,
    pub dims: Vec<usize>,
    pub host: String,
    pub cells: Vec<BenchCell>,
}

/// Repetitions per cell; the median is reported.
pub const BENCH_REPETITIONS: usize = 3;

/// Times batch generation for every `(sampler, d)`.
pub fn bench_scaling(dims: &[usize], n: usize, samplers: &[Sampler], seed: u64, threads: usize) -> Result<BenchReport> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidInput("dimensions must be a non-empty list of positive integers".into()));
    }
    let mut cells = Vec::new();
    for &sampler in samplers {
        for &d in dims {
            let model = CopulaModel::exchangeable(DistributionSpec::uniform_half(), d)?;
            // Untimed warm-up so page faults and lazy init stay out of the cells.
            sampler.sample(&model, n.min(100), seed, threads)?;
            let mut times = Vec::with_capacity(BENCH_REPETITIONS);
            for _ in 0..BENCH_REPETITIONS {
                let start = Instant::now();
                let batch = sampler.sample(&model, n, seed, threads)?;
                times.push(start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE));
                std::hint::black_box(batch);
            }
            times.sort_by(f64::total_cmp);
            cells.push(BenchCell { sampler, d, seconds: times[times.len() / 2], repetitions: times.len() });
        }
    }
    Ok(BenchReport { n, seed, threads, dims: dims.to_vec(), host: host_note(), cells })
}

fn host_note() -> String {
    let cores = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1);
    format!("{}-{}, {cores} logical cores", std::env::consts::OS, std::env::consts::ARCH)
}

impl BenchReport {
    pub fn seconds(&self, sampler: Sampler, d: usize) -> Option<f64> {
        self.cells.iter().find(|c| c.sampler == sampler && c.d == d).map(|c| c.seconds)
    }

    /// Time at the largest dimension over time at the smallest.
    pub fn ratio(&self, sampler: Sampler) -> Option<f64> {
        let lo = *self.dims.iter().min()?;
        let hi = *self.dims.iter().max()?;
        Some(self.seconds(sampler, hi)? / self.seconds(sampler, lo)?)
    }

    pub fn samplers(&self) -> Vec<Sampler> {
        let mut out: Vec<Sampler> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.sampler) {
                out.push(c.sampler);
            }
        }
        out
    }

    /// Plain-text table: one column per dimension, one row per sampler.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<14}", "Dimension d");
        for d in &self.dims {
            let _ = write!(s, "{d:>10}");
        }
        let _ = writeln!(s, "{:>12}", "ratio");
        for sampler in self.samplers() {
            let _ = write!(s, "{:<14}", sampler.label());
            for &d in &self.dims {
                match self.seconds(sampler, d) {
                    Some(t) => {
                        let _ = write!(s, "{t:>10.4}");
                    }
                    None => {
                        let _ = write!(s, "{:>10}", "-");
                    }
                }
            }
            match self.ratio(sampler) {
                Some(r) => {
                    let _ = writeln!(s, "{r:>12.2}");
                }
                None => {
                    let _ = writeln!(s, "{:>12}", "-");
                }
            }
        }
        let _ = writeln!(
            s,
            "CPU time in seconds for {} samples (median of {BENCH_REPETITIONS}), {} thread(s), seed {}, {}",
            self.n, self.threads, self.seed, self.host
        );
        s
    }
}
