//! Exact sampling through the shared frailty paths
//! `H^{(i)}_t = −Σ_k ln F_i((S(k)/t)−)` driven by one Poisson arrival sequence
//! `S(1) < S(2) < …` and first passage over unit-exponential triggers.
//!
//! Requires continuous margins with bounded support. Identical margins share
//! their path levels, so the per-row cost beyond the triggers does not grow
//! with the dimension.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::batch::SampleBatch;
use crate::distributions::Margin;
use crate::error::{Error, Result};
use crate::stdf::CopulaModel;

/// Relative bracket width at which the first-passage bisection stops.
pub const ROOT_REL_TOL: f64 = 1e-12;
/// Iteration cap of the first-passage bisection.
pub const ROOT_MAX_ITER: usize = 200;

/// `H^{(i)}_t = ∞·1{S(1) ≤ b t} − Σ_{S(k) ≤ t u} ln F_i((S(k)/t)−)`.
///
/// `arrival_sums` must extend beyond `t·u_{F_i}`.
pub fn evaluate_h(model: &CopulaModel, i: usize, t: f64, arrival_sums: &[f64]) -> Result<f64> {
    let f = model.margin(i);
    let upper = f.upper_support();
    if !upper.is_finite() {
        return Err(Error::Unsupported(format!("margin {i} has unbounded support")));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let horizon = t * upper;
    match arrival_sums.last() {
        Some(&last) if last > horizon => {}
        _ => {
            return Err(Error::InvalidInput(format!(
                "arrival sums must extend past t·u = {horizon}"
            )))
        }
    }
    if arrival_sums[0] <= f.lower_support() * t {
        return Ok(f64::INFINITY);
    }
    let mut h = 0.0;
    for &s in arrival_sums.iter().take_while(|&&s| s <= horizon) {
        h -= f.cdf_left(s / t).ln();
    }
    Ok(h)
}

/// Bisection root of a nondecreasing continuous `f` with `f(lo) ≤ 0 ≤ f(hi)`.
pub fn solve_first_passage<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(Error::Internal(format!(
            "first-passage bracket [{lo}, {hi}] does not straddle zero: f = ({flo}, {fhi})"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..ROOT_MAX_ITER {
        if hi - lo <= ROOT_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row's latent factor and crossing data.
#[derive(Debug, Clone, PartialEq)]
pub struct FrailtyTrajectory {
    /// `S(1) < S(2) < …`, one entry beyond the last crossing.
    pub arrival_sums: Vec<f64>,
    /// `ξ_1, …, ξ_d`.
    pub triggers: Vec<f64>,
    /// `I(i)`: the path crosses `ξ_i` in `(S(I)/u, S(I+1)/u]`.
    pub crossing_index: Vec<usize>,
    /// `x^{(i)}_N` at the final `N`.
    pub levels: Vec<f64>,
}

/// How [`DeFinettiSampler::first_passage`] locates the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    /// Closed form where the margin registers one, bisection otherwise.
    Auto,
    Bisection,
}

#[derive(Debug, Clone)]
struct Group {
    margin: Margin,
    lower: f64,
    upper: f64,
    coords: Vec<usize>,
}

/// Precomputed plan for sampling one model row by row.
#[derive(Debug, Clone)]
pub struct DeFinettiSampler {
    d: usize,
    groups: Vec<Group>,
    group_of: Vec<usize>,
}

fn same_margin(a: &Margin, b: &Margin) -> bool {
    Arc::ptr_eq(a, b) || matches!((a.spec(), b.spec()), (Some(x), Some(y)) if x == y)
}

impl DeFinettiSampler {
    pub fn new(model: &CopulaModel) -> Result<Self> {
        let mut groups: Vec<Group> = Vec::new();
        let mut group_of = Vec::with_capacity(model.dim());
        for (i, m) in model.margins().iter().enumerate() {
            if !m.is_continuous() {
                return Err(Error::Unsupported(format!(
                    "frailty sampling needs continuous margins; margin {} has atoms",
                    i + 1
                )));
            }
            if !m.upper_support().is_finite() {
                return Err(Error::Unsupported(format!(
                    "frailty sampling needs bounded support; margin {} is unbounded",
                    i + 1
                )));
            }
            let g = match groups.iter().position(|g| same_margin(&g.margin, m)) {
                Some(g) => g,
                None => {
                    groups.push(Group {
                        margin: m.clone(),
                        lower: m.lower_support(),
                        upper: m.upper_support(),
                        coords: Vec::new(),
                    });
                    groups.len() - 1
                }
            };
            groups[g].coords.push(i);
            group_of.push(g);
        }
        Ok(DeFinettiSampler { d: model.dim(), groups, group_of })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    // x_N = ∞·1{S(1)/S(N) < b/u} − Σ_{k<N} ln F(S(k)/t_N), t_N = S(N)/u
    fn level(g: &Group, sums: &[f64]) -> f64 {
        let n = sums.len();
        let t = sums[n - 1] / g.upper;
        if sums[0] < g.lower * t {
            return f64::INFINITY;
        }
        let mut x = 0.0;
        for &s in &sums[..n - 1] {
            x -= g.margin.log_cdf(s / t);
        }
        x
    }

    // Draws arrivals until every group's level exceeds its largest trigger.
    // Returns the arrival sums and per-group level histories, index p
    // holding x_{p+1}; x_1 = 0.
    fn run_levels<R: Rng + ?Sized>(&self, rng: &mut R, triggers: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut sums = vec![Exp1.sample(rng)];
        let targets: Vec<f64> = self
            .groups
            .iter()
            .map(|g| g.coords.iter().map(|&i| triggers[i]).fold(0.0, f64::max))
            .collect();
        let mut history: Vec<Vec<f64>> = vec![vec![0.0]; self.groups.len()];
        let mut open = self.groups.len();
        while open > 0 {
            let e: f64 = Exp1.sample(rng);
            sums.push(sums[sums.len() - 1] + e);
            open = 0;
            for ((g, hist), &target) in self.groups.iter().zip(history.iter_mut()).zip(&targets) {
                if hist[hist.len() - 1] > target {
                    continue;
                }
                let x = Self::level(g, &sums);
                hist.push(x);
                if x <= target {
                    open += 1;
                }
            }
        }
        (sums, history)
    }

    fn log_prefix(sums: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(sums.len() + 1);
        out.push(0.0);
        for s in sums {
            out.push(out[out.len() - 1] + s.ln());
        }
        out
    }

    /// Steps (1.1)–(2.3): triggers, arrivals and crossing indices.
    pub fn trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> FrailtyTrajectory {
        let triggers: Vec<f64> = (0..self.d).map(|_| Exp1.sample(rng)).collect();
        let (sums, history) = self.run_levels(rng, &triggers);
        let mut crossing_index = vec![0; self.d];
        let mut levels = vec![0.0; self.d];
        for (g, hist) in self.groups.iter().zip(&history) {
            for &i in &g.coords {
                // First position p with x_{p+1} > ξ_i gives I(i) = p.
                crossing_index[i] = hist.partition_point(|&x| x <= triggers[i]);
                levels[i] = hist[hist.len() - 1];
            }
        }
        FrailtyTrajectory { arrival_sums: sums, triggers, crossing_index, levels }
    }

    /// Step (3): the first-passage time `Y_i` of coordinate `i`.
    pub fn first_passage(&self, traj: &FrailtyTrajectory, i: usize, method: RootMethod) -> Result<f64> {
        let big_i = traj.crossing_index[i];
        let log_sum = traj.arrival_sums.iter().take(big_i).map(|s| s.ln()).sum();
        self.passage(&self.groups[self.group_of[i]], &traj.arrival_sums, log_sum, big_i, traj.triggers[i], method)
        .map_err(|e| match e {
            Error::Internal(m) => Error::Internal(format!("coordinate {i}: {m}")),
            other => other,
        })
    }

    fn passage(
        &self,
        g: &Group,
        sums: &[f64],
        log_sum: f64,
        big_i: usize,
        xi: f64,
        method: RootMethod,
    ) -> Result<f64> {
        if big_i == 0 || big_i >= sums.len() {
            return Err(Error::Internal(format!("crossing index {big_i} out of range")));
        }
        let lo = sums[big_i - 1] / g.upper;
        let mut hi = sums[big_i] / g.upper;
        let finite = |t: f64| -> f64 {
            let mut h = 0.0;
            for &s in &sums[..big_i] {
                h -= g.margin.log_cdf(s / t);
            }
            h - xi
        };
        if g.lower > 0.0 {
            // The path jumps to infinity once ε_1 < b·t.
            let kill = sums[0] / g.lower;
            if kill < hi {
                hi = kill;
                if finite(hi) < 0.0 {
                    return Ok(hi);
                }
            }
        }
        if method == RootMethod::Auto {
            if let Some(y) = g.margin.first_passage_closed_form(log_sum, big_i, xi) {
                return Ok(y);
            }
        }
        solve_first_passage(finite, lo, hi)
    }

    /// Fills `out` with `U_i = exp(−Y_i)` for one row. Consumes the random
    /// stream exactly as [`trajectory`](Self::trajectory) does.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        for xi in out.iter_mut() {
            *xi = Exp1.sample(rng);
        }
        let (sums, history) = self.run_levels(rng, out);
        let log_prefix = Self::log_prefix(&sums);
        for (g, hist) in self.groups.iter().zip(&history) {
            for &i in &g.coords {
                let xi = out[i];
                let big_i = hist.partition_point(|&x| x <= xi);
                let closed = if g.lower == 0.0 && big_i > 0 && big_i < sums.len() {
                    g.margin.first_passage_closed_form(log_prefix[big_i], big_i, xi)
                } else {
                    None
                };
                let y = match closed {
                    Some(y) => y,
                    None => self.passage(g, &sums, log_prefix[big_i.min(sums.len())], big_i, xi, RootMethod::Auto)?,
                };
                out[i] = (-y).exp();
            }
        }
        Ok(())
    }
}

/// Draws `n` rows of `C_F` with the frailty construction. Row `r` uses
/// stream `r` of `seed`, so the output does not depend on `threads`.
pub fn sample_definetti(model: &CopulaModel, n: usize, seed: u64, threads: usize) -> Result<SampleBatch> {
    let sampler = DeFinettiSampler::new(model)?;
    SampleBatch::generate(n, model.dim(), seed, threads, |rng, out| sampler.sample_row(rng, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::stream_rng;
    use crate::distributions::DistributionSpec;
    use approx::assert_abs_diff_eq;

    fn uniform(d: usize) -> CopulaModel {
        CopulaModel::exchangeable(DistributionSpec::uniform_half(), d).unwrap()
    }

    #[test]
    fn h_hand_values() {
        let m = uniform(1);
        let sums = [1.0, 2.5];
        assert_abs_diff_eq!(evaluate_h(&m, 0, 1.0, &sums).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(evaluate_h(&m, 0, 0.4, &sums).unwrap(), 0.0);
        assert_eq!(evaluate_h(&m, 0, 0.0, &sums).unwrap(), 0.0);
        assert!(evaluate_h(&m, 0, 2.0, &sums).is_err());
        let g = CopulaModel::exchangeable(DistributionSpec::frechet(0.5), 1).unwrap();
        assert!(matches!(evaluate_h(&g, 0, 1.0, &sums), Err(Error::Unsupported(_))));
    }

    #[test]
    fn hand_root() {
        // I = 1, S(1) = 1, ξ = ln 2: Y = ½·exp(ln 2 + ln 1) = 1
        let m = uniform(1);
        let sampler = DeFinettiSampler::new(&m).unwrap();
        let traj = FrailtyTrajectory {
            arrival_sums: vec![1.0, 2.5],
            triggers: vec![2f64.ln()],
            crossing_index: vec![1],
            levels: vec![2.5f64.ln()],
        };
        let y = sampler.first_passage(&traj, 0, RootMethod::Auto).unwrap();
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-15);
        let y = sampler.first_passage(&traj, 0, RootMethod::Bisection).unwrap();
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn bracket_must_straddle() {
        assert!(matches!(solve_first_passage(|t| t - 5.0, 0.0, 1.0), Err(Error::Internal(_))));
        let r = solve_first_passage(|t: f64| t * t - 2.0, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn trajectory_invariants() {
        let m = uniform(5);
        let sampler = DeFinettiSampler::new(&m).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..500 {
            let traj = sampler.trajectory(&mut rng);
            assert!(traj.arrival_sums.windows(2).all(|w| w[0] < w[1]));
            // evaluate_h needs arrivals beyond the horizon.
            let mut extended = traj.arrival_sums.clone();
            extended.push(extended[extended.len() - 1] + 1.0);
            for i in 0..5 {
                let big_i = traj.crossing_index[i];
                assert!(big_i >= 1);
                // Levels recomputed through the definition bracket the trigger.
                let u = 2.0;
                let lo_level = evaluate_h(&m, i, traj.arrival_sums[big_i - 1] / u, &extended).unwrap();
                let hi_level = evaluate_h(&m, i, traj.arrival_sums[big_i] / u, &extended).unwrap();
                assert!(lo_level <= traj.triggers[i] + 1e-12);
                assert!(hi_level > traj.triggers[i] - 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_matches_bisection() {
        let m = uniform(3);
        let sampler = DeFinettiSampler::new(&m).unwrap();
        let mut rng = stream_rng(17, 0);
        for _ in 0..1000 {
            let traj = sampler.trajectory(&mut rng);
            for i in 0..3 {
                let a = sampler.first_passage(&traj, i, RootMethod::Auto).unwrap();
                let b = sampler.first_passage(&traj, i, RootMethod::Bisection).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn rejects_atoms_and_unbounded_margins() {
        let tp = CopulaModel::exchangeable(DistributionSpec::two_point(0.5), 2).unwrap();
        assert!(matches!(sample_definetti(&tp, 10, 1, 1), Err(Error::Unsupported(_))));
        let g = CopulaModel::exchangeable(DistributionSpec::frechet(0.5), 2).unwrap();
        assert!(matches!(sample_definetti(&g, 10, 1, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn fast_row_matches_trajectory_route() {
        let m = CopulaModel::from_specs(&[
            DistributionSpec::uniform_half(),
            DistributionSpec::bounded_exp(0.5),
            DistributionSpec::uniform_half(),
        ])
        .unwrap();
        let sampler = DeFinettiSampler::new(&m).unwrap();
        let mut out = [0.0; 3];
        for row in 0..300 {
            sampler.sample_row(&mut stream_rng(12, row), &mut out).unwrap();
            let traj = sampler.trajectory(&mut stream_rng(12, row));
            for (i, &u) in out.iter().enumerate() {
                let y = sampler.first_passage(&traj, i, RootMethod::Auto).unwrap();
                assert_abs_diff_eq!(u, (-y).exp(), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn reproducible_and_in_range() {
        let m = CopulaModel::from_specs(&[
            DistributionSpec::uniform_half(),
            DistributionSpec::bounded_exp(0.5),
            DistributionSpec::bounded_exp(2.0),
        ])
        .unwrap();
        let a = sample_definetti(&m, 300, 5, 1).unwrap();
        let b = sample_definetti(&m, 300, 5, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|&u| (0.0..=1.0).contains(&u)));
    }

    #[test]
    fn single_margin_is_uniform_on_average() {
        let m = CopulaModel::exchangeable(DistributionSpec::bounded_exp(1.5), 1).unwrap();
        let batch = sample_definetti(&m, 20_000, 8, 1).unwrap();
        let mean: f64 = batch.data().iter().sum::<f64>() / 20_000.0;
        // sd of the mean is (1/√12)/√n ≈ 0.002
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }
}
