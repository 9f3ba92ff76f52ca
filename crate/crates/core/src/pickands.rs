//! Exact sampling from the angular (Pickands) representation
//! `Z_i = max_k Q_i^{(k)} / (ε_1 + ⋯ + ε_k)` with mean-`1/d` exponentials,
//! stopped once `1/(ε_1 + ⋯ + ε_n)` falls below the smallest running maximum.
//!
//! The angular vector is `Q = W / ΣW`, where one uniformly chosen coordinate
//! is drawn from its size-biased law `x dF_i(x)` and the others from `F_i`.
//! Works for any margins that support size-biased draws.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1};

use crate::batch::SampleBatch;
use crate::error::{Error, Result};
use crate::stdf::CopulaModel;

/// A point `(Q_1, …, Q_d)` of the unit simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(pub Vec<f64>);

impl SimplexPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Fills `q` with one draw of the angular vector.
pub fn sample_q_into(model: &CopulaModel, rng: &mut dyn RngCore, q: &mut [f64]) -> Result<()> {
    let d = model.dim();
    let chosen = rng.random_range(0..d);
    let mut total = 0.0;
    for (i, (w, margin)) in q.iter_mut().zip(model.margins()).enumerate() {
        *w = if i == chosen { margin.sample_size_biased(rng)? } else { margin.sample(rng) };
        total += *w;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numeric(format!("angular weights sum to {total}")));
    }
    for w in q.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// One draw of the angular vector `Q`.
pub fn sample_q(model: &CopulaModel, rng: &mut dyn RngCore) -> Result<SimplexPoint> {
    let mut q = vec![0.0; model.dim()];
    sample_q_into(model, rng, &mut q)?;
    Ok(SimplexPoint(q))
}

/// Running maxima of one row of the record construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PickandsState {
    /// `Z_n`, in Fréchet scale.
    pub partial_max: Vec<f64>,
    /// `m_n = min_i Z_{n,i}`.
    pub min_component: f64,
    /// `ε_1 + ⋯ + ε_n`.
    pub arrival_sum: f64,
    pub n: usize,
}

impl PickandsState {
    pub fn new(d: usize) -> Self {
        PickandsState { partial_max: vec![0.0; d], min_component: 0.0, arrival_sum: 0.0, n: 0 }
    }

    /// Folds in `Q^{(n+1)}` with arrival increment `epsilon`; returns true once
    /// `1/(ε_1 + ⋯ + ε_n) ≤ m_n`.
    pub fn step(&mut self, q: &[f64], epsilon: f64) -> bool {
        self.n += 1;
        self.arrival_sum += epsilon;
        let scale = 1.0 / self.arrival_sum;
        let mut min = f64::INFINITY;
        for (z, &qi) in self.partial_max.iter_mut().zip(q) {
            let candidate = qi * scale;
            if candidate > *z {
                *z = candidate;
            }
            min = min.min(*z);
        }
        self.min_component = min;
        self.is_stopped()
    }

    pub fn is_stopped(&self) -> bool {
        self.n > 0 && 1.0 / self.arrival_sum <= self.min_component
    }
}

/// Runs one row to its stopping index; returns the final state.
pub fn run_row(model: &CopulaModel, rng: &mut dyn RngCore) -> Result<PickandsState> {
    let d = model.dim();
    let mut state = PickandsState::new(d);
    let mut q = vec![0.0; d];
    let rate = d as f64;
    loop {
        sample_q_into(model, rng, &mut q)?;
        let e: f64 = Exp1.sample(rng);
        if state.step(&q, e / rate) {
            return Ok(state);
        }
    }
}

/// Draws `n` rows with `U_i = exp(−1/Z_i)`. Row `r` uses stream `r` of
/// `seed`, so the output does not depend on `threads`.
pub fn sample_pickands(model: &CopulaModel, n: usize, seed: u64, threads: usize) -> Result<SampleBatch> {
    SampleBatch::generate(n, model.dim(), seed, threads, |rng, out| {
        let state = run_row(model, rng)?;
        for (u, z) in out.iter_mut().zip(&state.partial_max) {
            *u = (-1.0 / z).exp();
        }
        Ok(())
    })
}

/// Stopping indices `I` of `n` rows generated as in [`sample_pickands`].
pub fn stopping_indices(model: &CopulaModel, n: usize, seed: u64) -> Result<Vec<usize>> {
    (0..n)
        .map(|r| {
            let mut rng = crate::batch::stream_rng(seed, r as u64);
            run_row(model, &mut rng).map(|s| s.n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::stream_rng;
    use crate::distributions::{CustomDistribution, DistributionSpec};
    use std::sync::Arc;

    #[test]
    fn point_mass_q_is_barycentre() {
        let m = CopulaModel::exchangeable(DistributionSpec::point_mass(), 3).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..10 {
            let q = sample_q(&m, &mut rng).unwrap();
            for &x in q.coords() {
                assert!((x - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let one = CopulaModel::exchangeable(DistributionSpec::frechet(0.3), 1).unwrap();
        assert_eq!(sample_q(&one, &mut rng).unwrap().coords(), &[1.0]);
    }

    #[test]
    fn q_lies_on_simplex_with_mean_one_over_d() {
        let m = CopulaModel::from_specs(&[
            DistributionSpec::frechet(0.4),
            DistributionSpec::weibull_galambos(0.7),
            DistributionSpec::two_point(0.5),
        ])
        .unwrap();
        let mut rng = stream_rng(2, 0);
        let n = 200_000;
        let mut sums = [0.0; 3];
        let mut squares = [0.0; 3];
        for _ in 0..n {
            let q = sample_q(&m, &mut rng).unwrap();
            let total: f64 = q.coords().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for i in 0..3 {
                assert!((0.0..=1.0).contains(&q.0[i]));
                sums[i] += q.0[i];
                squares[i] += q.0[i] * q.0[i];
            }
        }
        for i in 0..3 {
            let mean = sums[i] / n as f64;
            let sd = (squares[i] / n as f64 - mean * mean).sqrt() / (n as f64).sqrt();
            assert!((mean - 1.0 / 3.0).abs() < 4.0 * sd, "coordinate {i}: {mean} ± {sd}");
        }
    }

    #[test]
    fn comonotone_rows() {
        let m = CopulaModel::exchangeable(DistributionSpec::point_mass(), 4).unwrap();
        let batch = sample_pickands(&m, 200, 3, 1).unwrap();
        for row in batch.iter_rows() {
            assert!(row.iter().all(|&u| u == row[0]));
        }
    }

    #[test]
    fn stopping_rule_is_final() {
        let m = CopulaModel::from_specs(&[DistributionSpec::frechet(0.5), DistributionSpec::weibull_galambos(0.5)])
            .unwrap();
        for row in 0..200u64 {
            let mut rng = stream_rng(4, row);
            let mut state = run_row(&m, &mut rng).unwrap();
            let frozen = state.partial_max.clone();
            let mut q = vec![0.0; 2];
            for _ in 0..50 {
                sample_q_into(&m, &mut rng, &mut q).unwrap();
                let e: f64 = Exp1.sample(&mut rng);
                state.step(&q, e / 2.0);
            }
            assert_eq!(state.partial_max, frozen);
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let m = CopulaModel::exchangeable(DistributionSpec::frechet(0.5), 3).unwrap();
        assert_eq!(sample_pickands(&m, 500, 9, 1).unwrap(), sample_pickands(&m, 500, 9, 4).unwrap());
        assert!(stopping_indices(&m, 100, 9).unwrap().iter().all(|&i| i >= 1));
    }

    #[test]
    fn unbounded_custom_without_sampler_is_unsupported() {
        let exp = CustomDistribution::builder(|t: f64| -(-t).exp_m1(), 0.0, f64::INFINITY).build().unwrap();
        let m = CopulaModel::new(vec![Arc::new(exp.clone()), Arc::new(exp)]).unwrap();
        assert!(matches!(sample_pickands(&m, 10, 1, 1), Err(Error::Unsupported(_))));
    }
}
