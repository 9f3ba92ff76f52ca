//! Stable tail dependence function `ℓ(t) = E max_i t_i X_i` and the copula
//! `C(u) = exp(−ℓ(−ln u))`.

use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::stream_rng;
use crate::distributions::{make_distribution, DistributionSpec, Family, Margin};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_half_line, Quadrature, DEFAULT_ABS_TOL, DEFAULT_REL_TOL};

/// Largest dimension accepted by subset-enumerating evaluators.
pub const MAX_SUBSET_DIM: usize = 20;

/// An ordered list of unit-mean margins `F_1, …, F_d`.
#[derive(Debug, Clone)]
pub struct CopulaModel {
    margins: Vec<Margin>,
}

impl CopulaModel {
    pub fn new(margins: Vec<Margin>) -> Result<Self> {
        if margins.is_empty() {
            return Err(Error::InvalidInput("a copula model needs at least one margin".into()));
        }
        Ok(CopulaModel { margins })
    }

    pub fn from_specs(specs: &[DistributionSpec]) -> Result<Self> {
        let margins = specs.iter().map(|&s| make_distribution(s)).collect::<Result<Vec<_>>>()?;
        CopulaModel::new(margins)
    }

    /// `d` copies of the same margin.
    pub fn exchangeable(spec: DistributionSpec, d: usize) -> Result<Self> {
        let margin = make_distribution(spec)?;
        CopulaModel::new(vec![margin; d])
    }

    /// Parses a JSON array such as `[{"family":"frechet","theta":0.5}, …]`.
    pub fn from_json(json: &str) -> Result<Self> {
        CopulaModel::from_specs(&DistributionSpec::parse_list(json)?)
    }

    pub fn dim(&self) -> usize {
        self.margins.len()
    }

    pub fn margins(&self) -> &[Margin] {
        &self.margins
    }

    pub fn margin(&self, i: usize) -> &Margin {
        &self.margins[i]
    }

    /// Specs of all margins, when every margin is a built-in family.
    pub fn specs(&self) -> Option<Vec<DistributionSpec>> {
        self.margins.iter().map(|m| m.spec()).collect()
    }

    /// The common spec when all margins are the same built-in.
    pub fn common_spec(&self) -> Option<DistributionSpec> {
        let specs = self.specs()?;
        let first = specs[0];
        specs.iter().all(|s| *s == first).then_some(first)
    }

    /// True when every margin is the same object or the same built-in spec.
    pub fn is_exchangeable(&self) -> bool {
        let first = &self.margins[0];
        self.margins.iter().all(|m| Arc::ptr_eq(m, first)) || self.common_spec().is_some()
    }

    pub fn all_bounded_continuous(&self) -> bool {
        self.margins.iter().all(|m| m.is_continuous() && m.upper_support().is_finite())
    }

    fn check_t(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.dim() {
            return Err(Error::InvalidInput(format!("expected {} coordinates, got {}", self.dim(), t.len())));
        }
        if let Some(x) = t.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::InvalidInput(format!("coordinates must be non-negative, got {x}")));
        }
        Ok(())
    }
}

/// `ℓ(t)` together with the standard error of the estimator (quadrature
/// error bound for deterministic evaluators, zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdfValue {
    pub value: f64,
    pub stderr: f64,
}

impl StdfValue {
    pub fn exact(value: f64) -> Self {
        StdfValue { value, stderr: 0.0 }
    }
}

/// Evaluation route for `ℓ` and `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    ClosedForm,
    InclusionExclusion,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }

    fn into_value(self) -> StdfValue {
        let var = if self.count > 1.0 { self.m2 / (self.count - 1.0) } else { 0.0 };
        StdfValue {
            value: self.mean,
            stderr: (var / self.count).sqrt(),
        }
    }
}

fn draw_max(model: &CopulaModel, t: &[f64], rng: &mut dyn RngCore) -> f64 {
    model
        .margins
        .iter()
        .zip(t)
        .filter(|(_, &ti)| ti > 0.0)
        .map(|(m, &ti)| ti * m.sample(rng))
        .fold(0.0, f64::max)
}

/// Sample mean of `max_i t_i X_i` over `n` draws.
pub fn stdf_monte_carlo(model: &CopulaModel, t: &[f64], n: usize, rng: &mut dyn RngCore) -> Result<StdfValue> {
    model.check_t(t)?;
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least one".into()));
    }
    let mut acc = Moments::default();
    for _ in 0..n {
        acc.push(draw_max(model, t, rng));
    }
    Ok(acc.into_value())
}

/// Monte Carlo split over `shards` independent streams of `seed`, evaluated
/// in parallel. The result depends only on `(seed, shards)`.
pub fn stdf_monte_carlo_sharded(model: &CopulaModel, t: &[f64], n: usize, seed: u64, shards: usize) -> Result<StdfValue> {
    model.check_t(t)?;
    if n == 0 || shards == 0 {
        return Err(Error::InvalidInput("sample and shard counts must be positive".into()));
    }
    let parts: Vec<Moments> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let count = n / shards + usize::from(k < n % shards);
            let mut rng = stream_rng(seed, k as u64);
            let mut acc = Moments::default();
            for _ in 0..count {
                acc.push(draw_max(model, t, &mut rng));
            }
            acc
        })
        .collect();
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge).into_value())
}

/// Exact `ℓ` for exchangeable Gumbel, Galambos, Cuadras–Augé and
/// comonotone models.
pub fn stdf_closed_form(model: &CopulaModel, t: &[f64]) -> Result<StdfValue> {
    model.check_t(t)?;
    let spec = model.common_spec().ok_or_else(|| {
        Error::Unsupported("closed form needs all margins from one family with one parameter".into())
    })?;
    let theta = spec.theta.unwrap_or(f64::NAN);
    let value = match spec.family {
        Family::Frechet => {
            // (Σ t_i^{1/θ})^θ, scaled by max t_i against overflow
            let m = t.iter().cloned().fold(0.0, f64::max);
            if m == 0.0 {
                0.0
            } else {
                m * t.iter().map(|ti| (ti / m).powf(1.0 / theta)).sum::<f64>().powf(theta)
            }
        }
        Family::WeibullGalambos => galambos(t, theta)?,
        Family::TwoPoint => {
            let mut sorted = t.to_vec();
            sorted.sort_by(f64::total_cmp);
            let d = sorted.len();
            sorted.iter().enumerate().map(|(k, tk)| (1.0 - theta).powi((d - 1 - k) as i32) * tk).sum()
        }
        Family::PointMass => t.iter().cloned().fold(0.0, f64::max),
        other => {
            return Err(Error::Unsupported(format!("no closed-form stdf for family {}", other.name())));
        }
    };
    Ok(StdfValue::exact(value))
}

// Alternating sum over non-empty subsets of the positive coordinates of
// (Σ_{i∈S} t_i^{−1/θ})^{−θ}; subsets touching a zero coordinate vanish.
fn galambos(t: &[f64], theta: f64) -> Result<f64> {
    let positive: Vec<f64> = t.iter().cloned().filter(|&x| x > 0.0).collect();
    let k = positive.len();
    if k > MAX_SUBSET_DIM {
        return Err(Error::TooLarge(format!("{k} positive coordinates exceed {MAX_SUBSET_DIM}")));
    }
    let m = positive.iter().cloned().fold(0.0, f64::max);
    let powers: Vec<f64> = positive.iter().map(|x| (x / m).powf(-1.0 / theta)).collect();
    let mut sum = 0.0;
    for mask in 1u32..(1u32 << k) {
        let inner: f64 = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| powers[j]).sum();
        let term = inner.powf(-theta);
        if mask.count_ones() % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(m * sum)
}

/// `ℓ` by inclusion–exclusion over expected scaled minima,
/// each `∫_0^∞ Π_{i∈S} {1 − F_i(x/t_i)} dx` evaluated by quadrature.
pub fn stdf_inclusion_exclusion(model: &CopulaModel, t: &[f64]) -> Result<StdfValue> {
    model.check_t(t)?;
    let active: Vec<usize> = (0..model.dim()).filter(|&i| t[i] > 0.0).collect();
    let k = active.len();
    if model.dim() > MAX_SUBSET_DIM || k > MAX_SUBSET_DIM {
        return Err(Error::TooLarge(format!(
            "inclusion-exclusion needs d <= {MAX_SUBSET_DIM}, got {}",
            model.dim()
        )));
    }
    if k == 0 {
        return Ok(StdfValue::exact(0.0));
    }
    let term = |mask: u32| -> Result<(f64, f64)> {
        let members: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| active[j]).collect();
        let q = expected_scaled_minimum(model, t, &members)?;
        let sign = if members.len() % 2 == 1 { 1.0 } else { -1.0 };
        Ok((sign * q.value, q.error))
    };
    let masks = 1u32..(1u32 << k);
    let terms: Vec<(f64, f64)> = if k > 8 {
        masks.into_par_iter().map(term).collect::<Result<_>>()?
    } else {
        masks.map(term).collect::<Result<_>>()?
    };
    let (value, stderr) = terms.iter().fold((0.0, 0.0), |(v, e), (tv, te)| (v + tv, e + te));
    Ok(StdfValue { value, stderr })
}

/// `E min_{i∈S} t_i X_i = ∫_0^∞ Π_{i∈S} {1 − F_i(x/t_i)} dx`.
fn expected_scaled_minimum(model: &CopulaModel, t: &[f64], members: &[usize]) -> Result<Quadrature> {
    let integrand = |x: f64| {
        let mut p = 1.0;
        for &i in members {
            p *= model.margins[i].survival(x / t[i]);
            if p == 0.0 {
                break;
            }
        }
        p
    };
    let hi = members
        .iter()
        .map(|&i| t[i] * model.margins[i].upper_support())
        .fold(f64::INFINITY, f64::min);
    if hi.is_finite() {
        // Break at every scaled support endpoint so atoms sit on panel edges.
        let mut cuts: Vec<f64> = members
            .iter()
            .flat_map(|&i| [t[i] * model.margins[i].lower_support(), t[i] * model.margins[i].upper_support()])
            .filter(|&c| c > 0.0 && c < hi)
            .collect();
        cuts.push(0.0);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = Quadrature { value: 0.0, error: 0.0 };
        for w in cuts.windows(2) {
            total = total + integrate(integrand, w[0], w[1], DEFAULT_ABS_TOL, DEFAULT_REL_TOL)?;
        }
        Ok(total)
    } else {
        let scale = members.iter().map(|&i| t[i]).fold(f64::INFINITY, f64::min);
        integrate_half_line(integrand, scale, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)
    }
}

/// Dispatches to the evaluator selected by `method`.
pub fn stdf(model: &CopulaModel, t: &[f64], method: Method) -> Result<StdfValue> {
    match method {
        Method::ClosedForm => stdf_closed_form(model, t),
        Method::InclusionExclusion => stdf_inclusion_exclusion(model, t),
        Method::MonteCarlo { samples, seed } => {
            let mut rng = stream_rng(seed, 0);
            stdf_monte_carlo(model, t, samples, &mut rng)
        }
    }
}

/// `C(u) = exp(−ℓ(−ln u_1, …, −ln u_d))`, with `C(u) = 0` if any `u_i = 0`.
pub fn copula_cdf(model: &CopulaModel, u: &[f64], method: Method) -> Result<f64> {
    if u.len() != model.dim() {
        return Err(Error::InvalidInput(format!("expected {} coordinates, got {}", model.dim(), u.len())));
    }
    if let Some(x) = u.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
        return Err(Error::InvalidInput(format!("copula arguments must lie in [0,1], got {x}")));
    }
    if u.contains(&0.0) {
        return Ok(0.0);
    }
    let t: Vec<f64> = u.iter().map(|x| -x.ln()).collect();
    Ok((-stdf(model, &t, method)?.value).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn model(spec: DistributionSpec, d: usize) -> CopulaModel {
        CopulaModel::exchangeable(spec, d).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let g = model(DistributionSpec::frechet(0.5), 2);
        assert_relative_eq!(stdf_closed_form(&g, &[1.0, 1.0]).unwrap().value, 2f64.sqrt(), max_relative = 1e-15);
        let gal = model(DistributionSpec::weibull_galambos(1.0), 2);
        assert_relative_eq!(stdf_closed_form(&gal, &[1.0, 1.0]).unwrap().value, 1.5, max_relative = 1e-15);
        let ca = model(DistributionSpec::two_point(0.5), 2);
        assert_relative_eq!(stdf_closed_form(&ca, &[2.0, 1.0]).unwrap().value, 2.5, max_relative = 1e-15);
        let pm = model(DistributionSpec::point_mass(), 3);
        assert_eq!(stdf_closed_form(&pm, &[0.2, 0.7, 0.1]).unwrap().value, 0.7);
        let mixed = CopulaModel::from_specs(&[DistributionSpec::frechet(0.5), DistributionSpec::frechet(0.4)]).unwrap();
        assert!(matches!(stdf_closed_form(&mixed, &[1.0, 1.0]), Err(Error::Unsupported(_))));
        let uh = model(DistributionSpec::uniform_half(), 2);
        assert!(matches!(stdf_closed_form(&uh, &[1.0, 1.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cuadras_auge_by_enumeration() {
        // Enumerate the four outcomes (X1, X2) ∈ {0, 2}² with P(X = 2) = θ.
        let theta = 0.5;
        let t = [2.0, 1.0];
        let mut expected = 0.0;
        for a in [0.0, 1.0 / theta] {
            for b in [0.0, 1.0 / theta] {
                let pa = if a > 0.0 { theta } else { 1.0 - theta };
                let pb = if b > 0.0 { theta } else { 1.0 - theta };
                expected += pa * pb * f64::max(t[0] * a, t[1] * b);
            }
        }
        let ca = model(DistributionSpec::two_point(theta), 2);
        assert_abs_diff_eq!(stdf_closed_form(&ca, &t).unwrap().value, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(stdf_inclusion_exclusion(&ca, &t).unwrap().value, expected, epsilon = 1e-9);
    }

    #[test]
    fn inclusion_exclusion_examples() {
        let uh = model(DistributionSpec::uniform_half(), 2);
        assert_abs_diff_eq!(stdf_inclusion_exclusion(&uh, &[1.0, 1.0]).unwrap().value, 4.0 / 3.0, epsilon = 1e-10);
        let ex = model(DistributionSpec::weibull_galambos(1.0), 2);
        assert_abs_diff_eq!(stdf_inclusion_exclusion(&ex, &[1.0, 1.0]).unwrap().value, 1.5, epsilon = 1e-10);
        let one = model(DistributionSpec::frechet(0.7), 1);
        assert_abs_diff_eq!(stdf_inclusion_exclusion(&one, &[2.5]).unwrap().value, 2.5, epsilon = 1e-9);
        let big = model(DistributionSpec::uniform_half(), 21);
        assert!(matches!(stdf_inclusion_exclusion(&big, &[1.0; 21]), Err(Error::TooLarge(_))));
    }

    #[test]
    fn galambos_matches_inclusion_exclusion_for_all_theta() {
        for &theta in &[0.5, 1.0, 2.0] {
            let m = model(DistributionSpec::weibull_galambos(theta), 3);
            let t = [0.4, 1.3, 0.9];
            let cf = stdf_closed_form(&m, &t).unwrap().value;
            let ie = stdf_inclusion_exclusion(&m, &t).unwrap().value;
            assert_abs_diff_eq!(cf, ie, epsilon = 1e-8);
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let pm = model(DistributionSpec::point_mass(), 2);
        let mut rng = stream_rng(1, 0);
        let v = stdf_monte_carlo(&pm, &[1.0, 1.0], 1000, &mut rng).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.stderr, 0.0);
        let g = model(DistributionSpec::frechet(0.5), 2);
        let v = stdf_monte_carlo_sharded(&g, &[1.0, 1.0], 1_000_000, 9, 8).unwrap();
        assert!((v.value - 2f64.sqrt()).abs() < 4.0 * v.stderr, "{v:?}");
        let again = stdf_monte_carlo_sharded(&g, &[1.0, 1.0], 1_000_000, 9, 8).unwrap();
        assert_eq!(v, again);
        let uh = model(DistributionSpec::uniform_half(), 3);
        let v = stdf_monte_carlo(&uh, &[1.0, 0.0, 0.0], 200_000, &mut rng).unwrap();
        assert!((v.value - 1.0).abs() < 4.0 * v.stderr);
    }

    #[test]
    fn copula_examples() {
        let pm = model(DistributionSpec::point_mass(), 2);
        assert_abs_diff_eq!(copula_cdf(&pm, &[0.3, 0.7], Method::ClosedForm).unwrap(), 0.3, epsilon = 1e-15);
        let g = model(DistributionSpec::frechet(0.5), 2);
        let c = copula_cdf(&g, &[0.5, 0.5], Method::ClosedForm).unwrap();
        assert_relative_eq!(c, 2f64.powf(-2f64.sqrt()), max_relative = 1e-14);
        assert_abs_diff_eq!(c, 0.3752, epsilon = 1e-4);
        assert_eq!(copula_cdf(&g, &[1.0, 1.0], Method::ClosedForm).unwrap(), 1.0);
        assert_eq!(copula_cdf(&g, &[0.0, 0.4], Method::InclusionExclusion).unwrap(), 0.0);
        assert!(copula_cdf(&g, &[1.2, 0.4], Method::ClosedForm).is_err());
    }

    fn closed_form_specs() -> impl Strategy<Value = DistributionSpec> {
        prop_oneof![
            (0.05f64..0.95).prop_map(DistributionSpec::frechet),
            (0.2f64..3.0).prop_map(DistributionSpec::weibull_galambos),
            (0.05f64..1.0).prop_map(DistributionSpec::two_point),
            Just(DistributionSpec::point_mass()),
        ]
    }

    proptest! {
        #[test]
        fn homogeneity_and_bounds(spec in closed_form_specs(), t in prop::collection::vec(0.0f64..5.0, 1..5), c in 0.01f64..10.0) {
            let m = model(spec, t.len());
            let l = stdf_closed_form(&m, &t).unwrap().value;
            let scaled: Vec<f64> = t.iter().map(|x| c * x).collect();
            let lc = stdf_closed_form(&m, &scaled).unwrap().value;
            prop_assert!((lc - c * l).abs() <= 1e-12 * (1.0 + c * l));
            let max = t.iter().cloned().fold(0.0, f64::max);
            let sum: f64 = t.iter().sum();
            prop_assert!(l >= max * (1.0 - 1e-12) && l <= sum * (1.0 + 1e-12));
        }

        #[test]
        fn unit_vectors(spec in closed_form_specs(), d in 1usize..5, i in 0usize..5, s in 0.0f64..5.0) {
            let m = model(spec, d);
            let mut t = vec![0.0; d];
            t[i % d] = s;
            prop_assert!((stdf_closed_form(&m, &t).unwrap().value - s).abs() <= 1e-12 * (1.0 + s));
        }

        #[test]
        fn extreme_value_property(spec in closed_form_specs(), u in prop::collection::vec(0.01f64..1.0, 2..4), c in 0.05f64..5.0) {
            let m = model(spec, u.len());
            let lhs = copula_cdf(&m, &u, Method::ClosedForm).unwrap().powf(c);
            let uc: Vec<f64> = u.iter().map(|x| x.powf(c)).collect();
            let rhs = copula_cdf(&m, &uc, Method::ClosedForm).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn inclusion_exclusion_homogeneity(t in prop::collection::vec(0.05f64..3.0, 2..4), c in 0.1f64..10.0) {
            let m = model(DistributionSpec::uniform_half(), t.len());
            let l = stdf_inclusion_exclusion(&m, &t).unwrap().value;
            let scaled: Vec<f64> = t.iter().map(|x| c * x).collect();
            let lc = stdf_inclusion_exclusion(&m, &scaled).unwrap().value;
            prop_assert!((lc - c * l).abs() < 1e-8 * (1.0 + c));
            let max = t.iter().cloned().fold(0.0, f64::max);
            let sum: f64 = t.iter().sum();
            prop_assert!(l >= max - 1e-9 && l <= sum + 1e-9);
        }
    }
}
