//! Killed Lévy measures on `(0, ∞]` and their bijection with unit-mean laws.
//!
//! A measure is represented by its survival function `S(t) = ν((t, ∞])`.
//! The distribution attached to `ν` is `F_ν(t) = exp(−S^{-1}(t))` between the
//! killing rate `ν({∞})` and the total mass `ν((0, ∞])`; conversely
//! `S_{ν_F}(t) = F^{-1}(e^{-t})`.

use std::fmt;
use std::sync::Arc;

use crate::distributions::{Margin, UnitMeanDistribution};
use crate::error::{Error, Result};
use crate::inverse::{inverse_nondecreasing, inverse_nonincreasing, inverse_nonincreasing_strict};
use crate::quadrature::{integrate, integrate_half_line, Quadrature, DEFAULT_ABS_TOL, DEFAULT_REL_TOL};
use crate::stdf::{CopulaModel, StdfValue};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Lévy measure on `(0, ∞]` given by its survival function.
#[derive(Clone)]
pub struct LevyMeasure {
    survival: RealFn,
    inverse: Option<RealFn>,
    density: Option<RealFn>,
    killing_rate: f64,
    total_mass: f64,
    strictly_decreasing: bool,
}

impl fmt::Debug for LevyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyMeasure")
            .field("killing_rate", &self.killing_rate)
            .field("total_mass", &self.total_mass)
            .field("closed_form_inverse", &self.inverse.is_some())
            .field("strictly_decreasing", &self.strictly_decreasing)
            .finish_non_exhaustive()
    }
}

impl LevyMeasure {
    /// A measure from a non-increasing, right-continuous survival function
    /// with `S(∞−) = killing_rate` and `S(0+) = total_mass`.
    pub fn new<S>(survival: S, killing_rate: f64, total_mass: f64) -> Result<Self>
    where
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(killing_rate >= 0.0 && killing_rate.is_finite()) {
            return Err(Error::InvalidMeasure(format!("killing rate must be finite and >= 0, got {killing_rate}")));
        }
        if !(total_mass > 0.0 && total_mass >= killing_rate) {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total_mass} must be positive and at least the killing rate {killing_rate}"
            )));
        }
        Ok(LevyMeasure {
            survival: Arc::new(survival),
            inverse: None,
            density: None,
            killing_rate,
            total_mass,
            strictly_decreasing: false,
        })
    }

    /// `mass · δ_location`, where `location` may be `+∞` (pure killing).
    pub fn atom(mass: f64, location: f64) -> Result<Self> {
        if !(location > 0.0) {
            return Err(Error::InvalidMeasure(format!("atom location must be positive, got {location}")));
        }
        let killing = if location == f64::INFINITY { mass } else { 0.0 };
        let nu = LevyMeasure::new(move |t| if t < location { mass } else { 0.0 }, killing, mass)?;
        Ok(nu.with_inverse(move |y| if y >= mass { 0.0 } else { location }))
    }

    /// Registers a closed-form `S^{-1}(y) = inf{x > 0 : S(x) ≤ y}`.
    pub fn with_inverse<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, inverse: F) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    /// Registers a Lebesgue density of `ν` on `(0, ∞)`.
    pub fn with_density<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, density: F) -> Self {
        self.density = Some(Arc::new(density));
        self
    }

    /// Declares `S` strictly decreasing between its limits, so the induced
    /// distribution has no atoms.
    pub fn strictly_decreasing(mut self) -> Self {
        self.strictly_decreasing = true;
        self
    }

    /// The same measure with the closed-form inverse removed, so that
    /// [`LevyMeasure::survival_inverse`] bisects the survival function.
    pub fn without_inverse(&self) -> Self {
        LevyMeasure { inverse: None, ..self.clone() }
    }

    pub fn killing_rate(&self) -> f64 {
        self.killing_rate
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    /// `S(t) = ν((t, ∞])`; `S(0) = ν((0, ∞])` and `S(∞) = ν({∞})`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            self.total_mass
        } else if t == f64::INFINITY {
            self.killing_rate
        } else {
            (self.survival)(t)
        }
    }

    /// `S^{-1}(y) = inf{x > 0 : S(x) ≤ y}`, `+∞` below the killing rate.
    pub fn survival_inverse(&self, y: f64) -> f64 {
        if y >= self.total_mass {
            return 0.0;
        }
        if y < self.killing_rate {
            return f64::INFINITY;
        }
        match &self.inverse {
            Some(inv) => inv(y).max(0.0),
            None => inverse_nonincreasing(|x| self.survival(x), y),
        }
    }

    /// Left limit `S^{-1}(y−) = inf{x > 0 : S(x) < y}`.
    pub fn survival_inverse_left(&self, y: f64) -> f64 {
        if y > self.total_mass {
            return 0.0;
        }
        if y <= self.killing_rate {
            return f64::INFINITY;
        }
        inverse_nonincreasing_strict(|x| self.survival(x), y)
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        self.density.as_ref().map(|f| f(x))
    }

    /// Checks `∫_0^1 x ν(dx) < ∞` through the behaviour of `x·S(x)` at zero,
    /// which must vanish for `∫_0^1 S(x) dx` to be finite.
    pub fn check_integrability(&self) -> Result<()> {
        if self.total_mass.is_finite() {
            return Ok(());
        }
        let near = 1e-300 * self.survival(1e-300);
        let far = 1e-150 * self.survival(1e-150);
        if !(near.is_finite() && far.is_finite()) || near >= 0.999 * far && near > 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "x·S(x) does not vanish at zero ({far:e} at 1e-150, {near:e} at 1e-300)"
            )));
        }
        Ok(())
    }
}

/// `ν_F` with `S(t) = F^{-1}(e^{-t})`, `ν({∞}) = b_F` and `ν((0,∞]) = u_F`.
pub fn levy_from_distribution(dist: Margin) -> LevyMeasure {
    let s = dist.clone();
    let inv = dist.clone();
    let mut nu = LevyMeasure {
        survival: Arc::new(move |t| s.quantile_at_exp_neg(t)),
        // S(x) ≤ y  ⇔  e^{-x} ≤ F(y)
        inverse: Some(Arc::new(move |y| (-inv.log_cdf(y)).max(0.0))),
        density: None,
        killing_rate: dist.lower_support(),
        total_mass: dist.upper_support(),
        strictly_decreasing: dist.is_continuous(),
    };
    if dist.density(1.0).is_some() {
        let d = dist.clone();
        nu.density = Some(Arc::new(move |x| levy_density_from_distribution(d.as_ref(), x).unwrap_or(f64::NAN)));
    }
    nu
}

/// The law `F_ν` induced by a Lévy measure.
#[derive(Debug, Clone)]
pub struct LevyInduced {
    nu: LevyMeasure,
    mean: f64,
}

impl LevyInduced {
    pub fn measure(&self) -> &LevyMeasure {
        &self.nu
    }
}

/// Builds `F_ν`; its mean is `Ψ(1)`, which must be finite.
pub fn distribution_from_levy(nu: LevyMeasure) -> Result<LevyInduced> {
    let mean = psi_from_levy(&nu, 1.0).map_err(|e| match e {
        Error::InvalidDistribution(msg) | Error::Numeric(msg) => {
            Error::InvalidMeasure(format!("∫(1 − e^{{-x}}) ν(dx) is not finite: {msg}"))
        }
        other => other,
    })?;
    Ok(LevyInduced { nu, mean })
}

impl UnitMeanDistribution for LevyInduced {
    fn cdf(&self, t: f64) -> f64 {
        if t < self.nu.killing_rate {
            0.0
        } else if t >= self.nu.total_mass {
            1.0
        } else {
            (-self.nu.survival_inverse(t)).exp()
        }
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if t <= self.nu.killing_rate {
            0.0
        } else if t > self.nu.total_mass {
            1.0
        } else {
            (-self.nu.survival_inverse_left(t)).exp()
        }
    }

    fn log_cdf(&self, t: f64) -> f64 {
        if t < self.nu.killing_rate {
            f64::NEG_INFINITY
        } else if t >= self.nu.total_mass {
            0.0
        } else {
            -self.nu.survival_inverse(t)
        }
    }

    fn survival(&self, t: f64) -> f64 {
        if t < self.nu.killing_rate {
            1.0
        } else if t >= self.nu.total_mass {
            0.0
        } else {
            -(-self.nu.survival_inverse(t)).exp_m1()
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.nu.killing_rate;
        }
        if p >= 1.0 {
            return self.nu.total_mass;
        }
        self.nu.survival(-p.ln())
    }

    fn quantile_at_exp_neg(&self, x: f64) -> f64 {
        self.nu.survival(x)
    }

    fn lower_support(&self) -> f64 {
        self.nu.killing_rate
    }

    fn upper_support(&self) -> f64 {
        self.nu.total_mass
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn is_continuous(&self) -> bool {
        self.nu.strictly_decreasing
    }

    fn density(&self, t: f64) -> Option<f64> {
        self.nu.density.as_ref()?;
        if t <= self.nu.killing_rate || t >= self.nu.total_mass {
            return Some(0.0);
        }
        distribution_density_from_levy(&self.nu, t).ok()
    }
}

/// Sup-norm error of `F → ν_F → F_{ν_F}` over `points` equispaced points of
/// the support (up to the `1 − 1/points` quantile when unbounded). The return
/// leg inverts the survival function by bisection.
pub fn distribution_round_trip(dist: Margin, points: usize) -> Result<f64> {
    if points < 2 {
        return Err(Error::InvalidInput("round trip needs at least two grid points".into()));
    }
    let back = distribution_from_levy(levy_from_distribution(dist.clone()).without_inverse())?;
    let hi = if dist.upper_support().is_finite() {
        1.1 * dist.upper_support()
    } else {
        dist.quantile(1.0 - 1.0 / points as f64)
    };
    Ok((0..points)
        .map(|k| {
            let x = hi * k as f64 / (points - 1) as f64;
            (back.cdf(x) - dist.cdf(x)).abs()
        })
        .fold(0.0, f64::max))
}

/// Sup-norm error of `ν → F_ν → ν_{F_ν}` on `t_k = −ln((k + ½)/points)`. The
/// return leg rebuilds `S` from the cdf of `F_ν` alone.
pub fn measure_round_trip(nu: &LevyMeasure, points: usize) -> Result<f64> {
    if points == 0 {
        return Err(Error::InvalidInput("round trip needs at least one grid point".into()));
    }
    let f = distribution_from_levy(nu.clone())?;
    Ok((0..points)
        .map(|k| {
            let p = (k as f64 + 0.5) / points as f64;
            let back = inverse_nondecreasing(|x| f.cdf(x), p);
            (back - nu.survival(-p.ln())).abs()
        })
        .fold(0.0, f64::max))
}

/// `Ψ_F(u) = ∫_0^∞ {1 − F(x)^u} dx`.
pub fn psi_from_distribution(dist: &dyn UnitMeanDistribution, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidInput(format!("Ψ needs u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let integrand = |x: f64| -(u * dist.log_cdf(x)).exp_m1();
    let upper = dist.upper_support();
    let q = if upper.is_finite() {
        let lower = dist.lower_support();
        let mut q = Quadrature { value: lower, error: 0.0 };
        if upper > lower {
            q = q + integrate(integrand, lower, upper, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)?;
        }
        Ok(q)
    } else {
        integrate_half_line(integrand, 1.0, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)
    };
    match q {
        Ok(q) if q.value.is_finite() => Ok(q.value),
        Ok(q) => Err(Error::InvalidDistribution(format!("Ψ({u}) is not finite ({})", q.value))),
        Err(e) => Err(Error::InvalidDistribution(format!("Ψ({u}) diverges: {e}"))),
    }
}

/// `Ψ(u) = ν({∞})·1{u>0} + ∫_{(0,∞)} (1 − e^{−ux}) ν(dx)`, evaluated as
/// `ν({∞}) + u ∫_0^∞ e^{−ux} {S(x) − ν({∞})} dx`.
pub fn psi_from_levy(nu: &LevyMeasure, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidInput(format!("Ψ needs u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    nu.check_integrability()?;
    let k = nu.killing_rate;
    if nu.total_mass == k {
        return Ok(k);
    }
    let q = integrate_half_line(
        |x| u * (-u * x).exp() * (nu.survival(x) - k),
        1.0 / u,
        DEFAULT_ABS_TOL,
        DEFAULT_REL_TOL,
    )
    .map_err(|e| Error::InvalidDistribution(format!("Ψ({u}) diverges: {e}")))?;
    if !q.value.is_finite() {
        return Err(Error::InvalidDistribution(format!("Ψ({u}) is not finite")));
    }
    Ok(k + q.value)
}

/// `ℓ(t) = ∫_0^∞ {1 − exp(−Σ_i S^{-1}(x/t_i))} dx` for the measure `ν`
/// shared by all `d = t.len()` coordinates.
pub fn stdf_via_levy_measure(nu: &LevyMeasure, t: &[f64]) -> Result<StdfValue> {
    if let Some(x) = t.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidInput(format!("coordinates must be non-negative, got {x}")));
    }
    let active: Vec<f64> = t.iter().cloned().filter(|&x| x > 0.0).collect();
    if active.is_empty() {
        return Ok(StdfValue::exact(0.0));
    }
    let integrand = |x: f64| {
        let mut hazard = 0.0;
        for &ti in &active {
            hazard += nu.survival_inverse(x / ti);
            if hazard == f64::INFINITY {
                return 1.0;
            }
        }
        -(-hazard).exp_m1()
    };
    let tmax = active.iter().cloned().fold(0.0, f64::max);
    let q = if nu.total_mass.is_finite() {
        let hi = tmax * nu.total_mass;
        let mut cuts: Vec<f64> = active
            .iter()
            .flat_map(|&ti| [ti * nu.killing_rate, ti * nu.total_mass])
            .filter(|&c| c > 0.0 && c < hi)
            .collect();
        cuts.push(0.0);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut q = Quadrature { value: 0.0, error: 0.0 };
        for w in cuts.windows(2) {
            q = q + integrate(integrand, w[0], w[1], DEFAULT_ABS_TOL, DEFAULT_REL_TOL)?;
        }
        q
    } else {
        integrate_half_line(integrand, tmax, DEFAULT_ABS_TOL, DEFAULT_REL_TOL)?
    };
    Ok(StdfValue { value: q.value, stderr: q.error })
}

/// `ℓ` of an exchangeable model through its Lévy measure. `S^{-1}` is
/// obtained by bisection of `S`, independent of the margin's cdf.
pub fn stdf_via_levy(model: &CopulaModel, t: &[f64]) -> Result<StdfValue> {
    if !model.is_exchangeable() {
        return Err(Error::Unsupported("the Lévy-integral form needs identical margins".into()));
    }
    if t.len() != model.dim() {
        return Err(Error::InvalidInput(format!("expected {} coordinates, got {}", model.dim(), t.len())));
    }
    let nu = levy_from_distribution(model.margin(0).clone()).without_inverse();
    stdf_via_levy_measure(&nu, t)
}

/// `f_{ν_F}(x) = e^{-x} / f_F(F^{-1}(e^{-x}))`.
pub fn levy_density_from_distribution(dist: &dyn UnitMeanDistribution, x: f64) -> Result<f64> {
    let y = dist.quantile_at_exp_neg(x);
    let f = dist
        .density(y)
        .ok_or_else(|| Error::Unsupported("distribution has no registered density".into()))?;
    if !(f > 0.0) {
        return Err(Error::Numeric(format!("density vanishes at F^-1(e^-{x}) = {y}")));
    }
    Ok((-x).exp() / f)
}

/// `f_{F_ν}(x) = e^{-S^{-1}(x)} / f_ν(S^{-1}(x))`.
pub fn distribution_density_from_levy(nu: &LevyMeasure, x: f64) -> Result<f64> {
    let y = nu.survival_inverse(x);
    let f = nu
        .density(y)
        .ok_or_else(|| Error::Unsupported("Lévy measure has no registered density".into()))?;
    if !(f > 0.0) {
        return Err(Error::Numeric(format!("Lévy density vanishes at S^-1({x}) = {y}")));
    }
    Ok((-y).exp() / f)
}
