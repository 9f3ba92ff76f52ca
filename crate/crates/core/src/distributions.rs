//! Unit-mean distributions on `[0, ∞)` and their size-biased laws.
//!
//! Every margin of a copula model is a [`UnitMeanDistribution`]. The built-in
//! families are created from a [`DistributionSpec`]; arbitrary laws can be
//! registered through [`CustomDistribution::builder`].
//!
//! Conventions: `quantile(p) = inf{x > 0 : F(x) ≥ p}` for `p ∈ (0, 1]`,
//! `quantile(0)` is the lower support endpoint `inf{x : F(x) > 0}`, and
//! `quantile(1) = +∞` when the support is unbounded.

use std::fmt;
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse::inverse_nondecreasing;
use crate::quadrature::integrate_from_zero;
use crate::special::gamma;

/// Tolerance on `∫(1 − F) = 1` accepted when registering custom laws.
pub const UNIT_MEAN_TOL: f64 = 1e-6;

/// A distribution function `F` of a non-negative random variable with unit mean.
pub trait UnitMeanDistribution: Send + Sync + fmt::Debug {
    /// Right-continuous distribution function `F(t)`.
    fn cdf(&self, t: f64) -> f64;

    /// Left limit `F(t−)`; `F(∞−) = 1`.
    fn cdf_left(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            1.0
        } else {
            self.cdf(t)
        }
    }

    fn log_cdf(&self, t: f64) -> f64 {
        self.cdf(t).ln()
    }

    /// `1 − F(t)`, overridden where a cancellation-free form exists.
    fn survival(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    /// Generalized inverse `F^{-1}(p)`.
    fn quantile(&self, p: f64) -> f64;

    /// `F^{-1}(e^{-x})` without forming `e^{-x}`, which loses all precision
    /// for small `x`.
    fn quantile_at_exp_neg(&self, x: f64) -> f64 {
        self.quantile((-x).exp())
    }

    /// `b_F`, the lower end of the support.
    fn lower_support(&self) -> f64;

    /// `u_F`, the upper end of the support (possibly `+∞`).
    fn upper_support(&self) -> f64;

    fn mean(&self) -> f64 {
        1.0
    }

    /// True when `F` has no atoms on `[0, ∞)`.
    fn is_continuous(&self) -> bool;

    /// Lebesgue density, when one is known.
    fn density(&self, _t: f64) -> Option<f64> {
        None
    }

    /// The spec this distribution was built from, for built-in families.
    fn spec(&self) -> Option<DistributionSpec> {
        None
    }

    /// Draws `F^{-1}(U)` with `U` uniform on `(0, 1)`.
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        loop {
            let u: f64 = rng.sample(Open01);
            let x = self.quantile(u);
            if x.is_finite() {
                return x;
            }
        }
    }

    /// Draws from the size-biased law `x dF(x)`.
    fn sample_size_biased(&self, rng: &mut dyn RngCore) -> Result<f64> {
        size_biased_by_rejection(self, rng)
    }

    /// Closed-form root `t` of `−Σ_{k≤count} ln F(S_k / t) = trigger`, given
    /// `log_sum = Σ_{k≤count} ln S_k`, valid when every `S_k / t` lies inside
    /// the support. `None` when no closed form is registered.
    fn first_passage_closed_form(&self, _log_sum: f64, _count: usize, _trigger: f64) -> Option<f64> {
        None
    }
}

/// Shared handle to a margin.
pub type Margin = Arc<dyn UnitMeanDistribution>;

/// Exact size-biased sampling for bounded support: draw `X ~ F` and accept
/// with probability `X / u_F`.
pub fn size_biased_by_rejection<D: UnitMeanDistribution + ?Sized>(dist: &D, rng: &mut dyn RngCore) -> Result<f64> {
    let upper = dist.upper_support();
    if !upper.is_finite() {
        return Err(Error::Unsupported(
            "size-biased sampling of an unbounded law needs a registered sampler".into(),
        ));
    }
    loop {
        let x = dist.sample(rng);
        let v: f64 = rng.sample(Open01);
        if v * upper < x {
            return Ok(x);
        }
    }
}

/// Built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Fréchet with shape `1/θ` and unit mean; yields the Gumbel copula.
    Frechet,
    /// Weibull with shape `1/θ` and unit mean; yields the Galambos copula.
    WeibullGalambos,
    /// `1 − (1 − tθ/(1+θ))^{1/θ}` on `[0, (1+θ)/θ]`; unit exponential at `θ = 0`.
    BoundedExp,
    /// Uniform on `[0, 2]`.
    UniformHalf,
    /// Mass `1 − θ` at zero and `θ` at `1/θ`; yields the Cuadras–Augé copula.
    TwoPoint,
    /// Dirac mass at one; yields the upper Fréchet bound.
    PointMass,
    /// Registered programmatically, never built from a spec.
    Custom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Frechet => "frechet",
            Family::WeibullGalambos => "weibull_galambos",
            Family::BoundedExp => "bounded_exp",
            Family::UniformHalf => "uniform_half",
            Family::TwoPoint => "two_point",
            Family::PointMass => "point_mass",
            Family::Custom => "custom",
        }
    }
}

/// Serializable family tag plus parameter, e.g. `{"family": "frechet", "theta": 0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl DistributionSpec {
    pub fn new(family: Family, theta: f64) -> Self {
        DistributionSpec { family, theta: Some(theta) }
    }

    pub fn without_parameter(family: Family) -> Self {
        DistributionSpec { family, theta: None }
    }

    pub fn frechet(theta: f64) -> Self {
        Self::new(Family::Frechet, theta)
    }
    pub fn weibull_galambos(theta: f64) -> Self {
        Self::new(Family::WeibullGalambos, theta)
    }
    pub fn bounded_exp(theta: f64) -> Self {
        Self::new(Family::BoundedExp, theta)
    }
    pub fn uniform_half() -> Self {
        Self::without_parameter(Family::UniformHalf)
    }
    pub fn two_point(theta: f64) -> Self {
        Self::new(Family::TwoPoint, theta)
    }
    pub fn point_mass() -> Self {
        Self::without_parameter(Family::PointMass)
    }

    /// Parses a JSON array of specs.
    pub fn parse_list(json: &str) -> Result<Vec<DistributionSpec>> {
        serde_json::from_str(json).map_err(|e| Error::InvalidSpec(e.to_string()))
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.theta {
            Some(theta) => write!(f, "{}({theta})", self.family.name()),
            None => write!(f, "{}", self.family.name()),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Frechet { theta: f64, scale: f64, gamma: Gamma<f64> },
    Weibull { theta: f64, scale: f64, gamma: Gamma<f64> },
    // `theta == 0` is the unit exponential.
    BoundedExp { theta: f64, slope: f64 },
    UniformHalf,
    TwoPoint { theta: f64 },
    PointMass,
}

/// A built-in family with exact closed-form cdf and quantile.
#[derive(Debug, Clone)]
pub struct ParametricDistribution {
    spec: DistributionSpec,
    kind: Kind,
}

/// Builds a built-in distribution, validating the parameter range.
pub fn make_distribution(spec: DistributionSpec) -> Result<Margin> {
    Ok(Arc::new(ParametricDistribution::new(spec)?))
}

fn require_theta(spec: &DistributionSpec) -> Result<f64> {
    match spec.theta {
        Some(theta) if theta.is_finite() => Ok(theta),
        Some(theta) => Err(Error::InvalidSpec(format!("{}: theta must be finite, got {theta}", spec.family.name()))),
        None => Err(Error::InvalidSpec(format!("{} requires a theta parameter", spec.family.name()))),
    }
}

fn forbid_theta(spec: &DistributionSpec) -> Result<()> {
    match spec.theta {
        None => Ok(()),
        Some(_) => Err(Error::InvalidSpec(format!("{} takes no parameter", spec.family.name()))),
    }
}

impl ParametricDistribution {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        let kind = match spec.family {
            Family::Frechet => {
                let theta = require_theta(&spec)?;
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(Error::InvalidSpec(format!("frechet needs theta in (0,1), got {theta}")));
                }
                Kind::Frechet {
                    theta,
                    scale: gamma(1.0 - theta),
                    gamma: Gamma::new(1.0 - theta, 1.0).map_err(|e| Error::InvalidSpec(e.to_string()))?,
                }
            }
            Family::WeibullGalambos => {
                let theta = require_theta(&spec)?;
                if !(theta > 0.0) {
                    return Err(Error::InvalidSpec(format!("weibull_galambos needs theta > 0, got {theta}")));
                }
                Kind::Weibull {
                    theta,
                    scale: gamma(1.0 + theta),
                    gamma: Gamma::new(1.0 + theta, 1.0).map_err(|e| Error::InvalidSpec(e.to_string()))?,
                }
            }
            Family::BoundedExp => {
                let theta = require_theta(&spec)?;
                if !(theta >= 0.0) {
                    return Err(Error::InvalidSpec(format!("bounded_exp needs theta >= 0, got {theta}")));
                }
                Kind::BoundedExp { theta, slope: theta / (1.0 + theta) }
            }
            Family::UniformHalf => {
                forbid_theta(&spec)?;
                Kind::UniformHalf
            }
            Family::TwoPoint => {
                let theta = require_theta(&spec)?;
                if !(theta > 0.0 && theta <= 1.0) {
                    return Err(Error::InvalidSpec(format!("two_point needs theta in (0,1], got {theta}")));
                }
                Kind::TwoPoint { theta }
            }
            Family::PointMass => {
                forbid_theta(&spec)?;
                Kind::PointMass
            }
            Family::Custom => {
                return Err(Error::InvalidSpec(
                    "custom distributions are registered programmatically".into(),
                ))
            }
        };
        Ok(ParametricDistribution { spec, kind })
    }
}

impl UnitMeanDistribution for ParametricDistribution {
    fn cdf(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Frechet { .. } | Kind::Weibull { .. } => {
                if t <= 0.0 {
                    0.0
                } else {
                    self.log_cdf(t).exp()
                }
            }
            Kind::BoundedExp { theta, slope } => {
                if t <= 0.0 {
                    0.0
                } else if theta == 0.0 {
                    -(-t).exp_m1()
                } else if t * slope >= 1.0 {
                    1.0
                } else {
                    -((-slope * t).ln_1p() / theta).exp_m1()
                }
            }
            Kind::UniformHalf => (0.5 * t).clamp(0.0, 1.0),
            Kind::TwoPoint { theta } => {
                if t < 0.0 {
                    0.0
                } else if t * theta < 1.0 {
                    1.0 - theta
                } else {
                    1.0
                }
            }
            Kind::PointMass => {
                if t >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn cdf_left(&self, t: f64) -> f64 {
        match self.kind {
            Kind::TwoPoint { theta } => {
                if t <= 0.0 {
                    0.0
                } else if t * theta <= 1.0 {
                    1.0 - theta
                } else {
                    1.0
                }
            }
            Kind::PointMass => {
                if t > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                if t == f64::INFINITY {
                    1.0
                } else {
                    self.cdf(t)
                }
            }
        }
    }

    fn log_cdf(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Frechet { theta, scale, .. } => {
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -(scale * t).powf(-1.0 / theta)
                }
            }
            Kind::Weibull { theta, scale, .. } => {
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let z = (t * scale).powf(1.0 / theta);
                    (-(-z).exp_m1()).ln()
                }
            }
            _ => self.cdf(t).ln(),
        }
    }

    fn survival(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Frechet { .. } => {
                if t <= 0.0 {
                    1.0
                } else {
                    -self.log_cdf(t).exp_m1()
                }
            }
            Kind::Weibull { theta, scale, .. } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-(t * scale).powf(1.0 / theta)).exp()
                }
            }
            Kind::BoundedExp { theta, slope } => {
                if t <= 0.0 {
                    1.0
                } else if theta == 0.0 {
                    (-t).exp()
                } else if t * slope >= 1.0 {
                    0.0
                } else {
                    ((-slope * t).ln_1p() / theta).exp()
                }
            }
            Kind::TwoPoint { theta } => {
                if t < 0.0 {
                    1.0
                } else if t * theta < 1.0 {
                    theta
                } else {
                    0.0
                }
            }
            _ => 1.0 - self.cdf(t),
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.lower_support();
        }
        match self.kind {
            Kind::Frechet { theta, scale, .. } => {
                if p >= 1.0 {
                    f64::INFINITY
                } else {
                    (-p.ln()).powf(-theta) / scale
                }
            }
            Kind::Weibull { theta, scale, .. } => {
                if p >= 1.0 {
                    f64::INFINITY
                } else {
                    (-(-p).ln_1p()).powf(theta) / scale
                }
            }
            Kind::BoundedExp { theta, slope } => {
                if theta == 0.0 {
                    if p >= 1.0 {
                        f64::INFINITY
                    } else {
                        -(-p).ln_1p()
                    }
                } else if p >= 1.0 {
                    1.0 / slope
                } else {
                    -(theta * (-p).ln_1p()).exp_m1() / slope
                }
            }
            Kind::UniformHalf => 2.0 * p.min(1.0),
            Kind::TwoPoint { theta } => {
                if p <= 1.0 - theta {
                    0.0
                } else {
                    1.0 / theta
                }
            }
            Kind::PointMass => 1.0,
        }
    }

    fn quantile_at_exp_neg(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x == f64::INFINITY {
            return self.lower_support();
        }
        match self.kind {
            Kind::Frechet { theta, scale, .. } => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    x.powf(-theta) / scale
                }
            }
            Kind::Weibull { theta, scale, .. } => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    (-(-(-x).exp_m1()).ln()).powf(theta) / scale
                }
            }
            Kind::BoundedExp { theta, slope } if theta > 0.0 => {
                if x <= 0.0 {
                    1.0 / slope
                } else {
                    -(theta * (-(-x).exp_m1()).ln()).exp_m1() / slope
                }
            }
            Kind::BoundedExp { .. } => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    -(-(-x).exp_m1()).ln()
                }
            }
            Kind::UniformHalf => 2.0 * (-x.max(0.0)).exp(),
            _ => self.quantile((-x).exp()),
        }
    }

    fn lower_support(&self) -> f64 {
        match self.kind {
            Kind::TwoPoint { theta } if theta >= 1.0 => 1.0,
            Kind::PointMass => 1.0,
            _ => 0.0,
        }
    }

    fn upper_support(&self) -> f64 {
        match self.kind {
            Kind::Frechet { .. } | Kind::Weibull { .. } => f64::INFINITY,
            Kind::BoundedExp { theta, slope } => {
                if theta == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / slope
                }
            }
            Kind::UniformHalf => 2.0,
            Kind::TwoPoint { theta } => 1.0 / theta,
            Kind::PointMass => 1.0,
        }
    }

    fn is_continuous(&self) -> bool {
        !matches!(self.kind, Kind::TwoPoint { .. } | Kind::PointMass)
    }

    fn density(&self, t: f64) -> Option<f64> {
        if !self.is_continuous() {
            return None;
        }
        if t <= 0.0 || t > self.upper_support() {
            return Some(0.0);
        }
        Some(match self.kind {
            Kind::Frechet { theta, scale, .. } => {
                let z = (scale * t).powf(-1.0 / theta);
                (-z).exp() * z / (theta * t)
            }
            Kind::Weibull { theta, scale, .. } => {
                let z = (t * scale).powf(1.0 / theta);
                (-z).exp() * z / (theta * t)
            }
            Kind::BoundedExp { theta, slope } => {
                if theta == 0.0 {
                    (-t).exp()
                } else {
                    (1.0 - slope * t).powf(1.0 / theta - 1.0) / (1.0 + theta)
                }
            }
            Kind::UniformHalf => 0.5,
            Kind::TwoPoint { .. } | Kind::PointMass => unreachable!("atomic laws have no density"),
        })
    }

    fn spec(&self) -> Option<DistributionSpec> {
        Some(self.spec)
    }

    fn sample_size_biased(&self, rng: &mut dyn RngCore) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Frechet { theta, scale, gamma } => {
                let a: f64 = gamma.sample(rng);
                a.powf(-theta) / scale
            }
            Kind::Weibull { theta, scale, gamma } => {
                let a: f64 = gamma.sample(rng);
                a.powf(*theta) / scale
            }
            Kind::BoundedExp { theta, slope } => {
                // x·dF is the image of the hypoexponential(1, 1+θ) law
                // under x ↦ (1 − e^{−θx}) / slope.
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                let x = e1 + e2 / (1.0 + theta);
                if *theta == 0.0 {
                    x
                } else {
                    -(-theta * x).exp_m1() / slope
                }
            }
            Kind::UniformHalf => {
                let u: f64 = rng.sample(Open01);
                2.0 * u.sqrt()
            }
            Kind::TwoPoint { theta } => 1.0 / theta,
            Kind::PointMass => 1.0,
        })
    }

    fn first_passage_closed_form(&self, log_sum: f64, count: usize, trigger: f64) -> Option<f64> {
        match self.kind {
            // −Σ ln(S_k / (2t)) = ξ  ⇔  t = ½·exp((ξ + Σ ln S_k) / I)
            Kind::UniformHalf if count > 0 => Some(0.5 * ((trigger + log_sum) / count as f64).exp()),
            _ => None,
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SizeBiasedFn = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// A user-supplied unit-mean law.
#[derive(Clone)]
pub struct CustomDistribution {
    cdf: RealFn,
    cdf_left: Option<RealFn>,
    quantile: Option<RealFn>,
    density: Option<RealFn>,
    size_biased: Option<SizeBiasedFn>,
    lower: f64,
    upper: f64,
    continuous: bool,
}

impl fmt::Debug for CustomDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDistribution")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("continuous", &self.continuous)
            .finish_non_exhaustive()
    }
}

/// Builder for [`CustomDistribution`].
pub struct CustomBuilder {
    inner: CustomDistribution,
}

impl CustomDistribution {
    /// Starts a custom law from its cdf and support `[lower, upper]`.
    /// The law is assumed continuous unless [`CustomBuilder::atoms`] is called.
    pub fn builder<F>(cdf: F, lower: f64, upper: f64) -> CustomBuilder
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CustomBuilder {
            inner: CustomDistribution {
                cdf: Arc::new(cdf),
                cdf_left: None,
                quantile: None,
                density: None,
                size_biased: None,
                lower,
                upper,
                continuous: true,
            },
        }
    }
}

impl CustomBuilder {
    pub fn quantile<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, f: F) -> Self {
        self.inner.quantile = Some(Arc::new(f));
        self
    }

    /// Declares atoms and supplies the left-continuous version `F(t−)`.
    pub fn atoms<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, cdf_left: F) -> Self {
        self.inner.cdf_left = Some(Arc::new(cdf_left));
        self.inner.continuous = false;
        self
    }

    pub fn density<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, f: F) -> Self {
        self.inner.density = Some(Arc::new(f));
        self
    }

    pub fn size_biased_sampler<F: Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static>(mut self, f: F) -> Self {
        self.inner.size_biased = Some(Arc::new(f));
        self
    }

    /// Validates support, `F(0) < 1` and unit mean by quadrature.
    pub fn build(self) -> Result<CustomDistribution> {
        let d = self.inner;
        if !(d.lower >= 0.0 && d.lower.is_finite() && d.upper >= d.lower && d.upper > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "support [{}, {}] must satisfy 0 <= lower <= upper, upper > 0",
                d.lower, d.upper
            )));
        }
        if (d.cdf)(0.0) >= 1.0 {
            return Err(Error::InvalidDistribution("F(0) must be below one".into()));
        }
        let scale = if d.upper.is_finite() { d.upper } else { 1.0 };
        let mean = integrate_from_zero(|x| 1.0 - (d.cdf)(x), d.upper, scale)
            .map_err(|e| Error::InvalidDistribution(format!("mean integral failed: {e}")))?;
        if (mean.value - 1.0).abs() > UNIT_MEAN_TOL {
            return Err(Error::InvalidDistribution(format!("mean is {}, expected 1", mean.value)));
        }
        Ok(d)
    }
}

impl UnitMeanDistribution for CustomDistribution {
    fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t >= self.upper {
            1.0
        } else {
            (self.cdf)(t)
        }
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if t == f64::INFINITY || t > self.upper {
            return 1.0;
        }
        match &self.cdf_left {
            Some(f) if t > 0.0 => f(t),
            Some(_) => 0.0,
            None => self.cdf(t),
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.lower;
        }
        if p >= 1.0 {
            return self.upper;
        }
        match &self.quantile {
            Some(q) => q(p),
            None => inverse_nondecreasing(|x| self.cdf(x), p).clamp(self.lower, self.upper),
        }
    }

    fn lower_support(&self) -> f64 {
        self.lower
    }

    fn upper_support(&self) -> f64 {
        self.upper
    }

    fn is_continuous(&self) -> bool {
        self.continuous
    }

    fn density(&self, t: f64) -> Option<f64> {
        self.density.as_ref().map(|f| f(t))
    }

    fn sample_size_biased(&self, rng: &mut dyn RngCore) -> Result<f64> {
        match &self.size_biased {
            Some(f) => Ok(f(rng)),
            None => size_biased_by_rejection(self, rng),
        }
    }
}

/// The bounded-support law of `(1 − e^{−θX}) / (1 − φ_F(θ))` for `X ~ F`.
#[derive(Debug, Clone)]
pub struct BoundedSupport {
    base: Margin,
    theta: f64,
    // 1 − φ_F(θ); the upper support endpoint is its reciprocal.
    scale: f64,
}

/// Maps a law on `[0, ∞)` with Laplace transform `laplace` to the
/// unit-mean law on `[0, 1/(1 − φ_F(θ))]`.
pub fn bound_support<L: Fn(f64) -> f64>(dist: Margin, theta: f64, laplace: L) -> Result<BoundedSupport> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if dist.lower_support() != 0.0 || dist.upper_support().is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base law must have support [0, ∞), got [{}, {}]",
            dist.lower_support(),
            dist.upper_support()
        )));
    }
    let phi = laplace(theta);
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::InvalidParameter(format!("Laplace transform at theta must be in (0,1), got {phi}")));
    }
    Ok(BoundedSupport { base: dist, theta, scale: 1.0 - phi })
}

impl BoundedSupport {
    fn base_argument(&self, t: f64) -> f64 {
        -(-t * self.scale).ln_1p() / self.theta
    }
}

impl UnitMeanDistribution for BoundedSupport {
    fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t * self.scale >= 1.0 {
            1.0
        } else {
            self.base.cdf(self.base_argument(t))
        }
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t * self.scale > 1.0 {
            1.0
        } else {
            self.base.cdf_left(self.base_argument(t))
        }
    }

    fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            1.0
        } else if t * self.scale >= 1.0 {
            0.0
        } else {
            self.base.survival(self.base_argument(t))
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let x = self.base.quantile(p);
        -(-self.theta * x).exp_m1() / self.scale
    }

    fn quantile_at_exp_neg(&self, x: f64) -> f64 {
        let q = self.base.quantile_at_exp_neg(x);
        -(-self.theta * q).exp_m1() / self.scale
    }

    fn lower_support(&self) -> f64 {
        self.quantile(0.0)
    }

    fn upper_support(&self) -> f64 {
        1.0 / self.scale
    }

    fn is_continuous(&self) -> bool {
        self.base.is_continuous()
    }

    fn density(&self, t: f64) -> Option<f64> {
        if t <= 0.0 || t * self.scale >= 1.0 {
            return Some(0.0);
        }
        let jacobian = self.scale / (self.theta * (1.0 - t * self.scale));
        self.base.density(self.base_argument(t)).map(|f| f * jacobian)
    }
}
