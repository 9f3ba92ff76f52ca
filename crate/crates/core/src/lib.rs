//! Extreme-value copulas generated by unit-mean distributions.
//!
//! A copula model is a list of unit-mean margins `F_1, …, F_d`. Its stable
//! tail dependence function is `ℓ(t) = E max_i t_i X_i` with independent
//! `X_i ~ F_i`, and the copula is `C(u) = exp(−ℓ(−ln u_1, …, −ln u_d))`.
//!
//! The crate provides evaluation of `ℓ` (closed form, inclusion–exclusion
//! quadrature, Monte Carlo), the bijection with killed Lévy measures, and two
//! exact samplers: a frailty construction for bounded margins and a
//! Pickands-measure construction for arbitrary margins.

pub mod batch;
pub mod distributions;
pub mod error;
pub mod frailty;
pub mod inverse;
pub mod levy;
pub mod pickands;
pub mod quadrature;
pub mod special;
pub mod statlab;
pub mod stdf;

pub use batch::SampleBatch;
pub use distributions::{
    bound_support, make_distribution, CustomDistribution, DistributionSpec, Family, Margin, UnitMeanDistribution,
};
pub use error::{Error, Result};
pub use frailty::sample_definetti;
pub use levy::{distribution_from_levy, levy_from_distribution, LevyMeasure};
pub use pickands::sample_pickands;
pub use stdf::{copula_cdf, CopulaModel, Method, StdfValue};
