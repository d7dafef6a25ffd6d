//! Nonparametric empirical-Bayes estimation of a vector of normal means.
//!
//! Given `Y_i ~ N(μ_i, 1)`, the estimator shrinks each observation by a
//! Gaussian-kernel estimate of the score `g'/g` of the marginal density
//! (Tweedie's formula with a bandwidth `h = √(v − 1)`). The crate also
//! provides the benchmarks it is judged against (exact Bayes rules, the
//! best simple symmetric rule for a known μ, the per-realization best hard
//! threshold) and a reproducible Monte-Carlo harness.
//!
//! Modules:
//! - [`model`]: discrete priors, Gaussian mixtures, posterior means
//! - [`kernel`]: sorted-sample kernel sums, exact or windowed
//! - [`shrinkage`]: the kernel empirical-Bayes rule and its variants
//! - [`oracles`]: oracle rules and quadrature risks
//! - [`experiments`]: scenario generators and the replication engine
//! - [`presets`]: the published simulation grids

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod kernel;
pub mod model;
pub mod normal;
pub mod oracles;
pub mod presets;
pub mod shrinkage;

pub use error::{Error, Result};
pub use experiments::{
    generate_means, risk_ratio_curve, run_experiment, simulate_observations, total_loss, EstimatorEntry, EstimatorKind,
    EstimatorRisk, ExperimentSpec, RatioOutcome, RatioPoint, RiskReport, ShrinkageSpec, Signal,
};
pub use model::{
    empirical_prior, gaussian_bayes_reference, mixture_density, mixture_density_grad, posterior_mean, DiscretePrior,
    GaussianReferencePrior,
};
pub use oracles::{
    bayes_average_risk, oracle_risk, oracle_rule, rule_risk, strong_oracle_loss, MeanVector, QuadratureSpec,
    StrongOracleOutcome,
};
pub use shrinkage::{
    default_v, kde_density, kde_density_grad, shrink, shrink_at, ObservationVector, ShrinkageConfig, Shrinker,
    Truncation, Variant,
};
