//! The kernel empirical-Bayes rule.
//!
//! With `h = √(v − 1)`, the rule at `y` is `y + c · ĝ'_h(y)/ĝ_h(y)` where
//! `ĝ_h` is the Gaussian kernel density estimate of the observations and
//! `c = 1` (hat variant) or `c = v` (tilde variant). The ratio is always
//! computed as a normalized weighted mean of `(Y_j − y)/h²`, never as a
//! quotient of two separately computed densities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Evaluation, KernelSmoother, DEFAULT_WINDOW_TAU, MIN_WINDOW_TAU};
use crate::oracles::MeanVector;

/// Observations Y_i ~ N(μ_i, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObservationVector {
    values: Vec<f64>,
}

impl ObservationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("observation vector must be nonempty"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("observation {bad} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ObservationVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ObservationVector> for Vec<f64> {
    fn from(obs: ObservationVector) -> Self {
        obs.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `y + ĝ'/ĝ`
    Hat,
    /// `y + v · ĝ'/ĝ`
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Truncation {
    None,
    /// Clamp the estimate itself to `[−bound, bound]`.
    Magnitude {
        bound: f64,
    },
    /// Clamp the move `estimate − y` to `±√(3 ln n)`.
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageConfig {
    /// Bandwidth parameter, `v = 1 + h²`.
    pub v: f64,
    pub variant: Variant,
    pub truncation: Truncation,
    #[serde(default)]
    pub leave_one_out: bool,
    /// Window radius in units of `h`; `None` sums over every observation.
    #[serde(default = "default_window_tau")]
    pub window_tau: Option<f64>,
}

fn default_window_tau() -> Option<f64> {
    Some(DEFAULT_WINDOW_TAU)
}

impl ShrinkageConfig {
    /// Tilde variant with residual truncation and the default window.
    pub fn new(v: f64) -> Result<Self> {
        let cfg = Self {
            v,
            variant: Variant::Tilde,
            truncation: Truncation::Residual,
            leave_one_out: false,
            window_tau: default_window_tau(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn leave_one_out(mut self, on: bool) -> Self {
        self.leave_one_out = on;
        self
    }

    pub fn window_tau(mut self, tau: Option<f64>) -> Self {
        self.window_tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 1.0) || !self.v.is_finite() {
            return Err(Error::invalid(format!("v must be > 1, got {}", self.v)));
        }
        if let Truncation::Magnitude { bound } = self.truncation {
            if !(bound > 0.0) {
                return Err(Error::invalid(format!("magnitude bound must be > 0, got {bound}")));
            }
        }
        if let Some(tau) = self.window_tau {
            if !(tau >= MIN_WINDOW_TAU) || !tau.is_finite() {
                return Err(Error::invalid(format!(
                    "window_tau must be >= {MIN_WINDOW_TAU}, got {tau}"
                )));
            }
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> f64 {
        (self.v - 1.0).sqrt()
    }

    fn evaluation(&self) -> Evaluation {
        match self.window_tau {
            Some(tau) => Evaluation::Window { tau },
            None => Evaluation::Exact,
        }
    }

    /// Compact label such as `tilde v=1.15 trunc=residual`.
    pub fn label(&self) -> String {
        let variant = match self.variant {
            Variant::Hat => "hat",
            Variant::Tilde => "tilde",
        };
        let trunc = match self.truncation {
            Truncation::None => "none".to_string(),
            Truncation::Residual => "residual".to_string(),
            Truncation::Magnitude { bound } => format!("magnitude:{bound}"),
        };
        let mut s = format!("{variant} v={} trunc={trunc}", self.v);
        if self.leave_one_out {
            s.push_str(" loo");
        }
        s
    }
}

/// `1 + 1/ln n`.
pub fn default_v(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("default_v needs n >= 2, got {n}")));
    }
    Ok(1.0 + 1.0 / (n as f64).ln())
}

/// `(1/(n h)) Σ φ((y − Y_i)/h)`, summed over every observation.
pub fn kde_density(y_obs: &ObservationVector, h: f64, y: f64) -> Result<f64> {
    Ok(KernelSmoother::new(y_obs.values(), h, Evaluation::Exact)?.density(y))
}

/// `(1/(n h)) Σ ((Y_i − y)/h²) φ((y − Y_i)/h)`, summed over every observation.
pub fn kde_density_grad(y_obs: &ObservationVector, h: f64, y: f64) -> Result<f64> {
    Ok(KernelSmoother::new(y_obs.values(), h, Evaluation::Exact)?.density_grad(y))
}

/// The configured rule bound to one sample; sorts once, evaluates many times.
#[derive(Debug, Clone)]
pub struct Shrinker {
    cfg: ShrinkageConfig,
    smoother: KernelSmoother,
    residual_cap: f64,
}

impl Shrinker {
    pub fn new(y_obs: &ObservationVector, cfg: &ShrinkageConfig) -> Result<Self> {
        cfg.validate()?;
        let smoother = KernelSmoother::new(y_obs.values(), cfg.bandwidth(), cfg.evaluation())?;
        let residual_cap = (3.0 * (y_obs.len() as f64).ln()).sqrt();
        Ok(Self {
            cfg: *cfg,
            smoother,
            residual_cap,
        })
    }

    pub fn config(&self) -> &ShrinkageConfig {
        &self.cfg
    }

    pub fn smoother(&self) -> &KernelSmoother {
        &self.smoother
    }

    /// Estimate at `y`, leaving out observation `exclude_index` when given.
    pub fn at(&self, y: f64, exclude_index: Option<usize>) -> Result<f64> {
        let sums = self.smoother.sums(y, exclude_index)?;
        let score = sums.score(self.smoother.bandwidth());
        let step = match self.cfg.variant {
            Variant::Hat => score,
            Variant::Tilde => self.cfg.v * score,
        };
        let d = y + step;
        let out = match self.cfg.truncation {
            Truncation::None => d,
            Truncation::Magnitude { bound } => d.signum() * d.abs().min(bound),
            Truncation::Residual => y + step.signum() * step.abs().min(self.residual_cap),
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::NumericFailure(format!("estimate at y = {y} is {out}")))
        }
    }

    /// The rule applied to every observation.
    pub fn apply(&self) -> Result<MeanVector> {
        let n = self.smoother.len();
        let loo = self.cfg.leave_one_out;
        let out: Result<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| self.at(self.smoother.observation(i), loo.then_some(i)))
            .collect();
        MeanVector::new(out?)
    }
}

/// One evaluation of the rule at `y`. Builds the sorted index every call;
/// use [`Shrinker`] for repeated evaluations.
pub fn shrink_at(
    y_obs: &ObservationVector,
    cfg: &ShrinkageConfig,
    y: f64,
    exclude_index: Option<usize>,
) -> Result<f64> {
    Shrinker::new(y_obs, cfg)?.at(y, exclude_index)
}

/// The rule applied at every `Y_i` (leaving `Y_i` out when configured).
pub fn shrink(y_obs: &ObservationVector, cfg: &ShrinkageConfig) -> Result<MeanVector> {
    Shrinker::new(y_obs, cfg)?.apply()
}
