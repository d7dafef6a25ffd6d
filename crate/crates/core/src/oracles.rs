//! Benchmark rules and exact risks: the best simple symmetric rule for a
//! known mean vector, the per-realization best hard threshold, and
//! quadrature risks of arbitrary univariate rules.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{posterior_mean_unchecked, DiscretePrior};
use crate::normal::pdf;
use crate::shrinkage::ObservationVector;

/// The unknown means μ, optionally with a declared bound `|μ_i| < C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanVector {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_bound: Option<f64>,
}

impl MeanVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("mean vector must have at least one coordinate"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("mean {bad} is not finite")));
        }
        Ok(Self {
            values,
            declared_bound: None,
        })
    }

    pub fn with_bound(values: Vec<f64>, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::invalid(format!("declared bound must be positive, got {bound}")));
        }
        let mut mu = Self::new(values)?;
        if let Some(bad) = mu.values.iter().find(|v| v.abs() >= bound) {
            return Err(Error::invalid(format!("mean {bad} violates declared bound {bound}")));
        }
        mu.declared_bound = Some(bound);
        Ok(mu)
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

    pub fn declared_bound(&self) -> Option<f64> {
        self.declared_bound
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Empirical distribution of the means.
    pub fn empirical_prior(&self) -> DiscretePrior {
        DiscretePrior::empirical(&self.values).expect("validated mean vector")
    }
}

/// Trapezoid grid for risk integrals: each coordinate is integrated over
/// `μ_i ± half_width` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub half_width: f64,
    pub step: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            step: 0.01,
        }
    }
}

impl QuadratureSpec {
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        let q = Self { half_width, step };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width >= 6.0) || !self.half_width.is_finite() {
            return Err(Error::invalid(format!(
                "quadrature half_width must be >= 6, got {}",
                self.half_width
            )));
        }
        if !(self.step > 0.0 && self.step <= 0.05) {
            return Err(Error::invalid(format!(
                "quadrature step must be in (0, 0.05], got {}",
                self.step
            )));
        }
        Ok(())
    }
}

/// δ*μ(u): the Bayes rule under the empirical distribution of μ at noise
/// variance `variance`.
pub fn oracle_rule(mu: &MeanVector, variance: f64, u: f64) -> Result<f64> {
    crate::model::posterior_mean(&mu.empirical_prior(), variance, u)
}

/// Reusable δ*μ at unit variance.
#[derive(Debug, Clone)]
pub struct OracleRule {
    prior: DiscretePrior,
}

impl OracleRule {
    pub fn new(mu: &MeanVector) -> Self {
        Self {
            prior: mu.empirical_prior(),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        posterior_mean_unchecked(&self.prior, 1.0, u)
    }

    pub fn prior(&self) -> &DiscretePrior {
        &self.prior
    }
}

/// `Σ_k w_k ∫ (rule(y) − loc_k)² φ(y − loc_k) dy` over the atoms of
/// `prior`, scaled by `scale`.
///
/// All atoms share one global grid; each atom only collects grid points
/// within `half_width` of its location. The rule is evaluated once per
/// grid point, in parallel, and summed in grid order.
fn weighted_rule_risk<F>(prior: &DiscretePrior, scale: f64, rule: F, quad: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    quad.validate()?;
    let locs = prior.locations();
    let weights = prior.weights();
    let lo = prior.min_location() - quad.half_width;
    let hi = prior.max_location() + quad.half_width;
    let points = ((hi - lo) / quad.step).ceil() as usize;
    let step = (hi - lo) / points as f64;

    let contributions: Vec<Result<f64>> = (0..=points)
        .into_par_iter()
        .map(|j| {
            let y = lo + j as f64 * step;
            let r = rule(y);
            if !r.is_finite() {
                return Err(Error::NumericFailure(format!("rule returned {r} at y = {y}")));
            }
            let first = locs.partition_point(|&m| m < y - quad.half_width);
            let last = locs.partition_point(|&m| m <= y + quad.half_width);
            let mut s = 0.0;
            for (&m, &w) in locs[first..last].iter().zip(&weights[first..last]) {
                s += w * (r - m) * (r - m) * pdf(y - m);
            }
            let edge = if j == 0 || j == points { 0.5 } else { 1.0 };
            Ok(edge * s)
        })
        .collect();

    let mut total = 0.0;
    for c in contributions {
        total += c?;
    }
    Ok(total * step * scale)
}

/// R(μ, Δ*(·|rule)) = Σ_i E(rule(Y_i) − μ_i)² with Y_i ~ N(μ_i, 1).
pub fn rule_risk<F>(mu: &MeanVector, rule: F, quad: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    weighted_rule_risk(&mu.empirical_prior(), mu.len() as f64, rule, quad)
}

/// Risk of the simple symmetric oracle δ*μ, the smallest risk any simple
/// symmetric rule can attain for this μ.
pub fn oracle_risk(mu: &MeanVector, quad: &QuadratureSpec) -> Result<f64> {
    let rule = OracleRule::new(mu);
    weighted_rule_risk(rule.prior(), mu.len() as f64, |y| rule.eval(y), quad)
}

/// Per-coordinate Bayes risk B(G, Δ^G).
pub fn bayes_average_risk(prior: &DiscretePrior, quad: &QuadratureSpec) -> Result<f64> {
    weighted_rule_risk(prior, 1.0, |y| posterior_mean_unchecked(prior, 1.0, y), quad)
}

/// Per-coordinate risk of an arbitrary rule when μ ~ `prior`.
pub fn prior_rule_risk<F>(prior: &DiscretePrior, rule: F, quad: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    weighted_rule_risk(prior, 1.0, rule, quad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongOracleOutcome {
    pub loss: f64,
    /// A threshold attaining `loss`: observations with `|Y_i| > threshold`
    /// are kept, the rest set to zero. `0` keeps everything, `+∞` zeroes
    /// everything.
    pub threshold: f64,
}

/// Loss of the best hard threshold for this realization:
/// `min_C Σ (Y_i − μ_i)² 1{|Y_i| > C} + μ_i² 1{|Y_i| < C}`.
///
/// The objective only changes where `C` crosses some `|Y_i|`, so it is
/// evaluated once per piece at the midpoint between consecutive distinct
/// sorted `|Y_i|`. Among equal losses the smallest threshold wins.
pub fn strong_oracle_loss(mu: &MeanVector, y: &ObservationVector) -> Result<StrongOracleOutcome> {
    let (mu, y) = (mu.values(), y.values());
    if mu.len() != y.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} means, {} observations",
            mu.len(),
            y.len()
        )));
    }
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()));
    let abs: Vec<f64> = order.iter().map(|&i| y[i].abs()).collect();

    // zeroing the first j sorted coordinates, keeping the rest
    let mut keep_tail = vec![0.0; n + 1];
    for j in (0..n).rev() {
        let i = order[j];
        keep_tail[j] = keep_tail[j + 1] + (y[i] - mu[i]) * (y[i] - mu[i]);
    }

    // the two trivial thresholds in index order, so they match a plain
    // identity or zero loss bit for bit
    let keep_all: f64 = y.iter().zip(mu).map(|(y, m)| (y - m) * (y - m)).sum();
    let zero_all: f64 = mu.iter().map(|m| m * m).sum();

    let mut best = StrongOracleOutcome {
        loss: keep_all,
        threshold: 0.0,
    };
    let mut zero_head = 0.0;
    for j in 1..n {
        let i = order[j - 1];
        zero_head += mu[i] * mu[i];
        let threshold = if abs[j - 1] < abs[j] {
            0.5 * (abs[j - 1] + abs[j])
        } else {
            continue;
        };
        let loss = zero_head + keep_tail[j];
        if loss < best.loss {
            best = StrongOracleOutcome { loss, threshold };
        }
    }
    if zero_all < best.loss {
        best = StrongOracleOutcome {
            loss: zero_all,
            threshold: f64::INFINITY,
        };
    }
    Ok(best)
}
