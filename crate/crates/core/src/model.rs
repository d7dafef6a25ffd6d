//! Priors, Gaussian location mixtures and exact posterior-mean rules.
//!
//! Every weighted sum of normal kernels is evaluated with the largest
//! exponent subtracted first, so the posterior mean stays finite far in the
//! tails where both numerator and denominator underflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::LN_SQRT_2PI;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// One point mass of a [`DiscretePrior`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// A finite mixture of point masses, held in canonical form: locations
/// strictly increasing, duplicates merged, weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct DiscretePrior {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscretePrior {
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::invalid("prior needs at least one atom"));
        }
        for &(loc, w) in &atoms {
            if !loc.is_finite() {
                return Err(Error::invalid(format!("atom location {loc} is not finite")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("atom weight {w} must be finite and >= 0")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!("atom weights sum to {total}, expected 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::from_sorted(atoms))
    }

    fn from_sorted(atoms: Vec<(f64, f64)>) -> Self {
        let mut locations: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (loc, w) in atoms {
            match locations.last() {
                Some(&last) if last == loc => *weights.last_mut().unwrap() += w,
                _ => {
                    locations.push(loc);
                    weights.push(w);
                }
            }
        }
        Self { locations, weights }
    }

    /// Uniform distribution over `values`, duplicates merged.
    pub fn empirical(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical prior of an empty sample"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample value {bad} is not finite")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            atoms.push((sorted[i], (j - i) as f64 / n));
            i = j;
        }
        Ok(Self::from_sorted(atoms))
    }

    /// Single point mass at `location`.
    pub fn point(location: f64) -> Result<Self> {
        Self::new([(location, 1.0)])
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.locations
            .iter()
            .zip(&self.weights)
            .map(|(&location, &weight)| Atom { location, weight })
    }

    pub fn min_location(&self) -> f64 {
        self.locations[0]
    }

    pub fn max_location(&self) -> f64 {
        *self.locations.last().unwrap()
    }

    /// Inverse-CDF draw given a uniform variate in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (&loc, &w) in self.locations.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return loc;
            }
        }
        // u landed in the rounding slack above the last partial sum
        self.max_location()
    }

    /// Normalized kernel weights at `y`, shifted so the largest exponent is
    /// zero. Returns (shift, per-atom relative weights).
    fn shifted_weights(&self, variance: f64, y: f64) -> (f64, Vec<f64>) {
        let exps: Vec<f64> = self
            .locations
            .iter()
            .zip(&self.weights)
            .map(|(&loc, &w)| {
                if w > 0.0 {
                    w.ln() - (y - loc) * (y - loc) / (2.0 * variance)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let shift = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rel = exps.iter().map(|&e| (e - shift).exp()).collect();
        (shift, rel)
    }
}

impl TryFrom<Vec<Atom>> for DiscretePrior {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms.into_iter().map(|a| (a.location, a.weight)))
    }
}

impl From<DiscretePrior> for Vec<Atom> {
    fn from(prior: DiscretePrior) -> Self {
        prior.atoms().collect()
    }
}

/// Uniform distribution on the sample points.
pub fn empirical_prior(values: &[f64]) -> Result<DiscretePrior> {
    DiscretePrior::empirical(values)
}

fn check_variance(variance: f64) -> Result<()> {
    if variance > 0.0 && variance.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "variance must be positive and finite, got {variance}"
        )))
    }
}

/// Natural log of the mixture density `∫ φ_σ(y − t) dG(t)`.
pub fn log_mixture_density(prior: &DiscretePrior, variance: f64, y: f64) -> Result<f64> {
    check_variance(variance)?;
    let (shift, rel) = prior.shifted_weights(variance, y);
    let sum: f64 = rel.iter().sum();
    Ok(shift + sum.ln() - LN_SQRT_2PI - 0.5 * variance.ln())
}

/// Density of Y = M + σZ with M ~ `prior`, Z standard normal, σ² = `variance`.
pub fn mixture_density(prior: &DiscretePrior, variance: f64, y: f64) -> Result<f64> {
    Ok(log_mixture_density(prior, variance, y)?.exp())
}

/// Derivative in `y` of [`mixture_density`].
pub fn mixture_density_grad(prior: &DiscretePrior, variance: f64, y: f64) -> Result<f64> {
    check_variance(variance)?;
    let (shift, rel) = prior.shifted_weights(variance, y);
    let slope: f64 = rel
        .iter()
        .zip(prior.locations())
        .map(|(&r, &loc)| r * (loc - y))
        .sum::<f64>()
        / variance;
    Ok(slope * (shift - LN_SQRT_2PI - 0.5 * variance.ln()).exp())
}

/// Bayes rule E[M | Y = y] for M ~ `prior` and noise variance `variance`.
///
/// Algebraically `y + σ² g'(y)/g(y)`; evaluated as a weighted mean of the
/// atom locations, so the result is always inside the support hull.
pub fn posterior_mean(prior: &DiscretePrior, variance: f64, y: f64) -> Result<f64> {
    check_variance(variance)?;
    Ok(posterior_mean_unchecked(prior, variance, y))
}

pub(crate) fn posterior_mean_unchecked(prior: &DiscretePrior, variance: f64, y: f64) -> f64 {
    let (_, rel) = prior.shifted_weights(variance, y);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&r, &loc) in rel.iter().zip(prior.locations()) {
        num += r * loc;
        den += r;
    }
    (num / den).clamp(prior.min_location(), prior.max_location())
}

/// Centered Gaussian prior N(0, γ²), the closed-form reference case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianReferencePrior {
    variance_gamma2: f64,
}

impl GaussianReferencePrior {
    pub fn new(variance_gamma2: f64) -> Result<Self> {
        if variance_gamma2 > 0.0 && variance_gamma2.is_finite() {
            Ok(Self { variance_gamma2 })
        } else {
            Err(Error::invalid(format!(
                "prior variance must be positive and finite, got {variance_gamma2}"
            )))
        }
    }

    pub fn variance(&self) -> f64 {
        self.variance_gamma2
    }

    /// Limit of the kernel rule with bandwidth parameter `v` under this
    /// prior: `(1 − 1/(v + γ²)) y`. With `v = 1` this is the Bayes rule.
    pub fn limit_rule(&self, v: f64, y: f64) -> Result<f64> {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(Error::invalid(format!("v must be >= 1, got {v}")));
        }
        Ok((1.0 - 1.0 / (v + self.variance_gamma2)) * y)
    }
}

/// `(1 − 1/(v + γ²)) · y`.
pub fn gaussian_bayes_reference(gamma2: f64, v: f64, y: f64) -> Result<f64> {
    GaussianReferencePrior::new(gamma2)?.limit_rule(v, y)
}
