//! Monte-Carlo harness: signal generators, replication engine and risk
//! reporting.
//!
//! Randomness comes from ChaCha8 keyed by the experiment seed, one stream
//! per (replication, purpose). Replication `r` therefore draws the same
//! means and noise whether replications run serially or in parallel, and
//! adding estimators to the roster never shifts the draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{posterior_mean_unchecked, DiscretePrior};
use crate::oracles::{oracle_risk, strong_oracle_loss, MeanVector, QuadratureSpec};
use crate::shrinkage::{default_v, shrink, ObservationVector, ShrinkageConfig, Truncation, Variant};

/// How the nonzero means are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    /// `k` coordinates equal to `u1`, the rest zero.
    PointMass { k: usize, u1: f64 },
    /// `k` coordinates i.i.d. Uniform(lo, hi), redrawn every replication.
    Uniform { k: usize, lo: f64, hi: f64 },
    /// Every coordinate drawn i.i.d. from `prior`.
    SampledPrior { prior: DiscretePrior },
}

impl Signal {
    fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Signal::PointMass { k, u1 } => {
                check_k(k, n)?;
                if !u1.is_finite() {
                    return Err(Error::invalid(format!("signal.u1 must be finite, got {u1}")));
                }
            }
            Signal::Uniform { k, lo, hi } => {
                check_k(k, n)?;
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::invalid(format!(
                        "signal.lo must be below signal.hi, got lo = {lo}, hi = {hi}"
                    )));
                }
            }
            Signal::SampledPrior { .. } => {}
        }
        Ok(())
    }

    /// Same signal at dimension `n`, keeping the proportion of nonzero
    /// means fixed.
    pub fn rescaled(&self, from_n: usize, to_n: usize) -> Signal {
        let scale = |k: usize| ((k as f64) * to_n as f64 / from_n as f64).round() as usize;
        match self {
            Signal::PointMass { k, u1 } => Signal::PointMass {
                k: scale(*k).min(to_n),
                u1: *u1,
            },
            Signal::Uniform { k, lo, hi } => Signal::Uniform {
                k: scale(*k).min(to_n),
                lo: *lo,
                hi: *hi,
            },
            other => other.clone(),
        }
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k > n {
        Err(Error::invalid(format!("signal.k = {k} exceeds n = {n}")))
    } else {
        Ok(())
    }
}

/// Shrinkage rule settings in a roster; `v: None` means `default_v(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_truncation")]
    pub truncation: Truncation,
    #[serde(default)]
    pub leave_one_out: bool,
    #[serde(default = "default_tau")]
    pub window_tau: Option<f64>,
}

fn default_variant() -> Variant {
    Variant::Tilde
}

fn default_truncation() -> Truncation {
    Truncation::Residual
}

fn default_tau() -> Option<f64> {
    Some(crate::kernel::DEFAULT_WINDOW_TAU)
}

impl Default for ShrinkageSpec {
    fn default() -> Self {
        Self {
            v: None,
            variant: default_variant(),
            truncation: default_truncation(),
            leave_one_out: false,
            window_tau: default_tau(),
        }
    }
}

impl ShrinkageSpec {
    pub fn with_v(v: f64) -> Self {
        Self {
            v: Some(v),
            ..Self::default()
        }
    }

    pub fn resolve(&self, n: usize) -> Result<ShrinkageConfig> {
        let v = match self.v {
            Some(v) => v,
            None => default_v(n)?,
        };
        let cfg = ShrinkageConfig {
            v,
            variant: self.variant,
            truncation: self.truncation,
            leave_one_out: self.leave_one_out,
            window_tau: self.window_tau,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    Shrinkage(ShrinkageSpec),
    /// `μ̂ = Y`.
    Identity,
    /// `μ̂ = 0`.
    Zero,
    /// Exact quadrature risk of the best simple symmetric rule for μ.
    SimpleOracle,
    /// Best hard threshold chosen with knowledge of μ, per realization.
    StrongOracle,
    /// Posterior mean under the true prior; sampled-prior signals only.
    ExactBayes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorEntry {
    pub name: String,
    #[serde(flatten)]
    pub kind: EstimatorKind,
}

impl EstimatorEntry {
    pub fn new(name: impl Into<String>, kind: EstimatorKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    pub fn describe(&self, n: usize) -> String {
        match &self.kind {
            EstimatorKind::Shrinkage(s) => match s.resolve(n) {
                Ok(cfg) => cfg.label(),
                Err(_) => "shrinkage (invalid)".to_string(),
            },
            EstimatorKind::Identity => "identity".to_string(),
            EstimatorKind::Zero => "zero".to_string(),
            EstimatorKind::SimpleOracle => "simple-symmetric oracle (exact)".to_string(),
            EstimatorKind::StrongOracle => "strong oracle (best hard threshold)".to_string(),
            EstimatorKind::ExactBayes => "exact Bayes".to_string(),
        }
    }
}

fn default_replications() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub n: usize,
    pub signal: Signal,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub estimators: Vec<EstimatorEntry>,
    /// Estimator whose mean loss is the denominator of reported ratios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        self.signal.validate(self.n)?;
        if self.replications == 0 {
            return Err(Error::invalid("replications must be >= 1"));
        }
        self.quadrature.validate()?;
        if self.estimators.is_empty() {
            return Err(Error::invalid("estimators must list at least one estimator"));
        }
        for (i, e) in self.estimators.iter().enumerate() {
            if e.name.is_empty() {
                return Err(Error::invalid(format!("estimators[{i}].name is empty")));
            }
            if self.estimators[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::invalid(format!(
                    "estimators[{i}].name `{}` is duplicated",
                    e.name
                )));
            }
            match &e.kind {
                EstimatorKind::Shrinkage(s) => {
                    s.resolve(self.n)
                        .map_err(|err| Error::invalid(format!("estimators[{i}] ({}): {err}", e.name)))?;
                }
                EstimatorKind::ExactBayes if !matches!(self.signal, Signal::SampledPrior { .. }) => {
                    return Err(Error::invalid(format!(
                        "estimators[{i}] ({}): exact_bayes needs a sampled_prior signal",
                        e.name
                    )));
                }
                _ => {}
            }
        }
        if let Some(b) = &self.baseline {
            if !self.estimators.iter().any(|e| &e.name == b) {
                return Err(Error::invalid(format!("baseline `{b}` is not in estimators")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Means = 1,
    Noise = 2,
}

/// Independent ChaCha8 stream for one (seed, replication, purpose).
pub fn rng_stream(seed: u64, rep: usize, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((rep as u64) << 8) | purpose as u64);
    rng
}

/// Mean vector of replication `rep`.
pub fn generate_means(spec: &ExperimentSpec, rep: usize) -> Result<MeanVector> {
    let n = spec.n;
    spec.signal.validate(n)?;
    if rep >= spec.replications {
        return Err(Error::invalid(format!(
            "replication {rep} out of range (replications = {})",
            spec.replications
        )));
    }
    let mut rng = rng_stream(spec.seed, rep, StreamPurpose::Means);
    let mut values = vec![0.0; n];
    match &spec.signal {
        Signal::PointMass { k, u1 } => values[..*k].fill(*u1),
        Signal::Uniform { k, lo, hi } => {
            for v in &mut values[..*k] {
                *v = rng.random_range(*lo..*hi);
            }
        }
        Signal::SampledPrior { prior } => {
            for v in &mut values {
                *v = prior.quantile(rng.random::<f64>());
            }
        }
    }
    MeanVector::new(values)
}

/// `Y_i = μ_i + Z_i` with standard normal `Z_i` drawn from `rng`.
pub fn simulate_observations<R: Rng + ?Sized>(mu: &MeanVector, rng: &mut R) -> ObservationVector {
    let y = mu
        .values()
        .iter()
        .map(|&m| m + rng.sample::<f64, _>(StandardNormal))
        .collect();
    ObservationVector::new(y).expect("finite means plus finite noise")
}

/// Observations of replication `rep`.
pub fn replication_observations(spec: &ExperimentSpec, mu: &MeanVector, rep: usize) -> ObservationVector {
    simulate_observations(mu, &mut rng_stream(spec.seed, rep, StreamPurpose::Noise))
}

/// `Σ (est_i − μ_i)²`.
pub fn total_loss(estimate: &MeanVector, mu: &MeanVector) -> Result<f64> {
    total_loss_slices(estimate.values(), mu.values())
}

fn total_loss_slices(estimate: &[f64], mu: &[f64]) -> Result<f64> {
    if estimate.len() != mu.len() {
        return Err(Error::invalid(format!(
            "length mismatch: estimate has {}, means have {}",
            estimate.len(),
            mu.len()
        )));
    }
    Ok(estimate.iter().zip(mu).map(|(e, m)| (e - m) * (e - m)).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRisk {
    pub name: String,
    pub config: String,
    /// Total loss averaged over replications.
    pub risk: f64,
    /// Monte-Carlo standard error of `risk`.
    pub se: f64,
    pub replications: usize,
    /// `risk / baseline risk`, present when the baseline risk is positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// `(risk − baseline risk) / baseline risk`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    pub entries: Vec<EstimatorRisk>,
}

impl RiskReport {
    pub fn get(&self, name: &str) -> Option<&EstimatorRisk> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn replication_losses(spec: &ExperimentSpec, rep: usize) -> Result<Vec<f64>> {
    let mu = generate_means(spec, rep)?;
    let y = replication_observations(spec, &mu, rep);
    spec.estimators
        .iter()
        .map(|e| {
            estimator_loss(spec, e, &mu, &y).map_err(|source| Error::Replication {
                rep,
                estimator: e.name.clone(),
                source: Box::new(source),
            })
        })
        .collect()
}

fn estimator_loss(spec: &ExperimentSpec, e: &EstimatorEntry, mu: &MeanVector, y: &ObservationVector) -> Result<f64> {
    match &e.kind {
        EstimatorKind::Shrinkage(s) => {
            let est = shrink(y, &s.resolve(spec.n)?)?;
            total_loss(&est, mu)
        }
        EstimatorKind::Identity => total_loss_slices(y.values(), mu.values()),
        EstimatorKind::Zero => Ok(mu.values().iter().map(|m| m * m).sum()),
        EstimatorKind::SimpleOracle => oracle_risk(mu, &spec.quadrature),
        EstimatorKind::StrongOracle => Ok(strong_oracle_loss(mu, y)?.loss),
        EstimatorKind::ExactBayes => match &spec.signal {
            Signal::SampledPrior { prior } => {
                let est: Vec<f64> = y
                    .values()
                    .iter()
                    .map(|&v| posterior_mean_unchecked(prior, 1.0, v))
                    .collect();
                total_loss_slices(&est, mu.values())
            }
            _ => Err(Error::invalid("exact_bayes needs a sampled_prior signal")),
        },
    }
}

/// Mean and standard error of the mean, summed in index order.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every replication (in parallel) and aggregates in replication order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RiskReport> {
    Ok(run_experiment_detailed(spec)?.0)
}

/// Like [`run_experiment`], also returning the per-replication losses
/// (`losses[rep][estimator]`).
pub fn run_experiment_detailed(spec: &ExperimentSpec) -> Result<(RiskReport, Vec<Vec<f64>>)> {
    spec.validate()?;
    let losses: Vec<Vec<f64>> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| replication_losses(spec, rep))
        .collect::<Result<_>>()?;

    let mut entries: Vec<EstimatorRisk> = spec
        .estimators
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let column: Vec<f64> = losses.iter().map(|row| row[j]).collect();
            let (risk, se) = mean_and_se(&column);
            EstimatorRisk {
                name: e.name.clone(),
                config: e.describe(spec.n),
                risk,
                se,
                replications: spec.replications,
                ratio: None,
                excess_ratio: None,
            }
        })
        .collect();

    if let Some(b) = &spec.baseline {
        let base = entries.iter().find(|e| &e.name == b).map(|e| e.risk).unwrap_or(0.0);
        if base > 0.0 {
            for e in &mut entries {
                e.ratio = Some(e.risk / base);
                e.excess_ratio = Some((e.risk - base) / base);
            }
        }
    }

    let report = RiskReport {
        n: spec.n,
        replications: spec.replications,
        seed: spec.seed,
        baseline: spec.baseline.clone(),
        entries,
    };
    Ok((report, losses))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RatioOutcome {
    Ratio {
        ratio: f64,
        shrinkage_risk: f64,
        shrinkage_se: f64,
        oracle_risk: f64,
        oracle_se: f64,
    },
    /// The exact oracle risk is zero; no ratio exists.
    ZeroBaseline { shrinkage_risk: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n: usize,
    pub v: f64,
    pub outcome: RatioOutcome,
}

/// Shrinkage risk over exact oracle risk as the dimension grows.
///
/// For each `n`, the base signal is rescaled to keep its proportion of
/// nonzero means, `v` is set to `default_v(n)`, and the roster is the
/// base spec's first shrinkage entry (tilde with residual truncation if it
/// has none) plus the simple-symmetric oracle.
pub fn risk_ratio_curve(base_spec: &ExperimentSpec, dims: &[usize]) -> Result<Vec<RatioPoint>> {
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("dims must be strictly increasing"));
    }
    let shrinkage = base_spec
        .estimators
        .iter()
        .find_map(|e| match &e.kind {
            EstimatorKind::Shrinkage(s) => Some(*s),
            _ => None,
        })
        .unwrap_or_default();

    dims.iter()
        .map(|&n| {
            let v = default_v(n)?;
            let spec = ExperimentSpec {
                n,
                signal: base_spec.signal.rescaled(base_spec.n, n),
                estimators: vec![
                    EstimatorEntry::new(
                        "shrinkage",
                        EstimatorKind::Shrinkage(ShrinkageSpec {
                            v: Some(v),
                            ..shrinkage
                        }),
                    ),
                    EstimatorEntry::new("oracle", EstimatorKind::SimpleOracle),
                ],
                baseline: Some("oracle".to_string()),
                ..base_spec.clone()
            };
            let report = run_experiment(&spec)?;
            let eb = &report.entries[0];
            let oracle = &report.entries[1];
            let outcome = if oracle.risk > 0.0 {
                RatioOutcome::Ratio {
                    ratio: eb.risk / oracle.risk,
                    shrinkage_risk: eb.risk,
                    shrinkage_se: eb.se,
                    oracle_risk: oracle.risk,
                    oracle_se: oracle.se,
                }
            } else {
                RatioOutcome::ZeroBaseline {
                    shrinkage_risk: eb.risk,
                }
            };
            Ok(RatioPoint { n, v, outcome })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::rule_risk;

    fn spec(n: usize, signal: Signal, reps: usize, estimators: Vec<EstimatorEntry>) -> ExperimentSpec {
        ExperimentSpec {
            n,
            signal,
            replications: reps,
            seed: 42,
            estimators,
            baseline: None,
            quadrature: QuadratureSpec::default(),
        }
    }

    fn identity() -> Vec<EstimatorEntry> {
        vec![EstimatorEntry::new("identity", EstimatorKind::Identity)]
    }

    #[test]
    fn point_mass_layout() {
        let s = spec(1000, Signal::PointMass { k: 5, u1: 7.0 }, 1, identity());
        let mu = generate_means(&s, 0).unwrap();
        assert_eq!(mu.values().iter().filter(|&&v| v == 7.0).count(), 5);
        assert_eq!(mu.values().iter().filter(|&&v| v == 0.0).count(), 995);
        assert!(mu.values()[..5].iter().all(|&v| v == 7.0));

        let s = spec(10, Signal::PointMass { k: 0, u1: 3.0 }, 1, identity());
        assert!(generate_means(&s, 0).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_specs() {
        let s = spec(10, Signal::PointMass { k: 11, u1: 1.0 }, 1, identity());
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("signal.k"), "{err}");
        assert!(generate_means(&s, 0).is_err());

        let s = spec(
            10,
            Signal::Uniform {
                k: 1,
                lo: 3.0,
                hi: -3.0,
            },
            1,
            identity(),
        );
        assert!(s.validate().is_err());
        let s = spec(10, Signal::PointMass { k: 1, u1: 1.0 }, 0, identity());
        assert!(s.validate().is_err());
        let s = spec(10, Signal::PointMass { k: 1, u1: 1.0 }, 2, identity());
        assert!(generate_means(&s, 2).is_err());

        let s = spec(
            10,
            Signal::PointMass { k: 1, u1: 1.0 },
            1,
            vec![EstimatorEntry::new("b", EstimatorKind::ExactBayes)],
        );
        assert!(s.validate().is_err());

        let mut s = spec(10, Signal::PointMass { k: 1, u1: 1.0 }, 1, identity());
        s.baseline = Some("nope".into());
        assert!(s.validate().is_err());

        let s = spec(
            10,
            Signal::PointMass { k: 1, u1: 1.0 },
            1,
            vec![
                EstimatorEntry::new("a", EstimatorKind::Zero),
                EstimatorEntry::new("a", EstimatorKind::Identity),
            ],
        );
        assert!(s.validate().is_err());

        let s = spec(
            1,
            Signal::PointMass { k: 1, u1: 1.0 },
            1,
            vec![EstimatorEntry::new(
                "eb",
                EstimatorKind::Shrinkage(ShrinkageSpec::default()),
            )],
        );
        assert!(s.validate().is_err(), "default_v needs n >= 2");
    }

    #[test]
    fn uniform_signal_draws() {
        let s = spec(
            10_000,
            Signal::Uniform {
                k: 300,
                lo: -3.0,
                hi: 3.0,
            },
            1000,
            identity(),
        );
        let mut means = Vec::new();
        for rep in 0..1000 {
            let mu = generate_means(&s, rep).unwrap();
            let nz = &mu.values()[..300];
            assert!(nz.iter().all(|&v| v > -3.0 && v < 3.0));
            assert!(mu.values()[300..].iter().all(|&v| v == 0.0));
            means.push(nz.iter().sum::<f64>() / 300.0);
        }
        let (m, se) = mean_and_se(&means);
        assert!(m.abs() < 3.0 * se, "{m} ± {se}");
        // each rep's mean has sd √(3/300) = 0.1
        assert!((se - 0.1 / 1000f64.sqrt()).abs() < 0.2 * se);
    }

    #[test]
    fn sampled_prior_draws_atoms() {
        let prior = DiscretePrior::new([(0.0, 0.9), (4.0, 0.1)]).unwrap();
        let s = spec(20_000, Signal::SampledPrior { prior }, 1, identity());
        let mu = generate_means(&s, 0).unwrap();
        let share = mu.values().iter().filter(|&&v| v == 4.0).count() as f64 / 20_000.0;
        assert!(mu.values().iter().all(|&v| v == 0.0 || v == 4.0));
        assert!((share - 0.1).abs() < 3.0 * (0.09f64 / 20_000.0).sqrt());
    }

    #[test]
    fn observations_noise_sanity() {
        let mu = MeanVector::new(vec![0.0; 10_000]).unwrap();
        let y = simulate_observations(&mu, &mut rng_stream(1, 0, StreamPurpose::Noise));
        let (m, _) = mean_and_se(y.values());
        let var = y.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 9_999.0;
        assert!(m.abs() < 3.0 * 3.0 / 100.0);
        assert!((0.9..=1.1).contains(&var));
    }

    #[test]
    fn observations_deterministic_and_additive() {
        let mu = MeanVector::new(vec![0.0; 100]).unwrap();
        let shifted = MeanVector::new(vec![2.5; 100]).unwrap();
        let a = simulate_observations(&mu, &mut rng_stream(9, 3, StreamPurpose::Noise));
        let b = simulate_observations(&mu, &mut rng_stream(9, 3, StreamPurpose::Noise));
        let c = simulate_observations(&shifted, &mut rng_stream(9, 3, StreamPurpose::Noise));
        assert_eq!(a, b);
        for (x, z) in a.values().iter().zip(c.values()) {
            assert_eq!(*z, 2.5 + x);
        }
        let d = simulate_observations(&mu, &mut rng_stream(9, 4, StreamPurpose::Noise));
        assert_ne!(a, d);
    }

    #[test]
    fn total_loss_examples() {
        let mut v = vec![7.0; 5];
        v.extend(vec![0.0; 995]);
        let mu = MeanVector::new(v.clone()).unwrap();
        assert_eq!(total_loss(&mu, &mu).unwrap(), 0.0);
        let plus: Vec<f64> = v.iter().map(|x| x + 1.0).collect();
        assert_eq!(total_loss(&MeanVector::new(plus).unwrap(), &mu).unwrap(), 1000.0);
        let zero = MeanVector::new(vec![0.0; 1000]).unwrap();
        assert_eq!(total_loss(&zero, &mu).unwrap(), 245.0);
        assert!(total_loss(&MeanVector::new(vec![0.0]).unwrap(), &mu).is_err());
    }

    #[test]
    fn identity_on_noise_is_chi_square() {
        // 200 single-replication runs, each a χ²_n draw
        let n = 100;
        let draws: Vec<f64> = (0..200)
            .map(|seed| {
                let mut s = spec(n, Signal::PointMass { k: 0, u1: 0.0 }, 1, identity());
                s.seed = seed;
                run_experiment(&s).unwrap().entries[0].risk
            })
            .collect();
        let (m, _) = mean_and_se(&draws);
        let tol = 3.0 * (2.0 * n as f64).sqrt() / 200f64.sqrt();
        assert!((m - n as f64).abs() < tol, "{m}");
    }

    #[test]
    fn report_is_deterministic_across_thread_counts() {
        let s = ExperimentSpec {
            baseline: Some("oracle".into()),
            ..spec(
                2000,
                Signal::Uniform {
                    k: 200,
                    lo: -3.0,
                    hi: 3.0,
                },
                4,
                vec![
                    EstimatorEntry::new("eb", EstimatorKind::Shrinkage(ShrinkageSpec::with_v(1.15))),
                    EstimatorEntry::new("so", EstimatorKind::StrongOracle),
                    EstimatorEntry::new("oracle", EstimatorKind::SimpleOracle),
                ],
            )
        };
        let a = run_experiment(&s).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = single.install(|| run_experiment(&s).unwrap());
        let multi = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = multi.install(|| run_experiment(&s).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.entries.iter().all(|e| e.ratio.is_some()));
    }

    #[test]
    fn roster_changes_do_not_move_draws() {
        let base = spec(
            500,
            Signal::Uniform {
                k: 50,
                lo: -3.0,
                hi: 3.0,
            },
            3,
            identity(),
        );
        let mut more = base.clone();
        more.estimators
            .insert(0, EstimatorEntry::new("so", EstimatorKind::StrongOracle));
        let a = run_experiment(&base).unwrap();
        let b = run_experiment(&more).unwrap();
        assert_eq!(a.entries[0], b.entries[1]);
    }

    #[test]
    fn placement_of_nonzero_means_is_immaterial() {
        let s = spec(1000, Signal::PointMass { k: 50, u1: 4.0 }, 1, identity());
        let mu = generate_means(&s, 0).unwrap();
        let y = replication_observations(&s, &mu, 0);
        let cfg = ShrinkageSpec::with_v(1.15).resolve(1000).unwrap();
        let est = shrink(&y, &cfg).unwrap();
        // rotate coordinates so the signals sit at the end
        let rot = |v: &[f64]| -> Vec<f64> { v[500..].iter().chain(&v[..500]).copied().collect() };
        let mu_r = MeanVector::new(rot(mu.values())).unwrap();
        let y_r = ObservationVector::new(rot(y.values())).unwrap();
        let est_r = shrink(&y_r, &cfg).unwrap();
        assert_eq!(est_r.values(), rot(est.values()).as_slice());
        let (a, b) = (total_loss(&est_r, &mu_r).unwrap(), total_loss(&est, &mu).unwrap());
        assert!((a - b).abs() < 1e-12 * b);
        let so = strong_oracle_loss(&mu, &y).unwrap().loss;
        let so_r = strong_oracle_loss(&mu_r, &y_r).unwrap().loss;
        assert!((so - so_r).abs() < 1e-9 * so);
    }

    #[test]
    fn zero_baseline_has_no_ratio() {
        let mut s = spec(
            50,
            Signal::PointMass { k: 0, u1: 0.0 },
            2,
            vec![
                EstimatorEntry::new("identity", EstimatorKind::Identity),
                EstimatorEntry::new("oracle", EstimatorKind::SimpleOracle),
            ],
        );
        s.baseline = Some("oracle".into());
        let r = run_experiment(&s).unwrap();
        assert!(r.entries.iter().all(|e| e.ratio.is_none()));
        let curve = risk_ratio_curve(&s, &[50, 100]).unwrap();
        assert!(curve
            .iter()
            .all(|p| matches!(p.outcome, RatioOutcome::ZeroBaseline { .. })));
        assert!(risk_ratio_curve(&s, &[100, 50]).is_err());
    }

    #[test]
    fn rescaled_signal_keeps_proportion() {
        let s = Signal::Uniform {
            k: 1000,
            lo: -3.0,
            hi: 3.0,
        };
        assert_eq!(
            s.rescaled(1000, 10_000),
            Signal::Uniform {
                k: 10_000,
                lo: -3.0,
                hi: 3.0
            }
        );
        let p = Signal::PointMass { k: 5, u1: 7.0 };
        assert_eq!(p.rescaled(1000, 100), Signal::PointMass { k: 1, u1: 7.0 });
    }

    #[test]
    fn bayes_identity_at_monte_carlo_level() {
        // average of rule_risk(M, rule)/n over sampled M vs B(G, rule)
        let prior = DiscretePrior::new([(0.0, 0.7), (2.0, 0.3)]).unwrap();
        let q = QuadratureSpec::default();
        let rule = |y: f64| 0.6 * y;
        let exact = crate::oracles::prior_rule_risk(&prior, rule, &q).unwrap();
        let s = spec(200, Signal::SampledPrior { prior }, 400, identity());
        let per_rep: Vec<f64> = (0..400)
            .map(|rep| {
                let mu = generate_means(&s, rep).unwrap();
                rule_risk(&mu, rule, &q).unwrap() / 200.0
            })
            .collect();
        let (m, se) = mean_and_se(&per_rep);
        assert!((m - exact).abs() < 3.0 * se, "{m} ± {se} vs {exact}");
    }

    #[test]
    fn replication_error_carries_context() {
        let err = Error::Replication {
            rep: 3,
            estimator: "eb".into(),
            source: Box::new(Error::NumericFailure("boom".into())),
        };
        assert_eq!(err.category(), "numeric-failure");
        assert!(err.to_string().contains("replication 3"));
    }

    #[test]
    fn spec_json_schema() {
        let json = r#"{
            "n": 100,
            "signal": {"kind": "point_mass", "k": 0, "u1": 0.0},
            "replications": 5,
            "seed": 1,
            "estimators": [
                {"name": "identity", "kind": "identity"},
                {"name": "eb", "kind": "shrinkage", "v": 1.2, "variant": "hat",
                 "truncation": {"kind": "magnitude", "bound": 6.0}},
                {"name": "eb_default", "kind": "shrinkage"}
            ]
        }"#;
        let s: ExperimentSpec = serde_json::from_str(json).unwrap();
        s.validate().unwrap();
        assert_eq!(s.quadrature, QuadratureSpec::default());
        match &s.estimators[2].kind {
            EstimatorKind::Shrinkage(sh) => assert_eq!(*sh, ShrinkageSpec::default()),
            other => panic!("{other:?}"),
        }
        let back: ExperimentSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
