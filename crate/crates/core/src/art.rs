//! Adaptive resampling-based training.
//!
//! Every `boost_frequency` epochs the per-class validation F1 scores are
//! turned into difficulty weights, blended with the empirical class priors,
//! and the training set is rebuilt from the original pool so that its class
//! counts follow the blended distribution. The total size never changes.

use serde::{Deserialize, Serialize};

use crate::data::{class_priors, ClassPrior, Dataset};
use crate::error::{invalid, Error, Result};
use crate::losses::LossSpec;
use crate::metrics::evaluate;
use crate::nn::{fit, EpochContext, EpochHook, FitReport, Mlp, TrainerConfig};
use crate::resample::{distribution_counts, resample_to_distribution};
use crate::rng::Rng;

const SIMPLEX_TOL: f64 = 1e-12;

fn check_simplex(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() || probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(invalid(format!("{what} must be non-negative: {probs:?}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// `s_i = 1 - f_i`.
pub fn difficulty_scores(f1_per_class: &[f64]) -> Result<Vec<f64>> {
    if let Some(f) = f1_per_class.iter().find(|&&f| !(0.0..=1.0).contains(&f)) {
        return Err(invalid(format!("F1 score {f} outside [0, 1]")));
    }
    Ok(f1_per_class.iter().map(|f| 1.0 - f).collect())
}

/// `w_i = s_i / sum(s)`; uniform when every class is solved perfectly.
pub fn normalize_weights(difficulty: &[f64]) -> Result<Vec<f64>> {
    if difficulty.is_empty() {
        return Err(invalid("no classes"));
    }
    if let Some(s) = difficulty.iter().find(|&&s| !(s >= 0.0)) {
        return Err(invalid(format!("difficulty {s} is negative")));
    }
    let sum: f64 = difficulty.iter().sum();
    let k = difficulty.len() as f64;
    if sum == 0.0 {
        return Ok(vec![1.0 / k; difficulty.len()]);
    }
    Ok(difficulty.iter().map(|s| s / sum).collect())
}

/// Per-class F1, difficulty and normalized weight at one boost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveWeights {
    pub f1_per_class: Vec<f64>,
    pub difficulty: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AdaptiveWeights {
    pub fn from_f1(f1_per_class: &[f64]) -> Result<Self> {
        let difficulty = difficulty_scores(f1_per_class)?;
        let weights = normalize_weights(&difficulty)?;
        Ok(Self {
            f1_per_class: f1_per_class.to_vec(),
            difficulty,
            weights,
        })
    }
}

/// Class sampling probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    probs: Vec<f64>,
}

impl SamplingDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs, "sampling distribution")?;
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("no classes"));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Total deviation from summing to one.
    pub fn simplex_error(&self) -> f64 {
        (self.probs.iter().sum::<f64>() - 1.0).abs()
    }
}

/// `p = c * priors + (1 - c) * weights`.
pub fn blend(priors: &ClassPrior, weights: &[f64], c: f64) -> Result<SamplingDistribution> {
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid(format!("blending constant {c} outside [0, 1]")));
    }
    if priors.probs.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: priors.probs.len(),
            actual: weights.len(),
        });
    }
    check_simplex(&priors.probs, "priors")?;
    check_simplex(weights, "weights")?;
    let mut probs: Vec<f64> = priors
        .probs
        .iter()
        .zip(weights)
        .map(|(pi, w)| c * pi + (1.0 - c) * w)
        .collect();
    // absorb accumulated rounding so the result sums to one
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(SamplingDistribution { probs })
}

/// The distribution before any boost: priors blended with uniform weights.
pub fn initial_distribution(priors: &ClassPrior, c: f64) -> Result<SamplingDistribution> {
    let k = priors.probs.len();
    if k == 0 {
        return Err(invalid("no classes"));
    }
    blend(priors, &vec![1.0 / k as f64; k], c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtConfig {
    pub blending_constant: f64,
    pub boost_frequency: usize,
}

impl Default for ArtConfig {
    fn default() -> Self {
        Self {
            blending_constant: 0.5,
            boost_frequency: 1,
        }
    }
}

impl ArtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.blending_constant) {
            return Err(invalid(format!(
                "blending_constant {} outside [0, 1]",
                self.blending_constant
            )));
        }
        if self.boost_frequency == 0 {
            return Err(invalid("boost_frequency must be >= 1"));
        }
        Ok(())
    }
}

/// One sampling-distribution update. The initial distribution is recorded
/// at epoch 0 with no scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRecord {
    pub epoch: usize,
    pub adaptive: Option<AdaptiveWeights>,
    pub distribution: SamplingDistribution,
    pub target_counts: Vec<usize>,
}

/// Epoch hook that rebuilds the training set at every boost.
pub struct ArtHook<'a> {
    pool: &'a Dataset,
    priors: ClassPrior,
    config: ArtConfig,
    total: usize,
    rng: &'a mut Rng,
    history: Vec<BoostRecord>,
}

impl<'a> ArtHook<'a> {
    /// Returns the hook and the initial training set.
    pub fn new(pool: &'a Dataset, config: &ArtConfig, rng: &'a mut Rng) -> Result<(Self, Dataset)> {
        config.validate()?;
        if let Some(class) = pool.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::MissingClass {
                class,
                part: "train",
            });
        }
        let priors = class_priors(pool)?;
        let total = pool.len();
        let p0 = initial_distribution(&priors, config.blending_constant)?;
        let counts = distribution_counts(p0.probs(), total)?;
        let initial = resample_to_distribution(pool, p0.probs(), total, rng)?;
        let hook = Self {
            pool,
            priors,
            config: config.clone(),
            total,
            rng,
            history: vec![BoostRecord {
                epoch: 0,
                adaptive: None,
                distribution: p0,
                target_counts: counts,
            }],
        };
        Ok((hook, initial))
    }

    pub fn history(&self) -> &[BoostRecord] {
        &self.history
    }

    pub fn into_history(self) -> Vec<BoostRecord> {
        self.history
    }
}

impl EpochHook for ArtHook<'_> {
    fn after_epoch(&mut self, ctx: &EpochContext<'_>) -> Result<Option<Dataset>> {
        if !ctx.epoch.is_multiple_of(self.config.boost_frequency) {
            return Ok(None);
        }
        let k = self.pool.num_classes();
        let labels = ctx.validation.labels();
        if let Some(class) = ctx.validation.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::MissingClass {
                class,
                part: "validation",
            });
        }
        let f1 = evaluate(labels, ctx.validation_predictions, k)?.f1;
        let adaptive = AdaptiveWeights::from_f1(&f1)?;
        let p = blend(
            &self.priors,
            &adaptive.weights,
            self.config.blending_constant,
        )?;
        let counts = distribution_counts(p.probs(), self.total)?;
        let next = resample_to_distribution(self.pool, p.probs(), self.total, self.rng)?;
        self.history.push(BoostRecord {
            epoch: ctx.epoch,
            adaptive: Some(adaptive),
            distribution: p,
            target_counts: counts,
        });
        Ok(Some(next))
    }
}

#[derive(Debug, Clone)]
pub struct ArtReport {
    pub fit: FitReport,
    pub boosts: Vec<BoostRecord>,
}

/// Trains `model` with adaptive resampling. Training starts on the initial
/// blended resample of `train`; all rebuilds draw from `train` itself.
/// The training loss is plain cross-entropy.
pub fn art_fit(
    model: &mut Mlp,
    train: &Dataset,
    validation: &Dataset,
    art: &ArtConfig,
    trainer: &TrainerConfig,
    resample_rng: &mut Rng,
    shuffle_rng: &mut Rng,
) -> Result<ArtReport> {
    let (mut hook, initial) = ArtHook::new(train, art, resample_rng)?;
    let fit = fit(
        model,
        &initial,
        validation,
        &LossSpec::CrossEntropy,
        trainer,
        shuffle_rng,
        &mut hook,
    )?;
    Ok(ArtReport {
        fit,
        boosts: hook.into_history(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior(p: &[f64]) -> ClassPrior {
        ClassPrior { probs: p.to_vec() }
    }

    #[test]
    fn difficulty_examples() {
        assert_eq!(difficulty_scores(&[1.0, 0.5]).unwrap(), vec![0.0, 0.5]);
        assert_eq!(difficulty_scores(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(difficulty_scores(&[0.0, 0.0, 0.0]).unwrap(), vec![1.0; 3]);
        assert!(difficulty_scores(&[1.2]).is_err());
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_weights(&[0.0, 0.5]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(normalize_weights(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let w = normalize_weights(&[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in w.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(normalize_weights(&[-0.1, 1.0]).is_err());
    }

    #[test]
    fn blend_examples() {
        let pi = prior(&[0.75, 0.25]);
        assert_eq!(blend(&pi, &[0.0, 1.0], 1.0).unwrap().probs(), &[0.75, 0.25]);
        assert_eq!(blend(&pi, &[0.0, 1.0], 0.0).unwrap().probs(), &[0.0, 1.0]);
        assert_eq!(
            blend(&pi, &[0.0, 1.0], 0.5).unwrap().probs(),
            &[0.375, 0.625]
        );
        assert!(blend(&pi, &[0.0, 1.0], 1.5).is_err());
    }

    #[test]
    fn initial_distribution_examples() {
        let p = initial_distribution(&prior(&[0.1, 0.2, 0.3, 0.4]), 0.0).unwrap();
        assert_eq!(p.probs(), &[0.25; 4]);
        let p = initial_distribution(&prior(&[0.651, 0.349]), 1.0).unwrap();
        assert_eq!(p.probs(), &[0.651, 0.349]);
        let p = initial_distribution(&prior(&[0.651, 0.349]), 0.5).unwrap();
        // 0.5 * 0.651 + 0.5 * 0.5, 0.5 * 0.349 + 0.5 * 0.5
        assert!((p.probs()[0] - 0.5755).abs() < 1e-12);
        assert!((p.probs()[1] - 0.4245).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(ArtConfig::default().validate().is_ok());
        let bad = ArtConfig {
            blending_constant: -0.1,
            ..ArtConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ArtConfig {
            boost_frequency: 0,
            ..ArtConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
