//! Dataset-level resampling: random over/under-sampling, SMOTE, MSMOTE,
//! NearMiss, and rebuilding a training set to match a class distribution.

mod nearmiss;
mod smote;

pub use nearmiss::{nearmiss, NearMissVersion};
pub use smote::{interpolate, msmote, msmote_categories, smote, MsmoteCategory};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{largest_remainder, Dataset};
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;

/// Per-class row counts a resampler should produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub target_counts: Vec<usize>,
}

impl ResamplePlan {
    pub fn new(target_counts: Vec<usize>) -> Result<Self> {
        if target_counts.iter().sum::<usize>() == 0 {
            return Err(invalid("resample plan has no rows"));
        }
        Ok(Self { target_counts })
    }

    /// Every non-empty class grown to the largest class count.
    pub fn balance_to_majority(counts: &[usize]) -> Result<Self> {
        let max = counts.iter().copied().max().unwrap_or(0);
        Self::new(
            counts
                .iter()
                .map(|&c| if c > 0 { max } else { 0 })
                .collect(),
        )
    }

    /// Every non-empty class shrunk to the smallest non-empty class count.
    pub fn balance_to_minority(counts: &[usize]) -> Result<Self> {
        let min = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
        Self::new(
            counts
                .iter()
                .map(|&c| if c > 0 { min } else { 0 })
                .collect(),
        )
    }

    pub(crate) fn check_against(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let counts = ds.class_counts();
        if self.target_counts.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: counts.len(),
                actual: self.target_counts.len(),
            });
        }
        for (class, (&t, &c)) in self.target_counts.iter().zip(&counts).enumerate() {
            if t > 0 && c == 0 {
                return Err(Error::EmptyClass { class });
            }
            if t == 0 && c > 0 {
                return Err(invalid(format!(
                    "plan removes class {class} entirely ({c} source rows)"
                )));
            }
        }
        Ok(counts)
    }
}

/// `rows` plus `target - rows.len()` draws with replacement.
pub(crate) fn grow_rows(rows: &[usize], target: usize, rng: &mut Rng) -> Vec<usize> {
    let mut out = rows.to_vec();
    while out.len() < target {
        out.push(rows[rng.gen_range(0..rows.len())]);
    }
    out
}

/// `target` rows drawn without replacement.
pub(crate) fn shrink_rows(rows: &[usize], target: usize, rng: &mut Rng) -> Vec<usize> {
    let mut out = rows.to_vec();
    out.shuffle(rng);
    out.truncate(target);
    out
}

fn select_shuffled(ds: &Dataset, mut rows: Vec<usize>, rng: &mut Rng) -> Dataset {
    rows.shuffle(rng);
    ds.select(&rows)
}

/// Random oversampling: classes below their target gain duplicated rows
/// drawn with replacement; all source rows are kept. Classes whose target is
/// below their count pass through unchanged.
pub fn ros(ds: &Dataset, plan: &ResamplePlan, rng: &mut Rng) -> Result<Dataset> {
    plan.check_against(ds)?;
    let mut rows = Vec::new();
    for (group, &target) in ds.class_indices().iter().zip(&plan.target_counts) {
        if target > group.len() {
            rows.extend(grow_rows(group, target, rng));
        } else {
            rows.extend_from_slice(group);
        }
    }
    Ok(select_shuffled(ds, rows, rng))
}

/// Random undersampling without replacement.
pub fn rus(ds: &Dataset, plan: &ResamplePlan, rng: &mut Rng) -> Result<Dataset> {
    let counts = plan.check_against(ds)?;
    for (class, (&t, &c)) in plan.target_counts.iter().zip(&counts).enumerate() {
        if t > c {
            return Err(invalid(format!(
                "undersampling target {t} exceeds {c} rows of class {class}"
            )));
        }
    }
    let mut rows = Vec::new();
    for (group, &target) in ds.class_indices().iter().zip(&plan.target_counts) {
        rows.extend(shrink_rows(group, target, rng));
    }
    Ok(select_shuffled(ds, rows, rng))
}

/// Per-class counts for a training set of `total` rows drawn according to
/// `probs`: largest-remainder rounding of `total * p_i`, with every class of
/// positive probability given at least one row.
pub fn distribution_counts(probs: &[f64], total: usize) -> Result<Vec<usize>> {
    if probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(invalid(format!("probabilities must be >= 0: {probs:?}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("probabilities sum to {sum}, not 1")));
    }
    let positive = probs.iter().filter(|&&p| p > 0.0).count();
    if total < positive {
        return Err(invalid(format!(
            "cannot give {positive} classes a row each out of {total}"
        )));
    }
    let mut counts = largest_remainder(total, probs);
    for (c, &p) in counts.iter_mut().zip(probs) {
        if p > 0.0 && *c == 0 {
            *c = 1;
        }
    }
    // pay for the floor from the largest classes
    while counts.iter().sum::<usize>() > total {
        let largest = (0..counts.len())
            .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
            .unwrap();
        counts[largest] -= 1;
    }
    Ok(counts)
}

/// Rebuilds a dataset of exactly `total` rows whose class counts follow
/// `probs` (see [`distribution_counts`]). Classes above their target are
/// undersampled, classes below it oversampled by duplication.
pub fn resample_to_distribution(
    ds: &Dataset,
    probs: &[f64],
    total: usize,
    rng: &mut Rng,
) -> Result<Dataset> {
    if probs.len() != ds.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: ds.num_classes(),
            actual: probs.len(),
        });
    }
    let targets = distribution_counts(probs, total)?;
    let groups = ds.class_indices();
    let mut rows = Vec::with_capacity(total);
    for (class, (group, &target)) in groups.iter().zip(&targets).enumerate() {
        if target > 0 && group.is_empty() {
            return Err(Error::EmptyClass { class });
        }
        if target >= group.len() {
            rows.extend(grow_rows(group, target, rng));
        } else {
            rows.extend(shrink_rows(group, target, rng));
        }
    }
    Ok(select_shuffled(ds, rows, rng))
}
