//! Confusion matrices and per-class / macro classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: row.len(),
            });
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion(
    y_true: &[usize],
    y_pred: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= num_classes {
                return Err(Error::LabelOutOfRange { label, num_classes });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F1 plus their unweighted means.
/// Any metric whose denominator is zero is defined as 0.
pub fn class_metrics(cm: &ConfusionMatrix) -> Result<ClassMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let k = cm.num_classes();
    let c = cm.counts();
    let mut precision = Vec::with_capacity(k);
    let mut recall = Vec::with_capacity(k);
    let mut f1 = Vec::with_capacity(k);
    for (i, row) in c.iter().enumerate() {
        let tp = row[i];
        let predicted: u64 = c.iter().map(|r| r[i]).sum();
        let actual: u64 = row.iter().sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        precision.push(p);
        recall.push(r);
        f1.push(if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / k as f64;
    Ok(ClassMetrics {
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        accuracy: ratio(cm.trace(), total),
        precision,
        recall,
        f1,
    })
}

pub fn evaluate(y_true: &[usize], y_pred: &[usize], num_classes: usize) -> Result<ClassMetrics> {
    class_metrics(&confusion(y_true, y_pred, num_classes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        let cm = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 1], vec![0, 1]]);
        assert_eq!(cm.total(), 3);
        assert_eq!(cm.trace(), 2);
        assert!(confusion(&[0, 3], &[0, 1], 2).is_err());
        assert!(confusion(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn half_and_half() {
        // class 0: TP=1, FP=1, FN=1
        let cm = ConfusionMatrix::from_counts(vec![vec![1, 1], vec![1, 0]]).unwrap();
        let m = class_metrics(&cm).unwrap();
        assert_eq!((m.precision[0], m.recall[0], m.f1[0]), (0.5, 0.5, 0.5));
        assert_eq!(m.f1[1], 0.0);
    }

    #[test]
    fn perfect_and_hand_computed() {
        let cm = ConfusionMatrix::from_counts(vec![vec![3, 0], vec![0, 4]]).unwrap();
        let m = class_metrics(&cm).unwrap();
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.accuracy, 1.0);

        let cm = ConfusionMatrix::from_counts(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let m = class_metrics(&cm).unwrap();
        let eps = 1e-15;
        assert!((m.precision[0] - 2.0 / 3.0).abs() < eps && (m.precision[1] - 0.5).abs() < eps);
        assert!((m.recall[0] - 2.0 / 3.0).abs() < eps && (m.recall[1] - 0.5).abs() < eps);
        assert!((m.f1[0] - 2.0 / 3.0).abs() < eps && (m.f1[1] - 0.5).abs() < eps);
        assert!((m.macro_f1 - 7.0 / 12.0).abs() < eps);
        assert!((m.accuracy - 0.6).abs() < eps);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let cm = ConfusionMatrix::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(class_metrics(&cm).is_err());
    }
}
