//! Classification losses over raw logits.
//!
//! Every loss returns its mean value, the per-sample values and the gradient
//! of the mean with respect to the logits; the network backpropagates from
//! there. Weighted means are normalized by the sum of the weights of the
//! samples involved, so a uniform weight vector reproduces the plain loss.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::ClassPrior;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub mean: f64,
    pub per_sample: Vec<f64>,
    /// d(mean)/d(logits), same shape as the logits.
    pub grad: Array2<f64>,
}

/// The loss a training run minimizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    CrossEntropy,
    CostSensitive {
        class_weights: Vec<f64>,
    },
    Focal {
        gamma: f64,
        class_weights: Option<Vec<f64>>,
    },
    Ohem {
        fraction: f64,
    },
    /// Margin loss with deferred re-weighting: unweighted before
    /// `drw_start_epoch`, `drw_weights` from then on.
    LdamDrw {
        margins: Vec<f64>,
        drw_start_epoch: usize,
        drw_weights: Vec<f64>,
    },
}

impl LossSpec {
    pub fn cost_sensitive(priors: &ClassPrior) -> Result<Self> {
        Ok(Self::CostSensitive {
            class_weights: cost_sensitive_weights(priors)?,
        })
    }

    pub fn focal(gamma: f64, class_weights: Option<Vec<f64>>) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(invalid(format!("focal gamma must be >= 0, got {gamma}")));
        }
        if let Some(w) = &class_weights {
            check_weights(w)?;
        }
        Ok(Self::Focal {
            gamma,
            class_weights,
        })
    }

    pub fn ohem(fraction: f64) -> Result<Self> {
        check_fraction(fraction)?;
        Ok(Self::Ohem { fraction })
    }

    pub fn ldam_drw(
        class_counts: &[usize],
        max_margin: f64,
        drw_start_epoch: usize,
        priors: &ClassPrior,
    ) -> Result<Self> {
        Ok(Self::LdamDrw {
            margins: ldam_margins(class_counts, max_margin)?,
            drw_start_epoch,
            drw_weights: cost_sensitive_weights(priors)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CrossEntropy => "cross_entropy",
            Self::CostSensitive { .. } => "cost_sensitive",
            Self::Focal { .. } => "focal",
            Self::Ohem { .. } => "ohem",
            Self::LdamDrw { .. } => "ldam_drw",
        }
    }

    /// Per-class weights in force at `epoch` (1-based), if the loss has any.
    pub fn class_weights_at(&self, epoch: usize) -> Option<Vec<f64>> {
        match self {
            Self::CrossEntropy | Self::Ohem { .. } => None,
            Self::CostSensitive { class_weights } => Some(class_weights.clone()),
            Self::Focal { class_weights, .. } => class_weights.clone(),
            Self::LdamDrw {
                drw_start_epoch,
                drw_weights,
                ..
            } => Some(drw_schedule(epoch, *drw_start_epoch, drw_weights)),
        }
    }

    pub fn evaluate(
        &self,
        logits: ArrayView2<f64>,
        labels: &[usize],
        epoch: usize,
    ) -> Result<LossOutput> {
        match self {
            Self::CrossEntropy => cross_entropy(logits, labels, None),
            Self::CostSensitive { class_weights } => {
                cross_entropy(logits, labels, Some(class_weights))
            }
            Self::Focal {
                gamma,
                class_weights,
            } => focal_loss(logits, labels, *gamma, class_weights.as_deref()),
            Self::Ohem { fraction } => ohem_loss(logits, labels, *fraction),
            Self::LdamDrw {
                margins,
                drw_start_epoch,
                drw_weights,
            } => {
                let w = drw_schedule(epoch, *drw_start_epoch, drw_weights);
                ldam_loss(logits, labels, margins, Some(&w))
            }
        }
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    match w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        Some(bad) => Err(invalid(format!(
            "class weights must be positive, got {bad}"
        ))),
        None => Ok(()),
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "fraction must lie in (0,1], got {fraction}"
        )))
    }
}

fn check_labels(logits: &ArrayView2<f64>, labels: &[usize]) -> Result<()> {
    if logits.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.nrows(),
            actual: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = logits.ncols();
    match labels.iter().find(|&&y| y >= k) {
        Some(&label) => Err(Error::LabelOutOfRange {
            label,
            num_classes: k,
        }),
        None => Ok(()),
    }
}

/// Row-wise log-softmax, shifted by the row maximum for stability.
pub fn log_softmax_rows(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

pub fn softmax_rows(logits: ArrayView2<f64>) -> Array2<f64> {
    log_softmax_rows(logits).mapv(f64::exp)
}

/// Weighted softmax cross-entropy; see the module docs for the normalization.
pub fn cross_entropy(
    logits: ArrayView2<f64>,
    labels: &[usize],
    class_weights: Option<&[f64]>,
) -> Result<LossOutput> {
    focal_loss(logits, labels, 0.0, class_weights)
}

/// `-w_y (1 - p_y)^gamma log p_y`; gamma = 0 is cross-entropy.
pub fn focal_loss(
    logits: ArrayView2<f64>,
    labels: &[usize],
    gamma: f64,
    class_weights: Option<&[f64]>,
) -> Result<LossOutput> {
    check_labels(&logits, labels)?;
    if !(gamma >= 0.0) {
        return Err(invalid(format!("focal gamma must be >= 0, got {gamma}")));
    }
    let k = logits.ncols();
    if let Some(w) = class_weights {
        if w.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: w.len(),
            });
        }
        check_weights(w)?;
    }
    let weight = |y: usize| class_weights.map_or(1.0, |w| w[y]);
    let log_p = log_softmax_rows(logits);
    let total_weight: f64 = labels.iter().map(|&y| weight(y)).sum();

    let mut per_sample = Vec::with_capacity(labels.len());
    let mut grad = Array2::zeros(logits.raw_dim());
    for (n, &y) in labels.iter().enumerate() {
        let lp = log_p.row(n);
        let w = weight(y);
        let lpy = lp[y];
        let py = lpy.exp();
        // 1 - p_y summed from the other classes keeps precision near p_y = 1
        let q: f64 = (0..k).filter(|&j| j != y).map(|j| lp[j].exp()).sum();
        let (mod_factor, coef) = if gamma == 0.0 {
            (1.0, -1.0)
        } else {
            let qg = q.powf(gamma);
            let extra = if q > 0.0 {
                gamma * q.powf(gamma - 1.0) * py * lpy
            } else {
                0.0
            };
            (qg, extra - qg)
        };
        per_sample.push(-w * mod_factor * lpy);
        // d l / d z_j = w * coef * (delta_jy - p_j)
        let scale = w * coef / total_weight;
        let mut g = grad.row_mut(n);
        for j in 0..k {
            let delta = if j == y { 1.0 } else { 0.0 };
            g[j] = scale * (delta - lp[j].exp());
        }
    }
    let mean = per_sample.iter().sum::<f64>() / total_weight;
    Ok(LossOutput {
        mean,
        per_sample,
        grad,
    })
}

/// Inverse-frequency weights `1 / (K * prior_i)`; their prior-weighted mean is 1.
pub fn cost_sensitive_weights(priors: &ClassPrior) -> Result<Vec<f64>> {
    let k = priors.probs.len() as f64;
    priors
        .probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p > 0.0 {
                Ok(1.0 / (k * p))
            } else {
                Err(invalid(format!("class {i} has zero prior")))
            }
        })
        .collect()
}

/// Indices of the `ceil(fraction * n)` largest losses, ties to the lower index.
/// The result is sorted ascending.
pub fn ohem_select(per_sample_losses: &[f64], fraction: f64) -> Result<Vec<usize>> {
    check_fraction(fraction)?;
    let n = per_sample_losses.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let keep = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        per_sample_losses[b]
            .total_cmp(&per_sample_losses[a])
            .then(a.cmp(&b))
    });
    order.truncate(keep);
    order.sort_unstable();
    Ok(order)
}

/// Cross-entropy averaged over the hardest `fraction` of the batch only.
pub fn ohem_loss(logits: ArrayView2<f64>, labels: &[usize], fraction: f64) -> Result<LossOutput> {
    let full = cross_entropy(logits, labels, None)?;
    let selected = ohem_select(&full.per_sample, fraction)?;
    let n = labels.len() as f64;
    let m = selected.len() as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    for &i in &selected {
        // undo the 1/n of the full mean, apply 1/m
        grad.row_mut(i).assign(&(&full.grad.row(i) * (n / m)));
    }
    let mean = selected.iter().map(|&i| full.per_sample[i]).sum::<f64>() / m;
    Ok(LossOutput {
        mean,
        per_sample: full.per_sample,
        grad,
    })
}

/// Per-class margins `C / n_i^(1/4)`, with `C` set so the largest margin
/// equals `max_margin`.
pub fn ldam_margins(class_counts: &[usize], max_margin: f64) -> Result<Vec<f64>> {
    if !(max_margin > 0.0) {
        return Err(invalid(format!("max_margin must be > 0, got {max_margin}")));
    }
    if let Some(i) = class_counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class: i });
    }
    let raw: Vec<f64> = class_counts
        .iter()
        .map(|&c| 1.0 / (c as f64).powf(0.25))
        .collect();
    let largest = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(raw.iter().map(|r| r * max_margin / largest).collect())
}

/// Cross-entropy after subtracting the true class's margin from its logit.
pub fn ldam_loss(
    logits: ArrayView2<f64>,
    labels: &[usize],
    margins: &[f64],
    class_weights: Option<&[f64]>,
) -> Result<LossOutput> {
    check_labels(&logits, labels)?;
    if margins.len() != logits.ncols() {
        return Err(Error::DimensionMismatch {
            expected: logits.ncols(),
            actual: margins.len(),
        });
    }
    let mut shifted = logits.to_owned();
    for (n, &y) in labels.iter().enumerate() {
        shifted[[n, y]] -= margins[y];
    }
    cross_entropy(shifted.view(), labels, class_weights)
}

/// All-ones before `drw_start_epoch`, the supplied weights from then on.
pub fn drw_schedule(epoch: usize, drw_start_epoch: usize, weights: &[f64]) -> Vec<f64> {
    if epoch < drw_start_epoch {
        vec![1.0; weights.len()]
    } else {
        weights.to_vec()
    }
}

/// Deferred re-weighting with inverse-frequency weights from `priors`.
pub fn drw_weights(epoch: usize, drw_start_epoch: usize, priors: &ClassPrior) -> Result<Vec<f64>> {
    if epoch == 0 {
        return Err(invalid("epochs are counted from 1"));
    }
    Ok(drw_schedule(
        epoch,
        drw_start_epoch,
        &cost_sensitive_weights(priors)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_logits_give_ln2() {
        let z = Array2::zeros((3, 2));
        let out = cross_entropy(z.view(), &[0, 1, 1], None).unwrap();
        for l in &out.per_sample {
            assert!(close(*l, std::f64::consts::LN_2, 1e-15));
        }
        assert!(close(out.mean, std::f64::consts::LN_2, 1e-15));
    }

    #[test]
    fn unit_weights_equal_plain_ce() {
        let z = array![[0.3, -1.2, 2.0], [1.0, 0.5, -0.5]];
        let a = cross_entropy(z.view(), &[2, 0], None).unwrap();
        let b = cross_entropy(z.view(), &[2, 0], Some(&[1.0, 1.0, 1.0])).unwrap();
        assert!(close(a.mean, b.mean, 1e-15));
        assert_eq!(a.grad, b.grad);
    }

    #[test]
    fn inverse_frequency_weighted_mean() {
        // labels [0,0,1]: w_i = N / (K n_i) = 3/4, 3/2; per-sample weights scale
        // by 2 to [1.5, 1.5, 3] with the same normalized mean.
        let z = array![[0.2, -0.1], [1.0, 0.0], [0.5, 0.4]];
        let labels = [0, 0, 1];
        let w = [0.75, 1.5];
        let out = cross_entropy(z.view(), &labels, Some(&w)).unwrap();
        let lp = log_softmax_rows(z.view());
        let raw = [-lp[[0, 0]], -lp[[1, 0]], -lp[[2, 1]]];
        let expected = (1.5 * raw[0] + 1.5 * raw[1] + 3.0 * raw[2]) / 6.0;
        assert!(close(out.mean, expected, 1e-14));
        assert!(cross_entropy(z.view(), &labels, Some(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn ce_gradient_closed_form() {
        let z = array![[0.7, -0.3, 1.1]];
        let out = cross_entropy(z.view(), &[1], None).unwrap();
        let p = softmax_rows(z.view());
        for j in 0..3 {
            let expected = p[[0, j]] - if j == 1 { 1.0 } else { 0.0 };
            assert!(close(out.grad[[0, j]], expected, 1e-15));
        }
    }

    #[test]
    fn cost_sensitive_examples() {
        let w = cost_sensitive_weights(&ClassPrior {
            probs: vec![0.5, 0.5],
        })
        .unwrap();
        assert_eq!(w, vec![1.0, 1.0]);
        let w = cost_sensitive_weights(&ClassPrior {
            probs: vec![0.75, 0.25],
        })
        .unwrap();
        assert!(close(w[0], 2.0 / 3.0, 1e-15) && close(w[1], 2.0, 1e-15));
        let w = cost_sensitive_weights(&ClassPrior {
            probs: vec![0.651, 0.349],
        })
        .unwrap();
        assert!(close(w[0], 0.768, 5e-4) && close(w[1], 1.433, 5e-4));
        assert!(cost_sensitive_weights(&ClassPrior {
            probs: vec![1.0, 0.0]
        })
        .is_err());
    }

    #[test]
    fn focal_examples() {
        let z = array![[0.3, -0.7], [2.0, 1.0]];
        let ce = cross_entropy(z.view(), &[1, 0], None).unwrap();
        let fl = focal_loss(z.view(), &[1, 0], 0.0, None).unwrap();
        assert_eq!(ce.mean, fl.mean);

        // p_y = 0.5 with gamma 2: 0.25 * ln 2
        let z = array![[0.0, 0.0]];
        let fl = focal_loss(z.view(), &[0], 2.0, None).unwrap();
        assert!(close(fl.mean, 0.25 * std::f64::consts::LN_2, 1e-15));
        assert!(close(fl.mean, 0.17329, 1e-5));

        let z = array![[60.0, -60.0]];
        let fl = focal_loss(z.view(), &[0], 2.0, None).unwrap();
        assert!(fl.mean < 1e-40);
        assert!(fl.grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn ohem_examples() {
        assert_eq!(ohem_select(&[3.0, 1.0, 2.0], 1.0).unwrap(), vec![0, 1, 2]);
        assert_eq!(ohem_select(&[3.0, 1.0, 2.0], 1.0 / 3.0).unwrap(), vec![0]);
        assert_eq!(
            ohem_select(&[2.0, 2.0, 1.0], 2.0 / 3.0).unwrap(),
            vec![0, 1]
        );
        assert!(ohem_select(&[], 0.5).is_err());
        assert!(ohem_select(&[1.0], 0.0).is_err());

        let z = array![[0.3, -0.7], [2.0, 1.0], [-1.0, 1.0]];
        let a = ohem_loss(z.view(), &[1, 0, 0], 1.0).unwrap();
        let b = cross_entropy(z.view(), &[1, 0, 0], None).unwrap();
        assert!(close(a.mean, b.mean, 1e-15));
        for (x, y) in a.grad.iter().zip(b.grad.iter()) {
            assert!(close(*x, *y, 1e-15));
        }
    }

    #[test]
    fn ldam_margin_examples() {
        let m = ldam_margins(&[50, 50, 50], 0.5).unwrap();
        assert!(m.iter().all(|&v| close(v, 0.5, 1e-15)));

        let m = ldam_margins(&[100, 1], 0.5).unwrap();
        assert!(close(m[1], 0.5, 1e-15));
        assert!(close(m[0], 0.5 / 100f64.powf(0.25), 1e-15));
        assert!(close(m[0], 0.158, 5e-4));

        let doubled = ldam_margins(&[100, 1], 1.0).unwrap();
        assert!(close(doubled[0], 2.0 * m[0], 1e-15));
        assert!(ldam_margins(&[3, 0], 0.5).is_err());
        assert!(ldam_margins(&[3, 1], 0.0).is_err());
    }

    #[test]
    fn drw_examples() {
        let priors = ClassPrior {
            probs: vec![0.75, 0.25],
        };
        assert_eq!(drw_weights(1, 10, &priors).unwrap(), vec![1.0, 1.0]);
        let w = drw_weights(10, 10, &priors).unwrap();
        assert!(close(w[0], 2.0 / 3.0, 1e-15) && close(w[1], 2.0, 1e-15));
        assert!(drw_weights(0, 10, &priors).is_err());

        let spec = LossSpec::ldam_drw(&[75, 25], 0.5, 3, &priors).unwrap();
        let history: Vec<_> = (1..=5).map(|e| spec.class_weights_at(e).unwrap()).collect();
        assert_eq!(history[0], history[1]);
        assert_ne!(history[1], history[2]);
        assert_eq!(history[2], history[4]);
    }

    #[test]
    fn label_checks() {
        let z = Array2::zeros((2, 2));
        assert!(matches!(
            cross_entropy(z.view(), &[0, 2], None),
            Err(Error::LabelOutOfRange { label: 2, .. })
        ));
    }
}
