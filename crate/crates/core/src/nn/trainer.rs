use std::borrow::Cow;

use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::early_stop::{EarlyStopping, StopDecision};
use super::mlp::{argmax_rows, Mlp};
use super::optim::{cosine_lr, AdamW, AdamWConfig};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::losses::{cross_entropy, LossSpec};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Epoch budget; the cosine schedule spans exactly this many epochs.
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_widths: Vec<usize>,
    pub lr_max: f64,
    pub lr_min: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub patience: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        let adam = AdamWConfig::default();
        Self {
            epochs: 200,
            batch_size: 32,
            hidden_widths: vec![64],
            lr_max: 1e-3,
            lr_min: 0.0,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            weight_decay: adam.weight_decay,
            patience: 10,
        }
    }
}

impl TrainerConfig {
    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }

    /// Input width, hidden widths, output width.
    pub fn layer_widths(&self, input: usize, classes: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(&self.hidden_widths);
        w.push(classes);
        w
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(invalid("epochs and batch_size must be >= 1"));
        }
        if !(self.lr_max > 0.0) || self.lr_min < 0.0 || self.lr_min > self.lr_max {
            return Err(invalid(format!(
                "need 0 <= lr_min <= lr_max, lr_max > 0 (got {}, {})",
                self.lr_min, self.lr_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Per-class loss weights in force this epoch, when the loss has any.
    pub class_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
}

impl FitReport {
    pub fn epochs_trained(&self) -> usize {
        self.history.len()
    }
}

/// What an [`EpochHook`] sees after each epoch that did not trigger early
/// stopping.
pub struct EpochContext<'a> {
    pub epoch: usize,
    pub model: &'a Mlp,
    pub validation: &'a Dataset,
    pub validation_predictions: &'a [usize],
}

/// Called after every completed epoch; returning a dataset replaces the
/// training set used from the next epoch on.
pub trait EpochHook {
    fn after_epoch(&mut self, ctx: &EpochContext<'_>) -> Result<Option<Dataset>>;
}

/// Plain training.
pub struct NoHook;

impl EpochHook for NoHook {
    fn after_epoch(&mut self, _: &EpochContext<'_>) -> Result<Option<Dataset>> {
        Ok(None)
    }
}

impl<F> EpochHook for F
where
    F: FnMut(&EpochContext<'_>) -> Result<Option<Dataset>>,
{
    fn after_epoch(&mut self, ctx: &EpochContext<'_>) -> Result<Option<Dataset>> {
        self(ctx)
    }
}

/// Minibatch AdamW training with cosine-annealed learning rate and early
/// stopping on validation cross-entropy.
///
/// The training rows are reshuffled every epoch with `shuffle_rng`. When
/// training ends, by early stopping or by exhausting the budget, `model`
/// holds the parameters of the epoch with the lowest validation loss.
pub fn fit(
    model: &mut Mlp,
    train: &Dataset,
    validation: &Dataset,
    loss: &LossSpec,
    config: &TrainerConfig,
    shuffle_rng: &mut Rng,
    hook: &mut dyn EpochHook,
) -> Result<FitReport> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if validation.is_empty() {
        return Err(invalid("validation set is empty"));
    }
    if loss.class_weights_at(1).is_some() {
        if let Some(class) = train.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::MissingClass {
                class,
                part: "train",
            });
        }
    }

    let mut optimizer = AdamW::new(model, config.adamw());
    let mut early = EarlyStopping::new(config.patience);
    let mut current: Cow<'_, Dataset> = Cow::Borrowed(train);
    let mut history = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        let lr = cosine_lr(epoch - 1, config.epochs, config.lr_max, config.lr_min)?;
        let mut order: Vec<usize> = (0..current.len()).collect();
        order.shuffle(shuffle_rng);

        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let x = current.features().select(Axis(0), batch);
            let y: Vec<usize> = batch.iter().map(|&i| current.labels()[i]).collect();
            let (out, grads) = model.backward(x.view(), &y, loss, epoch)?;
            if !out.mean.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            loss_sum += out.mean * batch.len() as f64;
            optimizer.step(model, &grads, lr)?;
        }
        let train_loss = loss_sum / current.len() as f64;

        let logits = model.forward(validation.features().view())?;
        let val_loss = cross_entropy(logits.view(), validation.labels(), None)?.mean;
        let predictions = argmax_rows(&logits);
        history.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_loss,
            class_weights: loss.class_weights_at(epoch),
        });

        if early.observe(epoch, val_loss, model) == StopDecision::Stop {
            stopped_early = true;
            break;
        }
        let ctx = EpochContext {
            epoch,
            model: &*model,
            validation,
            validation_predictions: &predictions,
        };
        if let Some(next) = hook.after_epoch(&ctx)? {
            if next.is_empty() {
                return Err(Error::EmptyDataset);
            }
            current = Cow::Owned(next);
        }
    }
    if !stopped_early {
        early.restore_best(model);
    }
    Ok(FitReport {
        history,
        best_epoch: early.best_epoch(),
        best_validation_loss: early.best_loss(),
        stopped_early,
    })
}
