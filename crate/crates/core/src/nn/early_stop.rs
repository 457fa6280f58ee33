use super::mlp::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Patience-based early stopping on validation loss.
///
/// Any strict decrease of the loss counts as an improvement and snapshots
/// the model. Training stops once the number of consecutive non-improving
/// epochs exceeds `patience`; the best snapshot is then written back.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best_loss: f64,
    best_epoch: usize,
    since_improvement: usize,
    best_model: Option<Mlp>,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            since_improvement: 0,
            best_model: None,
        }
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn epochs_since_improvement(&self) -> usize {
        self.since_improvement
    }

    pub fn observe(&mut self, epoch: usize, validation_loss: f64, model: &mut Mlp) -> StopDecision {
        if validation_loss < self.best_loss {
            self.best_loss = validation_loss;
            self.best_epoch = epoch;
            self.since_improvement = 0;
            self.best_model = Some(model.clone());
            return StopDecision::Continue;
        }
        self.since_improvement += 1;
        if self.since_improvement > self.patience {
            self.restore_best(model);
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    /// Writes the best snapshot (if any) into `model`.
    pub fn restore_best(&self, model: &mut Mlp) {
        if let Some(best) = &self.best_model {
            model.clone_from(best);
        }
    }
}
