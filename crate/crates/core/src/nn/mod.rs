//! Feed-forward classifier, optimizer and training loop.

mod early_stop;
mod mlp;
mod optim;
mod trainer;

pub use early_stop::{EarlyStopping, StopDecision};
pub use mlp::{argmax_rows, Gradients, Mlp};
pub use optim::{cosine_lr, AdamW, AdamWConfig};
pub use trainer::{fit, EpochContext, EpochHook, EpochRecord, FitReport, NoHook, TrainerConfig};
