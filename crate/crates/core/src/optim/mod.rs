//! AdamW with decoupled weight decay and per-component learning-rate decay,
//! plus the epoch loop shared by cross-review and curriculum training.

mod adamw;
mod trainer;

pub use adamw::{
    adamw_step, adamw_step_rows, adamw_update, layer_lr_scales, ComponentScales, OptimConfig, OptimState, RowActivity,
};
pub use trainer::{prepare_examples, train, Example, TrainOutcome, Trainer};
