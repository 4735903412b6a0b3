//! Relation classifier: hashed token embeddings, one graph-attention layer
//! over the marked dependency graph and a bilinear label scorer.
//!
//! An entity is represented as `[anchor embedding ‖ mean GAT output over the
//! entity's own tokens]`, where the anchor is the entity's opening marker.
//! Label scores are
//!
//! ```text
//! score_r = e_s · M_r · e_o + lin_r · [e_s ‖ e_o] + b_r
//! ```
//!
//! Gradients are computed analytically; see `forward.rs`.

mod checkpoint;
mod config;
mod forward;
mod params;

pub use checkpoint::{Checkpoint, TensorRecord};
pub use config::ModelConfig;
pub use forward::{
    argmax, forward, forward_with_masks, loss_and_backward, loss_and_backward_into, predict, DropoutMasks,
    ForwardTrace, ModelInput,
};
pub use params::{init_params, Component, Layout, ModelParameters};
