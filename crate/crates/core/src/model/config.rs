use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub gat_dim: usize,
    pub leaky_relu_slope: f64,
    pub dropout_rate: f64,
    pub vocab_hash_buckets: usize,
    pub num_labels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            gat_dim: 32,
            leaky_relu_slope: 0.2,
            dropout_rate: 0.1,
            vocab_hash_buckets: 8192,
            num_labels: 2,
        }
    }
}

impl ModelConfig {
    pub fn with_labels(num_labels: usize) -> Self {
        Self { num_labels, ..Self::default() }
    }

    /// Width of one entity representation.
    pub fn entity_dim(&self) -> usize {
        self.embed_dim + self.gat_dim
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("embed_dim", self.embed_dim),
            ("gat_dim", self.gat_dim),
            ("vocab_hash_buckets", self.vocab_hash_buckets),
            ("num_labels", self.num_labels),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("dropout_rate", "must lie in [0, 1)"));
        }
        if !self.leaky_relu_slope.is_finite() {
            return Err(Error::config("leaky_relu_slope", "must be finite"));
        }
        Ok(())
    }
}
