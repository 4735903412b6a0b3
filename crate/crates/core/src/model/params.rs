use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::rng::RngLineage;

/// Parameter groups, in flat-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Embeddings,
    GatWeight,
    GatAttention,
    Bilinear,
    BilinearBias,
    Linear,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Embeddings,
        Component::GatWeight,
        Component::GatAttention,
        Component::Bilinear,
        Component::BilinearBias,
        Component::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Embeddings => "embeddings",
            Component::GatWeight => "gat_W",
            Component::GatAttention => "gat_a",
            Component::Bilinear => "bilinear_W",
            Component::BilinearBias => "bilinear_b",
            Component::Linear => "lin_W",
        }
    }

    /// Distance from the output layer: head 0, GAT 1, embeddings 2.
    pub fn depth(self) -> u32 {
        match self {
            Component::Embeddings => 2,
            Component::GatWeight | Component::GatAttention => 1,
            Component::Bilinear | Component::BilinearBias | Component::Linear => 0,
        }
    }
}

/// Offsets of every component inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub embed_dim: usize,
    pub gat_dim: usize,
    pub buckets: usize,
    pub num_labels: usize,
    offsets: [usize; 7],
}

impl Layout {
    pub fn new(config: &ModelConfig) -> Self {
        let (d, g, b, l) = (config.embed_dim, config.gat_dim, config.vocab_hash_buckets, config.num_labels);
        let entity = d + g;
        let sizes = [b * d, d * g, 2 * g, l * entity * entity, l, l * 2 * entity];
        let mut offsets = [0; 7];
        for (i, s) in sizes.iter().enumerate() {
            offsets[i + 1] = offsets[i] + s;
        }
        Self { embed_dim: d, gat_dim: g, buckets: b, num_labels: l, offsets }
    }

    pub fn entity_dim(&self) -> usize {
        self.embed_dim + self.gat_dim
    }

    pub fn len(&self) -> usize {
        self.offsets[6]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self, c: Component) -> Range<usize> {
        let i = c as usize;
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Row-major tensor shape of a component.
    pub fn shape(&self, c: Component) -> Vec<usize> {
        let e = self.entity_dim();
        match c {
            Component::Embeddings => vec![self.buckets, self.embed_dim],
            Component::GatWeight => vec![self.embed_dim, self.gat_dim],
            Component::GatAttention => vec![2 * self.gat_dim],
            Component::Bilinear => vec![self.num_labels, e, e],
            Component::BilinearBias => vec![self.num_labels],
            Component::Linear => vec![self.num_labels, 2 * e],
        }
    }

    pub fn component_of(&self, index: usize) -> Component {
        *Component::ALL.iter().find(|&&c| self.range(c).contains(&index)).expect("index within the parameter vector")
    }

    fn fan_in(&self, c: Component) -> usize {
        match c {
            // One-hot lookup.
            Component::Embeddings => 1,
            Component::GatWeight => self.embed_dim,
            Component::GatAttention => 2 * self.gat_dim,
            Component::Bilinear => self.entity_dim(),
            Component::BilinearBias => 1,
            Component::Linear => 2 * self.entity_dim(),
        }
    }
}

/// All trainable tensors, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    layout: Layout,
    values: Vec<f64>,
}

impl ModelParameters {
    pub fn zeros(config: &ModelConfig) -> Self {
        let layout = Layout::new(config);
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    /// Rebuilds parameters from a flat vector; `None` on length mismatch.
    pub fn from_flat(config: &ModelConfig, values: Vec<f64>) -> Option<Self> {
        let layout = Layout::new(config);
        (values.len() == layout.len()).then_some(Self { layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, c: Component) -> &[f64] {
        &self.values[self.layout.range(c)]
    }

    pub fn get_mut(&mut self, c: Component) -> &mut [f64] {
        let r = self.layout.range(c);
        &mut self.values[r]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Uniform `[-s, s]` with `s = 1/sqrt(fan_in)` per component; zero bias.
pub fn init_params(config: &ModelConfig, seed: u64) -> ModelParameters {
    let mut params = ModelParameters::zeros(config);
    let mut rng = RngLineage::new(seed).stream("init");
    for c in Component::ALL {
        if c == Component::BilinearBias {
            continue;
        }
        let s = 1.0 / (params.layout.fan_in(c) as f64).sqrt();
        for v in params.get_mut(c) {
            *v = rng.gen_range(-s..=s);
        }
    }
    params
}
