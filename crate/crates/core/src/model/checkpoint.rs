use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::{Component, Layout, ModelParameters};
use crate::data::LabelVocabulary;
use crate::error::{Error, Result};

const FORMAT: &str = "curre-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major values.
    pub data: Vec<f64>,
}

/// Self-describing parameter container: config, seed lineage and one
/// record per tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    /// Label index `i` of the scorer is `labels.labels()[i]`.
    pub labels: LabelVocabulary,
    /// Named seeds that produced these parameters (e.g. `master`, `init`).
    pub seeds: BTreeMap<String, u64>,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn new(
        config: &ModelConfig,
        labels: &LabelVocabulary,
        params: &ModelParameters,
        seeds: BTreeMap<String, u64>,
    ) -> Self {
        let layout = params.layout();
        let tensors = Component::ALL
            .iter()
            .map(|&c| TensorRecord { name: c.name().to_owned(), shape: layout.shape(c), data: params.get(c).to_vec() })
            .collect();
        Self {
            format: FORMAT.to_owned(),
            version: VERSION,
            config: config.clone(),
            labels: labels.clone(),
            seeds,
            tensors,
        }
    }

    pub fn params(&self) -> Result<ModelParameters> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported container {} v{}", self.format, self.version)));
        }
        self.config.validate()?;
        LabelVocabulary::new(self.labels.labels().to_vec(), self.labels.negative_label())
            .map_err(|e| Error::Checkpoint(format!("label vocabulary: {e}")))?;
        if self.labels.len() != self.config.num_labels {
            return Err(Error::Checkpoint(format!(
                "{} labels stored for a {}-label model",
                self.labels.len(),
                self.config.num_labels
            )));
        }
        let layout = Layout::new(&self.config);
        if self.tensors.len() != Component::ALL.len() {
            return Err(Error::Checkpoint(format!("expected 6 tensors, found {}", self.tensors.len())));
        }
        let mut flat = Vec::with_capacity(layout.len());
        for (&c, t) in Component::ALL.iter().zip(&self.tensors) {
            let shape = layout.shape(c);
            if t.name != c.name() || t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` {:?} does not match `{}` {:?}",
                    t.name,
                    t.shape,
                    c.name(),
                    shape
                )));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Checkpoint(format!("tensor `{}` has non-finite entries", t.name)));
            }
            flat.extend_from_slice(&t.data);
        }
        Ok(ModelParameters::from_flat(&self.config, flat).expect("length checked per tensor"))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    fn vocab(n: usize) -> LabelVocabulary {
        let mut labels: Vec<String> = (1..n).map(|i| format!("r{i}")).collect();
        labels.insert(0, "no_relation".to_owned());
        LabelVocabulary::new(labels, "no_relation").unwrap()
    }
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exact_round_trip(seed in any::<u64>(), labels in 1usize..5, scale in -1e6f64..1e6) {
            let config = ModelConfig {
                embed_dim: 3, gat_dim: 2, vocab_hash_buckets: 5, num_labels: labels,
                ..ModelConfig::default()
            };
            let mut params = init_params(&config, seed);
            params.flat_mut()[0] *= scale;
            let ckpt = Checkpoint::new(&config, &vocab(labels), &params, BTreeMap::from([("master".to_owned(), seed)]));
            let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
            prop_assert_eq!(&back, &ckpt);
            let restored = back.params().unwrap();
            prop_assert!(restored.flat().iter().zip(params.flat()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let config = ModelConfig { vocab_hash_buckets: 4, ..ModelConfig::with_labels(2) };
        let mut ckpt = Checkpoint::new(&config, &vocab(2), &init_params(&config, 0), BTreeMap::new());
        ckpt.tensors[1].shape = vec![1, 1];
        assert!(matches!(ckpt.params(), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn label_count_must_match_model() {
        let config = ModelConfig { vocab_hash_buckets: 4, ..ModelConfig::with_labels(2) };
        let ckpt = Checkpoint::new(&config, &vocab(3), &init_params(&config, 0), BTreeMap::new());
        assert!(matches!(ckpt.params(), Err(Error::Checkpoint(_))));
    }
}
