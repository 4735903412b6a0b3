use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::adamw::{adamw_step_rows, layer_lr_scales, ComponentScales, OptimConfig, OptimState, RowActivity};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::model::{forward, init_params, loss_and_backward_into, Component, ModelConfig, ModelInput, ModelParameters};
use crate::rng::RngLineage;

/// A prepared training instance.
#[derive(Debug, Clone)]
pub struct Example {
    pub input: ModelInput,
    pub label: usize,
}

/// Marks, parses and hashes every instance once.
pub fn prepare_examples(corpus: &Corpus, config: &ModelConfig) -> Result<Vec<Example>> {
    corpus
        .instances
        .iter()
        .zip(corpus.label_indices())
        .map(|(inst, label)| Ok(Example { input: ModelInput::from_instance(inst, config)?, label }))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParameters,
    /// Mean training loss of each epoch.
    pub loss_history: Vec<f64>,
}

/// Parameters, optimizer state and random streams of one training run.
///
/// Streams derive from the run seed: `init` for parameters, `dropout` for
/// masks and `shuffle-{shuffle_seed}` for epoch order.
#[derive(Debug, Clone)]
pub struct Trainer {
    model_config: ModelConfig,
    optim_config: OptimConfig,
    params: ModelParameters,
    state: OptimState,
    scales: ComponentScales,
    activity: RowActivity,
    /// Zeroed between steps.
    grad: Vec<f64>,
    shuffle_rng: ChaCha8Rng,
    dropout_rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(model_config: &ModelConfig, optim_config: &OptimConfig, seed: u64) -> Result<Self> {
        model_config.validate()?;
        optim_config.validate()?;
        let lineage = RngLineage::new(seed);
        let params = init_params(model_config, seed);
        Ok(Self {
            state: OptimState::new(params.len()),
            activity: RowActivity::new(model_config.vocab_hash_buckets),
            grad: vec![0.0; params.len()],
            params,
            scales: layer_lr_scales(optim_config.layer_decay),
            shuffle_rng: lineage.stream(&format!("shuffle-{}", optim_config.shuffle_seed)),
            dropout_rng: lineage.stream("dropout"),
            model_config: model_config.clone(),
            optim_config: optim_config.clone(),
        })
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn state(&self) -> &OptimState {
        &self.state
    }

    pub fn into_params(self) -> ModelParameters {
        self.params
    }

    /// Clears the AdamW moments and step count.
    pub fn reset_optimizer(&mut self) {
        self.state = OptimState::new(self.params.len());
        self.activity = RowActivity::new(self.model_config.vocab_hash_buckets);
    }

    /// One forward/backward/update on a single example; returns its loss.
    pub fn step(&mut self, example: &Example) -> Result<f64> {
        let trace = forward(&self.params, &example.input, &self.model_config, Some(&mut self.dropout_rng));
        let mut touched = example.input.token_ids.clone();
        touched.sort_unstable();
        touched.dedup();
        let result = loss_and_backward_into(&self.params, &trace, &self.model_config, example.label, &mut self.grad)
            .and_then(|loss| {
                adamw_step_rows(
                    &mut self.params,
                    &mut self.state,
                    &self.grad,
                    &self.optim_config,
                    &self.scales,
                    &mut self.activity,
                    &touched,
                )
                .map(|()| loss)
            });
        let layout = self.params.layout();
        let emb = layout.range(Component::Embeddings);
        let d = layout.embed_dim;
        self.grad[emb.end..].fill(0.0);
        for row in touched {
            self.grad[emb.start + row * d..emb.start + (row + 1) * d].fill(0.0);
        }
        result
    }

    /// Runs `epochs` shuffled passes over `examples[subset]`, calling
    /// `observer` with each example position before its update. Returns the
    /// mean loss per epoch.
    pub fn run_epochs(
        &mut self,
        examples: &[Example],
        subset: &[usize],
        epochs: usize,
        observer: &mut dyn FnMut(usize),
    ) -> Result<Vec<f64>> {
        if subset.is_empty() {
            return Err(Error::config("corpus", "training subset is empty"));
        }
        let mut history = Vec::with_capacity(epochs);
        let mut order = subset.to_vec();
        for _ in 0..epochs {
            order.copy_from_slice(subset);
            order.shuffle(&mut self.shuffle_rng);
            let mut total = 0.0;
            for &pos in &order {
                observer(pos);
                total += self.step(&examples[pos])?;
            }
            history.push(total / order.len() as f64);
        }
        Ok(history)
    }
}

/// Trains a fresh model on the whole corpus for `optim_config.epochs` epochs.
pub fn train(
    corpus: &Corpus,
    model_config: &ModelConfig,
    optim_config: &OptimConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let examples = prepare_examples(corpus, model_config)?;
    let all: Vec<usize> = (0..examples.len()).collect();
    let mut trainer = Trainer::new(model_config, optim_config, seed)?;
    let loss_history = trainer.run_epochs(&examples, &all, optim_config.epochs, &mut |_| {})?;
    Ok(TrainOutcome { params: trainer.into_params(), loss_history })
}
