use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CurriculumSchedule, DifficultyRecord};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParameters};
use crate::optim::{prepare_examples, OptimConfig, Trainer};

/// Ablation switches; both off by default.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumOptions {
    /// Clear AdamW moments at every stage boundary.
    pub reset_optimizer_between_stages: bool,
    /// Never train on the hardest bucket.
    pub exclude_hardest_bucket: bool,
}

#[derive(Debug, Clone)]
pub struct CurriculumOutcome {
    pub params: ModelParameters,
    /// Mean loss per epoch, one list per stage.
    pub stage_losses: Vec<Vec<f64>>,
}

pub fn curriculum_train(
    corpus: &Corpus,
    records: &[DifficultyRecord],
    schedule: &CurriculumSchedule,
    model_config: &ModelConfig,
    optim_config: &OptimConfig,
    seed: u64,
    options: &CurriculumOptions,
) -> Result<CurriculumOutcome> {
    curriculum_train_observed(corpus, records, schedule, model_config, optim_config, seed, options, &mut |_, _| {})
}

/// As [`curriculum_train`], reporting `(stage, corpus position)` before
/// every update.
#[allow(clippy::too_many_arguments)]
pub fn curriculum_train_observed(
    corpus: &Corpus,
    records: &[DifficultyRecord],
    schedule: &CurriculumSchedule,
    model_config: &ModelConfig,
    optim_config: &OptimConfig,
    seed: u64,
    options: &CurriculumOptions,
    observer: &mut dyn FnMut(usize, usize),
) -> Result<CurriculumOutcome> {
    schedule.validate()?;
    let bucket_by_id: HashMap<&str, Option<usize>> = records.iter().map(|r| (r.id.as_str(), r.bucket)).collect();
    let mut bucket_of = Vec::with_capacity(corpus.len());
    for inst in &corpus.instances {
        match bucket_by_id.get(inst.id.as_str()) {
            Some(Some(b)) if *b < schedule.num_buckets => bucket_of.push(*b),
            Some(Some(b)) => return Err(Error::validation(&inst.id, format!("bucket {b} outside the schedule"))),
            _ => return Err(Error::validation(&inst.id, "instance has no bucket")),
        }
    }
    let hardest = schedule.num_buckets - 1;

    let examples = prepare_examples(corpus, model_config)?;
    let mut trainer = Trainer::new(model_config, optim_config, seed)?;
    let mut stage_losses = Vec::with_capacity(schedule.stages.len());
    for (i, stage) in schedule.stages.iter().enumerate() {
        let subset: Vec<usize> = (0..corpus.len())
            .filter(|&p| stage.buckets.contains(&bucket_of[p]))
            .filter(|&p| !(options.exclude_hardest_bucket && bucket_of[p] == hardest))
            .collect();
        if subset.is_empty() {
            return Err(Error::EmptyStage { stage: i });
        }
        if i > 0 && options.reset_optimizer_between_stages {
            trainer.reset_optimizer();
        }
        stage_losses.push(trainer.run_epochs(&examples, &subset, stage.epochs, &mut |p| observer(i, p))?);
    }
    Ok(CurriculumOutcome { params: trainer.into_params(), stage_losses })
}
