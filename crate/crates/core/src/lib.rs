//! Curriculum learning for sentence-level relation extraction.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: TACRED-schema ingestion, synthetic corpora with planted
//!   difficulty, typed entity markers, dependency graphs and stratified folds.
//! - [`model`]: a small relation classifier (hashed embeddings, one
//!   graph-attention layer, bilinear head) with exact analytic gradients.
//! - [`optim`]: AdamW with per-component learning-rate decay and the
//!   epoch loop.
//! - [`curriculum`]: cross-review difficulty estimation, bucketing,
//!   cumulative schedules and staged training.
//! - [`evalx`]: micro precision/recall/F1 and run comparison.
//!
//! All randomness is drawn from named streams of a single master seed
//! ([`RngLineage`]), so every run is reproducible bit for bit.

pub mod curriculum;
pub mod data;
pub mod error;
pub mod evalx;
pub mod model;
pub mod optim;
pub mod rng;

pub use curriculum::{
    bucketize, build_schedule, cross_review, curriculum_train, curriculum_train_observed, read_jsonl, reverse_buckets,
    write_jsonl, Bucketing, CurriculumOptions, CurriculumOutcome, CurriculumSchedule, DifficultyRecord, Stage,
};
pub use data::{
    build_dependency_graph, build_marked_graph, generate_synthetic, insert_typed_markers, parse_tacred_json,
    stratified_split, write_tacred_json, Corpus, DependencyGraph, FoldAssignment, Instance, LabelVocabulary,
    MarkedSequence, SyntheticCorpus, SyntheticSpec, TacredRecord, Tier, NEGATIVE_LABEL,
};
pub use error::{Error, Result};
pub use evalx::{
    compare_runs, evaluate, micro_prf, render_table, ArmSummary, Comparison, EvalMetrics, PairedDelta, RunReport,
};
pub use model::{
    forward, forward_with_masks, init_params, loss_and_backward, predict, Checkpoint, Component, ForwardTrace,
    ModelConfig, ModelInput, ModelParameters,
};
pub use optim::{
    adamw_step, adamw_update, layer_lr_scales, prepare_examples, train, ComponentScales, Example, OptimConfig,
    OptimState, TrainOutcome, Trainer,
};
pub use rng::RngLineage;
