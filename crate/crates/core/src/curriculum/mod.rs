//! Cross-review difficulty estimation and staged curriculum training.
//!
//! The corpus is split into n folds; one sub-model is trained per fold and
//! predicts every instance outside it. An instance's difficulty is the
//! fraction of the other n − 1 sub-models that get it wrong. Instances are
//! then cut into k equal-count buckets and trained on cumulatively, easiest
//! bucket first, ending with a pass over everything.

mod bucket;
mod cross_review;
mod schedule;
mod staged;

pub use bucket::{bucketize, reverse_buckets, Bucketing};
pub use cross_review::{cross_review, read_jsonl, write_jsonl, DifficultyRecord};
pub use schedule::{build_schedule, CurriculumSchedule, Stage};
pub use staged::{curriculum_train, curriculum_train_observed, CurriculumOptions, CurriculumOutcome};
