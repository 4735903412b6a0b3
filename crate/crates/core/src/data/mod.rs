//! Corpora, entity marking, dependency graphs and fold splitting.

mod graph;
pub(crate) mod instance;
mod markers;
mod split;
mod synth;
mod tacred;

pub use graph::{build_dependency_graph, build_marked_graph, DependencyGraph};
pub use instance::{Corpus, Instance, LabelVocabulary, NEGATIVE_LABEL};
pub use markers::{insert_typed_markers, MarkedSequence};
pub use split::{stratified_split, FoldAssignment};
pub use synth::{generate_synthetic, SyntheticCorpus, SyntheticSpec, Tier};
pub use tacred::{parse_tacred_json, write_tacred_json, TacredRecord};
