//! Micro precision/recall/F1 under the TACRED convention and run comparison.

mod metrics;
mod report;

pub use metrics::{evaluate, micro_prf, EvalMetrics};
pub use report::{compare_runs, render_table, ArmSummary, Comparison, PairedDelta, RunReport};
