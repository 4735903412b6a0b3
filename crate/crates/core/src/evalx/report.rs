use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{micro_prf, EvalMetrics};
use crate::error::{Error, Result};

/// Outcome of one training run, with the raw predictions its metrics were
/// computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub run_id: String,
    pub arm: String,
    /// Hex SHA-256 of the canonical experiment config.
    pub config_digest: String,
    pub seed: u64,
    pub stage_losses: Vec<Vec<f64>>,
    pub metrics: EvalMetrics,
    pub negative_label: String,
    pub gold: Vec<String>,
    pub predicted: Vec<String>,
    /// Left out of persisted artifacts so reruns stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl RunReport {
    /// Metrics recomputed from the stored predictions.
    pub fn recompute(&self) -> Result<EvalMetrics> {
        micro_prf(&self.gold, &self.predicted, &self.negative_label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub runs: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub min_f1: f64,
    pub max_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub seed: u64,
    pub arm: String,
    pub baseline_f1: f64,
    pub arm_f1: f64,
    /// `arm_f1 - baseline_f1`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub arms: Vec<ArmSummary>,
    /// Reference arm of the paired deltas; `None` with a single arm.
    pub baseline: Option<String>,
    pub deltas: Vec<PairedDelta>,
}

pub const BASELINE_ARM: &str = "shuffled-baseline";

/// Per-arm summaries and per-seed paired F1 deltas against the baseline arm
/// (`shuffled-baseline` if present, otherwise the first arm seen). With more
/// than one arm every seed must occur exactly once in every arm.
pub fn compare_runs(reports: &[RunReport], arms: &[String]) -> Result<Comparison> {
    if reports.len() != arms.len() {
        return Err(Error::LengthMismatch { what: "reports vs arm names", left: reports.len(), right: arms.len() });
    }
    let mut order: Vec<&str> = Vec::new();
    let mut by_arm: BTreeMap<&str, BTreeMap<u64, &RunReport>> = BTreeMap::new();
    for (report, arm) in reports.iter().zip(arms) {
        if !order.contains(&arm.as_str()) {
            order.push(arm);
        }
        if by_arm.entry(arm).or_default().insert(report.seed, report).is_some() {
            return Err(Error::config("seed", format!("seed {} appears twice in arm `{arm}`", report.seed)));
        }
    }
    if let Some(pos) = order.iter().position(|a| *a == BASELINE_ARM) {
        let b = order.remove(pos);
        order.insert(0, b);
    }

    let summaries = order
        .iter()
        .map(|&arm| {
            let runs: Vec<&EvalMetrics> = by_arm[arm].values().map(|r| &r.metrics).collect();
            let n = runs.len() as f64;
            let f1s = runs.iter().map(|m| m.f1);
            ArmSummary {
                arm: arm.to_owned(),
                runs: runs.len(),
                mean_precision: runs.iter().map(|m| m.precision).sum::<f64>() / n,
                mean_recall: runs.iter().map(|m| m.recall).sum::<f64>() / n,
                mean_f1: runs.iter().map(|m| m.f1).sum::<f64>() / n,
                min_f1: f1s.clone().fold(f64::INFINITY, f64::min),
                max_f1: f1s.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    if order.len() < 2 {
        return Ok(Comparison { arms: summaries, baseline: None, deltas: Vec::new() });
    }

    let all_seeds: BTreeSet<u64> = by_arm.values().flat_map(|m| m.keys().copied()).collect();
    let unmatched: Vec<u64> =
        all_seeds.iter().copied().filter(|s| by_arm.values().any(|m| !m.contains_key(s))).collect();
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedSeeds { seeds: unmatched });
    }
    let baseline = order[0];
    let deltas = order[1..]
        .iter()
        .flat_map(|&arm| all_seeds.iter().map(move |&seed| (arm, seed)))
        .map(|(arm, seed)| {
            let base = by_arm[baseline][&seed].metrics.f1;
            let other = by_arm[arm][&seed].metrics.f1;
            PairedDelta { seed, arm: arm.to_owned(), baseline_f1: base, arm_f1: other, delta: other - base }
        })
        .collect();
    Ok(Comparison { arms: summaries, baseline: Some(baseline.to_owned()), deltas })
}

/// Plain-text table: one row per arm with P, R, F1 (percent), then the
/// paired deltas.
pub fn render_table(c: &Comparison) -> String {
    let width = c.arms.iter().map(|a| a.arm.len()).max().unwrap_or(0).max("Arm".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>6}  {:>6}  {:>6}  {:>7}  {:>7}  {:>4}",
        "Arm", "P", "R", "F1", "F1 min", "F1 max", "runs"
    );
    for a in &c.arms {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>7.2}  {:>7.2}  {:>4}",
            a.arm,
            100.0 * a.mean_precision,
            100.0 * a.mean_recall,
            100.0 * a.mean_f1,
            100.0 * a.min_f1,
            100.0 * a.max_f1,
            a.runs
        );
    }
    if let Some(base) = &c.baseline {
        let _ = writeln!(out, "\nPaired F1 deltas vs {base} (points)");
        for d in &c.deltas {
            let _ = writeln!(out, "{:<width$}  seed {:>6}  {:>+7.2}", d.arm, d.seed, 100.0 * d.delta);
        }
    }
    out
}
