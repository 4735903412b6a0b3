use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub buckets: Vec<usize>,
    pub epochs: usize,
}

/// Ordered training stages over cumulative bucket unions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumSchedule {
    pub num_buckets: usize,
    pub stages: Vec<Stage>,
}

impl CurriculumSchedule {
    /// One stage over every bucket: plain training.
    pub fn single_stage(num_buckets: usize, epochs: usize) -> Result<Self> {
        let s = Self { num_buckets, stages: vec![Stage { buckets: (0..num_buckets).collect(), epochs }] };
        s.validate()?;
        Ok(s)
    }

    /// Every stage is a prefix `{0..=j}` with non-decreasing `j`, the last
    /// covers all buckets, and every stage runs at least one epoch.
    pub fn validate(&self) -> Result<()> {
        if self.num_buckets == 0 {
            return Err(Error::config("buckets", "need at least one bucket"));
        }
        if self.stages.is_empty() {
            return Err(Error::config("schedule", "no stages"));
        }
        let mut prev = 0;
        for (i, stage) in self.stages.iter().enumerate() {
            let n = stage.buckets.len();
            if n == 0 || stage.buckets.iter().copied().ne(0..n) || n > self.num_buckets {
                return Err(Error::config("schedule", format!("stage {i} is not a bucket prefix")));
            }
            if n < prev {
                return Err(Error::config("schedule", format!("stage {i} shrinks the bucket union")));
            }
            if stage.epochs == 0 {
                return Err(Error::config("schedule", format!("stage {i} has zero epochs")));
            }
            prev = n;
        }
        if prev != self.num_buckets {
            return Err(Error::config("schedule", "final stage does not cover every bucket"));
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(|s| s.epochs).sum()
    }
}

/// Stage i (i < k) trains on buckets `0..=i` for `epochs_per_stage`; a final
/// stage trains on everything for `final_full_epochs`.
pub fn build_schedule(k: usize, epochs_per_stage: usize, final_full_epochs: usize) -> Result<CurriculumSchedule> {
    if k == 0 {
        return Err(Error::config("buckets", "need at least one bucket"));
    }
    if epochs_per_stage == 0 {
        return Err(Error::config("schedule.epochs_per_stage", "must be at least 1"));
    }
    if final_full_epochs == 0 {
        return Err(Error::config("schedule.final_full_epochs", "must be at least 1"));
    }
    let mut stages: Vec<Stage> =
        (0..k).map(|i| Stage { buckets: (0..=i).collect(), epochs: epochs_per_stage }).collect();
    stages.push(Stage { buckets: (0..k).collect(), epochs: final_full_epochs });
    Ok(CurriculumSchedule { num_buckets: k, stages })
}
