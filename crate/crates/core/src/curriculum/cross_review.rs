use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, FoldAssignment};
use crate::error::{Error, Result};
use crate::model::{predict, ModelConfig};
use crate::optim::{prepare_examples, OptimConfig, Trainer};

/// Cross-review outcome for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifficultyRecord {
    pub id: String,
    /// The instance's own fold.
    pub fold: usize,
    /// `(predicting fold, predicted label index)`, ascending by fold.
    pub predictions: Vec<(usize, usize)>,
    pub num_correct: usize,
    pub difficulty: f64,
    pub bucket: Option<usize>,
}

/// Trains one sub-model per fold (seed `seed ^ fold`) and scores every
/// instance by the sub-models that did not see it. Records come back in
/// corpus order.
pub fn cross_review(
    corpus: &Corpus,
    folds: &FoldAssignment,
    model_config: &ModelConfig,
    optim_config: &OptimConfig,
    seed: u64,
) -> Result<Vec<DifficultyRecord>> {
    let n = folds.num_folds;
    if n < 2 {
        return Err(Error::config("folds", format!("cross-review needs at least 2 folds, got {n}")));
    }
    let members = folds.members(corpus)?;
    let examples = prepare_examples(corpus, model_config)?;
    let mut fold_of = vec![0; corpus.len()];
    for (f, m) in members.iter().enumerate() {
        for &p in m {
            fold_of[p] = f;
        }
    }

    let per_fold: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|f| {
            let run = || -> Result<Vec<usize>> {
                let mut trainer = Trainer::new(model_config, optim_config, seed ^ f as u64)?;
                trainer.run_epochs(&examples, &members[f], optim_config.epochs, &mut |_| {})?;
                let params = trainer.params();
                // Entries for the fold's own members are never read.
                Ok(examples
                    .iter()
                    .zip(&fold_of)
                    .map(|(ex, &own)| if own == f { usize::MAX } else { predict(params, &ex.input, model_config) })
                    .collect())
            };
            run().map_err(|e| Error::Fold { fold: f, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;

    let reviewers = (n - 1) as f64;
    Ok(corpus
        .instances
        .iter()
        .zip(&examples)
        .enumerate()
        .map(|(pos, (inst, ex))| {
            let own = fold_of[pos];
            let predictions: Vec<(usize, usize)> =
                (0..n).filter(|&f| f != own).map(|f| (f, per_fold[f][pos])).collect();
            let num_correct = predictions.iter().filter(|(_, l)| *l == ex.label).count();
            DifficultyRecord {
                id: inst.id.clone(),
                fold: own,
                predictions,
                num_correct,
                difficulty: 1.0 - num_correct as f64 / reviewers,
                bucket: None,
            }
        })
        .collect())
}

/// One JSON object per line.
pub fn write_jsonl(records: &[DifficultyRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_jsonl(bytes: &[u8]) -> Result<Vec<DifficultyRecord>> {
    let mut records = Vec::new();
    let mut offset = 0;
    for line in bytes.split_inclusive(|&b| b == b'\n') {
        let trimmed = line.trim_ascii();
        if !trimmed.is_empty() {
            let rec = serde_json::from_slice(trimmed)
                .map_err(|e| Error::Parse { offset: offset + e.column().saturating_sub(1), message: e.to_string() })?;
            records.push(rec);
        }
        offset += line.len();
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difficulty_formula_at_n5() {
        for (correct, want) in [(4, 0.0), (0, 1.0), (1, 0.75)] {
            assert_eq!(1.0 - correct as f64 / 4.0, want);
        }
    }

    #[test]
    fn jsonl_layout() {
        let rec = DifficultyRecord {
            id: "a".into(),
            fold: 1,
            predictions: vec![(0, 2), (2, 0)],
            num_correct: 1,
            difficulty: 0.5,
            bucket: None,
        };
        let bytes = write_jsonl(std::slice::from_ref(&rec)).unwrap();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "{\"id\":\"a\",\"fold\":1,\"predictions\":[[0,2],[2,0]],\"num_correct\":1,\"difficulty\":0.5,\"bucket\":null}\n"
        );
        assert_eq!(read_jsonl(&bytes).unwrap(), vec![rec]);
        assert!(matches!(read_jsonl(b"{\"id\":1}\n"), Err(Error::Parse { .. })));
    }
}
