use serde::{Deserialize, Serialize};

use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::model::{predict, ModelConfig, ModelInput, ModelParameters};

/// Micro-averaged scores with the negative class excluded from positives.
/// Zero denominators give zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalMetrics {
    pub correct_positive: usize,
    pub predicted_positive: usize,
    pub gold_positive: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn micro_prf<S: AsRef<str>>(gold: &[S], pred: &[S], negative_label: &str) -> Result<EvalMetrics> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch { what: "gold vs predicted labels", left: gold.len(), right: pred.len() });
    }
    let (mut correct, mut predicted, mut positive) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (g.as_ref(), p.as_ref());
        let g_pos = g != negative_label;
        let p_pos = p != negative_label;
        positive += usize::from(g_pos);
        predicted += usize::from(p_pos);
        correct += usize::from(p_pos && g == p);
    }
    let precision = ratio(correct, predicted);
    let recall = ratio(correct, positive);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(EvalMetrics {
        correct_positive: correct,
        predicted_positive: predicted,
        gold_positive: positive,
        precision,
        recall,
        f1,
    })
}

/// Predicts every instance; returns `(gold, predicted, metrics)` label strings.
pub fn evaluate(
    params: &ModelParameters,
    corpus: &Corpus,
    config: &ModelConfig,
) -> Result<(Vec<String>, Vec<String>, EvalMetrics)> {
    let mut gold = Vec::with_capacity(corpus.len());
    let mut pred = Vec::with_capacity(corpus.len());
    for inst in &corpus.instances {
        let input = ModelInput::from_instance(inst, config)?;
        let p = predict(params, &input, config);
        gold.push(inst.relation.clone());
        pred.push(corpus.vocab.label(p).expect("model labels match the vocabulary").to_owned());
    }
    let metrics = micro_prf(&gold, &pred, corpus.vocab.negative_label())?;
    Ok((gold, pred, metrics))
}
