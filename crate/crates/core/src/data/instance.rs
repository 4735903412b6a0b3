use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The benchmark's negative class.
pub const NEGATIVE_LABEL: &str = "no_relation";

/// One sentence with a subject/object pair and its gold relation.
///
/// Spans are inclusive token index pairs. `dep_heads` is 1-indexed with 0
/// marking the root, as in the Stanford parses shipped with TACRED.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub tokens: Vec<String>,
    pub subj_span: (usize, usize),
    pub obj_span: (usize, usize),
    pub subj_type: String,
    pub obj_type: String,
    pub dep_heads: Vec<usize>,
    pub dep_labels: Vec<String>,
    pub relation: String,
}

impl Instance {
    /// Checks every structural invariant except label membership, which
    /// needs the corpus vocabulary.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        let fail = |msg: String| Err(Error::validation(&self.id, msg));
        if n == 0 {
            return fail("sentence has no tokens".into());
        }
        for (name, (start, end)) in [("subject", self.subj_span), ("object", self.obj_span)] {
            if start > end || end >= n {
                return fail(format!("{name} span ({start}, {end}) out of range for {n} tokens"));
            }
        }
        let (s, o) = (self.subj_span, self.obj_span);
        if s.0 <= o.1 && o.0 <= s.1 {
            return fail("subject and object spans overlap".into());
        }
        if self.dep_heads.len() != n || self.dep_labels.len() != n {
            return fail(format!(
                "{} heads and {} dependency labels for {n} tokens",
                self.dep_heads.len(),
                self.dep_labels.len()
            ));
        }
        self.check_tree().map_err(|msg| Error::validation(&self.id, msg))
    }

    /// Single root, heads in range, no cycles.
    pub(crate) fn check_tree(&self) -> std::result::Result<(), String> {
        let n = self.dep_heads.len();
        if let Some(&h) = self.dep_heads.iter().find(|&&h| h > n) {
            return Err(format!("head {h} out of range for {n} tokens"));
        }
        let roots = self.dep_heads.iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        // Every walk towards the root must terminate within n hops.
        for start in 0..n {
            let mut node = start;
            let mut hops = 0;
            while self.dep_heads[node] != 0 {
                node = self.dep_heads[node] - 1;
                hops += 1;
                if hops > n {
                    return Err(format!("dependency heads contain a cycle through token {start}"));
                }
            }
        }
        Ok(())
    }
}

/// Ordered relation labels; indices are positions in `labels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocabulary {
    labels: Vec<String>,
    negative_label: String,
}

impl LabelVocabulary {
    pub fn new(labels: Vec<String>, negative_label: impl Into<String>) -> Result<Self> {
        let negative_label = negative_label.into();
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::config("labels", format!("duplicate label `{dup}`")));
        }
        if !labels.contains(&negative_label) {
            return Err(Error::config("negative_label", format!("`{negative_label}` is not in the label set")));
        }
        Ok(Self { labels, negative_label })
    }

    /// Sorted distinct labels from `observed`, always including the
    /// negative label.
    pub fn from_observed<'a>(observed: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut labels: Vec<String> = observed.into_iter().map(str::to_owned).collect();
        if labels.is_empty() {
            return Err(Error::config("relation", "no labels observed"));
        }
        labels.push(NEGATIVE_LABEL.to_owned());
        labels.sort_unstable();
        labels.dedup();
        Self::new(labels, NEGATIVE_LABEL)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn negative_label(&self) -> &str {
        &self.negative_label
    }

    pub fn negative_index(&self) -> usize {
        self.index_of(&self.negative_label).expect("negative label is a member")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }
}

/// Validated instances plus their label vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub instances: Vec<Instance>,
    pub vocab: LabelVocabulary,
}

impl Corpus {
    pub fn new(instances: Vec<Instance>, vocab: LabelVocabulary) -> Result<Self> {
        let mut ids = HashSet::new();
        for inst in &instances {
            inst.validate()?;
            if !ids.insert(inst.id.as_str()) {
                return Err(Error::validation(&inst.id, "duplicate instance id"));
            }
            if vocab.index_of(&inst.relation).is_none() {
                return Err(Error::validation(
                    &inst.id,
                    format!("relation `{}` is not in the label vocabulary", inst.relation),
                ));
            }
        }
        Ok(Self { instances, vocab })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Gold label index of every instance, in corpus order.
    pub fn label_indices(&self) -> Vec<usize> {
        self.instances.iter().map(|i| self.vocab.index_of(&i.relation).expect("validated on construction")).collect()
    }

    /// The sub-corpus of the given positions, sharing the vocabulary.
    pub fn select(&self, positions: &[usize]) -> Corpus {
        Corpus { instances: positions.iter().map(|&p| self.instances[p].clone()).collect(), vocab: self.vocab.clone() }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::bill_founded_acme;
    use super::*;

    #[test]
    fn valid_instance_passes() {
        bill_founded_acme().validate().unwrap();
    }

    #[test]
    fn overlapping_spans_rejected() {
        let mut inst = bill_founded_acme();
        inst.obj_span = (0, 1);
        assert!(matches!(inst.validate(), Err(Error::Validation { .. })));
    }

    #[test]
    fn head_cycle_rejected() {
        let mut inst = bill_founded_acme();
        // 0 -> 2 -> 0 while token 1 is the root.
        inst.dep_heads = vec![3, 0, 1];
        let err = inst.validate().unwrap_err().to_string();
        assert!(err.contains("ex-1") && err.contains("cycle"), "{err}");
    }

    #[test]
    fn multiple_roots_rejected() {
        let mut inst = bill_founded_acme();
        inst.dep_heads = vec![0, 0, 2];
        assert!(inst.validate().unwrap_err().to_string().contains("exactly one root"));
    }

    #[test]
    fn vocabulary_is_sorted_and_contains_negative() {
        let v = LabelVocabulary::from_observed(["per:title", "org:founded_by"]).unwrap();
        assert_eq!(v.labels(), ["no_relation", "org:founded_by", "per:title"]);
        assert_eq!(v.negative_index(), 0);
        assert!(LabelVocabulary::from_observed([]).is_err());
    }

    #[test]
    fn unknown_relation_rejected_by_corpus() {
        let vocab = LabelVocabulary::from_observed(["per:title"]).unwrap();
        let err = Corpus::new(vec![bill_founded_acme()], vocab).unwrap_err();
        assert!(err.to_string().contains("ex-1"));
    }
}
