use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::instance::Corpus;
use crate::error::{Error, Result};
use crate::rng::RngLineage;

/// Disjoint fold membership keyed by instance id. Persisted as a plain
/// JSON object `{id: fold}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, usize>", into = "BTreeMap<String, usize>")]
pub struct FoldAssignment {
    pub num_folds: usize,
    pub fold_of: BTreeMap<String, usize>,
}

impl From<BTreeMap<String, usize>> for FoldAssignment {
    fn from(fold_of: BTreeMap<String, usize>) -> Self {
        let num_folds = fold_of.values().max().map_or(0, |m| m + 1);
        Self { num_folds, fold_of }
    }
}

impl From<FoldAssignment> for BTreeMap<String, usize> {
    fn from(f: FoldAssignment) -> Self {
        f.fold_of
    }
}

impl FoldAssignment {
    /// Corpus positions of each fold's members, in corpus order.
    pub fn members(&self, corpus: &Corpus) -> Result<Vec<Vec<usize>>> {
        if self.fold_of.len() != corpus.len() {
            return Err(Error::LengthMismatch {
                what: "fold assignment vs corpus",
                left: self.fold_of.len(),
                right: corpus.len(),
            });
        }
        let mut members = vec![Vec::new(); self.num_folds];
        for (pos, inst) in corpus.instances.iter().enumerate() {
            let fold =
                *self.fold_of.get(&inst.id).ok_or_else(|| Error::validation(&inst.id, "instance has no fold"))?;
            members[fold].push(pos);
        }
        Ok(members)
    }
}

/// Stratified n-fold partition. Within each relation (vocabulary order)
/// instances are shuffled and dealt round-robin; the dealing position
/// carries over between relations so total fold sizes also stay within one.
pub fn stratified_split(corpus: &Corpus, num_folds: usize, seed: u64) -> Result<FoldAssignment> {
    if num_folds < 2 {
        return Err(Error::config("folds", format!("need at least 2 folds, got {num_folds}")));
    }
    if num_folds > corpus.len() {
        return Err(Error::config("folds", format!("{num_folds} folds exceed corpus size {}", corpus.len())));
    }
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); corpus.vocab.len()];
    for (pos, label) in corpus.label_indices().into_iter().enumerate() {
        by_label[label].push(pos);
    }

    let mut rng = RngLineage::new(seed).stream("split");
    let mut fold_of = BTreeMap::new();
    let mut next = 0;
    for mut group in by_label {
        group.shuffle(&mut rng);
        for pos in group {
            fold_of.insert(corpus.instances[pos].id.clone(), next);
            next = (next + 1) % num_folds;
        }
    }
    Ok(FoldAssignment { num_folds, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::instance::{fixtures::bill_founded_acme, LabelVocabulary};
    use proptest::prelude::*;

    fn corpus_with(labels: &[&str]) -> Corpus {
        let instances = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mut inst = bill_founded_acme();
                inst.id = format!("id-{i:03}");
                inst.relation = (*l).to_owned();
                inst
            })
            .collect();
        let vocab = LabelVocabulary::from_observed(labels.iter().copied()).unwrap();
        Corpus::new(instances, vocab).unwrap()
    }

    fn fold_sizes(f: &FoldAssignment) -> Vec<usize> {
        let mut sizes = vec![0; f.num_folds];
        for &k in f.fold_of.values() {
            sizes[k] += 1;
        }
        sizes
    }

    #[test]
    fn ten_into_five() {
        let c = corpus_with(&["r"; 10]);
        assert_eq!(fold_sizes(&stratified_split(&c, 5, 1).unwrap()), [2; 5]);
    }

    #[test]
    fn seven_into_three() {
        let c = corpus_with(&["r"; 7]);
        let mut sizes = fold_sizes(&stratified_split(&c, 3, 9).unwrap());
        sizes.sort_unstable();
        assert_eq!(sizes, [2, 2, 3]);
    }

    #[test]
    fn deterministic_per_seed() {
        let c = corpus_with(&["a", "b", "a", "b", "c", "a", "a", "b"]);
        assert_eq!(stratified_split(&c, 3, 5).unwrap(), stratified_split(&c, 3, 5).unwrap());
    }

    #[test]
    fn too_many_folds() {
        let c = corpus_with(&["a", "b"]);
        assert!(matches!(stratified_split(&c, 3, 0), Err(Error::Config { .. })));
        assert!(stratified_split(&c, 1, 0).is_err());
    }

    #[test]
    fn json_is_plain_map() {
        let c = corpus_with(&["a", "b", "a"]);
        let f = stratified_split(&c, 2, 0).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.starts_with("{\"id-000\":"), "{text}");
        assert_eq!(serde_json::from_str::<FoldAssignment>(&text).unwrap(), f);
    }

    proptest! {
        #[test]
        fn partition_and_stratification(
            labels in proptest::collection::vec(0usize..4, 2..60),
            n in 2usize..6,
            seed in any::<u64>(),
        ) {
            prop_assume!(n <= labels.len());
            let names: Vec<String> = labels.iter().map(|l| format!("r{l}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let c = corpus_with(&refs);
            let f = stratified_split(&c, n, seed).unwrap();
            let members = f.members(&c).unwrap();
            prop_assert_eq!(members.iter().map(Vec::len).sum::<usize>(), c.len());
            let label_idx = c.label_indices();
            for l in 0..c.vocab.len() {
                let counts: Vec<usize> = members
                    .iter()
                    .map(|m| m.iter().filter(|&&p| label_idx[p] == l).count())
                    .collect();
                let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                prop_assert!(hi - lo <= 1, "label {} counts {:?}", l, counts);
            }
            let sizes = fold_sizes(&f);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
