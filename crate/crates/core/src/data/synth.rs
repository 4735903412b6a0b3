//! Synthetic corpora with planted difficulty.
//!
//! Token inventory is `w0 .. w{vocab_size-1}`; the first `num_relations`
//! are relation signatures, the rest fillers. Relation 0 is `no_relation`,
//! relation r > 0 is `rel:{r:02}`. Layout per tier:
//!
//! - easy: the signature follows the subject span directly;
//! - hard: as easy, plus one distractor signature directly before the
//!   subject and a second one replacing a random filler;
//! - noisy: easy-shaped, stored label flipped to a different relation.
//!
//! Dependency heads form a chain rooted at a filler "verb".

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instance::{Corpus, Instance, LabelVocabulary, NEGATIVE_LABEL};
use crate::error::{Error, Result};
use crate::rng::RngLineage;

const SUBJ_TYPES: [&str; 2] = ["PERSON", "ORGANIZATION"];
const OBJ_TYPES: [&str; 5] = ["PERSON", "ORGANIZATION", "LOCATION", "DATE", "NUMBER"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Easy,
    Hard,
    Noisy,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Easy, Tier::Hard, Tier::Noisy];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub num_instances: usize,
    pub num_relations: usize,
    pub vocab_size: usize,
    /// Easy, hard and noisy shares; must sum to 1.
    pub tier_fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { num_instances: 2000, num_relations: 6, vocab_size: 200, tier_fractions: [0.6, 0.2, 0.2], seed: 0 }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_instances == 0 {
            return Err(Error::config("num_instances", "must be positive"));
        }
        if self.num_relations < 2 {
            return Err(Error::config("num_relations", "need at least 2 relations"));
        }
        if self.vocab_size < self.num_relations + 4 {
            return Err(Error::config(
                "vocab_size",
                format!("{} tokens cannot hold {} signatures plus 4 fillers", self.vocab_size, self.num_relations),
            ));
        }
        if self.tier_fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::config("tier_fractions", "fractions must be non-negative"));
        }
        let sum: f64 = self.tier_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("tier_fractions", format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Instances per tier under largest-remainder rounding.
    pub fn tier_counts(&self) -> [usize; 3] {
        let n = self.num_instances;
        let raw = self.tier_fractions.map(|f| f * n as f64);
        let mut counts = raw.map(|r| r.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0, 1, 2];
        // Largest fractional part first; ties go to the earlier tier.
        order.sort_by(|&a, &b| {
            let (fa, fb) = (raw[a] - raw[a].floor(), raw[b] - raw[b].floor());
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &t in order.iter().cycle().take(n.saturating_sub(assigned)) {
            counts[t] += 1;
        }
        counts
    }

    pub fn relation_name(r: usize) -> String {
        if r == 0 {
            NEGATIVE_LABEL.to_owned()
        } else {
            format!("rel:{r:02}")
        }
    }

    pub fn signature_token(r: usize) -> String {
        format!("w{r}")
    }
}

/// A generated corpus with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub tier_of: BTreeMap<String, Tier>,
    /// The relation whose signature was planted (differs from the stored
    /// label exactly for noisy instances).
    pub planted_of: BTreeMap<String, String>,
}

struct Sentence {
    tokens: Vec<String>,
    subj_span: (usize, usize),
    obj_span: (usize, usize),
    root: usize,
}

struct Builder<'a> {
    spec: &'a SyntheticSpec,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn filler(&mut self) -> String {
        format!("w{}", self.rng.gen_range(self.spec.num_relations..self.spec.vocab_size))
    }

    fn fillers(&mut self, lo: usize, hi: usize) -> Vec<String> {
        let n = self.rng.gen_range(lo..=hi);
        (0..n).map(|_| self.filler()).collect()
    }

    fn other_relations(&mut self, r: usize, k: usize) -> Vec<usize> {
        let mut others: Vec<usize> = (0..self.spec.num_relations).filter(|&x| x != r).collect();
        others.shuffle(&mut self.rng);
        others.truncate(k);
        others
    }

    fn sentence(&mut self, tier: Tier, planted: usize) -> Sentence {
        let distractors = if tier == Tier::Hard { self.other_relations(planted, 2) } else { Vec::new() };

        let subj_len = self.rng.gen_range(1..=2);
        let obj_len = self.rng.gen_range(1..=2);
        let subj: Vec<String> = (0..subj_len).map(|_| self.filler()).collect();
        let obj: Vec<String> = (0..obj_len).map(|_| self.filler()).collect();

        // Subject block: [distractor?] subject signature
        let mut subj_block = Vec::new();
        let subj_offset = match distractors.first() {
            Some(&d) => {
                subj_block.push(SyntheticSpec::signature_token(d));
                1
            }
            None => 0,
        };
        subj_block.extend(subj);
        subj_block.push(SyntheticSpec::signature_token(planted));

        let lead = self.fillers(1, 3);
        let middle = self.fillers(1, 3);
        let tail = self.fillers(1, 3);
        let subj_first = self.rng.gen_bool(0.5);

        let mut tokens = lead;
        let mut filler_slots: Vec<usize> = (0..tokens.len()).collect();
        let place = |tokens: &mut Vec<String>, block: Vec<String>| {
            let at = tokens.len();
            tokens.extend(block);
            at
        };
        let (subj_at, obj_at);
        if subj_first {
            subj_at = place(&mut tokens, subj_block) + subj_offset;
            filler_slots.extend(tokens.len()..tokens.len() + middle.len());
            tokens.extend(middle);
            obj_at = place(&mut tokens, obj);
        } else {
            obj_at = place(&mut tokens, obj);
            filler_slots.extend(tokens.len()..tokens.len() + middle.len());
            tokens.extend(middle);
            subj_at = place(&mut tokens, subj_block) + subj_offset;
        }
        filler_slots.extend(tokens.len()..tokens.len() + tail.len());
        tokens.extend(tail);

        let root = *filler_slots.choose(&mut self.rng).expect("at least three filler slots");
        if let Some(&d) = distractors.get(1) {
            let candidates: Vec<usize> = filler_slots.iter().copied().filter(|&p| p != root).collect();
            let at = *candidates.choose(&mut self.rng).expect("at least two filler slots");
            tokens[at] = SyntheticSpec::signature_token(d);
        }

        Sentence {
            tokens,
            subj_span: (subj_at, subj_at + subj_len - 1),
            obj_span: (obj_at, obj_at + obj_len - 1),
            root,
        }
    }
}

fn chain_heads(len: usize, root: usize) -> Vec<usize> {
    // 1-indexed: tokens left of the root point right, tokens right point left.
    (0..len)
        .map(|i| match i.cmp(&root) {
            std::cmp::Ordering::Less => i + 2,
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Greater => i,
        })
        .collect()
}

/// Generates a corpus whose instances carry known difficulty tiers.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let counts = spec.tier_counts();
    let mut tiers: Vec<Tier> = Tier::ALL.iter().zip(counts).flat_map(|(&t, c)| std::iter::repeat_n(t, c)).collect();
    let lineage = RngLineage::new(spec.seed);
    let mut builder = Builder { spec, rng: lineage.stream("synth") };
    tiers.shuffle(&mut builder.rng);

    let width = spec.num_instances.to_string().len().max(6);
    let mut instances = Vec::with_capacity(spec.num_instances);
    let mut tier_of = BTreeMap::new();
    let mut planted_of = BTreeMap::new();
    for (i, tier) in tiers.into_iter().enumerate() {
        let planted = builder.rng.gen_range(0..spec.num_relations);
        let stored = if tier == Tier::Noisy {
            (planted + 1 + builder.rng.gen_range(0..spec.num_relations - 1)) % spec.num_relations
        } else {
            planted
        };
        let s = builder.sentence(tier, planted);
        let subj_type = SUBJ_TYPES.choose(&mut builder.rng).expect("non-empty");
        let obj_type = OBJ_TYPES.choose(&mut builder.rng).expect("non-empty");
        let len = s.tokens.len();
        let id = format!("syn{}-{:0width$}", spec.seed, i);
        let mut dep_labels = vec!["dep".to_owned(); len];
        dep_labels[s.root] = "ROOT".to_owned();
        instances.push(Instance {
            id: id.clone(),
            tokens: s.tokens,
            subj_span: s.subj_span,
            obj_span: s.obj_span,
            subj_type: (*subj_type).to_owned(),
            obj_type: (*obj_type).to_owned(),
            dep_heads: chain_heads(len, s.root),
            dep_labels,
            relation: SyntheticSpec::relation_name(stored),
        });
        tier_of.insert(id.clone(), tier);
        planted_of.insert(id, SyntheticSpec::relation_name(planted));
    }

    let labels = (0..spec.num_relations).map(SyntheticSpec::relation_name).collect::<Vec<_>>();
    let mut sorted = labels.clone();
    sorted.sort();
    let vocab = LabelVocabulary::new(sorted, NEGATIVE_LABEL)?;
    let corpus = Corpus::new(instances, vocab)?;
    Ok(SyntheticCorpus { corpus, tier_of, planted_of })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tacred::write_tacred_json;

    fn spec(n: usize, fractions: [f64; 3], seed: u64) -> SyntheticSpec {
        SyntheticSpec { num_instances: n, tier_fractions: fractions, seed, ..Default::default() }
    }

    #[test]
    fn tier_counts_follow_fractions() {
        let s = spec(1000, [0.6, 0.2, 0.2], 3);
        assert_eq!(s.tier_counts(), [600, 200, 200]);
        let out = generate_synthetic(&s).unwrap();
        for (tier, want) in Tier::ALL.iter().zip([600, 200, 200]) {
            assert_eq!(out.tier_of.values().filter(|t| *t == tier).count(), want);
        }
    }

    #[test]
    fn largest_remainder_rounding() {
        assert_eq!(spec(10, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0).tier_counts(), [4, 3, 3]);
        // 3.5 / 1.75 / 1.75: the two .75 remainders win.
        assert_eq!(spec(7, [0.5, 0.25, 0.25], 0).tier_counts(), [3, 2, 2]);
        assert_eq!(spec(7, [0.25, 0.25, 0.5], 0).tier_counts(), [2, 2, 3]);
    }

    #[test]
    fn no_noise_keeps_planted_labels() {
        for seed in 0..3 {
            let out = generate_synthetic(&spec(300, [1.0, 0.0, 0.0], seed)).unwrap();
            for inst in &out.corpus.instances {
                assert_eq!(inst.relation, out.planted_of[&inst.id]);
            }
        }
    }

    #[test]
    fn noisy_labels_always_differ() {
        let out = generate_synthetic(&spec(400, [0.0, 0.0, 1.0], 8)).unwrap();
        for inst in &out.corpus.instances {
            assert_ne!(inst.relation, out.planted_of[&inst.id]);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let s = spec(500, [0.6, 0.2, 0.2], 11);
        let a = write_tacred_json(&generate_synthetic(&s).unwrap().corpus.instances).unwrap();
        let b = write_tacred_json(&generate_synthetic(&s).unwrap().corpus.instances).unwrap();
        assert_eq!(a, b);
        let c =
            write_tacred_json(&generate_synthetic(&spec(500, [0.6, 0.2, 0.2], 12)).unwrap().corpus.instances).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn signature_sits_next_to_subject() {
        let out = generate_synthetic(&spec(300, [0.5, 0.5, 0.0], 4)).unwrap();
        for inst in &out.corpus.instances {
            let planted = out.planted_of[&inst.id].clone();
            let r = inst.relation.clone();
            assert_eq!(planted, r);
            let r_idx = out.corpus.vocab.labels().iter().position(|l| *l == r).unwrap();
            let sig = SyntheticSpec::signature_token(r_idx);
            assert_eq!(inst.tokens[inst.subj_span.1 + 1], sig);
            let sigs = inst.tokens.iter().filter(|t| t[1..].parse::<usize>().unwrap() < 6).count();
            match out.tier_of[&inst.id] {
                Tier::Easy => assert_eq!(sigs, 1, "{inst:?}"),
                Tier::Hard => {
                    assert_eq!(sigs, 3, "{inst:?}");
                    assert_ne!(inst.tokens[inst.subj_span.0 - 1], sig);
                }
                Tier::Noisy => unreachable!(),
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = SyntheticSpec::default();
        s.vocab_size = s.num_relations + 3;
        assert!(matches!(generate_synthetic(&s), Err(Error::Config { ref field, .. }) if field == "vocab_size"));
        let s = spec(10, [0.5, 0.2, 0.2], 0);
        assert!(generate_synthetic(&s).is_err());
        let s = SyntheticSpec { num_relations: 1, ..Default::default() };
        assert!(generate_synthetic(&s).is_err());
    }
}
