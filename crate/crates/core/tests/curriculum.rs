use curre_core::{
    bucketize, build_schedule, cross_review, curriculum_train, curriculum_train_observed, generate_synthetic,
    reverse_buckets, stratified_split, train, CurriculumOptions, CurriculumSchedule, DifficultyRecord, Error,
    ModelConfig, OptimConfig, SyntheticCorpus, SyntheticSpec,
};

fn small(n: usize, seed: u64) -> SyntheticCorpus {
    generate_synthetic(&SyntheticSpec { num_instances: n, seed, ..Default::default() }).unwrap()
}

fn tiny_model(labels: usize) -> ModelConfig {
    ModelConfig { embed_dim: 8, gat_dim: 8, vocab_hash_buckets: 256, ..ModelConfig::with_labels(labels) }
}

fn optim(epochs: usize) -> OptimConfig {
    OptimConfig { epochs, learning_rate: 0.01, ..Default::default() }
}

/// Buckets by position: the first third easiest, and so on.
fn positional_records(syn: &SyntheticCorpus, k: usize) -> Vec<DifficultyRecord> {
    let n = syn.corpus.len();
    syn.corpus
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| DifficultyRecord {
            id: inst.id.clone(),
            fold: 0,
            predictions: vec![],
            num_correct: 0,
            difficulty: i as f64 / n as f64,
            bucket: Some(i * k / n),
        })
        .collect()
}

#[test]
fn cross_review_records_are_hygienic_and_granular() {
    let syn = small(60, 2);
    let n = 4;
    let folds = stratified_split(&syn.corpus, n, 2).unwrap();
    let mc = tiny_model(syn.corpus.vocab.len());
    let records = cross_review(&syn.corpus, &folds, &mc, &optim(2), 2).unwrap();
    assert_eq!(records.len(), syn.corpus.len());
    for (rec, inst) in records.iter().zip(&syn.corpus.instances) {
        assert_eq!(rec.id, inst.id);
        assert_eq!(rec.fold, folds.fold_of[&rec.id]);
        assert_eq!(rec.predictions.len(), n - 1);
        let mut predictors: Vec<usize> = rec.predictions.iter().map(|p| p.0).collect();
        predictors.sort_unstable();
        predictors.dedup();
        assert_eq!(predictors.len(), n - 1);
        assert!(predictors.iter().all(|&f| f != rec.fold && f < n));
        let gold = syn.corpus.vocab.index_of(&inst.relation).unwrap();
        let correct = rec.predictions.iter().filter(|p| p.1 == gold).count();
        assert_eq!(rec.num_correct, correct);
        let scaled = rec.difficulty * (n - 1) as f64;
        assert!((scaled - scaled.round()).abs() < 1e-12 && (0.0..=1.0).contains(&rec.difficulty));
        assert_eq!(rec.difficulty, 1.0 - correct as f64 / (n - 1) as f64);
        assert_eq!(rec.bucket, None);
    }
    assert_eq!(cross_review(&syn.corpus, &folds, &mc, &optim(2), 2).unwrap(), records);
}

#[test]
fn cross_review_failure_names_the_fold() {
    let syn = small(30, 1);
    let folds = stratified_split(&syn.corpus, 3, 1).unwrap();
    // Too few labels for the corpus: every fold fails on its first step.
    let err = cross_review(&syn.corpus, &folds, &tiny_model(2), &optim(1), 1).unwrap_err();
    assert!(matches!(err, Error::Fold { .. }), "{err}");
}

#[test]
fn no_instance_is_seen_before_its_stage() {
    let syn = small(45, 3);
    let k = 3;
    let records = positional_records(&syn, k);
    let schedule = build_schedule(k, 2, 1).unwrap();
    let mc = tiny_model(syn.corpus.vocab.len());
    let mut trace = Vec::new();
    curriculum_train_observed(
        &syn.corpus,
        &records,
        &schedule,
        &mc,
        &optim(1),
        3,
        &CurriculumOptions::default(),
        &mut |stage, pos| trace.push((stage, pos)),
    )
    .unwrap();
    let bucket = |pos: usize| records[pos].bucket.unwrap();
    assert!(trace.iter().all(|&(stage, pos)| bucket(pos) <= stage));
    assert!(trace.windows(2).all(|w| w[0].0 <= w[1].0));
    for (s, stage) in schedule.stages.iter().enumerate() {
        let seen = trace.iter().filter(|t| t.0 == s).count();
        let members = records.iter().filter(|r| stage.buckets.contains(&r.bucket.unwrap())).count();
        assert_eq!(seen, members * stage.epochs, "stage {s}");
    }

    let reversed = reverse_buckets(&records, k);
    let mut anti = Vec::new();
    curriculum_train_observed(
        &syn.corpus,
        &reversed,
        &schedule,
        &mc,
        &optim(1),
        3,
        &CurriculumOptions::default(),
        &mut |stage, pos| anti.push((stage, pos)),
    )
    .unwrap();
    assert!(anti.iter().filter(|t| t.0 == 0).all(|&(_, pos)| bucket(pos) == k - 1));
}

#[test]
fn single_stage_reproduces_plain_training_bitwise() {
    let syn = small(40, 5);
    let mc = tiny_model(syn.corpus.vocab.len());
    for k in [1, 3] {
        let records = positional_records(&syn, k);
        let schedule = CurriculumSchedule::single_stage(k, 3).unwrap();
        let cur = curriculum_train(&syn.corpus, &records, &schedule, &mc, &optim(1), 9, &CurriculumOptions::default())
            .unwrap();
        let plain = train(&syn.corpus, &mc, &optim(3), 9).unwrap();
        assert!(cur.params.flat().iter().zip(plain.params.flat()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(cur.stage_losses, vec![plain.loss_history]);
    }
}

#[test]
fn curriculum_training_is_deterministic() {
    let syn = small(40, 6);
    let mc = tiny_model(syn.corpus.vocab.len());
    let records = positional_records(&syn, 3);
    let schedule = build_schedule(3, 1, 1).unwrap();
    let run = |opts: &CurriculumOptions| {
        curriculum_train(&syn.corpus, &records, &schedule, &mc, &optim(1), 4, opts).unwrap().params.into_flat()
    };
    let default = CurriculumOptions::default();
    assert_eq!(run(&default), run(&default));
    let reset = CurriculumOptions { reset_optimizer_between_stages: true, ..Default::default() };
    assert_eq!(run(&reset), run(&reset));
    assert_ne!(run(&reset), run(&default));
}

#[test]
fn hardest_bucket_can_be_excluded() {
    let syn = small(30, 7);
    let k = 3;
    let records = positional_records(&syn, k);
    let opts = CurriculumOptions { exclude_hardest_bucket: true, ..Default::default() };
    let mut seen = Vec::new();
    curriculum_train_observed(
        &syn.corpus,
        &records,
        &build_schedule(k, 1, 1).unwrap(),
        &tiny_model(syn.corpus.vocab.len()),
        &optim(1),
        0,
        &opts,
        &mut |_, pos| seen.push(pos),
    )
    .unwrap();
    assert!(!seen.is_empty());
    assert!(seen.iter().all(|&pos| records[pos].bucket.unwrap() < k - 1));
}

#[test]
fn empty_stage_and_missing_bucket_are_errors() {
    let syn = small(20, 8);
    let mc = tiny_model(syn.corpus.vocab.len());
    let schedule = build_schedule(2, 1, 1).unwrap();
    let mut records = positional_records(&syn, 2);
    for r in &mut records {
        r.bucket = Some(1);
    }
    let err = curriculum_train(&syn.corpus, &records, &schedule, &mc, &optim(1), 0, &CurriculumOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::EmptyStage { stage: 0 }), "{err}");

    records[3].bucket = None;
    let err = curriculum_train(&syn.corpus, &records, &schedule, &mc, &optim(1), 0, &CurriculumOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::Validation { .. }), "{err}");
    records.pop();
    assert!(
        curriculum_train(&syn.corpus, &records, &schedule, &mc, &optim(1), 0, &CurriculumOptions::default()).is_err()
    );
}

#[test]
fn bucketized_cross_review_feeds_a_schedule() {
    let syn = small(36, 9);
    let folds = stratified_split(&syn.corpus, 3, 9).unwrap();
    let mc = tiny_model(syn.corpus.vocab.len());
    let records = cross_review(&syn.corpus, &folds, &mc, &optim(1), 9).unwrap();
    let b = bucketize(&records, 3).unwrap();
    for w in b.boundaries.windows(2) {
        assert!(w[0].1 <= w[1].0);
    }
    let out = curriculum_train(
        &syn.corpus,
        &b.records,
        &build_schedule(3, 1, 1).unwrap(),
        &mc,
        &optim(1),
        9,
        &CurriculumOptions::default(),
    )
    .unwrap();
    assert_eq!(out.stage_losses.len(), 4);
    assert!(out.params.all_finite());
}
