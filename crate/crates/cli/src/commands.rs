use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context as _};
use clap::{Args, Parser, Subcommand};
use curre_core::rng::derive_seed;
use curre_core::{
    bucketize, compare_runs, cross_review, curriculum_train, evaluate, generate_synthetic, parse_tacred_json,
    read_jsonl, render_table, reverse_buckets, stratified_split, train, write_jsonl, write_tacred_json, Checkpoint,
    Corpus, CurriculumSchedule, FoldAssignment, OptimConfig, RunReport, SyntheticSpec,
};
use serde_json::{json, Map, Value};

use crate::artifacts::{self, write_atomic, write_json};
use crate::config::{load_config, Arm, ExperimentConfig, DEFAULT_OUT_DIR, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "curre", version, about = "Cross-review curriculum training for relation extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub folds: Option<usize>,
    #[arg(long, global = true, value_name = "K")]
    pub buckets: Option<usize>,
    #[arg(long, global = true, value_enum, value_name = "NAME")]
    pub arm: Option<Arm>,
    /// Output directory [default: $CURRE_OUT_DIR or ./curre-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic training corpus with planted tiers and a clean test corpus.
    GenSynth,
    /// Split the training corpus into stratified folds.
    Split,
    /// Train one sub-model per fold and score every instance's difficulty.
    CrossReview,
    /// Cut difficulty records into equal-count buckets and write the schedule.
    Bucketize,
    /// Train the final model for one arm.
    Train,
    /// Evaluate an arm's checkpoint on the test corpus.
    Eval,
    /// Compare reports across arms and seeds.
    Report {
        /// Directories holding `report-*.json` [default: the output directory].
        runs: Vec<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenSynth => "gen-synth",
            Command::Split => "split",
            Command::CrossReview => "cross-review",
            Command::Bucketize => "bucketize",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Report { .. } => "report",
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code: 0 on
/// success, 1 on a validation or I/O error, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let name = cli.command.name();
    match execute(&cli) {
        Ok(fields) => {
            let mut line = Map::new();
            line.insert("command".into(), name.into());
            line.insert("status".into(), "ok".into());
            line.extend(fields);
            println!("{}", Value::Object(line));
            0
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            println!("{}", json!({ "command": name, "status": "error", "message": format!("{e:#}") }));
            1
        }
    }
}

/// Resolved config and output directory for one invocation.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

impl RunContext {
    pub fn new(common: &CommonArgs) -> anyhow::Result<Self> {
        let mut config = match &common.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = common.seed {
            config.seed = seed;
        }
        if let Some(folds) = common.folds {
            config.folds = folds;
        }
        if let Some(buckets) = common.buckets {
            config.buckets = buckets;
        }
        if let Some(arm) = common.arm {
            config.arm = arm;
        }
        config.validate()?;
        let out = common
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(Self { config, out })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn train_path(&self) -> PathBuf {
        self.config.data.train.clone().unwrap_or_else(|| self.path(artifacts::TRAIN))
    }

    pub fn test_path(&self) -> PathBuf {
        self.config.data.test.clone().unwrap_or_else(|| self.path(artifacts::TEST))
    }

    pub fn load_train(&self) -> anyhow::Result<Corpus> {
        load_corpus(&self.train_path(), "data.train")
    }
}

fn load_corpus(path: &Path, field: &str) -> anyhow::Result<Corpus> {
    let bytes = artifacts::read(path).with_context(|| format!("`{field}`"))?;
    parse_tacred_json(&bytes).with_context(|| format!("`{field}` ({})", path.display()))
}

fn execute(cli: &Cli) -> anyhow::Result<Map<String, Value>> {
    let ctx = RunContext::new(&cli.common)?;
    let fields = match &cli.command {
        Command::GenSynth => gen_synth(&ctx)?,
        Command::Split => split(&ctx)?,
        Command::CrossReview => run_cross_review(&ctx)?,
        Command::Bucketize => run_bucketize(&ctx)?,
        Command::Train => run_train(&ctx)?,
        Command::Eval => run_eval(&ctx)?,
        Command::Report { runs } => report(&ctx, runs)?,
    };
    match fields {
        Value::Object(map) => Ok(map),
        _ => unreachable!("summaries are objects"),
    }
}

/// The clean test corpus paired with a training spec: half the size, its
/// own seed, and the noisy share dropped with easy/hard renormalised.
pub fn held_out_spec(train: &SyntheticSpec) -> SyntheticSpec {
    let [easy, hard, _] = train.tier_fractions;
    let fractions = if easy + hard > 0.0 { [easy / (easy + hard), hard / (easy + hard), 0.0] } else { [1.0, 0.0, 0.0] };
    SyntheticSpec {
        num_instances: (train.num_instances / 2).max(1),
        tier_fractions: fractions,
        seed: derive_seed(train.seed, "synth-test"),
        ..train.clone()
    }
}

fn gen_synth(ctx: &RunContext) -> anyhow::Result<Value> {
    let spec = SyntheticSpec { seed: ctx.config.seed, ..ctx.config.data.synthetic.clone() };
    let train = generate_synthetic(&spec)?;
    let test = generate_synthetic(&held_out_spec(&spec))?;
    write_atomic(&ctx.path(artifacts::TRAIN), &write_tacred_json(&train.corpus.instances)?)?;
    write_atomic(&ctx.path(artifacts::TEST), &write_tacred_json(&test.corpus.instances)?)?;
    write_json(&ctx.path(artifacts::TIERS), &train.tier_of)?;
    let counts = spec.tier_counts();
    Ok(json!({
        "out": ctx.out,
        "artifacts": [artifacts::TRAIN, artifacts::TEST, artifacts::TIERS],
        "train_instances": train.corpus.len(),
        "test_instances": test.corpus.len(),
        "tiers": { "easy": counts[0], "hard": counts[1], "noisy": counts[2] },
    }))
}

fn split(ctx: &RunContext) -> anyhow::Result<Value> {
    let corpus = ctx.load_train()?;
    let folds = stratified_split(&corpus, ctx.config.folds, ctx.config.seed)?;
    write_json(&ctx.path(artifacts::FOLDS), &folds)?;
    let sizes: Vec<usize> = folds.members(&corpus)?.iter().map(Vec::len).collect();
    Ok(json!({ "out": ctx.out, "artifacts": [artifacts::FOLDS], "fold_sizes": sizes }))
}

fn run_cross_review(ctx: &RunContext) -> anyhow::Result<Value> {
    let corpus = ctx.load_train()?;
    let folds: FoldAssignment = artifacts::read_json(&ctx.path(artifacts::FOLDS))?;
    let mc = ctx.config.model.with_labels(corpus.vocab.len());
    let start = Instant::now();
    let records = cross_review(&corpus, &folds, &mc, &ctx.config.optim, ctx.config.seed)?;
    write_atomic(&ctx.path(artifacts::DIFFICULTY), &write_jsonl(&records)?)?;
    let mean = records.iter().map(|r| r.difficulty).sum::<f64>() / records.len() as f64;
    Ok(json!({
        "out": ctx.out,
        "artifacts": [artifacts::DIFFICULTY],
        "instances": records.len(),
        "folds": folds.num_folds,
        "mean_difficulty": mean,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
    }))
}

fn run_bucketize(ctx: &RunContext) -> anyhow::Result<Value> {
    let records = read_jsonl(&artifacts::read(&ctx.path(artifacts::DIFFICULTY))?)?;
    let bucketing = bucketize(&records, ctx.config.buckets)?;
    let schedule = ctx.config.schedule()?;
    write_atomic(&ctx.path(artifacts::BUCKETS), &write_jsonl(&bucketing.records)?)?;
    write_json(&ctx.path(artifacts::SCHEDULE), &schedule)?;
    let mut sizes = vec![0usize; ctx.config.buckets];
    for r in &bucketing.records {
        sizes[r.bucket.expect("bucketize assigns every record")] += 1;
    }
    Ok(json!({
        "out": ctx.out,
        "artifacts": [artifacts::BUCKETS, artifacts::SCHEDULE],
        "bucket_sizes": sizes,
        "boundaries": bucketing.boundaries,
        "total_epochs": schedule.total_epochs(),
    }))
}

fn run_train(ctx: &RunContext) -> anyhow::Result<Value> {
    let corpus = ctx.load_train()?;
    let config = &ctx.config;
    let arm = config.arm;
    let mc = config.model.with_labels(corpus.vocab.len());
    let schedule = config.schedule()?;
    let start = Instant::now();
    let (params, stage_losses) = match arm {
        Arm::ShuffledBaseline => {
            let oc = OptimConfig { epochs: schedule.total_epochs(), ..config.optim.clone() };
            let outcome = train(&corpus, &mc, &oc, config.seed)?;
            (outcome.params, vec![outcome.loss_history])
        }
        Arm::Curriculum | Arm::AntiCurriculum => {
            let stored: CurriculumSchedule = artifacts::read_json(&ctx.path(artifacts::SCHEDULE))?;
            if stored != schedule {
                bail!(
                    "`{}` was built for {} buckets and a different schedule than the config ({} buckets); \
                     rerun bucketize",
                    artifacts::SCHEDULE,
                    stored.num_buckets,
                    schedule.num_buckets
                );
            }
            let mut records = read_jsonl(&artifacts::read(&ctx.path(artifacts::BUCKETS))?)?;
            if arm == Arm::AntiCurriculum {
                records = reverse_buckets(&records, schedule.num_buckets);
            }
            let outcome =
                curriculum_train(&corpus, &records, &schedule, &mc, &config.optim, config.seed, &config.curriculum)?;
            (outcome.params, outcome.stage_losses)
        }
    };
    let seeds = BTreeMap::from([("master".to_owned(), config.seed)]);
    let checkpoint = Checkpoint::new(&mc, &corpus.vocab, &params, seeds);
    write_atomic(&ctx.path(&artifacts::checkpoint(arm.name())), &checkpoint.to_json()?)?;
    write_json(&ctx.path(&artifacts::losses(arm.name())), &stage_losses)?;
    let final_loss = stage_losses.iter().flatten().last().copied();
    Ok(json!({
        "out": ctx.out,
        "artifacts": [artifacts::checkpoint(arm.name()), artifacts::losses(arm.name())],
        "arm": arm.name(),
        "seed": config.seed,
        "epochs": schedule.total_epochs(),
        "final_loss": final_loss,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
    }))
}

fn run_eval(ctx: &RunContext) -> anyhow::Result<Value> {
    let arm = ctx.config.arm.name();
    let start = Instant::now();
    let checkpoint = Checkpoint::from_json(&artifacts::read(&ctx.path(&artifacts::checkpoint(arm)))?)?;
    let params = checkpoint.params()?;
    let test = load_corpus(&ctx.test_path(), "data.test")?;
    let test =
        Corpus::new(test.instances, checkpoint.labels.clone()).context("`data.test` against the model's labels")?;
    let stage_losses: Vec<Vec<f64>> = artifacts::read_json(&ctx.path(&artifacts::losses(arm)))?;
    let (gold, predicted, metrics) = evaluate(&params, &test, &checkpoint.config)?;
    let report = RunReport {
        run_id: format!("{arm}-seed{}", ctx.config.seed),
        arm: arm.to_owned(),
        config_digest: ctx.config.digest(),
        seed: ctx.config.seed,
        stage_losses,
        metrics,
        negative_label: test.vocab.negative_label().to_owned(),
        gold,
        predicted,
        wall_clock_seconds: None,
    };
    write_json(&ctx.path(&artifacts::report(arm)), &report)?;
    Ok(json!({
        "out": ctx.out,
        "artifacts": [artifacts::report(arm)],
        "arm": arm,
        "seed": ctx.config.seed,
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
    }))
}

fn report(ctx: &RunContext, runs: &[PathBuf]) -> anyhow::Result<Value> {
    let dirs = if runs.is_empty() { vec![ctx.out.clone()] } else { runs.to_vec() };
    let mut reports = Vec::new();
    for dir in &dirs {
        for path in artifacts::find_reports(dir)? {
            reports.push(artifacts::read_json::<RunReport>(&path)?);
        }
    }
    if reports.is_empty() {
        bail!(
            "no report-*.json found in {}",
            dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>().join(", ")
        );
    }
    let arms: Vec<String> = reports.iter().map(|r| r.arm.clone()).collect();
    let comparison = compare_runs(&reports, &arms)?;
    write_json(&ctx.path(artifacts::COMPARISON), &comparison)?;
    write_atomic(&ctx.path(artifacts::COMPARISON_TABLE), render_table(&comparison).as_bytes())?;
    let mean_f1: BTreeMap<&str, f64> = comparison.arms.iter().map(|a| (a.arm.as_str(), a.mean_f1)).collect();
    Ok(json!({
        "out": ctx.out,
        "artifacts": [artifacts::COMPARISON, artifacts::COMPARISON_TABLE],
        "reports": reports.len(),
        "baseline": comparison.baseline,
        "mean_f1": mean_f1,
    }))
}
