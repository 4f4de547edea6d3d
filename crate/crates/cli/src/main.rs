//! Batch-experiment driver: corpus generation, pretraining, the iterative
//! co-training loop, theory checks, and checkpoint evaluation.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

mod config;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use friendtrain::datagen::{generate_corpus, WorldConfig};
use friendtrain::models::{
    checkpoint_from_json, checkpoint_to_json, task_a_gold_targets, derive_rewrite_targets,
    train_a_epochs, train_b_epochs, FeatureSpace, LinearModel, SeqTargets, TaskATargets,
    TaskKind, TrainConfig,
};
use friendtrain::theory::{
    closed_form, monte_carlo_with, sweep, TheoryParams, TranslationNoise,
};
use friendtrain::train_loop::{self, evaluate_task_a, evaluate_task_b, Mode};
use friendtrain::Instance;

use config::{load_run_config, RunOverrides};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

#[derive(Parser)]
#[command(
    name = "friendtrain",
    version,
    about = "Cross-task self-training laboratory on a synthetic friend-task pair"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded synthetic corpus as JSON Lines.
    GenData(GenDataArgs),
    /// Train one task model on labeled data and write a checkpoint.
    Pretrain(PretrainArgs),
    /// Run the iterative co-training loop and write reports + checkpoints.
    Run(RunArgs),
    /// Closed-form and Monte Carlo selection error rates.
    Theory(TheoryArgs),
    /// Evaluate a checkpoint on a labeled corpus.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct WorldArgs {
    #[arg(long, default_value_t = WorldConfig::default().n_entities)]
    n_entities: usize,
    #[arg(long, default_value_t = WorldConfig::default().n_predicates)]
    n_predicates: usize,
    #[arg(long, default_value_t = WorldConfig::default().context_min)]
    context_min: usize,
    #[arg(long, default_value_t = WorldConfig::default().context_max)]
    context_max: usize,
    #[arg(long, default_value_t = WorldConfig::default().pronoun_rate)]
    pronoun_rate: f64,
    #[arg(long, default_value_t = WorldConfig::default().ellipsis_rate)]
    ellipsis_rate: f64,
    #[arg(long, default_value_t = WorldConfig::default().max_predicates_last)]
    max_predicates_last: usize,
}

impl WorldArgs {
    fn to_config(&self) -> WorldConfig {
        WorldConfig {
            n_entities: self.n_entities,
            n_predicates: self.n_predicates,
            context_min: self.context_min,
            context_max: self.context_max,
            pronoun_rate: self.pronoun_rate,
            ellipsis_rate: self.ellipsis_rate,
            max_predicates_last: self.max_predicates_last,
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    world: WorldArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    A,
    B,
}

#[derive(Args)]
struct PretrainArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    #[command(flatten)]
    world: WorldArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Friend,
    SelfTrain,
    FrozenFriendA,
    FrozenFriendB,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Friend => Mode::Friend,
            ModeArg::SelfTrain => Mode::SelfTrain,
            ModeArg::FrozenFriendA => Mode::FrozenFriendA,
            ModeArg::FrozenFriendB => Mode::FrozenFriendB,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    threshold_a: Option<f64>,
    #[arg(long)]
    threshold_b: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    IncludingGold,
    ExcludingGold,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    eta_a: f64,
    #[arg(long)]
    eta_b: f64,
    #[arg(long)]
    sigma: u64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid like "eta-a=0.3,0.5;eta-b=0.3;sigma=1,10,100,1000"; omitted
    /// dimensions use the scalar flags.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, value_enum, default_value_t = NoiseArg::IncludingGold)]
    noise: NoiseArg,
    /// Write the sweep table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::GenData(args) => gen_data(args),
        Cmd::Pretrain(args) => pretrain(args),
        Cmd::Run(args) => run(args),
        Cmd::Theory(args) => theory(args),
        Cmd::Evaluate(args) => evaluate(args),
    }
}

fn gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let cfg = args.world.to_config();
    let corpus =
        generate_corpus(args.seed, args.n, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    io::write_jsonl_atomic(&args.out, &corpus)?;
    println!("wrote {} instances to {}", corpus.len(), args.out.display());
    Ok(())
}

fn pretrain(args: PretrainArgs) -> Result<(), CliError> {
    let world = args.world.to_config();
    world
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let space = FeatureSpace::from_world(&world);
    let cfg = TrainConfig {
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        epochs_per_iteration: args.epochs,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let train_set = io::read_jsonl(&args.train)?;
    let dev_set = io::read_jsonl(&args.dev)?;
    let model = match args.task {
        TaskArg::A => {
            let targets: Vec<(&Instance, TaskATargets)> = train_set
                .iter()
                .map(|i| Ok((i, task_a_gold_targets(i)?)))
                .collect::<Result<_, friendtrain::CoreError>>()
                .context("task a training data")?;
            let (model, _) = train_a_epochs(
                LinearModel::zeros(TaskKind::A, space),
                &targets,
                &[],
                &cfg,
                args.seed,
            )?;
            let prf = evaluate_task_a(&model, &dev_set)?;
            println!(
                "dev precision={} recall={} f1={} (micro)",
                prf.precision, prf.recall, prf.f1
            );
            model
        }
        TaskArg::B => {
            let targets: Vec<(&Instance, SeqTargets)> = train_set
                .iter()
                .map(|i| {
                    let gold = i.gold_b.as_ref().ok_or_else(|| {
                        friendtrain::CoreError::InvalidInstance(format!(
                            "{}: missing gold_b",
                            i.id
                        ))
                    })?;
                    Ok((i, derive_rewrite_targets(i, gold)?))
                })
                .collect::<Result<_, friendtrain::CoreError>>()
                .context("task b training data")?;
            let (model, _) = train_b_epochs(
                LinearModel::zeros(TaskKind::B, space),
                &targets,
                &[],
                &cfg,
                args.seed,
            )?;
            let m = evaluate_task_b(&model, &dev_set)?;
            println!("dev wer={} rouge_l={} em={} (micro)", m.wer, m.rouge_l, m.em);
            model
        }
    };
    io::atomic_write(&args.out, checkpoint_to_json(&model).as_bytes())?;
    println!("wrote checkpoint {}", args.out.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let overrides = RunOverrides {
        seed: args.seed,
        max_iterations: args.max_iterations,
        threshold_a: args.threshold_a,
        threshold_b: args.threshold_b,
        alpha: args.alpha,
        beta: args.beta,
        lambda: args.lambda,
    };
    let cfg = load_run_config(&args.config, args.mode.into(), &overrides)?;

    let labeled_a = io::read_jsonl(&cfg.paths.labeled_a)?;
    let labeled_b = io::read_jsonl(&cfg.paths.labeled_b)?;
    let pool = io::read_jsonl(&cfg.paths.unlabeled)?;
    let dev_a = io::read_jsonl(&cfg.paths.dev_a)?;
    let dev_b = io::read_jsonl(&cfg.paths.dev_b)?;

    let space = FeatureSpace::from_world(&cfg.world);
    let outcome = train_loop::run(
        &labeled_a, &labeled_b, &pool, &dev_a, &dev_b, space, &cfg.loop_cfg, cfg.seed,
    )
    .map_err(|e| match e {
        friendtrain::CoreError::InvalidConfig(_)
        | friendtrain::CoreError::ConfigContradiction(_) => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.into()),
    })?;

    println!(
        "pretrain: dev_a f1={} dev_b em={}",
        outcome.pretrain_dev_a.f1, outcome.pretrain_dev_b.em
    );
    for rep in &outcome.reports {
        println!(
            "iter {}: selected a={}/{} b={}/{} pseudo_err a={:.4} b={:.4} dev f1={:.4} em={:.4}",
            rep.iteration,
            rep.selected_count_a,
            rep.pool_size,
            rep.selected_count_b,
            rep.pool_size,
            rep.oracle_pseudo_error_a,
            rep.oracle_pseudo_error_b,
            rep.dev_a.f1,
            rep.dev_b.em,
        );
    }

    let dir = &cfg.paths.report_dir;
    let csv = report::run_report_csv(&outcome, pool.len(), cfg.mode, cfg.seed);
    io::atomic_write(&dir.join("report.csv"), csv.as_bytes())?;
    io::atomic_write(
        &dir.join("model_a.json"),
        checkpoint_to_json(&outcome.model_a).as_bytes(),
    )?;
    io::atomic_write(
        &dir.join("model_b.json"),
        checkpoint_to_json(&outcome.model_b).as_bytes(),
    )?;
    let echo = serde_json::to_string_pretty(&cfg).expect("config always serializes");
    io::atomic_write(&dir.join("effective_config.json"), echo.as_bytes())?;
    println!("report written to {}", dir.display());
    Ok(())
}

fn theory(args: TheoryArgs) -> Result<(), CliError> {
    let noise = match args.noise {
        NoiseArg::IncludingGold => TranslationNoise::UniformIncludingGold,
        NoiseArg::ExcludingGold => TranslationNoise::UniformExcludingGold,
    };
    if let Some(grid_spec) = &args.sweep {
        let grid = parse_grid(grid_spec, args.eta_a, args.eta_b, args.sigma)?;
        let table =
            sweep(&grid, args.samples, args.seed).map_err(|e| CliError::Usage(e.to_string()))?;
        println!("eta_a\teta_b\tsigma\tclosed_error\tmc_error\tclosed_agree\tmc_agree");
        for row in &table.rows {
            println!(
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                row.params.eta_a,
                row.params.eta_b,
                row.params.sigma_size,
                row.closed.error_rate,
                row.mc.error_rate,
                row.closed.agreement_rate,
                row.mc.agreement_rate,
            );
        }
        println!(
            "monotone_in_sigma: {}",
            if table.monotone_in_sigma { "yes" } else { "no" }
        );
        if let Some(out) = &args.out {
            io::atomic_write(
                out,
                report::sweep_csv(&table, args.samples, args.seed).as_bytes(),
            )?;
            println!("sweep written to {}", out.display());
        }
    } else {
        let params = TheoryParams::new(args.eta_a, args.eta_b, args.sigma)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let cf = closed_form(&params).map_err(|e| CliError::Usage(e.to_string()))?;
        let mc = monte_carlo_with(&params, args.samples, args.seed, noise)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        println!(
            "closed_form: error_rate={:.6} agreement_rate={:.6} z={:.6} e={:.8}",
            cf.error_rate, cf.agreement_rate, cf.z, cf.e
        );
        println!(
            "monte_carlo: error_rate={:.6} agreement_rate={:.6} z={:.6} e={:.8} (n={}, seed={})",
            mc.error_rate, mc.agreement_rate, mc.z, mc.e, args.samples, args.seed
        );
    }
    Ok(())
}

fn parse_grid(
    spec: &str,
    eta_a: f64,
    eta_b: f64,
    sigma: u64,
) -> Result<Vec<TheoryParams>, CliError> {
    let bad = |msg: &str| CliError::Usage(format!("bad --sweep grid: {msg}"));
    let (mut etas_a, mut etas_b, mut sigmas) = (vec![eta_a], vec![eta_b], vec![sigma]);
    for dim in spec.split(';').filter(|s| !s.trim().is_empty()) {
        let (name, values) = dim
            .split_once('=')
            .ok_or_else(|| bad("expected name=v1,v2,..."))?;
        let values = values.trim();
        match name.trim() {
            "eta-a" | "eta_a" => {
                etas_a = parse_list(values).map_err(|e| bad(&e))?;
            }
            "eta-b" | "eta_b" => {
                etas_b = parse_list(values).map_err(|e| bad(&e))?;
            }
            "sigma" => {
                sigmas = values
                    .split(',')
                    .map(|v| v.trim().parse::<u64>().map_err(|e| bad(&e.to_string())))
                    .collect::<Result<_, _>>()?;
            }
            other => return Err(bad(&format!("unknown dimension {other:?}"))),
        }
    }
    let mut grid = Vec::new();
    for &ea in &etas_a {
        for &eb in &etas_b {
            for &s in &sigmas {
                grid.push(
                    TheoryParams::new(ea, eb, s).map_err(|e| CliError::Usage(e.to_string()))?,
                );
            }
        }
    }
    Ok(grid)
}

fn parse_list(values: &str) -> Result<Vec<f64>, String> {
    values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let json = std::fs::read_to_string(&args.ckpt)
        .with_context(|| format!("cannot read checkpoint {}", args.ckpt.display()))?;
    let model = checkpoint_from_json(&json)?;
    let expected = match args.task {
        TaskArg::A => TaskKind::A,
        TaskArg::B => TaskKind::B,
    };
    if model.task != expected {
        return Err(CliError::Usage(format!(
            "checkpoint {} holds a task {:?} model",
            args.ckpt.display(),
            model.task
        )));
    }
    let data = io::read_jsonl(&args.data)?;
    match args.task {
        TaskArg::A => {
            let prf = evaluate_task_a(&model, &data)?;
            println!(
                "precision={} recall={} f1={} (micro, n={})",
                prf.precision,
                prf.recall,
                prf.f1,
                data.len()
            );
        }
        TaskArg::B => {
            let m = evaluate_task_b(&model, &data)?;
            println!(
                "wer={} rouge_l={} em={} (micro, n={})",
                m.wer,
                m.rouge_l,
                m.em,
                data.len()
            );
        }
    }
    Ok(())
}
