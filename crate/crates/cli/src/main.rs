//! `curiosity`: generate synthetic feature packs, run seeded curiosity /
//! softmax / random comparisons, and verify pack files.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O or format error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curiosity_core::aggvar::save_model;
use curiosity_core::classifier::TrainConfig;
use curiosity_core::dataset::{synth_generate, verify_pack, write_feature_pack, Dataset, SynthConfig};
use curiosity_core::harness::{
    aggregate, run_prepared_with_models, write_aggregate, write_metrics, DataSource, Experiment,
    ExperimentConfig, MetricsFormat, SynthSource,
};
use curiosity_core::sampler::{SoftmaxDirection, StrategyConfig, StrategyKind};
use curiosity_core::{Error, Result, Scalar};

#[derive(Parser)]
#[command(name = "curiosity", version, about = "Curiosity-driven online object learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic feature pack.
    Synth(SynthArgs),
    /// Run seeded experiments and write metrics.
    Run(Box<RunArgs>),
    /// Check a feature pack and print its counts.
    Verify {
        #[arg(long)]
        pack: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: u32,
    #[arg(long)]
    instances: u32,
    #[arg(long)]
    views: u32,
    #[arg(long)]
    dim: u32,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    sessions: u32,
    #[arg(long, default_value_t = 1.0)]
    class_spread: f64,
    #[arg(long, default_value_t = 0.35)]
    intra_spread: f64,
    #[arg(long, default_value_t = 0.15)]
    view_noise: f64,
    /// Rank of the subspace holding class centers (default: isotropic).
    #[arg(long)]
    center_rank: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "synth_config", required_unless_present = "synth_config")]
    pack: Option<PathBuf>,
    /// JSON file with synthetic-data parameters and an optional `seed`.
    #[arg(long)]
    synth_config: Option<PathBuf>,
    /// One or more of curiosity, softmax, random (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "curiosity")]
    strategy: Vec<String>,
    #[arg(long, default_value_t = 0.7)]
    lambda: f64,
    #[arg(long, default_value_t = 17.5)]
    distance_threshold: f64,
    #[arg(long, default_value_t = 5)]
    batch_m: usize,
    #[arg(long, default_value_t = 1)]
    budget_k: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 50)]
    report_increments: usize,
    #[arg(long)]
    max_increments: Option<usize>,
    /// Test sessions (default: 3,7,10 for packs, the last session for synthetic data).
    #[arg(long, value_delimiter = ',')]
    test_sessions: Option<Vec<u32>>,
    #[arg(long, default_value = "lowest")]
    softmax_select: String,
    #[arg(long)]
    normalize_q: bool,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value = "metrics.csv")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    save_model: Option<PathBuf>,
    #[arg(long)]
    load_model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
}

fn synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        num_classes: args.classes,
        instances_per_class: args.instances,
        views_per_instance: args.views,
        dimension: args.dim,
        class_center_spread: args.class_spread,
        intra_class_spread: args.intra_spread,
        view_noise: args.view_noise,
        sessions: args.sessions,
        class_center_rank: args.center_rank,
    };
    let ds: Dataset<f32> = synth_generate(&cfg, args.seed)?;
    write_feature_pack(&ds, &args.out)?;
    println!(
        "wrote {}: {} objects, {} images, d = {}",
        args.out.display(),
        ds.len(),
        ds.num_views(),
        ds.dimension()
    );
    Ok(())
}

fn verify(pack: &Path) -> Result<()> {
    let s = verify_pack(pack)?;
    println!("dimension: {}", s.dimension);
    println!("classes: {}", s.num_classes);
    println!("objects: {}", s.num_objects);
    println!("images: {}", s.num_images);
    println!("sessions: {:?}", s.sessions);
    for (class, n) in &s.objects_per_class {
        println!("class {class}: {n} objects");
    }
    Ok(())
}

fn experiment_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let (source, default_test) = match (&args.pack, &args.synth_config) {
        (Some(pack), None) => (DataSource::Pack(pack.clone()), BTreeSet::from([3, 7, 10])),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let synth: SynthSource = serde_json::from_str(&text)?;
            let last = synth.config.sessions.saturating_sub(1);
            (DataSource::Synth(synth), BTreeSet::from([last]))
        }
        _ => return Err(Error::Validation("exactly one of --pack, --synth-config".into())),
    };
    let direction: SoftmaxDirection = args.softmax_select.parse()?;
    let strategies = args
        .strategy
        .iter()
        .map(|s| {
            Ok(StrategyConfig {
                kind: s.parse::<StrategyKind>()?,
                lambda: args.lambda,
                k: args.budget_k,
                softmax_direction: direction,
                normalize_q: args.normalize_q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = ExperimentConfig::new(
        source,
        args.test_sessions
            .as_ref()
            .map_or(default_test, |v| v.iter().copied().collect()),
    );
    cfg.strategies = strategies;
    cfg.distance_threshold = args.distance_threshold;
    cfg.batch_m = args.batch_m;
    cfg.increments_to_report = args.report_increments;
    cfg.max_increments = args.max_increments;
    cfg.seeds = args.seeds.clone();
    cfg.train = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        batch_size: args.batch_size,
        seed: 0,
    };
    cfg.initial_model = args.load_model.clone();
    Ok(cfg)
}

/// `metrics.csv` -> `metrics.aggregate.csv`
fn aggregate_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}.aggregate.csv"))
}

fn model_path(base: &Path, strategy: &str, seed: u64, single: bool) -> PathBuf {
    if single {
        return base.to_path_buf();
    }
    let stem = base.file_stem().unwrap_or_default().to_string_lossy();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-{strategy}-seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{strategy}-seed{seed}"),
    };
    base.with_file_name(name)
}

fn run<T: Scalar>(args: &RunArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    let exp = Experiment::<T>::prepare(&cfg)?;
    let results = run_prepared_with_models(&exp)?;
    if let Some(base) = &args.save_model {
        let single = results.len() == 1;
        for (log, store) in &results {
            save_model(store, model_path(base, &log.strategy, log.seed, single))?;
        }
    }
    let logs: Vec<_> = results.into_iter().map(|(log, _)| log).collect();
    match args.format {
        Format::Csv => {
            write_metrics(&logs, &args.out, MetricsFormat::Csv)?;
            write_aggregate(&logs, aggregate_path(&args.out))?;
        }
        Format::Json => write_metrics(&logs, &args.out, MetricsFormat::Json)?,
    }
    for curve in aggregate(&logs) {
        let to_all: Vec<String> = curve
            .increments_to_all_classes
            .iter()
            .map(|v| v.map_or("-".to_string(), |n| n.to_string()))
            .collect();
        println!(
            "{:<16} avg incremental accuracy {:.4} (std {:.4}), increments to all classes [{}]",
            curve.strategy,
            curve.average_incremental_accuracy_mean.unwrap_or(f64::NAN),
            curve.average_incremental_accuracy_std.unwrap_or(f64::NAN),
            to_all.join(", ")
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Synth(args) => synth(args),
        Command::Run(args) => match args.precision {
            Precision::F32 => run::<f32>(args),
            Precision::F64 => run::<f64>(args),
        },
        Command::Verify { pack } => verify(pack),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
