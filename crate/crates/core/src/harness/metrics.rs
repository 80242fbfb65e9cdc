use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::ExperimentConfig;
use crate::aggvar::ClassStats;
use crate::dataset::{ClassId, ObjectId};
use crate::error::{Error, Result};
use crate::sampler::{CandidateScore, CuriosityScore, StrategyConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementRecord {
    pub increment: usize,
    pub test_accuracy: f64,
    pub classes_learned: usize,
    /// Cumulative oracle queries after this increment.
    pub labels_used: usize,
    pub selected_ids: Vec<ObjectId>,
    pub selected_classes: Vec<ClassId>,
    pub cold_start: bool,
    pub candidates: Vec<CandidateScore<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsLog {
    pub strategy: String,
    pub strategy_config: StrategyConfig,
    pub seed: u64,
    pub increments: Vec<IncrementRecord>,
    /// Mean of the recorded per-increment accuracies.
    pub average_incremental_accuracy: Option<f64>,
    /// 1-based increment at which every training class had been labeled.
    pub increments_to_all_classes: Option<usize>,
    pub increments_run: usize,
    pub total_labels: usize,
    pub final_classes: Vec<ClassStats>,
    pub config: ExperimentConfig,
}

impl MetricsLog {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        strategy: &StrategyConfig,
        seed: u64,
        config: &ExperimentConfig,
        increments: Vec<IncrementRecord>,
        increments_to_all_classes: Option<usize>,
        increments_run: usize,
        total_labels: usize,
        final_classes: Vec<ClassStats>,
    ) -> Self {
        let average_incremental_accuracy = (!increments.is_empty()).then(|| {
            increments.iter().map(|r| r.test_accuracy).sum::<f64>() / increments.len() as f64
        });
        MetricsLog {
            strategy: strategy.label(),
            strategy_config: *strategy,
            seed,
            increments,
            average_incremental_accuracy,
            increments_to_all_classes,
            increments_run,
            total_labels,
            final_classes,
            config: config.clone(),
        }
    }
}

pub(crate) fn widen_score<T: Scalar>(s: &CandidateScore<T>) -> CandidateScore<f64> {
    match s {
        CandidateScore::Curiosity(c) => CandidateScore::Curiosity(CuriosityScore {
            object_id: c.object_id,
            score: c.score.as_f64(),
            q: c.q.as_f64(),
            raw_q: c.raw_q.as_f64(),
            votes: c.votes.clone(),
            s_max: c.s_max,
        }),
        CandidateScore::Softmax {
            object_id,
            confidence,
        } => CandidateScore::Softmax {
            object_id: *object_id,
            confidence: confidence.as_f64(),
        },
        CandidateScore::Random { object_id } => CandidateScore::Random {
            object_id: *object_id,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregatePoint {
    pub increment: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub classes_mean: f64,
    pub classes_std: f64,
}

/// Across-seed summary for one strategy. Standard deviations are population
/// deviations, so a single seed reports zero spread.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCurve {
    pub strategy: String,
    pub seeds: Vec<u64>,
    pub points: Vec<AggregatePoint>,
    pub average_incremental_accuracy_mean: Option<f64>,
    pub average_incremental_accuracy_std: Option<f64>,
    pub increments_to_all_classes: Vec<Option<usize>>,
    /// Mean over seeds; `None` unless every seed learned every class.
    pub increments_to_all_classes_mean: Option<f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups logs by strategy (first-appearance order) and averages over seeds.
pub fn aggregate(logs: &[MetricsLog]) -> Vec<AggregateCurve> {
    let mut order: Vec<&str> = Vec::new();
    for l in logs {
        if !order.contains(&l.strategy.as_str()) {
            order.push(&l.strategy);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let runs: Vec<&MetricsLog> = logs.iter().filter(|l| l.strategy == name).collect();
            let len = runs.iter().map(|r| r.increments.len()).min().unwrap_or(0);
            let points = (0..len)
                .map(|i| {
                    let acc: Vec<f64> = runs.iter().map(|r| r.increments[i].test_accuracy).collect();
                    let cls: Vec<f64> = runs
                        .iter()
                        .map(|r| r.increments[i].classes_learned as f64)
                        .collect();
                    let (accuracy_mean, accuracy_std) = mean_std(&acc);
                    let (classes_mean, classes_std) = mean_std(&cls);
                    AggregatePoint {
                        increment: runs[0].increments[i].increment,
                        accuracy_mean,
                        accuracy_std,
                        classes_mean,
                        classes_std,
                    }
                })
                .collect();
            let aia: Option<Vec<f64>> = runs.iter().map(|r| r.average_incremental_accuracy).collect();
            let aia = aia.map(|v| mean_std(&v));
            let to_all: Vec<Option<usize>> = runs.iter().map(|r| r.increments_to_all_classes).collect();
            let to_all_mean = to_all
                .iter()
                .copied()
                .collect::<Option<Vec<usize>>>()
                .map(|v| v.iter().sum::<usize>() as f64 / v.len() as f64);
            AggregateCurve {
                strategy: name.to_string(),
                seeds: runs.iter().map(|r| r.seed).collect(),
                points,
                average_incremental_accuracy_mean: aia.map(|a| a.0),
                average_incremental_accuracy_std: aia.map(|a| a.1),
                increments_to_all_classes: to_all,
                increments_to_all_classes_mean: to_all_mean,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsFormat {
    Csv,
    Json,
}

impl FromStr for MetricsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MetricsFormat::Csv),
            "json" => Ok(MetricsFormat::Json),
            _ => Err(Error::validation(format!("unknown metrics format {s:?}"))),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a ExperimentConfig,
    runs: &'a [MetricsLog],
    aggregate: Vec<AggregateCurve>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn config_comment(w: &mut impl Write, cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    writeln!(w, "# config: {}", serde_json::to_string(cfg)?).map_err(|e| Error::io(path, e))
}

/// CSV: a `# config:` comment line, then one row per (strategy, seed,
/// increment). JSON: the config, every log with candidate scores, and the
/// per-strategy aggregate.
pub fn write_metrics(logs: &[MetricsLog], path: impl AsRef<Path>, format: MetricsFormat) -> Result<()> {
    let path = path.as_ref();
    let first = logs
        .first()
        .ok_or_else(|| Error::validation("no metrics to write"))?;
    let mut w = create(path)?;
    match format {
        MetricsFormat::Json => {
            let report = JsonReport {
                config: &first.config,
                runs: logs,
                aggregate: aggregate(logs),
            };
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w).map_err(|e| Error::io(path, e))?;
        }
        MetricsFormat::Csv => {
            config_comment(&mut w, &first.config, path)?;
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record([
                "strategy",
                "seed",
                "increment",
                "accuracy",
                "classes_learned",
                "selected_ids",
            ])?;
            for log in logs {
                for r in &log.increments {
                    let ids: Vec<String> = r.selected_ids.iter().map(u32::to_string).collect();
                    csv.write_record([
                        log.strategy.clone(),
                        log.seed.to_string(),
                        r.increment.to_string(),
                        r.test_accuracy.to_string(),
                        r.classes_learned.to_string(),
                        ids.join(";"),
                    ])?;
                }
            }
            csv.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-increment mean and standard deviation for each strategy, as CSV.
pub fn write_aggregate(logs: &[MetricsLog], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let first = logs
        .first()
        .ok_or_else(|| Error::validation("no metrics to write"))?;
    let mut w = create(path)?;
    config_comment(&mut w, &first.config, path)?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record([
        "strategy",
        "increment",
        "accuracy_mean",
        "accuracy_std",
        "classes_mean",
        "classes_std",
    ])?;
    for curve in aggregate(logs) {
        for p in &curve.points {
            csv.write_record([
                curve.strategy.clone(),
                p.increment.to_string(),
                p.accuracy_mean.to_string(),
                p.accuracy_std.to_string(),
                p.classes_mean.to_string(),
                p.classes_std.to_string(),
            ])?;
        }
    }
    csv.flush().map_err(|e| Error::io(path, e))?;
    drop(csv);
    w.flush().map_err(|e| Error::io(path, e))
}
