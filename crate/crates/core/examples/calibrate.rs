//! Sweeps the distance threshold and lambda on the desk-scale synthetic
//! benchmark and prints, per setting and strategy, the mean increments needed
//! to label every class and the mean average incremental accuracy.
//!
//! cargo run --release -p curiosity-core --example calibrate -- [D...]

use std::collections::BTreeSet;

use curiosity_core::classifier::TrainConfig;
use curiosity_core::dataset::SynthConfig;
use curiosity_core::harness::{aggregate, run_prepared, DataSource, Experiment, ExperimentConfig, SynthSource};
use curiosity_core::sampler::{StrategyConfig, StrategyKind};

fn env<T: std::str::FromStr>(name: &str) -> Option<T> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn main() -> curiosity_core::Result<()> {
    let thresholds: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("threshold"))
        .collect();
    let thresholds = if thresholds.is_empty() {
        vec![1.0, 1.5, 2.0, 3.0, 4.0]
    } else {
        thresholds
    };
    let source = DataSource::Synth(SynthSource {
        config: SynthConfig {
            class_center_rank: env("RANK").or(Some(12)),
            intra_class_spread: env("INTRA").unwrap_or(0.35),
            ..SynthConfig::desk_benchmark()
        },
        seed: env("DATA_SEED").unwrap_or(0),
    });
    for &d in &thresholds {
        for lambda in [0.7] {
            let mut cfg = ExperimentConfig::new(source.clone(), BTreeSet::from([4]));
            cfg.distance_threshold = d;
            if let Some(base) = env::<u64>("SEED_BASE") {
                cfg.seeds = (base..base + 5).collect();
            }
            cfg.train = TrainConfig {
                epochs: 40,
                learning_rate: std::env::var("LR").ok().and_then(|v| v.parse().ok()).unwrap_or(0.01),
                batch_size: 64,
                seed: 0,
            };
            cfg.strategies = [StrategyKind::Curiosity, StrategyKind::Softmax, StrategyKind::Random]
                .into_iter()
                .map(|k| StrategyConfig {
                    lambda,
                    ..StrategyConfig::new(k)
                })
                .collect();
            let exp = Experiment::<f32>::prepare(&cfg)?;
            let logs = run_prepared(&exp)?;
            for curve in aggregate(&logs) {
                println!(
                    "D={d:<4} lambda={lambda:<3} {:<15} to_all={:?} mean={:?} aia={:.4}",
                    curve.strategy,
                    curve.increments_to_all_classes,
                    curve.increments_to_all_classes_mean,
                    curve.average_incremental_accuracy_mean.unwrap_or(f64::NAN),
                );
            }
        }
    }
    Ok(())
}
