//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs under `cargo test`; `cargo test --test acceptance`
//! runs it alone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use curiosity_core::aggvar::{Centroid, ModelStore};
use curiosity_core::classifier::{LinearClassifier, TrainConfig};
use curiosity_core::dataset::{
    decode_feature_pack, encode_feature_pack, read_feature_pack, synth_generate,
    write_feature_pack, Dataset, FeatureVector, SynthConfig,
};
use curiosity_core::harness::{
    aggregate, run_suite, DataSource, ExperimentConfig, MetricsLog, SynthSource,
};
use curiosity_core::rehearsal::{build_rehearsal_set, sample_pseudo_exemplars, LabeledExample};
use curiosity_core::rng::seeded;
use curiosity_core::sampler::{curiosity_score, curiosity_value, StrategyConfig, StrategyKind};
use rand::Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn fv(v: Vec<f64>) -> FeatureVector<f64> {
    FeatureVector::new(v).unwrap()
}

fn gauss(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn aggvar_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(1);
    let mut centroids = 0usize;
    for seq in 0..1000 {
        let d = rng.random_range(1..=16);
        let n = rng.random_range(1..=200);
        let threshold = [0.0, 0.5, 1.0, 2.0, 4.0, 1e9][seq % 6] * rng.random_range(0.5..1.5);
        let mut store = ModelStore::new(d, threshold).unwrap();
        let mut members: HashMap<(u32, usize), Vec<Vec<f64>>> = HashMap::new();
        for _ in 0..n {
            let class = rng.random_range(0..3u32);
            let x: Vec<f64> = (0..d).map(|_| 3.0 * gauss(&mut rng)).collect();
            let a = store.insert(class, &fv(x.clone())).unwrap();
            members.entry((a.class_id, a.centroid_index)).or_default().push(x);
        }
        for ((class, idx), xs) in &members {
            let c = &store.model(*class).unwrap().centroids()[*idx];
            ensure!(c.count() == xs.len(), "sequence {seq}: count {} vs {}", c.count(), xs.len());
            let var = c.variance();
            for t in 0..d {
                let m = xs.iter().map(|x| x[t]).sum::<f64>() / xs.len() as f64;
                let v = if xs.len() > 1 {
                    xs.iter().map(|x| (x[t] - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
                } else {
                    0.0
                };
                ensure!((c.mean()[t] - m).abs() <= 1e-5, "sequence {seq}: mean off");
                ensure!((var[t] - v).abs() <= 1e-5, "sequence {seq}: variance off");
            }
        }
        centroids += members.len();
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(10), "took {took:?}");
    Ok(format!("1000 sequences, {centroids} centroids checked in {took:.2?}"))
}

fn threshold_extremes() -> Outcome {
    let mut rng = seeded(2);
    let mut wide = ModelStore::new(6, 1e9).unwrap();
    let mut zero = ModelStore::new(6, 0.0).unwrap();
    let n = 300;
    for i in 0..n {
        let class = (i % 4) as u32;
        let x = fv((0..6).map(|_| 10.0 * gauss(&mut rng)).collect());
        wide.insert(class, &x).unwrap();
        zero.insert(class, &x).unwrap();
    }
    ensure!(wide.num_classes() == 4 && wide.num_centroids() == 4, "D=1e9 gave {} centroids", wide.num_centroids());
    ensure!(zero.num_centroids() == n, "D=0 gave {} centroids", zero.num_centroids());
    Ok(format!("D=1e9: 4 centroids for 4 classes; D=0: {n} centroids for {n} vectors"))
}

fn rehearsal_counts_and_moments() -> Outcome {
    let mut rng = seeded(3);
    let mut store = ModelStore::new(5, 2.0).unwrap();
    let mut totals = BTreeMap::new();
    for _ in 0..500 {
        let class = rng.random_range(0..7u32);
        store.insert(class, &fv((0..5).map(|_| 2.0 * gauss(&mut rng)).collect())).unwrap();
        *totals.entry(class).or_insert(0usize) += 1;
    }
    let mut counts = BTreeMap::new();
    for e in build_rehearsal_set(&store, &mut seeded(4)) {
        *counts.entry(e.label).or_insert(0usize) += 1;
    }
    ensure!(counts == totals, "pseudo counts {counts:?} vs {totals:?}");

    let n = 10_000usize;
    let mean = [1.5, -3.0, 0.0, 10.0];
    let var = [0.25, 4.0, 1.0, 9.0];
    let m2 = var.iter().map(|v| v * (n - 1) as f64).collect();
    let c = Centroid::from_parts(mean.to_vec(), m2, n).unwrap();
    let draws = sample_pseudo_exemplars(&c, &mut seeded(5));
    ensure!(draws.len() == n, "{} draws", draws.len());
    for t in 0..mean.len() {
        let xs: Vec<f64> = draws.iter().map(|d| d.as_slice()[t]).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        ensure!((m - mean[t]).abs() <= 3.0 * (var[t] / n as f64).sqrt(), "dim {t}: mean {m}");
        ensure!((v - var[t]).abs() <= 0.05 * var[t], "dim {t}: variance {v}");
    }
    Ok(format!("pseudo counts equal class totals over {} classes; 10000-draw moments in bounds", totals.len()))
}

fn gradient_error(seed: u64) -> f64 {
    let mut rng = seeded(100 + seed);
    let d = rng.random_range(1..=8);
    let n = rng.random_range(2..=4u32);
    let w: Vec<f64> = (0..n as usize * d).map(|_| gauss(&mut rng)).collect();
    let b: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
    let data: Vec<_> = (0..8)
        .map(|i| LabeledExample::real(fv((0..d).map(|_| gauss(&mut rng)).collect()), i % n))
        .collect();
    let loss = |w: &[f64], b: &[f64]| {
        LinearClassifier::from_parts((0..n).collect(), d, w.to_vec(), b.to_vec())
            .unwrap()
            .loss_and_gradient(&data)
            .unwrap()
            .0
    };
    let clf = LinearClassifier::from_parts((0..n).collect(), d, w.clone(), b.clone()).unwrap();
    let (_, g) = clf.loss_and_gradient(&data).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let rel = |a: f64, num: f64| (a - num).abs() / (a.abs() + num.abs()).max(1e-8);
    for i in 0..w.len() {
        let (mut p, mut m) = (w.clone(), w.clone());
        p[i] += h;
        m[i] -= h;
        worst = worst.max(rel(g.weights[i], (loss(&p, &b) - loss(&m, &b)) / (2.0 * h)));
    }
    for i in 0..b.len() {
        let (mut p, mut m) = (b.clone(), b.clone());
        p[i] += h;
        m[i] -= h;
        worst = worst.max(rel(g.biases[i], (loss(&w, &p) - loss(&w, &m)) / (2.0 * h)));
    }
    worst
}

fn classifier_gradient_and_blobs() -> Outcome {
    let worst = (0..20).map(gradient_error).fold(0.0, f64::max);
    ensure!(worst < 1e-4, "relative gradient error {worst:e}");

    let centers = [[6.0, 0.0, 0.0], [0.0, 6.0, 0.0], [-5.0, -5.0, 3.0]];
    let mut rng = seeded(6);
    let data: Vec<_> = (0..150)
        .map(|i| {
            let c = centers[i % 3];
            LabeledExample::real(fv(c.iter().map(|m| m + 0.5 * gauss(&mut rng)).collect()), (i % 3) as u32)
        })
        .collect();
    let nearest_mean = |x: &[f64]| {
        (0..3)
            .min_by(|&a, &b| {
                let da: f64 = centers[a].iter().zip(x).map(|(m, v)| (m - v).powi(2)).sum();
                let db: f64 = centers[b].iter().zip(x).map(|(m, v)| (m - v).powi(2)).sum();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap() as u32
    };
    let oracle = data.iter().filter(|e| nearest_mean(e.features.as_slice()) == e.label).count();
    let cfg = TrainConfig { epochs: 50, ..TrainConfig::default() };
    let clf = LinearClassifier::train_dense(&data, 3, &cfg).unwrap();
    let learned = data.iter().filter(|e| clf.predict(&e.features).unwrap() == e.label).count();
    let (oracle, learned) = (oracle as f64 / 150.0, learned as f64 / 150.0);
    ensure!(oracle >= 0.99, "nearest-mean oracle {oracle}");
    ensure!(learned >= 0.99, "train accuracy {learned}");
    Ok(format!("max relative gradient error {worst:.2e} over 20 instances; blobs train accuracy {learned:.3}"))
}

fn curiosity_formula() -> Outcome {
    let mut rng = seeded(7);
    let mut checked = 0;
    for _ in 0..2000 {
        let d = rng.random_range(1..=6);
        let mut store = ModelStore::new(d, 1.0).unwrap();
        for _ in 0..rng.random_range(1..20) {
            let class = rng.random_range(0..4u32);
            store.insert(class, &fv((0..d).map(|_| 2.0 * gauss(&mut rng)).collect())).unwrap();
        }
        let views: Vec<_> = (0..rng.random_range(1..8))
            .map(|_| fv((0..d).map(|_| 3.0 * gauss(&mut rng)).collect()))
            .collect();
        let obj = curiosity_core::dataset::ObjectInstance { object_id: 0, class_id: 0, session_id: 0, views };
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let s = curiosity_score(&obj, &store, lambda).unwrap();
        let expected = lambda * s.q + (1.0 - lambda) * (1.0 / s.s_max as f64);
        ensure!(s.score - expected == 0.0, "A - formula = {:e}", s.score - expected);
        ensure!(s.votes.values().sum::<usize>() == obj.views.len(), "vote total");
        checked += 1;
    }

    let mut store = ModelStore::new(1, 0.5).unwrap();
    store.insert(0, &fv(vec![0.0])).unwrap();
    let object = |views: &[f64]| curiosity_core::dataset::ObjectInstance {
        object_id: 0,
        class_id: 0,
        session_id: 0,
        views: views.iter().map(|&v| fv(vec![v])).collect(),
    };
    let a = curiosity_score(&object(&[2.0, -4.0]), &store, 1.0).unwrap();
    ensure!(a.score == 3.0, "lambda=1 example gave {}", a.score);
    let b = curiosity_score(&object(&[0.1; 5]), &store, 0.0).unwrap();
    ensure!(b.s_max == 5 && b.score == 0.2, "lambda=0 example gave {}", b.score);
    let c = curiosity_score(&object(&[10.0, -10.0]), &store, 0.7).unwrap();
    ensure!(c.q == 10.0 && c.s_max == 2, "Q={} S_max={}", c.q, c.s_max);
    ensure!(c.score.to_bits() == curiosity_value(10.0f64, 2, 0.7).to_bits(), "not bit-identical");
    ensure!((c.score - 7.15).abs() < 1e-12, "7.15 example gave {}", c.score);
    Ok(format!("{checked} random objects exact; worked examples 3, 0.2, {}", c.score))
}

fn benchmark_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        DataSource::Synth(SynthSource { config: SynthConfig::desk_benchmark(), seed: 0 }),
        BTreeSet::from([4]),
    );
    cfg.strategies = [StrategyKind::Curiosity, StrategyKind::Softmax, StrategyKind::Random]
        .into_iter()
        .map(StrategyConfig::new)
        .collect();
    cfg.distance_threshold = 2.0;
    cfg
}

fn desk_scale_comparison() -> Outcome {
    let start = Instant::now();
    let cfg = benchmark_config();
    let logs: Vec<MetricsLog> = run_suite::<f32>(&cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let by_strategy = |name: &str| -> Result<Vec<usize>, String> {
        logs.iter()
            .filter(|l| l.strategy == name)
            .map(|l| l.increments_to_all_classes.ok_or(format!("{name} seed {} never saw all classes", l.seed)))
            .collect()
    };
    let cur = by_strategy("curiosity")?;
    let soft = by_strategy("softmax-lowest")?;
    let rand = by_strategy("random")?;
    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
    let (mc, ms, mr) = (mean(&cur), mean(&soft), mean(&rand));
    let curves = aggregate(&logs);
    let aia = |name: &str| {
        curves.iter().find(|c| c.strategy == name).and_then(|c| c.average_incremental_accuracy_mean).unwrap_or(f64::NAN)
    };
    let summary = format!(
        "increments to all classes curiosity {cur:?} ({mc:.1}), softmax-lowest {soft:?} ({ms:.1}), random {rand:?} ({mr:.1}); \
         accuracy curiosity {:.3} vs random {:.3}; {took:.1?}",
        aia("curiosity"),
        aia("random")
    );
    ensure!(mc <= ms && ms <= mr, "ordering violated: {summary}");
    ensure!(cur.iter().zip(&rand).all(|(c, r)| c <= r), "a seed is worse than random: {summary}");
    let strictly = cur.iter().zip(&rand).filter(|(c, r)| c < r).count();
    ensure!(strictly * 2 > cur.len(), "only {strictly} seeds strictly better: {summary}");
    ensure!(aia("curiosity") >= aia("random"), "accuracy: {summary}");
    ensure!(took < Duration::from_secs(120), "too slow: {summary}");
    Ok(summary)
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_curiosity"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pack = dir.path().join("bench.bin");
    cli(&[
        "synth", "--classes", "10", "--instances", "15", "--views", "5", "--dim", "32",
        "--sessions", "5", "--center-rank", "12", "--seed", "11", "--out", p(&pack),
    ])?;
    let mut outputs = Vec::new();
    for round in 0..2 {
        for fmt in ["csv", "json"] {
            let out = dir.path().join(format!("run{round}.{fmt}"));
            cli(&[
                "run", "--pack", p(&pack), "--test-sessions", "4", "--strategy", "curiosity,softmax,random",
                "--distance-threshold", "2", "--seeds", "1,2,3", "--format", fmt, "--out", p(&out),
            ])?;
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
    }
    ensure!(outputs[0] == outputs[2], "CSV differs between runs");
    ensure!(outputs[1] == outputs[3], "JSON differs between runs");
    let agg0 = std::fs::read(dir.path().join("run0.aggregate.csv")).map_err(|e| e.to_string())?;
    let agg1 = std::fs::read(dir.path().join("run1.aggregate.csv")).map_err(|e| e.to_string())?;
    ensure!(agg0 == agg1, "aggregate CSV differs between runs");
    Ok(format!("CSV ({} bytes) and JSON ({} bytes) identical across two runs", outputs[0].len(), outputs[1].len()))
}

fn set_u32(bytes: &mut [u8], at: usize, v: u32) {
    bytes[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

fn get_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn format_conformance() -> Outcome {
    let cfg = SynthConfig { sessions: 3, ..SynthConfig::desk_benchmark() };
    let ds: Dataset<f32> = synth_generate(&cfg, 12).unwrap();
    let bytes = encode_feature_pack(&ds);
    let back: Dataset<f32> = decode_feature_pack(&bytes).map_err(|e| e.to_string())?;
    ensure!(encode_feature_pack(&back) == bytes, "in-memory round trip differs");
    ensure!(back == ds, "decoded dataset differs");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = dir.path().join("a.bin");
    let second = dir.path().join("b.bin");
    write_feature_pack(&ds, &first).map_err(|e| e.to_string())?;
    let reread: Dataset<f32> = read_feature_pack(&first).map_err(|e| e.to_string())?;
    write_feature_pack(&reread, &second).map_err(|e| e.to_string())?;
    let a = std::fs::read(&first).unwrap();
    ensure!(a == std::fs::read(&second).unwrap(), "file round trip differs");
    cli(&["verify", "--pack", p(&first)])?;

    let d = get_u32(&a, 8);
    let rec_len = 16 + 4 * d as usize * get_u32(&a, 20 + 12) as usize;
    let mutations: Vec<(&str, Vec<u8>)> = vec![
        ("bad magic", { let mut m = a.clone(); m[0] = b'X'; m }),
        ("wrong format version", { let mut m = a.clone(); m[7] = b'9'; m }),
        ("empty file", Vec::new()),
        ("truncated header", a[..13].to_vec()),
        ("header only", a[..20].to_vec()),
        ("truncated inside a record", a[..20 + rec_len / 2].to_vec()),
        ("last byte missing", a[..a.len() - 1].to_vec()),
        ("zero dimension", { let mut m = a.clone(); set_u32(&mut m, 8, 0); m }),
        ("dimension too large", { let mut m = a.clone(); set_u32(&mut m, 8, d + 1); m }),
        ("dimension too small", { let mut m = a.clone(); set_u32(&mut m, 8, d - 1); m }),
        ("extra object declared", { let mut m = a.clone(); set_u32(&mut m, 16, get_u32(&a, 16) + 1); m }),
        ("trailing bytes", { let mut m = a.clone(); m.extend_from_slice(&[0, 0, 0, 0]); m }),
        ("image count zero", { let mut m = a.clone(); set_u32(&mut m, 20 + 12, 0); m }),
        ("NaN feature", { let mut m = a.clone(); m[36..40].copy_from_slice(&f32::NAN.to_le_bytes()); m }),
    ];
    let mut rejected = 0;
    for (name, bytes) in &mutations {
        let path = dir.path().join("mutant.bin");
        std::fs::write(&path, bytes).unwrap();
        ensure!(cli(&["verify", "--pack", p(&path)]).is_err(), "verify accepted mutation: {name}");
        rejected += 1;
    }
    Ok(format!("round trip byte-identical ({} bytes); verify rejected {rejected}/{} mutations", a.len(), mutations.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("centroid statistics are exact", aggvar_exactness),
        ("distance threshold extremes", threshold_extremes),
        ("pseudo-exemplar counts and moments", rehearsal_counts_and_moments),
        ("classifier gradient and separable blobs", classifier_gradient_and_blobs),
        ("curiosity score formula", curiosity_formula),
        ("strategy comparison on the synthetic benchmark", desk_scale_comparison),
        ("seeded runs are byte-identical", determinism),
        ("feature-pack format conformance", format_conformance),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
