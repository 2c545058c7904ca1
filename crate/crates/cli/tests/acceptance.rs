//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs with `cargo test --test acceptance` (custom harness, output is never
//! captured).

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dynsamp_cli::config::ExperimentConfig;
use dynsamp_cli::experiments::{self, Instance};
use dynsamp_cli::{ExperimentKind, ResolvedConfig};
use dynsamp_core::oracle::dense_least_squares;
use dynsamp_core::reconstruct::a3_operator;
use dynsamp_core::rng::stream_rng;
use dynsamp_core::tensor3::{bcirc_oracle, rel_error, tprod};
use dynsamp_core::{
    evolve, observe, random_operator, random_signal, reconstruct, Dims, Error, ReconstructOptions,
    SampleMask, Tensor3,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn reference_config(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        kind: Some(kind),
        m: Some(20),
        p: Some(15),
        n: Some(5),
        horizon: Some(5),
        seed: Some(1),
        ..Default::default()
    }
}

fn resolve(cfg: ExperimentConfig) -> ResolvedConfig {
    cfg.resolve().expect("valid acceptance config")
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn oracle_equivalence() -> Check {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let (m, p) = (1 + seed as usize % 5, 1 + (seed as usize / 5) % 4);
        let (q, n) = (1 + (seed as usize * 7) % 4, 1 + (seed as usize * 3) % 6);
        let a = Tensor3::random_normal(Dims::new(m, p, n), &mut stream_rng(seed, 100));
        let b = Tensor3::random_normal(Dims::new(p, q, n), &mut stream_rng(seed, 101));
        let fast = tprod(&a, &b).map_err(|e| e.to_string())?;
        let slow = bcirc_oracle(&a, &b).map_err(|e| e.to_string())?;
        worst =
            worst.max(fast.max_abs_diff(&slow).unwrap() / slow.max_abs().max(f64::MIN_POSITIVE));
    }
    let took = within(Duration::from_secs(1), started)?;
    let detail = format!("max relative entrywise error {worst:.2e} over 50 pairs in {took:.2?}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_recovery() -> Check {
    let started = Instant::now();
    let cfg = resolve(ExperimentConfig {
        alpha_grid: Some(vec![0.4]),
        trials: Some(10),
        ..reference_config(ExperimentKind::RecoveryVsAlpha)
    });
    // Fixed seed, strict realness, no zero-fill.
    let inst = Instance::draw(&cfg, cfg.seed);
    let mask = inst
        .bernoulli_mask(0.4, cfg.seed)
        .map_err(|e| e.to_string())?;
    let traj = evolve(&inst.operator, &inst.signal, 5).map_err(|e| e.to_string())?;
    let samples = observe(&traj, &mask, 0.0, cfg.seed).map_err(|e| e.to_string())?;
    let mut report = reconstruct(&inst.operator, &samples, &ReconstructOptions::default())
        .map_err(|e| e.to_string())?;
    let fixed = report.evaluate(&inst.signal).map_err(|e| e.to_string())?;

    let table =
        experiments::run(ExperimentKind::RecoveryVsAlpha, &cfg).map_err(|e| e.to_string())?;
    let (mean, std) = (table.rows[0][1].as_f64(), table.rows[0][2].as_f64());
    let took = within(Duration::from_secs(30), started)?;
    let detail =
        format!("seed-1 error {fixed:.2e}; 10-trial mean {mean:.2e}, std {std:.2e} in {took:.2?}");
    if fixed <= 1e-9 && mean <= 1e-9 && std <= mean {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pointwise_recovery() -> Check {
    let cfg = resolve(reference_config(ExperimentKind::PointwiseGap));
    let table = experiments::run(ExperimentKind::PointwiseGap, &cfg).map_err(|e| e.to_string())?;
    let gaps = table.column("abs_gap").unwrap();
    let norm = Instance::draw(&cfg, cfg.seed).signal.fro_norm();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "{} entries, max gap {worst:.2e}, bound {:.2e}",
        gaps.len(),
        1e-6 * norm
    );
    if gaps.len() == 1500 && worst <= 1e-6 * norm {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lattice_case() -> impl Strategy<Value = (usize, usize, usize, usize, Vec<bool>, usize, u64)> {
    (1usize..=6, 2usize..=6, 1usize..=5, 1usize..=4)
        .prop_flat_map(|(m, p, n, t)| {
            (
                Just(m),
                Just(p),
                Just(n),
                0..p,
                proptest::collection::vec(any::<bool>(), m),
                Just(t),
                any::<u64>(),
            )
        })
        .prop_map(|(m, p, n, j0, mut rows, t, seed)| {
            rows[seed as usize % m] = true;
            (m, p, n, j0, rows, t, seed)
        })
}

fn missing_column() -> Check {
    let mut runner = TestRunner::new_with_rng(
        RunnerConfig {
            cases: 128,
            failure_persistence: None,
            ..RunnerConfig::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(
            proptest::test_runner::RngAlgorithm::ChaCha,
        ),
    );
    let result = runner.run(&lattice_case(), |(m, p, n, j0, rows, horizon, seed)| {
        let dims = Dims::new(m, p, n);
        let rows: Vec<usize> = (0..m).filter(|&i| rows[i]).collect();
        let cols: Vec<usize> = (0..p).filter(|&j| j != j0).collect();
        let mask = SampleMask::lattice(dims, &rows, &cols).unwrap();
        prop_assert!(a3_operator(&mask, j0)
            .unwrap()
            .iter()
            .all(|z| z.re == 0.0 && z.im == 0.0));
        let a = random_operator(m, n, seed);
        let traj = evolve(&a, &random_signal(dims, seed), horizon).unwrap();
        let samples = observe(&traj, &mask, 0.0, seed).unwrap();
        match reconstruct(&a, &samples, &ReconstructOptions::default()) {
            Err(Error::UnrecoverableColumns { columns }) => prop_assert_eq!(columns, vec![j0]),
            other => prop_assert!(
                false,
                "expected unrecoverable column, got {:?}",
                other.map(|_| ())
            ),
        }
        let partial = ReconstructOptions {
            allow_partial: true,
            ..Default::default()
        };
        let report = reconstruct(&a, &samples, &partial).unwrap();
        prop_assert_eq!(report.failed_columns, vec![j0]);
        Ok(())
    });
    match result {
        Ok(()) => Ok("128 generated lattice masks: exactly the removed column is flagged, its A3 block is zero".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn slab_exclusion() -> Check {
    let started = Instant::now();
    let conj = resolve(reference_config(ExperimentKind::ConjectureDim2));
    let lateral =
        experiments::run(ExperimentKind::ConjectureDim2, &conj).map_err(|e| e.to_string())?;
    let lateral = lateral.column("rel_err").unwrap();
    let slab = resolve(reference_config(ExperimentKind::SlabDim1Dim3));
    let other = experiments::run(ExperimentKind::SlabDim1Dim3, &slab).map_err(|e| e.to_string())?;
    let other = other.column("rel_err").unwrap();
    let took = within(Duration::from_secs(300), started)?;
    let low = lateral.iter().copied().fold(f64::INFINITY, f64::min);
    let high = other.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "lateral slab removed (α={}): min error {low:.3} over {}; mode-1/3 slab removed (α={}): max error {high:.2e} over {} in {took:.2?}",
        conj.alpha,
        lateral.len(),
        slab.alpha,
        other.len()
    );
    if lateral.len() == 15 && other.len() == 25 && low > 0.1 && high <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn conditioning() -> Check {
    let cfg = resolve(ExperimentConfig {
        horizon_grid: Some((1..=15).collect()),
        ..reference_config(ExperimentKind::ConditionVsT)
    });
    let table = experiments::run(ExperimentKind::ConditionVsT, &cfg).map_err(|e| e.to_string())?;
    let k: BTreeMap<usize, f64> = table
        .rows
        .iter()
        .map(|r| (r[0].as_f64() as usize, r[1].as_f64()))
        .collect();
    let probes = [5, 8, 11, 14].map(|t| k[&t]);
    let monotone = probes.windows(2).all(|w| w[0] <= w[1]);
    let ratio = k[&15] / k[&5];
    let detail = format!(
        "K(5,8,11,14) = {:.2e}, {:.2e}, {:.2e}, {:.2e}; K(15)/K(5) = {ratio:.2e}",
        probes[0], probes[1], probes[2], probes[3]
    );
    if monotone && ratio > 1e3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn optimal_horizon() -> Check {
    let cfg = resolve(ExperimentConfig {
        alpha: Some(0.4),
        horizon_grid: Some((1..=15).collect()),
        sigma_grid: Some(vec![1e-3]),
        trials: Some(3),
        ..reference_config(ExperimentKind::OptimalT)
    });
    let table = experiments::run(ExperimentKind::OptimalT, &cfg).map_err(|e| e.to_string())?;
    let (best_t, best) = table
        .rows
        .iter()
        .map(|r| (r[0].as_f64() as usize, r[2].as_f64()))
        .fold(
            (0, f64::INFINITY),
            |acc, (t, e)| if e < acc.1 { (t, e) } else { acc },
        );
    let last = table.rows.last().unwrap()[2].as_f64();
    let detail =
        format!("T* = {best_t} (mean error {best:.2e} over 3 trials; T=15 gives {last:.2e})");
    if 1 < best_t && best_t < 15 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const DENSE_SHAPES: [(usize, usize, usize); 10] = [
    (2, 3, 4),
    (3, 2, 5),
    (4, 4, 3),
    (5, 3, 4),
    (3, 5, 2),
    (6, 2, 4),
    (2, 2, 6),
    (4, 5, 2),
    (8, 5, 5),
    (5, 4, 3),
];

fn dense_oracle() -> Check {
    let started = Instant::now();
    let (mut accepted, mut worst, mut seed) = (0, 0.0f64, 0u64);
    while accepted < 20 {
        if seed >= 60 {
            return Err(format!("only {accepted} full-rank instances in 60 draws"));
        }
        let (m, p, n) = DENSE_SHAPES[seed as usize % DENSE_SHAPES.len()];
        let dims = Dims::new(m, p, n);
        let a = random_operator(m, n, seed);
        let f = random_signal(dims, seed);
        let mask = SampleMask::bernoulli(dims, 0.5, seed).unwrap();
        let horizon = 3 + seed as usize % 3;
        let samples = observe(&evolve(&a, &f, horizon).unwrap(), &mask, 0.0, seed).unwrap();
        seed += 1;
        let dense = dense_least_squares(&a, &samples).map_err(|e| e.to_string())?;
        if !dense.full_column_rank() {
            continue;
        }
        let freq =
            reconstruct(&a, &samples, &ReconstructOptions::default()).map_err(|e| e.to_string())?;
        worst = worst.max(rel_error(&freq.estimate, &dense.estimate).map_err(|e| e.to_string())?);
        accepted += 1;
    }
    let took = within(Duration::from_secs(60), started)?;
    let detail = format!("20 full-rank instances (of {seed} drawn), max relative difference {worst:.2e} in {took:.2?}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn collect_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

const RUNS: &[&[&str]] = &[
    &["simulate", "--sigma", "1e-3", "--out", "data"],
    &["reconstruct", "--data", "data", "--out", "rec"],
    &[
        "experiment",
        "--kind",
        "recovery-vs-alpha",
        "--alpha",
        "0.2,0.4",
        "--trials",
        "2",
        "--out",
        "alpha",
    ],
    &[
        "experiment",
        "--kind",
        "pointwise-gap",
        "--m",
        "6",
        "--p",
        "4",
        "--n",
        "3",
        "--out",
        "gap",
    ],
    &[
        "experiment",
        "--kind",
        "optimal-T",
        "--m",
        "6",
        "--p",
        "4",
        "--n",
        "3",
        "--T",
        "1..6",
        "--sigma",
        "0,1e-3",
        "--trials",
        "2",
        "--out",
        "horizon",
    ],
    &[
        "experiment",
        "--kind",
        "condition-vs-T",
        "--T",
        "1..6",
        "--out",
        "cond",
    ],
    &[
        "experiment",
        "--kind",
        "conjecture-dim2",
        "--m",
        "6",
        "--p",
        "4",
        "--n",
        "3",
        "--out",
        "lateral",
    ],
    &[
        "experiment",
        "--kind",
        "slab-dim1-dim3",
        "--m",
        "6",
        "--p",
        "4",
        "--n",
        "3",
        "--out",
        "slab",
    ],
    &["plot", "alpha/recovery-vs-alpha.csv", "--out", "replot.svg"],
];

fn run_all(dir: &Path, threads: &str) -> Result<BTreeMap<String, Vec<u8>>, String> {
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    for args in RUNS {
        let status = Command::new(env!("CARGO_BIN_EXE_dynsamp"))
            .args(*args)
            .current_dir(dir)
            .env("DYNSAMP_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "`dynsamp {}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&status.stderr)
            ));
        }
    }
    Ok(collect_files(dir))
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_all(&tmp.path().join("t1"), "1")?;
    let again = run_all(&tmp.path().join("t1b"), "1")?;
    let wide = run_all(&tmp.path().join("t8"), "8")?;
    let mut differing = Vec::new();
    for (name, bytes) in &first {
        if again.get(name) != Some(bytes) || wide.get(name) != Some(bytes) {
            differing.push(name.clone());
        }
    }
    if first.len() != again.len() || first.len() != wide.len() {
        differing.push("<file set>".into());
    }
    let kinds =
        ["t3", "csv", "json", "svg"].map(|ext| first.keys().filter(|k| k.ends_with(ext)).count());
    if first["replot.svg"] != first["alpha/recovery-vs-alpha.svg"] {
        differing.push("replot.svg vs recovery-vs-alpha.svg".into());
    }
    let detail = format!(
        "{} files ({} T3, {} CSV, {} JSON, {} SVG) across reruns and DYNSAMP_THREADS=1/8",
        first.len(),
        kinds[0],
        kinds[1],
        kinds[2],
        kinds[3]
    );
    if differing.is_empty() {
        Ok(format!("{detail}: byte-identical"))
    } else {
        Err(format!("{detail}: differ in {differing:?}"))
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "t-product matches block-circulant oracle",
            oracle_equivalence,
        ),
        ("exact recovery at α=0.4, T=5", exact_recovery),
        ("point-wise recovery", pointwise_recovery),
        ("column without samples is unrecoverable", missing_column),
        ("slab exclusion (lateral vs. mode 1/3)", slab_exclusion),
        ("condition number growth in T", conditioning),
        ("interior optimal T under noise", optimal_horizon),
        ("frequency-domain vs. dense pseudoinverse", dense_oracle),
        ("determinism across reruns and threads", determinism),
    ];
    let mut failures = 0;
    for (id, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail} [{secs:.1}s]", id + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} FAIL {name}: {detail} [{secs:.1}s]", id + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
