//! `simulate`, `reconstruct`, `experiment` and `plot`.

use std::fs;
use std::path::{Path, PathBuf};

use dynsamp_core::io::{read_samples, read_t3, write_atomic, write_json, write_samples, write_t3};
use dynsamp_core::{evolve, observe, reconstruct, ReconstructOptions, ReportSummary};
use serde::Serialize;

use crate::config::{ExperimentKind, ResolvedConfig};
use crate::error::{CliError, CliResult};
use crate::experiments::{self, Instance};
use crate::plot::plot_csv;
use crate::table::Table;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    config: &'a ResolvedConfig,
    trial_seeds: Vec<u64>,
    outputs: Vec<String>,
}

fn write_manifest(
    dir: &Path,
    command: &'static str,
    cfg: &ResolvedConfig,
    outputs: Vec<String>,
) -> CliResult<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        trial_seeds: cfg.trial_seeds(),
        outputs,
    };
    Ok(write_json(&dir.join("manifest.json"), &manifest)?)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Draws an instance from `cfg.seed` and writes `A.t3`, `F.t3`, `mask.t3`,
/// `mask.json`, `obs_<t>.t3` for `t = 0..T-1`, `meta.json`, `manifest.json`.
pub fn simulate(cfg: &ResolvedConfig, out: &Path) -> CliResult<()> {
    let inst = Instance::draw(cfg, cfg.seed);
    let mask = inst.bernoulli_mask(cfg.alpha, cfg.seed)?;
    let trajectory = evolve(&inst.operator, &inst.signal, cfg.horizon)?;
    let samples = observe(&trajectory, &mask, cfg.sigma, cfg.seed)?;
    ensure_dir(out)?;
    write_t3(&out.join("A.t3"), &inst.operator)?;
    write_t3(&out.join("F.t3"), &inst.signal)?;
    write_samples(out, &samples)?;
    let mut outputs: Vec<String> = ["A.t3", "F.t3", "mask.t3", "mask.json", "meta.json"]
        .map(String::from)
        .into();
    outputs.extend((0..cfg.horizon).map(|t| format!("obs_{t}.t3")));
    write_manifest(out, "simulate", cfg, outputs)
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructArgs {
    pub data: PathBuf,
    /// Output directory; defaults to `data`.
    pub out: Option<PathBuf>,
    /// Operator file; defaults to `<data>/A.t3`.
    pub operator: Option<PathBuf>,
    /// Ground truth; defaults to `<data>/F.t3` when present.
    pub truth: Option<PathBuf>,
    pub options: ReconstructOptions,
    /// Include `wall_ms` in `report.json` (makes it run-dependent).
    pub timing: bool,
}

/// Reads a dataset, writes `estimate.t3` and `report.json`.
pub fn reconstruct_dataset(args: &ReconstructArgs) -> CliResult<ReportSummary> {
    let a = read_t3(
        &args
            .operator
            .clone()
            .unwrap_or_else(|| args.data.join("A.t3")),
    )?;
    let samples = read_samples(&args.data)?;
    let mut report = reconstruct(&a, &samples, &args.options)?;
    let truth = match &args.truth {
        Some(p) => Some(p.clone()),
        None => Some(args.data.join("F.t3")).filter(|p| p.exists()),
    };
    if let Some(path) = truth {
        report.evaluate(&read_t3(&path)?)?;
    }
    let out = args.out.as_deref().unwrap_or(&args.data);
    ensure_dir(out)?;
    write_t3(&out.join("estimate.t3"), &report.estimate)?;
    let summary = report.summary(args.timing);
    write_json(&out.join("report.json"), &summary)?;
    Ok(summary)
}

/// Runs `kind`, writing `<kind>.csv`, `<kind>.svg` and `manifest.json`.
pub fn experiment(kind: ExperimentKind, cfg: &ResolvedConfig, out: &Path) -> CliResult<Table> {
    let table = experiments::run(kind, cfg)?;
    ensure_dir(out)?;
    let csv_name = format!("{kind}.csv");
    let svg_name = format!("{kind}.svg");
    let csv_path = out.join(&csv_name);
    let csv = table.to_csv()?;
    write_atomic(&csv_path, csv.as_bytes())?;
    // The plot is drawn from the CSV text, never from in-memory results.
    write_atomic(&out.join(&svg_name), plot_csv(&csv, &csv_path)?.as_bytes())?;
    write_manifest(out, "experiment", cfg, vec![csv_name, svg_name])?;
    Ok(table)
}

/// Regenerates an SVG from a result CSV; default output swaps the extension.
pub fn plot(csv: &Path, out: Option<&Path>) -> CliResult<PathBuf> {
    let text =
        fs::read_to_string(csv).map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
    let svg = plot_csv(&text, csv)?;
    let target = out.map_or_else(|| csv.with_extension("svg"), Path::to_path_buf);
    write_atomic(&target, svg.as_bytes())?;
    Ok(target)
}

/// Sizes the global thread pool from `DYNSAMP_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("DYNSAMP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Config(format!(
            "DYNSAMP_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))
}
