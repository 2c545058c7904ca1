use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynsamp_cli::commands::{self, ReconstructArgs};
use dynsamp_cli::config::{parse_f64_list, parse_usize_list};
use dynsamp_cli::{CliError, CliResult, ExperimentConfig, ExperimentKind};
use dynsamp_core::{RealnessPolicy, ReconstructOptions};

/// Dynamical sampling of third-order tensors under the t-product.
#[derive(Parser)]
#[command(name = "dynsamp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an instance and write the operator, signal and samples.
    Simulate(Common),
    /// Recover the signal from a dataset written by `simulate`.
    Reconstruct(ReconstructCmd),
    /// Run one experiment and write CSV, SVG and manifest.
    Experiment {
        /// recovery-vs-alpha | pointwise-gap | optimal-T | condition-vs-T |
        /// conjecture-dim2 | slab-dim1-dim3 (or `kind` in the config file)
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Redraw the SVG of a result CSV.
    Plot {
        csv: PathBuf,
        /// Defaults to the CSV path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags override the JSON config, which overrides built-in defaults.
#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Horizon `5`, or a T grid `1..15` / `1,5,9`.
    #[arg(long = "T", value_name = "T")]
    horizon: Option<String>,
    /// Sampling rate, or a comma-separated α grid.
    #[arg(long)]
    alpha: Option<String>,
    /// Noise level, or a comma-separated σ grid.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructCmd {
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Output directory (default: the dataset directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Operator file (default: <data>/A.t3).
    #[arg(long)]
    operator: Option<PathBuf>,
    /// Ground truth (default: <data>/F.t3 when present).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Relative singular-value cutoff.
    #[arg(long)]
    tol: Option<f64>,
    /// Zero-fill columns that receive no samples.
    #[arg(long)]
    allow_partial: bool,
    /// Keep the real part of the estimate whatever its imaginary residue.
    #[arg(long)]
    project_real: bool,
    /// Record wall-clock time in report.json.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn into_config(self) -> CliResult<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let mut o = ExperimentConfig {
            m: self.m,
            p: self.p,
            n: self.n,
            seed: self.seed,
            trials: self.trials,
            out: self.out,
            ..Default::default()
        };
        if let Some(s) = &self.horizon {
            match parse_usize_list(s)?.as_slice() {
                [t] if !s.contains("..") && !s.contains(',') => o.horizon = Some(*t),
                grid => o.horizon_grid = Some(grid.to_vec()),
            }
        }
        if let Some(s) = &self.alpha {
            match parse_f64_list(s)?.as_slice() {
                [a] => o.alpha = Some(*a),
                grid => o.alpha_grid = Some(grid.to_vec()),
            }
        }
        if let Some(s) = &self.sigma {
            match parse_f64_list(s)?.as_slice() {
                [v] => o.sigma = Some(*v),
                grid => o.sigma_grid = Some(grid.to_vec()),
            }
        }
        Ok(base.merge(o))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    commands::configure_threads()?;
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.into_config()?.resolve()?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("data"));
            commands::simulate(&cfg, &out)?;
            println!("wrote dataset to {}", out.display());
        }
        Command::Reconstruct(r) => {
            let args = ReconstructArgs {
                data: r.data,
                out: r.out,
                operator: r.operator,
                truth: r.truth,
                options: ReconstructOptions {
                    tol: r.tol,
                    allow_partial: r.allow_partial,
                    realness: if r.project_real {
                        RealnessPolicy::Project
                    } else {
                        RealnessPolicy::Strict
                    },
                    sequential: false,
                },
                timing: r.timing,
            };
            let summary = commands::reconstruct_dataset(&args)?;
            let out = args.out.as_deref().unwrap_or(&args.data);
            if let Some(e) = summary.rel_error {
                println!("relative error {e:.3e}");
            }
            if let Some(k) = summary.condition {
                println!("K = {k:.3e}");
            }
            if !summary.failed_columns.is_empty() {
                println!("zero-filled columns {:?}", summary.failed_columns);
            }
            println!("wrote estimate.t3 and report.json to {}", out.display());
        }
        Command::Experiment { kind, common } => {
            let mut cfg = common.into_config()?;
            if let Some(k) = kind {
                cfg.kind = Some(k.parse()?);
            }
            let cfg = cfg.resolve()?;
            let kind: ExperimentKind = cfg.kind.ok_or_else(|| {
                CliError::Config("experiment kind missing: pass --kind or set `kind`".into())
            })?;
            let out = cfg
                .out
                .clone()
                .unwrap_or_else(|| Path::new("results").join(kind.name()));
            let table = commands::experiment(kind, &cfg, &out)?;
            println!(
                "{} rows written to {}",
                table.rows.len(),
                out.join(format!("{kind}.csv")).display()
            );
        }
        Command::Plot { csv, out } => {
            let target = commands::plot(&csv, out.as_deref())?;
            println!("wrote {}", target.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
