//! Experiment configuration: JSON file, flag overrides, and the fully
//! resolved form recorded in `manifest.json`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_SIGMA_GRID: [f64; 4] = [0.0, 1e-4, 1e-3, 1e-2];
pub const DEFAULT_T_MAX: usize = 15;

/// 0.05, 0.10, …, 1.00.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RecoveryVsAlpha,
    PointwiseGap,
    OptimalT,
    ConditionVsT,
    ConjectureDim2,
    SlabDim1Dim3,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::RecoveryVsAlpha,
        ExperimentKind::PointwiseGap,
        ExperimentKind::OptimalT,
        ExperimentKind::ConditionVsT,
        ExperimentKind::ConjectureDim2,
        ExperimentKind::SlabDim1Dim3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RecoveryVsAlpha => "recovery-vs-alpha",
            ExperimentKind::PointwiseGap => "pointwise-gap",
            ExperimentKind::OptimalT => "optimal-T",
            ExperimentKind::ConditionVsT => "condition-vs-T",
            ExperimentKind::ConjectureDim2 => "conjecture-dim2",
            ExperimentKind::SlabDim1Dim3 => "slab-dim1-dim3",
        }
    }

    /// Sampling rate used when none is configured.
    pub fn default_alpha(self) -> f64 {
        match self {
            ExperimentKind::ConjectureDim2 => 1.0,
            ExperimentKind::SlabDim1Dim3 => 0.5,
            _ => 0.4,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                CliError::Config(format!(
                    "unknown experiment kind `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

// serde's kebab-case would give "optimal-t"; accept the canonical names too.
fn kind_from_json<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<Option<ExperimentKind>, D::Error> {
    let raw: Option<String> = Option::deserialize(d)?;
    raw.map(|s| s.parse().map_err(serde::de::Error::custom))
        .transpose()
}

/// Configuration as written by the user; every field optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(
        default,
        deserialize_with = "kind_from_json",
        skip_serializing_if = "Option::is_none"
    )]
    pub kind: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, rename = "T_grid", skip_serializing_if = "Option::is_none")]
    pub horizon_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!(
                "{}:{}:{}: {}",
                origin.display(),
                e.line(),
                e.column(),
                e
            ))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text, path)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            kind,
            m,
            p,
            n,
            horizon,
            horizon_grid,
            alpha,
            alpha_grid,
            sigma,
            sigma_grid,
            trials,
            seed,
            out
        );
        self
    }

    /// Fills defaults and validates. `kind` may be absent for `simulate`.
    pub fn resolve(&self) -> Result<ResolvedConfig, CliError> {
        let kind = self.kind;
        let m = self.m.unwrap_or(20);
        let p = self.p.unwrap_or(15);
        let n = self.n.unwrap_or(5);
        for (name, v) in [("m", m), ("p", p), ("n", n)] {
            if v == 0 {
                return Err(CliError::Config(format!("field `{name}` must be positive")));
            }
        }
        let horizon = self.horizon.unwrap_or(5);
        if horizon == 0 {
            return Err(CliError::Config("field `T` must be at least 1".into()));
        }
        let alpha = self
            .alpha
            .unwrap_or_else(|| kind.map_or(0.4, ExperimentKind::default_alpha));
        let alpha_grid = match (&self.alpha_grid, self.alpha) {
            (Some(g), _) => g.clone(),
            (None, Some(a)) => vec![a],
            (None, None) => default_alpha_grid(),
        };
        let sigma = self.sigma.unwrap_or(0.0);
        let sigma_grid = match (&self.sigma_grid, self.sigma) {
            (Some(g), _) => g.clone(),
            (None, Some(s)) => vec![s],
            (None, None) => DEFAULT_SIGMA_GRID.to_vec(),
        };
        let horizon_grid = match (&self.horizon_grid, self.horizon) {
            (Some(g), _) => g.clone(),
            (None, Some(t)) => (1..=t).collect(),
            (None, None) => (1..=DEFAULT_T_MAX).collect(),
        };
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(CliError::Config("field `trials` must be at least 1".into()));
        }
        if alpha_grid.is_empty() || sigma_grid.is_empty() || horizon_grid.is_empty() {
            return Err(CliError::Config(
                "grids `alpha_grid`, `sigma_grid`, `T_grid` must be nonempty".into(),
            ));
        }
        for a in std::iter::once(alpha).chain(alpha_grid.iter().copied()) {
            if !(0.0..=1.0).contains(&a) {
                return Err(CliError::Config(format!(
                    "sampling rate {a} outside [0, 1]"
                )));
            }
        }
        for s in std::iter::once(sigma).chain(sigma_grid.iter().copied()) {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(CliError::Config(format!(
                    "noise level {s} must be finite and nonnegative"
                )));
            }
        }
        if horizon_grid.contains(&0) {
            return Err(CliError::Config(
                "`T_grid` entries must be at least 1".into(),
            ));
        }
        Ok(ResolvedConfig {
            kind,
            m,
            p,
            n,
            horizon,
            horizon_grid,
            alpha,
            alpha_grid,
            sigma,
            sigma_grid,
            trials,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            out: self.out.clone(),
        })
    }
}

/// Configuration with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    pub m: usize,
    pub p: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "T_grid")]
    pub horizon_grid: Vec<usize>,
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
    pub sigma: f64,
    pub sigma_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl ResolvedConfig {
    /// Seed of trial `r`: its sampling set and noise come from streams of
    /// this seed. The operator and signal always use `seed` itself.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|r| self.trial_seed(r)).collect()
    }
}

/// Parses `"5"`, `"1..15"` (inclusive) or `"1,3,7"`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || {
        CliError::Config(format!(
            "cannot parse `{s}` as an integer, range `a..b`, or list"
        ))
    };
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("cannot parse `{t}` as a number")))
        })
        .collect()
}
