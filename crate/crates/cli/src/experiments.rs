//! The six experiment kinds. Each returns a result table; all indices in the
//! tables are 0-based.
//!
//! One instance (`A`, `F`) is drawn from the base seed. Trial `r` redraws
//! only the sampling set and the noise, from seed `base + r`.

use dynsamp_core::sampling::Mode;
use dynsamp_core::{
    evolve, observe, random_operator, random_signal, reconstruct, system_condition, Dims,
    RealnessPolicy, ReconstructOptions, SampleMask, Tensor3,
};
use rayon::prelude::*;

use crate::config::{ExperimentKind, ResolvedConfig};
use crate::error::CliResult;
use crate::table::Table;

/// Ground truth: operator `A` (m×m×n) and signal `F` (m×p×n).
#[derive(Clone, Debug)]
pub struct Instance {
    pub operator: Tensor3,
    pub signal: Tensor3,
    pub seed: u64,
}

impl Instance {
    pub fn draw(cfg: &ResolvedConfig, seed: u64) -> Self {
        Instance {
            operator: random_operator(cfg.m, cfg.n, seed),
            signal: random_signal(Dims::new(cfg.m, cfg.p, cfg.n), seed),
            seed,
        }
    }

    pub fn dims(&self) -> Dims {
        self.signal.dims()
    }

    pub fn bernoulli_mask(&self, alpha: f64, trial_seed: u64) -> CliResult<SampleMask> {
        Ok(SampleMask::bernoulli(self.dims(), alpha, trial_seed)?)
    }

    /// Samples `horizon` steps on `mask` with noise level `sigma` (noise drawn
    /// from `trial_seed`) and returns the estimate. Columns without samples
    /// are zero-filled and the real part of the estimate is kept, so every
    /// setting yields a number.
    pub fn recover(
        &self,
        mask: &SampleMask,
        horizon: usize,
        sigma: f64,
        trial_seed: u64,
    ) -> CliResult<Tensor3> {
        let trajectory = evolve(&self.operator, &self.signal, horizon)?;
        let samples = observe(&trajectory, mask, sigma, trial_seed)?;
        let options = ReconstructOptions {
            allow_partial: true,
            realness: RealnessPolicy::Project,
            ..Default::default()
        };
        Ok(reconstruct(&self.operator, &samples, &options)?.estimate)
    }

    pub fn rel_error(
        &self,
        mask: &SampleMask,
        horizon: usize,
        sigma: f64,
        trial_seed: u64,
    ) -> CliResult<f64> {
        let estimate = self.recover(mask, horizon, sigma, trial_seed)?;
        Ok(dynsamp_core::tensor3::rel_error(&estimate, &self.signal)?)
    }
}

pub fn run(kind: ExperimentKind, cfg: &ResolvedConfig) -> CliResult<Table> {
    match kind {
        ExperimentKind::RecoveryVsAlpha => recovery_vs_alpha(cfg),
        ExperimentKind::PointwiseGap => pointwise_gap(cfg),
        ExperimentKind::OptimalT => optimal_horizon(cfg),
        ExperimentKind::ConditionVsT => condition_vs_horizon(cfg),
        ExperimentKind::ConjectureDim2 => lateral_exclusion(cfg),
        ExperimentKind::SlabDim1Dim3 => slab_exclusion(cfg),
    }
}

/// Sample mean and (n−1) standard deviation; 0 spread for a single value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Columns `alpha, mean_rel_err, std_rel_err`. Trial `r` uses the same mask
/// seed at every rate, so its masks are nested in α.
fn recovery_vs_alpha(cfg: &ResolvedConfig) -> CliResult<Table> {
    let inst = Instance::draw(cfg, cfg.seed);
    let seeds = cfg.trial_seeds();
    let jobs: Vec<(usize, u64)> = (0..cfg.alpha_grid.len())
        .flat_map(|a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let errs = jobs
        .par_iter()
        .map(|&(a, s)| {
            let mask = inst.bernoulli_mask(cfg.alpha_grid[a], s)?;
            inst.rel_error(&mask, cfg.horizon, cfg.sigma, s)
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let mut table = Table::new(&["alpha", "mean_rel_err", "std_rel_err"]);
    for (a, chunk) in errs.chunks(seeds.len()).enumerate() {
        let (mean, std) = mean_std(chunk);
        table.push(vec![cfg.alpha_grid[a].into(), mean.into(), std.into()]);
    }
    Ok(table)
}

/// Columns `index, i, j, k, abs_gap` for the first trial; `index` is the
/// storage offset `i + m·(j + p·k)`.
fn pointwise_gap(cfg: &ResolvedConfig) -> CliResult<Table> {
    let inst = Instance::draw(cfg, cfg.seed);
    let mask = inst.bernoulli_mask(cfg.alpha, cfg.seed)?;
    let estimate = inst.recover(&mask, cfg.horizon, cfg.sigma, cfg.seed)?;
    let d = inst.dims();
    let mut table = Table::new(&["index", "i", "j", "k", "abs_gap"]);
    for k in 0..d.depth {
        for j in 0..d.cols {
            for i in 0..d.rows {
                let gap = (estimate.get(i, j, k)? - inst.signal.get(i, j, k)?).norm();
                table.push(vec![
                    d.offset(i, j, k).into(),
                    i.into(),
                    j.into(),
                    k.into(),
                    gap.into(),
                ]);
            }
        }
    }
    Ok(table)
}

/// Columns `T, sigma, mean_rel_err`, σ in the outer loop. One mask per trial,
/// shared across the T grid.
fn optimal_horizon(cfg: &ResolvedConfig) -> CliResult<Table> {
    let inst = Instance::draw(cfg, cfg.seed);
    let seeds = cfg.trial_seeds();
    let masks = seeds
        .iter()
        .map(|&s| inst.bernoulli_mask(cfg.alpha, s))
        .collect::<CliResult<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (s, _) in cfg.sigma_grid.iter().enumerate() {
        for (t, _) in cfg.horizon_grid.iter().enumerate() {
            for r in 0..seeds.len() {
                jobs.push((s, t, r));
            }
        }
    }
    let errs = jobs
        .par_iter()
        .map(|&(s, t, r)| {
            inst.rel_error(&masks[r], cfg.horizon_grid[t], cfg.sigma_grid[s], seeds[r])
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let mut table = Table::new(&["T", "sigma", "mean_rel_err"]);
    for (idx, chunk) in errs.chunks(seeds.len()).enumerate() {
        let (s, t) = (idx / cfg.horizon_grid.len(), idx % cfg.horizon_grid.len());
        let (mean, _) = mean_std(chunk);
        table.push(vec![
            cfg.horizon_grid[t].into(),
            cfg.sigma_grid[s].into(),
            mean.into(),
        ]);
    }
    Ok(table)
}

/// Columns `T, K` for the first trial's mask.
fn condition_vs_horizon(cfg: &ResolvedConfig) -> CliResult<Table> {
    let inst = Instance::draw(cfg, cfg.seed);
    let mask = inst.bernoulli_mask(cfg.alpha, cfg.seed)?;
    let mut table = Table::new(&["T", "K"]);
    for &t in &cfg.horizon_grid {
        let cond = system_condition(&inst.operator, &mask, t, None)?;
        table.push(vec![t.into(), cond.max.into()]);
    }
    Ok(table)
}

/// Columns `excluded_j, rel_err`: the first trial's Bernoulli(α) mask with
/// lateral slice `j` removed.
fn lateral_exclusion(cfg: &ResolvedConfig) -> CliResult<Table> {
    let inst = Instance::draw(cfg, cfg.seed);
    let base = inst.bernoulli_mask(cfg.alpha, cfg.seed)?;
    let errs = (0..cfg.p)
        .into_par_iter()
        .map(|j| {
            inst.rel_error(
                &base.exclude_slab(Mode::Second, j)?,
                cfg.horizon,
                cfg.sigma,
                cfg.seed,
            )
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let mut table = Table::new(&["excluded_j", "rel_err"]);
    for (j, e) in errs.into_iter().enumerate() {
        table.push(vec![j.into(), e.into()]);
    }
    Ok(table)
}

/// Columns `mode, excluded_index, rel_err`: mode-1 slabs `i = 0..m` first,
/// then mode-3 slabs `k = 0..n`.
fn slab_exclusion(cfg: &ResolvedConfig) -> CliResult<Table> {
    let inst = Instance::draw(cfg, cfg.seed);
    let base = inst.bernoulli_mask(cfg.alpha, cfg.seed)?;
    let jobs: Vec<(Mode, usize)> = (0..cfg.m)
        .map(|i| (Mode::First, i))
        .chain((0..cfg.n).map(|k| (Mode::Third, k)))
        .collect();
    let errs = jobs
        .par_iter()
        .map(|&(mode, idx)| {
            inst.rel_error(
                &base.exclude_slab(mode, idx)?,
                cfg.horizon,
                cfg.sigma,
                cfg.seed,
            )
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let mut table = Table::new(&["mode", "excluded_index", "rel_err"]);
    for ((mode, idx), e) in jobs.into_iter().zip(errs) {
        table.push(vec![(u8::from(mode) as usize).into(), idx.into(), e.into()]);
    }
    Ok(table)
}
