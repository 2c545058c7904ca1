//! Recovery of the initial signal from space-time samples.
//!
//! After a DFT along the third mode the least-squares problem splits into one
//! independent system per column `j` of the signal:
//!
//! ```text
//! M_j = (1/n) [ A3(j) A1(0) ; A3(j) A1(1) ; … ; A3(j) A1(T-1) ],   M_j x(j) = b_j
//! ```
//!
//! * `x(j)` stacks the frequency slices of column `j`: `x[k*m + i] = X̂[i, j, k]`.
//! * `A1(t)` is block diagonal with blocks `(Â[:, :, k])^t`.
//! * `A3(j)` is an `n × n` grid of `m × m` diagonal blocks; block `(a, b)` is
//!   `diag_i P̂[i, j, (a - b) mod n]`, i.e. row `i` of the output is the circular
//!   convolution of the mask spectrum tube `P̂[i, j, :]` with row `i` of the input.
//! * `b_j` stacks the spectra of the observed column `j` for every time.
//!
//! The `1/n` comes from `P ⊙ F = ifft(P̂ ⊛ F̂) / n`; with it folded into `M_j`,
//! the right-hand side is the plain DFT of each observation.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::SampleData;
use crate::error::{Error, Result};
use crate::sampling::SampleMask;
use crate::tensor3::{circ, dft3, idft3, rel_error, Dims, Tensor3};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Stacked system `M_j x(j) = b_j` for one column of the signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSystem {
    pub column: usize,
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
}

/// Least-squares solution of a [`ColumnSystem`].
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSolution {
    pub column: usize,
    pub x: DVector<Complex64>,
    /// Singular values above the truncation threshold.
    pub rank: usize,
    /// `σ_max / σ_min` over the retained singular values.
    pub kappa: f64,
    pub residual: f64,
}

impl ColumnSolution {
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.x.len()
    }
}

/// Frequency-domain operator data shared by all column systems of one problem.
#[derive(Clone, Debug)]
pub struct ColumnAssembler {
    signal: Dims,
    mask_hat: Tensor3,
    /// `powers[t][k] = (Â[:, :, k])^t`.
    powers: Vec<Vec<DMatrix<Complex64>>>,
    obs_hat: Vec<Tensor3>,
}

impl ColumnAssembler {
    /// Operator side only (no right-hand sides), for conditioning studies.
    pub fn new(a: &Tensor3, mask: &SampleMask, horizon: usize) -> Result<Self> {
        let signal = mask.dims();
        let ad = a.dims();
        if ad.rows != ad.cols {
            return Err(Error::NotSquare {
                op: "assemble",
                dims: ad,
            });
        }
        if ad.rows != signal.rows || ad.depth != signal.depth {
            return Err(Error::ShapeMismatch {
                op: "assemble",
                left: ad,
                right: signal,
            });
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        let a_hat = dft3(a).slice_matrices();
        let mut powers = Vec::with_capacity(horizon);
        powers.push(vec![DMatrix::identity(ad.rows, ad.rows); ad.depth]);
        for t in 1..horizon {
            let next = a_hat
                .iter()
                .zip(&powers[t - 1])
                .map(|(ak, pk)| ak * pk)
                .collect();
            powers.push(next);
        }
        Ok(ColumnAssembler {
            signal,
            mask_hat: dft3(&mask.as_tensor()),
            powers,
            obs_hat: Vec::new(),
        })
    }

    pub fn with_samples(a: &Tensor3, samples: &SampleData) -> Result<Self> {
        let mut assembler = ColumnAssembler::new(a, samples.mask(), samples.horizon())?;
        assembler.obs_hat = samples.observations().iter().map(dft3).collect();
        Ok(assembler)
    }

    pub fn signal_dims(&self) -> Dims {
        self.signal
    }

    pub fn horizon(&self) -> usize {
        self.powers.len()
    }

    fn check_column(&self, j: usize) -> Result<()> {
        if j >= self.signal.cols {
            return Err(Error::invalid(format!(
                "column {j} out of range for signal of shape {}",
                self.signal
            )));
        }
        Ok(())
    }

    /// `M_j`, of size `(T m n) × (m n)`.
    pub fn matrix(&self, j: usize) -> Result<DMatrix<Complex64>> {
        self.check_column(j)?;
        let (m, n) = (self.signal.rows, self.signal.depth);
        let mn = m * n;
        let inv_n = 1.0 / n as f64;
        let mut out = DMatrix::from_element(self.horizon() * mn, mn, ZERO);
        for (t, powers) in self.powers.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let shift = (a + n - b) % n;
                    let power = &powers[b];
                    for i in 0..m {
                        let weight = self.mask_hat.at(i, j, shift) * inv_n;
                        if weight == ZERO {
                            continue;
                        }
                        let row = t * mn + a * m + i;
                        for l in 0..m {
                            out[(row, b * m + l)] = weight * power[(i, l)];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `b_j`, of length `T m n`; empty when built without samples.
    pub fn rhs(&self, j: usize) -> Result<DVector<Complex64>> {
        self.check_column(j)?;
        let (m, n) = (self.signal.rows, self.signal.depth);
        let mut out = DVector::from_element(self.obs_hat.len() * m * n, ZERO);
        for (t, obs) in self.obs_hat.iter().enumerate() {
            for k in 0..n {
                for i in 0..m {
                    out[t * m * n + k * m + i] = obs.at(i, j, k);
                }
            }
        }
        Ok(out)
    }

    pub fn system(&self, j: usize) -> Result<ColumnSystem> {
        Ok(ColumnSystem {
            column: j,
            matrix: self.matrix(j)?,
            rhs: self.rhs(j)?,
        })
    }
}

/// Builds `M_j` and `b_j` for column `j` of the samples' signal.
pub fn assemble_column_system(a: &Tensor3, samples: &SampleData, j: usize) -> Result<ColumnSystem> {
    ColumnAssembler::with_samples(a, samples)?.system(j)
}

/// Dense `A1(t)`: block diagonal, block `k` equal to `(Â[:, :, k])^t`.
pub fn a1_operator(a: &Tensor3, t: u32) -> Result<DMatrix<Complex64>> {
    let d = a.dims();
    if d.rows != d.cols {
        return Err(Error::NotSquare {
            op: "a1_operator",
            dims: d,
        });
    }
    let (m, n) = (d.rows, d.depth);
    let powers = crate::tensor3::slice_powers(&dft3(a), t);
    let mut out = DMatrix::from_element(m * n, m * n, ZERO);
    for (k, block) in powers.iter().enumerate() {
        out.view_mut((k * m, k * m), (m, m)).copy_from(block);
    }
    Ok(out)
}

/// Dense `A3(j)`, built from the circulant matrices of the mask spectrum tubes.
pub fn a3_operator(mask: &SampleMask, j: usize) -> Result<DMatrix<Complex64>> {
    let d = mask.dims();
    if j >= d.cols {
        return Err(Error::invalid(format!(
            "column {j} out of range for mask {d}"
        )));
    }
    let (m, n) = (d.rows, d.depth);
    let mask_hat = dft3(&mask.as_tensor());
    let mut out = DMatrix::from_element(m * n, m * n, ZERO);
    for i in 0..m {
        let c = circ(&mask_hat.tube(i, j)?);
        for a in 0..n {
            for b in 0..n {
                out[(a * m + i, b * m + i)] = c[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Default relative truncation tolerance: `max(rows, cols) · ε`.
pub fn default_tolerance(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

struct Spectrum {
    threshold: f64,
    rank: usize,
    kappa: f64,
}

fn spectrum(singular_values: &[f64], rel_tol: f64) -> Spectrum {
    let sigma_max = singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = rel_tol * sigma_max;
    let kept = singular_values.iter().copied().filter(|&s| s > threshold);
    let (rank, sigma_min) = kept.fold((0, f64::INFINITY), |(r, lo), s| (r + 1, lo.min(s)));
    Spectrum {
        threshold,
        rank,
        kappa: sigma_max / sigma_min,
    }
}

fn is_zero(matrix: &DMatrix<Complex64>) -> bool {
    matrix.iter().all(|z| *z == ZERO)
}

/// Minimum-norm least-squares solution through the SVD. Singular values at or
/// below `tol · σ_max` are discarded; `tol` defaults to [`default_tolerance`].
pub fn solve_column(sys: &ColumnSystem, tol: Option<f64>) -> Result<ColumnSolution> {
    if is_zero(&sys.matrix) {
        return Err(Error::UnrecoverableColumns {
            columns: vec![sys.column],
        });
    }
    if sys.rhs.len() != sys.matrix.nrows() {
        return Err(Error::invalid(format!(
            "right-hand side has length {} but the system has {} rows",
            sys.rhs.len(),
            sys.matrix.nrows()
        )));
    }
    let rel_tol = tol.unwrap_or_else(|| default_tolerance(sys.matrix.nrows(), sys.matrix.ncols()));
    let svd = sys.matrix.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let kept = spectrum(svd.singular_values.as_slice(), rel_tol);

    let mut x = DVector::from_element(sys.matrix.ncols(), ZERO);
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= kept.threshold {
            continue;
        }
        let coeff = u.column(idx).dotc(&sys.rhs) / s;
        for (xi, vi) in x.iter_mut().zip(v_t.row(idx).iter()) {
            *xi += vi.conj() * coeff;
        }
    }
    let residual = (&sys.matrix * &x - &sys.rhs).norm();
    Ok(ColumnSolution {
        column: sys.column,
        x,
        rank: kept.rank,
        kappa: kept.kappa,
        residual,
    })
}

/// What to do with the imaginary residue of an estimate whose inputs are real.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealnessPolicy {
    /// Drop it if below the realness tolerance, fail otherwise.
    #[default]
    Strict,
    /// Always take the real part and record the discarded magnitude.
    Project,
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructOptions {
    /// Relative singular-value cutoff; `None` uses [`default_tolerance`].
    pub tol: Option<f64>,
    /// Zero-fill columns without samples instead of failing.
    pub allow_partial: bool,
    pub realness: RealnessPolicy,
    /// Solve the column systems one after another on the calling thread.
    pub sequential: bool,
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub estimate: Tensor3,
    /// `‖M_j x(j) - b_j‖₂`; `None` for failed columns.
    pub residuals: Vec<Option<f64>>,
    pub kappa: Vec<Option<f64>>,
    /// `K = max_j κ(j)` over solved columns.
    pub condition: Option<f64>,
    pub ranks: Vec<usize>,
    pub failed_columns: Vec<usize>,
    pub rank_deficient_columns: Vec<usize>,
    pub rel_error: Option<f64>,
    /// Largest imaginary part dropped from the estimate.
    pub imaginary_residue: f64,
    pub wall_time: Duration,
}

impl ReconstructionReport {
    /// Records and returns the relative error against `truth`.
    pub fn evaluate(&mut self, truth: &Tensor3) -> Result<f64> {
        let e = rel_error(&self.estimate, truth)?;
        self.rel_error = Some(e);
        Ok(e)
    }

    pub fn summary(&self, include_timing: bool) -> ReportSummary {
        ReportSummary {
            rel_error: self.rel_error,
            residuals: self.residuals.clone(),
            kappa: self.kappa.clone(),
            condition: self.condition,
            ranks: self.ranks.clone(),
            failed_columns: self.failed_columns.clone(),
            rank_deficient_columns: self.rank_deficient_columns.clone(),
            imaginary_residue: self.imaginary_residue,
            wall_ms: include_timing.then_some(self.wall_time.as_secs_f64() * 1e3),
        }
    }
}

/// JSON form of a [`ReconstructionReport`] (without the estimate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSummary {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rel_error: Option<f64>,
    pub residuals: Vec<Option<f64>>,
    pub kappa: Vec<Option<f64>>,
    #[serde(rename = "K")]
    pub condition: Option<f64>,
    pub ranks: Vec<usize>,
    pub failed_columns: Vec<usize>,
    pub rank_deficient_columns: Vec<usize>,
    pub imaginary_residue: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
}

/// Solves every column system and reassembles the spatial-domain estimate.
pub fn reconstruct(
    a: &Tensor3,
    samples: &SampleData,
    options: &ReconstructOptions,
) -> Result<ReconstructionReport> {
    let started = Instant::now();
    let assembler = ColumnAssembler::with_samples(a, samples)?;
    let d = assembler.signal_dims();
    let solve =
        |j: usize| -> Result<ColumnSolution> { solve_column(&assembler.system(j)?, options.tol) };
    let outcomes: Vec<Result<ColumnSolution>> = if options.sequential {
        (0..d.cols).map(solve).collect()
    } else {
        (0..d.cols).into_par_iter().map(solve).collect()
    };

    let mut solutions = Vec::with_capacity(d.cols);
    let mut failed = Vec::new();
    for (j, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(sol) => solutions.push(Some(sol)),
            Err(Error::UnrecoverableColumns { .. }) => {
                failed.push(j);
                solutions.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if !failed.is_empty() && !options.allow_partial {
        return Err(Error::UnrecoverableColumns { columns: failed });
    }

    let m = d.rows;
    let estimate_hat = Tensor3::from_fn(d, |i, j, k| {
        solutions[j].as_ref().map_or(ZERO, |s| s.x[k * m + i])
    });
    let mut estimate = idft3(&estimate_hat);
    let imaginary_residue = estimate.max_abs_imag();
    if a.is_real() && samples.is_real() {
        estimate = match options.realness {
            RealnessPolicy::Strict => estimate.purge_imaginary()?,
            RealnessPolicy::Project => estimate.project_real(),
        };
    }

    let condition = solutions
        .iter()
        .flatten()
        .map(|s| s.kappa)
        .fold(None, |acc: Option<f64>, k| {
            Some(acc.map_or(k, |a| a.max(k)))
        });
    Ok(ReconstructionReport {
        residuals: solutions
            .iter()
            .map(|s| s.as_ref().map(|s| s.residual))
            .collect(),
        kappa: solutions
            .iter()
            .map(|s| s.as_ref().map(|s| s.kappa))
            .collect(),
        ranks: solutions
            .iter()
            .map(|s| s.as_ref().map_or(0, |s| s.rank))
            .collect(),
        rank_deficient_columns: solutions
            .iter()
            .flatten()
            .filter(|s| s.is_rank_deficient())
            .map(|s| s.column)
            .collect(),
        condition,
        failed_columns: failed,
        estimate,
        rel_error: None,
        imaginary_residue,
        wall_time: started.elapsed(),
    })
}

/// Per-column condition numbers `κ(j)` and their maximum `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemCondition {
    pub kappa: Vec<f64>,
    pub max: f64,
}

/// Condition numbers of the stacked column systems for horizon `T`. Without
/// `tol` this is `σ_max/σ_min` over the full spectrum (infinite when
/// rank-deficient); with `tol` it uses the truncation rule of [`solve_column`].
pub fn system_condition(
    a: &Tensor3,
    mask: &SampleMask,
    horizon: usize,
    tol: Option<f64>,
) -> Result<SystemCondition> {
    let assembler = ColumnAssembler::new(a, mask, horizon)?;
    let cols = assembler.signal_dims().cols;
    let outcomes: Vec<Result<f64>> = (0..cols)
        .into_par_iter()
        .map(|j| {
            let matrix = assembler.matrix(j)?;
            if is_zero(&matrix) {
                return Err(Error::UnrecoverableColumns { columns: vec![j] });
            }
            let sv = matrix.singular_values();
            Ok(match tol {
                Some(rel_tol) => spectrum(sv.as_slice(), rel_tol).kappa,
                None => {
                    let hi = sv.iter().copied().fold(0.0, f64::max);
                    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
                    hi / lo
                }
            })
        })
        .collect();
    let mut kappa = Vec::with_capacity(cols);
    let mut failed = Vec::new();
    for (j, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(k) => kappa.push(k),
            Err(Error::UnrecoverableColumns { .. }) => failed.push(j),
            Err(e) => return Err(e),
        }
    }
    if !failed.is_empty() {
        return Err(Error::UnrecoverableColumns { columns: failed });
    }
    let max = kappa.iter().copied().fold(0.0, f64::max);
    Ok(SystemCondition { kappa, max })
}
