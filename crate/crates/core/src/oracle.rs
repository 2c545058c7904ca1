//! Brute-force reference solvers used to cross-check the frequency-domain
//! reconstruction. Nothing here touches a Fourier transform: the forward map
//! is materialised by pushing every basis tensor through [`bcirc_oracle`].
//!
//! Costs grow like `(m p n)²`; keep instances small.

use nalgebra::{DMatrix, DVector};

use crate::dynsys::SampleData;
use crate::error::{Error, Result};
use crate::sampling::SampleMask;
use crate::tensor3::{bcirc_oracle, Dims, Tensor3};

/// Real matrix of `X ↦ (P_Ω(A^t ∗ X))_{t < T}` restricted to Ω: one row per
/// (time, sampled entry) in storage order, one column per entry of `X`.
pub fn sampling_map(a: &Tensor3, mask: &SampleMask, horizon: usize) -> Result<DMatrix<f64>> {
    let dims = mask.dims();
    if !a.is_real() {
        return Err(Error::invalid("sampling_map expects a real operator"));
    }
    let sampled: Vec<usize> = (0..dims.len()).filter(|&o| mask.indicator()[o]).collect();
    let mut map = DMatrix::zeros(horizon * sampled.len(), dims.len());
    for col in 0..dims.len() {
        let mut basis = vec![0.0; dims.len()];
        basis[col] = 1.0;
        let mut state = Tensor3::from_real(dims, basis)?;
        for t in 0..horizon {
            if t > 0 {
                state = bcirc_oracle(a, &state)?;
            }
            for (r, &o) in sampled.iter().enumerate() {
                map[(t * sampled.len() + r, col)] = state.as_slice()[o].re;
            }
        }
    }
    Ok(map)
}

/// Observed values on Ω stacked in the row order of [`sampling_map`].
pub fn sample_vector(samples: &SampleData) -> DVector<f64> {
    let mask = samples.mask().indicator();
    let values: Vec<f64> = samples
        .observations()
        .iter()
        .flat_map(|obs| {
            obs.as_slice()
                .iter()
                .zip(mask)
                .filter(|(_, &keep)| keep)
                .map(|(z, _)| z.re)
        })
        .collect();
    DVector::from_vec(values)
}

/// Minimum-norm least-squares solution of the materialised problem.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub estimate: Tensor3,
    pub rank: usize,
    pub unknowns: usize,
}

impl DenseSolution {
    pub fn full_column_rank(&self) -> bool {
        self.rank == self.unknowns
    }
}

pub fn dense_least_squares(a: &Tensor3, samples: &SampleData) -> Result<DenseSolution> {
    let dims: Dims = samples.mask().dims();
    let map = sampling_map(a, samples.mask(), samples.horizon())?;
    let rhs = sample_vector(samples);
    let unknowns = dims.len();
    if map.nrows() == 0 {
        return Ok(DenseSolution {
            estimate: Tensor3::zeros(dims),
            rank: 0,
            unknowns,
        });
    }
    let svd = map.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = map_tolerance(svd.singular_values.len(), map_rows(&svd)) * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let x = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::invalid(format!("dense least squares failed: {e}")))?;
    Ok(DenseSolution {
        estimate: Tensor3::from_real(dims, x.as_slice().to_vec())?,
        rank,
        unknowns,
    })
}

fn map_rows(svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>) -> usize {
    svd.u.as_ref().map_or(0, |u| u.nrows())
}

fn map_tolerance(cols: usize, rows: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}
