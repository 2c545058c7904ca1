//! Forward model: evolution `F_t = A^t ∗ F` and noisy space-time sampling.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{noise_stream, stream_rng, OPERATOR_STREAM, SIGNAL_STREAM};
use crate::sampling::SampleMask;
use crate::tensor3::{dft3, idft3, Dims, Tensor3};

/// The observed samples Ψ: one masked (and possibly noisy) snapshot per time
/// `t = 0..T-1`, all sharing a single sampling set.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleData {
    mask: SampleMask,
    observations: Vec<Tensor3>,
    noise_sigma: f64,
    seed: u64,
}

impl SampleData {
    /// Validates that there is at least one observation, shapes agree with the
    /// mask, and every observation vanishes off Ω.
    pub fn new(
        mask: SampleMask,
        observations: Vec<Tensor3>,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::invalid(
                "sample data needs at least one observation time",
            ));
        }
        for (t, obs) in observations.iter().enumerate() {
            if obs.dims() != mask.dims() {
                return Err(Error::ShapeMismatch {
                    op: "sample data",
                    left: mask.dims(),
                    right: obs.dims(),
                });
            }
            if mask.project(obs)?.as_slice() != obs.as_slice() {
                return Err(Error::invalid(format!(
                    "observation {t} has nonzero entries outside the sampling set"
                )));
            }
        }
        Ok(SampleData {
            mask,
            observations,
            noise_sigma,
            seed,
        })
    }

    pub fn mask(&self) -> &SampleMask {
        &self.mask
    }

    pub fn observations(&self) -> &[Tensor3] {
        &self.observations
    }

    /// Number of observation times T.
    pub fn horizon(&self) -> usize {
        self.observations.len()
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// All observations real-valued.
    pub fn is_real(&self) -> bool {
        self.observations.iter().all(Tensor3::is_real)
    }
}

/// Random `rows × rows × depth` operator with i.i.d. standard normal entries
/// from the operator stream of `seed`.
pub fn random_operator(rows: usize, depth: usize, seed: u64) -> Tensor3 {
    Tensor3::random_normal(
        Dims::new(rows, rows, depth),
        &mut stream_rng(seed, OPERATOR_STREAM),
    )
}

/// Random signal with i.i.d. standard normal entries from the signal stream of
/// `seed`.
pub fn random_signal(dims: Dims, seed: u64) -> Tensor3 {
    Tensor3::random_normal(dims, &mut stream_rng(seed, SIGNAL_STREAM))
}

/// `[F, A∗F, A^2∗F, …]`, `horizon` snapshots. Runs in the Fourier domain,
/// multiplying each frequency slice by `Â[:,:,k]` once per step.
pub fn evolve(a: &Tensor3, f: &Tensor3, horizon: usize) -> Result<Vec<Tensor3>> {
    let (ad, fd) = (a.dims(), f.dims());
    if ad.rows != ad.cols {
        return Err(Error::NotSquare {
            op: "evolve",
            dims: ad,
        });
    }
    if ad.cols != fd.rows || ad.depth != fd.depth {
        return Err(Error::ShapeMismatch {
            op: "evolve",
            left: ad,
            right: fd,
        });
    }
    if horizon == 0 {
        return Err(Error::invalid("evolution horizon must be at least 1"));
    }
    let real = a.is_real() && f.is_real();
    let a_hat = dft3(a).slice_matrices();
    let mut current: Vec<DMatrix<Complex64>> = dft3(f).slice_matrices();
    let mut out = Vec::with_capacity(horizon);
    out.push(f.clone());
    for _ in 1..horizon {
        current = a_hat.iter().zip(&current).map(|(ak, fk)| ak * fk).collect();
        let snapshot = idft3(&Tensor3::from_frontal_slices(&current)?);
        out.push(if real {
            snapshot.purge_imaginary()?
        } else {
            snapshot
        });
    }
    Ok(out)
}

/// Samples a trajectory on Ω, adding i.i.d. `N(0, sigma²)` real noise. The
/// noise at time `t` comes from its own stream of `seed`, so every snapshot is
/// reproducible on its own.
pub fn observe(
    trajectory: &[Tensor3],
    mask: &SampleMask,
    sigma: f64,
    seed: u64,
) -> Result<SampleData> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "noise standard deviation must be finite and nonnegative, got {sigma}"
        )));
    }
    let observations = trajectory
        .iter()
        .enumerate()
        .map(|(t, ft)| {
            if sigma == 0.0 {
                mask.project(ft)
            } else {
                let noise =
                    Tensor3::random_normal(ft.dims(), &mut stream_rng(seed, noise_stream(t)));
                mask.project(&ft.add(&noise.scale(sigma))?)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SampleData::new(mask.clone(), observations, sigma, seed)
}
