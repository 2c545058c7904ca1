//! Three-dimensional dynamical sampling under t-product dynamics.
//!
//! A signal `F ∈ ℂ^{m×p×n}` evolves as `F_t = A^t ∗ F` for a known operator
//! `A ∈ ℂ^{m×m×n}`, where `∗` is the t-product. Given the samples of
//! `F_0, …, F_{T-1}` on a fixed set Ω, [`reconstruct::reconstruct`] recovers
//! `F` by solving one least-squares system per column in the Fourier domain.
//!
//! Module map:
//! - [`tensor3`]: dense tensors, mode-3 DFT, t-product and related products.
//! - [`sampling`]: Bernoulli, lattice and slab-excluded sampling sets.
//! - [`dynsys`]: evolution and noisy observation.
//! - [`reconstruct`]: column systems, SVD least squares, conditioning.
//! - [`io`]: T3 text format and dataset directories.
//! - [`oracle`]: brute-force reference solvers for cross-checks.

pub mod dynsys;
pub mod error;
pub mod io;
pub mod oracle;
pub mod reconstruct;
pub mod rng;
pub mod sampling;
pub mod tensor3;

pub use dynsys::{evolve, observe, random_operator, random_signal, SampleData};
pub use error::{Error, Result};
pub use reconstruct::{
    reconstruct, solve_column, system_condition, ColumnSystem, RealnessPolicy, ReconstructOptions,
    ReconstructionReport, ReportSummary,
};
pub use sampling::{Mode, SampleMask};
pub use tensor3::{Dims, Tensor3, TubeVector};

pub use num_complex::Complex64;
