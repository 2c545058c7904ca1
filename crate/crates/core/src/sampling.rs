//! Sampling sets Ω and the projection onto them.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, MASK_STREAM};
use crate::tensor3::{Dims, Tensor3};

/// A tensor mode, 1-based as in `T[i, j, k]` (mode 1 ↔ `i`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    First,
    Second,
    Third,
}

impl Mode {
    pub fn extent(self, dims: Dims) -> usize {
        match self {
            Mode::First => dims.rows,
            Mode::Second => dims.cols,
            Mode::Third => dims.depth,
        }
    }

    fn coordinate(self, i: usize, j: usize, k: usize) -> usize {
        match self {
            Mode::First => i,
            Mode::Second => j,
            Mode::Third => k,
        }
    }
}

impl TryFrom<u8> for Mode {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Mode::First),
            2 => Ok(Mode::Second),
            3 => Ok(Mode::Third),
            other => Err(Error::invalid(format!(
                "mode must be 1, 2 or 3, got {other}"
            ))),
        }
    }
}

impl From<Mode> for u8 {
    fn from(mode: Mode) -> u8 {
        match mode {
            Mode::First => 1,
            Mode::Second => 2,
            Mode::Third => 3,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// Removal of every sample whose `mode` coordinate equals `index` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlabExclusion {
    pub mode: Mode,
    pub index: usize,
}

/// How the base sampling set was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Origin {
    Bernoulli {
        alpha: f64,
        seed: u64,
    },
    Lattice {
        rows: Vec<usize>,
        cols: Vec<usize>,
    },
    /// Supplied directly, e.g. read from a file without a sidecar.
    Explicit,
}

/// Base origin plus the slab exclusions applied on top of it, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(flatten)]
    pub origin: Origin,
    #[serde(default)]
    pub exclusions: Vec<SlabExclusion>,
}

impl Provenance {
    fn base(origin: Origin) -> Self {
        Provenance {
            origin,
            exclusions: Vec::new(),
        }
    }
}

/// Indicator of Ω ⊆ [rows] × [cols] × [depth], shared by every observation time.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMask {
    dims: Dims,
    indicator: Vec<bool>,
    provenance: Provenance,
}

impl SampleMask {
    /// Each entry sampled independently with probability `alpha`. Entries are
    /// drawn in lexicographic `(i, j, k)` order from the mask stream of `seed`.
    pub fn bernoulli(dims: Dims, alpha: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!(
                "sampling rate {alpha} outside [0, 1]"
            )));
        }
        let mut rng = stream_rng(seed, MASK_STREAM);
        let mut indicator = vec![false; dims.len()];
        for i in 0..dims.rows {
            for j in 0..dims.cols {
                for k in 0..dims.depth {
                    let u: f64 = rng.random();
                    indicator[dims.offset(i, j, k)] = u < alpha;
                }
            }
        }
        Ok(SampleMask {
            dims,
            indicator,
            provenance: Provenance::base(Origin::Bernoulli { alpha, seed }),
        })
    }

    /// Ω = rows × cols × [depth] (indices 0-based).
    pub fn lattice(dims: Dims, rows: &[usize], cols: &[usize]) -> Result<Self> {
        let rows: BTreeSet<usize> = rows.iter().copied().collect();
        let cols: BTreeSet<usize> = cols.iter().copied().collect();
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::invalid("lattice index sets must be nonempty"));
        }
        if let Some(&i) = rows.iter().find(|&&i| i >= dims.rows) {
            return Err(Error::invalid(format!(
                "lattice row {i} out of range for {dims}"
            )));
        }
        if let Some(&j) = cols.iter().find(|&&j| j >= dims.cols) {
            return Err(Error::invalid(format!(
                "lattice column {j} out of range for {dims}"
            )));
        }
        let mut indicator = vec![false; dims.len()];
        for k in 0..dims.depth {
            for &j in &cols {
                for &i in &rows {
                    indicator[dims.offset(i, j, k)] = true;
                }
            }
        }
        Ok(SampleMask {
            dims,
            indicator,
            provenance: Provenance::base(Origin::Lattice {
                rows: rows.into_iter().collect(),
                cols: cols.into_iter().collect(),
            }),
        })
    }

    pub fn full(dims: Dims) -> Self {
        SampleMask::from_indicator(dims, vec![true; dims.len()]).expect("length matches")
    }

    /// Mask from an indicator in tensor storage order.
    pub fn from_indicator(dims: Dims, indicator: Vec<bool>) -> Result<Self> {
        if indicator.len() != dims.len() {
            return Err(Error::LengthMismatch {
                len: indicator.len(),
                expected: dims.len(),
                dims,
            });
        }
        Ok(SampleMask {
            dims,
            indicator,
            provenance: Provenance::base(Origin::Explicit),
        })
    }

    /// Mask from a real 0/1 tensor.
    pub fn from_tensor(t: &Tensor3) -> Result<Self> {
        let indicator = t
            .as_slice()
            .iter()
            .map(|z| match (z.re, z.im) {
                (v, im) if v == 1.0 && im == 0.0 => Ok(true),
                (v, im) if v == 0.0 && im == 0.0 => Ok(false),
                _ => Err(Error::invalid(format!("mask entry {z} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        SampleMask::from_indicator(t.dims(), indicator)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        i < self.dims.rows
            && j < self.dims.cols
            && k < self.dims.depth
            && self.indicator[self.dims.offset(i, j, k)]
    }

    pub fn sample_count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sample_count() as f64 / self.dims.len() as f64
    }

    /// Columns `j` touched by at least one sample.
    pub fn column_coverage(&self) -> BTreeSet<usize> {
        (0..self.dims.cols)
            .filter(|&j| !self.column_is_empty(j))
            .collect()
    }

    pub fn column_is_empty(&self, j: usize) -> bool {
        let d = self.dims;
        (0..d.depth).all(|k| (0..d.rows).all(|i| !self.indicator[d.offset(i, j, k)]))
    }

    /// 0/1 tensor equal to one exactly on Ω.
    pub fn as_tensor(&self) -> Tensor3 {
        Tensor3::from_fn_real(self.dims, |i, j, k| {
            if self.indicator[self.dims.offset(i, j, k)] {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Copy of this mask with the slab `mode = index` removed.
    pub fn exclude_slab(&self, mode: Mode, index: usize) -> Result<Self> {
        let d = self.dims;
        if index >= mode.extent(d) {
            return Err(Error::invalid(format!(
                "slab index {index} out of range for mode {mode} of {d}"
            )));
        }
        let mut indicator = self.indicator.clone();
        for k in 0..d.depth {
            for j in 0..d.cols {
                for i in 0..d.rows {
                    if mode.coordinate(i, j, k) == index {
                        indicator[d.offset(i, j, k)] = false;
                    }
                }
            }
        }
        let mut provenance = self.provenance.clone();
        provenance.exclusions.push(SlabExclusion { mode, index });
        Ok(SampleMask {
            dims: d,
            indicator,
            provenance,
        })
    }

    /// `P_Ω(t)`: entries of `t` on Ω, zero elsewhere.
    pub fn project(&self, t: &Tensor3) -> Result<Tensor3> {
        if t.dims() != self.dims {
            return Err(Error::ShapeMismatch {
                op: "project",
                left: self.dims,
                right: t.dims(),
            });
        }
        let kept: Vec<_> = t
            .as_slice()
            .iter()
            .zip(&self.indicator)
            .map(|(&z, &keep)| {
                if keep {
                    z
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let out = Tensor3::from_complex(self.dims, kept)?;
        Ok(if t.is_real() { out.project_real() } else { out })
    }
}
