//! File formats.
//!
//! **T3 v1** is a line-oriented text format for [`Tensor3`]:
//!
//! ```text
//! T3 1 <rows> <cols> <depth> <real|complex>
//! <entry (0,0,0)>
//! <entry (1,0,0)>
//! …
//! ```
//!
//! Entries follow in lexicographic `(k, j, i)` order (`i` fastest), one per
//! line: `re` for real tensors, `re im` for complex ones, in round-trip
//! scientific notation.
//!
//! A sample dataset directory holds `mask.t3` (0/1 entries), the sidecar
//! `mask.json` with the mask provenance, `obs_<t>.t3` for `t = 0..T-1`, and
//! `meta.json` with `{T, sigma, seed, dims}`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynsys::SampleData;
use crate::error::{Error, Result};
use crate::sampling::{Provenance, SampleMask};
use crate::tensor3::{Dims, Tensor3};

/// Formats a float so that parsing it gives back the same bits.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn t3_to_string(t: &Tensor3) -> String {
    let d = t.dims();
    let kind = if t.is_real() { "real" } else { "complex" };
    let mut out = String::with_capacity(d.len() * 26 + 32);
    let _ = writeln!(out, "T3 1 {} {} {} {}", d.rows, d.cols, d.depth, kind);
    // Storage order already is (k, j, i) lexicographic.
    for z in t.as_slice() {
        if t.is_real() {
            let _ = writeln!(out, "{}", fmt_float(z.re));
        } else {
            let _ = writeln!(out, "{} {}", fmt_float(z.re), fmt_float(z.im));
        }
    }
    out
}

pub fn parse_t3(text: &str, path: &Path) -> Result<Tensor3> {
    let err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, 1, "empty file, expected a `T3 1 …` header".into()))?;
    let fields = tokens(header);
    if fields.len() != 6 {
        return Err(err(
            1,
            1,
            format!(
                "header needs 6 fields `T3 1 rows cols depth kind`, found {}",
                fields.len()
            ),
        ));
    }
    if fields[0].1 != "T3" {
        return Err(err(
            1,
            fields[0].0,
            format!("expected magic `T3`, found `{}`", fields[0].1),
        ));
    }
    if fields[1].1 != "1" {
        return Err(err(
            1,
            fields[1].0,
            format!("unsupported version `{}`", fields[1].1),
        ));
    }
    let mut extent = [0usize; 3];
    for (slot, &(col, tok)) in extent.iter_mut().zip(&fields[2..5]) {
        *slot = tok.parse().ok().filter(|&v: &usize| v > 0).ok_or_else(|| {
            err(
                1,
                col,
                format!("dimension `{tok}` is not a positive integer"),
            )
        })?;
    }
    let real = match fields[5].1 {
        "real" => true,
        "complex" => false,
        other => {
            return Err(err(
                1,
                fields[5].0,
                format!("kind must be `real` or `complex`, found `{other}`"),
            ))
        }
    };
    let dims = Dims::new(extent[0], extent[1], extent[2]);
    let want = if real { 1 } else { 2 };
    let mut data = Vec::with_capacity(dims.len());
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let toks = tokens(line);
        if toks.is_empty() {
            continue;
        }
        if data.len() == dims.len() {
            return Err(err(
                lineno,
                toks[0].0,
                "more entries than the header declares".into(),
            ));
        }
        if toks.len() != want {
            return Err(err(
                lineno,
                toks[0].0,
                format!("expected {want} number(s), found {}", toks.len()),
            ));
        }
        let mut parts = [0.0f64; 2];
        for (slot, &(col, tok)) in parts.iter_mut().zip(&toks) {
            *slot = tok
                .parse()
                .map_err(|_| err(lineno, col, format!("`{tok}` is not a number")))?;
        }
        data.push(Complex64::new(parts[0], parts[1]));
    }
    if data.len() != dims.len() {
        return Err(err(
            text.lines().count() + 1,
            1,
            format!("expected {} entries, found {}", dims.len(), data.len()),
        ));
    }
    if real {
        Tensor3::from_real(dims, data.into_iter().map(|z| z.re).collect())
    } else {
        Tensor3::from_complex(dims, data)
    }
}

/// Whitespace-separated tokens with their 1-based byte column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (pos, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..pos]));
                start = None;
            }
            (false, None) => start = Some(pos),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Writes via a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_t3(path: &Path, t: &Tensor3) -> Result<()> {
    write_atomic(path, t3_to_string(t).as_bytes())
}

pub fn read_t3(path: &Path) -> Result<Tensor3> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_t3(&text, path)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_pretty(value).as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `<stem>.t3` and the provenance sidecar `<stem>.json`.
pub fn write_mask(dir: &Path, stem: &str, mask: &SampleMask) -> Result<()> {
    write_t3(&dir.join(format!("{stem}.t3")), &mask.as_tensor())?;
    write_json(&dir.join(format!("{stem}.json")), mask.provenance())
}

/// Reads a mask; the provenance sidecar is optional.
pub fn read_mask(dir: &Path, stem: &str) -> Result<SampleMask> {
    let mask = SampleMask::from_tensor(&read_t3(&dir.join(format!("{stem}.t3")))?)?;
    let sidecar = dir.join(format!("{stem}.json"));
    if sidecar.exists() {
        let provenance: Provenance = read_json(&sidecar)?;
        Ok(mask.with_provenance(provenance))
    } else {
        Ok(mask)
    }
}

/// `meta.json` of a sample dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMeta {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub sigma: f64,
    pub seed: u64,
    pub dims: [usize; 3],
}

pub fn observation_path(dir: &Path, t: usize) -> PathBuf {
    dir.join(format!("obs_{t}.t3"))
}

pub fn write_samples(dir: &Path, samples: &SampleData) -> Result<()> {
    write_mask(dir, "mask", samples.mask())?;
    for (t, obs) in samples.observations().iter().enumerate() {
        write_t3(&observation_path(dir, t), obs)?;
    }
    write_json(
        &dir.join("meta.json"),
        &SampleMeta {
            horizon: samples.horizon(),
            sigma: samples.noise_sigma(),
            seed: samples.seed(),
            dims: samples.mask().dims().as_array(),
        },
    )
}

pub fn read_samples(dir: &Path) -> Result<SampleData> {
    let meta: SampleMeta = read_json(&dir.join("meta.json"))?;
    let mask = read_mask(dir, "mask")?;
    if mask.dims().as_array() != meta.dims {
        return Err(Error::invalid(format!(
            "{}: mask shape {} disagrees with meta.json dims {:?}",
            dir.display(),
            mask.dims(),
            meta.dims
        )));
    }
    let observations = (0..meta.horizon)
        .map(|t| read_t3(&observation_path(dir, t)))
        .collect::<Result<Vec<_>>>()?;
    SampleData::new(mask, observations, meta.sigma, meta.seed)
}
