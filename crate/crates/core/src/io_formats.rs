//! Model ingestion and output writers.
//!
//! Models and snapshots share one container: a raw little-endian float array
//! in `[Z][X]` / `[Z][X][Y]` order (last axis fastest) next to a JSON
//! sidecar `{"shape": [...], "dtype": "f32" | "f64", "units": ...}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::kernel::{Seismogram, Snapshots};
use crate::{Error, Precision, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn bytes(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "m/s")]
    MetersPerSecond,
    #[serde(rename = "g/cm3")]
    GramsPerCubicCentimeter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    /// Material models carry units; snapshot sidecars leave them out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawField {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub units: Option<Units>,
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a raw model. In a single-precision run every value is narrowed to
/// `f32` so the field matches what the solver will hold.
pub fn load_model(data: &Path, sidecar: &Path, precision: Precision) -> Result<RawField> {
    let meta = read_sidecar(sidecar)?;
    let bytes = std::fs::read(data).map_err(|e| Error::io(data, e))?;
    let count: usize = meta.shape.iter().product();
    let expected = count * meta.dtype.bytes();
    if meta.shape.is_empty() || bytes.len() != expected {
        return Err(Error::SizeMismatch {
            path: data.to_path_buf(),
            expected,
            actual: bytes.len(),
        });
    }
    let values = decode(&bytes, meta.dtype)
        .into_iter()
        .map(|v| precision.narrow(v))
        .collect();
    Ok(RawField {
        shape: meta.shape,
        values,
        units: meta.units,
    })
}

fn decode(bytes: &[u8], dtype: Dtype) -> Vec<f64> {
    match dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    }
}

/// Writes `values` in the model container. `f32` output rounds each value.
pub fn write_model(data: &Path, sidecar: &Path, values: &[f64], meta: &Sidecar) -> Result<()> {
    let count: usize = meta.shape.iter().product();
    if count != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "shape {:?} holds {count} values, got {}",
            meta.shape,
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(count * meta.dtype.bytes());
    for &v in values {
        match meta.dtype {
            Dtype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    std::fs::write(data, out).map_err(|e| Error::io(data, e))?;
    write_json(sidecar, meta)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeismogramFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SeismogramSidecar {
    rows: usize,
    receivers: Vec<Vec<f64>>,
    times: Vec<f64>,
    dtype: Dtype,
}

/// Sidecar path of a binary seismogram: `name.bin` -> `name.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_seismogram(seismogram: &Seismogram, path: &Path, format: SeismogramFormat) -> Result<()> {
    match format {
        SeismogramFormat::Csv => write_seismogram_csv(seismogram, path),
        SeismogramFormat::Bin => {
            let mut bytes = Vec::with_capacity(seismogram.data.len() * 8);
            for v in &seismogram.data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
            write_json(
                &sidecar_path(path),
                &SeismogramSidecar {
                    rows: seismogram.rows(),
                    receivers: seismogram.receivers.clone(),
                    times: seismogram.times.clone(),
                    dtype: Dtype::F64,
                },
            )
        }
    }
}

fn write_seismogram_csv(seismogram: &Seismogram, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "t").map_err(io)?;
    for r in 0..seismogram.n_receivers() {
        write!(w, ",rec{r}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for k in 0..seismogram.rows() {
        write!(w, "{:.8e}", seismogram.times[k]).map_err(io)?;
        for v in seismogram.row(k) {
            write!(w, ",{v:.8e}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_seismogram_bin(path: &Path) -> Result<Seismogram> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: SeismogramSidecar = serde_json::from_str(&text)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = meta.rows * meta.receivers.len() * meta.dtype.bytes();
    if bytes.len() != expected || meta.times.len() != meta.rows {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len(),
        });
    }
    Ok(Seismogram {
        times: meta.times,
        receivers: meta.receivers,
        data: decode(&bytes, meta.dtype),
    })
}

/// Writes every snapshot as `snapshot_<step>.bin` plus sidecar in `dir`,
/// returning the data paths.
pub fn write_snapshots<T: Real>(snapshots: &Snapshots<T>, dir: &Path) -> Result<Vec<PathBuf>> {
    let dtype = match T::PRECISION {
        Precision::Single => Dtype::F32,
        Precision::Double => Dtype::F64,
    };
    let meta = Sidecar {
        shape: snapshots.shape.clone(),
        dtype,
        units: None,
    };
    let mut paths = Vec::with_capacity(snapshots.frames.len());
    for (step, frame) in snapshots.steps.iter().zip(&snapshots.frames) {
        let data = dir.join(format!("snapshot_{step:06}.bin"));
        let values: Vec<f64> = frame.iter().map(|v| v.f64()).collect();
        write_model(&data, &sidecar_path(&data), &values, &meta)?;
        paths.push(data);
    }
    Ok(paths)
}

/// 2D view of a snapshot for imaging: the field itself in 2D, the plane at
/// the middle Y index in 3D. Returns `(values, rows, cols)`.
pub fn image_slice<T: Real>(frame: &[T], shape: &[usize]) -> Result<(Vec<f64>, usize, usize)> {
    let count: usize = shape.iter().product();
    if count != frame.len() {
        return Err(Error::ShapeMismatch(format!(
            "frame has {} values for shape {shape:?}",
            frame.len()
        )));
    }
    match *shape {
        [nz, nx] => Ok((frame.iter().map(|v| v.f64()).collect(), nz, nx)),
        [nz, nx, ny] => {
            let y = ny / 2;
            let values = (0..nz * nx).map(|zx| frame[zx * ny + y].f64()).collect();
            Ok((values, nz, nx))
        }
        _ => Err(Error::ShapeMismatch(format!("cannot image shape {shape:?}"))),
    }
}

/// Binary 8-bit PGM with linear min–max scaling; a constant field is 128.
pub fn write_pgm(path: &Path, values: &[f64], rows: usize, cols: usize) -> Result<()> {
    if rows * cols != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for a {rows}x{cols} image",
            values.len()
        )));
    }
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(pgm_pixels(values));
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn pgm_pixels(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|&v| {
            let v = if v.is_finite() { v } else { lo };
            ((v - lo) / (hi - lo) * 255.0).round() as u8
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_raw(dir: &Path, bytes: &[u8], side: &str) -> (PathBuf, PathBuf) {
        let d = dir.join("m.bin");
        let s = dir.join("m.json");
        std::fs::write(&d, bytes).unwrap();
        std::fs::write(&s, side).unwrap();
        (d, s)
    }

    #[test]
    fn loads_f32_model() {
        let dir = tempfile::tempdir().unwrap();
        let bytes: Vec<u8> = [1500.0f32, 1600.0, 1700.0, 1800.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let (d, s) = write_raw(dir.path(), &bytes, r#"{"shape":[2,2],"dtype":"f32","units":"m/s"}"#);
        let m = load_model(&d, &s, Precision::Double).unwrap();
        assert_eq!(m.shape, vec![2, 2]);
        assert_eq!(m.values, vec![1500.0, 1600.0, 1700.0, 1800.0]);
        assert_eq!(m.units, Some(Units::MetersPerSecond));
    }

    #[test]
    fn size_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (d, s) = write_raw(dir.path(), &[0u8; 12], r#"{"shape":[2,2],"dtype":"f32","units":"m/s"}"#);
        let err = load_model(&d, &s, Precision::Double).unwrap_err();
        assert!(err.to_string().contains("size mismatch"), "{err}");
    }

    #[test]
    fn bad_sidecars_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for side in [
            r#"{"shape":[1],"dtype":"f16","units":"m/s"}"#,
            r#"{"shape":[1],"dtype":"f32","units":"km/s"}"#,
            r#"{"shape":[1],"dtype":"f32""#,
        ] {
            let (d, s) = write_raw(dir.path(), &[0u8; 4], side);
            assert!(load_model(&d, &s, Precision::Double).is_err(), "{side}");
        }
    }

    #[test]
    fn single_precision_narrows() {
        let dir = tempfile::tempdir().unwrap();
        let vals = [0.1f64, 1.0 / 3.0, 1500.123456789];
        let bytes: Vec<u8> = vals.iter().flat_map(|v| v.to_le_bytes()).collect();
        let (d, s) = write_raw(dir.path(), &bytes, r#"{"shape":[3],"dtype":"f64","units":"g/cm3"}"#);
        let m = load_model(&d, &s, Precision::Single).unwrap();
        for (got, want) in m.values.iter().zip(vals) {
            assert_eq!(*got, want as f32 as f64);
        }
        let m = load_model(&d, &s, Precision::Double).unwrap();
        assert_eq!(m.values, vals.to_vec());
    }

    fn seis(rows: usize, nrec: usize, f: impl Fn(usize, usize) -> f64) -> Seismogram {
        Seismogram {
            times: (0..rows).map(|k| k as f64 * 1e-4).collect(),
            receivers: (0..nrec).map(|r| vec![r as f64, 2.0]).collect(),
            data: (0..rows * nrec).map(|i| f(i / nrec, i % nrec)).collect(),
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_seismogram(&seis(2, 1, |_, _| 0.0), &p, SeismogramFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "t,rec0");
    }

    #[test]
    fn csv_values_reparse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = seis(50, 3, |k, r| ((k * 7 + r) as f64).sin() * 10f64.powi(r as i32 - 5));
        write_seismogram(&s, &p, SeismogramFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        for (k, line) in text.lines().skip(1).enumerate() {
            for (r, field) in line.split(',').skip(1).enumerate() {
                let v: f64 = field.parse().unwrap();
                let want = s.row(k)[r];
                assert!((v - want).abs() <= 1e-8 * want.abs(), "{v} vs {want}");
            }
        }
    }

    #[test]
    fn bin_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        let s = seis(17, 4, |k, r| (k as f64 + 0.1) / (r as f64 + 3.0));
        write_seismogram(&s, &p, SeismogramFormat::Bin).unwrap();
        let back = read_seismogram_bin(&p).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn snapshots_reload_as_models() {
        let dir = tempfile::tempdir().unwrap();
        let snaps = Snapshots {
            shape: vec![2, 3],
            steps: vec![0, 5],
            frames: vec![vec![0.5f32; 6], (0..6).map(|i| i as f32 * 0.25).collect()],
        };
        let paths = write_snapshots(&snaps, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        let m = load_model(&paths[1], &sidecar_path(&paths[1]), Precision::Single).unwrap();
        assert_eq!(m.shape, vec![2, 3]);
        assert_eq!(m.values, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25]);
    }

    #[test]
    fn pgm_normalisation() {
        assert_eq!(pgm_pixels(&[0.0; 6]), vec![128; 6]);
        assert_eq!(pgm_pixels(&[0.0, 1.0]), vec![0, 255]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        write_pgm(&p, &[0.0, 1.0], 2, 1).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n1 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 255]);
    }

    #[test]
    fn three_d_images_use_middle_y() {
        let shape = [2, 2, 5];
        let frame: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let (v, rows, cols) = image_slice(&frame, &shape).unwrap();
        assert_eq!((rows, cols), (2, 2));
        assert_eq!(v, vec![2.0, 7.0, 12.0, 17.0]);
    }

    proptest! {
        #[test]
        fn model_round_trip(vals in prop::collection::vec(-1e30f64..1e30, 1..64)) {
            let dir = tempfile::tempdir().unwrap();
            let d = dir.path().join("x.bin");
            let s = dir.path().join("x.json");
            let meta = Sidecar { shape: vec![vals.len()], dtype: Dtype::F64, units: Some(Units::MetersPerSecond) };
            write_model(&d, &s, &vals, &meta).unwrap();
            prop_assert_eq!(load_model(&d, &s, Precision::Double).unwrap().values, vals.clone());
            let meta = Sidecar { dtype: Dtype::F32, ..meta };
            write_model(&d, &s, &vals, &meta).unwrap();
            let narrowed: Vec<f64> = vals.iter().map(|v| *v as f32 as f64).collect();
            prop_assert_eq!(load_model(&d, &s, Precision::Single).unwrap().values, narrowed);
        }
    }
}
