//! Off-grid sources and receivers, and source wavelets.
//!
//! A point at fractional grid position `u` is represented by its nearest node
//! `k0 = floor(u + 1/2)` and offset `alpha = k0 - u` in `(-1/2, 1/2]`. Node
//! `k0 + n` receives the weight `W(n + alpha) sinc(n + alpha)` per axis, `W`
//! being a Kaiser window of half-width `r`. Multi-dimensional weights are the
//! tensor product of the per-axis sets.

use std::f64::consts::PI;
use std::path::Path;

use crate::numerics::{bessel_i0, sinc};
use crate::space_model::Grid;
use crate::time_model::TimeAxis;
use crate::{Error, Real, Result};

pub const MAX_WINDOW_RADIUS: usize = 10;

/// Kaiser `b` for `r = 1..=10` tuned for wavenumbers up to pi/2 (Hicks, 2002, Table 1).
const HICKS_B: [f64; MAX_WINDOW_RADIUS] =
    [1.24, 2.94, 4.53, 6.31, 7.91, 9.42, 10.95, 12.53, 14.09, 14.18];

pub fn default_kaiser_b(radius: usize) -> Result<f64> {
    check_radius(radius)?;
    Ok(HICKS_B[radius - 1])
}

fn check_radius(radius: usize) -> Result<()> {
    if !(1..=MAX_WINDOW_RADIUS).contains(&radius) {
        return Err(Error::InvalidArgument(format!(
            "window radius {radius} outside 1..={MAX_WINDOW_RADIUS}"
        )));
    }
    Ok(())
}

/// `I0(b sqrt(1 - (x/r)^2)) / I0(b)` on `|x| <= r`, zero outside.
pub fn kaiser_window(x: f64, radius: usize, b: f64) -> f64 {
    let r = radius as f64;
    if x.abs() > r {
        return 0.0;
    }
    let q = (1.0 - (x / r).powi(2)).max(0.0);
    bessel_i0(b * q.sqrt()) / bessel_i0(b)
}

/// Non-zero per-axis weights as `(node offset n, weight)` pairs.
pub fn hicks_weights_1d(alpha: f64, radius: usize, b: f64) -> Vec<(isize, f64)> {
    let r = radius as f64;
    let lo = (-r - alpha).ceil() as isize;
    let hi = (r - alpha).floor() as isize;
    (lo..=hi)
        .filter_map(|n| {
            let x = n as f64 + alpha;
            let w = kaiser_window(x, radius, b) * sinc(x);
            (w != 0.0).then_some((n, w))
        })
        .collect()
}

/// Source or receiver coordinates with their interpolation window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub coordinates: Vec<Vec<f64>>,
    pub window_radius: usize,
    pub kaiser_b: f64,
}

impl PointSet {
    pub fn new(coordinates: Vec<Vec<f64>>, window_radius: usize) -> Result<Self> {
        let kaiser_b = default_kaiser_b(window_radius)?;
        Self::with_kaiser_b(coordinates, window_radius, kaiser_b)
    }

    pub fn with_kaiser_b(coordinates: Vec<Vec<f64>>, window_radius: usize, kaiser_b: f64) -> Result<Self> {
        check_radius(window_radius)?;
        if !(kaiser_b > 0.0) {
            return Err(Error::InvalidArgument(format!("Kaiser b must be positive, got {kaiser_b}")));
        }
        Ok(Self {
            coordinates,
            window_radius,
            kaiser_b,
        })
    }

    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }
}

/// Per point, the padded-grid linear indices and weights it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationMap {
    pub points: Vec<Vec<(usize, f64)>>,
}

pub fn build_injection_map(points: &PointSet, grid: &Grid) -> Result<InterpolationMap> {
    let ndim = grid.ndim();
    let extended = grid.extended_shape();
    let strides = grid.padded_strides();
    let mut maps = Vec::with_capacity(points.len());
    for (index, coords) in points.coordinates.iter().enumerate() {
        let outside = || Error::OutsideDomain {
            index,
            coordinates: coords.clone(),
        };
        if coords.len() != ndim {
            return Err(Error::ShapeMismatch(format!(
                "point {index} has {} coordinates, grid has {ndim} axes",
                coords.len()
            )));
        }
        // per axis: (extended node index, weight)
        let mut axes: Vec<Vec<(usize, f64)>> = Vec::with_capacity(ndim);
        for axis in 0..ndim {
            let (lo, hi) = grid.bbox[axis];
            let x = coords[axis];
            let h = grid.spacing[axis];
            let slack = 1e-9 * h;
            if !(x >= lo - slack && x <= hi + slack) {
                return Err(outside());
            }
            let mut u = grid.damping_cells[axis][0] as f64 + (x - lo) / h;
            if (u - u.round()).abs() < 1e-9 {
                u = u.round();
            }
            let k0 = (u + 0.5).floor();
            let alpha = k0 - u;
            let taps = hicks_weights_1d(alpha, points.window_radius, points.kaiser_b)
                .into_iter()
                .filter_map(|(n, w)| {
                    let node = k0 as isize + n;
                    (node >= 0 && (node as usize) < extended[axis]).then_some((node as usize, w))
                })
                .collect();
            axes.push(taps);
        }
        let mut entries = vec![(0usize, 1.0f64)];
        for (axis, taps) in axes.iter().enumerate() {
            let stride = strides[axis];
            let halo = grid.halo;
            entries = entries
                .iter()
                .flat_map(|&(offset, weight)| {
                    taps.iter().map(move |&(node, w)| {
                        (offset + (node + halo) * stride, weight * w)
                    })
                })
                .collect();
        }
        maps.push(entries);
    }
    Ok(InterpolationMap { points: maps })
}

impl InterpolationMap {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight_sums(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.iter().map(|(_, w)| w).sum())
            .collect()
    }

    /// Weighted sums of `field` at every point.
    pub fn sample<T: Real>(&self, field: &[T]) -> Vec<f64> {
        let mut out = vec![0.0; self.points.len()];
        self.sample_into(field, &mut out);
        out
    }

    pub fn sample_into<T: Real>(&self, field: &[T], out: &mut [f64]) {
        for (value, point) in out.iter_mut().zip(&self.points) {
            *value = point.iter().map(|&(i, w)| w * field[i].f64()).sum();
        }
    }

    /// Adds `amplitudes[p] * w` at every tap of point `p`.
    pub fn inject<T: Real>(&self, field: &mut [T], amplitudes: &[f64]) {
        for (point, &a) in self.points.iter().zip(amplitudes) {
            for &(i, w) in point {
                field[i] += T::of(w * a);
            }
        }
    }
}

/// Source time function sampled on the time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavelet {
    pub samples: Vec<f64>,
    pub peak_frequency: Option<f64>,
}

impl Wavelet {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        Self {
            samples,
            peak_frequency: None,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            peak_frequency: self.peak_frequency,
        }
    }

    /// Reads one amplitude per line (blank lines and `#` comments skipped) and
    /// resamples linearly onto `time`. Sample `i` sits at `i * file_dt`; without
    /// `file_dt` the samples are spread evenly over `[0, t_N]`.
    pub fn from_file(path: &Path, time: &TimeAxis, file_dt: Option<f64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "{}:{}: cannot parse amplitude {line:?}",
                    path.display(),
                    line_no + 1
                ))
            })?;
            values.push(v);
        }
        resample_wavelet(&values, time, file_dt).map(Self::from_samples)
    }
}

fn resample_wavelet(values: &[f64], time: &TimeAxis, file_dt: Option<f64>) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("wavelet file holds no samples".into()));
    }
    if values.len() == 1 {
        return Ok(vec![values[0]; time.samples()]);
    }
    let span = time.time(time.n_steps);
    let step = match file_dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::InvalidArgument(format!("wavelet dt must be positive, got {dt}"))),
        None => span / (values.len() - 1) as f64,
    };
    Ok((0..time.samples())
        .map(|n| {
            let u = time.time(n) / step;
            let k = u.floor() as usize;
            if k + 1 >= values.len() {
                // past the recorded signal
                if k + 1 == values.len() && u == k as f64 {
                    values[k]
                } else {
                    0.0
                }
            } else {
                let t = u - k as f64;
                values[k] * (1.0 - t) + values[k + 1] * t
            }
        })
        .collect())
}

/// Ricker wavelet with peak frequency `f`, delayed by `1/f`.
pub fn ricker(time: &TimeAxis, peak_frequency: f64) -> Result<Wavelet> {
    ricker_delayed(time, peak_frequency, 1.0 / peak_frequency)
}

/// Ricker wavelet centred on `delay` seconds.
pub fn ricker_delayed(time: &TimeAxis, peak_frequency: f64, delay: f64) -> Result<Wavelet> {
    if !(peak_frequency > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "peak frequency must be positive, got {peak_frequency}"
        )));
    }
    let samples = (0..time.samples())
        .map(|n| ricker_value(time.time(n) - delay, peak_frequency))
        .collect();
    Ok(Wavelet {
        samples,
        peak_frequency: Some(peak_frequency),
    })
}

fn ricker_value(tau: f64, f: f64) -> f64 {
    let a = (PI * f * tau).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}
