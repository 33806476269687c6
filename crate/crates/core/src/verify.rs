//! Verification harness: the 2D free-space reference for a point source,
//! the manufactured variable-density solution, error norms and convergence
//! fitting, plus drivers for the standard studies.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::acquisition::{build_injection_map, ricker_delayed, PointSet};
use crate::kernel::{Backend, BoundaryCondition, BoundarySpec, Forcing, Seismogram, Solver};
use crate::numerics::hankel2_0;
use crate::space_model::{build_grid, damping_field, Grid, MaterialModel, SpaceModel};
use crate::time_model::time_axis;
use crate::{Error, Precision, Real, Result};

/// How the time axis enters the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeTreatment {
    /// Exact in time: `H0(ω r / c)`.
    Continuous,
    /// Exact for the leapfrog recurrence: `ω` replaced by `(2/dt) sin(ω dt / 2)`.
    /// Leaves only the spatial error when compared with the simulator.
    Leapfrog,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Length multiplier of the zero-padded synthesis window.
    pub padding: usize,
    pub time: TimeTreatment,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            padding: 4,
            time: TimeTreatment::Continuous,
        }
    }
}

/// Free-space 2D response at distance `r` to the wavelet `s` sampled every
/// `dt`, by Fourier synthesis with the `-(i/2) H0^(2)(ωr/c)` multiplier.
pub fn analytical_response(wavelet: &[f64], dt: f64, r: f64, c: f64) -> Result<Vec<f64>> {
    analytical_response_with(wavelet, dt, r, c, ReferenceOptions::default())
}

pub fn analytical_response_with(
    wavelet: &[f64],
    dt: f64,
    r: f64,
    c: f64,
    options: ReferenceOptions,
) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {r}")));
    }
    if !(dt > 0.0) || !(c > 0.0) || options.padding == 0 {
        return Err(Error::InvalidArgument("dt, c and padding must be positive".into()));
    }
    let len = wavelet.len();
    let m = len * options.padding;
    if len == 0 {
        return Ok(Vec::new());
    }
    let mut spec: Vec<Complex64> = wavelet
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut spec);
    spec[0] = Complex64::new(0.0, 0.0);
    let half = m / 2;
    for k in 1..=half {
        let omega = 2.0 * PI * k as f64 / (m as f64 * dt);
        let omega = match options.time {
            TimeTreatment::Continuous => omega,
            TimeTreatment::Leapfrog => 2.0 / dt * (0.5 * omega * dt).sin(),
        };
        let h = hankel2_0(omega * r / c)?;
        spec[k] *= Complex64::new(0.0, -0.5) * h;
    }
    if m % 2 == 0 {
        // the Nyquist bin is its own mirror and must be real
        spec[half] = Complex64::new(spec[half].re, 0.0);
    }
    for k in half + 1..m {
        spec[k] = spec[m - k].conj();
    }
    planner.plan_fft_inverse(m).process(&mut spec);
    Ok(spec[..len].iter().map(|z| z.re / m as f64).collect())
}

/// Side of the manufactured-solution square.
pub const MMS_LENGTH: f64 = 440.0;
pub const MMS_VELOCITY: f64 = 2000.0;
const MMS_OMEGA: f64 = 20.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsPoint {
    pub u: f64,
    pub rho: f64,
    pub forcing: f64,
}

/// The manufactured solution, its density and the forcing that makes it
/// an exact solution of `p_tt = c² (∇²p − ∇ρ/ρ · ∇p + f)`.
pub fn mms_fields(x: f64, z: f64, t: f64, dt: f64) -> MmsPoint {
    let k = PI / MMS_LENGTH;
    let (sx, cx) = (k * x).sin_cos();
    let (sz, cz) = (k * z).sin_cos();
    let (time, time_tt) = mms_time(t, dt);
    let rho = (1000.0 + sx) * (1000.0 + sz);
    let space = sx * sz;
    let advect = k * cx / (1000.0 + sx) * k * cx * sz + k * cz / (1000.0 + sz) * sx * k * cz;
    let forcing = space * (time_tt / (MMS_VELOCITY * MMS_VELOCITY) + 2.0 * k * k * time) + advect * time;
    MmsPoint {
        u: space * time,
        rho,
        forcing,
    }
}

pub fn mms_density(x: f64, z: f64) -> f64 {
    let k = PI / MMS_LENGTH;
    (1000.0 + (k * x).sin()) * (1000.0 + (k * z).sin())
}

/// `T(t) = sin(ωt) sin(ω(t + dt))` and its second derivative.
fn mms_time(t: f64, dt: f64) -> (f64, f64) {
    let w = MMS_OMEGA;
    let value = (w * t).sin() * (w * (t + dt)).sin();
    let second = 2.0 * w * w * (w * (2.0 * t + dt)).cos();
    (value, second)
}

/// Euclidean norm of `a - b`.
pub fn l2_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "traces have {} and {} samples",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Least-squares slope of `log(error)` against `log(resolution)`.
pub fn convergence_rate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(Error::InvalidArgument(
            "resolutions and errors must be positive".into(),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub label: String,
    /// `(resolution, error)`, resolutions strictly decreasing.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub nominal: f64,
}

impl ConvergenceReport {
    pub fn new(label: impl Into<String>, nominal: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "a convergence report needs at least 3 points, got {}",
                points.len()
            )));
        }
        if points.windows(2).any(|w| !(w[1].0 < w[0].0)) {
            return Err(Error::InvalidArgument(
                "resolutions must be strictly decreasing".into(),
            ));
        }
        let slope = convergence_rate(&points)?;
        Ok(Self {
            label: label.into(),
            points,
            slope,
            nominal,
        })
    }

    pub fn slope_within(&self, tolerance: f64) -> bool {
        (self.slope - self.nominal).abs() <= tolerance
    }

    /// `error[i] / error[i + 1]` for successive refinements.
    pub fn ratios(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[0].1 / w[1].1).collect()
    }
}

/// Homogeneous square with one on-node source and one receiver, the setup
/// of the temporal, spatial and analytical studies.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSourceCase {
    pub extent: f64,
    pub velocity: f64,
    pub spacing: f64,
    pub space_order: usize,
    pub dt: f64,
    pub tf: f64,
    pub source: [f64; 2],
    pub receiver: [f64; 2],
    pub peak_frequency: f64,
    /// Ricker centre time; chosen so `s(0)` is negligible.
    pub delay: f64,
    pub window_radius: usize,
    pub precision: Precision,
    pub backend: Backend,
}

impl PointSourceCase {
    /// 400 m square, c = 1500 m/s, receiver 84.85 m from the central source.
    pub fn standard() -> Self {
        Self {
            extent: 400.0,
            velocity: 1500.0,
            spacing: 0.5,
            space_order: 8,
            dt: 1e-4,
            tf: 0.15,
            source: [200.0, 200.0],
            receiver: [260.0, 260.0],
            peak_frequency: 40.0,
            delay: 0.05,
            window_radius: 4,
            precision: Precision::Double,
            backend: Backend::Serial,
        }
    }

    /// The analytical-agreement preset: the standard case in single precision.
    pub fn analytical() -> Self {
        Self {
            precision: Precision::Single,
            ..Self::standard()
        }
    }

    pub fn distance(&self) -> f64 {
        let dz = self.receiver[0] - self.source[0];
        let dx = self.receiver[1] - self.source[1];
        dz.hypot(dx)
    }
}

/// Time steps of the temporal study (h = 0.5 m, order 8).
pub const TEMPORAL_DTS: [f64; 3] = [1e-4, 5e-5, 2.5e-5];
/// Fixed step and grid spacings of the spatial study.
pub const SPATIAL_DT: f64 = 2.5e-5;
pub const SPATIAL_SPACINGS: [f64; 3] = [2.0, 1.0, 0.5];
/// Grid spacings of the manufactured-solution study.
pub const MMS_SPACINGS: [f64; 3] = [8.0, 4.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct PointTrace {
    pub dt: f64,
    pub times: Vec<f64>,
    pub wavelet: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Runs the point-source case. The source is injected as `2 s / (h_z h_x)`
/// so that the simulated field compares directly to
/// [`analytical_response`] (the discrete delta has weight `1 / cell area`,
/// and the reference multiplier is twice the unit-source Green's function).
pub fn simulate_point_source(case: &PointSourceCase) -> Result<PointTrace> {
    let l = case.extent;
    let h = case.spacing;
    let grid = build_grid(&[(0.0, l), (0.0, l)], &[h, h], case.space_order, case.precision)?;
    let model = SpaceModel::homogeneous(grid.clone(), case.velocity, BoundaryCondition::NullDirichlet)?;
    let axis = time_axis(case.tf, Some(case.dt), 0, model.stable_dt()?)?;
    let wavelet = ricker_delayed(&axis, case.peak_frequency, case.delay)?;
    let src = build_injection_map(&PointSet::new(vec![case.source.to_vec()], case.window_radius)?, &grid)?;
    let rec = build_injection_map(&PointSet::new(vec![case.receiver.to_vec()], case.window_radius)?, &grid)?;
    let scaled = wavelet.scaled(2.0 / (h * h));
    let seis = match case.precision {
        Precision::Single => run::<f32>(model, axis.clone(), case.backend, src, scaled, rec, case.receiver)?,
        Precision::Double => run::<f64>(model, axis.clone(), case.backend, src, scaled, rec, case.receiver)?,
    };
    Ok(PointTrace {
        dt: case.dt,
        times: seis.times.clone(),
        wavelet: wavelet.samples,
        numeric: seis.trace(0),
    })
}

fn run<T: Real>(
    model: SpaceModel,
    axis: crate::time_model::TimeAxis,
    backend: Backend,
    src: crate::acquisition::InterpolationMap,
    wavelet: crate::acquisition::Wavelet,
    rec: crate::acquisition::InterpolationMap,
    receiver: [f64; 2],
) -> Result<Seismogram> {
    let mut solver = Solver::<T>::new(model, axis)?
        .with_backend(backend)?
        .with_sources(src, wavelet)?
        .with_receivers(rec, vec![receiver.to_vec()])?;
    Ok(solver.forward()?.1)
}

/// Reference trace for a simulated case, sampled like the simulation.
pub fn reference_trace(case: &PointSourceCase, trace: &PointTrace, options: ReferenceOptions) -> Result<Vec<f64>> {
    analytical_response_with(&trace.wavelet, trace.dt, case.distance(), case.velocity, options)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticalOutcome {
    pub times: Vec<f64>,
    pub numeric: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_error: f64,
    pub reference_peak: f64,
}

impl AnalyticalOutcome {
    pub fn relative_error(&self) -> f64 {
        self.max_error / self.reference_peak
    }
}

/// Padding used by the study drivers. The 2D response to a zero-mean pulse
/// decays only like t^-3, so the wrapped-around tail of a shorter window
/// would dominate the high-order spatial errors.
pub const STUDY_PADDING: usize = 512;

pub fn analytical_study(case: &PointSourceCase) -> Result<AnalyticalOutcome> {
    let trace = simulate_point_source(case)?;
    let reference = reference_trace(
        case,
        &trace,
        ReferenceOptions {
            padding: STUDY_PADDING,
            time: TimeTreatment::Continuous,
        },
    )?;
    let max_error = trace
        .numeric
        .iter()
        .zip(&reference)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let reference_peak = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(AnalyticalOutcome {
        times: trace.times,
        numeric: trace.numeric,
        reference,
        max_error,
        reference_peak,
    })
}

/// Error against the continuous reference for each `dt`, measured on the
/// sample times of the coarsest step so every run contributes the same
/// number of samples.
pub fn temporal_study(base: &PointSourceCase, dts: &[f64]) -> Result<ConvergenceReport> {
    let coarse = dts.iter().cloned().fold(f64::MIN, f64::max);
    let mut points = Vec::with_capacity(dts.len());
    let mut reference: Option<Vec<f64>> = None;
    for &dt in dts {
        let case = PointSourceCase { dt, ..base.clone() };
        let trace = simulate_point_source(&case)?;
        let stride = (coarse / dt).round() as usize;
        if ((stride as f64) * dt - coarse).abs() > 1e-9 * coarse {
            return Err(Error::InvalidArgument(format!(
                "dt {dt} does not divide the coarsest step {coarse}"
            )));
        }
        let sampled: Vec<f64> = trace.numeric.iter().step_by(stride).cloned().collect();
        if reference.is_none() {
            let coarse_case = PointSourceCase { dt: coarse, ..base.clone() };
            let axis = time_axis(coarse_case.tf, Some(coarse), 0, f64::INFINITY)?;
            let w = ricker_delayed(&axis, base.peak_frequency, base.delay)?;
            reference = Some(analytical_response_with(
                &w.samples,
                coarse,
                base.distance(),
                base.velocity,
                ReferenceOptions {
                    padding: STUDY_PADDING,
                    time: TimeTreatment::Continuous,
                },
            )?);
        }
        let r = reference.as_ref().expect("reference computed above");
        let n = sampled.len().min(r.len());
        points.push((dt, l2_error(&sampled[..n], &r[..n])?));
    }
    points.sort_by(|a, b| b.0.total_cmp(&a.0));
    ConvergenceReport::new("time", 2.0, points)
}

/// Spatial error at fixed `dt` against the leapfrog-exact reference, so the
/// time discretisation does not put a floor under the fitted slope.
pub fn spatial_study(base: &PointSourceCase, spacings: &[f64], space_order: usize) -> Result<ConvergenceReport> {
    let mut points = Vec::with_capacity(spacings.len());
    let mut reference: Option<Vec<f64>> = None;
    for &h in spacings {
        let case = PointSourceCase {
            spacing: h,
            space_order,
            ..base.clone()
        };
        let trace = simulate_point_source(&case)?;
        if reference.is_none() {
            reference = Some(reference_trace(
                &case,
                &trace,
                ReferenceOptions {
                    padding: STUDY_PADDING,
                    time: TimeTreatment::Leapfrog,
                },
            )?);
        }
        let r = reference.as_ref().expect("reference computed above");
        points.push((h, l2_error(&trace.numeric, r)?));
    }
    points.sort_by(|a, b| b.0.total_cmp(&a.0));
    ConvergenceReport::new(format!("space order {space_order}"), space_order as f64, points)
}

/// Manufactured-solution run on the 440 m square with Dirichlet faces.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsCase {
    pub space_order: usize,
    pub dt: f64,
    pub tf: f64,
    pub receiver: [f64; 2],
    pub precision: Precision,
    pub backend: Backend,
}

impl MmsCase {
    pub fn standard() -> Self {
        Self {
            space_order: 2,
            dt: 5e-5,
            tf: 0.2,
            receiver: [280.0, 280.0],
            precision: Precision::Double,
            backend: Backend::Serial,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsTrace {
    pub times: Vec<f64>,
    pub numeric: Vec<f64>,
    pub exact: Vec<f64>,
}

pub fn simulate_mms(case: &MmsCase, spacing: f64) -> Result<MmsTrace> {
    let l = MMS_LENGTH;
    let grid = build_grid(&[(0.0, l), (0.0, l)], &[spacing, spacing], case.space_order, case.precision)?;
    let materials = MaterialModel::from_fn(&grid, |_| MMS_VELOCITY, Some(&|p: &[f64]| mms_density(p[1], p[0])))?;
    let model = SpaceModel::new(
        grid.clone(),
        materials,
        damping_field(&grid, 0.0, 0.0)?,
        BoundarySpec::uniform(BoundaryCondition::NullDirichlet, 2),
    )?;
    let axis = time_axis(case.tf, Some(case.dt), 0, model.stable_dt()?)?;
    let rec = build_injection_map(&PointSet::new(vec![case.receiver.to_vec()], 4)?, &grid)?;
    let seis = match case.precision {
        Precision::Single => run_mms::<f32>(&grid, model, axis.clone(), case, rec)?,
        Precision::Double => run_mms::<f64>(&grid, model, axis.clone(), case, rec)?,
    };
    let exact = axis
        .times()
        .iter()
        .map(|&t| mms_fields(case.receiver[1], case.receiver[0], t, case.dt).u)
        .collect();
    Ok(MmsTrace {
        times: seis.times.clone(),
        numeric: seis.trace(0),
        exact,
    })
}

fn run_mms<T: Real>(
    grid: &Grid,
    model: SpaceModel,
    axis: crate::time_model::TimeAxis,
    case: &MmsCase,
    rec: crate::acquisition::InterpolationMap,
) -> Result<Seismogram> {
    // forcing = space(x) * a(t) + advect(x) * b(t); split once per node
    let k = PI / MMS_LENGTH;
    let mut space = vec![T::zero(); grid.padded_points()];
    let mut advect = vec![T::zero(); grid.padded_points()];
    for (i, idx) in grid.padded_indices().enumerate() {
        let z = grid.padded_coordinate(0, idx[0]);
        let x = grid.padded_coordinate(1, idx[1]);
        let (sx, cx) = (k * x).sin_cos();
        let (sz, cz) = (k * z).sin_cos();
        space[i] = T::of(sx * sz);
        advect[i] = T::of(k * cx / (1000.0 + sx) * k * cx * sz + k * cz / (1000.0 + sz) * sx * k * cz);
    }
    let dt = case.dt;
    let forcing: Forcing<T> = Box::new(move |_, t, buf: &mut [T]| {
        let (time, time_tt) = mms_time(t, dt);
        let a = T::of(time_tt / (MMS_VELOCITY * MMS_VELOCITY) + 2.0 * k * k * time);
        let b = T::of(time);
        for ((f, &s), &v) in buf.iter_mut().zip(&space).zip(&advect) {
            *f = s * a + v * b;
        }
    });
    let mut solver = Solver::<T>::new(model, axis)?
        .with_backend(case.backend)?
        .with_forcing(forcing)
        .with_receivers(rec, vec![case.receiver.to_vec()])?;
    Ok(solver.forward()?.1)
}

pub fn mms_study(case: &MmsCase, spacings: &[f64]) -> Result<ConvergenceReport> {
    let mut points = Vec::with_capacity(spacings.len());
    for &h in spacings {
        let trace = simulate_mms(case, h)?;
        points.push((h, l2_error(&trace.numeric, &trace.exact)?));
    }
    points.sort_by(|a, b| b.0.total_cmp(&a.0));
    ConvergenceReport::new("mms", case.space_order as f64, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::ricker;
    use proptest::prelude::*;

    fn wavelet(n: usize, dt: f64, f: f64) -> Vec<f64> {
        let axis = time_axis(dt * (n - 1) as f64, Some(dt), 0, 1.0).unwrap();
        ricker(&axis, f).unwrap().samples
    }

    #[test]
    fn zero_wavelet_gives_zero_trace() {
        let r = analytical_response(&[0.0; 64], 1e-3, 10.0, 1500.0).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
        assert!(analytical_response(&[1.0], 1e-3, 0.0, 1500.0).is_err());
    }

    #[test]
    fn response_is_linear() {
        let s = wavelet(500, 1e-4, 30.0);
        let a = analytical_response(&s, 1e-4, 85.0, 1500.0).unwrap();
        let s2: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        let b = analytical_response(&s2, 1e-4, 85.0, 1500.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn synthesis_output_is_real() {
        // repeat the synthesis keeping the imaginary part to check symmetry
        let s = wavelet(400, 2e-4, 20.0);
        let m = 4 * s.len();
        let mut spec: Vec<Complex64> = s
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(m)
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(m).process(&mut spec);
        spec[0] = Complex64::new(0.0, 0.0);
        for k in 1..=m / 2 {
            let w = 2.0 * PI * k as f64 / (m as f64 * 2e-4);
            spec[k] *= Complex64::new(0.0, -0.5) * hankel2_0(w * 85.0 / 1500.0).unwrap();
        }
        spec[m / 2].im = 0.0;
        for k in m / 2 + 1..m {
            spec[k] = spec[m - k].conj();
        }
        planner.plan_fft_inverse(m).process(&mut spec);
        let peak = spec.iter().fold(0.0f64, |p, z| p.max(z.re.abs()));
        let imag = spec.iter().fold(0.0f64, |p, z| p.max(z.im.abs()));
        assert!(imag <= 1e-10 * peak);
    }

    #[test]
    fn response_is_causal_and_arrives_at_r_over_c() {
        let dt = 1e-4;
        let s = wavelet(1500, dt, 40.0);
        let r = analytical_response_with(&s, dt, 84.85, 1500.0, ReferenceOptions { padding: 16, ..Default::default() })
            .unwrap();
        let peak = r.iter().fold(0.0f64, |p, v| p.max(v.abs()));
        // the wavelet starts at -1e-3 of its peak, so allow that much leakage
        let onset = ((84.85 / 1500.0) / dt) as usize;
        let before = r[..onset - 50].iter().fold(0.0f64, |p, v| p.max(v.abs()));
        assert!(before < 2e-3 * peak, "{before} vs {peak}");
        assert!(peak > 0.0);
    }

    #[test]
    fn leapfrog_reference_approaches_continuous_as_dt_shrinks() {
        let diff = |dt: f64| {
            let n = (0.15 / dt) as usize + 1;
            let s = wavelet(n, dt, 30.0);
            let opt = |time| ReferenceOptions { padding: 8, time };
            let a = analytical_response_with(&s, dt, 85.0, 1500.0, opt(TimeTreatment::Continuous)).unwrap();
            let b = analytical_response_with(&s, dt, 85.0, 1500.0, opt(TimeTreatment::Leapfrog)).unwrap();
            a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let (d1, d2) = (diff(2e-4), diff(1e-4));
        assert!(d2 < d1 / 3.0, "{d1} {d2}");
    }

    #[test]
    fn mms_vanishes_at_start_and_on_boundary() {
        let dt = 5e-5;
        for &(x, z) in &[(13.0, 250.0), (280.0, 280.0)] {
            assert!(mms_fields(x, z, 0.0, dt).u.abs() < 1e-15);
            assert!(mms_fields(x, z, -dt, dt).u.abs() < 1e-15);
        }
        for &t in &[0.01, 0.033, 0.12] {
            for &s in &[0.0, 100.0, 321.0, 440.0] {
                for (x, z) in [(0.0, s), (MMS_LENGTH, s), (s, 0.0), (s, MMS_LENGTH)] {
                    assert!(mms_fields(x, z, t, dt).u.abs() < 1e-12);
                }
            }
        }
        assert_eq!(mms_fields(110.0, 330.0, 0.1, dt).rho, mms_density(110.0, 330.0));
    }

    /// 8th-order central differences of the continuous operator on `u*`.
    fn fd_forcing(x: f64, z: f64, t: f64, dt: f64) -> f64 {
        let c2 = crate::numerics::second_derivative_coefficients(8).unwrap();
        let c1 = crate::numerics::first_derivative_coefficients(8).unwrap();
        let u = |x: f64, z: f64, t: f64| mms_fields(x, z, t, dt).u;
        let d2 = |f: &dyn Fn(f64) -> f64, at: f64, h: f64| {
            let mut s = c2[0] * f(at);
            for j in 1..c2.len() {
                s += c2[j] * (f(at + j as f64 * h) + f(at - j as f64 * h));
            }
            s / (h * h)
        };
        let d1 = |f: &dyn Fn(f64) -> f64, at: f64, h: f64| {
            let mut s = 0.0;
            for j in 1..=c1.len() {
                s += c1[j - 1] * (f(at + j as f64 * h) - f(at - j as f64 * h));
            }
            s / (2.0 * h)
        };
        let hs = 1.0;
        let ht = 5e-4;
        let rho = mms_density(x, z);
        let u_tt = d2(&|s| u(x, z, s), t, ht);
        let lap = d2(&|s| u(s, z, t), x, hs) + d2(&|s| u(x, s, t), z, hs);
        let gx = d1(&|s| mms_density(s, z), x, hs) / rho * d1(&|s| u(s, z, t), x, hs);
        let gz = d1(&|s| mms_density(x, s), z, hs) / rho * d1(&|s| u(x, s, t), z, hs);
        u_tt / (MMS_VELOCITY * MMS_VELOCITY) - lap + gx + gz
    }

    #[test]
    fn mms_forcing_matches_finite_differences() {
        let pts = [
            (37.1, 402.5, 0.0133),
            (220.0, 220.0, 0.071),
            (305.2, 96.4, 0.1123),
            (150.8, 290.3, 0.1559),
            (412.9, 18.2, 0.1874),
        ];
        for &(x, z, t) in &pts {
            let exact = mms_fields(x, z, t, 5e-5).forcing;
            let fd = fd_forcing(x, z, t, 5e-5);
            assert!(((exact - fd) / exact).abs() < 1e-6, "({x}, {z}, {t}): {exact} vs {fd}");
        }
    }

    #[test]
    fn l2_error_cases() {
        let a = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(l2_error(&a, &a).unwrap(), 0.0);
        let eps = 1e-3;
        let b: Vec<f64> = a.iter().map(|v| v + eps).collect();
        assert!((l2_error(&a, &b).unwrap() - eps * 2.0).abs() < 1e-15);
        assert!(l2_error(&a, &b[..3]).is_err());
    }

    #[test]
    fn convergence_rate_of_synthetic_data() {
        let pts: Vec<(f64, f64)> = [1e-4, 5e-5, 2.5e-5].iter().map(|&h| (h, 3.0 * h * h)).collect();
        assert!((convergence_rate(&pts).unwrap() - 2.0).abs() < 1e-6);
        let pts: Vec<(f64, f64)> = [2.0, 1.0, 0.5].iter().map(|&h: &f64| (h, 0.1 * h.powi(4))).collect();
        assert!((convergence_rate(&pts).unwrap() - 4.0).abs() < 1e-6);
        assert!(convergence_rate(&pts[..1]).is_err());
    }

    #[test]
    fn report_invariants() {
        let pts = vec![(2.0, 4.0), (1.0, 1.0), (0.5, 0.25)];
        let r = ConvergenceReport::new("x", 2.0, pts.clone()).unwrap();
        assert!(r.slope_within(1e-9));
        assert_eq!(r.ratios(), vec![4.0, 4.0]);
        assert!(ConvergenceReport::new("x", 2.0, pts[..2].to_vec()).is_err());
        let unsorted = vec![(1.0, 1.0), (2.0, 4.0), (0.5, 0.25)];
        assert!(ConvergenceReport::new("x", 2.0, unsorted).is_err());
    }

    #[test]
    fn standard_case_geometry() {
        let c = PointSourceCase::standard();
        assert!((c.distance() - 84.852_813_742_385_7).abs() < 1e-9);
        for h in [2.0, 1.0, 0.5] {
            for p in c.source.iter().chain(&c.receiver) {
                assert_eq!((p / h).fract(), 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn l2_matches_direct_summation(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..200)) {
            let a: Vec<f64> = v.iter().map(|p| p.0).collect();
            let b: Vec<f64> = v.iter().map(|p| p.1).collect();
            let mut s = 0.0;
            for i in 0..a.len() {
                s += (a[i] - b[i]).powi(2);
            }
            let e = l2_error(&a, &b).unwrap();
            prop_assert!((e - s.sqrt()).abs() <= 1e-12 * s.sqrt().max(1.0));
        }

        #[test]
        fn slope_recovers_power_laws(p in 0.5f64..12.0, c in 1e-6f64..1e3) {
            let pts: Vec<(f64, f64)> = [4.0, 2.0, 1.0, 0.5].iter().map(|&h: &f64| (h, c * h.powf(p))).collect();
            prop_assert!((convergence_rate(&pts).unwrap() - p).abs() < 1e-9);
        }
    }
}
