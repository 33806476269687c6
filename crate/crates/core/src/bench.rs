//! Throughput benchmark of the time loop.
//!
//! Each configuration runs a homogeneous model with one central Ricker
//! source. Only `forward` is timed; grid setup and allocation are not.

use std::time::Instant;

use serde::Serialize;

use crate::acquisition::{build_injection_map, ricker, PointSet};
use crate::kernel::{Backend, BoundaryCondition, Seismogram, Solver};
use crate::space_model::{build_grid, Grid, SpaceModel};
use crate::time_model::time_axis;
use crate::{Error, Precision, Result};

pub const DEFAULT_REPETITIONS: usize = 10;
pub const MIN_REPETITIONS: usize = 3;

const SPACING: f64 = 10.0;
const VELOCITY: f64 = 1500.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    /// Interior nodes per axis (2 or 3 axes).
    pub shape: Vec<usize>,
    pub orders: Vec<usize>,
    pub steps: usize,
    pub backends: Vec<Backend>,
    pub repetitions: usize,
    pub precision: Precision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub shape: Vec<usize>,
    pub order: usize,
    pub steps: usize,
    pub backend: String,
    pub workers: usize,
    pub repetitions: usize,
    pub wall_seconds: f64,
    /// Extended-grid points times steps per second.
    pub throughput: f64,
    /// Serial time over this backend's time, when a serial row exists.
    pub speedup: Option<f64>,
}

fn grid_for(shape: &[usize], order: usize, precision: Precision) -> Result<Grid> {
    let bbox: Vec<(f64, f64)> = shape.iter().map(|&n| (0.0, (n.max(2) - 1) as f64 * SPACING)).collect();
    build_grid(&bbox, &vec![SPACING; shape.len()], order, precision)
}

/// One run of `steps` steps; returns the seismogram and the loop time.
pub fn timed_run(shape: &[usize], order: usize, steps: usize, backend: Backend, precision: Precision) -> Result<(Seismogram, f64)> {
    let grid = grid_for(shape, order, precision)?;
    let model = SpaceModel::homogeneous(grid.clone(), VELOCITY, BoundaryCondition::NullDirichlet)?;
    let dt = model.stable_dt()?;
    let axis = time_axis(steps as f64 * dt, Some(dt), 0, dt)?;
    let centre: Vec<f64> = grid.bbox.iter().map(|(lo, hi)| 0.5 * (lo + hi) + 0.3 * SPACING).collect();
    let probe: Vec<f64> = grid.bbox.iter().map(|(lo, hi)| lo + 0.3 * (hi - lo)).collect();
    let src = build_injection_map(&PointSet::new(vec![centre], 4)?, &grid)?;
    let rec = build_injection_map(&PointSet::new(vec![probe.clone()], 4)?, &grid)?;
    let peak = VELOCITY / (10.0 * SPACING);
    let wavelet = ricker(&axis, peak)?;
    let start;
    let seis = match precision {
        Precision::Single => {
            let mut s = Solver::<f32>::new(model, axis)?
                .with_backend(backend)?
                .with_sources(src, wavelet)?
                .with_receivers(rec, vec![probe])?;
            start = Instant::now();
            s.forward()?.1
        }
        Precision::Double => {
            let mut s = Solver::<f64>::new(model, axis)?
                .with_backend(backend)?
                .with_sources(src, wavelet)?
                .with_receivers(rec, vec![probe])?;
            start = Instant::now();
            s.forward()?.1
        }
    };
    Ok((seis, start.elapsed().as_secs_f64()))
}

/// Largest relative difference between two traces, scaled by the peak of `a`.
pub fn relative_difference(a: &Seismogram, b: &Seismogram) -> f64 {
    let peak = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.data.iter().zip(&b.data).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if peak > 0.0 {
        diff / peak
    } else {
        diff
    }
}

/// Serial against every parallel backend on a shrunken copy of the spec.
pub fn equivalence_probe(spec: &BenchSpec) -> Result<()> {
    let shape: Vec<usize> = spec.shape.iter().map(|&n| n.min(32)).collect();
    let steps = spec.steps.min(50);
    for &order in &spec.orders {
        let (serial, _) = timed_run(&shape, order, steps, Backend::Serial, Precision::Double)?;
        for &b in spec.backends.iter().filter(|b| **b != Backend::Serial) {
            let (other, _) = timed_run(&shape, order, steps, b, Precision::Double)?;
            let d = relative_difference(&serial, &other);
            if d > 1e-12 {
                return Err(Error::BackendMismatch(format!(
                    "{b:?} order {order}: relative difference {d:e}"
                )));
            }
        }
    }
    Ok(())
}

pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchResult>> {
    if spec.repetitions < MIN_REPETITIONS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPETITIONS} repetitions are required, got {}",
            spec.repetitions
        )));
    }
    if spec.backends.is_empty() || spec.orders.is_empty() || spec.steps == 0 {
        return Err(Error::InvalidArgument("need at least one backend, order and step".into()));
    }
    equivalence_probe(spec)?;
    let points: usize = grid_for(&spec.shape, spec.orders[0], spec.precision)?.extended_points();
    let mut rows = Vec::new();
    for &order in &spec.orders {
        let mut serial_time = None;
        let start = rows.len();
        for &backend in &spec.backends {
            let mut total = 0.0;
            for _ in 0..spec.repetitions {
                total += timed_run(&spec.shape, order, spec.steps, backend, spec.precision)?.1;
            }
            let mean = total / spec.repetitions as f64;
            let (name, workers) = match backend {
                Backend::Serial => {
                    serial_time = Some(mean);
                    ("serial".to_string(), 1)
                }
                Backend::Parallel { workers } => ("parallel".to_string(), resolved_workers(workers)),
            };
            rows.push(BenchResult {
                shape: spec.shape.clone(),
                order,
                steps: spec.steps,
                backend: name,
                workers,
                repetitions: spec.repetitions,
                wall_seconds: mean,
                throughput: (points * spec.steps) as f64 / mean,
                speedup: None,
            });
        }
        if let Some(t) = serial_time {
            for row in &mut rows[start..] {
                row.speedup = Some(t / row.wall_seconds);
            }
        }
    }
    Ok(rows)
}

fn resolved_workers(workers: usize) -> usize {
    if workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        workers
    }
}

fn shape_label(shape: &[usize]) -> String {
    shape.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
}

pub fn markdown_table(rows: &[BenchResult]) -> String {
    let mut out = String::from(
        "| grid | order | steps | backend | workers | wall (s) | points*steps/s | speedup |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {:.4} | {:.4e} | {} |\n",
            shape_label(&r.shape),
            r.order,
            r.steps,
            r.backend,
            r.workers,
            r.wall_seconds,
            r.throughput,
            r.speedup.map(|s| format!("{s:.2}")).unwrap_or_else(|| "-".into()),
        ));
    }
    out
}

pub fn csv_table(rows: &[BenchResult]) -> String {
    let mut out = String::from("grid,order,steps,backend,workers,repetitions,wall_seconds,throughput,speedup\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6e},{:.6e},{}\n",
            shape_label(&r.shape),
            r.order,
            r.steps,
            r.backend,
            r.workers,
            r.repetitions,
            r.wall_seconds,
            r.throughput,
            r.speedup.map(|s| format!("{s:.4}")).unwrap_or_default(),
        ));
    }
    out
}
