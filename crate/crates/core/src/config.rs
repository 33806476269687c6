//! JSON run configuration and the `run` workflow built on it.
//!
//! Per-side arrays are ordered Z-low (top), Z-high (bottom), X-low, X-high
//! and, in 3D, Y-low, Y-high. Relative paths resolve against the directory
//! holding the config file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{build_injection_map, ricker, InterpolationMap, PointSet, Wavelet};
use crate::io_formats::{
    image_slice, load_model, sidecar_path, write_pgm, write_seismogram, write_snapshots, SeismogramFormat,
};
use crate::kernel::{Backend, BoundaryCondition, BoundarySpec, Seismogram, Solver};
use crate::space_model::{
    build_grid, damping_field, default_damping_alpha, extend_with_damping, resample_model, MaterialModel,
    SpaceModel, DEFAULT_DAMPING_POWER,
};
use crate::time_model::{build_time_axis, TimeAxis};
use crate::{Error, Precision, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `[z_min, z_max, x_min, x_max(, y_min, y_max)]` in meters.
    pub bounding_box: Vec<f64>,
    pub grid_spacing: Vec<f64>,
    pub space_order: usize,
    #[serde(default)]
    pub dtype: Precision,
    pub velocity_model: ModelSource,
    #[serde(default)]
    pub density_model: Option<ModelSource>,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    pub time: TimeConfig,
    pub sources: PointsConfig,
    pub receivers: PointsConfig,
    pub wavelet: WaveletConfig,
    #[serde(default)]
    pub backend: BackendConfig,
}

/// A raw model file with sidecar, or a constant value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSource {
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Defaults to `path` with a `.json` extension.
    #[serde(default)]
    pub sidecar: Option<PathBuf>,
    #[serde(default)]
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// Meters per side; empty means no absorbing layer.
    #[serde(default)]
    pub damping_length: Vec<f64>,
    /// One condition per face; empty means `none` everywhere.
    #[serde(default)]
    pub boundary_condition: Vec<BoundaryCondition>,
    #[serde(default)]
    pub damping_polynomial_degree: Option<f64>,
    #[serde(default)]
    pub damping_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub tf: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub saving_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    pub coordinates: Vec<Vec<f64>>,
    #[serde(default = "default_window_radius")]
    pub window_radius: usize,
}

fn default_window_radius() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveletConfig {
    Ricker {
        peak_frequency: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// One amplitude per line; `dt` is the file's sample interval.
    File {
        path: PathBuf,
        #[serde(default)]
        dt: Option<f64>,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Serial,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(rename = "type", default)]
    pub kind: BackendKind,
    /// 0 or absent uses every available core.
    #[serde(default)]
    pub workers: usize,
}

impl BackendConfig {
    pub fn backend(&self) -> Backend {
        match self.kind {
            BackendKind::Serial => Backend::Serial,
            BackendKind::Parallel => Backend::Parallel { workers: self.workers },
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            Error::config(pointer, e.inner().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Everything a run needs, resolved from a [`RunConfig`].
pub struct RunSetup {
    pub model: SpaceModel,
    pub time: TimeAxis,
    pub sources: InterpolationMap,
    pub wavelet: Wavelet,
    pub receivers: InterpolationMap,
    pub receiver_coordinates: Vec<Vec<f64>>,
    pub backend: Backend,
    pub precision: Precision,
    pub dt_from_config: bool,
}

pub fn build_run(config: &RunConfig, base_dir: &Path) -> Result<RunSetup> {
    let n = config.bounding_box.len();
    if n != 4 && n != 6 {
        return Err(Error::config("/bounding_box", format!("expected 4 or 6 values, got {n}")));
    }
    let ndim = n / 2;
    let bbox: Vec<(f64, f64)> = config.bounding_box.chunks(2).map(|c| (c[0], c[1])).collect();
    if config.grid_spacing.len() != ndim {
        return Err(Error::config(
            "/grid_spacing",
            format!("expected {ndim} values, got {}", config.grid_spacing.len()),
        ));
    }
    let grid = build_grid(&bbox, &config.grid_spacing, config.space_order, config.dtype).map_err(|e| match e {
        Error::InvalidOrder(_) => Error::config("/space_order", e.to_string()),
        other => Error::config("/bounding_box", other.to_string()),
    })?;
    let b = &config.boundary;
    let lengths = if b.damping_length.is_empty() {
        vec![0.0; 2 * ndim]
    } else {
        b.damping_length.clone()
    };
    let grid = extend_with_damping(&grid, &lengths).map_err(|e| Error::config("/boundary/damping_length", e.to_string()))?;
    let faces = if b.boundary_condition.is_empty() {
        vec![BoundaryCondition::None; 2 * ndim]
    } else {
        b.boundary_condition.clone()
    };
    let spec = BoundarySpec::new(faces, ndim).map_err(|e| Error::config("/boundary/boundary_condition", e.to_string()))?;

    let velocity = material(&config.velocity_model, &grid, base_dir, "/velocity_model")?;
    let density = match &config.density_model {
        Some(src) => Some(material(src, &grid, base_dir, "/density_model")?),
        None => None,
    };
    let materials = MaterialModel::new(&grid, velocity, density).map_err(|e| Error::config("/velocity_model", e.to_string()))?;
    let alpha = b.damping_alpha.unwrap_or_else(|| default_damping_alpha(materials.c_max));
    let power = b.damping_polynomial_degree.unwrap_or(DEFAULT_DAMPING_POWER);
    let damping = damping_field(&grid, alpha, power).map_err(|e| Error::config("/boundary", e.to_string()))?;
    let c_max = materials.c_max;
    let model = SpaceModel::new(grid.clone(), materials, damping, spec)?;

    let t = &config.time;
    let time = build_time_axis(t.tf, t.dt, t.saving_stride, &grid, c_max).map_err(|e| Error::config("/time", e.to_string()))?;
    let sources = points(&config.sources, &grid, "/sources")?;
    let receivers = points(&config.receivers, &grid, "/receivers")?;
    let wavelet = match &config.wavelet {
        WaveletConfig::Ricker { peak_frequency, amplitude } => ricker(&time, *peak_frequency)
            .map_err(|e| Error::config("/wavelet/peak_frequency", e.to_string()))?
            .scaled(*amplitude),
        WaveletConfig::File { path, dt } => Wavelet::from_file(&base_dir.join(path), &time, *dt)
            .map_err(|e| Error::config("/wavelet/path", e.to_string()))?,
    };
    Ok(RunSetup {
        model,
        time,
        sources,
        wavelet,
        receivers,
        receiver_coordinates: config.receivers.coordinates.clone(),
        backend: config.backend.backend(),
        precision: config.dtype,
        dt_from_config: t.dt.is_some(),
    })
}

fn material(src: &ModelSource, grid: &crate::space_model::Grid, base: &Path, pointer: &str) -> Result<Vec<f64>> {
    match (&src.path, src.constant) {
        (Some(path), None) => {
            let data = base.join(path);
            let side = src
                .sidecar
                .as_ref()
                .map(|s| base.join(s))
                .unwrap_or_else(|| sidecar_path(&data));
            let raw = load_model(&data, &side, grid.precision).map_err(|e| Error::config(format!("{pointer}/path"), e.to_string()))?;
            resample_model(&raw.values, &raw.shape, grid).map_err(|e| Error::config(pointer.to_string(), e.to_string()))
        }
        (None, Some(v)) => Ok(vec![grid.precision.narrow(v); grid.padded_points()]),
        _ => Err(Error::config(pointer.to_string(), "give exactly one of `path` or `constant`")),
    }
}

fn points(cfg: &PointsConfig, grid: &crate::space_model::Grid, pointer: &str) -> Result<InterpolationMap> {
    let set = PointSet::new(cfg.coordinates.clone(), cfg.window_radius)
        .map_err(|e| Error::config(format!("{pointer}/window_radius"), e.to_string()))?;
    build_injection_map(&set, grid).map_err(|e| match e {
        Error::OutsideDomain { index, .. } => Error::config(format!("{pointer}/coordinates/{index}"), e.to_string()),
        other => Error::config(format!("{pointer}/coordinates"), other.to_string()),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub verbose: bool,
    /// Overrides the config backend with a parallel one of this many workers.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dt: f64,
    pub stable_dt: f64,
    pub n_steps: usize,
    pub tf: f64,
    /// `"ok"` or `"overridden"` when the configured dt exceeds the bound.
    pub stability: String,
    pub dt_source: String,
    pub space_order: usize,
    pub precision: Precision,
    pub backend: String,
    pub workers: usize,
    pub interior_shape: Vec<usize>,
    pub extended_shape: Vec<usize>,
    pub padded_shape: Vec<usize>,
    pub snapshots: usize,
    pub receivers: usize,
    pub wall_seconds: f64,
    pub seismogram_csv: PathBuf,
    pub seismogram_bin: PathBuf,
}

/// Runs a config and writes `seismogram.{csv,bin,json}`, `snapshots/`,
/// `images/` and `manifest.json` into `out_dir`.
pub fn cmd_run(config_path: &Path, out_dir: &Path, options: RunOptions) -> Result<RunManifest> {
    let config = RunConfig::from_file(config_path)?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let mut setup = build_run(&config, base)?;
    if let Some(w) = options.workers {
        setup.backend = if w <= 1 { Backend::Serial } else { Backend::Parallel { workers: w } };
    }
    match setup.precision {
        Precision::Single => run_typed::<f32>(setup, out_dir, options),
        Precision::Double => run_typed::<f64>(setup, out_dir, options),
    }
}

fn run_typed<T: Real>(setup: RunSetup, out_dir: &Path, options: RunOptions) -> Result<RunManifest> {
    let grid = setup.model.grid.clone();
    let time = setup.time.clone();
    let backend = setup.backend;
    let mut solver = Solver::<T>::new(setup.model, setup.time)?
        .with_backend(backend)?
        .with_sources(setup.sources, setup.wavelet)?
        .with_receivers(setup.receivers, setup.receiver_coordinates)?
        .with_verbose(options.verbose);
    let start = Instant::now();
    let (snapshots, seismogram) = solver.forward()?;
    let wall = start.elapsed().as_secs_f64();

    let snap_dir = out_dir.join("snapshots");
    let img_dir = out_dir.join("images");
    for d in [out_dir, &snap_dir, &img_dir] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let csv = out_dir.join("seismogram.csv");
    let bin = out_dir.join("seismogram.bin");
    write_outputs(&seismogram, &csv, &bin)?;
    write_snapshots(&snapshots, &snap_dir)?;
    for (step, frame) in snapshots.steps.iter().zip(&snapshots.frames) {
        let (values, rows, cols) = image_slice(frame, &snapshots.shape)?;
        write_pgm(&img_dir.join(format!("snapshot_{step:06}.pgm")), &values, rows, cols)?;
    }
    let (backend_name, workers) = match backend {
        Backend::Serial => ("serial".to_string(), 1),
        Backend::Parallel { workers } => ("parallel".to_string(), workers),
    };
    let manifest = RunManifest {
        dt: time.dt,
        stable_dt: time.stable_dt,
        n_steps: time.n_steps,
        tf: time.tf,
        stability: if time.exceeds_stable() { "overridden" } else { "ok" }.into(),
        dt_source: if setup.dt_from_config { "config" } else { "stable" }.into(),
        space_order: grid.space_order,
        precision: setup.precision,
        backend: backend_name,
        workers,
        interior_shape: grid.interior_shape.clone(),
        extended_shape: grid.extended_shape(),
        padded_shape: grid.padded_shape(),
        snapshots: snapshots.frames.len(),
        receivers: seismogram.n_receivers(),
        wall_seconds: wall,
        seismogram_csv: csv,
        seismogram_bin: bin,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn write_outputs(seismogram: &Seismogram, csv: &Path, bin: &Path) -> Result<()> {
    write_seismogram(seismogram, csv, SeismogramFormat::Csv)?;
    write_seismogram(seismogram, bin, SeismogramFormat::Bin)
}
