//! Explicit leapfrog propagator.
//!
//! One step maps `(p^{n-1}, p^n)` to
//!
//! ```text
//! p^{n+1} = [c²Δt²(∇²p − ∇ρ/ρ·∇p + F_n) + 2p^n − (1 − ηΔt) p^{n-1}] / (1 + ηΔt)
//! ```
//!
//! on every extended-grid node, with the ghost layers filled from the
//! [`BoundarySpec`] before each step. The serial and parallel backends run the
//! same per-node arithmetic and give bit-identical fields.

mod boundary;
mod density;
mod stencil;

use std::time::Instant;

use rayon::prelude::*;

use crate::acquisition::{InterpolationMap, Wavelet};
use crate::numerics::StencilCoeffs;
use crate::space_model::SpaceModel;
use crate::time_model::TimeAxis;
use crate::{Error, Real, Result};

pub use boundary::{apply_boundary, BoundaryCondition, BoundarySpec};
pub use density::density_log_gradient;

use boundary::BoundaryPlan;
use stencil::{PlaneFn, StepContext, MAX_RADIUS};

/// Default ceiling on snapshot storage.
pub const DEFAULT_SNAPSHOT_CAP: u64 = 4 << 30;

/// How often (in steps) the field is scanned for NaN/Inf.
pub const FINITE_CHECK_INTERVAL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Serial,
    /// Slab-parallel over axis 0. `workers = 0` uses every available core.
    Parallel { workers: usize },
}

/// The two rolling time levels on the padded grid.
#[derive(Debug, Clone)]
pub struct Wavefield<T> {
    pub prev: Vec<T>,
    pub curr: Vec<T>,
}

/// Receiver traces: `data[k * n_receivers + r]` is receiver `r` at `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Seismogram {
    pub times: Vec<f64>,
    pub receivers: Vec<Vec<f64>>,
    pub data: Vec<f64>,
}

impl Seismogram {
    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn rows(&self) -> usize {
        self.times.len()
    }

    pub fn trace(&self, receiver: usize) -> Vec<f64> {
        let n = self.n_receivers();
        (0..self.rows()).map(|k| self.data[k * n + receiver]).collect()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.n_receivers();
        &self.data[k * n..(k + 1) * n]
    }
}

/// Stored time levels, each an extended-grid copy (ghost layers stripped).
#[derive(Debug, Clone)]
pub struct Snapshots<T> {
    pub shape: Vec<usize>,
    pub steps: Vec<usize>,
    pub frames: Vec<Vec<T>>,
}

/// Distributed forcing: called once per step with `(n, t_n, buffer)` where
/// `buffer` is a zeroed padded-grid field to receive `F_n`.
pub type Forcing<T> = Box<dyn FnMut(usize, f64, &mut [T]) + Send>;

pub struct Solver<T: Real> {
    model: SpaceModel,
    time: TimeAxis,
    coeffs: StencilCoeffs,
    plan: BoundaryPlan,
    kernel: PlaneFn<T>,
    c2dt2: Vec<T>,
    damp_prev: Vec<T>,
    inv_damp: Vec<T>,
    log_grad: Option<Vec<Vec<T>>>,
    sources: Option<(InterpolationMap, Wavelet)>,
    receivers: Option<InterpolationMap>,
    receiver_coordinates: Vec<Vec<f64>>,
    forcing: Option<(Forcing<T>, Vec<T>)>,
    backend: Backend,
    pool: Option<rayon::ThreadPool>,
    snapshot_cap: u64,
    verbose: bool,
    /// Padded indices of the extended-grid nodes, in storage order.
    nodes: Vec<usize>,
    field: Wavefield<T>,
}

impl<T: Real> Solver<T> {
    pub fn new(model: SpaceModel, time: TimeAxis) -> Result<Self> {
        let grid = &model.grid;
        let coeffs = StencilCoeffs::new(grid.space_order)?;
        if coeffs.radius() > MAX_RADIUS || coeffs.radius() > grid.halo {
            return Err(Error::InvalidOrder(grid.space_order));
        }
        if !(time.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", time.dt)));
        }
        let plan = BoundaryPlan::new(grid, &model.boundary)?;
        let dt = time.dt;
        let c2dt2 = model
            .materials
            .velocity
            .iter()
            .map(|c| T::of(c * c * dt * dt))
            .collect();
        let damp_prev = model.damping.eta.iter().map(|e| T::of(1.0 - e * dt)).collect();
        let inv_damp = model.damping.eta.iter().map(|e| T::of(1.0 / (1.0 + e * dt))).collect();
        let log_grad = match &model.materials.density {
            Some(rho) => Some(
                density_log_gradient(grid, rho, &coeffs)?
                    .into_iter()
                    .map(|g| g.into_iter().map(T::of).collect())
                    .collect(),
            ),
            None => None,
        };
        let kernel = stencil::plane_kernel::<T>(grid.ndim(), coeffs.radius(), log_grad.is_some());
        let n = grid.padded_points();
        let nodes = crate::space_model::MultiIndex::new(grid.extended_shape())
            .map(|idx| grid.padded_index(&idx))
            .collect();
        Ok(Self {
            nodes,
            coeffs,
            plan,
            kernel,
            c2dt2,
            damp_prev,
            inv_damp,
            log_grad,
            sources: None,
            receivers: None,
            receiver_coordinates: Vec::new(),
            forcing: None,
            backend: Backend::Serial,
            pool: None,
            snapshot_cap: DEFAULT_SNAPSHOT_CAP,
            verbose: false,
            field: Wavefield {
                prev: vec![T::zero(); n],
                curr: vec![T::zero(); n],
            },
            model,
            time,
        })
    }

    /// Every source fires `wavelet`; it must hold one sample per time level.
    pub fn with_sources(mut self, map: InterpolationMap, wavelet: Wavelet) -> Result<Self> {
        if wavelet.samples.len() < self.time.n_steps {
            return Err(Error::ShapeMismatch(format!(
                "wavelet has {} samples, the run needs {}",
                wavelet.samples.len(),
                self.time.n_steps
            )));
        }
        self.sources = Some((map, wavelet));
        Ok(self)
    }

    /// `coordinates` are echoed into the seismogram metadata.
    pub fn with_receivers(mut self, map: InterpolationMap, coordinates: Vec<Vec<f64>>) -> Result<Self> {
        if coordinates.len() != map.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} receiver coordinates for {} interpolation stencils",
                coordinates.len(),
                map.len()
            )));
        }
        self.receivers = Some(map);
        self.receiver_coordinates = coordinates;
        Ok(self)
    }

    pub fn with_forcing(mut self, forcing: Forcing<T>) -> Self {
        let n = self.model.grid.padded_points();
        self.forcing = Some((forcing, vec![T::zero(); n]));
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Result<Self> {
        self.pool = match backend {
            Backend::Serial => None,
            Backend::Parallel { workers } => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
            ),
        };
        self.backend = backend;
        Ok(self)
    }

    pub fn with_snapshot_cap(mut self, bytes: u64) -> Self {
        self.snapshot_cap = bytes;
        self
    }

    pub fn with_verbose(mut self, verbose: bool) -> Self {
        self.verbose = verbose;
        self
    }

    pub fn model(&self) -> &SpaceModel {
        &self.model
    }

    pub fn time_axis(&self) -> &TimeAxis {
        &self.time
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn wavefield(&self) -> &Wavefield<T> {
        &self.field
    }

    /// Direct access to the time levels, e.g. to set an initial condition.
    pub fn wavefield_mut(&mut self) -> &mut Wavefield<T> {
        &mut self.field
    }

    /// Bytes the snapshot store of a full run would take.
    pub fn snapshot_bytes(&self) -> u64 {
        self.time.snapshot_count() as u64
            * self.model.grid.extended_points() as u64
            * std::mem::size_of::<T>() as u64
    }

    /// Advances one step from level `n` to `n + 1`: fill ghosts, update,
    /// add sources and forcing, rotate levels.
    pub fn advance(&mut self, n: usize) {
        self.plan.apply(&mut self.field.curr);
        self.update(n);
        std::mem::swap(&mut self.field.prev, &mut self.field.curr);
        self.plan.apply(&mut self.field.curr);
    }

    /// Runs all N steps from the current levels.
    pub fn forward(&mut self) -> Result<(Snapshots<T>, Seismogram)> {
        let required = self.snapshot_bytes();
        if required > self.snapshot_cap {
            return Err(Error::MemoryCap {
                required,
                cap: self.snapshot_cap,
            });
        }
        let ext_shape = self.model.grid.extended_shape();
        let n_steps = self.time.n_steps;
        let nrec = self.receiver_coordinates.len();
        let mut data = vec![0.0; (n_steps + 1) * nrec];
        let mut snaps = Snapshots {
            shape: ext_shape,
            steps: Vec::with_capacity(self.time.snapshot_count()),
            frames: Vec::with_capacity(self.time.snapshot_count()),
        };

        self.plan.apply(&mut self.field.curr);
        self.record(0, &mut data, &mut snaps);
        let start = Instant::now();
        let mut last_finite_max = max_abs(&self.field.curr);
        for n in 0..n_steps {
            self.advance(n);
            let k = n + 1;
            if k % FINITE_CHECK_INTERVAL == 0 || k == n_steps {
                let m = max_abs(&self.field.curr);
                if !m.is_finite() {
                    return Err(Error::Instability {
                        step: k,
                        last_finite_max,
                        stable_dt: self.time.stable_dt,
                    });
                }
                last_finite_max = m;
                if self.verbose {
                    eprintln!(
                        "step {k}/{n_steps} t={:.6}s wall={:.3}s max|p|={m:.6e}",
                        self.time.time(k),
                        start.elapsed().as_secs_f64()
                    );
                }
            }
            self.record(k, &mut data, &mut snaps);
        }
        let seismogram = Seismogram {
            times: self.time.times(),
            receivers: self.receiver_coordinates.clone(),
            data,
        };
        Ok((snaps, seismogram))
    }

    fn record(&self, k: usize, data: &mut [f64], snaps: &mut Snapshots<T>) {
        if let Some(rec) = &self.receivers {
            let nrec = rec.len();
            rec.sample_into(&self.field.curr, &mut data[k * nrec..(k + 1) * nrec]);
        }
        if self.time.is_snapshot(k) {
            snaps.steps.push(k);
            snaps.frames.push(self.nodes.iter().map(|&i| self.field.curr[i]).collect());
        }
    }

    /// Writes `p^{n+1}` into the `prev` buffer.
    fn update(&mut self, n: usize) {
        let grid = &self.model.grid;
        let ndim = grid.ndim();
        let shape = grid.padded_shape();
        let r = self.coeffs.radius();
        let mut strides = [0; 3];
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        let mut lap = [[T::zero(); MAX_RADIUS + 1]; 3];
        let mut grad = [[T::zero(); MAX_RADIUS + 1]; 3];
        let mut centre = 0.0;
        let ps = grid.padded_strides();
        for a in 0..ndim {
            strides[a] = ps[a];
            lo[a] = grid.halo;
            hi[a] = shape[a] - grid.halo;
            let h = grid.spacing[a];
            centre += self.coeffs.second_deriv[0] / (h * h);
            for j in 1..=r {
                lap[a][j] = T::of(self.coeffs.second_deriv[j] / (h * h));
                grad[a][j] = T::of(self.coeffs.first_deriv[j - 1] / (2.0 * h));
            }
        }
        let log_grad = self.log_grad.as_ref().map(|g| {
            let mut arr: [&[T]; 3] = [&[], &[], &[]];
            for (a, ga) in g.iter().enumerate() {
                arr[a] = ga;
            }
            arr
        });
        let ctx = StepContext {
            strides,
            lo,
            hi,
            centre: T::of(centre),
            lap,
            grad,
            c2dt2: &self.c2dt2,
            damp_prev: &self.damp_prev,
            inv_damp: &self.inv_damp,
            log_grad,
        };
        let s0 = strides[0];
        let kernel = self.kernel;
        let curr = &self.field.curr[..];
        let slabs = &mut self.field.prev[lo[0] * s0..hi[0] * s0];
        match &self.pool {
            None => slabs
                .chunks_mut(s0)
                .enumerate()
                .for_each(|(z, out)| kernel(&ctx, lo[0] + z, out, curr)),
            Some(pool) => pool.install(|| {
                slabs
                    .par_chunks_mut(s0)
                    .enumerate()
                    .for_each(|(z, out)| kernel(&ctx, lo[0] + z, out, curr))
            }),
        }

        let next = &mut self.field.prev;
        if let Some((map, wavelet)) = &self.sources {
            let s = wavelet.samples[n];
            for point in &map.points {
                for &(i, w) in point {
                    next[i] += self.c2dt2[i] * self.inv_damp[i] * T::of(w * s);
                }
            }
        }
        if let Some((f, buf)) = &mut self.forcing {
            buf.iter_mut().for_each(|v| *v = T::zero());
            f(n, self.time.time(n), buf);
            for &i in &self.nodes {
                next[i] += self.c2dt2[i] * self.inv_damp[i] * buf[i];
            }
        }
    }
}

fn max_abs<T: Real>(field: &[T]) -> f64 {
    // NaN must win over finite values, so fold by hand rather than f64::max.
    field.iter().fold(0.0f64, |m, v| {
        let a = v.f64().abs();
        if a.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(a)
        }
    })
}
