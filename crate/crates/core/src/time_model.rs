//! Time axis and snapshot bookkeeping.

use crate::numerics::stable_dt;
use crate::space_model::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeAxis {
    pub tf: f64,
    pub dt: f64,
    /// Number of steps N; the axis holds N + 1 samples `t_n = n dt`.
    pub n_steps: usize,
    /// 0 keeps only the final field, `s > 0` keeps every `s`-th level.
    pub saving_stride: usize,
    /// Stable bound for the space model the axis was built against.
    pub stable_dt: f64,
}

impl TimeAxis {
    pub fn samples(&self) -> usize {
        self.n_steps + 1
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples()).map(|n| self.time(n)).collect()
    }

    /// True when a user-supplied dt is above the CFL bound.
    pub fn exceeds_stable(&self) -> bool {
        self.dt > self.stable_dt
    }

    /// Whether time level `n` is written to the snapshot store.
    pub fn is_snapshot(&self, n: usize) -> bool {
        match self.saving_stride {
            0 => n == self.n_steps,
            s => n % s == 0,
        }
    }

    pub fn snapshot_count(&self) -> usize {
        match self.saving_stride {
            0 => 1,
            s => self.n_steps / s + 1,
        }
    }
}

/// Builds the time axis; `dt` defaults to the stable bound of the grid.
///
/// `N = ceil(tf / dt)`, so the run may overshoot `tf` by less than `dt`.
pub fn build_time_axis(
    tf: f64,
    dt: Option<f64>,
    saving_stride: usize,
    grid: &Grid,
    c_max: f64,
) -> Result<TimeAxis> {
    let bound = stable_dt(c_max, &grid.spacing, grid.space_order)?;
    time_axis(tf, dt, saving_stride, bound)
}

pub(crate) fn time_axis(
    tf: f64,
    dt: Option<f64>,
    saving_stride: usize,
    stable_dt: f64,
) -> Result<TimeAxis> {
    if !(tf > 0.0) || !tf.is_finite() {
        return Err(Error::InvalidArgument(format!("tf must be positive, got {tf}")));
    }
    let dt = match dt {
        Some(dt) if !(dt > 0.0) || !dt.is_finite() => {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")))
        }
        Some(dt) => dt,
        None => stable_dt,
    };
    let ratio = tf / dt;
    // absorb round-off so exact multiples do not gain an extra step
    let n_steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    }
    .max(1);
    if saving_stride > n_steps {
        return Err(Error::InvalidArgument(format!(
            "saving stride {saving_stride} exceeds the {n_steps} time steps"
        )));
    }
    Ok(TimeAxis {
        tf,
        dt,
        n_steps,
        saving_stride,
        stable_dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space_model::build_grid;
    use crate::Precision;

    fn grid() -> Grid {
        build_grid(&[(0.0, 400.0), (0.0, 400.0)], &[0.5, 0.5], 2, Precision::Single).unwrap()
    }

    #[test]
    fn verification_window() {
        let t = build_time_axis(0.15, Some(1e-4), 0, &grid(), 1500.0).unwrap();
        assert_eq!(t.n_steps, 1500);
        assert_eq!(t.samples(), 1501);
        assert!(!t.exceeds_stable());
    }

    #[test]
    fn exact_and_overshoot() {
        let t = time_axis(1.0, Some(0.25), 1, 1.0).unwrap();
        assert_eq!(t.n_steps, 4);
        let t = time_axis(1.0, Some(0.3), 1, 1.0).unwrap();
        assert_eq!(t.n_steps, 4);
        assert!(t.time(t.n_steps) - t.tf < t.dt);
        // tf shorter than dt still runs one step
        assert_eq!(time_axis(0.1, Some(0.3), 0, 1.0).unwrap().n_steps, 1);
    }

    #[test]
    fn default_dt_is_stable_bound() {
        let t = build_time_axis(0.1, None, 0, &grid(), 1500.0).unwrap();
        assert!((t.dt - 0.5 / (1500.0 * 2f64.sqrt())).abs() < 1e-18);
        let t = build_time_axis(0.1, Some(1e-3), 0, &grid(), 1500.0).unwrap();
        assert!(t.exceeds_stable());
    }

    #[test]
    fn snapshot_strides() {
        let t = time_axis(1.0, Some(0.1), 0, 1.0).unwrap();
        assert_eq!(t.snapshot_count(), 1);
        assert_eq!((0..=t.n_steps).filter(|&n| t.is_snapshot(n)).count(), 1);
        assert!(t.is_snapshot(10));
        for stride in 1..=10 {
            let t = time_axis(1.0, Some(0.1), stride, 1.0).unwrap();
            let stored = (0..=t.n_steps).filter(|&n| t.is_snapshot(n)).count();
            assert_eq!(stored, t.snapshot_count());
            assert_eq!(stored, 10 / stride + 1);
        }
    }

    #[test]
    fn errors() {
        assert!(time_axis(0.0, None, 0, 1.0).is_err());
        assert!(time_axis(-1.0, None, 0, 1.0).is_err());
        assert!(time_axis(1.0, Some(0.0), 0, 1.0).is_err());
        assert!(time_axis(1.0, Some(0.1), 11, 1.0).is_err());
    }
}
