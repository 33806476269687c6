//! Computational grid, material resampling and the absorbing-layer profile.
//!
//! Axes are ordered Z (depth), X, then Y. Fields live on the *padded* grid:
//! the extended grid (physical box plus absorbing layer) surrounded by
//! `halo = space_order / 2` ghost nodes on every side, stored row-major with
//! the last axis fastest.

use crate::kernel::{BoundaryCondition, BoundarySpec};
use crate::numerics::{MAX_ORDER, MIN_ORDER};
use crate::{Error, Precision, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Per-axis `(min, max)` of the physical domain in meters.
    pub bbox: Vec<(f64, f64)>,
    pub spacing: Vec<f64>,
    pub interior_shape: Vec<usize>,
    /// Absorbing-layer cells per axis as `[low, high]`.
    pub damping_cells: Vec<[usize; 2]>,
    pub space_order: usize,
    pub halo: usize,
    pub precision: Precision,
}

pub fn build_grid(
    bbox: &[(f64, f64)],
    spacing: &[f64],
    space_order: usize,
    precision: Precision,
) -> Result<Grid> {
    let ndim = bbox.len();
    if !(2..=3).contains(&ndim) {
        return Err(Error::InvalidGrid(format!("expected 2 or 3 axes, got {ndim}")));
    }
    if spacing.len() != ndim {
        return Err(Error::InvalidGrid(format!(
            "{} spacings given for {ndim} axes",
            spacing.len()
        )));
    }
    if space_order % 2 != 0 || !(MIN_ORDER..=MAX_ORDER).contains(&space_order) {
        return Err(Error::InvalidOrder(space_order));
    }
    let mut interior_shape = Vec::with_capacity(ndim);
    for (axis, (&(lo, hi), &h)) in bbox.iter().zip(spacing).enumerate() {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "axis {axis}: extent ({lo}, {hi}) is not positive"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("axis {axis}: spacing {h} is not positive")));
        }
        interior_shape.push(((hi - lo) / h).round() as usize + 1);
    }
    Ok(Grid {
        bbox: bbox.to_vec(),
        spacing: spacing.to_vec(),
        interior_shape,
        damping_cells: vec![[0, 0]; ndim],
        space_order,
        halo: space_order / 2,
        precision,
    })
}

/// Adds absorbing-layer cells. `lengths` holds meters per side ordered
/// Z-low, Z-high, X-low, X-high[, Y-low, Y-high].
pub fn extend_with_damping(grid: &Grid, lengths: &[f64]) -> Result<Grid> {
    let ndim = grid.ndim();
    if lengths.len() != 2 * ndim {
        return Err(Error::InvalidArgument(format!(
            "expected {} damping lengths, got {}",
            2 * ndim,
            lengths.len()
        )));
    }
    if let Some(bad) = lengths.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("damping length {bad} is negative")));
    }
    let mut out = grid.clone();
    for axis in 0..ndim {
        let h = grid.spacing[axis];
        out.damping_cells[axis] = [
            (lengths[2 * axis] / h).round() as usize,
            (lengths[2 * axis + 1] / h).round() as usize,
        ];
    }
    Ok(out)
}

impl Grid {
    pub fn ndim(&self) -> usize {
        self.bbox.len()
    }

    pub fn extended_shape(&self) -> Vec<usize> {
        self.interior_shape
            .iter()
            .zip(&self.damping_cells)
            .map(|(n, [lo, hi])| n + lo + hi)
            .collect()
    }

    pub fn padded_shape(&self) -> Vec<usize> {
        self.extended_shape().iter().map(|n| n + 2 * self.halo).collect()
    }

    /// Row-major strides of the padded layout.
    pub fn padded_strides(&self) -> Vec<usize> {
        strides(&self.padded_shape())
    }

    pub fn interior_points(&self) -> usize {
        self.interior_shape.iter().product()
    }

    pub fn extended_points(&self) -> usize {
        self.extended_shape().iter().product()
    }

    pub fn padded_points(&self) -> usize {
        self.padded_shape().iter().product()
    }

    /// Coordinate (m) of a padded-grid index along `axis`.
    pub fn padded_coordinate(&self, axis: usize, index: usize) -> f64 {
        let offset = index as f64 - (self.halo + self.damping_cells[axis][0]) as f64;
        self.bbox[axis].0 + offset * self.spacing[axis]
    }

    /// Extent of the physical region Ω0 covered by interior nodes.
    pub fn interior_extent(&self, axis: usize) -> (f64, f64) {
        let lo = self.bbox[axis].0;
        (lo, lo + (self.interior_shape[axis] - 1) as f64 * self.spacing[axis])
    }

    /// Padded linear index of an extended-grid multi-index.
    pub fn padded_index(&self, extended: &[usize]) -> usize {
        let strides = self.padded_strides();
        extended
            .iter()
            .zip(&strides)
            .map(|(i, s)| (i + self.halo) * s)
            .sum()
    }

    /// Iterates over every padded multi-index in storage order.
    pub fn padded_indices(&self) -> impl Iterator<Item = Vec<usize>> {
        MultiIndex::new(self.padded_shape())
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

pub(crate) struct MultiIndex {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MultiIndex {
    pub(crate) fn new(shape: Vec<usize>) -> Self {
        let next = if shape.iter().all(|&n| n > 0) {
            Some(vec![0; shape.len()])
        } else {
            None
        };
        Self { shape, next }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut n = current.clone();
        for a in (0..n.len()).rev() {
            n[a] += 1;
            if n[a] < self.shape[a] {
                self.next = Some(n);
                return Some(current);
            }
            n[a] = 0;
        }
        Some(current)
    }
}

/// Multilinear resampling of a raw array spanning the bounding box onto the
/// padded grid; nodes outside the physical box take the nearest edge value.
pub fn resample_model(raw: &[f64], raw_shape: &[usize], grid: &Grid) -> Result<Vec<f64>> {
    let ndim = grid.ndim();
    if raw_shape.len() != ndim {
        return Err(Error::ShapeMismatch(format!(
            "model has {} axes, grid has {ndim}",
            raw_shape.len()
        )));
    }
    if raw_shape.iter().any(|&n| n < 2) {
        return Err(Error::ShapeMismatch(format!(
            "model shape {raw_shape:?} needs at least 2 samples per axis"
        )));
    }
    let count: usize = raw_shape.iter().product();
    if raw.len() != count {
        return Err(Error::ShapeMismatch(format!(
            "model holds {} values, shape {raw_shape:?} needs {count}",
            raw.len()
        )));
    }

    // Per axis and padded index: lower raw node and weight of the upper node.
    let padded = grid.padded_shape();
    let taps: Vec<Vec<(usize, f64)>> = (0..ndim)
        .map(|axis| {
            let (lo, hi) = grid.bbox[axis];
            let nr = raw_shape[axis];
            (0..padded[axis])
                .map(|i| {
                    let x = grid.padded_coordinate(axis, i).clamp(lo, hi);
                    let mut u = (x - lo) / (hi - lo) * (nr - 1) as f64;
                    if (u - u.round()).abs() < 1e-9 {
                        u = u.round();
                    }
                    let k = (u.floor() as usize).min(nr - 2);
                    (k, u - k as f64)
                })
                .collect()
        })
        .collect();

    let raw_strides = strides(raw_shape);
    let corners = 1usize << ndim;
    let mut out = Vec::with_capacity(grid.padded_points());
    for idx in grid.padded_indices() {
        let mut value = 0.0;
        for corner in 0..corners {
            let mut weight = 1.0;
            let mut offset = 0;
            for axis in 0..ndim {
                let (k, t) = taps[axis][idx[axis]];
                let upper = (corner >> axis) & 1 == 1;
                weight *= if upper { t } else { 1.0 - t };
                offset += (k + upper as usize) * raw_strides[axis];
            }
            if weight != 0.0 {
                value += weight * raw[offset];
            }
        }
        out.push(value);
    }
    Ok(out)
}

/// Velocity and optional density sampled on the padded grid.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    pub velocity: Vec<f64>,
    pub density: Option<Vec<f64>>,
    pub c_max: f64,
}

impl MaterialModel {
    pub fn new(grid: &Grid, velocity: Vec<f64>, density: Option<Vec<f64>>) -> Result<Self> {
        let n = grid.padded_points();
        if velocity.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "velocity field has {} values, padded grid has {n}",
                velocity.len()
            )));
        }
        if let Some(v) = velocity.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("velocity must be positive, found {v}")));
        }
        if let Some(rho) = &density {
            if rho.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "density field has {} values, padded grid has {n}",
                    rho.len()
                )));
            }
            if let Some(v) = rho.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("density must be positive, found {v}")));
            }
        }
        let c_max = velocity.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            velocity,
            density,
            c_max,
        })
    }

    pub fn homogeneous(grid: &Grid, velocity: f64) -> Result<Self> {
        Self::new(grid, vec![velocity; grid.padded_points()], None)
    }

    /// Samples analytic fields at every padded node's coordinates.
    pub fn from_fn(
        grid: &Grid,
        velocity: impl Fn(&[f64]) -> f64,
        density: Option<&dyn Fn(&[f64]) -> f64>,
    ) -> Result<Self> {
        let coords: Vec<Vec<f64>> = grid
            .padded_indices()
            .map(|idx| {
                idx.iter()
                    .enumerate()
                    .map(|(a, &i)| grid.padded_coordinate(a, i))
                    .collect()
            })
            .collect();
        let vel = coords.iter().map(|x| velocity(x)).collect();
        let rho = density.map(|f| coords.iter().map(|x| f(x)).collect());
        Self::new(grid, vel, rho)
    }
}

/// Damping coefficient `eta` (1/s) on the padded grid.
#[derive(Debug, Clone)]
pub struct DampingField {
    pub eta: Vec<f64>,
    pub alpha: f64,
    pub power: f64,
}

/// Default damping amplitude when none is configured.
pub fn default_damping_alpha(c_max: f64) -> f64 {
    1e-6 * c_max
}

pub const DEFAULT_DAMPING_POWER: f64 = 3.0;

/// `eta = alpha * d^power`, `d` being the Euclidean distance (m) from a node to
/// the physical box; zero inside the box.
pub fn damping_field(grid: &Grid, alpha: f64, power: f64) -> Result<DampingField> {
    if !(alpha >= 0.0) || !(power >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "damping alpha ({alpha}) and power ({power}) must be non-negative"
        )));
    }
    let ndim = grid.ndim();
    let padded = grid.padded_shape();
    let excess: Vec<Vec<f64>> = (0..ndim)
        .map(|axis| {
            let (lo, hi) = grid.interior_extent(axis);
            (0..padded[axis])
                .map(|i| {
                    let x = grid.padded_coordinate(axis, i);
                    (lo - x).max(x - hi).max(0.0)
                })
                .collect()
        })
        .collect();
    let eta = grid
        .padded_indices()
        .map(|idx| {
            let d2: f64 = (0..ndim).map(|a| excess[a][idx[a]].powi(2)).sum();
            if d2 == 0.0 {
                0.0
            } else {
                alpha * d2.sqrt().powf(power)
            }
        })
        .collect();
    Ok(DampingField { eta, alpha, power })
}

/// Everything spatial a solver needs: grid, materials, damping and faces.
#[derive(Debug, Clone)]
pub struct SpaceModel {
    pub grid: Grid,
    pub materials: MaterialModel,
    pub damping: DampingField,
    pub boundary: BoundarySpec,
}

impl SpaceModel {
    pub fn new(
        grid: Grid,
        materials: MaterialModel,
        damping: DampingField,
        boundary: BoundarySpec,
    ) -> Result<Self> {
        let n = grid.padded_points();
        if materials.velocity.len() != n || damping.eta.len() != n {
            return Err(Error::ShapeMismatch(
                "material and damping fields must cover the padded grid".into(),
            ));
        }
        if boundary.ndim() != grid.ndim() {
            return Err(Error::InvalidArgument(format!(
                "boundary spec is {}D, grid is {}D",
                boundary.ndim(),
                grid.ndim()
            )));
        }
        Ok(Self {
            grid,
            materials,
            damping,
            boundary,
        })
    }

    /// Homogeneous medium, no damping, the same condition on every face.
    pub fn homogeneous(grid: Grid, velocity: f64, condition: BoundaryCondition) -> Result<Self> {
        let materials = MaterialModel::homogeneous(&grid, velocity)?;
        let damping = damping_field(&grid, 0.0, 0.0)?;
        let boundary = BoundarySpec::uniform(condition, grid.ndim());
        Self::new(grid, materials, damping, boundary)
    }

    pub fn stable_dt(&self) -> Result<f64> {
        crate::numerics::stable_dt(self.materials.c_max, &self.grid.spacing, self.grid.space_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(bbox: [(f64, f64); 2], h: f64) -> Grid {
        build_grid(&bbox, &[h, h], 4, Precision::Double).unwrap()
    }

    #[test]
    fn marmousi_shapes() {
        let g = grid2([(0.0, 3500.0), (0.0, 17000.0)], 10.0);
        assert_eq!(g.interior_shape, vec![351, 1701]);
        let e = extend_with_damping(&g, &[0.0, 700.0, 700.0, 700.0]).unwrap();
        assert_eq!(e.extended_shape(), vec![421, 1841]);
        assert_eq!(e.extended_points(), 775_061);
        assert_eq!(e.damping_cells, vec![[0, 70], [70, 70]]);
    }

    #[test]
    fn overthrust_shapes() {
        let g = build_grid(
            &[(0.0, 4120.0), (0.0, 16000.0), (0.0, 16000.0)],
            &[20.0; 3],
            8,
            Precision::Single,
        )
        .unwrap();
        assert_eq!(g.interior_shape, vec![207, 801, 801]);
        assert_eq!(g.interior_points(), 132_811_407);
        let e = extend_with_damping(&g, &[100.0; 6]).unwrap();
        assert_eq!(e.extended_shape(), vec![217, 811, 811]);
    }

    #[test]
    fn zero_damping_is_identity() {
        let g = grid2([(0.0, 400.0), (0.0, 400.0)], 0.5);
        assert_eq!(g.interior_shape, vec![801, 801]);
        let e = extend_with_damping(&g, &[0.0; 4]).unwrap();
        assert_eq!(e.extended_shape(), g.interior_shape);
        assert_eq!(e.padded_shape(), vec![805, 805]);
    }

    #[test]
    fn grid_errors() {
        assert!(build_grid(&[(0.0, 1.0)], &[0.1], 2, Precision::Double).is_err());
        assert!(build_grid(&[(0.0, 1.0); 4], &[0.1; 4], 2, Precision::Double).is_err());
        assert!(build_grid(&[(1.0, 1.0), (0.0, 1.0)], &[0.1; 2], 2, Precision::Double).is_err());
        assert!(build_grid(&[(0.0, 1.0), (0.0, 1.0)], &[0.1, 0.0], 2, Precision::Double).is_err());
        assert!(build_grid(&[(0.0, 1.0), (0.0, 1.0)], &[0.1; 2], 3, Precision::Double).is_err());
        let g = grid2([(0.0, 10.0), (0.0, 10.0)], 1.0);
        assert!(extend_with_damping(&g, &[1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(extend_with_damping(&g, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn resample_constant_and_midpoint() {
        let g = extend_with_damping(&grid2([(0.0, 2.0), (0.0, 2.0)], 1.0), &[1.0; 4]).unwrap();
        let c = resample_model(&[1500.0; 4], &[2, 2], &g).unwrap();
        assert!(c.iter().all(|&v| v == 1500.0));

        let g = grid2([(0.0, 2.0), (0.0, 2.0)], 1.0);
        let f = resample_model(&[0.0, 1.0, 0.0, 1.0], &[2, 2], &g).unwrap();
        let p = g.padded_shape();
        let at = |z: usize, x: usize| f[(z + g.halo) * p[1] + x + g.halo];
        for z in 0..3 {
            assert_eq!(at(z, 0), 0.0);
            assert_eq!(at(z, 1), 0.5);
            assert_eq!(at(z, 2), 1.0);
        }
        // halo replicates edges
        assert_eq!(f[0], 0.0);
        assert_eq!(f[p[1] - 1], 1.0);
    }

    #[test]
    fn resample_coincident_nodes_exact() {
        let g = grid2([(0.0, 3500.0), (0.0, 17000.0)], 10.0);
        let raw_shape = [701, 3401];
        let raw: Vec<f64> = (0..raw_shape[0] * raw_shape[1])
            .map(|i| 1500.0 + ((i * 7919) % 3001) as f64 * 0.37)
            .collect();
        let f = resample_model(&raw, &raw_shape, &g).unwrap();
        let p = g.padded_shape();
        for z in (0..351).step_by(7) {
            for x in (0..1701).step_by(13) {
                let v = f[(z + g.halo) * p[1] + x + g.halo];
                assert_eq!(v, raw[2 * z * raw_shape[1] + 2 * x]);
            }
        }
    }

    #[test]
    fn resample_shape_errors() {
        let g = grid2([(0.0, 2.0), (0.0, 2.0)], 1.0);
        assert!(resample_model(&[1.0; 4], &[4], &g).is_err());
        assert!(resample_model(&[1.0; 3], &[1, 3], &g).is_err());
        assert!(resample_model(&[1.0; 5], &[2, 2], &g).is_err());
    }

    #[test]
    fn damping_values() {
        let g = grid2([(0.0, 1000.0), (0.0, 1000.0)], 10.0);
        let g = extend_with_damping(&g, &[700.0; 4]).unwrap();
        let d = damping_field(&g, 1e-6, 3.0).unwrap();
        let p = g.padded_shape();
        let idx = |z: usize, x: usize| g.padded_index(&[z, x]);
        assert!(p[0] > 0);
        // 700 m straight below the box, at mid-width
        let below = idx(70 + 100 + 70, 70 + 50);
        assert!((d.eta[below] - 1e-6 * 700f64.powi(3)).abs() < 1e-9 * 700f64.powi(3));
        for z in 0..101 {
            for x in 0..101 {
                assert_eq!(d.eta[idx(70 + z, 70 + x)], 0.0);
            }
        }
        // corner offset (30, 40) m outside: d = 50
        let g1 = extend_with_damping(&grid2([(0.0, 100.0), (0.0, 100.0)], 10.0), &[50.0; 4]).unwrap();
        let d1 = damping_field(&g1, 1.0, 1.0).unwrap();
        let corner = g1.padded_index(&[5 - 3, 5 - 4]);
        assert!((d1.eta[corner] - 50.0).abs() < 1e-12);
        assert!(damping_field(&g1, -1.0, 1.0).is_err());
    }

    #[test]
    fn damping_monotone_outward() {
        let g = extend_with_damping(&grid2([(0.0, 100.0), (0.0, 100.0)], 5.0), &[50.0; 4]).unwrap();
        let d = damping_field(&g, 2.0, 2.0).unwrap();
        let shape = g.extended_shape();
        for z in 0..shape[0] {
            let row: Vec<f64> = (0..shape[1]).map(|x| d.eta[g.padded_index(&[z, x])]).collect();
            let mid = shape[1] / 2;
            for x in mid..shape[1] - 1 {
                assert!(row[x + 1] >= row[x]);
            }
            for x in 1..=mid {
                assert!(row[x - 1] >= row[x]);
            }
        }
        // next to the interface the value is one cell's worth
        let first = d.eta[g.padded_index(&[10 + 20 + 1, 15])];
        assert!((first - 2.0 * 25.0).abs() < 1e-12);
    }

    #[test]
    fn materials_validate() {
        let g = grid2([(0.0, 2.0), (0.0, 2.0)], 1.0);
        let n = g.padded_points();
        assert!(MaterialModel::new(&g, vec![0.0; n], None).is_err());
        assert!(MaterialModel::new(&g, vec![1.0; n - 1], None).is_err());
        assert!(MaterialModel::new(&g, vec![1.0; n], Some(vec![-1.0; n])).is_err());
        let mut v = vec![1500.0; n];
        v[3] = 2500.0;
        assert_eq!(MaterialModel::new(&g, v, None).unwrap().c_max, 2500.0);
    }
}
