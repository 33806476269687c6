use serde::{Deserialize, Serialize};

use crate::space_model::Grid;
use crate::{Error, Real, Result};

/// Condition imposed on one face of the extended grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Boundary node held at zero, ghosts mirrored with opposite sign.
    NullDirichlet,
    /// Ghosts mirrored with the same sign.
    NullNeumann,
    /// Ghosts held at zero.
    None,
}

/// One condition per face, ordered Z-low (top), Z-high, X-low, X-high[, Y-low, Y-high].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySpec {
    faces: Vec<BoundaryCondition>,
}

impl BoundarySpec {
    pub fn new(faces: Vec<BoundaryCondition>, ndim: usize) -> Result<Self> {
        if faces.len() != 2 * ndim {
            return Err(Error::InvalidArgument(format!(
                "{} boundary conditions given, a {ndim}D grid has {} faces",
                faces.len(),
                2 * ndim
            )));
        }
        Ok(Self { faces })
    }

    pub fn uniform(condition: BoundaryCondition, ndim: usize) -> Self {
        Self {
            faces: vec![condition; 2 * ndim],
        }
    }

    pub fn ndim(&self) -> usize {
        self.faces.len() / 2
    }

    pub fn face(&self, axis: usize, high: bool) -> BoundaryCondition {
        self.faces[2 * axis + high as usize]
    }

    pub fn faces(&self) -> &[BoundaryCondition] {
        &self.faces
    }
}

/// Precomputed face offsets so halo filling does not re-derive the layout every step.
#[derive(Debug, Clone)]
pub(crate) struct BoundaryPlan {
    axes: Vec<AxisPlan>,
    halo: usize,
}

#[derive(Debug, Clone)]
struct AxisPlan {
    stride: usize,
    /// Linear offsets of every padded node whose index along this axis is 0.
    bases: Vec<usize>,
    low: (usize, BoundaryCondition),
    high: (usize, BoundaryCondition),
}

impl BoundaryPlan {
    pub(crate) fn new(grid: &Grid, spec: &BoundarySpec) -> Result<Self> {
        if spec.ndim() != grid.ndim() {
            return Err(Error::InvalidArgument(format!(
                "boundary spec is {}D, grid is {}D",
                spec.ndim(),
                grid.ndim()
            )));
        }
        let shape = grid.padded_shape();
        let strides = grid.padded_strides();
        let ext = grid.extended_shape();
        let halo = grid.halo;
        let axes = (0..grid.ndim())
            .map(|axis| {
                let mut face_shape = shape.clone();
                face_shape[axis] = 1;
                let bases = crate::space_model::MultiIndex::new(face_shape)
                    .map(|idx| idx.iter().zip(&strides).map(|(i, s)| i * s).sum())
                    .collect();
                AxisPlan {
                    stride: strides[axis],
                    bases,
                    low: (halo, spec.face(axis, false)),
                    high: (halo + ext[axis] - 1, spec.face(axis, true)),
                }
            })
            .collect();
        Ok(Self { axes, halo })
    }

    pub(crate) fn apply<T: Real>(&self, field: &mut [T]) {
        for axis in &self.axes {
            for &(node, bc) in &[axis.low, axis.high] {
                if bc == BoundaryCondition::NullDirichlet {
                    for &base in &axis.bases {
                        field[base + node * axis.stride] = T::zero();
                    }
                }
            }
        }
        for axis in &self.axes {
            let s = axis.stride;
            for (side, &(node, bc)) in [axis.low, axis.high].iter().enumerate() {
                for &base in &axis.bases {
                    let b = base + node * s;
                    for k in 1..=self.halo {
                        let (ghost, mirror) = if side == 0 {
                            (b - k * s, b + k * s)
                        } else {
                            (b + k * s, b - k * s)
                        };
                        field[ghost] = match bc {
                            BoundaryCondition::NullDirichlet => -field[mirror],
                            BoundaryCondition::NullNeumann => field[mirror],
                            BoundaryCondition::None => T::zero(),
                        };
                    }
                }
            }
        }
    }
}

/// Imposes `spec` on `field` (padded layout): zeroes Dirichlet faces and
/// fills every ghost layer.
pub fn apply_boundary<T: Real>(field: &mut [T], grid: &Grid, spec: &BoundarySpec) -> Result<()> {
    if field.len() != grid.padded_points() {
        return Err(Error::ShapeMismatch(format!(
            "field has {} values, padded grid has {}",
            field.len(),
            grid.padded_points()
        )));
    }
    BoundaryPlan::new(grid, spec)?.apply(field);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space_model::build_grid;
    use crate::Precision;

    fn grid() -> Grid {
        build_grid(&[(0.0, 4.0), (0.0, 5.0)], &[1.0, 1.0], 4, Precision::Double).unwrap()
    }

    fn ramp(g: &Grid) -> Vec<f64> {
        (0..g.padded_points()).map(|i| 1.0 + i as f64).collect()
    }

    #[test]
    fn dirichlet_mirrors_antisymmetrically() {
        let g = grid();
        let mut f = ramp(&g);
        apply_boundary(&mut f, &g, &BoundarySpec::uniform(BoundaryCondition::NullDirichlet, 2)).unwrap();
        let p = g.padded_shape();
        let at = |z: usize, x: usize| f[z * p[1] + x];
        let h = g.halo;
        for x in h..h + 6 {
            assert_eq!(at(h, x), 0.0);
            assert_eq!(at(h + 4, x), 0.0);
            for k in 1..=h {
                assert_eq!(at(h - k, x), -at(h + k, x));
                assert_eq!(at(h + 4 + k, x), -at(h + 4 - k, x));
            }
        }
        for z in h..h + 5 {
            assert_eq!(at(z, h), 0.0);
            for k in 1..=h {
                assert_eq!(at(z, h - k), -at(z, h + k));
            }
        }
    }

    #[test]
    fn neumann_and_none() {
        let g = grid();
        let faces = vec![
            BoundaryCondition::NullNeumann,
            BoundaryCondition::None,
            BoundaryCondition::NullNeumann,
            BoundaryCondition::NullNeumann,
        ];
        let mut f = ramp(&g);
        apply_boundary(&mut f, &g, &BoundarySpec::new(faces, 2).unwrap()).unwrap();
        let p = g.padded_shape();
        let at = |z: usize, x: usize| f[z * p[1] + x];
        let h = g.halo;
        for x in h..h + 6 {
            for k in 1..=h {
                assert_eq!(at(h - k, x), at(h + k, x));
                assert_eq!(at(h + 4 + k, x), 0.0);
            }
            assert_ne!(at(h, x), 0.0);
        }
    }

    #[test]
    fn face_count_checked() {
        assert!(BoundarySpec::new(vec![BoundaryCondition::None; 4], 3).is_err());
        let g = grid();
        let mut f = vec![0.0; 3];
        assert!(apply_boundary(&mut f, &g, &BoundarySpec::uniform(BoundaryCondition::None, 2)).is_err());
    }
}
