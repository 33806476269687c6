use crate::numerics::StencilCoeffs;
use crate::space_model::Grid;
use crate::{Error, Result};

/// `(d rho / d x_a) / rho` for every axis on the padded layout, using the
/// first-derivative stencil. Nodes whose stencil would leave the padded grid
/// (the ghost layers) are set to zero; they are never updated.
pub fn density_log_gradient(grid: &Grid, density: &[f64], coeffs: &StencilCoeffs) -> Result<Vec<Vec<f64>>> {
    if density.len() != grid.padded_points() {
        return Err(Error::ShapeMismatch(format!(
            "density has {} values, padded grid has {}",
            density.len(),
            grid.padded_points()
        )));
    }
    if let Some(bad) = density.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidArgument(format!("density must be positive, found {bad}")));
    }
    let r = coeffs.radius();
    if r > grid.halo {
        return Err(Error::InvalidArgument(format!(
            "stencil radius {r} exceeds grid halo {}",
            grid.halo
        )));
    }
    let shape = grid.padded_shape();
    let strides = grid.padded_strides();
    let ext = grid.extended_shape();
    let mut out = vec![vec![0.0; density.len()]; grid.ndim()];
    for (lin, idx) in grid.padded_indices().enumerate() {
        let inside = idx
            .iter()
            .zip(&ext)
            .all(|(&i, &n)| i >= grid.halo && i < grid.halo + n);
        if !inside {
            continue;
        }
        for axis in 0..grid.ndim() {
            let s = strides[axis];
            let mut d = 0.0;
            for j in 1..=r {
                d += coeffs.first_deriv[j - 1] * (density[lin + j * s] - density[lin - j * s]);
            }
            out[axis][lin] = d / (2.0 * grid.spacing[axis]) / density[lin];
        }
    }
    debug_assert_eq!(shape.iter().product::<usize>(), density.len());
    Ok(out)
}
