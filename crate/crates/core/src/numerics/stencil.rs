use crate::{Error, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 20;

/// Central stencil weights for one axis, with grid spacing factored out.
///
/// `second_deriv[0]` is the centre tap and `second_deriv[j]` multiplies
/// `phi[k + j] + phi[k - j]`; the operator is divided by `dx^2`.
/// `first_deriv[j - 1]` multiplies `phi[k + j] - phi[k - j]` and the sum is
/// divided by `2 dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilCoeffs {
    pub order: usize,
    pub second_deriv: Vec<f64>,
    pub first_deriv: Vec<f64>,
}

impl StencilCoeffs {
    pub fn new(order: usize) -> Result<Self> {
        let moments = moment_weights(order)?;
        Ok(Self {
            order,
            second_deriv: second_from_moments(&moments),
            first_deriv: first_from_moments(&moments),
        })
    }

    pub fn radius(&self) -> usize {
        self.order / 2
    }

    /// Sum of the absolute values of every tap of the 1D second-derivative stencil.
    pub fn second_deriv_abs_sum(&self) -> f64 {
        self.second_deriv[0].abs() + 2.0 * self.second_deriv[1..].iter().map(|v| v.abs()).sum::<f64>()
    }
}

pub fn second_derivative_coefficients(order: usize) -> Result<Vec<f64>> {
    moment_weights(order).map(|m| second_from_moments(&m))
}

pub fn first_derivative_coefficients(order: usize) -> Result<Vec<f64>> {
    moment_weights(order).map(|m| first_from_moments(&m))
}

fn check_order(order: usize) -> Result<()> {
    if order % 2 != 0 || !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    Ok(())
}

fn second_from_moments(m: &[f64]) -> Vec<f64> {
    let taps: Vec<f64> = m
        .iter()
        .enumerate()
        .map(|(i, c)| c / ((i + 1) * (i + 1)) as f64)
        .collect();
    let centre = -2.0 * taps.iter().sum::<f64>();
    std::iter::once(centre).chain(taps).collect()
}

fn first_from_moments(m: &[f64]) -> Vec<f64> {
    m.iter()
        .enumerate()
        .map(|(i, c)| c / (i + 1) as f64)
        .collect()
}

/// Solves the Taylor-moment conditions shared by both central stencils.
///
/// With `x_j = j^2`, the second-derivative taps satisfy
/// `sum_j v_j x_j^m = [m == 1]` for `m = 1..=r` and the first-derivative taps
/// satisfy `sum_j w_j j x_j^(m-1) = [m == 1]`. Substituting `c_j = v_j j^2 =
/// w_j j` turns both into the Vandermonde system `sum_j c_j x_j^k = [k == 0]`,
/// `k = 0..r`, solved here with the Björck–Pereyra recurrences.
fn moment_weights(order: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    let r = order / 2;
    let x: Vec<f64> = (1..=r).map(|j| (j * j) as f64).collect();
    let mut b = vec![0.0; r];
    b[0] = 1.0;
    let n = r - 1;
    for k in 0..n {
        for i in (k + 1..=n).rev() {
            b[i] -= x[k] * b[i - 1];
        }
    }
    for k in (0..n).rev() {
        for i in k + 1..=n {
            b[i] /= x[i] - x[i - k - 1];
        }
        for i in k..n {
            b[i] -= b[i + 1];
        }
    }
    Ok(b)
}

/// Largest stable time step of the leapfrog scheme, `2 dx_min / (c_max sqrt(a))`
/// with `a = ndim * sum |second-derivative taps|`.
pub fn stable_dt(c_max: f64, spacing: &[f64], order: usize) -> Result<f64> {
    if !(c_max > 0.0) {
        return Err(Error::InvalidArgument(format!("c_max must be positive, got {c_max}")));
    }
    if spacing.is_empty() || spacing.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "grid spacing must be positive, got {spacing:?}"
        )));
    }
    let coeffs = StencilCoeffs::new(order)?;
    let dx_min = spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let a = spacing.len() as f64 * coeffs.second_deriv_abs_sum();
    Ok(2.0 * dx_min / (c_max * a.sqrt()))
}
