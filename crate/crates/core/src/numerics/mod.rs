//! Finite-difference weights, the CFL time-step bound and special functions.

mod special;
mod stencil;

pub use special::{bessel_i0, bessel_j0, bessel_y0, hankel2_0, sinc};
pub use stencil::{
    first_derivative_coefficients, second_derivative_coefficients, stable_dt, StencilCoeffs,
    MAX_ORDER, MIN_ORDER,
};
