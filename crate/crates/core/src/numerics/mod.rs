//! Quadrature, principal values, inverse Laplace transforms and PSD matrix functions.

mod laplace;
mod linalg;
mod pv;
mod quad;

pub use laplace::{
    bromwich_fft_grid, inverse_laplace, inverse_laplace_scalar, talbot_multi, InverseLaplaceSpec,
    InversionMethod,
};
pub use linalg::{jacobi_eigen, matrix_sqrt_psd, min_eigenvalue, PSD_SLACK};
pub use pv::{pv_integral, pv_integral_breaks};
pub use quad::{
    integrate, integrate_breaks, integrate_regulated, integrate_to_infinity, QuadResult, QuadValue, QuadratureSpec,
};

use crate::error::Result;

/// `∫_0^∞ f(x) dx` for an absolutely integrable or oscillatory-decaying integrand.
pub fn semi_infinite_quad<F>(f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    Ok(integrate_to_infinity(f, &[], spec)?.value)
}
