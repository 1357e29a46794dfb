//! Functions of small symmetric matrices.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Relative slack below zero tolerated before a matrix is declared indefinite.
pub const PSD_SLACK: f64 = 1e-9;

/// Symmetric positive-semidefinite square root.
///
/// Eigenvalues down to `-PSD_SLACK·trace(S)` are clipped to zero; anything
/// more negative is an error.
pub fn matrix_sqrt_psd(s: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let sym = (s + s.transpose()) * 0.5;
    let (vals, q) = jacobi_eigen(&sym);
    let tol = PSD_SLACK * sym.trace().abs();
    let min = vals.min();
    if min < -tol {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    let roots = vals.map(|l| l.max(0.0).sqrt());
    let m = q * Matrix3::from_diagonal(&roots) * q.transpose();
    Ok((m + m.transpose()) * 0.5)
}

/// Smallest eigenvalue of the symmetric part of `s`.
pub fn min_eigenvalue(s: &Matrix3<f64>) -> f64 {
    jacobi_eigen(&((s + s.transpose()) * 0.5)).0.min()
}

/// Eigen-decomposition `S = Q diag(λ) Qᵀ` of a symmetric matrix by cyclic
/// Jacobi rotations, accurate to a few ulps of `‖S‖`.
pub fn jacobi_eigen(s: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = *s;
    let mut q = Matrix3::identity();
    for _sweep in 0..50 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let diag = a[(0, 0)].powi(2) + a[(1, 1)].powi(2) + a[(2, 2)].powi(2);
        if off <= f64::EPSILON.powi(2) * 1e-4 * diag || off == 0.0 {
            break;
        }
        for (p, r) in [(0, 1), (0, 2), (1, 2)] {
            let apr = a[(p, r)];
            if apr == 0.0 {
                continue;
            }
            let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let sn = t * c;
            let mut g = Matrix3::identity();
            g[(p, p)] = c;
            g[(r, r)] = c;
            g[(p, r)] = sn;
            g[(r, p)] = -sn;
            a = g.transpose() * a * g;
            a[(p, r)] = 0.0;
            a[(r, p)] = 0.0;
            q *= g;
        }
    }
    (Vector3::new(a[(0, 0)], a[(1, 1)], a[(2, 2)]), q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn diagonal() {
        let m = matrix_sqrt_psd(&Matrix3::from_diagonal(&nalgebra::Vector3::new(4.0, 9.0, 0.0))).unwrap();
        assert_relative_eq!(
            m,
            Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 3.0, 0.0)),
            epsilon = 1e-14
        );
    }

    #[test]
    fn identity() {
        let m = matrix_sqrt_psd(&Matrix3::identity()).unwrap();
        assert_relative_eq!(m, Matrix3::identity(), epsilon = 1e-14);
    }

    #[test]
    fn tiny_negative_is_clipped() {
        let s = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, -1e-12));
        assert!(matrix_sqrt_psd(&s).is_ok());
    }

    #[test]
    fn indefinite_rejected() {
        let s = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, -0.1));
        assert!(matches!(matrix_sqrt_psd(&s), Err(Error::NotPsd { .. })));
    }

    proptest! {
        #[test]
        fn square_reconstructs(a in proptest::array::uniform9(-3.0f64..3.0)) {
            let a = Matrix3::from_row_slice(&a);
            let s = a.transpose() * a;
            let m = matrix_sqrt_psd(&s).unwrap();
            let err = (m * m - s).norm() / s.norm().max(1e-300);
            prop_assert!(err < 1e-12, "err {}", err);
            let comm = (m * s - s * m).norm();
            prop_assert!(comm <= 1e-12 * s.norm() * m.norm() + 1e-300);
            prop_assert!(min_eigenvalue(&m) >= -1e-12 * m.norm());
        }
    }
}
