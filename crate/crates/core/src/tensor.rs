//! 3×3 tensor aliases and small helpers shared by the physics modules.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

/// Real symmetric rank-2 tensor.
pub type SymmetricTensor3 = Matrix3<f64>;
/// Real (not necessarily symmetric) rank-2 tensor.
pub type RealTensor3 = Matrix3<f64>;
/// Complex rank-2 tensor.
pub type ComplexTensor3 = Matrix3<Complex64>;
pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;

pub fn to_complex(m: &RealTensor3) -> ComplexTensor3 {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &ComplexTensor3) -> RealTensor3 {
    m.map(|z| z.re)
}

pub fn imag_part(m: &ComplexTensor3) -> RealTensor3 {
    m.map(|z| z.im)
}

pub fn symmetrize(m: &RealTensor3) -> SymmetricTensor3 {
    (m + m.transpose()) * 0.5
}

/// Relative Frobenius distance `|a - b| / max(|b|, tiny)`.
pub fn rel_frobenius(a: &RealTensor3, b: &RealTensor3) -> f64 {
    let nb = b.norm();
    let d = (a - b).norm();
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

/// `a† M b` with the first argument conjugated.
pub fn sesquilinear(a: &CVec3, m: &RealTensor3, b: &CVec3) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc += a[i].conj() * m[(i, j)] * b[j];
        }
    }
    acc
}

/// Build a symmetric tensor from its six upper-triangle components
/// `[xx, xy, xz, yy, yz, zz]`.
pub fn from_upper(c: [f64; 6]) -> SymmetricTensor3 {
    Matrix3::new(c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5])
}

pub fn upper(m: &RealTensor3) -> [f64; 6] {
    [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)], m[(2, 2)]]
}

/// Component labels matching [`upper`].
pub const UPPER_LABELS: [&str; 6] = ["xx", "xy", "xz", "yy", "yz", "zz"];
/// Row-major labels for a full tensor.
pub const FULL_LABELS: [&str; 9] = ["xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz"];

pub fn full(m: &RealTensor3) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = m[(i, j)];
        }
    }
    out
}
