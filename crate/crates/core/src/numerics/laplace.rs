//! Numerical inverse Laplace transforms.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMethod {
    Talbot,
    BromwichFft,
}

/// Parameters of the inversion contour.
///
/// The Talbot contour is `s(θ) = shift + λ(θ cot θ + i·stretch·θ)` with
/// `λ = contour_scale · 2M / (5t)`. Transforms with poles off the real axis
/// need `λ·stretch·π/2` to exceed the largest pole frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseLaplaceSpec {
    pub method: InversionMethod,
    pub node_count: usize,
    pub contour_scale: f64,
    pub shift: f64,
    pub stretch: f64,
}

impl Default for InverseLaplaceSpec {
    fn default() -> Self {
        InverseLaplaceSpec {
            method: InversionMethod::Talbot,
            node_count: 32,
            contour_scale: 1.0,
            shift: 0.0,
            stretch: 1.0,
        }
    }
}

impl InverseLaplaceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 16 {
            return Err(Error::Validation("node_count must be at least 16".into()));
        }
        if self.method == InversionMethod::Talbot && self.node_count % 2 != 0 {
            return Err(Error::Validation("Talbot node_count must be even".into()));
        }
        if !(self.contour_scale.is_finite() && self.contour_scale > 0.0) {
            return Err(Error::Validation("contour_scale must be positive".into()));
        }
        if !self.shift.is_finite() {
            return Err(Error::Validation("contour shift must be finite".into()));
        }
        if !(self.stretch.is_finite() && self.stretch >= 1.0) {
            return Err(Error::Validation("contour stretch must be >= 1".into()));
        }
        Ok(())
    }

    /// Contour adapted to transforms whose singularities satisfy
    /// `Re s ≤ max_re` and `|Im s| ≤ max_im`, for inversion at times up to `t_max`.
    ///
    /// The node count grows with the number of oscillations `max_im·t_max`.
    pub fn for_singularities(max_re: f64, max_im: f64, t_max: f64) -> Self {
        let mut spec = InverseLaplaceSpec {
            shift: max_re.max(0.0),
            ..Default::default()
        };
        if max_im > 0.0 && t_max > 0.0 {
            let phase = max_im * t_max;
            let m = (32.0 + 0.6 * phase).min(72.0);
            let m = (m.ceil() as usize + 1) & !1;
            spec.node_count = m;
            let lambda = 2.0 * m as f64 / (5.0 * t_max);
            spec.stretch = (1.6 * max_im / (lambda * PI / 2.0)).max(1.0);
        }
        spec
    }
}

/// Talbot inversion of several transforms sharing one contour.
///
/// `eval(s, out)` writes the transforms at `s` into `out` (length `n_out`).
pub fn talbot_multi<F>(mut eval: F, n_out: usize, t: f64, spec: &InverseLaplaceSpec) -> Result<Vec<f64>>
where
    F: FnMut(Complex64, &mut [Complex64]) -> Result<()>,
{
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("inverse Laplace needs t > 0, got {t}")));
    }
    spec.validate()?;
    let m = spec.node_count;
    let lambda = spec.contour_scale * 2.0 * m as f64 / (5.0 * t);
    let nu = spec.stretch;
    let sigma = spec.shift;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_out];
    let mut acc = vec![0.0; n_out];

    for k in 0..m {
        let (s, ds, weight) = if k == 0 {
            (
                Complex64::new(sigma + lambda, 0.0),
                Complex64::new(0.0, lambda * nu),
                0.5,
            )
        } else {
            let th = k as f64 * PI / m as f64;
            let (sn, cs) = th.sin_cos();
            let cot = cs / sn;
            let s = Complex64::new(sigma + lambda * th * cot, lambda * nu * th);
            let ds = Complex64::new(lambda * (cot - th / (sn * sn)), lambda * nu);
            (s, ds, 1.0)
        };
        eval(s, &mut buf)?;
        let e = (s * t).exp() * ds;
        for (a, v) in acc.iter_mut().zip(buf.iter()) {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::ContourSingularity { re: s.re, im: s.im });
            }
            *a += weight * (e * v).im;
        }
    }
    Ok(acc.into_iter().map(|a| a / m as f64).collect())
}

/// Inverse Laplace transform of a scalar function at time `t`.
pub fn inverse_laplace_scalar<F>(mut f: F, t: f64, spec: &InverseLaplaceSpec) -> Result<f64>
where
    F: FnMut(Complex64) -> Complex64,
{
    match spec.method {
        InversionMethod::Talbot => {
            let v = talbot_multi(
                |s, out| {
                    out[0] = f(s);
                    Ok(())
                },
                1,
                t,
                spec,
            )?;
            Ok(v[0])
        }
        InversionMethod::BromwichFft => {
            let dt = t / 32.0;
            let grid = bromwich_fft_grid(|s, out| out[0] = f(s), 1, dt, 33, spec)?;
            Ok(grid[32][0])
        }
    }
}

/// Elementwise inverse Laplace transform of a complex-matrix function.
pub fn inverse_laplace<F>(mut f: F, t: f64, spec: &InverseLaplaceSpec) -> Result<Matrix3<f64>>
where
    F: FnMut(Complex64) -> Result<Matrix3<Complex64>>,
{
    match spec.method {
        InversionMethod::Talbot => {
            let v = talbot_multi(
                |s, out| {
                    let m = f(s)?;
                    out.copy_from_slice(m.as_slice());
                    Ok(())
                },
                9,
                t,
                spec,
            )?;
            Ok(Matrix3::from_column_slice(&v))
        }
        InversionMethod::BromwichFft => {
            let dt = t / 32.0;
            let mut err = None;
            let grid = bromwich_fft_grid(
                |s, out| match f(s) {
                    Ok(m) => out.copy_from_slice(m.as_slice()),
                    Err(e) => {
                        err.get_or_insert(e);
                        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                    }
                },
                9,
                dt,
                33,
                spec,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            Ok(Matrix3::from_column_slice(&grid[32]))
        }
    }
}

/// Whole-curve inversion on the uniform grid `t_j = j·dt`, `j < n`, by the
/// Fourier-series (Dubner–Abate) form of the Bromwich integral.
///
/// The series period is `2T` with `T = n·dt`; the abscissa is chosen so the
/// aliased copies are damped by about `1e-8`. Accuracy is modest (≈1e-3) for
/// transforms decaying like `1/s`.
pub fn bromwich_fft_grid<F>(
    mut eval: F,
    n_out: usize,
    dt: f64,
    n: usize,
    spec: &InverseLaplaceSpec,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(Complex64, &mut [Complex64]),
{
    if !(dt > 0.0 && dt.is_finite()) || n < 2 {
        return Err(Error::Domain("Bromwich grid needs dt > 0 and at least two points".into()));
    }
    let big_t = n as f64 * dt;
    let a = spec.shift.max(0.0) + 18.4 / (2.0 * big_t) * spec.contour_scale;
    let period = 2 * n;
    let terms = (period * 64).max(spec.node_count).next_power_of_two();
    let mut bins = vec![vec![Complex64::new(0.0, 0.0); period]; n_out];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_out];
    for k in 0..terms {
        let s = Complex64::new(a, k as f64 * PI / big_t);
        eval(s, &mut buf);
        let w = if k == 0 { 0.5 } else { 1.0 };
        for (c, v) in buf.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::ContourSingularity { re: s.re, im: s.im });
            }
            bins[c][k % period] += v * w;
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(period);
    for b in bins.iter_mut() {
        fft.process(b);
    }
    let mut out = vec![vec![0.0; n_out]; n];
    for (j, row) in out.iter_mut().enumerate() {
        let t = j as f64 * dt;
        let pref = (a * t).exp() / big_t;
        for (c, v) in row.iter_mut().enumerate() {
            *v = pref * bins[c][j].re;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn ramp() {
        let spec = InverseLaplaceSpec::default();
        let m = inverse_laplace(|s| Ok(Matrix3::identity().map(|x| c(x)) / (s * s)), 3.0, &spec).unwrap();
        assert_relative_eq!(m, Matrix3::identity() * 3.0, max_relative = 1e-10);
    }

    #[test]
    fn partial_fractions() {
        let spec = InverseLaplaceSpec::default();
        let v = inverse_laplace_scalar(|s| 1.0 / (s * (s + 2.0)), 1.0, &spec).unwrap();
        assert_relative_eq!(v, (1.0 - (-2f64).exp()) / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn undamped_oscillator_with_stretched_contour() {
        for &(w, t) in &[(1.0, 0.5), (1.0, 5.0), (2.0, 10.0), (1.0, 20.0)] {
            let spec = InverseLaplaceSpec::for_singularities(0.0, w, t);
            let v = inverse_laplace_scalar(|s| s / (s * s + w * w), t, &spec).unwrap();
            let expect = (w * t).cos();
            assert!((v - expect).abs() < 1e-7, "w={w} t={t}: {v} vs {expect}");
        }
    }

    #[test]
    fn damped_oscillator() {
        let (g, w) = (0.2, 1.5);
        for &t in &[0.3, 2.0, 8.0, 15.0] {
            let spec = InverseLaplaceSpec::for_singularities(0.0, w, t);
            let v = inverse_laplace_scalar(|s| 1.0 / ((s + g) * (s + g) + w * w), t, &spec).unwrap();
            let expect = (-g * t).exp() * (w * t).sin() / w;
            assert!((v - expect).abs() < 1e-8, "t={t}: {v} vs {expect}");
        }
    }

    #[test]
    fn rejects_nonpositive_time() {
        let r = inverse_laplace_scalar(|s| 1.0 / s, 0.0, &InverseLaplaceSpec::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn pole_on_contour_reported() {
        let spec = InverseLaplaceSpec::default();
        let lambda = 2.0 * 32.0 / 5.0;
        let r = inverse_laplace_scalar(move |s| 1.0 / (s - lambda), 1.0, &spec);
        assert!(matches!(r, Err(Error::ContourSingularity { .. })));
    }

    #[test]
    fn odd_node_count_rejected() {
        let spec = InverseLaplaceSpec {
            node_count: 33,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn bromwich_grid_matches_exponential_relaxation() {
        let spec = InverseLaplaceSpec {
            method: InversionMethod::BromwichFft,
            ..Default::default()
        };
        let grid = bromwich_fft_grid(|s, out| out[0] = 1.0 / (s * (s + 1.0)), 1, 0.05, 200, &spec).unwrap();
        for (j, row) in grid.iter().enumerate().skip(1) {
            let t = j as f64 * 0.05;
            let expect = 1.0 - (-t).exp();
            assert!((row[0] - expect).abs() < 1e-3, "t={t}: {} vs {expect}", row[0]);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn library(i: usize, s: Complex64) -> Complex64 {
            match i {
                0 => 1.0 / (s * s),
                1 => 1.0 / (s * (s + 2.0)),
                2 => 1.0 / (s * s * (s + 1.0)),
                _ => 1.0 / (s * s * s),
            }
        }

        fn oracle(i: usize, t: f64) -> f64 {
            match i {
                0 => t,
                1 => (1.0 - (-2.0 * t).exp()) / 2.0,
                2 => t - 1.0 + (-t).exp(),
                _ => t * t / 2.0,
            }
        }

        proptest! {
            #[test]
            fn rational_library_round_trip(i in 0usize..4, lt in (0.01f64).ln()..(50f64).ln()) {
                let t = lt.exp();
                let v = inverse_laplace_scalar(|s| library(i, s), t, &InverseLaplaceSpec::default()).unwrap();
                let e = oracle(i, t);
                prop_assert!(((v - e) / e).abs() < 1e-8, "i={} t={} v={} e={}", i, t, v, e);
            }
        }
    }
}
