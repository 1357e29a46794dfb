//! Cauchy principal values by symmetric excision.

use crate::error::{Error, Result};

use super::quad::{integrate_breaks, integrate_to_infinity, QuadValue, QuadratureSpec};

/// `P∫_lower^upper f(x) dx` where `f` has a simple pole at `pole`.
///
/// `f` is the full integrand, pole included. The interval symmetric about
/// the pole is folded onto `u = |x - pole|` so the singular parts cancel
/// node by node. `upper` may be `+∞`.
pub fn pv_integral<T, F>(f: F, pole: f64, lower: f64, upper: f64, spec: &QuadratureSpec) -> Result<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    pv_integral_breaks(f, pole, lower, upper, &[], spec)
}

/// As [`pv_integral`], with extra breakpoints where the integrand has kinks
/// or sharp features.
pub fn pv_integral_breaks<T, F>(
    mut f: F,
    pole: f64,
    lower: f64,
    upper: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if !(lower < pole && pole < upper) || !lower.is_finite() || upper.is_nan() {
        return Err(Error::Domain(format!(
            "principal value needs lower < pole < upper, got {lower}, {pole}, {upper}"
        )));
    }
    let left = pole - lower;
    let right = upper - pole;
    let d = left.min(right);

    let mut fold_pts: Vec<f64> = breaks
        .iter()
        .map(|&b| (b - pole).abs())
        .filter(|&u| u > 1e-9 * d && u < d)
        .collect();
    fold_pts.push(0.0);
    fold_pts.push(d);
    fold_pts.sort_by(f64::total_cmp);
    fold_pts.dedup();
    let folded = integrate_breaks(|u: f64| f(pole + u) + f(pole - u), &fold_pts, spec)?;

    let rest: T = if left < right {
        let a = pole + d;
        if upper.is_infinite() {
            let shifted: Vec<f64> = breaks.iter().map(|&b| b - a).filter(|&y| y > 0.0).collect();
            integrate_to_infinity(|y: f64| f(a + y), &shifted, spec)?.value
        } else {
            let pts = interval_points(a, upper, breaks);
            integrate_breaks(&mut f, &pts, spec)?.value
        }
    } else if right < left {
        let pts = interval_points(lower, pole - d, breaks);
        integrate_breaks(&mut f, &pts, spec)?.value
    } else {
        T::zero()
    };
    Ok(folded.value + rest)
}

fn interval_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::with_tolerances(1e-13, 1e-12)
    }

    #[test]
    fn odd_integrand_vanishes() {
        let v: f64 = pv_integral(|x| 1.0 / x, 0.0, -1.0, 1.0, &spec()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_interval_about_pole() {
        let v: f64 = pv_integral(|x| 1.0 / (x - 1.0), 1.0, 0.0, 2.0, &spec()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn log_two() {
        let v: f64 = pv_integral(|x| 1.0 / x, 0.0, -2.0, 1.0, &spec()).unwrap();
        assert_abs_diff_eq!(v, -(2f64.ln()), epsilon = 1e-11);
    }

    #[test]
    fn smooth_numerator() {
        // P∫_0^3 e^x/(x-1) dx = e·(Ei(2) - Ei(-1)).
        let ei2 = 4.954_234_356_001_89;
        let ei_m1 = -0.219_383_934_395_520_3;
        let expect = std::f64::consts::E * (ei2 - ei_m1);
        let v: f64 = pv_integral(|x: f64| x.exp() / (x - 1.0), 1.0, 0.0, 3.0, &spec()).unwrap();
        assert_abs_diff_eq!(v, expect, epsilon = 1e-9);
    }

    #[test]
    fn infinite_upper_limit() {
        // P∫_0^∞ dx/((x-1)(x+1)·(x^2+1)) reduces by partial fractions to -π/4.
        let v: f64 = pv_integral(
            |x: f64| 1.0 / ((x - 1.0) * (x + 1.0) * (x * x + 1.0)),
            1.0,
            0.0,
            f64::INFINITY,
            &spec(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, -std::f64::consts::FRAC_PI_4, epsilon = 1e-10);
    }

    #[test]
    fn break_next_to_pole() {
        let pole = 1.4000000000000001;
        let v: f64 = pv_integral_breaks(|x| 1.0 / (x - pole), pole, 0.0, 2.0 * pole, &[1.4, pole], &spec()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_pole_outside() {
        let r: Result<f64> = pv_integral(|x| 1.0 / x, 2.0, 0.0, 1.0, &spec());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn antisymmetric_under_negation(p in -0.8f64..0.8, a in 0.1f64..3.0) {
                let g = |x: f64| (a * x).cos() / (x - p);
                let s = spec();
                let v: f64 = pv_integral(g, p, -1.0, 1.0, &s).unwrap();
                let w: f64 = pv_integral(|x| -g(x), p, -1.0, 1.0, &s).unwrap();
                prop_assert!((v + w).abs() < 1e-12 * (1.0 + v.abs()));
            }

            #[test]
            fn additive_over_splits(p in -0.5f64..0.5, c in 0.6f64..0.95) {
                let g = |x: f64| (1.0 + x * x) / (x - p);
                let s = spec();
                let whole: f64 = pv_integral(g, p, -1.0, 1.0, &s).unwrap();
                let left: f64 = pv_integral(g, p, -1.0, c, &s).unwrap();
                let right = super::super::super::quad::integrate(g, c, 1.0, &s).unwrap().value;
                prop_assert!((whole - left - right).abs() < 1e-10);
            }
        }
    }
}
