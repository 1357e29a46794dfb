//! Adaptive Gauss–Kronrod quadrature on finite and semi-infinite ranges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Sub};

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances and limits for the adaptive integrators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Angular frequency of the dominant oscillation of the integrand, if any.
    pub oscillation_frequency_hint: Option<f64>,
    /// Ultraviolet cutoff frequency for bath integrals that diverge without
    /// one; those integrals apply a smooth regulator rather than truncating.
    /// `None` refuses to regulate.
    pub cutoff: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            oscillation_frequency_hint: None,
            cutoff: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn with_hint(mut self, omega: f64) -> Self {
        self.oscillation_frequency_hint = Some(omega);
        self
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Validation("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions < 8 {
            return Err(Error::Validation("max_subdivisions must be at least 8".into()));
        }
        if let Some(h) = self.oscillation_frequency_hint {
            if !(h.is_finite() && h >= 0.0) {
                return Err(Error::Validation("oscillation hint must be finite and >= 0".into()));
            }
        }
        if let Some(c) = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Validation("cutoff must be positive".into()));
            }
        }
        Ok(())
    }

    fn target(&self, value_norm: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value_norm)
    }
}

/// Values that can be integrated: scalars, complex numbers and 3×3 tensors.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn scale(self, w: f64) -> Self;
    fn magnitude(&self) -> f64;
    /// Flattened real components, for componentwise extrapolation.
    fn components(&self) -> Vec<f64>;
    fn from_components(c: &[f64]) -> Self;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn components(&self) -> Vec<f64> {
        vec![*self]
    }
    fn from_components(c: &[f64]) -> Self {
        c[0]
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn components(&self) -> Vec<f64> {
        vec![self.re, self.im]
    }
    fn from_components(c: &[f64]) -> Self {
        Complex64::new(c[0], c[1])
    }
}

impl QuadValue for Matrix3<f64> {
    fn zero() -> Self {
        Matrix3::zeros()
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn components(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }
    fn from_components(c: &[f64]) -> Self {
        Matrix3::from_column_slice(c)
    }
}

impl QuadValue for Matrix3<Complex64> {
    fn zero() -> Self {
        Matrix3::zeros()
    }
    fn scale(self, w: f64) -> Self {
        self.map(|z| z * w)
    }
    fn magnitude(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
    fn components(&self) -> Vec<f64> {
        self.iter().flat_map(|z| [z.re, z.im]).collect()
    }
    fn from_components(c: &[f64]) -> Self {
        Matrix3::from_iterator(c.chunks(2).map(|p| Complex64::new(p[0], p[1])))
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208977019154,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

fn gk21<T, F>(f: &mut F, a: f64, b: f64) -> (T, f64)
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc.scale(WGK[10]);
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron = kron + s.scale(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s.scale(WG[j / 2]);
        }
    }
    let kron = kron.scale(h);
    let gauss = gauss.scale(h);
    let err = (kron - gauss).magnitude();
    (kron, err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration over `[points[0], points[last]]`, starting from the
/// segments delimited by `points` (which must be increasing).
pub fn integrate_breaks<T, F>(mut f: F, points: &[f64], spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if points.len() < 2 {
        return Err(Error::Domain("integration needs at least two points".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            if b == a {
                continue;
            }
            return Err(Error::Domain(format!("integration points not increasing: {a} > {b}")));
        }
        let (value, error) = gk21(&mut f, a, b);
        evaluations += 21;
        heap.push(Segment { a, b, value, error });
    }
    let total = |heap: &BinaryHeap<Segment<T>>| {
        let mut v = T::zero();
        let mut e = 0.0;
        for s in heap.iter() {
            v = v + s.value;
            e += s.error;
        }
        (v, e)
    };
    if heap.is_empty() {
        return Ok(QuadResult {
            value: T::zero(),
            error: 0.0,
            evaluations,
        });
    }
    let mut splits = 0;
    let (mut value, mut error) = total(&heap);
    loop {
        if splits % 50 == 0 {
            // Refresh running sums to shed accumulated rounding.
            (value, error) = total(&heap);
        }
        if !value.magnitude().is_finite() {
            return Err(Error::Divergence("integrand is not finite on the integration range".into()));
        }
        if error <= spec.target(value.magnitude()) {
            let (value, error) = total(&heap);
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::Accuracy {
                estimate: value.magnitude(),
                error_bound: error,
            });
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point.
            return Err(Error::Accuracy {
                estimate: value.magnitude(),
                error_bound: error,
            });
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        value = value - worst.value + v1 + v2;
        error += e1 + e2 - worst.error;
        splits += 1;
    }
}

/// Adaptive integration over the finite interval `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            error: 0.0,
            evaluations: 0,
        });
    }
    if a > b {
        let r = integrate(f, b, a, spec)?;
        return Ok(QuadResult {
            value: r.value.scale(-1.0),
            ..r
        });
    }
    integrate_breaks(f, &[a, b], spec)
}

/// `∫_a^∞ f` through the map `x = a / u`; requires `a > 0` and algebraic or faster decay.
fn tail_map<T, F>(mut f: F, a: f64, spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate(
        |u: f64| {
            let x = a / u;
            f(x).scale(a / (u * u))
        },
        0.0,
        1.0,
        spec,
    )
}

/// Wynn epsilon extrapolation of a sequence of partial sums. Returns the
/// even-column estimate that agrees best with its predecessor.
pub(crate) fn wynn_epsilon(sums: &[f64]) -> Option<f64> {
    let n = sums.len();
    if n < 3 {
        return sums.last().copied();
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut estimates = vec![*sums.last().unwrap()];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 || !d.is_finite() {
                next.clear();
                break;
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        if next.is_empty() {
            break;
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            match cur.last() {
                Some(&v) if v.is_finite() => estimates.push(v),
                _ => break,
            }
        }
    }
    if estimates.len() == 1 {
        return Some(estimates[0]);
    }
    let mut best = estimates[1];
    let mut best_gap = (estimates[1] - estimates[0]).abs();
    for w in estimates.windows(2).skip(1) {
        let gap = (w[1] - w[0]).abs();
        if gap < best_gap {
            best_gap = gap;
            best = w[1];
        }
    }
    Some(best)
}

/// Integrate over `[0, ∞)` with explicit interior breakpoints. Uses
/// half-period panels with series acceleration when an oscillation hint is
/// present, and an algebraic tail map otherwise. The `cutoff` field is left
/// to callers that know how to regulate their integrand.
pub fn integrate_to_infinity<T, F>(mut f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    spec.validate()?;
    let mut pts: Vec<f64> = std::iter::once(0.0)
        .chain(breaks.iter().copied().filter(|&b| b > 0.0 && b.is_finite()))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    match spec.oscillation_frequency_hint {
        Some(w) if w > 0.0 => oscillatory_tail(f, &pts, w, spec),
        _ => {
            let last = *pts.last().unwrap();
            let start = if last > 0.0 { last } else { 1.0 };
            if last == 0.0 {
                pts.push(start);
            }
            let head = integrate_breaks(&mut f, &pts, spec)?;
            let tail = tail_map(&mut f, start, spec)?;
            Ok(QuadResult {
                value: head.value + tail.value,
                error: head.error + tail.error,
                evaluations: head.evaluations + tail.evaluations,
            })
        }
    }
}

/// `∫_0^{60Λ} f` for an integrand already multiplied by a regulator that
/// decays like `e^{−ω/Λ}`. Panels are cut at half periods of `hint` (at most
/// 4000 of them) and at `breaks`.
pub fn integrate_regulated<T, F>(
    f: F,
    breaks: &[f64],
    hint: Option<f64>,
    cutoff: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let top = 60.0 * cutoff;
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < top).collect();
    pts.push(0.0);
    pts.push(top);
    let step = match hint {
        Some(w) if w > 0.0 => (std::f64::consts::PI / w).max(top / 4000.0),
        _ => top / 64.0,
    };
    let n = (top / step) as usize;
    pts.extend((1..n).map(|k| k as f64 * step));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut s = spec.clone();
    s.max_subdivisions = s.max_subdivisions.max(4 * pts.len());
    integrate_breaks(f, &pts, &s)
}

fn oscillatory_tail<T, F>(mut f: F, pts: &[f64], w: f64, spec: &QuadratureSpec) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let half = std::f64::consts::PI / w;
    let last = *pts.last().unwrap();
    let start = ((last / half).ceil().max(1.0)) * half;
    let mut p = pts.to_vec();
    if start > last {
        p.push(start);
    }
    let head = integrate_breaks(&mut f, &p, spec)?;
    let mut evaluations = head.evaluations;
    let mut err = head.error;

    // Panel sums accumulated as a sequence; extrapolate componentwise through
    // a scalar projection onto the running direction for tensors.
    let mut panels: Vec<T> = Vec::new();
    let mut partial = head.value;
    let mut history_norm: Vec<f64> = Vec::new();
    let max_panels = (spec.max_subdivisions * 4).max(64);
    let mut x0 = start;
    let mut last_extrap: Option<T> = None;
    let mut stable = 0;
    for k in 0..max_panels {
        let r = integrate(&mut f, x0, x0 + half, spec)?;
        evaluations += r.evaluations;
        err += r.error;
        x0 += half;
        panels.push(r.value);
        partial = partial + r.value;
        history_norm.push(r.value.magnitude());

        if k >= 8 {
            // Divergence: panel magnitudes growing instead of decaying.
            let n = history_norm.len();
            let first: f64 = history_norm[..3].iter().sum();
            let recent: f64 = history_norm[n - 3..].iter().sum();
            if recent > 2.0 * first && recent > spec.abs_tol {
                return Err(Error::Divergence(
                    "oscillatory panel sums are growing; supply a cutoff".into(),
                ));
            }
            let extrap = extrapolate_panels(head.value, &panels);
            if let Some(prev) = last_extrap {
                let diff = (extrap - prev).magnitude();
                let tol = spec.target(extrap.magnitude());
                let tail_small = r.value.magnitude() <= tol;
                if diff <= tol || tail_small {
                    stable += 1;
                    if stable >= 2 {
                        return Ok(QuadResult {
                            value: if tail_small { partial } else { extrap },
                            error: err + diff,
                            evaluations,
                        });
                    }
                } else {
                    stable = 0;
                }
            }
            last_extrap = Some(extrap);
        }
    }
    let v = last_extrap.unwrap_or(partial);
    Err(Error::Accuracy {
        estimate: v.magnitude(),
        error_bound: err,
    })
}

/// Extrapolate `head + Σ panels` with Wynn's epsilon on each real component.
fn extrapolate_panels<T: QuadValue>(head: T, panels: &[T]) -> T {
    // Only the last 30 partial sums take part; older ones are folded in.
    let n = panels.len();
    let skip = n.saturating_sub(30);
    let mut base = head;
    for p in &panels[..skip] {
        base = base + *p;
    }
    let sums: Vec<Vec<f64>> = panels[skip..]
        .iter()
        .scan(base, |acc, p| {
            *acc = *acc + *p;
            Some(acc.components())
        })
        .collect();
    let width = sums[0].len();
    let out: Vec<f64> = (0..width)
        .map(|c| {
            let seq: Vec<f64> = sums.iter().map(|s| s[c]).collect();
            wynn_epsilon(&seq).unwrap_or(0.0)
        })
        .collect();
    T::from_components(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::with_tolerances(1e-13, 1e-12)
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| x.powi(5) - 2.0 * x, 0.0, 2.0, &spec()).unwrap();
        assert_abs_diff_eq!(r.value, 64.0 / 6.0 - 4.0, epsilon = 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x: f64| x.exp(), 1.0, 0.0, &spec()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 - std::f64::consts::E, epsilon = 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &spec()).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_to_infinity(|x: f64| (-x).exp(), &[], &spec()).unwrap().value;
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_moment() {
        let v = integrate_to_infinity(|x: f64| x * (-x * x).exp(), &[], &spec()).unwrap().value;
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_integral() {
        let s = spec().with_hint(1.0);
        let v = integrate_to_infinity(|x: f64| if x == 0.0 { 1.0 } else { x.sin() / x }, &[], &s)
            .unwrap()
            .value;
        assert_abs_diff_eq!(v, PI / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn oscillatory_with_breaks_and_complex_values() {
        // ∫_0^∞ e^{iωx}/(1+x²) dx has real part (π/2)e^{-ω}.
        let s = spec().with_hint(3.0);
        let v: Complex64 = integrate_to_infinity(
            |x: f64| Complex64::new(0.0, 3.0 * x).exp() / (1.0 + x * x),
            &[1.0, 2.0],
            &s,
        )
        .unwrap()
        .value;
        assert_abs_diff_eq!(v.re, PI / 2.0 * (-3f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn growing_oscillation_is_divergent() {
        let s = spec().with_hint(1.0);
        let r = integrate_to_infinity(|x: f64| x * x.sin(), &[], &s);
        assert!(matches!(r, Err(Error::Divergence(_)) | Err(Error::Accuracy { .. })));
    }

    #[test]
    fn matrix_valued() {
        let r = integrate(|x: f64| Matrix3::identity() * x, 0.0, 1.0, &spec()).unwrap();
        assert_abs_diff_eq!(r.value, Matrix3::identity() * 0.5, epsilon = 1e-14);
    }

    #[test]
    fn validation() {
        let mut s = spec();
        s.max_subdivisions = 4;
        assert!(s.validate().is_err());
        assert!(QuadratureSpec::with_tolerances(0.0, 1e-3).validate().is_err());
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // Partial sums of ln 2 = 1 - 1/2 + 1/3 - ...
        let mut sums = Vec::new();
        let mut acc = 0.0;
        for k in 1..=20 {
            acc += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            sums.push(acc);
        }
        let v = wynn_epsilon(&sums).unwrap();
        assert_abs_diff_eq!(v, 2f64.ln(), epsilon = 1e-12);
    }
}
