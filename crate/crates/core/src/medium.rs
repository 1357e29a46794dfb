//! Anisotropic dissipative media and their response functions.
//!
//! Conventions: `χ(ω) = ∫₀^∞ χ(t) e^{iωt} dt` and `χ̃(s) = ∫₀^∞ χ(t) e^{-st} dt`.
//! The coupling tensor satisfies `f fᵀ = (2ω/π) Im χ(ω)` and
//! `χ(t) = ∫₀^∞ (sin ωt / ω) f fᵀ dω` for `t > 0`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    integrate_breaks, integrate_to_infinity, jacobi_eigen, matrix_sqrt_psd, pv_integral_breaks, QuadratureSpec,
};
use crate::tensor::{from_upper, to_complex, ComplexTensor3, SymmetricTensor3};

/// Damped resonance along one principal axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzAxis {
    pub beta: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl LorentzAxis {
    pub fn new(beta: f64, nu: f64, gamma: f64) -> Self {
        LorentzAxis { beta, nu, gamma }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Validation(format!("lorentz beta must be >= 0, got {}", self.beta)));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Validation(format!("lorentz nu must be > 0, got {}", self.nu)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Validation(format!("lorentz gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }

    fn w2(&self) -> f64 {
        self.nu * self.nu + 0.25 * self.gamma * self.gamma
    }

    pub fn chi_time(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.beta * (-0.5 * self.gamma * t).exp() * (self.nu * t).sin() / self.nu
    }

    /// Time derivative of `chi_time` for `t > 0`.
    pub fn chi_time_derivative(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let e = (-0.5 * self.gamma * t).exp();
        let (s, c) = (self.nu * t).sin_cos();
        self.beta * e * (c - 0.5 * self.gamma * s / self.nu)
    }

    pub fn chi_frequency(&self, omega: f64) -> Complex64 {
        self.beta / Complex64::new(self.w2() - omega * omega, -self.gamma * omega)
    }

    pub fn im_chi(&self, omega: f64) -> f64 {
        let d = self.w2() - omega * omega;
        self.beta * self.gamma * omega / (d * d + self.gamma * self.gamma * omega * omega)
    }

    pub fn chi_laplace(&self, s: Complex64) -> Complex64 {
        let a = s + 0.5 * self.gamma;
        self.beta / (a * a + self.nu * self.nu)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (nu, g) = (self.nu, self.gamma.max(1e-3 * self.nu));
        let mut b = vec![nu, 2.0 * nu];
        for k in [0.5, 2.0, 8.0, 32.0] {
            b.push(nu - k * g);
            b.push(nu + k * g);
        }
        b.retain(|&x| x > 0.0);
        b
    }
}

/// Resonant medium with independent Lorentz responses along three principal
/// axes; `rotation` maps principal-axis components to lab components.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzMedium {
    pub axes: [LorentzAxis; 3],
    pub rotation: Matrix3<f64>,
}

impl LorentzMedium {
    fn assemble(&self, d: [f64; 3]) -> SymmetricTensor3 {
        let r = &self.rotation;
        let m = r * Matrix3::from_diagonal(&nalgebra::Vector3::from(d)) * r.transpose();
        (m + m.transpose()) * 0.5
    }

    fn assemble_c(&self, d: [Complex64; 3]) -> ComplexTensor3 {
        let r = to_complex(&self.rotation);
        r * Matrix3::from_diagonal(&nalgebra::Vector3::from(d)) * r.transpose()
    }
}

/// Piecewise-linear Im χ on a strictly increasing positive grid, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMedium {
    omega: Vec<f64>,
    samples: Vec<SymmetricTensor3>,
}

impl TabulatedMedium {
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn samples(&self) -> &[SymmetricTensor3] {
        &self.samples
    }

    fn interp(&self, w: f64) -> SymmetricTensor3 {
        let g = &self.omega;
        if w < g[0] || w > g[g.len() - 1] {
            return Matrix3::zeros();
        }
        let j = match g.binary_search_by(|x| x.total_cmp(&w)) {
            Ok(j) => return self.samples[j],
            Err(j) => j,
        };
        let (a, b) = (g[j - 1], g[j]);
        let u = (w - a) / (b - a);
        self.samples[j - 1] * (1.0 - u) + self.samples[j] * u
    }

    /// `(2/π) ∫ sin(ωt) Im χ(ω) dω`, exact for the linear interpolant.
    fn chi_time(&self, t: f64) -> SymmetricTensor3 {
        let mut acc = Matrix3::zeros();
        for j in 0..self.omega.len() - 1 {
            let (a, b) = (self.omega[j], self.omega[j + 1]);
            let h = b - a;
            let m = 0.5 * (a + b);
            let x = 0.5 * h * t;
            let (sinc, g) = sinc_and_g(x);
            let (sm, cm) = (m * t).sin_cos();
            let mean = (self.samples[j] + self.samples[j + 1]) * 0.5;
            let diff = self.samples[j + 1] - self.samples[j];
            acc += (mean * (sm * sinc) + diff * (0.5 * cm * g)) * h;
        }
        acc * (2.0 / PI)
    }

    /// `(2/π) ∫ Im χ(ω) ω/(s²+ω²) dω`, exact for the linear interpolant.
    fn chi_laplace(&self, s: Complex64) -> ComplexTensor3 {
        let i = Complex64::i();
        let is = i * s;
        // Antiderivatives of ω/(s²+ω²) and (ω-a)ω/(s²+ω²) in terms of
        // logs that stay off their branch cut for Re s > 0.
        let la = |w: f64| ((w + is).ln(), (w - is).ln());
        let mut acc = ComplexTensor3::zeros();
        for j in 0..self.omega.len() - 1 {
            let (a, b) = (self.omega[j], self.omega[j + 1]);
            let (pa, ma) = la(a);
            let (pb, mb) = la(b);
            let i1 = 0.5 * ((pb - pa) + (mb - ma));
            let i2 = (b - a) - s / (2.0 * i) * ((mb - ma) - (pb - pa));
            // ∫ (ω - a) ω/(s²+ω²) = I2 - a·I1
            let slope = (self.samples[j + 1] - self.samples[j]) / (b - a);
            let c0 = to_complex(&self.samples[j]);
            let c1 = to_complex(&slope);
            acc += c0 * i1 + c1 * (i2 - i1 * a);
        }
        acc * Complex64::new(2.0 / PI, 0.0)
    }
}

/// `sin x / x` and `(sin x − x cos x)/x²`, with series near zero.
fn sinc_and_g(x: f64) -> (f64, f64) {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        (1.0 - x2 / 6.0 + x2 * x2 / 120.0, x * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0))
    } else {
        let (s, c) = x.sin_cos();
        (s / x, (s - x * c) / (x * x))
    }
}

/// A linear, causal, passive medium.
#[derive(Debug, Clone, PartialEq)]
pub enum SusceptibilityModel {
    /// Memoryless friction `χ(t) = γ Θ(t)`.
    Ohmic { gamma: SymmetricTensor3 },
    Lorentz(LorentzMedium),
    Tabulated(TabulatedMedium),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Ohmic,
    Lorentz,
    Tabulated,
}

/// Bath coupling at one frequency: `f fᵀ = (2ω/π) Im χ(ω)`, `f` symmetric PSD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingTensor {
    pub omega: f64,
    pub f: SymmetricTensor3,
}

const PSD_TABLE_SLACK: f64 = 1e-12;
const PASSIVE_SLACK: f64 = 1e-9;

impl SusceptibilityModel {
    pub fn ohmic_isotropic(gamma: f64) -> Result<Self> {
        Self::ohmic(Matrix3::identity() * gamma)
    }

    pub fn ohmic(gamma: SymmetricTensor3) -> Result<Self> {
        if gamma.iter().any(|x| !x.is_finite()) || (gamma - gamma.transpose()).norm() > 1e-12 * gamma.norm() {
            return Err(Error::Validation("ohmic gamma must be a finite symmetric tensor".into()));
        }
        let (vals, _) = jacobi_eigen(&gamma);
        if vals.min() < -PASSIVE_SLACK * gamma.trace().abs() {
            return Err(Error::NonPassive {
                omega: 0.0,
                eigenvalue: vals.min(),
            });
        }
        Ok(SusceptibilityModel::Ohmic { gamma })
    }

    pub fn lorentz_isotropic(beta: f64, nu: f64, gamma: f64) -> Result<Self> {
        let a = LorentzAxis::new(beta, nu, gamma);
        Self::lorentz([a, a, a], Matrix3::identity())
    }

    pub fn lorentz(axes: [LorentzAxis; 3], rotation: Matrix3<f64>) -> Result<Self> {
        for a in &axes {
            a.validate()?;
        }
        if rotation.iter().any(|x| !x.is_finite())
            || (rotation.transpose() * rotation - Matrix3::identity()).norm() > 1e-10
        {
            return Err(Error::Validation("lorentz rotation must be orthogonal".into()));
        }
        Ok(SusceptibilityModel::Lorentz(LorentzMedium { axes, rotation }))
    }

    /// Tabulated Im χ samples; negative eigenvalues within `1e-12·trace` are
    /// clipped to zero.
    pub fn tabulated(omega: Vec<f64>, samples: Vec<SymmetricTensor3>) -> Result<Self> {
        if omega.len() < 2 || omega.len() != samples.len() {
            return Err(Error::Validation(
                "tabulated model needs at least two rows and one sample per frequency".into(),
            ));
        }
        if omega[0] <= 0.0 || omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::Validation("tabulated frequencies must be positive and finite".into()));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("tabulated frequencies must be strictly increasing".into()));
        }
        let mut clipped = Vec::with_capacity(samples.len());
        for (w, s) in omega.iter().zip(&samples) {
            if s.iter().any(|x| !x.is_finite()) || (s - s.transpose()).norm() > 1e-12 * s.norm() {
                return Err(Error::Validation(format!("Im chi sample at omega={w} is not symmetric")));
            }
            let (vals, q) = jacobi_eigen(s);
            let tol = PSD_TABLE_SLACK * s.trace().abs();
            if vals.min() < -tol {
                return Err(Error::NonPassive {
                    omega: *w,
                    eigenvalue: vals.min(),
                });
            }
            let m = q * Matrix3::from_diagonal(&vals.map(|l| l.max(0.0))) * q.transpose();
            clipped.push((m + m.transpose()) * 0.5);
        }
        Ok(SusceptibilityModel::Tabulated(TabulatedMedium {
            omega,
            samples: clipped,
        }))
    }

    /// Load a table with header `omega,ImChi_xx,ImChi_xy,ImChi_xz,ImChi_yy,ImChi_yz,ImChi_zz`.
    /// Lines starting with `#` are ignored.
    pub fn tabulated_from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::tabulated_from_str(&text)
    }

    pub fn tabulated_from_str(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
            .collect::<Vec<_>>()
            .join("\n");
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Validation(format!("table header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let expected = ["omega", "ImChi_xx", "ImChi_xy", "ImChi_xz", "ImChi_yy", "ImChi_yz", "ImChi_zz"];
        if header != expected {
            return Err(Error::Validation(format!(
                "table header must be `{}`",
                expected.join(",")
            )));
        }
        let mut omega = Vec::new();
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Validation(format!("table row {}: {e}", i + 1)))?;
            let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| Error::Validation(format!("table row {}: {e}", i + 1)))?;
            if vals.len() != 7 {
                return Err(Error::Validation(format!("table row {} must have 7 columns", i + 1)));
            }
            omega.push(vals[0]);
            samples.push(from_upper([vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]]));
        }
        Self::tabulated(omega, samples)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            SusceptibilityModel::Ohmic { .. } => ModelKind::Ohmic,
            SusceptibilityModel::Lorentz(_) => ModelKind::Lorentz,
            SusceptibilityModel::Tabulated(_) => ModelKind::Tabulated,
        }
    }

    /// Frequencies where the response has structure; used as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = match self {
            SusceptibilityModel::Ohmic { .. } => Vec::new(),
            SusceptibilityModel::Lorentz(m) => m.axes.iter().flat_map(|a| a.breakpoints()).collect(),
            SusceptibilityModel::Tabulated(t) => t.omega.clone(),
        };
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Largest frequency scale of the response (resonance or table edge); zero for Ohmic.
    pub fn max_frequency(&self) -> f64 {
        match self {
            SusceptibilityModel::Ohmic { .. } => 0.0,
            SusceptibilityModel::Lorentz(m) => m.axes.iter().map(|a| a.nu).fold(0.0, f64::max),
            SusceptibilityModel::Tabulated(t) => *t.omega.last().unwrap(),
        }
    }

    /// Im χ(ω) for ω > 0.
    pub fn im_chi(&self, omega: f64) -> Result<SymmetricTensor3> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!("im_chi needs omega > 0, got {omega}")));
        }
        Ok(self.im_chi_unchecked(omega))
    }

    fn im_chi_unchecked(&self, omega: f64) -> SymmetricTensor3 {
        match self {
            SusceptibilityModel::Ohmic { gamma } => gamma / omega,
            SusceptibilityModel::Lorentz(m) => {
                let a = &m.axes;
                m.assemble([a[0].im_chi(omega), a[1].im_chi(omega), a[2].im_chi(omega)])
            }
            SusceptibilityModel::Tabulated(t) => t.interp(omega),
        }
    }

    /// Im χ on the odd extension to all real ω.
    pub fn im_chi_odd(&self, omega: f64) -> Result<SymmetricTensor3> {
        if omega == 0.0 {
            return match self {
                SusceptibilityModel::Ohmic { .. } => Err(Error::Domain("ohmic Im chi is singular at omega = 0".into())),
                _ => Ok(Matrix3::zeros()),
            };
        }
        if omega < 0.0 {
            Ok(-self.im_chi(-omega)?)
        } else {
            self.im_chi(omega)
        }
    }

    /// χ(t); zero for t ≤ 0.
    pub fn chi_time(&self, t: f64) -> SymmetricTensor3 {
        if t <= 0.0 {
            return Matrix3::zeros();
        }
        match self {
            SusceptibilityModel::Ohmic { gamma } => *gamma,
            SusceptibilityModel::Lorentz(m) => {
                let a = &m.axes;
                m.assemble([a[0].chi_time(t), a[1].chi_time(t), a[2].chi_time(t)])
            }
            SusceptibilityModel::Tabulated(tab) => tab.chi_time(t),
        }
    }

    /// Complex frequency response χ(ω) for ω > 0.
    pub fn chi_frequency(&self, omega: f64) -> Result<ComplexTensor3> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!("chi_frequency needs omega > 0, got {omega}")));
        }
        match self {
            SusceptibilityModel::Ohmic { gamma } => Ok(to_complex(gamma) * Complex64::new(0.0, 1.0 / omega)),
            SusceptibilityModel::Lorentz(m) => {
                let a = &m.axes;
                Ok(m.assemble_c([
                    a[0].chi_frequency(omega),
                    a[1].chi_frequency(omega),
                    a[2].chi_frequency(omega),
                ]))
            }
            SusceptibilityModel::Tabulated(_) => {
                let re = self.re_chi_kk(omega)?;
                let im = self.im_chi_unchecked(omega);
                Ok(re.zip_map(&im, Complex64::new))
            }
        }
    }

    /// Laplace transform χ̃(s) for Re s > 0.
    pub fn chi_laplace(&self, s: Complex64) -> Result<ComplexTensor3> {
        if !(s.re > 0.0) || !s.im.is_finite() || !s.re.is_finite() {
            return Err(Error::Domain(format!("chi_laplace needs Re s > 0, got {s}")));
        }
        Ok(self.chi_laplace_continued(s))
    }

    /// Analytic continuation of `chi_laplace` into Re s ≤ 0, away from its
    /// singularities (poles at 0 and −γ/2 ± iν, cuts on the imaginary axis).
    pub(crate) fn chi_laplace_continued(&self, s: Complex64) -> ComplexTensor3 {
        match self {
            SusceptibilityModel::Ohmic { gamma } => to_complex(gamma) / s,
            SusceptibilityModel::Lorentz(m) => {
                let a = &m.axes;
                m.assemble_c([a[0].chi_laplace(s), a[1].chi_laplace(s), a[2].chi_laplace(s)])
            }
            SusceptibilityModel::Tabulated(t) => t.chi_laplace(s),
        }
    }

    /// Symmetric PSD coupling tensor at ω > 0.
    pub fn coupling_tensor(&self, omega: f64) -> Result<CouplingTensor> {
        let s = self.im_chi(omega)? * (2.0 * omega / PI);
        let f = matrix_sqrt_psd(&s).map_err(|e| match e {
            Error::NotPsd { eigenvalue } => Error::NonPassive { omega, eigenvalue },
            other => other,
        })?;
        Ok(CouplingTensor { omega, f })
    }

    /// Re χ(ω) from Im χ by the Kramers–Kronig principal value.
    pub fn re_chi_kk(&self, omega: f64) -> Result<SymmetricTensor3> {
        self.re_chi_kk_with(omega, &QuadratureSpec::with_tolerances(1e-14, 1e-11))
    }

    pub fn re_chi_kk_with(&self, omega: f64, spec: &QuadratureSpec) -> Result<SymmetricTensor3> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!("re_chi_kk needs omega > 0, got {omega}")));
        }
        match self {
            SusceptibilityModel::Ohmic { .. } => Err(Error::Unsupported(
                "Kramers-Kronig transform of an ohmic medium diverges (1/omega tail)".into(),
            )),
            SusceptibilityModel::Lorentz(m) => {
                let mut d = [0.0; 3];
                for (k, a) in m.axes.iter().enumerate() {
                    if a.beta == 0.0 || a.gamma == 0.0 {
                        // Im χ vanishes away from the resonance; the delta
                        // contributes the undamped response.
                        d[k] = if a.beta == 0.0 { 0.0 } else { a.chi_frequency(omega).re };
                        continue;
                    }
                    let mut br = a.breakpoints();
                    br.push(omega);
                    d[k] = pv_integral_breaks(
                        |x: f64| kk_kernel(x, omega) * a.im_chi(x),
                        omega,
                        0.0,
                        f64::INFINITY,
                        &br,
                        spec,
                    )?;
                }
                Ok(m.assemble(d))
            }
            SusceptibilityModel::Tabulated(t) => {
                let upper = t.omega.last().unwrap().max(2.0 * omega);
                let v: Matrix3<f64> = pv_integral_breaks(
                    |x: f64| t.interp(x) * kk_kernel(x, omega),
                    omega,
                    0.0,
                    upper,
                    &t.omega,
                    spec,
                )?;
                Ok((v + v.transpose()) * 0.5)
            }
        }
    }

    /// χ(t) rebuilt from the coupling tensor, `∫₀^∞ (sin ωt/ω) f fᵀ dω`.
    pub fn chi_time_from_coupling(&self, t: f64, spec: &QuadratureSpec) -> Result<SymmetricTensor3> {
        if t <= 0.0 {
            return Ok(Matrix3::zeros());
        }
        let spec = spec.clone().with_hint(t);
        let integrand = |w: f64| -> Matrix3<f64> {
            if w == 0.0 {
                return Matrix3::zeros();
            }
            match self.coupling_tensor(w) {
                Ok(c) => c.f * c.f.transpose() * ((w * t).sin() / w),
                Err(_) => Matrix3::from_element(f64::NAN),
            }
        };
        let v = match self {
            SusceptibilityModel::Tabulated(tab) => {
                let mut pts = vec![0.0];
                pts.extend_from_slice(&tab.omega);
                integrate_breaks(integrand, &pts, &spec)?.value
            }
            _ => integrate_to_infinity(integrand, &self.breakpoints(), &spec)?.value,
        };
        Ok(v)
    }
}

/// `(2/π) x / ((x − ω)(x + ω))`, the odd-extension Kramers–Kronig kernel.
fn kk_kernel(x: f64, omega: f64) -> f64 {
    2.0 / PI * x / ((x - omega) * (x + omega))
}

impl CouplingTensor {
    /// `f fᵀ`, which equals `(2ω/π) Im χ(ω)`.
    pub fn spectral_weight(&self) -> SymmetricTensor3 {
        self.f * self.f.transpose()
    }
}
