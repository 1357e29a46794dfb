//! Thermal noise of the bath: correlation functions, spectra and sample paths.
//!
//! The force spectrum is `ζ(ω) = ħω² coth(ħω/2k_BT) Im χ(ω)` and the
//! correlation `ζ(τ) = (1/π) ∫₀^∞ ζ(ω) cos(ωτ) dω`. In the classical limit
//! `ħω coth(ħω/2k_BT) → 2k_BT`, so an Ohmic bath has the flat spectrum `2k_BTγ`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::medium::SusceptibilityModel;
use crate::numerics::{integrate_breaks, integrate_regulated, integrate_to_infinity, matrix_sqrt_psd, QuadratureSpec};
use crate::tensor::{SymmetricTensor3, Vec3};
use crate::units::UnitSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathMode {
    Quantum,
    Classical,
}

/// Temperature and statistics of the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathState {
    pub temperature: f64,
    pub mode: BathMode,
    pub hbar: f64,
    pub kb: f64,
}

impl BathState {
    pub fn new(temperature: f64, mode: BathMode, units: &UnitSystem) -> Result<Self> {
        let b = BathState {
            temperature,
            mode,
            hbar: units.hbar,
            kb: units.kb,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn classical(temperature: f64) -> Self {
        BathState {
            temperature,
            mode: BathMode::Classical,
            hbar: 1.0,
            kb: 1.0,
        }
    }

    pub fn quantum(temperature: f64) -> Self {
        BathState {
            temperature,
            mode: BathMode::Quantum,
            hbar: 1.0,
            kb: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Validation(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0 && self.kb.is_finite() && self.kb > 0.0) {
            return Err(Error::Validation("hbar and kB must be positive".into()));
        }
        Ok(())
    }

    pub fn kt(&self) -> f64 {
        self.kb * self.temperature
    }

    /// `ħω coth(ħω/2k_BT)`, or its classical limit `2k_BT`.
    pub fn energy_factor(&self, omega: f64) -> f64 {
        match self.mode {
            BathMode::Classical => 2.0 * self.kt(),
            BathMode::Quantum => {
                let e = self.hbar * omega;
                if self.temperature == 0.0 {
                    e.abs()
                } else {
                    let x = e / (2.0 * self.kt());
                    if x.abs() < 1e-8 {
                        2.0 * self.kt()
                    } else {
                        e / x.tanh()
                    }
                }
            }
        }
    }

    /// Mean thermal occupation `1/(e^{ħω/k_BT} − 1)`; zero at `T = 0`.
    pub fn occupation(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            0.0
        } else {
            1.0 / (self.hbar * omega / self.kt()).exp_m1()
        }
    }
}

/// Force noise power spectrum `ζ(ω)` for ω > 0.
pub fn noise_spectrum(model: &SusceptibilityModel, bath: &BathState, omega: f64) -> Result<SymmetricTensor3> {
    bath.validate()?;
    let im = model.im_chi(omega)?;
    Ok(im * (omega * bath.energy_factor(omega)))
}

/// `lim_{ω→0} ζ(ω)`, finite for every supported model.
pub fn noise_spectrum_at_zero(model: &SusceptibilityModel, bath: &BathState) -> SymmetricTensor3 {
    match model {
        SusceptibilityModel::Ohmic { gamma } => gamma * (2.0 * bath.kt()),
        _ => Matrix3::zeros(),
    }
}

/// Force correlation `ζ(τ)` with default tolerances and no cutoff.
pub fn noise_correlation(model: &SusceptibilityModel, bath: &BathState, tau: f64) -> Result<SymmetricTensor3> {
    noise_correlation_with(model, bath, tau, &QuadratureSpec::with_tolerances(1e-14, 1e-10))
}

/// Force correlation `ζ(τ)`. With `spec.cutoff = Some(Λ)` the spectrum is
/// multiplied by [`regulator`]; without it, ultraviolet-divergent cases are errors.
pub fn noise_correlation_with(
    model: &SusceptibilityModel,
    bath: &BathState,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<SymmetricTensor3> {
    bath.validate()?;
    spec.validate()?;
    if !tau.is_finite() {
        return Err(Error::Domain("tau must be finite".into()));
    }
    let tau = tau.abs();
    if bath.mode == BathMode::Classical && bath.temperature == 0.0 {
        return Ok(Matrix3::zeros());
    }
    match model {
        SusceptibilityModel::Ohmic { gamma } => ohmic_correlation(gamma, bath, tau, spec),
        SusceptibilityModel::Lorentz(m) if bath.mode == BathMode::Classical && spec.cutoff.is_none() => {
            // (2k_BT/π)∫ ω Im χ cos ωτ dω = k_BT χ̇(τ)
            let d: Vec<f64> = m.axes.iter().map(|a| a.chi_time_derivative(tau)).collect();
            let r = &m.rotation;
            let v = r * Matrix3::from_diagonal(&Vec3::new(d[0], d[1], d[2])) * r.transpose();
            Ok((v + v.transpose()) * (0.5 * bath.kt()))
        }
        _ => numeric_correlation(model, bath, tau, spec),
    }
}

/// Smooth ultraviolet regulator `e^{−x}(1 + x + x²/2)`, `x = ω/Λ`.
///
/// It equals `1 − x³/6 + O(x⁴)`, so for `τ ≠ 0` the regulated correlation
/// differs from the unregulated one by `O((Λτ)^{−4})` rather than `O((Λτ)^{−2})`.
pub fn regulator(omega: f64, cutoff: f64) -> f64 {
    let x = omega / cutoff;
    (-x).exp() * (1.0 + x + 0.5 * x * x)
}

fn ohmic_correlation(
    gamma: &SymmetricTensor3,
    bath: &BathState,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<SymmetricTensor3> {
    let kt = bath.kt();
    let hbar = bath.hbar;
    match (bath.mode, spec.cutoff) {
        (BathMode::Classical, None) => {
            if tau == 0.0 {
                Err(Error::Divergence(
                    "classical ohmic noise is white: zeta(0) is infinite; set a cutoff".into(),
                ))
            } else {
                Ok(Matrix3::zeros())
            }
        }
        (BathMode::Classical, Some(lam)) => {
            // (2k_BTγ/π) ∫ R(ω) cos ωτ dω in closed form, z = 1/Λ − iτ.
            let a = 1.0 / lam;
            let z = Complex64::new(a, -tau);
            let v = (1.0 / z + a / (z * z) + a * a / (z * z * z)).re;
            Ok(gamma * (2.0 * kt / PI * v))
        }
        (BathMode::Quantum, None) => {
            if tau == 0.0 {
                return Err(Error::Divergence(
                    "quantum ohmic zeta(0) diverges in the ultraviolet; set a cutoff".into(),
                ));
            }
            let v = if bath.temperature == 0.0 {
                -hbar / (PI * tau * tau)
            } else {
                let x = PI * kt * tau / hbar;
                -kt * kt * PI / hbar / x.sinh().powi(2)
            };
            Ok(gamma * v)
        }
        (BathMode::Quantum, Some(lam)) => {
            // Vacuum part (ħγ/π) ∫ ω R(ω) cos ωτ dω in closed form, thermal part by quadrature.
            let a = 1.0 / lam;
            let z = Complex64::new(a, -tau);
            let z2 = z * z;
            let vac = hbar / PI * (1.0 / z2 + 2.0 * a / (z2 * z) + 3.0 * a * a / (z2 * z2)).re;
            let thermal = if bath.temperature == 0.0 {
                0.0
            } else {
                let scale = kt / hbar;
                let f = |w: f64| {
                    let occ = if w == 0.0 { kt / hbar } else { w * bath.occupation(w) };
                    2.0 * hbar / PI * occ * (w * tau).cos() * regulator(w, lam)
                };
                let mut s = spec.clone();
                s.oscillation_frequency_hint = if tau > 0.0 { Some(tau) } else { None };
                let breaks: Vec<f64> = (1..=4).map(|k| k as f64 * 4.0 * scale).collect();
                integrate_to_infinity(f, &breaks, &s)?.value
            };
            Ok(gamma * (vac + thermal))
        }
    }
}

fn numeric_correlation(
    model: &SusceptibilityModel,
    bath: &BathState,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<SymmetricTensor3> {
    let cutoff = spec.cutoff;
    let reg = move |w: f64| cutoff.map_or(1.0, |l| regulator(w, l));
    let mut breaks = model.breakpoints();
    if bath.temperature > 0.0 && bath.mode == BathMode::Quantum {
        let s = bath.kt() / bath.hbar;
        breaks.extend((1..=4).map(|k| k as f64 * 4.0 * s));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let spectral = |w: f64| -> SymmetricTensor3 {
        if w <= 0.0 {
            return Matrix3::zeros();
        }
        match model.im_chi(w) {
            Ok(im) => im * (w * bath.energy_factor(w) / PI * reg(w)),
            Err(_) => Matrix3::from_element(f64::NAN),
        }
    };

    if let SusceptibilityModel::Tabulated(t) = model {
        let top = *t.omega().last().unwrap();
        let mut pts = vec![0.0];
        pts.extend(t.omega().iter().copied());
        if tau > 0.0 {
            let half = PI / tau;
            let n = ((top / half) as usize).min(100_000);
            pts.extend((1..=n).map(|k| k as f64 * half));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let v = integrate_breaks(|w: f64| spectral(w) * (w * tau).cos(), &pts, spec)?.value;
        return Ok((v + v.transpose()) * 0.5);
    }

    if let Some(lam) = cutoff {
        let hint = if tau > 0.0 { Some(tau) } else { None };
        let v = integrate_regulated(|w: f64| spectral(w) * (w * tau).cos(), &breaks, hint, lam, spec)?.value;
        return Ok((v + v.transpose()) * 0.5);
    }

    // Ultraviolet probe: the spectral weight must decay, and faster than 1/ω at τ = 0.
    let w1 = 1e3 * model.max_frequency().max(bath.kt() / bath.hbar).max(1.0);
    let w2 = 10.0 * w1;
    let (g1, g2) = (spectral(w1).norm(), spectral(w2).norm());
    let divergent = if tau == 0.0 {
        g1 > 0.0 && w2 * g2 >= 0.5 * w1 * g1
    } else {
        g1 > 0.0 && g2 >= 0.5 * g1
    };
    if divergent {
        return Err(Error::Divergence(format!(
            "noise correlation at tau = {tau} diverges in the ultraviolet; set a cutoff"
        )));
    }

    let mut s = spec.clone();
    s.oscillation_frequency_hint = if tau > 0.0 { Some(tau) } else { None };
    let v = integrate_to_infinity(|w: f64| spectral(w) * (w * tau).cos(), &breaks, &s)?.value;
    Ok((v + v.transpose()) * 0.5)
}

/// Classical Gaussian force paths sampled at `t_n = n·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePathEnsemble {
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Row-major `[path][step]` force samples.
    pub paths: Vec<[f64; 3]>,
}

impl NoisePathEnsemble {
    pub fn path(&self, i: usize) -> &[[f64; 3]] {
        &self.paths[i * self.n_steps..(i + 1) * self.n_steps]
    }
}

/// Generator of independent stationary Gaussian force paths with spectrum `ζ(ω)`.
///
/// Path `i` depends only on `(seed, i)`.
pub struct NoiseSynthesizer {
    dt: f64,
    n_steps: usize,
    seed: u64,
    kind: SynthKind,
}

enum SynthKind {
    /// Flat spectrum: iid samples with covariance `S/dt`.
    White(SymmetricTensor3),
    Spectral {
        len: usize,
        amplitudes: Vec<SymmetricTensor3>,
        fft: Arc<dyn Fft<f64>>,
    },
}

impl std::fmt::Debug for NoiseSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynthesizer")
            .field("dt", &self.dt)
            .field("n_steps", &self.n_steps)
            .field("seed", &self.seed)
            .finish()
    }
}

impl NoiseSynthesizer {
    pub fn new(model: &SusceptibilityModel, bath: &BathState, dt: f64, n_steps: usize, seed: u64) -> Result<Self> {
        bath.validate()?;
        if bath.mode == BathMode::Quantum {
            return Err(Error::Unsupported(
                "quantum noise is an operator correlation and has no classical sample paths".into(),
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) || n_steps == 0 {
            return Err(Error::Domain("noise paths need dt > 0 and n_steps > 0".into()));
        }
        let kind = match model {
            SusceptibilityModel::Ohmic { gamma } => {
                let cov = gamma * (2.0 * bath.kt() / dt);
                SynthKind::White(matrix_sqrt_psd(&cov)?)
            }
            _ => {
                let len = (2 * n_steps).next_power_of_two();
                let dw = 2.0 * PI / (len as f64 * dt);
                let norm = 1.0 / (len as f64 * dt);
                let mut amplitudes = Vec::with_capacity(len);
                for j in 0..len {
                    let k = if j <= len / 2 { j } else { len - j };
                    let s = if k == 0 {
                        noise_spectrum_at_zero(model, bath)
                    } else {
                        noise_spectrum(model, bath, k as f64 * dw)?
                    };
                    amplitudes.push(matrix_sqrt_psd(&(s * norm))?);
                }
                let fft = FftPlanner::new().plan_fft_inverse(len);
                SynthKind::Spectral { len, amplitudes, fft }
            }
        };
        Ok(NoiseSynthesizer {
            dt,
            n_steps,
            seed,
            kind,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn rng(&self, path_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path_index);
        rng
    }

    /// Force samples of path `path_index`.
    pub fn path(&self, path_index: u64) -> Vec<[f64; 3]> {
        let mut rng = self.rng(path_index);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        match &self.kind {
            SynthKind::White(a) => (0..self.n_steps)
                .map(|_| {
                    let z = Vec3::new(normal(), normal(), normal());
                    let x = a * z;
                    [x[0], x[1], x[2]]
                })
                .collect(),
            SynthKind::Spectral { len, amplitudes, fft } => {
                let mut comps = vec![vec![Complex64::new(0.0, 0.0); *len]; 3];
                for (j, a) in amplitudes.iter().enumerate() {
                    let zr = Vec3::new(normal(), normal(), normal());
                    let zi = Vec3::new(normal(), normal(), normal());
                    let (xr, xi) = (a * zr, a * zi);
                    for c in 0..3 {
                        comps[c][j] = Complex64::new(xr[c], xi[c]);
                    }
                }
                for c in comps.iter_mut() {
                    fft.process(c);
                }
                (0..self.n_steps)
                    .map(|n| [comps[0][n].re, comps[1][n].re, comps[2][n].re])
                    .collect()
            }
        }
    }
}

/// Generate `n_paths` classical noise paths; parallel over paths, independent
/// of scheduling.
pub fn sample_noise_paths(
    model: &SusceptibilityModel,
    bath: &BathState,
    dt: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<NoisePathEnsemble> {
    let synth = NoiseSynthesizer::new(model, bath, dt, n_steps, seed)?;
    let chunks: Vec<Vec<[f64; 3]>> = (0..n_paths as u64).into_par_iter().map(|i| synth.path(i)).collect();
    Ok(NoisePathEnsemble {
        dt,
        n_steps,
        n_paths,
        seed,
        paths: chunks.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::LorentzAxis;
    use approx::assert_relative_eq;

    fn lorentz() -> SusceptibilityModel {
        SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn ohmic_classical_spectrum_is_flat() {
        let m = SusceptibilityModel::ohmic_isotropic(0.7).unwrap();
        let b = BathState::classical(1.3);
        for &w in &[0.01, 1.0, 50.0] {
            let z = noise_spectrum(&m, &b, w).unwrap();
            assert_relative_eq!(z / 0.7, Matrix3::identity() * 2.0 * 1.3, max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_temperature_quantum_spectrum() {
        let m = lorentz();
        let b = BathState::quantum(0.0);
        let w = 0.8;
        let z = noise_spectrum(&m, &b, w).unwrap();
        assert_relative_eq!(z, m.im_chi(w).unwrap() * (w * w), max_relative = 1e-14);
    }

    #[test]
    fn classical_zero_temperature_is_silent() {
        let b = BathState::classical(0.0);
        for m in [lorentz(), SusceptibilityModel::ohmic_isotropic(1.0).unwrap()] {
            assert_eq!(noise_correlation(&m, &b, 0.0).unwrap(), Matrix3::zeros());
        }
    }

    #[test]
    fn ohmic_quantum_closed_form() {
        let m = SusceptibilityModel::ohmic_isotropic(2.0).unwrap();
        let b = BathState::quantum(0.5);
        let tau = 0.7;
        let x = PI * 0.5 * tau;
        // γ k_BT d/dτ coth(π k_BT τ/ħ)
        let expect = 2.0 * 0.5 * (-(PI * 0.5)) / x.sinh().powi(2);
        assert_relative_eq!(noise_correlation(&m, &b, tau).unwrap()[(1, 1)], expect, max_relative = 1e-14);
        assert!(matches!(noise_correlation(&m, &b, 0.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn ohmic_quantum_regulated_matches_closed_form() {
        let m = SusceptibilityModel::ohmic_isotropic(1.0).unwrap();
        let b = BathState::quantum(1.0);
        let spec = QuadratureSpec::with_tolerances(1e-15, 1e-13).with_cutoff(1e3 * PI);
        for &u in &[0.1, 1.0, 5.0, 10.0] {
            let tau = u / PI;
            let v = noise_correlation_with(&m, &b, tau, &spec).unwrap()[(0, 0)];
            let e = noise_correlation(&m, &b, tau).unwrap()[(0, 0)];
            assert_relative_eq!(v, e, max_relative = 1e-3);
        }
    }

    #[test]
    fn regulated_equal_time_values() {
        let m = SusceptibilityModel::ohmic_isotropic(1.0).unwrap();
        let lam = 20.0;
        let spec = QuadratureSpec::default().with_cutoff(lam);
        let q = noise_correlation_with(&m, &BathState::quantum(0.0), 0.0, &spec).unwrap()[(0, 0)];
        let vac = integrate_to_infinity(|w: f64| w * regulator(w, lam) / PI, &[lam], &spec).unwrap().value;
        assert_relative_eq!(q, vac, max_relative = 1e-10);
        assert_relative_eq!(q, 6.0 * lam * lam / PI, max_relative = 1e-12);
        let c = noise_correlation_with(&m, &BathState::classical(2.0), 0.0, &spec).unwrap()[(0, 0)];
        assert_relative_eq!(c, 2.0 * 2.0 / PI * 3.0 * lam, max_relative = 1e-12);
    }

    #[test]
    fn lorentz_classical_equal_time() {
        let axes = [
            LorentzAxis::new(1.0, 1.0, 0.3),
            LorentzAxis::new(2.0, 0.5, 0.2),
            LorentzAxis::new(0.5, 2.0, 1.0),
        ];
        let m = SusceptibilityModel::lorentz(axes, Matrix3::identity()).unwrap();
        let b = BathState::classical(0.8);
        let z = noise_correlation(&m, &b, 0.0).unwrap();
        // (2k_BT/π)∫ ω Im χ dω by direct quadrature, per axis.
        let spec = QuadratureSpec::with_tolerances(1e-13, 1e-11);
        for (k, a) in axes.iter().enumerate() {
            let q = integrate_to_infinity(|w: f64| 2.0 * 0.8 / PI * w * a.im_chi(w), &[a.nu], &spec)
                .unwrap()
                .value;
            assert_relative_eq!(z[(k, k)], q, max_relative = 1e-8);
            assert_relative_eq!(z[(k, k)], 0.8 * a.beta, max_relative = 1e-12);
        }
    }

    #[test]
    fn lorentz_classical_closed_form_matches_quadrature() {
        let m = lorentz();
        let b = BathState::classical(1.0);
        let spec = QuadratureSpec::with_tolerances(1e-14, 1e-10);
        let SusceptibilityModel::Lorentz(lm) = &m else { unreachable!() };
        let a = lm.axes[0];
        for &tau in &[0.3, 2.0, 7.0] {
            let z = noise_correlation(&m, &b, tau).unwrap()[(0, 0)];
            let q = integrate_to_infinity(
                |w: f64| 2.0 / PI * w * a.im_chi(w) * (w * tau).cos(),
                &[a.nu, 2.0 * a.nu],
                &spec.clone().with_hint(tau),
            )
            .unwrap()
            .value;
            assert!((z - q).abs() < 1e-8, "tau={tau}: {z} vs {q}");
        }
    }

    #[test]
    fn lorentz_quantum_equal_time_diverges_without_cutoff() {
        let m = lorentz();
        let b = BathState::quantum(1.0);
        assert!(matches!(noise_correlation(&m, &b, 0.0), Err(Error::Divergence(_))));
        let v = noise_correlation(&m, &b, 1.0).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
        let r = noise_correlation_with(&m, &b, 0.0, &QuadratureSpec::with_tolerances(1e-12, 1e-9).with_cutoff(50.0));
        assert!(r.unwrap()[(0, 0)] > 0.0);
    }

    #[test]
    fn cosine_transform_recovers_spectrum() {
        // ζ(ω) = 2∫₀^∞ ζ(τ) cos ωτ dτ for the classical Lorentz bath.
        let m = lorentz();
        let b = BathState::classical(1.0);
        let spec = QuadratureSpec::with_tolerances(1e-12, 1e-9);
        for &w in &[0.5, 1.0, 2.0] {
            let v = integrate_to_infinity(
                |t: f64| 2.0 * noise_correlation(&m, &b, t).unwrap()[(0, 0)] * (w * t).cos(),
                &[1.0, 5.0],
                &spec.clone().with_hint(1.0),
            )
            .unwrap()
            .value;
            let s = noise_spectrum(&m, &b, w).unwrap()[(0, 0)];
            assert!((v - s).abs() < 1e-3 * s.abs().max(1e-3), "w={w}: {v} vs {s}");
        }
    }

    #[test]
    fn tabulated_correlation_is_finite() {
        let a = LorentzAxis::new(1.0, 1.0, 0.3);
        let omega: Vec<f64> = (1..=200).map(|k| k as f64 * 0.05).collect();
        let samples = omega.iter().map(|&w| Matrix3::identity() * a.im_chi(w)).collect();
        let m = SusceptibilityModel::tabulated(omega, samples).unwrap();
        let b = BathState::quantum(0.5);
        let z0 = noise_correlation(&m, &b, 0.0).unwrap();
        let z1 = noise_correlation(&m, &b, 2.0).unwrap();
        assert!(z0[(0, 0)] > 0.0 && z0[(0, 0)] > z1[(0, 0)].abs());
    }

    #[test]
    fn occupation_limits() {
        let b = BathState::quantum(0.0);
        assert_eq!(b.occupation(1.0), 0.0);
        let b = BathState::quantum(2.0);
        assert_relative_eq!(b.occupation(1.0), 1.0 / (0.5f64.exp() - 1.0), max_relative = 1e-14);
    }

    #[test]
    fn quantum_paths_unsupported() {
        let r = sample_noise_paths(&lorentz(), &BathState::quantum(1.0), 0.1, 8, 1, 0);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn deterministic_paths() {
        let b = BathState::classical(1.0);
        let a = sample_noise_paths(&lorentz(), &b, 0.05, 64, 4, 7).unwrap();
        let c = sample_noise_paths(&lorentz(), &b, 0.05, 64, 4, 7).unwrap();
        assert_eq!(a, c);
        let d = sample_noise_paths(&lorentz(), &b, 0.05, 64, 4, 8).unwrap();
        assert_ne!(a.paths, d.paths);
    }

    #[test]
    fn ohmic_white_variance() {
        let m = SusceptibilityModel::ohmic_isotropic(1.5).unwrap();
        let b = BathState::classical(0.5);
        let dt = 0.01;
        let e = sample_noise_paths(&m, &b, dt, 200, 200, 1).unwrap();
        let n = e.paths.len() as f64;
        let var = e.paths.iter().map(|p| p[0] * p[0]).sum::<f64>() / n;
        let mean = e.paths.iter().map(|p| p[1]).sum::<f64>() / n;
        let target = 2.0 * 0.5 * 1.5 / dt;
        assert!((var / target - 1.0).abs() < 0.05);
        assert!(mean.abs() < 5.0 * target.sqrt() / n.sqrt());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn fdt_identity(beta in 0.1f64..3.0, nu in 0.2f64..3.0, g in 0.01f64..1.0,
                            t in 0.0f64..5.0, w in 0.01f64..10.0) {
                let m = SusceptibilityModel::lorentz_isotropic(beta, nu, g).unwrap();
                let b = BathState::quantum(t);
                let z = noise_spectrum(&m, &b, w).unwrap();
                let x = b.hbar * w / (2.0 * b.kt());
                let coth = if t == 0.0 { 1.0 } else { 1.0 / x.tanh() };
                let resid = z - m.im_chi(w).unwrap() * (w * b.hbar * w * coth);
                prop_assert!(resid.norm() <= 1e-13 * z.norm());
            }

            #[test]
            fn classical_limit_is_quadratic(t in 0.5f64..3.0, w in 0.1f64..3.0) {
                let m = SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.2).unwrap();
                let cl = noise_spectrum(&m, &BathState::classical(t), w).unwrap()[(0, 0)];
                let err = |lam: f64| {
                    let mut b = BathState::quantum(t);
                    b.hbar = lam;
                    (noise_spectrum(&m, &b, w).unwrap()[(0, 0)] - cl).abs()
                };
                let (e1, e2) = (err(1e-2), err(5e-3));
                prop_assert!(e1 > 0.0);
                let ratio = e1 / e2;
                prop_assert!((ratio - 4.0).abs() < 0.05, "ratio {}", ratio);
            }

            #[test]
            fn correlation_even_in_tau(tau in 0.01f64..5.0) {
                let m = lorentz();
                let b = BathState::classical(1.0);
                prop_assert_eq!(noise_correlation(&m, &b, tau).unwrap(), noise_correlation(&m, &b, -tau).unwrap());
            }
        }
    }
}
