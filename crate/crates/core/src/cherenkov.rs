//! Cherenkov emission by a uniformly moving charge in a dispersive,
//! possibly anisotropic medium.
//!
//! `H(k, ω) = μ₀⁻¹k²c² I − ω² ε(ω)` and `G = H⁻¹`. The per-frequency power
//! `dW/dt dω = (e²/4π³ε₀) ω v ∫ dk k ∫ dφ Im[u·G·u]`, with `u` the component
//! of the velocity direction transverse to `k` and the polar angle fixed by
//! energy-momentum conservation.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::medium::SusceptibilityModel;
use crate::numerics::{integrate_breaks, integrate_to_infinity, jacobi_eigen, QuadratureSpec};
use crate::tensor::{imag_part, real_part, to_complex, ComplexTensor3, RealTensor3, Vec3};
use crate::units::UnitSystem;

const NEAR_SINGULAR_CONDITION: f64 = 1e12;

/// Source of `ε(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Permittivity {
    /// `ε = I + χ(ω)`.
    Medium(SusceptibilityModel),
    /// Frequency-independent `ε`.
    Constant(ComplexTensor3),
}

impl Permittivity {
    /// `n² I + i·loss·I`.
    pub fn nondispersive(n: f64, loss: f64) -> Self {
        Permittivity::Constant(ComplexTensor3::identity() * Complex64::new(n * n, loss))
    }

    pub fn epsilon(&self, omega: f64) -> Result<ComplexTensor3> {
        match self {
            Permittivity::Medium(m) => Ok(m.chi_frequency(omega)? + ComplexTensor3::identity()),
            Permittivity::Constant(e) => Ok(*e),
        }
    }

    /// `Im χ = Im ε`.
    pub fn im_chi(&self, omega: f64) -> Result<RealTensor3> {
        match self {
            Permittivity::Medium(m) => m.im_chi(omega),
            Permittivity::Constant(e) => Ok(imag_part(e)),
        }
    }

    /// Coupling tensor `f = √((2ω/π) Im χ)`.
    pub fn coupling(&self, omega: f64) -> Result<RealTensor3> {
        match self {
            Permittivity::Medium(m) => Ok(m.coupling_tensor(omega)?.f),
            Permittivity::Constant(e) => {
                crate::numerics::matrix_sqrt_psd(&(imag_part(e) * (2.0 * omega / PI)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargedParticle {
    pub mass: f64,
    pub charge: f64,
    pub speed: f64,
    /// Direction of motion; normalized on use.
    pub direction: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CherenkovConfig {
    pub particle: ChargedParticle,
    pub permittivity: Permittivity,
    /// Frequencies at which the spectrum is evaluated, strictly increasing.
    pub omega_grid: Vec<f64>,
    /// Upper limit of the `k` integral; `None` follows the kinematic bound.
    pub k_max: Option<f64>,
    /// Keep the `ħ` recoil term of the emission angle.
    pub quantum_correction: bool,
    /// Add the spin/recoil term of the spin sum to the intensity.
    pub include_recoil: bool,
    /// Azimuthal nodes of the periodic trapezoid rule.
    pub phi_nodes: usize,
    pub units: UnitSystem,
    pub quadrature: QuadratureSpec,
}

impl CherenkovConfig {
    pub fn new(particle: ChargedParticle, permittivity: Permittivity, omega_grid: Vec<f64>) -> Self {
        CherenkovConfig {
            particle,
            permittivity,
            omega_grid,
            k_max: None,
            quantum_correction: false,
            include_recoil: false,
            phi_nodes: 16,
            units: UnitSystem::default(),
            quadrature: QuadratureSpec::with_tolerances(1e-14, 1e-9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.units.validate().map_err(Error::Validation)?;
        self.quadrature.validate()?;
        let p = &self.particle;
        let c = self.units.c;
        if !(p.mass > 0.0 && p.mass.is_finite()) {
            return Err(Error::Validation(format!("particle mass must be > 0, got {}", p.mass)));
        }
        if !p.charge.is_finite() {
            return Err(Error::Validation("particle charge must be finite".into()));
        }
        if !(p.speed > 0.0 && p.speed < c) {
            return Err(Error::Validation(format!("speed must lie in (0, c), got {}", p.speed)));
        }
        if !(p.direction.norm() > 0.0 && p.direction.norm().is_finite()) {
            return Err(Error::Validation("direction of motion must be nonzero".into()));
        }
        if self.phi_nodes < 4 {
            return Err(Error::Validation("phi_nodes must be >= 4".into()));
        }
        if let Some(k) = self.k_max {
            if !(k > 0.0) {
                return Err(Error::Validation(format!("k_max must be > 0, got {k}")));
            }
        }
        let g = &self.omega_grid;
        if g.is_empty() || g[0] <= 0.0 || g.windows(2).any(|w| w[1] <= w[0]) || g.iter().any(|w| !w.is_finite()) {
            return Err(Error::Validation("omega grid must be positive and strictly increasing".into()));
        }
        for &w in g {
            let e = self.permittivity.epsilon(w)?;
            if (e - e.transpose()).norm() > 1e-12 * e.norm() {
                return Err(Error::Validation(format!("permittivity is not symmetric at omega = {w}")));
            }
            let im = imag_part(&e);
            let (vals, _) = jacobi_eigen(&((im + im.transpose()) * 0.5));
            if vals.min() < -1e-12 * im.norm().max(1e-300) {
                return Err(Error::NonPassive { omega: w, eigenvalue: vals.min() });
            }
        }
        Ok(())
    }

    fn direction(&self) -> Vec3 {
        self.particle.direction.normalize()
    }

    fn velocity(&self) -> Vec3 {
        self.direction() * self.particle.speed
    }

    /// `ħω√(1 − v²/c²)/(2mc²)`, or zero without the quantum correction.
    fn recoil_parameter(&self, omega: f64) -> f64 {
        if !self.quantum_correction {
            return 0.0;
        }
        let (c, v) = (self.units.c, self.particle.speed);
        self.units.hbar * omega * (1.0 - v * v / (c * c)).sqrt() / (2.0 * self.particle.mass * c * c)
    }
}

/// `H = μ₀⁻¹k²c² I − ω² ε(ω)`.
pub fn h_matrix(config: &CherenkovConfig, k: &Vec3, omega: f64) -> Result<ComplexTensor3> {
    let u = &config.units;
    let eps = config.permittivity.epsilon(omega)?;
    Ok(ComplexTensor3::identity() * Complex64::from(k.norm_squared() * u.c * u.c / u.mu0) - eps * Complex64::from(omega * omega))
}

/// `G = H⁻¹`; refuses matrices with condition number above 1e12.
pub fn green_tensor(config: &CherenkovConfig, k: &Vec3, omega: f64) -> Result<ComplexTensor3> {
    let h = h_matrix(config, k, omega)?;
    let sv = h.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= NEAR_SINGULAR_CONDITION) {
        return Err(Error::NearSingular {
            condition: cond,
            pole_k: nearest_pole(config, k.norm(), omega)?,
        });
    }
    h.try_inverse().ok_or(Error::NearSingular {
        condition: f64::INFINITY,
        pole_k: k.norm(),
    })
}

/// `(I − k̂k̂ᵀ) G (I − k̂k̂ᵀ)`; `k = 0` has no transverse projection.
pub fn transverse(g: &ComplexTensor3, k: &Vec3) -> ComplexTensor3 {
    if k.norm() == 0.0 {
        return *g;
    }
    let kh = k.normalize();
    let p = to_complex(&(Matrix3::identity() - kh * kh.transpose()));
    p * g * p
}

/// Relative Frobenius residual of `ω² G·Im χ·G* = Im G`.
pub fn tensor_identity_residual(config: &CherenkovConfig, k: &Vec3, omega: f64) -> Result<f64> {
    let g = green_tensor(config, k, omega)?;
    let im_chi = to_complex(&config.permittivity.im_chi(omega)?);
    let lhs = g * im_chi * g.map(|z| z.conj()) * Complex64::from(omega * omega);
    let img = imag_part(&g);
    Ok((real_part(&lhs) - img).norm().max(imag_part(&lhs).norm()) / img.norm().max(1e-300))
}

/// Pole of `G` along `|k|` nearest to `k`: `k_i = ω√(μ₀λ_i)/c` over the
/// positive eigenvalues `λ_i` of `Re ε`.
fn nearest_pole(config: &CherenkovConfig, k: f64, omega: f64) -> Result<f64> {
    let poles = poles(config, omega)?;
    Ok(poles
        .iter()
        .map(|p| p.k)
        .min_by(|a, b| (a - k).abs().total_cmp(&(b - k).abs()))
        .unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, Copy)]
struct Pole {
    k: f64,
    /// Half-width of the resonance in `k` from `Im ε`.
    width: f64,
}

fn poles(config: &CherenkovConfig, omega: f64) -> Result<Vec<Pole>> {
    let u = &config.units;
    let eps = config.permittivity.epsilon(omega)?;
    let re = real_part(&eps);
    let im = imag_part(&eps);
    let (vals, vecs) = jacobi_eigen(&((re + re.transpose()) * 0.5));
    let mut out = Vec::new();
    for i in 0..3 {
        if vals[i] > 0.0 {
            let k = omega * (u.mu0 * vals[i]).sqrt() / u.c;
            let e = vecs.column(i);
            let loss = (e.transpose() * im * e)[(0, 0)].max(0.0);
            out.push(Pole {
                k,
                width: u.mu0 * omega * omega * loss / (2.0 * k * u.c * u.c),
            });
        }
    }
    Ok(out)
}

/// Emission direction relative to the particle path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionAngle {
    pub cos_theta: f64,
    /// `false` when `|cos θ| > 1`: kinematically forbidden.
    pub allowed: bool,
}

/// `cos θ = (ω/vk)[1 + (ħω/2mc²)(k²c²/ω² − 1)√(1 − v²/c²)]`.
pub fn emission_angle(config: &CherenkovConfig, k: f64, omega: f64) -> Result<EmissionAngle> {
    if !(k > 0.0 && omega > 0.0) {
        return Err(Error::Domain(format!("emission angle needs k, omega > 0, got {k}, {omega}")));
    }
    let cos_theta = cos_theta(config, k, omega);
    Ok(EmissionAngle {
        cos_theta,
        allowed: cos_theta.abs() <= 1.0,
    })
}

fn cos_theta(config: &CherenkovConfig, k: f64, omega: f64) -> f64 {
    let a = config.recoil_parameter(omega);
    let c = config.units.c;
    let bracket = 1.0 + a * (k * k * c * c / (omega * omega) - 1.0);
    omega / (config.particle.speed * k) * bracket
}

/// `k` interval on which `|cos θ| ≤ 1`; `None` when emission is forbidden.
pub fn kinematic_range(config: &CherenkovConfig, omega: f64) -> Option<(f64, f64)> {
    let a = config.recoil_parameter(omega);
    let (c, v) = (config.units.c, config.particle.speed);
    if a == 0.0 {
        return Some((omega / v, f64::INFINITY));
    }
    // v k cos θ = ω(1 − a) + a c² k²/ω ≤ v k.
    let disc = v * v - 4.0 * a * c * c * (1.0 - a);
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    let lo = (2.0 * omega * (1.0 - a) / (v + r)).max(0.0);
    let hi = omega * (v + r) / (2.0 * a * c * c);
    Some((lo, hi))
}

/// Power spectrum with kinematic diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CherenkovSpectrum {
    pub omega: Vec<f64>,
    pub power_density: Vec<f64>,
    /// Emission-cone `cos θ` range at the poles of `G` inside the integration range.
    pub cos_theta_min: Vec<f64>,
    pub cos_theta_max: Vec<f64>,
    /// Trapezoid integral of the density over the grid.
    pub total_power: f64,
    pub warnings: Vec<String>,
}

impl CherenkovSpectrum {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "omega,dW_dt_domega,cos_theta_min,cos_theta_max")?;
        for i in 0..self.omega.len() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e}",
                self.omega[i], self.power_density[i], self.cos_theta_min[i], self.cos_theta_max[i]
            )?;
        }
        Ok(())
    }
}

/// Gnuplot script plotting `csv_name` (as written by `write_csv`) to `png_name`.
pub fn gnuplot_script(csv_name: &str, png_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set output '{png_name}'\n\
         set xlabel 'omega'\n\
         set ylabel 'dW/dt d omega'\n\
         set key off\n\
         set grid\n\
         plot '{csv_name}' using 1:2 skip 1 with lines lw 2\n"
    )
}

/// Power spectrum over the configured frequency grid, parallel over ω.
pub fn radiation_intensity(config: &CherenkovConfig) -> Result<CherenkovSpectrum> {
    config.validate()?;
    let rows: Vec<(f64, f64, f64, Option<String>)> = config
        .omega_grid
        .par_iter()
        .map(|&w| density_at(config, w, PathChoice::Auto))
        .collect::<Result<Vec<_>>>()?;
    let omega = config.omega_grid.clone();
    let power_density: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut total_power = 0.0;
    for i in 1..omega.len() {
        total_power += 0.5 * (omega[i] - omega[i - 1]) * (power_density[i] + power_density[i - 1]);
    }
    Ok(CherenkovSpectrum {
        omega,
        power_density,
        cos_theta_min: rows.iter().map(|r| r.1).collect(),
        cos_theta_max: rows.iter().map(|r| r.2).collect(),
        total_power,
        warnings: rows.into_iter().filter_map(|r| r.3).collect(),
    })
}

/// `dW/dt dω` at one frequency through the general anisotropic pipeline.
pub fn power_density(config: &CherenkovConfig, omega: f64) -> Result<f64> {
    Ok(density_at(config, omega, PathChoice::General)?.0)
}

/// `dW/dt dω = (e²v/2π²ε₀) ω ∫ dk k (1 − cos²θ) Im[1/(μ₀⁻¹k²c² − ω²ε)]` for
/// isotropic `ε = ε(ω) I`.
pub fn isotropic_power_density(config: &CherenkovConfig, omega: f64) -> Result<f64> {
    Ok(density_at(config, omega, PathChoice::Isotropic)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PathChoice {
    Auto,
    General,
    Isotropic,
}

fn scalar_epsilon(eps: &ComplexTensor3) -> Option<Complex64> {
    let d = eps[(0, 0)];
    let off = (eps - ComplexTensor3::identity() * d).norm();
    (off <= 1e-14 * d.norm()).then_some(d)
}

fn density_at(config: &CherenkovConfig, omega: f64, path: PathChoice) -> Result<(f64, f64, f64, Option<String>)> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be > 0, got {omega}")));
    }
    let u = config.units;
    let p = &config.particle;
    let Some((k_lo, k_hi)) = kinematic_range(config, omega) else {
        return Ok((0.0, f64::NAN, f64::NAN, None));
    };
    let upper = config.k_max.map_or(k_hi, |k| k.min(k_hi));
    let mut warning = None;
    let eps = config.permittivity.epsilon(omega)?;
    let inside: Vec<Pole> = poles(config, omega)?
        .into_iter()
        .filter(|pl| pl.k >= k_lo && pl.k <= k_hi)
        .collect();
    if let Some(km) = config.k_max {
        if km < k_hi && inside.iter().any(|pl| pl.k + 64.0 * pl.width > km) {
            warning = Some(format!(
                "omega = {omega:e}: k_max = {km:e} cuts the emission range [{k_lo:e}, {k_hi:e}]"
            ));
        }
    }
    if upper <= k_lo {
        return Ok((0.0, f64::NAN, f64::NAN, warning));
    }
    let mut breaks = Vec::new();
    for pl in inside.iter().filter(|pl| pl.k < upper) {
        if pl.width == 0.0 {
            return Err(Error::NearSingular {
                condition: f64::INFINITY,
                pole_k: pl.k,
            });
        }
        for j in [-256.0, -64.0, -16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0, 64.0, 256.0] {
            breaks.push(pl.k + j * pl.width);
        }
    }
    let cosines: Vec<f64> = inside.iter().filter(|pl| pl.k < upper).map(|pl| cos_theta(config, pl.k, omega)).collect();
    let (cmin, cmax) = if cosines.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (cosines.iter().cloned().fold(f64::INFINITY, f64::min), cosines.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    };

    let isotropic = match path {
        PathChoice::General => None,
        PathChoice::Isotropic => Some(scalar_epsilon(&eps).ok_or_else(|| {
            Error::Unsupported("isotropic Cherenkov path needs eps proportional to the identity".into())
        })?),
        PathChoice::Auto if config.include_recoil => None,
        PathChoice::Auto => scalar_epsilon(&eps),
    };
    let e2 = p.charge * p.charge;
    let v = p.speed;
    let kc2 = u.c * u.c / u.mu0;
    let w2 = omega * omega;

    let value = match isotropic {
        Some(e) => {
            let f = |k: f64| -> f64 {
                let ct = cos_theta(config, k, omega);
                let d = Complex64::from(k * k * kc2) - e * w2;
                k * (1.0 - ct * ct) * d.inv().im
            };
            let integral = k_integral(f, k_lo, upper, &breaks, &config.quadrature)?;
            e2 * v / (2.0 * PI * PI * u.eps0) * omega * integral
        }
        None => {
            let frame = orthonormal_frame(&config.direction());
            let vel = config.velocity();
            let gamma_m = p.mass / (1.0 - v * v / (u.c * u.c)).sqrt();
            let q = vel * (gamma_m / u.hbar);
            let n_phi = config.phi_nodes;
            let f = |k: f64| -> f64 {
                let ct = cos_theta(config, k, omega).clamp(-1.0, 1.0);
                let st = (1.0 - ct * ct).sqrt();
                let h = ComplexTensor3::identity() * Complex64::from(k * k * kc2) - eps * Complex64::from(w2);
                let Some(g) = h.try_inverse() else {
                    return f64::NAN;
                };
                let mut acc = 0.0;
                for j in 0..n_phi {
                    let phi = 2.0 * PI * j as f64 / n_phi as f64;
                    let kh = frame * Vector3::new(st * phi.cos(), st * phi.sin(), ct);
                    let uvec = frame.column(2) - kh * ct;
                    let uc = uvec.map(Complex64::from);
                    acc += (uc.transpose() * g * uc)[(0, 0)].im;
                    if config.include_recoil {
                        let kvec = kh * k;
                        let gt = transverse(&g, &kvec);
                        let vp = recoil_velocity(config, &q, &kvec);
                        let bracket = recoil_bracket(config, &vel, &vp);
                        acc += 0.5 * u.c * u.c * imag_part(&gt).trace() * bracket / (v * v);
                    }
                }
                k * acc * (2.0 * PI / n_phi as f64)
            };
            let integral = k_integral(f, k_lo, upper, &breaks, &config.quadrature)?;
            e2 / (4.0 * PI.powi(3) * u.eps0) * omega * v * integral
        }
    };
    Ok((value.max(0.0), cmin, cmax, warning))
}

fn k_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    if hi.is_finite() {
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        return Ok(integrate_breaks(&f, &pts, spec)?.value);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let last = *pts.last().unwrap();
    let (mut head, start) = (0.0, if pts.len() > 1 { last } else { lo });
    if pts.len() > 1 {
        head = integrate_breaks(&f, &pts, spec)?.value;
    }
    let scale = start.max(1e-300);
    let tail = integrate_to_infinity(|x: f64| f(start + x), &[scale], spec)?.value;
    Ok(head + tail)
}

/// Columns `e₁, e₂, v̂` with `v̂` the third.
fn orthonormal_frame(vhat: &Vec3) -> RealTensor3 {
    let trial = if vhat[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (trial - vhat * vhat.dot(&trial)).normalize();
    let e2 = vhat.cross(&e1);
    Matrix3::from_columns(&[e1, e2, *vhat])
}

/// Velocity `ħc²q′/E_{q′}` after emitting `k`, `q′ = q − k`.
fn recoil_velocity(config: &CherenkovConfig, q: &Vec3, k: &Vec3) -> Vec3 {
    let u = &config.units;
    let qp = q - k;
    let e = energy(config, &qp);
    qp * (u.hbar * u.c * u.c / e)
}

fn energy(config: &CherenkovConfig, q: &Vec3) -> f64 {
    let u = &config.units;
    let m = config.particle.mass;
    ((u.hbar * u.c).powi(2) * q.norm_squared() + (m * u.c * u.c).powi(2)).sqrt()
}

/// `1 − √((1 − v²/c²)(1 − v′²/c²)) − v·v′/c²`.
fn recoil_bracket(config: &CherenkovConfig, v: &Vec3, vp: &Vec3) -> f64 {
    let c2 = config.units.c.powi(2);
    1.0 - ((1.0 - v.norm_squared() / c2) * (1.0 - vp.norm_squared() / c2)).sqrt() - v.dot(vp) / c2
}

/// Spin-averaged squared matrix element, split into its velocity-contracted
/// transverse part and the recoil part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSum {
    /// `v′·Im G⊥·v / (2πωc²)`.
    pub transverse: f64,
    /// `tr(Im G⊥)·[1 − √((1−v²/c²)(1−v′²/c²)) − v·v′/c²] / (4πω)`.
    pub recoil: f64,
}

impl SpinSum {
    pub fn total(&self) -> f64 {
        self.transverse + self.recoil
    }
}

/// `S = ⅛ Tr[(α·G⊥·f) Λ(q−k) (α·G⊥·f)† Λ(q)]` in closed form, using
/// `f fᵀ = (2ω/π) Im χ` and `ω² G⊥·Im χ·G⊥* = Im G⊥`.
pub fn spin_sum(config: &CherenkovConfig, q: &Vec3, k: &Vec3, omega: f64) -> Result<SpinSum> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be > 0, got {omega}")));
    }
    let u = &config.units;
    let g = transverse(&green_tensor(config, k, omega)?, k);
    let img = imag_part(&g);
    let v = q * (u.hbar * u.c * u.c / energy(config, q));
    let vp = recoil_velocity(config, q, k);
    let c2 = u.c * u.c;
    Ok(SpinSum {
        transverse: (vp.transpose() * img * v)[(0, 0)] / (2.0 * PI * omega * c2),
        recoil: img.trace() * recoil_bracket(config, &v, &vp) / (4.0 * PI * omega),
    })
}
