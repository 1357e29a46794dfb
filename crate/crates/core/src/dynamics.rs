//! Laplace-domain solution of the generalized Langevin equation.
//!
//! With `Λ(s) = ms²I + s²χ̃(s) + mω₀²I`, the forward solution is
//! `q(t) = α(t)q(0) + η(t)p(0) + ∫₀ᵗ η(t−u) ξ(u) du`, where
//! `η = L⁻¹[Λ⁻¹]` and `α = L⁻¹[sΛ⁻¹(m + χ̃)]`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::medium::SusceptibilityModel;
use crate::noise::{regulator, BathMode, BathState};
use crate::numerics::{
    bromwich_fft_grid, integrate_regulated, integrate_to_infinity, jacobi_eigen, talbot_multi, InverseLaplaceSpec,
    InversionMethod, QuadratureSpec,
};
use crate::tensor::{to_complex, ComplexTensor3, RealTensor3, SymmetricTensor3, Vec3};

/// The Brownian particle: mass, optional harmonic binding and initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpec {
    pub mass: f64,
    /// Harmonic frequency; zero for a free particle.
    pub omega0: f64,
    pub q0: Vec3,
    pub p0: Vec3,
    /// `⟨p_j(0) p_k(0)⟩`; `None` means thermal spread about the mean,
    /// `p(0)p(0)ᵀ + m k_BT I`.
    pub p_second_moment: Option<SymmetricTensor3>,
}

impl ParticleSpec {
    pub fn free(mass: f64) -> Self {
        ParticleSpec {
            mass,
            omega0: 0.0,
            q0: Vec3::zeros(),
            p0: Vec3::zeros(),
            p_second_moment: None,
        }
    }

    pub fn oscillator(mass: f64, omega0: f64) -> Self {
        ParticleSpec {
            omega0,
            ..Self::free(mass)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Validation(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.omega0.is_finite() && self.omega0 >= 0.0) {
            return Err(Error::Validation(format!("omega0 must be >= 0, got {}", self.omega0)));
        }
        if self.q0.iter().chain(self.p0.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Validation("initial position and momentum must be finite".into()));
        }
        if let Some(p) = &self.p_second_moment {
            if (p - p.transpose()).norm() > 1e-12 * p.norm() || p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("momentum second moment must be symmetric".into()));
            }
            let (vals, _) = jacobi_eigen(p);
            if vals.min() < -1e-12 * p.trace().abs() {
                return Err(Error::NotPsd { eigenvalue: vals.min() });
            }
        }
        Ok(())
    }

    /// `⟨p p⟩`, defaulting to the thermal value.
    pub fn momentum_moment(&self, bath: &BathState) -> SymmetricTensor3 {
        self.p_second_moment
            .unwrap_or_else(|| self.p0 * self.p0.transpose() + Matrix3::identity() * (self.mass * bath.kt()))
    }

    /// Covariance of `p(0)` about its mean `p0`.
    pub fn momentum_covariance(&self, bath: &BathState) -> Result<SymmetricTensor3> {
        let c = self.momentum_moment(bath) - self.p0 * self.p0.transpose();
        let (vals, _) = jacobi_eigen(&c);
        if vals.min() < -1e-12 * (c.trace().abs() + self.p0.norm_squared()) {
            return Err(Error::NotPsd { eigenvalue: vals.min() });
        }
        Ok(c)
    }
}

/// `Λ(s) = ms²I + s²χ̃(s) + mω₀²I`.
pub fn lambda_matrix(model: &SusceptibilityModel, particle: &ParticleSpec, s: Complex64) -> Result<ComplexTensor3> {
    model.chi_laplace(s)?;
    Ok(lambda_continued(model, particle, s))
}

fn lambda_continued(model: &SusceptibilityModel, particle: &ParticleSpec, s: Complex64) -> ComplexTensor3 {
    let m = particle.mass;
    let chi = model.chi_laplace_continued(s);
    let diag = m * s * s + m * particle.omega0 * particle.omega0;
    ComplexTensor3::identity() * diag + chi * (s * s)
}

fn inverse(l: &ComplexTensor3, s: Complex64) -> Result<ComplexTensor3> {
    l.try_inverse().ok_or(Error::ContourSingularity { re: s.re, im: s.im })
}

/// Upper bound on `|Im s|` over the singularities of `Λ⁻¹(s)`.
pub fn singularity_bound(model: &SusceptibilityModel, particle: &ParticleSpec) -> f64 {
    let m = particle.mass;
    let w0 = particle.omega0;
    match model {
        SusceptibilityModel::Ohmic { .. } => w0,
        SusceptibilityModel::Lorentz(lm) => {
            let extra = lm
                .axes
                .iter()
                .map(|a| a.nu * a.nu + 0.25 * a.gamma * a.gamma + a.beta / m)
                .fold(0.0, f64::max);
            (w0 * w0 + extra).sqrt()
        }
        SusceptibilityModel::Tabulated(t) => {
            // (2/π)∫ ω Im χ dω plays the role of β in the Lorentz bound.
            let w = t.omega();
            let smp = t.samples();
            let mut weight = 0.0;
            for k in 0..w.len() - 1 {
                let h = w[k + 1] - w[k];
                weight += 0.5 * h * (w[k] * smp[k].norm() + w[k + 1] * smp[k + 1].norm());
            }
            let wmax = *w.last().unwrap();
            (w0 * w0 + wmax * wmax + 2.0 / PI * weight / m).sqrt()
        }
    }
}

fn adapted(spec: &InverseLaplaceSpec, max_im: f64, t: f64) -> InverseLaplaceSpec {
    let auto = InverseLaplaceSpec::for_singularities(0.0, max_im, t);
    InverseLaplaceSpec {
        node_count: spec.node_count.max(auto.node_count),
        stretch: spec.stretch.max(auto.stretch),
        shift: spec.shift.max(0.0),
        ..*spec
    }
}

/// Time-domain kernels on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSet {
    pub times: Vec<f64>,
    /// `η(t)`, or `η′(t)` for a bound particle.
    pub eta: Vec<RealTensor3>,
    /// `η̇(t)`.
    pub eta_dot: Vec<RealTensor3>,
    /// `α(t)`; only for a bound particle.
    pub alpha: Option<Vec<RealTensor3>>,
    pub model: SusceptibilityModel,
    pub particle: ParticleSpec,
    pub spec: InverseLaplaceSpec,
}

impl PropagatorSet {
    /// Mean position `α(t)q(0) + η(t)p(0)` (with `α = I` for a free particle).
    pub fn mean_position(&self) -> Vec<Vec3> {
        let p = &self.particle;
        (0..self.times.len())
            .map(|k| {
                let a = self.alpha.as_ref().map_or(p.q0, |al| al[k] * p.q0);
                a + self.eta[k] * p.p0
            })
            .collect()
    }

    /// Mean velocity `α̇(t)q(0) + η̇(t)p(0)` with `α̇ = −mω₀²η`.
    pub fn mean_velocity(&self) -> Vec<Vec3> {
        let p = &self.particle;
        let k0 = p.mass * p.omega0 * p.omega0;
        (0..self.times.len())
            .map(|k| self.eta_dot[k] * p.p0 - self.eta[k] * p.q0 * k0)
            .collect()
    }
}

/// Inverse-Laplace propagators on a strictly increasing positive time grid.
pub fn propagators(
    model: &SusceptibilityModel,
    particle: &ParticleSpec,
    times: &[f64],
    spec: &InverseLaplaceSpec,
) -> Result<PropagatorSet> {
    particle.validate()?;
    spec.validate()?;
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be positive and strictly increasing".into()));
    }
    let bound = particle.omega0 > 0.0;
    let m = particle.mass;
    let eval = |s: Complex64, out: &mut [Complex64]| -> Result<()> {
        let l = lambda_continued(model, particle, s);
        let inv = inverse(&l, s)?;
        let sinv = inv * s;
        out[..9].copy_from_slice(inv.as_slice());
        out[9..18].copy_from_slice(sinv.as_slice());
        if bound {
            let chi = model.chi_laplace_continued(s);
            let a = sinv * (ComplexTensor3::identity() * Complex64::from(m) + chi);
            out[18..27].copy_from_slice(a.as_slice());
        }
        Ok(())
    };
    let n_out = if bound { 27 } else { 18 };
    let rows: Vec<Vec<f64>> = match spec.method {
        InversionMethod::Talbot => {
            let max_im = singularity_bound(model, particle);
            times
                .par_iter()
                .map(|&t| talbot_multi(eval, n_out, t, &adapted(spec, max_im, t)))
                .collect::<Result<Vec<_>>>()?
        }
        InversionMethod::BromwichFft => {
            let dt = times[0];
            let uniform = times
                .iter()
                .enumerate()
                .all(|(k, &t)| (t - (k + 1) as f64 * dt).abs() <= 1e-9 * t);
            if !uniform {
                return Err(Error::Domain("Bromwich-FFT inversion needs the grid t_k = k·dt".into()));
            }
            let mut err = None;
            let grid = bromwich_fft_grid(
                |s, out| {
                    if let Err(e) = eval(s, out) {
                        err.get_or_insert(e);
                    }
                },
                n_out,
                dt,
                times.len() + 1,
                spec,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            grid.into_iter().skip(1).collect()
        }
    };
    let take = |r: &Vec<f64>, k: usize| Matrix3::from_column_slice(&r[9 * k..9 * k + 9]);
    Ok(PropagatorSet {
        times: times.to_vec(),
        eta: rows.iter().map(|r| take(r, 0)).collect(),
        eta_dot: rows.iter().map(|r| take(r, 1)).collect(),
        alpha: bound.then(|| rows.iter().map(|r| take(r, 2)).collect()),
        model: model.clone(),
        particle: particle.clone(),
        spec: *spec,
    })
}

/// `Z(ω, t) = L⁻¹[Λ⁻¹(s)(−s)/(s + iω)] f(ω)`, forward branch.
pub fn z_kernel(
    model: &SusceptibilityModel,
    particle: &ParticleSpec,
    omega: f64,
    t: f64,
    spec: &InverseLaplaceSpec,
) -> Result<ComplexTensor3> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("z_kernel needs omega > 0, got {omega}")));
    }
    let f = model.coupling_tensor(omega)?.f;
    Ok(z_unweighted(model, particle, omega, t, spec)? * to_complex(&f))
}

fn z_unweighted(
    model: &SusceptibilityModel,
    particle: &ParticleSpec,
    omega: f64,
    t: f64,
    spec: &InverseLaplaceSpec,
) -> Result<ComplexTensor3> {
    particle.validate()?;
    // Λ⁻¹(−s)/(s+iω) = [−s²Λ⁻¹ + iω sΛ⁻¹]/(s²+ω²); both parts invert to real kernels.
    let max_im = singularity_bound(model, particle).max(omega);
    let v = talbot_multi(
        |s, out| {
            let inv = inverse(&lambda_continued(model, particle, s), s)?;
            let d = s * s + omega * omega;
            let a = inv * (-s * s / d);
            let b = inv * (s / d);
            out[..9].copy_from_slice(a.as_slice());
            out[9..].copy_from_slice(b.as_slice());
            Ok(())
        },
        18,
        t,
        &adapted(spec, max_im, t),
    )?;
    let re = Matrix3::from_column_slice(&v[..9]);
    let im = Matrix3::from_column_slice(&v[9..]) * omega;
    Ok(re.zip_map(&im, Complex64::new))
}

/// Mean-square displacement `⟨|q(t) − q(t′)|²⟩` of a free particle (3D sum).
pub fn msd_free(
    model: &SusceptibilityModel,
    bath: &BathState,
    particle: &ParticleSpec,
    t: f64,
    t_prime: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    MsdEvaluator::new(model, bath, particle, t.max(t_prime), spec)?.msd(t, t_prime)
}

/// Reusable evaluator of the free-particle MSD up to a horizon.
#[derive(Debug, Clone)]
pub struct MsdEvaluator {
    model: SusceptibilityModel,
    bath: BathState,
    particle: ParticleSpec,
    spec: QuadratureSpec,
    horizon: f64,
    kernel: MsdKernel,
}

#[derive(Debug, Clone)]
enum MsdKernel {
    /// Ohmic friction, diagonal in the eigenbasis `q` with rates `gammas`.
    Ohmic { gammas: [f64; 3], q: Matrix3<f64> },
    /// η sampled at `k·h`, interpolated linearly.
    Grid { h: f64, eta: Vec<RealTensor3> },
}

impl MsdEvaluator {
    pub fn new(
        model: &SusceptibilityModel,
        bath: &BathState,
        particle: &ParticleSpec,
        horizon: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        particle.validate()?;
        bath.validate()?;
        spec.validate()?;
        if particle.omega0 != 0.0 {
            return Err(Error::Unsupported("msd_free needs a free particle (omega0 = 0)".into()));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::Domain("msd horizon must be finite and >= 0".into()));
        }
        let kernel = match model {
            SusceptibilityModel::Ohmic { gamma } => {
                let (vals, q) = jacobi_eigen(gamma);
                MsdKernel::Ohmic {
                    gammas: [vals[0].max(0.0), vals[1].max(0.0), vals[2].max(0.0)],
                    q,
                }
            }
            _ => grid_kernel(model, particle, horizon)?,
        };
        Ok(MsdEvaluator {
            model: model.clone(),
            bath: *bath,
            particle: particle.clone(),
            spec: spec.clone(),
            horizon,
            kernel,
        })
    }

    /// `η(t)` from the kernel.
    pub fn eta(&self, t: f64) -> RealTensor3 {
        match &self.kernel {
            MsdKernel::Ohmic { gammas, q } => {
                let m = self.particle.mass;
                let d = gammas.map(|g| if g == 0.0 { t / m } else { -(-g * t / m).exp_m1() / g });
                q * Matrix3::from_diagonal(&Vec3::from(d)) * q.transpose()
            }
            MsdKernel::Grid { h, eta } => {
                let x = t / h;
                let k = (x.floor() as usize).min(eta.len() - 2);
                let u = x - k as f64;
                eta[k] * (1.0 - u) + eta[k + 1] * u
            }
        }
    }

    /// `⟨|q(t) − q(t′)|²⟩`.
    pub fn msd(&self, t: f64, t_prime: f64) -> Result<f64> {
        if !(t >= 0.0 && t_prime >= 0.0) {
            return Err(Error::Domain("msd times must be >= 0".into()));
        }
        if t.max(t_prime) > self.horizon * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "msd time {} beyond evaluator horizon {}",
                t.max(t_prime),
                self.horizon
            )));
        }
        if t == t_prime {
            return Ok(0.0);
        }
        let p = self.particle.momentum_moment(&self.bath);
        let de = self.eta(t) - self.eta(t_prime);
        let drift = (de * p * de.transpose()).trace();
        Ok(drift + self.noise_term(t, t_prime)?)
    }

    fn noise_term(&self, t: f64, tp: f64) -> Result<f64> {
        if self.bath.mode == BathMode::Classical && self.bath.temperature == 0.0 {
            return Ok(0.0);
        }
        match &self.kernel {
            MsdKernel::Ohmic { gammas, .. } => {
                let mut total = 0.0;
                for &g in gammas {
                    if g > 0.0 {
                        total += self.ohmic_axis(g, t, tp)?;
                    }
                }
                Ok(total)
            }
            MsdKernel::Grid { h, eta } => self.grid_noise(*h, eta, t, tp),
        }
    }

    /// `∫ (γ/π)(E(ω)/ω²) |A − (imω/γ)B|² / (γ² + m²ω²) dω` for one axis, with
    /// `E = ħω coth(ħω/2k_BT)`, `A = e^{−iωt} − e^{−iωt′}`, `B = e^{−γt/m} − e^{−γt′/m}`.
    fn ohmic_axis(&self, g: f64, t: f64, tp: f64) -> Result<f64> {
        let m = self.particle.mass;
        let kappa = g / m;
        let b = (-kappa * t).exp() - (-kappa * tp).exp();
        let bath = self.bath;
        if bath.mode == BathMode::Quantum && self.spec.cutoff.is_none() && b != 0.0 {
            return Err(Error::Divergence(
                "quantum free-particle MSD with an initial slip diverges logarithmically; set a cutoff".into(),
            ));
        }
        let delta = t - tp;
        let base = move |w: f64| g / PI * bath.energy_factor(w) / (w * w) / (g * g + m * m * w * w);
        // |A − icB|² = 2 − 2cos ωΔ + c²B² + 2cB(sin ωt − sin ωt′), c = mω/γ.
        let full = move |w: f64| -> f64 {
            if w == 0.0 {
                return 0.0;
            }
            let c = m * w / g;
            let z = 4.0 * (0.5 * w * delta).sin().powi(2) + c * c * b * b + 2.0 * c * b * ((w * t).sin() - (w * tp).sin());
            base(w) * z
        };
        let mut breaks = vec![0.25 * kappa, kappa, 4.0 * kappa];
        if bath.mode == BathMode::Quantum && bath.temperature > 0.0 {
            breaks.push(4.0 * bath.kt() / bath.hbar);
        }
        if let Some(l) = self.spec.cutoff {
            return Ok(integrate_regulated(|w| full(w) * regulator(w, l), &breaks, Some(t.max(tp)), l, &self.spec)?.value);
        }
        let w_head = 8.0 * kappa.max(1.0 / t.max(tp));
        let c = move |w: f64| m * w / g;
        let tails: [(f64, Box<dyn Fn(f64) -> f64>); 4] = [
            (0.0, Box::new(move |w| base(w) * (2.0 + (c(w) * b).powi(2)))),
            (delta.abs(), Box::new(move |w| -2.0 * base(w) * (w * delta).cos())),
            (t, Box::new(move |w| 2.0 * c(w) * b * base(w) * (w * t).sin())),
            (tp, Box::new(move |w| -2.0 * c(w) * b * base(w) * (w * tp).sin())),
        ];
        self.head_and_tails(full, &breaks, t.max(tp), w_head, &tails)
    }

    /// `∫₀^W f` on half-period panels of `freq`, plus `∫_W^∞` of each tail
    /// term, one oscillation frequency at a time.
    fn head_and_tails<F: Fn(f64) -> f64>(
        &self,
        f: F,
        breaks: &[f64],
        freq: f64,
        w_head: f64,
        tails: &[(f64, Box<dyn Fn(f64) -> f64 + '_>)],
    ) -> Result<f64> {
        let mut pts = vec![0.0, w_head];
        pts.extend(breaks.iter().copied().filter(|&x| x > 0.0 && x < w_head));
        let half = PI / freq.max(1e-300);
        let n = ((w_head / half) as usize).min(4000);
        pts.extend((1..=n).map(|k| w_head * k as f64 / (n + 1) as f64));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut spec = self.spec.clone();
        spec.max_subdivisions = spec.max_subdivisions.max(4 * pts.len());
        let mut total = crate::numerics::integrate_breaks(&f, &pts, &spec)?.value;
        for (w, tail) in tails {
            if *w == 0.0 {
                total += integrate_to_infinity(|x: f64| tail(w_head + x), &[], &self.spec)?.value;
            } else {
                let s = self.spec.clone().with_hint(*w);
                total += integrate_to_infinity(|x: f64| tail(w_head + x), &[], &s)?.value;
            }
        }
        Ok(total)
    }

    fn grid_noise(&self, h: f64, eta: &[RealTensor3], t: f64, tp: f64) -> Result<f64> {
        let bath = self.bath;
        let model = &self.model;
        let cutoff = self.spec.cutoff;
        let weight = move |w: f64| bath.energy_factor(w) / 2.0 * (2.0 * w / PI);
        let f = |w: f64| -> f64 {
            if w <= 0.0 {
                return 0.0;
            }
            let im = match model.im_chi(w) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            let dy = filon_y(h, eta, w, t) - filon_y(h, eta, w, tp);
            let reg = cutoff.map_or(1.0, |l| regulator(w, l));
            weight(w) * (dy * to_complex(&im) * dy.adjoint()).trace().re * reg
        };
        let breaks = model.breakpoints();
        let freq = t.max(tp);
        if let Some(l) = cutoff {
            return Ok(integrate_regulated(f, &breaks, Some(freq), l, &self.spec)?.value);
        }
        if let SusceptibilityModel::Tabulated(_) = model {
            let top = model.max_frequency();
            return self.head_and_tails(f, &breaks, freq, top, &[]);
        }
        // Y ≈ η(t)/(iω) + O(ω⁻²) beyond the resonances.
        let de = self.eta(t) - self.eta(tp);
        let tail = move |w: f64| match model.im_chi(w) {
            Ok(im) => weight(w) * (de * im * de.transpose()).trace() / (w * w),
            Err(_) => f64::NAN,
        };
        let w_head = 30.0 * grid_rate(model, &self.particle).max(1.0 / freq);
        self.head_and_tails(f, &breaks, freq, w_head, &[(0.0, Box::new(tail))])
    }
}

/// Frequency scale that the η grid must resolve.
fn grid_rate(model: &SusceptibilityModel, particle: &ParticleSpec) -> f64 {
    let bound = singularity_bound(model, particle);
    match model {
        SusceptibilityModel::Ohmic { gamma } => bound.max(jacobi_eigen(gamma).0.max() / particle.mass),
        _ => bound,
    }
}

fn grid_kernel(model: &SusceptibilityModel, particle: &ParticleSpec, horizon: f64) -> Result<MsdKernel> {
    let rate = grid_rate(model, particle).max(1e-12);
    let n = ((horizon * rate / 0.01).ceil() as usize).clamp(400, 40_000);
    let h = horizon.max(1e-12) / n as f64;
    let times: Vec<f64> = (1..=n).map(|k| k as f64 * h).collect();
    let set = propagators(model, particle, &times, &InverseLaplaceSpec::default())?;
    let mut eta = Vec::with_capacity(n + 1);
    eta.push(Matrix3::zeros());
    eta.extend(set.eta);
    Ok(MsdKernel::Grid { h, eta })
}

/// `Y(ω, t) = ∫₀ᵗ η(t−u) e^{−iωu} du = e^{−iωt} ∫₀ᵗ η(v) e^{iωv} dv` for η
/// linear between samples `k·h`.
fn filon_y(h: f64, eta: &[RealTensor3], w: f64, t: f64) -> ComplexTensor3 {
    if t <= 0.0 {
        return ComplexTensor3::zeros();
    }
    let full = ((t / h).floor() as usize).min(eta.len() - 1);
    let mut acc = ComplexTensor3::zeros();
    let seg = |a: f64, b: f64, ea: &RealTensor3, eb: &RealTensor3| -> ComplexTensor3 {
        let hh = b - a;
        let c = 0.5 * (a + b);
        let x = 0.5 * w * hh;
        let (sinc, g) = if x.abs() < 1e-3 {
            let x2 = x * x;
            (1.0 - x2 / 6.0 + x2 * x2 / 120.0, x * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0))
        } else {
            let (s, co) = x.sin_cos();
            (s / x, (s - x * co) / (x * x))
        };
        let mean = (ea + eb) * 0.5;
        let diff = eb - ea;
        let phase = Complex64::from_polar(hh, w * c);
        mean.zip_map(&diff, |m, d| phase * Complex64::new(m * sinc, 0.5 * d * g))
    };
    // Uniform segments share a phase recurrence.
    let step = Complex64::from_polar(1.0, w * h);
    let x = 0.5 * w * h;
    let (sinc, g) = if x.abs() < 1e-3 {
        let x2 = x * x;
        (1.0 - x2 / 6.0 + x2 * x2 / 120.0, x * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0))
    } else {
        let (s, co) = x.sin_cos();
        (s / x, (s - x * co) / (x * x))
    };
    let mut phase = Complex64::from_polar(h, 0.5 * w * h);
    for k in 0..full {
        if k % 256 == 0 {
            phase = Complex64::from_polar(h, w * (k as f64 + 0.5) * h);
        }
        let (ea, eb) = (&eta[k], &eta[k + 1]);
        for (o, (a, b)) in acc.iter_mut().zip(ea.iter().zip(eb.iter())) {
            *o += phase * Complex64::new(0.5 * (a + b) * sinc, 0.5 * (b - a) * g);
        }
        phase *= step;
    }
    let a = full as f64 * h;
    if t > a * (1.0 + 1e-14) && full + 1 < eta.len() {
        let u = (t - a) / h;
        let et = eta[full] * (1.0 - u) + eta[full + 1] * u;
        acc += seg(a, t, &eta[full], &et);
    }
    acc * Complex64::from_polar(1.0, -w * t)
}
