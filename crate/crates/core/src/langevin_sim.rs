//! Monte Carlo integration of the classical generalized Langevin equation
//! `m q̈ + ∫₀ᵗ χ̇(t−t′) q̇(t′) dt′ + mω₀² q = ξ(t)`.
//!
//! Ohmic friction is instantaneous and treated implicitly (trapezoidal). For
//! memory kernels the convolution is integrated by parts into
//! `χ(t)q̇(0) + ∫₀ᵗ χ(t−t′) q̈(t′) dt′`, which is explicit because `χ(0) = 0`.

use std::io::Write;

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::ParticleSpec;
use crate::error::{Error, Result};
use crate::medium::SusceptibilityModel;
use crate::noise::{BathMode, BathState, NoiseSynthesizer};
use crate::numerics::matrix_sqrt_psd;
use crate::tensor::{RealTensor3, Vec3};

/// Number of slowest-mode decay times in the default memory window.
pub const DEFAULT_WINDOW_DECAYS: f64 = 8.0;
const MIN_WINDOW_DECAYS: f64 = 5.0;
const MOMENTUM_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model: SusceptibilityModel,
    pub particle: ParticleSpec,
    pub bath: BathState,
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Memory kept in the friction convolution; ignored for Ohmic friction.
    pub kernel_truncation_window: f64,
    /// Keep every `record_every`-th step (step 0 is always kept).
    pub record_every: usize,
}

impl SimulationConfig {
    /// Config with the default memory window and every step recorded.
    pub fn new(
        model: SusceptibilityModel,
        particle: ParticleSpec,
        bath: BathState,
        dt: f64,
        n_steps: usize,
        n_paths: usize,
        seed: u64,
    ) -> Self {
        let total = dt * n_steps as f64;
        let window = match decay_time(&model) {
            Some(tau) if tau.is_finite() => (DEFAULT_WINDOW_DECAYS * tau).min(total),
            Some(_) => total,
            None => 0.0,
        };
        SimulationConfig {
            model,
            particle,
            bath,
            dt,
            n_steps,
            n_paths,
            seed,
            kernel_truncation_window: window,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.particle.validate()?;
        self.bath.validate()?;
        if self.bath.mode != BathMode::Classical {
            return Err(Error::Unsupported("trajectory simulation needs a classical bath".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.n_steps == 0 || self.n_paths == 0 {
            return Err(Error::Validation("n_steps and n_paths must be > 0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Validation("record_every must be > 0".into()));
        }
        if let Some(tau) = decay_time(&self.model) {
            let w = self.kernel_truncation_window;
            let total = self.dt * self.n_steps as f64;
            let need = (MIN_WINDOW_DECAYS * tau).min(total);
            if !(w.is_finite() && w >= need * (1.0 - 1e-12)) {
                return Err(Error::Validation(format!(
                    "kernel_truncation_window {w} shorter than {MIN_WINDOW_DECAYS} decay times ({need})"
                )));
            }
        }
        self.particle.momentum_covariance(&self.bath)?;
        Ok(())
    }
}

/// Slowest decay time of `χ(t)`; `None` for Ohmic friction. A tabulated
/// spectrum is taken to decay over the inverse of its finest sample spacing.
pub fn decay_time(model: &SusceptibilityModel) -> Option<f64> {
    match model {
        SusceptibilityModel::Ohmic { .. } => None,
        SusceptibilityModel::Lorentz(m) => Some(
            m.axes
                .iter()
                .filter(|a| a.beta != 0.0)
                .map(|a| if a.gamma > 0.0 { 2.0 / a.gamma } else { f64::INFINITY })
                .fold(0.0, f64::max),
        ),
        SusceptibilityModel::Tabulated(t) => {
            let spacing = t.omega().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            Some(1.0 / spacing)
        }
    }
}

/// Recorded positions and velocities, path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub dt: f64,
    pub record_every: usize,
    pub n_paths: usize,
    /// Simulation step of each record.
    pub steps: Vec<usize>,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl TrajectoryEnsemble {
    pub fn n_records(&self) -> usize {
        self.steps.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&s| s as f64 * self.dt).collect()
    }

    pub fn position(&self, path: usize, record: usize) -> Vec3 {
        self.positions[path * self.n_records() + record]
    }

    pub fn velocity(&self, path: usize, record: usize) -> Vec3 {
        self.velocities[path * self.n_records() + record]
    }

    /// Record index of time `t`, which must lie on the recorded grid.
    pub fn record_index(&self, t: f64) -> Result<usize> {
        let stride = self.dt * self.record_every as f64;
        let x = t / stride;
        let k = x.round();
        let last = self.n_records() - 1;
        if !(t >= 0.0) || (x - k).abs() > 1e-9 * x.max(1.0) || k as usize > last {
            return Err(Error::Domain(format!("time {t} is not on the recorded grid (stride {stride})")));
        }
        Ok(k as usize)
    }

    /// CSV `path,step,t,qx,qy,qz,vx,vy,vz`, keeping every `decimate`-th record.
    pub fn write_csv<W: Write>(&self, mut w: W, decimate: usize) -> Result<()> {
        let decimate = decimate.max(1);
        writeln!(w, "path,step,t,qx,qy,qz,vx,vy,vz")?;
        for p in 0..self.n_paths {
            for r in (0..self.n_records()).step_by(decimate) {
                let (q, v) = (self.position(p, r), self.velocity(p, r));
                let step = self.steps[r];
                writeln!(
                    w,
                    "{p},{step},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    step as f64 * self.dt,
                    q[0],
                    q[1],
                    q[2],
                    v[0],
                    v[1],
                    v[2]
                )?;
            }
        }
        Ok(())
    }
}

enum Friction {
    /// `γq̇`, applied implicitly: `(I + hγ/2m)⁻¹`.
    Instant { gamma: RealTensor3, solve: RealTensor3 },
    /// `χ(jh)` for `j = 0..=window`.
    Memory { chi: Vec<RealTensor3> },
}

struct Integrator {
    m: f64,
    k: f64,
    h: f64,
    n_steps: usize,
    record_every: usize,
    friction: Friction,
}

impl Integrator {
    fn new(cfg: &SimulationConfig) -> Self {
        let m = cfg.particle.mass;
        let h = cfg.dt;
        let friction = match &cfg.model {
            SusceptibilityModel::Ohmic { gamma } => {
                let a = Matrix3::identity() + gamma * (0.5 * h / m);
                Friction::Instant {
                    gamma: *gamma,
                    solve: a.try_inverse().unwrap_or_else(Matrix3::identity),
                }
            }
            model => {
                let window = ((cfg.kernel_truncation_window / h).ceil() as usize).min(cfg.n_steps);
                Friction::Memory {
                    chi: (0..=window).map(|j| model.chi_time(j as f64 * h)).collect(),
                }
            }
        };
        Integrator {
            m,
            k: m * cfg.particle.omega0 * cfg.particle.omega0,
            h,
            n_steps: cfg.n_steps,
            record_every: cfg.record_every,
            friction,
        }
    }

    /// Integrate one path; `xi(n)` is the force at step `n`. Calls `record`
    /// on recorded steps and returns early with an error if it does.
    fn run<X, R>(&self, q0: Vec3, v0: Vec3, xi: X, mut record: R) -> Result<()>
    where
        X: Fn(usize) -> Vec3,
        R: FnMut(usize, &Vec3, &Vec3) -> Result<()>,
    {
        let (m, k, h) = (self.m, self.k, self.h);
        let mut q = q0;
        let mut v = v0;
        let mut acc: Vec<Vec3> = Vec::new();
        let force = |q: &Vec3, v: &Vec3, n: usize, acc: &[Vec3]| -> Vec3 {
            let mut f = xi(n) - q * k;
            match &self.friction {
                Friction::Instant { gamma, .. } => f -= gamma * v,
                Friction::Memory { chi } => f -= memory(chi, n, h, &v0, acc),
            }
            f / m
        };
        let mut a = force(&q, &v, 0, &acc);
        if let Friction::Memory { .. } = self.friction {
            acc.reserve(self.n_steps + 1);
            acc.push(a);
        }
        record(0, &q, &v)?;
        for n in 1..=self.n_steps {
            let v_half = v + a * (0.5 * h);
            q += v_half * h;
            match &self.friction {
                Friction::Instant { gamma, solve } => {
                    let rest = xi(n) - q * k;
                    v = solve * (v_half + rest * (0.5 * h / m));
                    a = (rest - gamma * v) / m;
                }
                Friction::Memory { .. } => {
                    a = force(&q, &v, n, &acc);
                    v = v_half + a * (0.5 * h);
                    acc.push(a);
                }
            }
            if n % self.record_every == 0 {
                record(n, &q, &v)?;
            }
        }
        Ok(())
    }
}

/// `χ(t_n)v(0) + ∫₀^{t_n} χ(t_n − t′) q̈(t′) dt′` by the trapezoid rule over
/// the window; the `t′ = t_n` end carries `χ(0) = 0`.
fn memory(chi: &[RealTensor3], n: usize, h: f64, v0: &Vec3, acc: &[Vec3]) -> Vec3 {
    let w = chi.len() - 1;
    let mut sum = Vec3::zeros();
    if n == 0 {
        return sum;
    }
    if n <= w {
        sum += chi[n] * v0;
        let mut conv = chi[n] * acc[0] * 0.5;
        for j in 1..n {
            conv += chi[n - j] * acc[j];
        }
        sum += conv * h;
    } else {
        let mut conv = Vec3::zeros();
        for j in n - w..n {
            conv += chi[n - j] * acc[j];
        }
        sum += conv * h;
    }
    sum
}

/// Run the ensemble; paths are independent and bit-reproducible per seed.
pub fn simulate(config: &SimulationConfig) -> Result<TrajectoryEnsemble> {
    config.validate()?;
    let integ = Integrator::new(config);
    stability_probe(config, &integ)?;
    let synth = NoiseSynthesizer::new(&config.model, &config.bath, config.dt, config.n_steps + 1, config.seed)?;
    let p = &config.particle;
    let spread = matrix_sqrt_psd(&p.momentum_covariance(&config.bath)?)?;
    let steps: Vec<usize> = (0..=config.n_steps).step_by(config.record_every).collect();
    let n_rec = steps.len();
    let per_path: Vec<(Vec<Vec3>, Vec<Vec3>)> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let noise = synth.path(i);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ MOMENTUM_STREAM_SALT);
            rng.set_stream(i);
            let z = Vec3::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let p0 = p.p0 + spread * z;
            let mut qs = Vec::with_capacity(n_rec);
            let mut vs = Vec::with_capacity(n_rec);
            integ.run(
                p.q0,
                p0 / p.mass,
                |n| Vec3::from(noise[n]),
                |_, q, v| {
                    qs.push(*q);
                    vs.push(*v);
                    Ok(())
                },
            )?;
            Ok((qs, vs))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut positions = Vec::with_capacity(n_rec * config.n_paths);
    let mut velocities = Vec::with_capacity(n_rec * config.n_paths);
    for (q, v) in per_path {
        positions.extend(q);
        velocities.extend(v);
    }
    Ok(TrajectoryEnsemble {
        dt: config.dt,
        record_every: config.record_every,
        n_paths: config.n_paths,
        steps,
        positions,
        velocities,
    })
}

/// Noise-free run; mechanical energy of a passive system cannot grow, so
/// growth beyond 10× signals an unstable step.
fn stability_probe(config: &SimulationConfig, integ: &Integrator) -> Result<()> {
    let p = &config.particle;
    let (m, w0) = (p.mass, p.omega0);
    let energy = |q: &Vec3, v: &Vec3| 0.5 * m * (v.norm_squared() + w0 * w0 * q.norm_squared());
    let (mut q0, mut v0) = (p.q0, p.p0 / m);
    if energy(&q0, &v0) == 0.0 {
        q0 = Vec3::zeros();
        v0 = Vec3::repeat(1.0 / 3f64.sqrt());
    }
    let e0 = energy(&q0, &v0);
    integ.run(q0, v0, |_| Vec3::zeros(), |n, q, v| {
        let e = energy(q, v);
        if !(e <= 10.0 * e0) {
            return Err(Error::StepSize(format!(
                "noise-free energy grew from {e0:e} to {e:e} by step {n}; reduce dt"
            )));
        }
        Ok(())
    })
}

/// Noise-free trajectory from the particle's mean initial state, every step.
pub fn mean_trajectory(config: &SimulationConfig) -> Result<Vec<(Vec3, Vec3)>> {
    config.validate()?;
    let integ = Integrator::new(config);
    let p = &config.particle;
    let mut out = Vec::with_capacity(config.n_steps / config.record_every + 1);
    integ.run(p.q0, p.p0 / p.mass, |_| Vec3::zeros(), |_, q, v| {
        out.push((*q, *v));
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsdEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Sample mean and standard error of `|q(t) − q(t′)|²` across paths.
pub fn ensemble_msd(ensemble: &TrajectoryEnsemble, t: f64, t_prime: f64) -> Result<MsdEstimate> {
    let (a, b) = (ensemble.record_index(t)?, ensemble.record_index(t_prime)?);
    let vals: Vec<f64> = (0..ensemble.n_paths)
        .map(|p| (ensemble.position(p, a) - ensemble.position(p, b)).norm_squared())
        .collect();
    Ok(mean_and_error(&vals))
}

/// Mean and standard error with pairwise summation.
pub fn mean_and_error(vals: &[f64]) -> MsdEstimate {
    let n = vals.len() as f64;
    let mean = pairwise_sum(vals) / n;
    if vals.len() < 2 {
        return MsdEstimate { mean, std_error: 0.0 };
    }
    let dev: Vec<f64> = vals.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    MsdEstimate {
        mean,
        std_error: (var / n).sqrt(),
    }
}

pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        x.iter().sum()
    } else {
        let mid = x.len() / 2;
        pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{msd_free, propagators};
    use crate::numerics::{InverseLaplaceSpec, QuadratureSpec};
    use approx::assert_relative_eq;

    fn ohmic(g: f64) -> SusceptibilityModel {
        SusceptibilityModel::ohmic_isotropic(g).unwrap()
    }

    fn cold() -> BathState {
        BathState::classical(0.0)
    }

    #[test]
    fn symplectic_limit_conserves_energy() {
        let w0 = 1.0;
        let mut p = ParticleSpec::oscillator(1.0, w0);
        p.q0 = Vec3::new(1.0, 0.0, 0.0);
        p.p_second_moment = Some(Matrix3::zeros());
        let cfg = SimulationConfig::new(ohmic(0.0), p, cold(), 1e-3 / w0, 10_000, 1, 1);
        let traj = mean_trajectory(&cfg).unwrap();
        let e = |(q, v): &(Vec3, Vec3)| 0.5 * (v.norm_squared() + q.norm_squared());
        let e0 = e(&traj[0]);
        let drift = traj.iter().map(|s| (e(s) - e0).abs() / e0).fold(0.0, f64::max);
        assert!(drift < 1e-4, "{drift}");
    }

    #[test]
    fn ohmic_velocity_decay() {
        let (g, m) = (1.5, 2.0);
        let mut p = ParticleSpec::free(m);
        p.p0 = Vec3::new(2.0, -1.0, 0.5);
        p.p_second_moment = Some(p.p0 * p.p0.transpose());
        let cfg = SimulationConfig::new(ohmic(g), p.clone(), cold(), 1e-3, 5000, 1, 1);
        let traj = mean_trajectory(&cfg).unwrap();
        for (n, (_, v)) in traj.iter().enumerate().step_by(500) {
            let e = p.p0 / m * (-g * n as f64 * 1e-3 / m).exp();
            assert!((v - e).norm() <= 1e-4 * e.norm(), "{n}");
        }
    }

    #[test]
    fn ballistic_msd_is_exact() {
        let mut p = ParticleSpec::free(2.0);
        p.p0 = Vec3::new(1.0, 2.0, -2.0);
        p.p_second_moment = Some(p.p0 * p.p0.transpose());
        let cfg = SimulationConfig::new(ohmic(0.0), p.clone(), cold(), 0.01, 200, 3, 5);
        let ens = simulate(&cfg).unwrap();
        let est = ensemble_msd(&ens, 1.5, 0.5).unwrap();
        assert_relative_eq!(est.mean, (p.p0 / 2.0).norm_squared(), max_relative = 1e-12);
        assert!(est.std_error < 1e-12);
        let same = ensemble_msd(&ens, 1.0, 1.0).unwrap();
        assert_eq!((same.mean, same.std_error), (0.0, 0.0));
    }

    #[test]
    fn off_grid_time_is_refused() {
        let mut cfg = SimulationConfig::new(ohmic(1.0), ParticleSpec::free(1.0), BathState::classical(1.0), 0.01, 100, 2, 1);
        cfg.record_every = 10;
        let ens = simulate(&cfg).unwrap();
        assert!(matches!(ensemble_msd(&ens, 0.05, 0.0), Err(Error::Domain(_))));
        assert!(matches!(ensemble_msd(&ens, 2.0, 0.0), Err(Error::Domain(_))));
        assert!(ensemble_msd(&ens, 0.3, 0.1).is_ok());
    }

    #[test]
    fn seed_determinism() {
        let m = SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.8).unwrap();
        let cfg = SimulationConfig::new(m, ParticleSpec::free(1.0), BathState::classical(1.0), 0.02, 300, 4, 9);
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 10;
        assert_ne!(simulate(&cfg).unwrap(), simulate(&other).unwrap());
    }

    #[test]
    fn unstable_step_is_reported() {
        let cfg = SimulationConfig::new(ohmic(0.0), ParticleSpec::oscillator(1.0, 1.0), cold(), 2.5, 100, 1, 1);
        assert!(matches!(simulate(&cfg), Err(Error::StepSize(_))));
    }

    #[test]
    fn config_validation() {
        let m = SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.5).unwrap();
        let mut cfg = SimulationConfig::new(m, ParticleSpec::free(1.0), BathState::classical(1.0), 0.01, 10_000, 1, 1);
        assert_relative_eq!(cfg.kernel_truncation_window, 8.0 * 4.0);
        cfg.kernel_truncation_window = 10.0;
        assert!(cfg.validate().unwrap_err().is_validation());
        let mut q = cfg.clone();
        q.kernel_truncation_window = 32.0;
        q.bath = BathState::quantum(1.0);
        assert!(matches!(q.validate(), Err(Error::Unsupported(_))));
        let mut z = q.clone();
        z.bath = BathState::classical(1.0);
        z.dt = 0.0;
        assert!(z.validate().is_err());
    }

    #[test]
    fn memory_scheme_is_second_order() {
        // Noise-free Lorentz oscillator against the inverse-Laplace propagators.
        let model = SusceptibilityModel::lorentz_isotropic(0.8, 1.7, 0.6).unwrap();
        let mut p = ParticleSpec::oscillator(1.0, 1.1);
        p.q0 = Vec3::new(1.0, 0.0, 0.0);
        p.p0 = Vec3::new(0.0, 0.5, 0.0);
        let t_end = 6.0;
        let set = propagators(&model, &p, &[t_end], &InverseLaplaceSpec::default()).unwrap();
        let exact = set.mean_position()[0];
        let err = |h: f64| {
            let n = (t_end / h).round() as usize;
            let mut cfg = SimulationConfig::new(model.clone(), p.clone(), cold(), h, n, 1, 1);
            cfg.kernel_truncation_window = t_end;
            (mean_trajectory(&cfg).unwrap()[n].0 - exact).norm()
        };
        let (e1, e2, e3) = (err(0.04), err(0.02), err(0.01));
        let s1 = (e1 / e2).log2();
        let s2 = (e2 / e3).log2();
        assert!(s1 >= 1.9 && s2 >= 1.9, "{e1} {e2} {e3}");
    }

    #[test]
    fn equipartition_and_msd() {
        let (g, m, kt) = (1.0, 1.0, 1.0);
        let mut cfg = SimulationConfig::new(ohmic(g), ParticleSpec::free(m), BathState::classical(kt), 0.01, 500, 2000, 3);
        cfg.record_every = 100;
        let ens = simulate(&cfg).unwrap();
        let last = ens.n_records() - 1;
        let vx: Vec<f64> = (0..ens.n_paths).map(|p| ens.velocity(p, last)[0].powi(2)).collect();
        let est = mean_and_error(&vx);
        assert!((est.mean - kt / m).abs() < 3.0 * est.std_error, "{est:?}");
        let spec = QuadratureSpec::with_tolerances(1e-12, 1e-9);
        let est = ensemble_msd(&ens, 5.0, 1.0).unwrap();
        let exact = msd_free(&ohmic(g), &BathState::classical(kt), &ParticleSpec::free(m), 5.0, 1.0, &spec).unwrap();
        assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{est:?} vs {exact}");
    }

    #[test]
    fn lorentz_msd_matches_analytic() {
        let model = SusceptibilityModel::lorentz_isotropic(1.5, 1.2, 0.8).unwrap();
        let b = BathState::classical(0.9);
        let p = ParticleSpec::free(1.0);
        let mut cfg = SimulationConfig::new(model.clone(), p.clone(), b, 0.01, 600, 3000, 21);
        cfg.record_every = 100;
        let ens = simulate(&cfg).unwrap();
        let spec = QuadratureSpec::with_tolerances(1e-10, 1e-8);
        for &(t, tp) in &[(2.0, 0.0), (6.0, 3.0)] {
            let est = ensemble_msd(&ens, t, tp).unwrap();
            let exact = msd_free(&model, &b, &p, t, tp, &spec).unwrap();
            assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{est:?} vs {exact}");
        }
    }

    #[test]
    fn anisotropic_slopes() {
        let gammas = Vec3::new(0.5, 1.0, 2.0);
        let model = SusceptibilityModel::ohmic(Matrix3::from_diagonal(&gammas)).unwrap();
        let mut cfg = SimulationConfig::new(model, ParticleSpec::free(1.0), BathState::classical(1.0), 0.01, 2000, 1000, 11);
        cfg.record_every = 500;
        let ens = simulate(&cfg).unwrap();
        for axis in 0..3 {
            let vals: Vec<f64> = (0..ens.n_paths)
                .map(|p| (ens.position(p, 4)[axis] - ens.position(p, 2)[axis]).powi(2))
                .collect();
            let est = mean_and_error(&vals);
            // Per-axis MSD over [10, 20] from the Ohmic oracle.
            let k = gammas[axis];
            let exact = msd_free(
                &SusceptibilityModel::ohmic_isotropic(k).unwrap(),
                &BathState::classical(1.0),
                &ParticleSpec::free(1.0),
                20.0,
                10.0,
                &QuadratureSpec::with_tolerances(1e-12, 1e-9),
            )
            .unwrap()
                / 3.0;
            assert!((est.mean - exact).abs() < 3.0 * est.std_error, "axis {axis}: {est:?} vs {exact}");
        }
    }

    #[test]
    fn pairwise_sum_matches() {
        let x: Vec<f64> = (0..1000).map(|k| k as f64 * 0.1).collect();
        assert_relative_eq!(pairwise_sum(&x), 49950.0, max_relative = 1e-14);
    }
}
