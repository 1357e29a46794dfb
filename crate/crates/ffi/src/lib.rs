//! C ABI over `dissipon`.
//!
//! Every function returns a [`DsStatus`]; on failure the message is kept per
//! thread and read with [`ds_last_error_message`]. Tensors cross the boundary
//! as 9 doubles in row-major order. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use dissipon::cherenkov::{self, ChargedParticle, CherenkovConfig, Permittivity};
use dissipon::dynamics::{self, MsdEvaluator, ParticleSpec};
use dissipon::langevin_sim::{self, SimulationConfig, TrajectoryEnsemble};
use dissipon::medium::{LorentzAxis, SusceptibilityModel};
use dissipon::noise::{self, BathMode, BathState};
use dissipon::numerics::{InverseLaplaceSpec, QuadratureSpec};
use dissipon::rates::{self, OscillatorState, TwoLevelAtom};
use dissipon::tensor::{ComplexTensor3, Vec3};
use dissipon::units::UnitSystem;
use dissipon::Error;
use nalgebra::Matrix3;
use num_complex::Complex64;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Validation = 3,
    NonPassive = 4,
    NotPsd = 5,
    Unsupported = 6,
    Accuracy = 7,
    Divergence = 8,
    ContourSingularity = 9,
    NearSingular = 10,
    StepSize = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for DsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => DsStatus::Domain,
            Error::Validation(_) => DsStatus::Validation,
            Error::NonPassive { .. } => DsStatus::NonPassive,
            Error::NotPsd { .. } => DsStatus::NotPsd,
            Error::Unsupported(_) => DsStatus::Unsupported,
            Error::Accuracy { .. } => DsStatus::Accuracy,
            Error::Divergence(_) => DsStatus::Divergence,
            Error::ContourSingularity { .. } => DsStatus::ContourSingularity,
            Error::NearSingular { .. } => DsStatus::NearSingular,
            Error::StepSize(_) => DsStatus::StepSize,
            Error::Io(_) => DsStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type Outcome = Result<(), Fail>;

fn guard<F: FnOnce() -> Outcome>(f: F) -> DsStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DsStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            DsStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            DsStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic");
            DsStatus::Panic
        }
    }
}

/// Message of the last failed call on this thread; empty after success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!(),
    };
    VERSION.as_ptr()
}

unsafe fn read<'a, T>(p: *const T, n: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn write<'a, T>(p: *mut T, n: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn matrix(p: *const f64, what: &'static str) -> Result<Matrix3<f64>, Fail> {
    Ok(Matrix3::from_row_slice(read(p, 9, what)?))
}

fn store(m: &Matrix3<f64>, out: &mut [f64]) {
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = m[(i, j)];
        }
    }
}

fn vec3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Susceptibility model handle.
pub struct DsModel(SusceptibilityModel);

/// Simulated trajectory ensemble handle.
pub struct DsEnsemble(TrajectoryEnsemble);

/// Bath temperature and statistics; `quantum` is 0 or 1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DsBath {
    pub temperature: f64,
    pub quantum: i32,
    pub hbar: f64,
    pub kb: f64,
}

impl DsBath {
    fn to_state(self) -> Result<BathState, Fail> {
        let units = UnitSystem {
            hbar: self.hbar,
            kb: self.kb,
            ..Default::default()
        };
        let mode = if self.quantum != 0 { BathMode::Quantum } else { BathMode::Classical };
        Ok(BathState::new(self.temperature, mode, &units)?)
    }
}

/// Brownian particle; `omega0 = 0` for a free particle. The initial
/// momentum spread is thermal about `p0`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DsParticle {
    pub mass: f64,
    pub omega0: f64,
    pub q0: [f64; 3],
    pub p0: [f64; 3],
}

impl DsParticle {
    fn to_spec(self) -> ParticleSpec {
        ParticleSpec {
            q0: vec3(&self.q0),
            p0: vec3(&self.p0),
            ..ParticleSpec::oscillator(self.mass, self.omega0)
        }
    }
}

/// Moving charge for Cherenkov spectra.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DsCharge {
    pub mass: f64,
    pub charge: f64,
    pub speed: f64,
    pub direction: [f64; 3],
}

fn boxed(m: SusceptibilityModel, out: *mut *mut DsModel) -> Outcome {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(DsModel(m))) };
    Ok(())
}

/// Ohmic model from a symmetric friction tensor.
///
/// # Safety
/// `gamma` points to 9 doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ds_model_ohmic(gamma: *const f64, out: *mut *mut DsModel) -> DsStatus {
    guard(|| boxed(SusceptibilityModel::ohmic(matrix(gamma, "gamma")?)?, out))
}

/// Lorentz model with per-axis `beta`, `nu`, `gamma` (3 each) and principal
/// axes given by the columns of `rotation` (9 doubles, or null for identity).
///
/// # Safety
/// Array arguments point to the stated number of doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ds_model_lorentz(
    beta: *const f64,
    nu: *const f64,
    gamma: *const f64,
    rotation: *const f64,
    out: *mut *mut DsModel,
) -> DsStatus {
    guard(|| {
        let (b, n, g) = (read(beta, 3, "beta")?, read(nu, 3, "nu")?, read(gamma, 3, "gamma")?);
        let rot = if rotation.is_null() {
            Matrix3::identity()
        } else {
            matrix(rotation, "rotation")?
        };
        let axes = [0, 1, 2].map(|i| LorentzAxis::new(b[i], n[i], g[i]));
        boxed(SusceptibilityModel::lorentz(axes, rot)?, out)
    })
}

/// Tabulated Im χ: `n` frequencies and `9n` row-major samples.
///
/// # Safety
/// `omega` has `n` entries, `samples` has `9n`; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ds_model_tabulated(
    omega: *const f64,
    samples: *const f64,
    n: usize,
    out: *mut *mut DsModel,
) -> DsStatus {
    guard(|| {
        let w = read(omega, n, "omega")?.to_vec();
        let s = read(samples, 9 * n, "samples")?;
        let mats = s.chunks(9).map(Matrix3::from_row_slice).collect();
        boxed(SusceptibilityModel::tabulated(w, mats)?, out)
    })
}

/// # Safety
/// `model` is null or a handle from a `ds_model_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ds_model_free(model: *mut DsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `Im χ(ω)`.
///
/// # Safety
/// `model` is a live handle; `out` has room for 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_model_im_chi(model: *const DsModel, omega: f64, out: *mut f64) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        store(&m.im_chi(omega)?, write(out, 9, "out")?);
        Ok(())
    })
}

/// `χ(ω)` split into real and imaginary parts.
///
/// # Safety
/// `model` is a live handle; `re` and `im` have room for 9 doubles each.
#[no_mangle]
pub unsafe extern "C" fn ds_model_chi_frequency(model: *const DsModel, omega: f64, re: *mut f64, im: *mut f64) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let c = m.chi_frequency(omega)?;
        store(&c.map(|z| z.re), write(re, 9, "re")?);
        store(&c.map(|z| z.im), write(im, 9, "im")?);
        Ok(())
    })
}

/// `χ(t)`.
///
/// # Safety
/// `model` is a live handle; `out` has room for 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_model_chi_time(model: *const DsModel, t: f64, out: *mut f64) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        store(&m.chi_time(t), write(out, 9, "out")?);
        Ok(())
    })
}

/// `Re χ(ω)` from Im χ by the Kramers–Kronig principal value.
///
/// # Safety
/// `model` is a live handle; `out` has room for 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_model_re_chi_kk(model: *const DsModel, omega: f64, out: *mut f64) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        store(&m.re_chi_kk(omega)?, write(out, 9, "out")?);
        Ok(())
    })
}

fn quad_spec(cutoff: f64) -> QuadratureSpec {
    let s = QuadratureSpec::default();
    if cutoff > 0.0 {
        s.with_cutoff(cutoff)
    } else {
        s
    }
}

/// Noise power spectrum `ζ(ω)`.
///
/// # Safety
/// `model` and `bath` are valid; `out` has room for 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_noise_spectrum(
    model: *const DsModel,
    bath: *const DsBath,
    omega: f64,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let b = deref(bath, "bath")?.to_state()?;
        store(&noise::noise_spectrum(m, &b, omega)?, write(out, 9, "out")?);
        Ok(())
    })
}

/// Symmetrized noise correlation `ζ(τ)`; `cutoff <= 0` means none.
///
/// # Safety
/// `model` and `bath` are valid; `out` has room for 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_noise_correlation(
    model: *const DsModel,
    bath: *const DsBath,
    tau: f64,
    cutoff: f64,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let b = deref(bath, "bath")?.to_state()?;
        store(&noise::noise_correlation_with(m, &b, tau, &quad_spec(cutoff))?, write(out, 9, "out")?);
        Ok(())
    })
}

/// `η(t)` and `η̇(t)` at `n` increasing times, 9 doubles per time.
///
/// # Safety
/// `times` has `n` entries; `eta` and `eta_dot` have room for `9n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_propagators(
    model: *const DsModel,
    particle: *const DsParticle,
    times: *const f64,
    n: usize,
    eta: *mut f64,
    eta_dot: *mut f64,
) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let p = deref(particle, "particle")?.to_spec();
        let t = read(times, n, "times")?;
        let set = dynamics::propagators(m, &p, t, &InverseLaplaceSpec::default())?;
        let (e, d) = (write(eta, 9 * n, "eta")?, write(eta_dot, 9 * n, "eta_dot")?);
        for i in 0..n {
            store(&set.eta[i], &mut e[9 * i..9 * i + 9]);
            store(&set.eta_dot[i], &mut d[9 * i..9 * i + 9]);
        }
        Ok(())
    })
}

/// `⟨|q(t) − q(t′)|²⟩` for a free particle; `cutoff <= 0` means none.
///
/// # Safety
/// Pointers are valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ds_msd(
    model: *const DsModel,
    bath: *const DsBath,
    particle: *const DsParticle,
    t: f64,
    t_prime: f64,
    cutoff: f64,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let b = deref(bath, "bath")?.to_state()?;
        let p = deref(particle, "particle")?.to_spec();
        let v = MsdEvaluator::new(m, &b, &p, t.max(t_prime), &quad_spec(cutoff))?.msd(t, t_prime)?;
        *write(out, 1, "out")?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// Monte Carlo ensemble of classical Langevin paths.
///
/// # Safety
/// Pointers are valid; `out` is writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ds_simulate(
    model: *const DsModel,
    bath: *const DsBath,
    particle: *const DsParticle,
    dt: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    record_every: usize,
    out: *mut *mut DsEnsemble,
) -> DsStatus {
    guard(|| {
        let m = deref(model, "model")?.0.clone();
        let b = deref(bath, "bath")?.to_state()?;
        let p = deref(particle, "particle")?.to_spec();
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let mut cfg = SimulationConfig::new(m, p, b, dt, n_steps, n_paths, seed);
        cfg.record_every = record_every;
        let ens = langevin_sim::simulate(&cfg)?;
        *out = Box::into_raw(Box::new(DsEnsemble(ens)));
        Ok(())
    })
}

/// # Safety
/// `ens` is null or a handle from [`ds_simulate`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ds_ensemble_free(ens: *mut DsEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Number of recorded time points.
///
/// # Safety
/// `ens` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ds_ensemble_n_records(ens: *const DsEnsemble, out: *mut usize) -> DsStatus {
    guard(|| {
        let e = &deref(ens, "ensemble")?.0;
        *write(out, 1, "out")?.first_mut().unwrap() = e.n_records();
        Ok(())
    })
}

/// Position of `path` at `record`.
///
/// # Safety
/// `ens` is a live handle; `out` has room for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_ensemble_position(ens: *const DsEnsemble, path: usize, record: usize, out: *mut f64) -> DsStatus {
    guard(|| {
        let e = &deref(ens, "ensemble")?.0;
        if path >= e.n_paths || record >= e.n_records() {
            return Err(Error::Domain(format!(
                "path {path} / record {record} out of range ({} paths, {} records)",
                e.n_paths,
                e.n_records()
            ))
            .into());
        }
        let q = e.position(path, record);
        write(out, 3, "out")?.copy_from_slice(q.as_slice());
        Ok(())
    })
}

/// Sample mean and standard error of `|q(t) − q(t′)|²`.
///
/// # Safety
/// `ens` is a live handle; `mean` and `std_error` are writable.
#[no_mangle]
pub unsafe extern "C" fn ds_ensemble_msd(
    ens: *const DsEnsemble,
    t: f64,
    t_prime: f64,
    mean: *mut f64,
    std_error: *mut f64,
) -> DsStatus {
    guard(|| {
        let e = &deref(ens, "ensemble")?.0;
        let m = langevin_sim::ensemble_msd(e, t, t_prime)?;
        *write(mean, 1, "mean")?.first_mut().unwrap() = m.mean;
        *write(std_error, 1, "std_error")?.first_mut().unwrap() = m.std_error;
        Ok(())
    })
}

/// Up and down rates out of oscillator level `n` along axis `mode` (1..=3).
///
/// # Safety
/// Pointers are valid; `up` and `down` are writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ds_oscillator_rates(
    model: *const DsModel,
    bath: *const DsBath,
    mode: u32,
    n: u32,
    mass: f64,
    omega0: f64,
    up: *mut f64,
    down: *mut f64,
) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let b = deref(bath, "bath")?.to_state()?;
        let s = OscillatorState {
            mode: mode as usize,
            quantum_number: n,
            mass,
            omega0,
        };
        let r = rates::oscillator_rates(m, &s, &b)?;
        *write(up, 1, "up")?.first_mut().unwrap() = r.up_rate;
        *write(down, 1, "down")?.first_mut().unwrap() = r.down_rate;
        Ok(())
    })
}

/// Decay constant and level shift of a two-level atom with dipole
/// `dipole_re + i dipole_im` (3 each; `dipole_im` may be null).
///
/// # Safety
/// Pointers are valid; `gamma` and `shift` are writable.
#[no_mangle]
pub unsafe extern "C" fn ds_decay_and_shift(
    model: *const DsModel,
    omega0: f64,
    dipole_re: *const f64,
    dipole_im: *const f64,
    hbar: f64,
    gamma: *mut f64,
    shift: *mut f64,
) -> DsStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let re = read(dipole_re, 3, "dipole_re")?;
        let im = if dipole_im.is_null() { &[0.0; 3][..] } else { read(dipole_im, 3, "dipole_im")? };
        let q = [0, 1, 2].map(|i| Complex64::new(re[i], im[i]));
        let units = UnitSystem {
            hbar,
            ..Default::default()
        };
        let atom = TwoLevelAtom::new(omega0, q.into(), &units)?;
        let g = rates::decay_constant(m, &atom)?;
        let d = rates::level_shift(m, &atom)?;
        *write(gamma, 1, "gamma")?.first_mut().unwrap() = g;
        *write(shift, 1, "shift")?.first_mut().unwrap() = d;
        Ok(())
    })
}

/// Cherenkov power spectrum at `n` increasing frequencies. The medium is
/// `model` (ε = I + χ) when non-null, otherwise the constant
/// `eps_re + i eps_im` (9 doubles each). Writes `n` densities and the
/// trapezoid total.
///
/// # Safety
/// Pointers are valid for the stated sizes; `density` has room for `n`
/// doubles and `total` is writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ds_cherenkov_spectrum(
    model: *const DsModel,
    eps_re: *const f64,
    eps_im: *const f64,
    charge: *const DsCharge,
    omega: *const f64,
    n: usize,
    density: *mut f64,
    total: *mut f64,
) -> DsStatus {
    guard(|| {
        let perm = match model.as_ref() {
            Some(m) => Permittivity::Medium(m.0.clone()),
            None => {
                let (re, im) = (matrix(eps_re, "eps_re")?, matrix(eps_im, "eps_im")?);
                Permittivity::Constant(ComplexTensor3::from_fn(|i, j| Complex64::new(re[(i, j)], im[(i, j)])))
            }
        };
        let c = deref(charge, "charge")?;
        let particle = ChargedParticle {
            mass: c.mass,
            charge: c.charge,
            speed: c.speed,
            direction: vec3(&c.direction),
        };
        let cfg = CherenkovConfig::new(particle, perm, read(omega, n, "omega")?.to_vec());
        let s = cherenkov::radiation_intensity(&cfg)?;
        write(density, n, "density")?.copy_from_slice(&s.power_density);
        *write(total, 1, "total")?.first_mut().unwrap() = s.total_power;
        Ok(())
    })
}
