//! Golden-rule rates of a damped oscillator and decay constant and level
//! shift of a two-level atom embedded in the medium.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::SusceptibilityModel;
use crate::noise::BathState;
use crate::numerics::{integrate_breaks, integrate_to_infinity, pv_integral_breaks, QuadratureSpec};
use crate::tensor::{sesquilinear, CVec3};
use crate::units::UnitSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelAtom {
    pub transition_frequency: f64,
    /// Transition dipole `q₁₂ = ⟨1|q|2⟩`.
    pub dipole: CVec3,
    pub hbar: f64,
}

impl TwoLevelAtom {
    pub fn new(transition_frequency: f64, dipole: CVec3, units: &UnitSystem) -> Result<Self> {
        let a = TwoLevelAtom {
            transition_frequency,
            dipole,
            hbar: units.hbar,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transition_frequency > 0.0 && self.transition_frequency.is_finite()) {
            return Err(Error::Validation(format!(
                "transition frequency must be > 0, got {}",
                self.transition_frequency
            )));
        }
        if !(self.dipole.norm() > 0.0 && self.dipole.norm().is_finite()) {
            return Err(Error::Validation("transition dipole must be nonzero and finite".into()));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Validation("hbar must be > 0".into()));
        }
        Ok(())
    }

    /// `q* · Im χ(ω) · q`.
    fn projected(&self, model: &SusceptibilityModel, omega: f64) -> Result<f64> {
        Ok(sesquilinear(&self.dipole, &model.im_chi(omega)?, &self.dipole).re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorState {
    /// Cartesian mode `j ∈ {1, 2, 3}`.
    pub mode: usize,
    pub quantum_number: u32,
    pub mass: f64,
    pub omega0: f64,
}

impl OscillatorState {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.mode) {
            return Err(Error::Validation(format!("mode must be 1, 2 or 3, got {}", self.mode)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Validation(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::Validation(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorRates {
    pub up_rate: f64,
    pub down_rate: f64,
}

/// Transition rates out of `|n_j⟩`:
/// down `= (2ω₀²/mħ) n_j (n̄+1) Im χ_jj(ω₀)`, up `= (2ω₀²/mħ)(n_j+1) n̄ Im χ_jj(ω₀)`.
pub fn oscillator_rates(model: &SusceptibilityModel, state: &OscillatorState, bath: &BathState) -> Result<OscillatorRates> {
    state.validate()?;
    bath.validate()?;
    let w = state.omega0;
    let j = state.mode - 1;
    let im = model.im_chi(w)?[(j, j)];
    let base = 2.0 * w * w / (state.mass * bath.hbar) * im;
    let nbar = bath.occupation(w);
    let n = state.quantum_number as f64;
    Ok(OscillatorRates {
        up_rate: base * (n + 1.0) * nbar,
        down_rate: base * n * (nbar + 1.0),
    })
}

/// `Γ = (ω₀²/ħ) q* · Im χ(ω₀) · q`.
pub fn decay_constant(model: &SusceptibilityModel, atom: &TwoLevelAtom) -> Result<f64> {
    atom.validate()?;
    let w = atom.transition_frequency;
    Ok(w * w / atom.hbar * atom.projected(model, w)?.max(0.0))
}

/// `Δ = P∫₀^∞ ω² q*·Im χ(ω)·q / (πħ(ω₀ − ω)) dω`.
pub fn level_shift(model: &SusceptibilityModel, atom: &TwoLevelAtom) -> Result<f64> {
    level_shift_with(model, atom, &QuadratureSpec::with_tolerances(1e-14, 1e-10))
}

pub fn level_shift_with(model: &SusceptibilityModel, atom: &TwoLevelAtom, spec: &QuadratureSpec) -> Result<f64> {
    atom.validate()?;
    let (upper, breaks) = support(model)?;
    let w0 = atom.transition_frequency;
    let weight = |w: f64| -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        atom.projected(model, w).map_or(f64::NAN, |v| w * w * v)
    };
    let pv = if w0 < upper {
        pv_integral_breaks(|w: f64| weight(w) / (w0 - w), w0, 0.0, upper, &breaks, spec)?
    } else {
        // Pole outside the support: an ordinary integral.
        let mut pts = vec![0.0, upper];
        pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < upper));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        integrate_breaks(|w: f64| weight(w) / (w0 - w), &pts, spec)?.value
    };
    Ok(pv / (PI * atom.hbar))
}

/// Upper end of the spectral support and breakpoints; Ohmic friction has a
/// UV-divergent shift.
fn support(model: &SusceptibilityModel) -> Result<(f64, Vec<f64>)> {
    match model {
        SusceptibilityModel::Ohmic { gamma } if gamma.norm() > 0.0 => Err(Error::Divergence(
            "level shift of an Ohmic medium diverges linearly in the UV; use a Lorentz or tabulated model".into(),
        )),
        SusceptibilityModel::Tabulated(_) => Ok((model.max_frequency(), model.breakpoints())),
        _ => Ok((f64::INFINITY, model.breakpoints())),
    }
}

/// `q* · G̃(is) · q` with `G̃(z) = ∫₀^∞ ω² Im χ(ω) / (π(z − ω)) dω`, `z = is`.
pub fn memory_kernel(model: &SusceptibilityModel, atom: &TwoLevelAtom, s: Complex64) -> Result<Complex64> {
    memory_kernel_with(model, atom, s, &QuadratureSpec::with_tolerances(1e-14, 1e-11))
}

pub fn memory_kernel_with(
    model: &SusceptibilityModel,
    atom: &TwoLevelAtom,
    s: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    atom.validate()?;
    if !(s.re > 0.0 && s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Domain(format!("memory kernel needs Re s > 0, got {s}")));
    }
    let (upper, mut breaks) = support(model)?;
    let z = Complex64::i() * s;
    // Resolve the near-pole at ω = Re z on the scale Im z.
    for k in [-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0] {
        breaks.push(z.re + k * z.im);
    }
    let f = |w: f64| -> Complex64 {
        if w <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        match atom.projected(model, w) {
            Ok(v) => w * w * v / (PI * (z - w)),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    breaks.retain(|&b| b > 0.0 && b < upper);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    if upper.is_finite() {
        let mut pts = vec![0.0];
        pts.extend(breaks);
        pts.push(upper);
        Ok(integrate_breaks(f, &pts, spec)?.value)
    } else {
        Ok(integrate_to_infinity(f, &breaks, spec)?.value)
    }
}

/// Boundary value `G̃(ω₀ + i0⁺)` by Richardson extrapolation in the
/// distance from the real axis.
pub fn memory_kernel_boundary(model: &SusceptibilityModel, atom: &TwoLevelAtom) -> Result<Complex64> {
    let w0 = atom.transition_frequency;
    let eps0 = 0.05 * feature_width(model, w0);
    // z = ω₀ + iε ⇔ s = ε − iω₀.
    const LEVELS: usize = 5;
    let mut table: Vec<Complex64> = Vec::with_capacity(LEVELS);
    for k in 0..LEVELS {
        let eps = eps0 / (1u32 << k) as f64;
        table.push(memory_kernel(model, atom, Complex64::new(eps, -w0))?);
    }
    // Neville extrapolation to ε = 0 for an analytic function of ε.
    for level in 1..LEVELS {
        let factor = (1u32 << level) as f64;
        for k in (level..LEVELS).rev() {
            table[k] = (table[k] * factor - table[k - 1]) / (factor - 1.0);
        }
    }
    Ok(table[LEVELS - 1])
}

/// Smallest frequency scale over which Im χ varies near `omega`.
fn feature_width(model: &SusceptibilityModel, omega: f64) -> f64 {
    let w = match model {
        SusceptibilityModel::Ohmic { .. } => omega,
        SusceptibilityModel::Lorentz(m) => m
            .axes
            .iter()
            .filter(|a| a.beta != 0.0)
            .map(|a| 0.5 * a.gamma)
            .fold(omega, f64::min),
        SusceptibilityModel::Tabulated(t) => t
            .omega()
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(omega, f64::min),
    };
    w.min(omega)
}

/// `(Γ, Δ)` from the kernel boundary value: `Γ = −Im G̃/ħ`, `Δ = Re G̃/ħ`.
pub fn decay_and_shift_from_kernel(model: &SusceptibilityModel, atom: &TwoLevelAtom) -> Result<(f64, f64)> {
    let g = memory_kernel_boundary(model, atom)?;
    Ok((-g.im / atom.hbar, g.re / atom.hbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::LorentzAxis;
    use crate::noise::BathMode;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    fn atom(w0: f64, q: CVec3) -> TwoLevelAtom {
        TwoLevelAtom::new(w0, q, &UnitSystem::default()).unwrap()
    }

    fn xhat() -> CVec3 {
        CVec3::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }

    fn osc(n: u32) -> OscillatorState {
        OscillatorState {
            mode: 1,
            quantum_number: n,
            mass: 1.0,
            omega0: 1.0,
        }
    }

    #[test]
    fn zero_temperature_up_rate_vanishes() {
        let m = SusceptibilityModel::ohmic_isotropic(0.3).unwrap();
        let r = oscillator_rates(&m, &osc(3), &BathState::quantum(0.0)).unwrap();
        assert_eq!(r.up_rate, 0.0);
        assert_relative_eq!(r.down_rate, 2.0 * 3.0 * 0.3, max_relative = 1e-15);
        let r = oscillator_rates(&m, &osc(0), &BathState::quantum(2.0)).unwrap();
        assert_eq!(r.down_rate, 0.0);
    }

    #[test]
    fn rate_ratio_example() {
        let m = SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.5).unwrap();
        let r = oscillator_rates(&m, &osc(2), &BathState::quantum(1.0)).unwrap();
        let nbar = 1.0 / (std::f64::consts::E - 1.0);
        assert_relative_eq!(r.up_rate / r.down_rate, 3.0 * nbar / (2.0 * (nbar + 1.0)), max_relative = 1e-15);
        assert!((r.up_rate / r.down_rate - 0.55183).abs() < 5e-5);
    }

    #[test]
    fn decay_examples() {
        let m = SusceptibilityModel::ohmic(Matrix3::from_diagonal(&nalgebra::Vector3::new(0.5, 2.0, 1.0))).unwrap();
        let q = CVec3::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 3.0), Complex64::new(0.0, 0.0));
        // Im χ = γ/ω, eigenvalue 2/ω₀ along ŷ.
        let g = decay_constant(&m, &atom(2.0, q)).unwrap();
        assert_relative_eq!(g, 4.0 * 1.0 * 9.0, max_relative = 1e-14);
        let vac = SusceptibilityModel::ohmic_isotropic(0.0).unwrap();
        assert_eq!(decay_constant(&vac, &atom(2.0, q)).unwrap(), 0.0);
    }

    #[test]
    fn nondissipative_shift() {
        let (beta, nu) = (1.0, 2.0);
        let m = SusceptibilityModel::lorentz_isotropic(beta, nu, 1e-4).unwrap();
        for &w0 in &[1.0, 3.5] {
            let d = level_shift(&m, &atom(w0, xhat())).unwrap();
            let e = beta * nu / (2.0 * (w0 - nu));
            assert_relative_eq!(d, e, max_relative = 2e-3);
        }
    }

    #[test]
    fn symmetric_table_has_no_shift() {
        // ω² Im χ even about ω₀ on its support ⇒ the PV integrand is odd.
        let w0 = 2.0;
        let omega: Vec<f64> = (0..=40).map(|k| 1.0 + k as f64 * 0.05).collect();
        let samples = omega
            .iter()
            .map(|&w| Matrix3::identity() * ((1.0 - (w - w0).powi(2)) / (w * w)))
            .collect();
        let m = SusceptibilityModel::tabulated(omega, samples).unwrap();
        let spec = QuadratureSpec::with_tolerances(1e-13, 1e-10);
        let d = level_shift_with(&m, &atom(w0, xhat()), &spec).unwrap();
        assert!(d.abs() < 1e-3, "{d}");
    }

    #[test]
    fn shift_matches_refined_grid_oracle() {
        let m = SusceptibilityModel::lorentz_isotropic(1.0, 2.0, 0.1).unwrap();
        let axis = LorentzAxis { beta: 1.0, nu: 2.0, gamma: 0.1 };
        let w0 = 3.0;
        let d = level_shift(&m, &atom(w0, xhat())).unwrap();
        // Midpoint sums with ω₀ at a cell edge cancel the pole symmetrically;
        // Richardson over two resolutions.
        let oracle = |h: f64| -> f64 {
            let top = 4000.0;
            let n = (top / h) as usize;
            let mut s = 0.0;
            for k in 0..n {
                let w = (k as f64 + 0.5) * h;
                s += w * w * axis.im_chi(w) / (w0 - w);
            }
            // Tail: ω² Im χ ≈ βγ/ω, so ∫_top^∞ ω² Im χ/(ω₀−ω) ≈ −βγ/top.
            s * h - axis.beta * axis.gamma / top
        };
        let (a, b) = (oracle(4e-3), oracle(1e-3));
        let refined = (16.0 * b - a) / 15.0 / PI;
        assert_relative_eq!(d, refined, max_relative = 1e-5);
    }

    #[test]
    fn kernel_route_agrees() {
        let m = SusceptibilityModel::lorentz(
            [
                LorentzAxis { beta: 1.0, nu: 1.0, gamma: 0.2 },
                LorentzAxis { beta: 2.0, nu: 1.0, gamma: 0.2 },
                LorentzAxis { beta: 0.5, nu: 1.5, gamma: 0.4 },
            ],
            Matrix3::identity(),
        )
        .unwrap();
        let q = CVec3::new(Complex64::new(0.6, 0.1), Complex64::new(0.0, -0.7), Complex64::new(0.3, 0.0));
        for &w0 in &[0.5, 1.1, 2.5] {
            let a = atom(w0, q);
            let (g, d) = decay_and_shift_from_kernel(&m, &a).unwrap();
            assert_relative_eq!(g, decay_constant(&m, &a).unwrap(), max_relative = 1e-6);
            assert_relative_eq!(d, level_shift(&m, &a).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn kernel_errors() {
        let m = SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.2).unwrap();
        let a = atom(1.0, xhat());
        assert!(matches!(memory_kernel(&m, &a, Complex64::new(0.0, 1.0)), Err(Error::Domain(_))));
        let vac = SusceptibilityModel::ohmic_isotropic(0.0).unwrap();
        assert_eq!(memory_kernel(&vac, &a, Complex64::new(1.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let ohm = SusceptibilityModel::ohmic_isotropic(1.0).unwrap();
        assert!(matches!(level_shift(&ohm, &a), Err(Error::Divergence(_))));
    }

    #[test]
    fn validation() {
        assert!(TwoLevelAtom::new(0.0, xhat(), &UnitSystem::default()).is_err());
        assert!(TwoLevelAtom::new(1.0, CVec3::zeros(), &UnitSystem::default()).is_err());
        let m = SusceptibilityModel::ohmic_isotropic(1.0).unwrap();
        let mut s = osc(1);
        s.mode = 4;
        assert!(oscillator_rates(&m, &s, &BathState::quantum(1.0)).is_err());
        assert_eq!(BathState::quantum(1.0).mode, BathMode::Quantum);
    }

    proptest! {
        #[test]
        fn detailed_balance(n in 1u32..50, x in 0.01f64..30.0) {
            let m = SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.5).unwrap();
            let bath = BathState::quantum(1.0 / x);
            let r = oscillator_rates(&m, &osc(n), &bath).unwrap();
            let e = (n as f64 + 1.0) / n as f64 * (-1.0 / bath.kt()).exp();
            prop_assert!((r.up_rate / r.down_rate - e).abs() <= 8.0 * f64::EPSILON * e);
        }

        #[test]
        fn decay_positive_and_bilinear(
            re in prop::array::uniform3(-2.0f64..2.0),
            im in prop::array::uniform3(-2.0f64..2.0),
            lr in -3.0f64..3.0,
            li in -3.0f64..3.0,
            w0 in 0.2f64..4.0,
        ) {
            let q = CVec3::from_fn(|i, _| Complex64::new(re[i], im[i]));
            prop_assume!(q.norm() > 1e-3);
            let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1).into_inner();
            let m = SusceptibilityModel::lorentz(
                [
                    LorentzAxis { beta: 1.0, nu: 1.0, gamma: 0.3 },
                    LorentzAxis { beta: 0.2, nu: 2.0, gamma: 0.5 },
                    LorentzAxis { beta: 3.0, nu: 0.7, gamma: 0.1 },
                ],
                rot,
            ).unwrap();
            let g = decay_constant(&m, &atom(w0, q)).unwrap();
            prop_assert!(g >= 0.0);
            let lam = Complex64::new(lr, li);
            prop_assume!(lam.norm() > 1e-3);
            let g2 = decay_constant(&m, &atom(w0, q * lam)).unwrap();
            prop_assert!((g2 - lam.norm_sqr() * g).abs() <= 1e-12 * g2.max(1e-300));
        }
    }
}
