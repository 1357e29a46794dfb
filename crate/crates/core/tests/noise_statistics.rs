use approx::assert_relative_eq;
use nalgebra::{Matrix3, Rotation3};

use dissipon::medium::{LorentzAxis, SusceptibilityModel};
use dissipon::noise::{noise_correlation, sample_noise_paths, BathState, NoiseSynthesizer};

#[test]
fn white_noise_covariance_matches_ohmic_tensor() {
    let rot = Rotation3::from_euler_angles(0.3, -0.4, 0.8).into_inner();
    let gamma = rot * Matrix3::from_diagonal(&[1.0, 2.5, 0.4].into()) * rot.transpose();
    let m = SusceptibilityModel::ohmic(gamma).unwrap();
    let (kt, dt) = (0.7, 0.01);
    let ens = sample_noise_paths(&m, &BathState::classical(kt), dt, 2000, 50, 11).unwrap();
    let mut cov = Matrix3::zeros();
    for x in &ens.paths {
        let v = nalgebra::Vector3::from(*x);
        cov += v * v.transpose();
    }
    cov /= ens.paths.len() as f64;
    let expect = gamma * (2.0 * kt / dt);
    // 1e5 samples: relative error of a second moment is about 0.5%.
    assert!((cov - expect).norm() < 0.02 * expect.norm(), "{cov} vs {expect}");
}

#[test]
fn colored_noise_autocorrelation_matches_fdt() {
    let axes = [LorentzAxis::new(1.0, 1.0, 0.5), LorentzAxis::new(2.0, 0.6, 0.8), LorentzAxis::new(0.5, 1.5, 0.4)];
    let m = SusceptibilityModel::lorentz(axes, Matrix3::identity()).unwrap();
    let bath = BathState::classical(1.3);
    let (dt, n_steps, n_paths) = (0.05, 2048, 600);
    let ens = sample_noise_paths(&m, &bath, dt, n_steps, n_paths, 3).unwrap();
    let zero = noise_correlation(&m, &bath, 0.0).unwrap();
    for lag in [0usize, 10, 20, 40, 80] {
        let exact = noise_correlation(&m, &bath, lag as f64 * dt).unwrap();
        let mut est = Matrix3::zeros();
        let mut count = 0.0;
        for p in 0..n_paths {
            let path = ens.path(p);
            for n in (0..n_steps - lag).step_by(4) {
                let a = nalgebra::Vector3::from(path[n]);
                let b = nalgebra::Vector3::from(path[n + lag]);
                est += a * b.transpose();
                count += 1.0;
            }
        }
        est /= count;
        for k in 0..3 {
            let err = (est[(k, k)] - exact[(k, k)]).abs() / zero[(k, k)];
            assert!(err < 0.05, "axis {k} lag {lag}: {} vs {}", est[(k, k)], exact[(k, k)]);
        }
    }
}

#[test]
fn paths_are_reproducible_and_independent() {
    let m = SusceptibilityModel::lorentz_isotropic(1.0, 1.0, 0.3).unwrap();
    let bath = BathState::classical(1.0);
    let a = NoiseSynthesizer::new(&m, &bath, 0.1, 256, 5).unwrap();
    let b = NoiseSynthesizer::new(&m, &bath, 0.1, 256, 5).unwrap();
    assert_eq!(a.path(3), b.path(3));
    assert_ne!(a.path(3), a.path(4));
    let c = NoiseSynthesizer::new(&m, &bath, 0.1, 256, 6).unwrap();
    assert_ne!(a.path(3), c.path(3));
}

#[test]
fn quantum_bath_has_no_sample_paths() {
    let m = SusceptibilityModel::ohmic_isotropic(1.0).unwrap();
    assert!(NoiseSynthesizer::new(&m, &BathState::quantum(1.0), 0.1, 10, 0).is_err());
}

#[test]
fn classical_lorentz_zero_lag_is_kt_beta() {
    let m = SusceptibilityModel::lorentz_isotropic(2.0, 1.0, 0.3).unwrap();
    let z = noise_correlation(&m, &BathState::classical(0.5), 0.0).unwrap();
    assert_relative_eq!(z[(2, 2)], 1.0, max_relative = 1e-10);
}
