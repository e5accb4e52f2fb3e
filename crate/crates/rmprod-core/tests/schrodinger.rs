use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use rmprod_core::invariant_measure::ModelParams;
use rmprod_core::lyapunov::{lyapunov_exact, lyapunov_integer};
use rmprod_core::schrodinger::*;
use rmprod_core::simulate::{furstenberg_estimate, random_matrix, CoefficientLaw, RngStream};
use rmprod_core::{Complex64, QuadratureConfig};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn rate_is_right_angle_exponent() {
    let r = localization_rate(1.0, 1.0, &cfg()).unwrap();
    assert_eq!(r.energy, 2.0);
    assert!(!r.spectrum_note.is_empty());
    let closed = lyapunov_integer(1, 1.0, FRAC_PI_2, &cfg()).unwrap().value;
    assert!((r.rate - closed).abs() < 1e-10);
    let minus = lyapunov_exact(&ModelParams::new(1.0, 1.0, -FRAC_PI_2).unwrap(), &cfg()).unwrap().value;
    assert!((r.rate - minus).abs() < 1e-14);
    assert!(localization_rate(0.0, 1.0, &cfg()).is_err());
}

#[test]
fn constant_potential_growth() {
    let law = CoefficientLaw::constant(3.0).unwrap();
    let est = wavefunction_growth_with(&law, 100_000, (0.0, 1.0), &mut RngStream::new(0, 0)).unwrap();
    let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    assert!((est.value - expect).abs() < 1e-4, "{}", est.value);
}

#[test]
fn growth_matches_rate() {
    for (p, s, seed) in [(1.0, 1.0, 20u64), (2.0, 0.5, 21)] {
        let est = wavefunction_growth(p, s, 1_000_000, &mut RngStream::new(seed, 0)).unwrap();
        let rate = localization_rate(p, s, &cfg()).unwrap().rate;
        assert!((est.value - rate).abs() < 4.0 * est.std_error, "p={p}: {est:?} vs {rate}");
    }
}

#[test]
fn growth_independent_of_start() {
    let law = CoefficientLaw::gamma(1.0, 1.0).unwrap();
    let a = wavefunction_growth_with(&law, 200_000, (1.0, 0.0), &mut RngStream::new(30, 0)).unwrap();
    let b = wavefunction_growth_with(&law, 200_000, (0.0, 1.0), &mut RngStream::new(30, 0)).unwrap();
    // same potential, different start: growth rates coincide up to O(1/n)
    assert!((a.value - b.value).abs() < 1e-3, "{} vs {}", a.value, b.value);
    assert!(wavefunction_growth_with(&law, 200_000, (0.0, 0.0), &mut RngStream::new(30, 0)).is_err());
    assert!(wavefunction_growth(1.0, 1.0, 100, &mut RngStream::new(0, 0)).is_err());
}

#[test]
fn growth_agrees_with_matrix_product() {
    let (p, s) = (1.5, 0.8);
    let w = wavefunction_growth(p, s, 400_000, &mut RngStream::new(40, 0)).unwrap();
    let m = furstenberg_estimate(&ModelParams::new(p, s, FRAC_PI_2).unwrap(), 400_000, &mut RngStream::new(40, 1)).unwrap();
    let comb = (w.std_error.powi(2) + m.std_error.powi(2)).sqrt();
    assert!((w.value - m.value).abs() < 4.0 * comb);
}

proptest! {
    #[test]
    fn determinant_is_one(a in 0.0f64..1e6) {
        prop_assert_eq!(TransferMatrix::new(a).determinant(), 1.0);
    }

    #[test]
    fn rotation_conjugates_axis_matrix(a in 0.0f64..50.0) {
        // R* A(π/2) R = i·[[0, −1], [1, a]] with R = diag(i, 1)
        let m = random_matrix(a, FRAC_PI_2);
        let r = [Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)];
        let t = TransferMatrix::new(a).to_complex();
        for i in 0..2 {
            for j in 0..2 {
                let lhs = r[i].conj() * m[i][j] * r[j];
                let rhs = Complex64::new(0.0, 1.0) * t[i][j];
                prop_assert!((lhs - rhs).norm() < 1e-12 * a.max(1.0));
            }
        }
    }
}
