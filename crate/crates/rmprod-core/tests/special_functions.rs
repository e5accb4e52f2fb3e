use core::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use rmprod_core::quadrature::{integrate, integrate_half_line};
use rmprod_core::special_functions::*;
use rmprod_core::{Complex64, Error, QuadratureConfig};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn tight() -> QuadratureConfig {
    QuadratureConfig::new(1e-15, 1e-15, 20).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * b.norm()
}

// Reference values below were produced with mpmath at 30 significant digits.

#[test]
fn k_half_integer_closed_form() {
    let v = bessel_k(0.5, c(1.0, 0.0), &cfg()).unwrap();
    let expected = (PI / 2.0).sqrt() * (-1.0f64).exp();
    assert!((v.re - expected).abs() < 1e-14 && v.im == 0.0);
}

#[test]
fn k_one_at_two_matches_real_axis_quadrature() {
    // ½ ∫_0^∞ t^{−2} exp{−(t + 1/t)} dt
    let oracle: f64 = integrate_half_line(
        |t: f64| if t == 0.0 { 0.0 } else { 0.5 * (-(t + 1.0 / t)).exp() / (t * t) },
        0.0,
        1.0,
        &tight(),
    )
    .unwrap();
    let v = bessel_k(1.0, c(2.0, 0.0), &cfg()).unwrap();
    assert!((v.re - oracle).abs() < 1e-13 * oracle);
    assert!((v.re - 0.139_865_881_816_522_43).abs() < 1e-15);
}

#[test]
fn k_matches_reference_values() {
    let cases = [
        (1.5, Complex64::from_polar(2.0, PI / 4.0), c(-0.142_282_862_970_531_75, -0.265_720_731_254_275_14)),
        (1.0, c(0.0, 2.0), c(-0.905_917_209_595_989_6, -0.168_126_150_312_430_94)),
        (0.3, c(0.0, 5.0), c(0.487_475_530_044_856_8, 0.274_912_483_495_68)),
        (0.3, c(0.0, -5.0), c(0.487_475_530_044_856_8, -0.274_912_483_495_68)),
        (2.5, Complex64::from_polar(1e-3, 0.3), c(86_997_654.426_749_82, -81_046_722.179_840_49)),
        (30.0, c(3.0, 0.0), c(2.133_645_662_422_208_7e25, 0.0)),
        (7.25, c(0.5, 40.0), c(-0.101_287_885_899_904_55, 0.068_350_439_788_609_22)),
    ];
    for (p, z, expected) in cases {
        let v = bessel_k(p, z, &cfg()).unwrap();
        assert!(close(v, expected, 1e-11), "K_{p}({z}) = {v}, expected {expected}");
    }
    let z = Complex64::from_polar(1e5, 1.2);
    let scaled = bessel_k_scaled(0.0, z, &cfg()).unwrap();
    assert!(close(scaled, c(0.003_271_076_297_825_712_5, -0.002_237_858_103_602_128_3), 1e-11));
}

#[test]
fn conjugate_pair_on_the_real_axis() {
    let a = bessel_k(1.0, c(2.0, 0.0), &cfg()).unwrap();
    let b = bessel_k(1.0, c(2.0, -0.0), &cfg()).unwrap();
    assert_eq!(a, b.conj());
}

#[test]
fn dorder_integer_single_term() {
    let k0 = bessel_k(0.0, c(2.0, 0.0), &cfg()).unwrap();
    let d = bessel_k_dorder(1.0, c(2.0, 0.0), &cfg()).unwrap();
    assert!(close(d, k0 * 0.5, 1e-14));
}

#[test]
fn dorder_matches_richardson_difference_in_order() {
    let z = Complex64::from_polar(2.0, PI / 4.0);
    let t = tight();
    let k = |q: f64| bessel_k(q, z, &t).unwrap();
    let stencil = |h: f64| (k(1.5 - 2.0 * h) - k(1.5 + 2.0 * h) + (k(1.5 + h) - k(1.5 - h)) * 8.0) / (12.0 * h);
    let (d1, d2) = (stencil(2e-3), stencil(1e-3));
    let richardson = d2 + (d2 - d1) / 15.0;
    let v = bessel_k_dorder(1.5, z, &cfg()).unwrap();
    assert!(close(v, richardson, 1e-9), "{v} vs {richardson}");
    assert!(close(v, c(-0.170_489_419_233_022_9, -0.081_398_237_035_976_3), 1e-11));
}

#[test]
fn dorder_reference_values() {
    let cases = [
        (0.4, c(1.3, -0.8), c(0.002_941_811_046_423_667_6, 0.056_930_707_518_910_476)),
        (3.7, c(0.0, 6.0), c(-0.367_808_054_372_915, -0.015_566_217_414_908_572)),
    ];
    for (p, z, expected) in cases {
        let v = bessel_k_dorder(p, z, &cfg()).unwrap();
        assert!(close(v, expected, 1e-10), "dK_{p}({z}) = {v}");
    }
}

#[test]
fn dorder_is_odd_through_zero() {
    let z = c(1.2, 0.4);
    let small = bessel_k_dorder_scaled_quadrature(1e-7, z, &cfg()).unwrap();
    assert!(small.norm() < 1e-6);
}

#[test]
fn integer_closed_form_continuous_with_quadrature_path() {
    for n in 1..=5u32 {
        for z in [c(2.0, 0.0), Complex64::from_polar(1.5, 1.0), c(0.0, 3.0)] {
            let closed = bessel_k_dorder_scaled_integer(n, z, &cfg()).unwrap();
            for dp in [-1e-6, 1e-6] {
                let q = bessel_k_dorder_scaled(f64::from(n) + dp, z, &cfg()).unwrap();
                assert!(close(q, closed, 1e-4), "n={n} z={z}");
            }
        }
    }
}

#[test]
fn jy_half_order_zero_and_reference() {
    let (j, y) = bessel_jy(0.5, PI, &cfg()).unwrap();
    assert!(j.abs() < 1e-14);
    // Y_{1/2}(x) = −√(2/(πx)) cos x
    assert!((y - (2.0 / (PI * PI)).sqrt()).abs() < 1e-14);

    let (j, y) = bessel_jy(0.7, 10.0, &cfg()).unwrap();
    assert!((j + 0.068_071_001_225_112_83).abs() < 1e-13);
    assert!((y - 0.243_112_620_252_915_93).abs() < 1e-13);
    // J is recovered from a K value of modulus ~|Y|, so its error is
    // absolute on the scale of the Hankel function.
    let (j, y) = bessel_jy(5.5, 0.3, &cfg()).unwrap();
    let hankel = (j * j + y * y).sqrt();
    assert!((j - 1.018_072_706_515_592_7e-7).abs() < 1e-14 * hankel);
    assert!((y + 569_348.258_595_846_2).abs() < 1e-13 * hankel);
}

/// Bessel's integrals for integer order n.
fn jy_integer_oracle(n: i32, x: f64) -> (f64, f64) {
    let t = QuadratureConfig::new(1e-14, 1e-14, 20).unwrap();
    let nf = f64::from(n);
    let j: f64 = integrate(|tau: f64| (nf * tau - x * tau.sin()).cos(), 0.0, PI, &t).unwrap() / PI;
    let y1: f64 = integrate(|tau: f64| (x * tau.sin() - nf * tau).sin(), 0.0, PI, &t).unwrap() / PI;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let y2: f64 = integrate_half_line(
        |u: f64| (nf * u - x * u.sinh()).exp() + sign * (-nf * u - x * u.sinh()).exp(),
        0.0,
        1.0,
        &t,
    )
    .unwrap()
        / PI;
    (j, y1 - y2)
}

#[test]
fn jy_order_two_matches_bessel_integrals() {
    let (j, y) = bessel_jy(2.0, 2.0, &cfg()).unwrap();
    let (jo, yo) = jy_integer_oracle(2, 2.0);
    assert!((j - jo).abs() < 1e-12 && (y - yo).abs() < 1e-12);
    assert!((j - 0.352_834_028_615_637_7).abs() < 1e-14);
    assert!((y + 0.617_408_104_190_682_7).abs() < 1e-14);
}

#[test]
fn k_on_imaginary_axis_has_hankel_modulus() {
    let (j, y) = bessel_jy(1.0, 2.0, &cfg()).unwrap();
    let k = bessel_k(1.0, c(0.0, 2.0), &cfg()).unwrap();
    assert!((FRAC_PI_2 * (j * j + y * y).sqrt() - k.norm()).abs() < 1e-13);
}

#[test]
fn digamma_values() {
    let gamma = 0.577_215_664_901_532_9;
    assert!((digamma(1.0).unwrap() + gamma).abs() < 1e-15);
    assert!((digamma(2.0).unwrap() - (1.0 - gamma)).abs() < 1e-15);
    // derivative of ln Γ by a Richardson-extrapolated central difference
    let lg = |x: f64| libm::lgamma(x);
    let d = |h: f64| (lg(1.5 + h) - lg(1.5 - h)) / (2.0 * h);
    let oracle = (4.0 * d(5e-4) - d(1e-3)) / 3.0;
    let v = digamma(1.5).unwrap();
    assert!((v - oracle).abs() < 1e-9);
    assert!((v - 0.036_489_973_978_576_52).abs() < 1e-15);
    assert!((digamma(0.1).unwrap() + 10.423_754_940_411_076).abs() < 1e-13);
    assert!((digamma(33.3).unwrap() - 3.490_467_238_520_242_8).abs() < 1e-14);
    assert!(matches!(digamma(-1.0), Err(Error::Domain(_))));
}

#[test]
fn macdonald_factorization_and_cross_product() {
    let u = c(2.0, 0.0);
    let i = macdonald_integral(&MacdonaldIndex { order: 1.0, power: -1, u, v: u }, &cfg()).unwrap();
    let k = bessel_k(1.0, u, &cfg()).unwrap();
    assert!(close(i, k * k, 1e-14));

    let (u, v) = (c(2.0, 0.0), c(3.0, 0.0));
    let i0 = macdonald_integral(&MacdonaldIndex { order: 1.0, power: 0, u, v }, &cfg()).unwrap();
    let k = |p: f64, z: Complex64| bessel_k(p, z, &cfg()).unwrap();
    let cross = u * k(2.0, u) * k(1.0, v) + v * k(2.0, v) * k(1.0, u) - k(1.0, u) * k(1.0, v) * 2.0;
    assert!(close(i0, cross, 1e-13));
    assert!(close(i0, c(0.034_956_786_459_246_25, 0.0), 1e-12));
}

/// Direct quadrature of ½∫ exp{−τ/2 − (u²+v²)/(2τ)} K_p(uv/τ) τ^n dτ for uv > 0.
fn macdonald_oracle(p: f64, n: i32, u: Complex64, v: Complex64) -> Complex64 {
    let t = QuadratureConfig::new(1e-14, 1e-12, 20).unwrap();
    let uv = u * v;
    let s2 = u * u + v * v;
    integrate_half_line(
        |tau: f64| {
            if tau == 0.0 {
                return c(0.0, 0.0);
            }
            let arg = uv / tau;
            if arg.norm() > 1e6 {
                return c(0.0, 0.0);
            }
            let k = bessel_k(p, arg, &t).unwrap();
            (c(-tau / 2.0, 0.0) - s2 / (2.0 * tau)).exp() * k * tau.powi(n) * 0.5
        },
        0.0,
        1.0,
        &t,
    )
    .unwrap()
}

#[test]
fn macdonald_backward_matches_direct_quadrature() {
    let u = Complex64::from_polar(2.0, PI / 6.0);
    let v = u.conj();
    let i = macdonald_integral(&MacdonaldIndex { order: 1.0, power: -2, u, v }, &cfg()).unwrap();
    let oracle = macdonald_oracle(1.0, -2, u, v);
    assert!(close(i, oracle, 1e-9), "{i} vs {oracle}");
    assert!(close(i, c(0.008_965_214_179_101_676, 0.0), 1e-11));
    let deep = macdonald_integral(&MacdonaldIndex { order: 2.3, power: -5, u, v }, &cfg()).unwrap();
    assert!(close(deep, c(0.001_823_622_714_179_140_2, 0.0), 1e-9), "{deep}");
}

#[test]
fn macdonald_general_arguments() {
    let (u, v) = (c(1.5, 0.4), c(2.2, -0.1));
    let fwd = macdonald_integral(&MacdonaldIndex { order: 0.6, power: 2, u, v }, &cfg()).unwrap();
    assert!(close(fwd, c(4.451_616_385_276_637, -1.223_768_063_598_355_8), 1e-11), "{fwd}");
    let back = macdonald_integral(&MacdonaldIndex { order: 0.6, power: -3, u, v }, &cfg()).unwrap();
    assert!(close(back, c(0.001_662_760_709_318_678_4, -0.001_112_260_619_055_669), 1e-10), "{back}");
}

#[test]
fn macdonald_degenerate_and_inadmissible() {
    let u = c(2.0, 0.0);
    let r = macdonald_integral(&MacdonaldIndex { order: 1.0, power: -2, u, v: u }, &cfg());
    assert_eq!(r, Err(Error::DegenerateRecurrence));
    let r = macdonald_integral(&MacdonaldIndex { order: 1.0, power: -1, u: c(0.1, 2.0), v: c(0.1, 2.0) }, &cfg());
    assert!(matches!(r, Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugation_symmetry_is_exact(p in 0.0f64..20.0, r in 0.01f64..50.0, th in -FRAC_PI_2..FRAC_PI_2) {
        let z = Complex64::from_polar(r, th);
        let a = bessel_k_scaled(p, z, &cfg()).unwrap();
        let b = bessel_k_scaled(p, z.conj(), &cfg()).unwrap();
        prop_assert_eq!(a, b.conj());
    }

    #[test]
    fn bessel_recurrence_residual(p in 1.0f64..20.0, r in 0.05f64..30.0, th in -FRAC_PI_2..FRAC_PI_2) {
        let z = Complex64::from_polar(r, th);
        let k = |q: f64| bessel_k_scaled(q, z, &cfg()).unwrap();
        let (lo, mid, hi) = (k(p - 1.0), k(p), k(p + 1.0));
        let residual = (hi - mid * (2.0 * p) / z - lo).norm();
        prop_assert!(residual <= 10.0 * 1e-10 * hi.norm());
    }

    #[test]
    fn real_axis_positive_and_decreasing(p in 0.0f64..30.0, x in 0.01f64..40.0) {
        let a = bessel_k(p, c(x, 0.0), &cfg()).unwrap().re;
        let b = bessel_k(p, c(x * 1.1, 0.0), &cfg()).unwrap().re;
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
    }

    #[test]
    fn macdonald_minus_one_factorizes(p in 0.0f64..6.0, ru in 0.3f64..5.0, rv in 0.3f64..5.0, tu in -0.35f64..0.35, tv in -0.35f64..0.35) {
        let (u, v) = (Complex64::from_polar(ru, tu), Complex64::from_polar(rv, tv));
        let i = macdonald_integral(&MacdonaldIndex { order: p, power: -1, u, v }, &cfg()).unwrap();
        let kk = bessel_k(p, u, &cfg()).unwrap() * bessel_k(p, v, &cfg()).unwrap();
        prop_assert!((i - kk).norm() <= 1e-8 * kk.norm());
    }
}
