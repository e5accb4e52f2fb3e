use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};

use proptest::prelude::*;
use rand::Rng;
use rmprod_core::invariant_measure::{
    density_gig, mean, variance, AxisDensity, ConeDensity, ConePoint, DysonDensity, ModelParams,
};
use rmprod_core::lyapunov::lyapunov_exact;
use rmprod_core::quadrature::integrate;
use rmprod_core::simulate::*;
use rmprod_core::{Complex64, QuadratureConfig};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn params(p: f64, s: f64, a: f64) -> ModelParams {
    ModelParams::new(p, s, a).unwrap()
}

fn exact(p: f64, s: f64, a: f64) -> f64 {
    lyapunov_exact(&params(p, s, a), &cfg()).unwrap().value
}

/// Upper 1% point of χ² with k degrees of freedom (Wilson–Hilferty).
fn chi2_crit_1pct(k: usize) -> f64 {
    let k = k as f64;
    let z = 2.326_347_874;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

/// χ² of binned counts against expected probabilities, pooling bins with
/// expected count < 5 into their neighbors.
fn chi2(observed: &[f64], expected: &[f64], n: f64) -> (f64, usize) {
    let (mut stat, mut df) = (0.0, 0usize);
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        o_acc += o * n;
        e_acc += e * n;
        if e_acc >= 5.0 {
            stat += (o_acc - e_acc).powi(2) / e_acc;
            df += 1;
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 {
        stat += (o_acc - e_acc).powi(2) / e_acc;
        df += 1;
    }
    (stat, df - 1)
}

#[test]
fn streams_reproduce_and_differ() {
    let mut a = RngStream::new(7, 3);
    let mut b = RngStream::new(7, 3);
    let mut c = RngStream::new(7, 4);
    let xs: Vec<u64> = (0..8).map(|_| a.gen()).collect();
    let ys: Vec<u64> = (0..8).map(|_| b.gen()).collect();
    let zs: Vec<u64> = (0..8).map(|_| c.gen()).collect();
    assert_eq!(xs, ys);
    assert_ne!(xs, zs);
    assert_eq!((a.seed(), a.stream_id()), (7, 3));
    let p = params(1.0, 1.0, FRAC_PI_6);
    let e1 = furstenberg_estimate(&p, 20_000, &mut RngStream::new(11, 0)).unwrap();
    let e2 = furstenberg_estimate(&p, 20_000, &mut RngStream::new(11, 0)).unwrap();
    assert_eq!(e1.value.to_bits(), e2.value.to_bits());
    assert_eq!(e1.std_error.to_bits(), e2.std_error.to_bits());
}

#[test]
fn gamma_mean_and_exponential_cdf() {
    let n = 1_000_000;
    let mut rng = RngStream::new(1, 0);
    let law = CoefficientLaw::gamma(2.0, 3.0).unwrap();
    let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
    let m = draws.iter().sum::<f64>() / n as f64;
    let se = (2.0f64 * 9.0 / n as f64).sqrt();
    assert!((m - 6.0).abs() < 4.0 * se, "{m}");
    assert!(draws.iter().all(|x| *x > 0.0));

    let n = 200_000;
    let s = 1.7;
    let mut xs: Vec<f64> = (0..n).map(|_| sample_gamma(1.0, s, &mut rng).unwrap()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = 1.0 - (-x / s).exp();
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 1.63 / (n as f64).sqrt(), "KS {ks}");
}

#[test]
fn gamma_small_shape_histogram() {
    let (p, s, n) = (0.5, 1.0, 400_000usize);
    let mut rng = RngStream::new(1, 2);
    let edges: Vec<f64> = (0..=40).map(|i| 0.1 + 4.9 * i as f64 / 40.0).collect();
    let mut counts = vec![0.0; 42];
    for _ in 0..n {
        let x = sample_gamma(p, s, &mut rng).unwrap();
        let idx = if x < 0.1 {
            0
        } else if x >= 5.0 {
            41
        } else {
            edges.partition_point(|e| *e <= x)
        };
        counts[idx] += 1.0 / n as f64;
    }
    let dens = |x: f64| x.powf(p - 1.0) * (-x / s).exp() / (s.powf(p) * libm::tgamma(p));
    let mut expected = vec![0.0; 42];
    for i in 0..40 {
        expected[i + 1] = integrate(dens, edges[i], edges[i + 1], &cfg()).unwrap();
    }
    // mass below 0.1 by the substitution x = v², and the upper tail
    expected[0] = integrate(|v: f64| 2.0 * v * dens(v * v), 0.0, 0.1f64.sqrt(), &cfg()).unwrap();
    expected[41] = 1.0 - expected.iter().sum::<f64>();
    let (stat, df) = chi2(&counts, &expected, n as f64);
    assert!(stat < chi2_crit_1pct(df), "chi2 {stat} df {df}");
}

#[test]
fn chain_stays_in_cone() {
    let mut rng = RngStream::new(3, 0);
    let mut pick = RngStream::new(3, 1);
    for _ in 0..10 {
        let p = pick.gen_range(0.2..4.0);
        let s = pick.gen_range(0.2..4.0);
        let a = pick.gen_range(-1.5..1.5);
        let mut chain = Chain::new(&params(p, s, a), Complex64::new(1.0, 0.0)).unwrap();
        for _ in 0..1_000_000 {
            let ChainState::Cone(z) = chain.step(&mut rng) else { panic!("left the cone chain") };
            assert!(z.arg().abs() <= a.abs() + 1e-12 && z.norm() > 0.0);
        }
    }
    let run = iterate_chain(&params(1.0, 1.0, 0.0), Complex64::new(1.0, 0.0), 1000, true, &mut rng).unwrap();
    assert!(run.trajectory.unwrap().iter().all(|z| z.re > 0.0 && z.im == 0.0));
    assert!(Chain::new(&params(1.0, 1.0, 0.3), Complex64::new(0.0, 1.0)).is_err());
    assert!(Chain::new(&params(1.0, 1.0, FRAC_PI_2), Complex64::new(1.0, 0.0)).is_err());
}

#[test]
fn constant_law_reaches_fixed_point() {
    let a = 1.3;
    let law = CoefficientLaw::constant(a).unwrap();
    let mut chain = Chain::with_law(law, 0.0, Complex64::new(5.0, 0.0)).unwrap();
    let mut rng = RngStream::new(0, 0);
    for _ in 0..100 {
        chain.step(&mut rng);
    }
    let fixed = (-a + (a * a + 4.0f64).sqrt()) / 2.0;
    assert!((chain.state().to_complex().re - fixed).abs() < 1e-14);
}

#[test]
fn accumulator_matches_direct_product() {
    let mut rng = RngStream::new(4, 0);
    let law = CoefficientLaw::gamma(1.5, 2.0).unwrap();
    for n in [1usize, 5, 20] {
        let mut acc = ProductAccumulator::default();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut direct = [[one, zero], [zero, one]];
        for _ in 0..n {
            let m = random_matrix(law.sample(&mut rng), 0.7);
            acc.push(&m);
            direct = matmul(&direct, &m);
            let norm = operator_norm(&acc.matrix);
            assert!((0.5..=2.0).contains(&norm));
        }
        let scale = acc.log_scale.exp();
        for i in 0..2 {
            for j in 0..2 {
                let rebuilt = acc.matrix[i][j] * scale;
                assert!((rebuilt - direct[i][j]).norm() <= 1e-12 * direct[i][j].norm().max(1e-300), "n={n}");
            }
        }
        assert_eq!(acc.steps, n as u64);
    }
}

#[test]
fn furstenberg_closes_on_exact_values() {
    for (p, s, a, seed) in [(1.0, 1.0, 0.0, 10u64), (2.0, 0.5, FRAC_PI_2, 11)] {
        let est = furstenberg_estimate(&params(p, s, a), 1_000_000, &mut RngStream::new(seed, 0)).unwrap();
        let target = exact(p, s, a);
        assert!((est.value - target).abs() < 4.0 * est.std_error, "p={p}: {est:?} vs {target}");
        assert!(est.std_error < 5e-3);
        assert_eq!(est.n_samples, 1_000_000);
    }
    let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let law = CoefficientLaw::constant(1.0).unwrap();
    let est = product_estimate(&law, 0.0, 10_000, &mut RngStream::new(0, 0)).unwrap();
    assert!((est.value - golden).abs() < 1e-4);
    assert!(furstenberg_estimate(&params(1.0, 1.0, 0.0), 9_999, &mut RngStream::new(0, 0)).is_err());
}

#[test]
fn standard_error_scales_as_root_n() {
    let p = params(1.0, 1.0, FRAC_PI_3);
    let se: Vec<f64> = [20_000usize, 80_000, 320_000]
        .iter()
        .map(|&n| furstenberg_estimate(&p, n, &mut RngStream::new(5, n as u64)).unwrap().std_error)
        .collect();
    for w in se.windows(2) {
        let r = w[0] / w[1];
        assert!((1.4..2.8).contains(&r), "{se:?}");
    }
}

#[test]
fn product_and_ergodic_routes_agree() {
    for (p, s, a) in [(1.0, 1.0, FRAC_PI_6), (2.5, 0.5, FRAC_PI_2), (0.5, 2.0, 0.0)] {
        let mp = params(p, s, a);
        let prod = furstenberg_estimate(&mp, 300_000, &mut RngStream::new(6, 0)).unwrap();
        let erg = ergodic_lyapunov(&mp, 300_000, DEFAULT_BURN_IN, &mut RngStream::new(6, 1)).unwrap();
        let comb = (prod.std_error.powi(2) + erg.std_error.powi(2)).sqrt();
        assert!((prod.value - erg.value).abs() < 4.0 * comb, "{prod:?} {erg:?}");
    }
}

#[test]
fn chain_mean_and_variance() {
    let mp = params(1.0, 1.0, FRAC_PI_6);
    let mom = chain_moments(&mp, 100_000, DEFAULT_BURN_IN, &mut RngStream::new(8, 0)).unwrap();
    let m = mean(&mp, &cfg()).unwrap();
    assert!((mom.mean_re.value - m.re).abs() < 4.0 * mom.mean_re.std_error);
    assert!((mom.mean_im.value - m.im).abs() < 4.0 * mom.mean_im.std_error);
    let var = mom.variance();
    let v = variance(&mp, &cfg()).unwrap();
    assert!((var.value - v).abs() < 4.0 * var.std_error, "{var:?} vs {v}");
}

#[test]
fn merge_is_order_independent() {
    let e = |v: f64, se: f64, n: u64| EstimateWithError { value: v, std_error: se, n_samples: n, warning: None };
    let (a, b, c) = (e(1.0, 0.1, 100), e(2.0, 0.3, 300), e(0.5, 0.2, 50));
    let x = a.merge(&b).merge(&c);
    let y = c.merge(&a.merge(&b));
    let z = b.merge(&c).merge(&a);
    for w in [&y, &z] {
        assert!((x.value - w.value).abs() < 1e-15 && (x.std_error - w.std_error).abs() < 1e-15);
        assert_eq!(x.n_samples, w.n_samples);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn batch_means_of_constant_have_zero_error(n in 100usize..5000, c in -10.0f64..10.0) {
        let mut b = BatchMeans::new(n, DEFAULT_BATCHES).unwrap();
        for _ in 0..n {
            b.push(c);
        }
        let e = b.finish().unwrap();
        prop_assert!((e.value - c).abs() < 1e-12 * c.abs().max(1.0));
        prop_assert!(e.std_error < 1e-12 * c.abs().max(1.0));
        prop_assert_eq!(e.n_samples, n as u64);
    }

    #[test]
    fn operator_norm_bounds(entries in proptest::array::uniform8(-5.0f64..5.0)) {
        let m = [
            [Complex64::new(entries[0], entries[1]), Complex64::new(entries[2], entries[3])],
            [Complex64::new(entries[4], entries[5]), Complex64::new(entries[6], entries[7])],
        ];
        let norm = operator_norm(&m);
        let fro = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let big = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(norm <= fro * (1.0 + 1e-12) && norm >= big * (1.0 - 1e-12));
    }
}

#[test]
fn cone_histogram_matches_density() {
    let mp = params(1.0, 1.0, FRAC_PI_3);
    let grid = Grid::Cone {
        r_edges: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.5],
        theta_edges: (0..=6).map(|i| -FRAC_PI_3 + 2.0 * FRAC_PI_3 * i as f64 / 6.0).collect(),
    };
    let n = 1_000_000;
    let hist = empirical_measure(&mp, n, DEFAULT_BURN_IN, &grid, &mut RngStream::new(9, 0)).unwrap();
    assert!((hist.mass.iter().sum::<f64>() + hist.outside - 1.0).abs() < 1e-12);
    let f = ConeDensity::new(mp, &cfg()).unwrap();
    let loose = QuadratureConfig::with_tol(1e-8).unwrap();
    let mut expected = Vec::new();
    for i in 0..hist.mass.len() {
        let ((r0, t0), (r1, t1)) = hist.bin_bounds(i);
        let e = integrate(
            |r: f64| integrate(|t: f64| f.eval(ConePoint::new(r, t)) * r, t0, t1, &loose).unwrap(),
            r0,
            r1,
            &loose,
        )
        .unwrap();
        expected.push(e);
    }
    let mut obs = hist.mass.clone();
    obs.push(hist.outside);
    expected.push(1.0 - expected.iter().sum::<f64>());
    let (stat, df) = chi2(&obs, &expected, n as f64);
    // successive iterates are correlated; the ergodic χ² is inflated by the
    // integrated autocorrelation, which is small for this contracting chain
    assert!(stat < chi2_crit_1pct(df), "chi2 {stat} df {df}");
}

#[test]
fn axis_histogram_matches_density() {
    let mp = params(1.0, 1.0, FRAC_PI_2);
    let grid = Grid::uniform_line(-4.0, 4.0, 32);
    let n = 1_000_000;
    let hist = empirical_measure(&mp, n, DEFAULT_BURN_IN, &grid, &mut RngStream::new(12, 0)).unwrap();
    let f = AxisDensity::from_params(&mp, &cfg()).unwrap();
    let mut expected: Vec<f64> = (0..hist.mass.len())
        .map(|i| {
            let ((a, _), (b, _)) = hist.bin_bounds(i);
            integrate(|y: f64| f.eval(y).unwrap(), a, b, &QuadratureConfig::with_tol(1e-8).unwrap()).unwrap()
        })
        .collect();
    let mut obs = hist.mass.clone();
    obs.push(hist.outside);
    expected.push(1.0 - expected.iter().sum::<f64>());
    let (stat, df) = chi2(&obs, &expected, n as f64);
    assert!(stat < chi2_crit_1pct(df), "chi2 {stat} df {df}");
}

#[test]
fn histogram_rejects_bad_grids() {
    let mp = params(1.0, 1.0, FRAC_PI_6);
    let mut rng = RngStream::new(0, 0);
    let wide = Grid::uniform_cone(2.0, 4, PI / 4.0, 4);
    assert!(empirical_measure(&mp, 10, 0, &wide, &mut rng).is_err());
    let line = Grid::uniform_line(0.0, 1.0, 4);
    assert!(empirical_measure(&mp, 10, 0, &line, &mut rng).is_err());
    let neg = Grid::uniform_line(-1.0, 1.0, 4);
    assert!(empirical_measure(&params(1.0, 1.0, 0.0), 10, 0, &neg, &mut rng).is_err());
}

#[test]
fn half_line_histogram_matches_gig() {
    let (p, s) = (2.0, 0.7);
    let mp = params(p, s, 0.0);
    let grid = Grid::uniform_line(0.0, 3.0, 30);
    let n = 400_000;
    let hist = empirical_measure(&mp, n, DEFAULT_BURN_IN, &grid, &mut RngStream::new(13, 0)).unwrap();
    let mut expected: Vec<f64> = (0..30)
        .map(|i| {
            let ((a, _), (b, _)) = hist.bin_bounds(i);
            integrate(|x: f64| density_gig(p, s, x, &cfg()).unwrap(), a, b, &QuadratureConfig::with_tol(1e-8).unwrap())
                .unwrap()
        })
        .collect();
    let mut obs = hist.mass.clone();
    obs.push(hist.outside);
    expected.push(1.0 - expected.iter().sum::<f64>());
    let (stat, df) = chi2(&obs, &expected, n as f64);
    assert!(stat < chi2_crit_1pct(df), "chi2 {stat} df {df}");
}

#[test]
fn dyson_chain_mean_matches_density() {
    let (p, s, t) = (2.0, 1.0, 0.5);
    let d = DysonDensity::new(p, s, t, &cfg()).unwrap();
    let m: f64 = rmprod_core::invariant_measure::integrate_positive(|x: f64| Ok(x * d.eval(x)), &cfg()).unwrap();
    let est = dyson_chain_mean(p, s, t, 1_000_000, DEFAULT_BURN_IN, &mut RngStream::new(14, 0)).unwrap();
    assert!((est.value - m).abs() < 4.0 * est.std_error, "{est:?} vs {m}");
}
