//! Lyapunov exponent λ_{p,s}(α) = Re[∂_p K_p(w)/K_p(w)], w = 2e^{iα}/s, and
//! its closed forms, recurrences, asymptotic series and resummations.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::invariant_measure::{integrate_against, DensityHandle, ModelParams};
use crate::quadrature::QuadratureConfig;
use crate::special_functions::{
    bessel_k_dorder_scaled, bessel_k_scaled, bessel_k_scaled_ladder, digamma, digamma_real, recip_gamma,
};

/// How a λ value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    IntegerClosedForm,
    Recurrence,
    QuadratureOfMeasure,
    LargeSSeries,
    SmallSSeries,
    PadeResummed,
    AxisSeries,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::IntegerClosedForm => "integer_closed_form",
            Method::Recurrence => "recurrence",
            Method::QuadratureOfMeasure => "quadrature_of_measure",
            Method::LargeSSeries => "large_s_series",
            Method::SmallSSeries => "small_s_series",
            Method::PadeResummed => "pade_resummed",
            Method::AxisSeries => "axis_series",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// A Lyapunov exponent in nats per matrix factor, tagged with its method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValue {
    pub value: f64,
    pub method: Method,
}

impl LyapunovValue {
    fn new(value: f64, method: Method) -> Result<Self> {
        if value.is_finite() {
            Ok(Self { value, method })
        } else {
            Err(Error::NonFinite)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    LargeS,
    SmallS,
    AxisDensityNumerator,
    AxisDensityDenominator,
}

/// A truncated expansion. For the power series kinds `coeffs[k]` multiplies
/// s^k; for [`SeriesKind::LargeS`] the entries are successive contributions
/// (ln s + ψ(p), then the remainder) whose sum is the approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesExpansion {
    pub kind: SeriesKind,
    pub coeffs: Vec<f64>,
    pub order: usize,
}

impl SeriesExpansion {
    pub fn new(kind: SeriesKind, coeffs: Vec<f64>) -> Self {
        let order = coeffs.len();
        Self { kind, coeffs, order }
    }

    /// Σ coeffs[k] s^k (Horner).
    pub fn eval(&self, s: f64) -> f64 {
        match self.kind {
            SeriesKind::LargeS => self.coeffs.iter().sum(),
            _ => self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c),
        }
    }
}

/// Λ_p(w) = ∂_p K_p(w)/K_p(w).
pub fn log_derivative(p: f64, w: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    Ok(bessel_k_dorder_scaled(p, w, cfg)? / bessel_k_scaled(p, w, cfg)?)
}

/// λ = Re Λ_p(2e^{iα}/s).
pub fn lyapunov_exact(params: &ModelParams, cfg: &QuadratureConfig) -> Result<LyapunovValue> {
    params.validate()?;
    let lambda = log_derivative(params.p, params.bessel_argument(), cfg)?;
    LyapunovValue::new(lambda.re, Method::Exact)
}

pub const MAX_INTEGER_ORDER: u32 = 16;

/// λ at integer p = n from Re ∑_{k<n} n!/(2(n−k)k!) (e^{iα}/s)^{k−n} K_k(w)/K_n(w),
/// each K_k evaluated by its own quadrature.
pub fn lyapunov_integer(n: u32, s: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<LyapunovValue> {
    if !(1..=MAX_INTEGER_ORDER).contains(&n) {
        return Err(domain("integer order must lie in 1..=16"));
    }
    let params = ModelParams::new(f64::from(n), s, alpha)?;
    let w = params.bessel_argument();
    let kn = bessel_k_scaled(f64::from(n), w, cfg)?;
    let base = Complex64::from_polar(1.0 / s, alpha);
    let nf = f64::from(n);
    let mut ratio = nf; // n!/k! at k = n−1
    let mut sum = Complex64::new(0.0, 0.0);
    for k in (0..n).rev() {
        let kf = f64::from(k);
        let coef = ratio / (2.0 * (nf - kf));
        let kk = bessel_k_scaled(kf, w, cfg)?;
        sum += kk / kn * coef * base.powi(k as i32 - n as i32);
        ratio *= kf;
    }
    LyapunovValue::new(sum.re, Method::IntegerClosedForm)
}

/// Λ_p(w) for p > 2 by the upward recurrence
/// Λ_p = (2(p−1)/w)(K_{p−1}/K_p)Λ_{p−1} + (K_{p−2}/K_p)Λ_{p−2} + (2/w)(K_{p−1}/K_p),
/// seeded at the fractional part q = p − ⌊p⌋ and q + 1.
pub fn lambda_recurrence(p: f64, w: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    if !(p > 2.0) {
        return Err(domain("lambda_recurrence needs p > 2"));
    }
    let q = p - p.floor();
    let steps = (p - q).round() as usize;
    let ks = bessel_k_scaled_ladder(q, steps, w, cfg)?;
    let mut prev2 = log_derivative(q, w, cfg)?;
    let mut prev1 = log_derivative(q + 1.0, w, cfg)?;
    for j in 2..=steps {
        let nu = q + j as f64;
        let r1 = ks[j - 1] / ks[j];
        let r2 = ks[j - 2] / ks[j];
        let next = r1 * prev1 * (2.0 * (nu - 1.0)) / w + r2 * prev2 + r1 * 2.0 / w;
        prev2 = prev1;
        prev1 = next;
    }
    Ok(prev1)
}

/// Which row of the random matrix carries the coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureCase {
    /// Matrices [[0, 1], [1, a]]: λ = −∫ ln|z| ν(dz).
    RowBottomRandom,
    /// Matrices [[a, 1], [1, 0]]: λ = +∫ ln|z| u(dz) for the law u of 1/Z.
    RowTopRandom,
}

/// λ from the invariant density by quadrature of the logarithmic moment.
pub fn lyapunov_from_measure<D: DensityHandle + ?Sized>(
    density: &D,
    case: MeasureCase,
    cfg: &QuadratureConfig,
) -> Result<LyapunovValue> {
    let log_moment: f64 = integrate_against(density, |z| Ok(z.norm().ln()), cfg).map_err(|e| match e {
        Error::QuadratureFailure { .. } | Error::NonFinite => Error::NotIntegrable,
        other => other,
    })?;
    let value = match case {
        MeasureCase::RowBottomRandom => -log_moment,
        MeasureCase::RowTopRandom => log_moment,
    };
    LyapunovValue::new(value, Method::QuadratureOfMeasure)
}

/// ln|u| for the root of u + 1/u = z with |u| > 1.
pub fn lloyd_lyapunov(z: Complex64) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(domain("Lloyd exponent needs Im z > 0"));
    }
    let mut q = (z * z - 4.0).sqrt();
    if (z.conj() * q).re < 0.0 {
        q = -q;
    }
    let u = (z + q) * 0.5;
    let modulus = u.norm();
    if !(modulus > 1.0) {
        return Err(domain("degenerate Lloyd root with |u| = 1"));
    }
    Ok(modulus.ln())
}

pub const MAX_LARGE_S_ORDER: usize = 6;

/// Leading remainder of λ − ln s − ψ(p) as s → ∞.
pub fn large_s_remainder(params: &ModelParams) -> f64 {
    let ModelParams { p, s, alpha } = *params;
    let ls = s.ln();
    if p < 1.0 {
        2.0 * (2.0 * p * alpha).cos() * libm::tgamma(1.0 - p) / libm::tgamma(1.0 + p) * ls / s.powf(2.0 * p)
    } else if p == 1.0 {
        2.0 * (2.0 * alpha).cos() * ls * ls / (s * s)
    } else {
        (2.0 * alpha).cos() / ((p - 1.0) * (p - 1.0) * s * s)
    }
}

/// Λ_p from the convergent small-argument series of I_{±p}, k < `terms`.
fn large_s_bessel_series(p: f64, w: Complex64, terms: usize) -> Complex64 {
    let x = w * 0.5;
    let l = x.ln();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    let mut kfact = 1.0;
    for k in 0..terms {
        let kf = k as f64;
        if k > 0 {
            kfact *= kf;
        }
        let a_minus = recip_gamma(kf - p + 1.0) / kfact;
        let b_minus = if a_minus == 0.0 { 0.0 } else { digamma_real(kf - p + 1.0) * a_minus };
        let a_plus = recip_gamma(kf + p + 1.0) / kfact;
        let b_plus = digamma_real(kf + p + 1.0) * a_plus;
        let x2k = (l * (2.0 * kf)).exp();
        let x2kp = (l * (2.0 * kf + 2.0 * p)).exp();
        num += (-l * a_minus + b_minus) * x2k - (l * a_plus - b_plus) * x2kp;
        den += x2k * a_minus - x2kp * a_plus;
    }
    num / den - PI / (PI * p).tan()
}

/// Large-s approximation of λ. `order` 0 keeps ln s + ψ(p); 1 adds the
/// leading remainder; 2..=6 use that many terms of the convergent
/// I_{±p} series (non-integer p only).
pub fn asympt_large_s(params: &ModelParams, order: usize) -> Result<(SeriesExpansion, LyapunovValue)> {
    params.validate()?;
    if params.s < 10.0 {
        return Err(domain("large-s expansion is used for s >= 10"));
    }
    if order > MAX_LARGE_S_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_LARGE_S_ORDER });
    }
    let lead = params.s.ln() + digamma(params.p)?;
    let coeffs = match order {
        0 => vec![lead],
        1 => vec![lead, large_s_remainder(params)],
        _ => {
            if params.p.fract() == 0.0 {
                return Err(Error::UnsupportedOrder { order, max: 1 });
            }
            let full = large_s_bessel_series(params.p, params.bessel_argument(), order).re;
            vec![lead, full - lead]
        }
    };
    let series = SeriesExpansion::new(SeriesKind::LargeS, coeffs);
    let value = LyapunovValue::new(series.eval(params.s), Method::LargeSSeries)?;
    Ok((series, value))
}

pub const MAX_TABLE_ORDER: usize = 5;
pub const MAX_GENERATED_ORDER: usize = 80;

/// l_1..l_5 of λ ~ Σ l_n s^n as s → 0.
pub fn small_s_table(p: f64, alpha: f64) -> [f64; 5] {
    let p2 = p * p;
    [
        p * alpha.cos() / 2.0,
        -p * (2.0 * alpha).cos() / 8.0,
        -p * (4.0 * p2 - 13.0) * (3.0 * alpha).cos() / 192.0,
        p * (4.0 * p2 - 7.0) * (4.0 * alpha).cos() / 128.0,
        p * (48.0 * p2 * p2 - 920.0 * p2 + 1187.0) * (5.0 * alpha).cos() / 20480.0,
    ]
}

/// Hankel symbols (p, m) = Π_{j≤m} (4p² − (2j−1)²)/(4^m m!) and their p-derivatives.
pub fn hankel_symbols(p: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut value = Vec::with_capacity(count + 1);
    let mut deriv = Vec::with_capacity(count + 1);
    let (mut v, mut d) = (1.0, 0.0);
    value.push(v);
    deriv.push(d);
    for j in 1..=count {
        let jf = j as f64;
        let factor = (4.0 * p * p - (2.0 * jf - 1.0).powi(2)) / (4.0 * jf);
        let dfactor = 8.0 * p / (4.0 * jf);
        d = d * factor + v * dfactor;
        v *= factor;
        value.push(v);
        deriv.push(d);
    }
    (value, deriv)
}

/// l_0..l_order from the ratio of the Hankel expansions of ∂_p K_p and K_p.
pub fn small_s_generated(p: f64, alpha: f64, order: usize) -> Result<Vec<f64>> {
    if order > MAX_GENERATED_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_GENERATED_ORDER });
    }
    let (den, num) = hankel_symbols(p, order);
    // c = num/den as power series in 1/(2w) = s e^{−iα}/4
    let mut c = vec![0.0; order + 1];
    for m in 0..=order {
        let mut acc = num[m];
        for k in 1..=m {
            acc -= den[k] * c[m - k];
        }
        c[m] = acc / den[0];
    }
    Ok(c.iter().enumerate().map(|(m, cm)| cm * (m as f64 * alpha).cos() / 4f64.powi(m as i32)).collect())
}

/// Small-s partial sum Σ_{n≤order} l_n s^n from the l_1..l_5 table.
pub fn asympt_small_s(params: &ModelParams, order: usize) -> Result<(SeriesExpansion, LyapunovValue)> {
    params.validate()?;
    if order > MAX_TABLE_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_TABLE_ORDER });
    }
    if params.s > 0.5 {
        return Err(domain("small-s expansion is used for s <= 0.5"));
    }
    let table = small_s_table(params.p, params.alpha);
    let mut coeffs = vec![0.0; order + 1];
    coeffs[1..].copy_from_slice(&table[..order]);
    let series = SeriesExpansion::new(SeriesKind::SmallS, coeffs);
    let value = LyapunovValue::new(series.eval(params.s), Method::SmallSSeries)?;
    Ok((series, value))
}

/// Small-s series with `order` generated coefficients (no s restriction;
/// intended as Padé input).
pub fn small_s_series(p: f64, alpha: f64, order: usize) -> Result<SeriesExpansion> {
    Ok(SeriesExpansion::new(SeriesKind::SmallS, small_s_generated(p, alpha, order)?))
}

/// Rational approximant N(x)/D(x) with D(0) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeApproximant {
    pub l: usize,
    pub m: usize,
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl PadeApproximant {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, v| acc * x + v);
        let den = horner(&self.denominator);
        if den.abs() < 1e-12 {
            return Err(Error::PoleAtEvaluation);
        }
        Ok(horner(&self.numerator) / den)
    }
}

/// Solves A x = b by Gaussian elimination with complete pivoting; None if
/// a pivot falls below `tol` relative to the largest entry.
fn solve_complete_pivoting(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return if n == 0 { Some(Vec::new()) } else { None };
    }
    let mut col_perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        if best <= tol * scale {
            return None;
        }
        a.swap(k, pr);
        b.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        col_perm.swap(k, pc);
        for i in (k + 1)..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in (k + 1)..n {
            acc -= a[k][j] * y[j];
        }
        y[k] = acc / a[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = y[k];
    }
    Some(x)
}

/// [L/M] approximant of Σ c_k x^k, stepping down the diagonal to [L−1/M−1]
/// while the linear system is singular.
pub fn pade_approximant(coeffs: &[f64], l: usize, m: usize) -> Result<PadeApproximant> {
    if l + m + 1 > coeffs.len() {
        return Err(Error::UnsupportedOrder { order: l + m + 1, max: coeffs.len() });
    }
    let (mut l, mut m) = (l, m);
    let c = |k: isize| if k < 0 { 0.0 } else { coeffs[k as usize] };
    loop {
        // Σ_{j=1..M} b_j c_{L+i−j} = −c_{L+i}, i = 1..M
        let a: Vec<Vec<f64>> =
            (1..=m).map(|i| (1..=m).map(|j| c((l + i) as isize - j as isize)).collect()).collect();
        let rhs: Vec<f64> = (1..=m).map(|i| -c((l + i) as isize)).collect();
        if let Some(b) = solve_complete_pivoting(a, rhs, 1e-13) {
            let mut denominator = vec![1.0];
            denominator.extend(b);
            let numerator = (0..=l)
                .map(|i| (0..=m.min(i)).map(|j| denominator[j] * c(i as isize - j as isize)).sum())
                .collect();
            return Ok(PadeApproximant { l, m, numerator, denominator });
        }
        if l == 0 || m == 0 {
            return Err(Error::DegenerateTable { l, m });
        }
        l -= 1;
        m -= 1;
    }
}

/// λ from the [L/M] Padé approximant of a small-s series, evaluated at s.
/// The series is rescaled to x = s'/s before solving, which leaves the
/// approximant unchanged and keeps the linear system well scaled.
pub fn pade_resum(series: &SeriesExpansion, s: f64, l: usize, m: usize) -> Result<LyapunovValue> {
    if series.kind != SeriesKind::SmallS {
        return Err(domain("Pade resummation expects a small-s series"));
    }
    if !(s > 0.0) {
        return Err(domain("Pade resummation needs s > 0"));
    }
    let scaled: Vec<f64> = series.coeffs.iter().enumerate().map(|(k, c)| c * s.powi(k as i32)).collect();
    let approx = pade_approximant(&scaled, l, m)?;
    LyapunovValue::new(approx.eval(1.0)?, Method::PadeResummed)
}

pub const MAX_AXIS_ORDER: usize = 12;

/// Coefficients u_k^{(n)} of the small-s expansion of u(y) = y^{−2} f_+(−1/y):
/// u^{(2n−1)} = Σ_k u_k (1+y²)^{−k}, u^{(2n)} = Σ_k u_k y (1+y²)^{−k}.
/// `layers[n−1][k]` holds u_k^{(n)}.
pub fn axis_layers(p: f64, order: usize) -> Result<Vec<Vec<f64>>> {
    if order == 0 || order > MAX_AXIS_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_AXIS_ORDER });
    }
    let width = 2 * order + 2;
    let mut layers = vec![vec![0.0; width]];
    layers[0][1] = 1.0;
    while layers.len() < order {
        let count = layers.len();
        let prev = &layers[count - 1];
        let mut next = vec![0.0; width];
        if count % 2 == 1 {
            // odd layer 2n−1 → even layer 2n
            let n = count.div_ceil(2);
            let nf = n as f64;
            next[n + 1] = (p - 1.0 + 2.0 * nf) * prev[n];
            for k in (n + 2)..=(4 * n - 2) {
                let kf = k as f64;
                next[k] = (p - 3.0 + 2.0 * kf) * prev[k - 1] - 2.0 * (kf - 2.0) * prev[k - 2];
            }
            next[4 * n - 1] = -2.0 * (4.0 * nf - 3.0) * prev[4 * n - 3];
        } else {
            // even layer 2n → odd layer 2n+1
            let n = count / 2;
            let nf = n as f64;
            next[n + 1] = (p + 2.0 * nf) * prev[n + 1];
            next[n + 2] = (p + 2.0 * nf + 2.0) * prev[n + 2] - (p + 2.0 + 4.0 * nf) * prev[n + 1];
            for k in (n + 3)..=(4 * n - 1) {
                let kf = k as f64;
                next[k] = (p - 2.0 + 2.0 * kf) * prev[k] + (6.0 - p - 4.0 * kf) * prev[k - 1] + 2.0 * (kf - 2.0) * prev[k - 2];
            }
            next[4 * n] = (6.0 - p - 16.0 * nf) * prev[4 * n - 1] + 2.0 * (4.0 * nf - 2.0) * prev[4 * n - 2];
            next[4 * n + 1] = (8.0 * nf - 2.0) * prev[4 * n - 1];
        }
        layers.push(next);
    }
    Ok(layers)
}

/// α_k = ∫_0^∞ (1+y²)^{−k} dy and β_k = ∫_0^∞ ln y (1+y²)^{−k} dy, k = 0..=kmax
/// (index 0 unused).
pub fn axis_moment_integrals(kmax: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; kmax + 1];
    let mut b = vec![0.0; kmax + 1];
    if kmax >= 1 {
        a[1] = FRAC_PI_2;
    }
    for k in 1..kmax {
        let kf = k as f64;
        a[k + 1] = (1.0 - 1.0 / (2.0 * kf)) * a[k];
        b[k + 1] = b[k] - (a[k] + b[k]) / (2.0 * kf);
    }
    (a, b)
}

/// Numerator and denominator series of the axis-density expansion of λ at
/// α = π/2, from layers 1..=order.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSeries {
    pub layers: Vec<Vec<f64>>,
    pub numerator: SeriesExpansion,
    pub denominator: SeriesExpansion,
}

impl AxisSeries {
    /// λ ≈ N(s)/D(s).
    pub fn estimate(&self, s: f64) -> Result<LyapunovValue> {
        let d = self.denominator.eval(s);
        if d == 0.0 {
            return Err(Error::PoleAtEvaluation);
        }
        LyapunovValue::new(self.numerator.eval(s) / d, Method::AxisSeries)
    }
}

pub fn axis_density_series(p: f64, order: usize) -> Result<AxisSeries> {
    if !(p > 0.0) {
        return Err(domain("axis series needs p > 0"));
    }
    let layers = axis_layers(p, order)?;
    let width = layers[0].len();
    let (alpha_k, beta_k) = axis_moment_integrals(width - 1);
    let mut num = vec![0.0; order + 1];
    let mut den = vec![0.0; order + 1];
    for (idx, layer) in layers.iter().enumerate() {
        let n = idx + 1;
        if n % 2 == 0 {
            continue;
        }
        // the odd-in-y layers integrate to zero against both weights
        num[n] = 2.0 * layer.iter().zip(&beta_k).map(|(u, b)| u * b).sum::<f64>();
        den[n] = 2.0 * layer.iter().zip(&alpha_k).map(|(u, a)| u * a).sum::<f64>();
    }
    Ok(AxisSeries {
        layers,
        numerator: SeriesExpansion::new(SeriesKind::AxisDensityNumerator, num),
        denominator: SeriesExpansion::new(SeriesKind::AxisDensityDenominator, den),
    })
}
