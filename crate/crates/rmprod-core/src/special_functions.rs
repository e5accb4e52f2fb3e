//! Modified Bessel functions of complex argument and real order, the order
//! derivative ∂_p K_p, J/Y on the positive axis, digamma, and the Macdonald
//! integrals I_p^{(n)}(u, v) used for moments.
//!
//! K_p is evaluated from K_p(z) = ∫_0^∞ cosh(p w) e^{−z cosh w} dw with the
//! contour w(τ) = τ − iθ·tanh τ, θ = arg z. Along this path z·cosh w turns
//! real and positive for large τ, so the integrand decays doubly
//! exponentially for every |arg z| ≤ π/2, the imaginary axis included.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::quadrature::{half_line_trapezoid, QuadratureConfig};

pub const MAX_ORDER: f64 = 64.0;
pub const MIN_ABS_ARG: f64 = 1e-6;
pub const MAX_ABS_ARG: f64 = 1e6;

fn check_domain(p: f64, z: Complex64) -> Result<f64> {
    if !p.is_finite() || p.abs() > MAX_ORDER {
        return Err(domain("Bessel order must satisfy |p| <= 64"));
    }
    let r = z.norm();
    if !(MIN_ABS_ARG..=MAX_ABS_ARG).contains(&r) {
        return Err(domain("Bessel argument modulus must lie in [1e-6, 1e6]"));
    }
    if z.re < -1e-14 * r {
        return Err(domain("Bessel argument must satisfy Re z >= 0"));
    }
    Ok(z.arg().clamp(-FRAC_PI_2, FRAC_PI_2))
}

/// Integrand selector for the contour quadrature.
#[derive(Clone, Copy)]
enum Kernel {
    /// cosh(p w)
    Value,
    /// w · sinh(p w)
    OrderDerivative,
}

fn contour_integral(p: f64, z: Complex64, kernel: Kernel, cfg: &QuadratureConfig) -> Result<Complex64> {
    let theta = check_domain(p, z)?;
    let r = z.norm();
    let h0 = 0.5 / (1.0 + r.sqrt() / 4.0);
    let tail_start = ((p.abs() + 1.0) / r).asinh() + 1.0;
    half_line_trapezoid(
        |tau| {
            let th = tau.tanh();
            let w = Complex64::new(tau, -theta * th);
            let dw = Complex64::new(1.0, -theta * (1.0 - th * th));
            let half = (w * 0.5).sinh();
            // z (cosh w − 1), written without cancellation near w = 0
            let phase = z * half * half * 2.0;
            let up = (w * p - phase).exp();
            let down = (-w * p - phase).exp();
            let core = match kernel {
                Kernel::Value => (up + down) * 0.5,
                Kernel::OrderDerivative => (up - down) * 0.5 * w,
            };
            core * dw
        },
        h0,
        tail_start,
        cfg,
    )
}

/// e^{z} K_p(z). Negative orders use K_{−p} = K_p.
pub fn bessel_k_scaled(p: f64, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    contour_integral(p.abs(), z, Kernel::Value, cfg)
}

/// K_p(z) for Re z ≥ 0, z ≠ 0.
pub fn bessel_k(p: f64, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    Ok(bessel_k_scaled(p, z, cfg)? * (-z).exp())
}

/// e^{z} ∂_p K_p(z) by differentiation under the integral sign, unchecked.
pub fn bessel_k_dorder_scaled_quadrature(p: f64, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    let sign = if p < 0.0 { -1.0 } else { 1.0 };
    Ok(contour_integral(p.abs(), z, Kernel::OrderDerivative, cfg)? * sign)
}

/// e^{z} ∂_p K_p(z) at integer order n from
/// ∑_{k<n} n!/(2(n−k)k!) (z/2)^{k−n} K_k(z).
pub fn bessel_k_dorder_scaled_integer(n: u32, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    check_domain(f64::from(n), z)?;
    if n == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let ks = bessel_k_scaled_ladder(0.0, n as usize, z, cfg)?;
    let half_z = z * 0.5;
    let nf = f64::from(n);
    // n!/k! built downward from k = n−1
    let mut ratio = nf;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in (0..n).rev() {
        let kf = f64::from(k);
        let coef = ratio / (2.0 * (nf - kf));
        sum += ks[k as usize] * coef * half_z.powi(k as i32 - n as i32);
        ratio *= kf.max(1.0);
    }
    Ok(sum)
}

/// e^{z} ∂_p K_p(z), checked.
///
/// Integer orders use the closed form. Other orders integrate under the
/// integral sign and compare against a five-point central difference in p;
/// a mismatch beyond 10·tolerance is a consistency error.
pub fn bessel_k_dorder_scaled(p: f64, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    check_domain(p, z)?;
    if p == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if p.fract() == 0.0 {
        let n = p.abs() as u32;
        let v = bessel_k_dorder_scaled_integer(n, z, cfg)?;
        return Ok(if p < 0.0 { -v } else { v });
    }
    let direct = bessel_k_dorder_scaled_quadrature(p, z, cfg)?;
    let tight = fd_config(cfg);
    let h = 1e-5 * p.abs().max(1.0);
    let k = |q: f64| bessel_k_scaled(q, z, &tight);
    let stencil = (k(p - 2.0 * h)? - k(p + 2.0 * h)? + (k(p + h)? - k(p - h)?) * 8.0) / (12.0 * h);
    let scale = direct.norm().max(k(p)?.norm());
    let allowed = 10.0 * cfg.abs_tol.max(cfg.rel_tol * scale);
    // The stencil itself carries ~1e-11 relative rounding noise.
    if (direct - stencil).norm() > allowed.max(1e-10 * scale) {
        return Err(Error::Consistency { first: direct, second: stencil });
    }
    Ok(direct)
}

fn fd_config(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: (cfg.abs_tol * 1e-3).max(1e-15),
        rel_tol: (cfg.rel_tol * 1e-3).max(1e-15),
        max_refinements: cfg.max_refinements.max(12),
    }
}

/// ∂_p K_p(z).
pub fn bessel_k_dorder(p: f64, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    Ok(bessel_k_dorder_scaled(p, z, cfg)? * (-z).exp())
}

/// e^{z} K_{p+j}(z) for j = 0..=count, by upward recurrence from two
/// quadratures.
pub fn bessel_k_scaled_ladder(p: f64, count: usize, z: Complex64, cfg: &QuadratureConfig) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(bessel_k_scaled(p, z, cfg)?);
    if count >= 1 {
        out.push(bessel_k_scaled(p + 1.0, z, cfg)?);
    }
    for j in 2..=count {
        let nu = p + (j - 1) as f64;
        let next = out[j - 2] + out[j - 1] * (2.0 * nu) / z;
        out.push(next);
    }
    Ok(out)
}

/// (J_p(x), Y_p(x)) for x > 0 from K_p on the imaginary axis:
/// K_p(ix) = (π/2) e^{−iπ(p+1)/2} (J_p(x) − i Y_p(x)).
pub fn bessel_jy(p: f64, x: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(domain("bessel_jy requires x > 0"));
    }
    if p < 0.0 {
        return Err(domain("bessel_jy requires p >= 0"));
    }
    let z = Complex64::new(0.0, x);
    let k = bessel_k_scaled(p, z, cfg)? * Complex64::from_polar(1.0, -x);
    let h = k * Complex64::from_polar(2.0 / PI, FRAC_PI_2 * (p + 1.0));
    Ok((h.re, -h.im))
}

/// Digamma ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("digamma requires finite x > 0"));
    }
    Ok(digamma_positive(x))
}

fn digamma_positive(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 12.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Bernoulli tail B_{2k}/(2k x^{2k})
    let tail = inv2
        * (1.0 / 12.0
            - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    shift + x.ln() - 0.5 / x - tail
}

/// ψ at any real argument that is not a pole, via reflection.
pub(crate) fn digamma_real(x: f64) -> f64 {
    if x > 0.0 {
        digamma_positive(x)
    } else {
        digamma_positive(1.0 - x) - PI / (PI * x).tan()
    }
}

/// 1/Γ(x), zero at the poles of Γ.
pub(crate) fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return 0.0;
    }
    let g = libm::tgamma(x);
    if g.is_infinite() {
        0.0
    } else {
        1.0 / g
    }
}

/// Parameters of I_p^{(n)}(u, v) = ½∫_0^∞ exp{−τ/2 − (u²+v²)/(2τ)} K_p(uv/τ) τ^n dτ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacdonaldIndex {
    pub order: f64,
    pub power: i32,
    pub u: Complex64,
    pub v: Complex64,
}

impl MacdonaldIndex {
    pub fn validate(&self) -> Result<()> {
        let (au, av) = (self.u.arg().abs(), self.v.arg().abs());
        if au >= PI || av >= PI || (self.u + self.v).arg().abs() >= PI / 4.0 {
            return Err(domain("Macdonald integral needs |arg u|, |arg v| < pi and |arg(u+v)| < pi/4"));
        }
        // Bessel factors are evaluated in the closed right half-plane only.
        if au > FRAC_PI_2 + 1e-14 || av > FRAC_PI_2 + 1e-14 {
            return Err(domain("Macdonald integral is evaluated for |arg u|, |arg v| <= pi/2"));
        }
        Ok(())
    }
}

/// coef · u^i v^j (v²−u²)^{−k} K_{p+a}(u) K_{p+b}(v)
type TermKey = (i32, i32, u32, i32, i32);

fn add_term(map: &mut BTreeMap<TermKey, Complex64>, key: TermKey, coef: Complex64) {
    if coef == Complex64::new(0.0, 0.0) {
        return;
    }
    *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += coef;
}

/// Applies c_u·u∂_u + c_v·v∂_v (+ shift) to every term.
fn apply_euler(
    terms: &BTreeMap<TermKey, Complex64>,
    p: f64,
    cu: f64,
    cv: f64,
    shift: f64,
) -> BTreeMap<TermKey, Complex64> {
    let mut out = BTreeMap::new();
    for (&(i, j, k, a, b), &c) in terms {
        let kf = f64::from(k);
        // u∂_u [u^i K_ν(u)] = (i+ν) u^i K_ν − u^{i+1} K_{ν+1}
        let nu = p + f64::from(a);
        add_term(&mut out, (i, j, k, a, b), c * (cu * (f64::from(i) + nu)));
        add_term(&mut out, (i + 1, j, k, a + 1, b), c * (-cu));
        let mu = p + f64::from(b);
        add_term(&mut out, (i, j, k, a, b), c * (cv * (f64::from(j) + mu)));
        add_term(&mut out, (i, j + 1, k, a, b + 1), c * (-cv));
        if k > 0 {
            // u∂_u D^{−k} = 2k u² D^{−k−1}, v∂_v D^{−k} = −2k v² D^{−k−1}
            add_term(&mut out, (i + 2, j, k + 1, a, b), c * (2.0 * kf * cu));
            add_term(&mut out, (i, j + 2, k + 1, a, b), c * (-2.0 * kf * cv));
        }
        add_term(&mut out, (i, j, k, a, b), c * shift);
    }
    out.retain(|_, c| *c != Complex64::new(0.0, 0.0));
    out
}

fn shift_denominator(terms: BTreeMap<TermKey, Complex64>) -> BTreeMap<TermKey, Complex64> {
    terms.into_iter().map(|((i, j, k, a, b), c)| ((i, j, k + 1, a, b), c)).collect()
}

/// Symbolic expansion of I_p^{(n)} as a sum of Bessel products.
fn macdonald_terms(p: f64, n: i32) -> BTreeMap<TermKey, Complex64> {
    let mut terms = BTreeMap::new();
    terms.insert((0, 0, 0, 0, 0), Complex64::new(1.0, 0.0));
    if n >= -1 {
        // I^{(m)} = [2m − u∂_u − v∂_v] I^{(m−1)}
        for m in 0..=n {
            terms = apply_euler(&terms, p, -1.0, -1.0, f64::from(2 * m));
        }
    } else {
        // (v²−u²) I^{(m−1)} = [u∂_u − v∂_v] I^{(m)}
        for _ in (n + 1)..=-1 {
            terms = shift_denominator(apply_euler(&terms, p, 1.0, -1.0, 0.0));
        }
    }
    terms
}

/// I_p^{(n)}(u, v) multiplied by e^{u+v}.
pub fn macdonald_integral_scaled(idx: &MacdonaldIndex, cfg: &QuadratureConfig) -> Result<Complex64> {
    idx.validate()?;
    let MacdonaldIndex { order: p, power: n, u, v } = *idx;
    let d = v * v - u * u;
    if n <= -2 && d.norm() <= 1e-13 * (u.norm_sqr() + v.norm_sqr()) {
        return Err(Error::DegenerateRecurrence);
    }
    let terms = macdonald_terms(p, n);
    let depth = terms.keys().map(|&(_, _, _, a, b)| a.max(b)).max().unwrap_or(0) as usize;
    let ku = bessel_k_scaled_ladder(p, depth, u, cfg)?;
    let kv = bessel_k_scaled_ladder(p, depth, v, cfg)?;
    let inv_d = if n <= -2 { d.inv() } else { Complex64::new(0.0, 0.0) };
    let mut sum = Complex64::new(0.0, 0.0);
    for (&(i, j, k, a, b), &c) in &terms {
        sum += c * u.powi(i) * v.powi(j) * inv_d.powi(k as i32) * ku[a as usize] * kv[b as usize];
    }
    if !(sum.re.is_finite() && sum.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(sum)
}

/// I_p^{(n)}(u, v).
pub fn macdonald_integral(idx: &MacdonaldIndex, cfg: &QuadratureConfig) -> Result<Complex64> {
    Ok(macdonald_integral_scaled(idx, cfg)? * (-(idx.u + idx.v)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn digamma_recurrence_and_reflection() {
        for &x in &[0.1, 0.7, 1.3, 5.5, 20.0] {
            let lhs = digamma(x + 1.0).unwrap();
            assert!((lhs - digamma(x).unwrap() - 1.0 / x).abs() < 1e-14);
        }
        // ψ(1−x) − ψ(x) = π cot(πx) at x = −1/2
        assert!((digamma_real(-0.5) - digamma(1.5).unwrap()).abs() < 1e-13);
        assert!(digamma(0.0).is_err());
    }

    #[test]
    fn recip_gamma_poles_vanish() {
        assert_eq!(recip_gamma(-3.0), 0.0);
        assert!((recip_gamma(0.5) - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn order_zero_derivative_vanishes() {
        let z = Complex64::new(1.0, 0.5);
        assert_eq!(bessel_k_dorder(0.0, z, &cfg()).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn k_ladder_matches_direct() {
        let z = Complex64::from_polar(1.5, 0.7);
        let ladder = bessel_k_scaled_ladder(0.3, 6, z, &cfg()).unwrap();
        let direct = bessel_k_scaled(6.3, z, &cfg()).unwrap();
        assert!((ladder[6] - direct).norm() < 1e-11 * direct.norm());
    }

    #[test]
    fn backward_terms_at_minus_two() {
        // D^{−1}[v K_p(u) K_{p+1}(v) − u K_{p+1}(u) K_p(v)]
        let t = macdonald_terms(1.0, -2);
        assert_eq!(t.len(), 2);
        assert_eq!(t[&(0, 1, 1, 0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(t[&(1, 0, 1, 1, 0)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k(1.0, Complex64::new(-1.0, 0.1), &cfg()).is_err());
        assert!(bessel_k(65.0, Complex64::new(1.0, 0.0), &cfg()).is_err());
        assert!(bessel_k(1.0, Complex64::new(1e-7, 0.0), &cfg()).is_err());
        assert!(bessel_jy(1.0, 0.0, &cfg()).is_err());
    }
}
