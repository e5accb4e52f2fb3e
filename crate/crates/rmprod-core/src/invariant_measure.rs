//! Invariant densities of the continued-fraction chain Z ↦ 1/(Z + a e^{iα}):
//! the cone density for 0 < |α| < π/2, the axis density at |α| = π/2, the
//! generalized inverse Gaussian at α = 0, and Dyson's chain density.

use core::cell::RefCell;
use core::f64::consts::{FRAC_PI_2, PI};

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, integrate_half_line, integrate_line, QuadValue, QuadratureConfig};
use crate::special_functions::{bessel_jy, bessel_k_scaled, macdonald_integral_scaled, MacdonaldIndex};

/// Angles within this distance of π/2 are treated as the axis case.
pub const AXIS_EPS: f64 = 1e-15;

/// Shape p, scale s, and ray angle α of the gamma coefficient law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub p: f64,
    pub s: f64,
    pub alpha: f64,
}

/// Where the invariant law lives for a given α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// α = 0: the positive half-line.
    HalfLine,
    /// 0 < |α| < π/2: the cone |arg z| < |α|.
    Cone,
    /// |α| = π/2: the imaginary axis; `sign` is the sign of α.
    Axis { sign: f64 },
}

impl ModelParams {
    pub fn new(p: f64, s: f64, alpha: f64) -> Result<Self> {
        let params = Self { p, s, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(domain("shape p must be positive"));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(domain("scale s must be positive"));
        }
        if !(self.alpha.abs() <= FRAC_PI_2 + AXIS_EPS) {
            return Err(domain("ray angle must satisfy |alpha| <= pi/2"));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if self.alpha == 0.0 {
            Regime::HalfLine
        } else if self.alpha.abs() >= FRAC_PI_2 - AXIS_EPS {
            Regime::Axis { sign: self.alpha.signum() }
        } else {
            Regime::Cone
        }
    }

    /// 2e^{iα}/s, the Bessel argument of the normalization and of λ.
    pub fn bessel_argument(&self) -> Complex64 {
        Complex64::from_polar(2.0 / self.s, self.alpha)
    }

    /// Same parameters with α replaced.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }
}

/// A point r e^{iθ} in polar form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub r: f64,
    pub theta: f64,
}

impl ConePoint {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    /// Membership in the closed cone |θ| ≤ |α|.
    pub fn in_cone(&self, alpha: f64) -> bool {
        self.r > 0.0 && self.theta.abs() <= alpha.abs()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self { r: z.norm(), theta: z.arg() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResult {
    pub m: u32,
    pub n: u32,
    pub value: Complex64,
}

/// Support of a density handle, fixing the reference measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// Lebesgue measure on (0, ∞).
    HalfLine,
    /// Area measure on the cone |arg z| < |α|.
    Cone { alpha: f64 },
    /// Lebesgue measure dy on the imaginary axis z = iy.
    Axis,
}

/// A probability density that can be evaluated pointwise on its support.
pub trait DensityHandle {
    fn support(&self) -> Support;
    fn density_at(&self, z: Complex64) -> Result<f64>;
}

/// Error slot for fallible integrands passed to infallible integrators.
struct Trap(RefCell<Option<Error>>);

impl Trap {
    fn new() -> Self {
        Self(RefCell::new(None))
    }

    fn catch<T: QuadValue>(&self, r: Result<T>) -> T {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                T::zero()
            }
        }
    }

    fn finish<T>(self, r: Result<T>) -> Result<T> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

/// ∫∫_{S_α} g(r, θ) dA, in coordinates r = e^{(σ+d)/2}, θ = atan(tan α · tanh(d/2))
/// which send the cone onto the plane and flatten its boundary singularity.
pub fn integrate_cone<T, G>(alpha: f64, mut g: G, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    G: FnMut(f64, f64) -> Result<T>,
{
    if !(alpha != 0.0 && alpha.abs() < FRAC_PI_2) {
        return Err(domain("cone integration needs 0 < |alpha| < pi/2"));
    }
    let tan_a = alpha.tan();
    let inner_cfg = cfg.scaled(0.1);
    let trap = Trap::new();
    let outer = integrate_line(
        |d: f64| {
            let th = (0.5 * d).tanh();
            let theta = (tan_a * th).atan();
            let sech2 = 1.0 - th * th;
            let dtheta = (tan_a * 0.5 * sech2 / (1.0 + tan_a * tan_a * th * th)).abs();
            if dtheta == 0.0 {
                return T::zero();
            }
            let inner_trap = Trap::new();
            let inner = integrate_line(
                |sigma: f64| {
                    let log_r = 0.5 * (sigma + d);
                    if log_r.abs() > 700.0 {
                        return T::zero();
                    }
                    let r = log_r.exp();
                    let v = inner_trap.catch(g(r, theta));
                    if v.magnitude() == 0.0 {
                        return v;
                    }
                    v * (r * r * 0.5 * dtheta)
                },
                0.0,
                2.0,
                &inner_cfg,
            );
            trap.catch(inner_trap.finish(inner))
        },
        0.0,
        2.0,
        cfg,
    );
    trap.finish(outer)
}

/// ∫_ℝ g(y) dy with y = ±e^σ on each half, suited to algebraic tails.
pub fn integrate_axis<T, G>(mut g: G, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    G: FnMut(f64) -> Result<T>,
{
    let trap = Trap::new();
    let mut half = |sign: f64| {
        integrate_line(
            |sigma: f64| {
                if sigma.abs() > 700.0 {
                    return T::zero();
                }
                let y = sign * sigma.exp();
                let v = trap.catch(g(y));
                if v.magnitude() == 0.0 {
                    return v;
                }
                v * sigma.exp()
            },
            0.0,
            4.0,
            cfg,
        )
    };
    let total = half(1.0).and_then(|a| half(-1.0).map(|b| a + b));
    trap.finish(total)
}

/// ∫_0^∞ g(x) dx with x = e^σ.
pub fn integrate_positive<T, G>(mut g: G, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    G: FnMut(f64) -> Result<T>,
{
    let trap = Trap::new();
    let total = integrate_line(
        |sigma: f64| {
            if sigma.abs() > 700.0 {
                return T::zero();
            }
            let x = sigma.exp();
            let v = trap.catch(g(x));
            if v.magnitude() == 0.0 {
                return v;
            }
            v * x
        },
        0.0,
        2.0,
        cfg,
    );
    trap.finish(total)
}

/// ∫ g(z) f(z) over the support of a density handle.
pub fn integrate_against<T, D, G>(density: &D, mut g: G, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    D: DensityHandle + ?Sized,
    G: FnMut(Complex64) -> Result<T>,
{
    match density.support() {
        Support::HalfLine => integrate_positive(
            |x| {
                let z = Complex64::new(x, 0.0);
                let f = density.density_at(z)?;
                if f == 0.0 {
                    return Ok(T::zero());
                }
                Ok(g(z)? * f)
            },
            cfg,
        ),
        Support::Axis => integrate_axis(
            |y| {
                let z = Complex64::new(0.0, y);
                let f = density.density_at(z)?;
                if f == 0.0 {
                    return Ok(T::zero());
                }
                Ok(g(z)? * f)
            },
            cfg,
        ),
        Support::Cone { alpha } => integrate_cone(
            alpha,
            |r, theta| {
                let z = Complex64::from_polar(r, theta);
                let f = density.density_at(z)?;
                if f == 0.0 {
                    return Ok(T::zero());
                }
                Ok(g(z)? * f)
            },
            cfg,
        ),
    }
}

/// ln of the cone normalization 1/|2K_p(2e^{iα}/s)|², valid for |α| < π/2.
fn log_cone_constant(params: &ModelParams, cfg: &QuadratureConfig) -> Result<f64> {
    let w = params.bessel_argument();
    let scaled = bessel_k_scaled(params.p, w, cfg)?;
    // |K|² = e^{−2 Re w} |e^{w} K|²
    Ok(2.0 * w.re - 2.0 * (2.0 * scaled.norm()).ln())
}

/// 1/(π²[J_p²(2/s) + Y_p²(2/s)]).
fn axis_constant(p: f64, s: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let (j, y) = bessel_jy(p, 2.0 / s, cfg)?;
    Ok(1.0 / (PI * PI * (j * j + y * y)))
}

/// Normalization constant c_{p,s}(α) of the invariant density.
pub fn normalization_constant(params: &ModelParams, cfg: &QuadratureConfig) -> Result<f64> {
    params.validate()?;
    let c = match params.regime() {
        Regime::Axis { .. } => axis_constant(params.p, params.s, cfg)?,
        _ => log_cone_constant(params, cfg)?.exp(),
    };
    if !c.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(c)
}

/// The invariant density on the cone with its normalization precomputed.
#[derive(Debug, Clone, Copy)]
pub struct ConeDensity {
    params: ModelParams,
    log_c: f64,
}

impl ConeDensity {
    pub fn new(params: ModelParams, cfg: &QuadratureConfig) -> Result<Self> {
        params.validate()?;
        if params.regime() != Regime::Cone {
            return Err(domain("cone density needs 0 < |alpha| < pi/2"));
        }
        Ok(Self { params, log_c: log_cone_constant(&params, cfg)? })
    }

    /// Rebuilds the density with a multiplied normalization (fault injection).
    pub fn with_scaled_constant(&self, factor: f64) -> Self {
        Self { log_c: self.log_c + factor.ln(), ..*self }
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn normalization(&self) -> f64 {
        self.log_c.exp()
    }

    /// f_α(r e^{iθ}); zero on and outside the cone boundary.
    pub fn eval(&self, z: ConePoint) -> f64 {
        let ModelParams { p, s, alpha } = self.params;
        if !(z.r > 0.0) || z.theta.abs() >= alpha.abs() {
            return 0.0;
        }
        let plus = (alpha + z.theta).sin();
        let minus = (alpha - z.theta).sin();
        let sin2a = (2.0 * alpha).sin();
        let exponent = (sin2a / s) * (1.0 / (z.r * minus) + z.r / plus);
        let log_f = self.log_c + sin2a.abs().ln() - 2.0 * z.r.ln() - 2.0 * plus.abs().ln() + (p - 1.0) * (minus / plus).ln()
            - exponent;
        log_f.exp()
    }
}

impl DensityHandle for ConeDensity {
    fn support(&self) -> Support {
        Support::Cone { alpha: self.params.alpha }
    }

    fn density_at(&self, z: Complex64) -> Result<f64> {
        Ok(self.eval(ConePoint::from_complex(z)))
    }
}

/// f_α(z) at a single point. Builds the normalization on every call; use
/// [`ConeDensity`] for repeated evaluation.
pub fn density_cone(params: &ModelParams, z: ConePoint, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(ConeDensity::new(*params, cfg)?.eval(z))
}

/// Density of Im Z on the imaginary axis for α = ±π/2.
#[derive(Debug, Clone, Copy)]
pub struct AxisDensity {
    p: f64,
    s: f64,
    sign: f64,
    c: f64,
    cfg: QuadratureConfig,
}

/// The root of t − 1/t = w with the sign of `positive`, free of cancellation.
fn signed_root(w: f64, positive: bool) -> f64 {
    let q = w.hypot(2.0);
    if positive {
        if w >= 0.0 {
            0.5 * (w + q)
        } else {
            2.0 / (q - w)
        }
    } else if w <= 0.0 {
        0.5 * (w - q)
    } else {
        -2.0 / (w + q)
    }
}

impl AxisDensity {
    /// `sign` selects α = +π/2 (positive) or α = −π/2 (negative).
    pub fn new(p: f64, s: f64, sign: f64, cfg: &QuadratureConfig) -> Result<Self> {
        ModelParams::new(p, s, FRAC_PI_2)?;
        let c = axis_constant(p, s, cfg)?;
        Ok(Self { p, s, sign: if sign < 0.0 { -1.0 } else { 1.0 }, c, cfg: cfg.scaled(0.01) })
    }

    pub fn from_params(params: &ModelParams, cfg: &QuadratureConfig) -> Result<Self> {
        match params.regime() {
            Regime::Axis { sign } => Self::new(params.p, params.s, sign, cfg),
            _ => Err(domain("axis density needs |alpha| = pi/2")),
        }
    }

    pub fn normalization(&self) -> f64 {
        self.c
    }

    pub fn with_scaled_constant(&self, factor: f64) -> Self {
        Self { c: self.c * factor, ..*self }
    }

    /// Unnormalized profile for α = +π/2:
    /// f_+(y) = y^{−2} ∫_{c(y)}^{y} exp{[(1/y − y) − (1/t − t)]/s} (t/y)^{p−1} dt,
    /// evaluated as s ∫_0^∞ e^{−u} (t/y)^{p+1}/(1+t²) du with t − 1/t = y − 1/y − s u.
    pub fn profile_plus(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(self.s);
        }
        let (p, s) = (self.p, self.s);
        let g = y - 1.0 / y;
        let positive = y > 0.0;
        let ay = y.abs();
        let v: f64 = integrate_half_line(
            |u: f64| {
                let t = signed_root(g - s * u, positive);
                let ratio = t.abs() / ay;
                (-u + (p + 1.0) * ratio.ln() - (t * t).ln_1p()).exp()
            },
            0.0,
            1.0,
            &self.cfg,
        )?;
        Ok(s * v)
    }

    /// Normalized density of Im Z at y.
    pub fn eval(&self, y: f64) -> Result<f64> {
        Ok(self.c * self.profile_plus(self.sign * y)?)
    }
}

impl DensityHandle for AxisDensity {
    fn support(&self) -> Support {
        Support::Axis
    }

    fn density_at(&self, z: Complex64) -> Result<f64> {
        self.eval(z.im)
    }
}

/// c_{p,s}(π/2)·f_±(y).
pub fn density_axis(p: f64, s: f64, y: f64, sign: f64, cfg: &QuadratureConfig) -> Result<f64> {
    AxisDensity::new(p, s, sign, cfg)?.eval(y)
}

/// Generalized inverse Gaussian density x^{−p−1} e^{−(x+1/x)/s}/(2K_p(2/s)).
#[derive(Debug, Clone, Copy)]
pub struct GigDensity {
    p: f64,
    s: f64,
    log_norm: f64,
}

impl GigDensity {
    pub fn new(p: f64, s: f64, cfg: &QuadratureConfig) -> Result<Self> {
        ModelParams::new(p, s, 0.0)?;
        let scaled = bessel_k_scaled(p, Complex64::new(2.0 / s, 0.0), cfg)?.re;
        // ln(2K_p(2/s)) = ln 2 + ln(e^{2/s}K) − 2/s
        Ok(Self { p, s, log_norm: (2.0 * scaled).ln() - 2.0 / s })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        (-(self.p + 1.0) * x.ln() - (x + 1.0 / x) / self.s - self.log_norm).exp()
    }
}

impl DensityHandle for GigDensity {
    fn support(&self) -> Support {
        Support::HalfLine
    }

    fn density_at(&self, z: Complex64) -> Result<f64> {
        Ok(self.eval(z.re))
    }
}

pub fn density_gig(p: f64, s: f64, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(GigDensity::new(p, s, cfg)?.eval(x))
}

/// Density of Dyson's continued fraction a₁t/(1 + a₂t/(1 + ...)),
/// C·x^{p−1}(1+x)^{−p} e^{−x/(st)}, with C computed once at construction.
#[derive(Debug, Clone, Copy)]
pub struct DysonDensity {
    p: f64,
    s: f64,
    t: f64,
    log_c: f64,
}

impl DysonDensity {
    pub fn new(p: f64, s: f64, t: f64, cfg: &QuadratureConfig) -> Result<Self> {
        if !(p > 0.0 && s > 0.0 && t > 0.0) {
            return Err(domain("Dyson density needs p, s, t > 0"));
        }
        let mass = integrate_positive(|x: f64| Ok(Self::log_kernel(p, s, t, x).exp()), cfg)?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { p, s, t, log_c: -mass.ln() })
    }

    /// Builds the density from a known normalization constant.
    pub fn with_constant(p: f64, s: f64, t: f64, c: f64) -> Self {
        Self { p, s, t, log_c: c.ln() }
    }

    fn log_kernel(p: f64, s: f64, t: f64, x: f64) -> f64 {
        (p - 1.0) * x.ln() - p * x.ln_1p() - x / (s * t)
    }

    pub fn normalization(&self) -> f64 {
        self.log_c.exp()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        (self.log_c + Self::log_kernel(self.p, self.s, self.t, x)).exp()
    }
}

impl DensityHandle for DysonDensity {
    fn support(&self) -> Support {
        Support::HalfLine
    }

    fn density_at(&self, z: Complex64) -> Result<f64> {
        Ok(self.eval(z.re))
    }
}

pub fn density_dyson(p: f64, s: f64, t: f64, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(DysonDensity::new(p, s, t, cfg)?.eval(x))
}

/// The invariant density for any regime, behind one handle.
#[derive(Debug, Clone, Copy)]
pub enum InvariantDensity {
    HalfLine(GigDensity),
    Cone(ConeDensity),
    Axis(AxisDensity),
}

impl InvariantDensity {
    pub fn new(params: &ModelParams, cfg: &QuadratureConfig) -> Result<Self> {
        params.validate()?;
        Ok(match params.regime() {
            Regime::HalfLine => Self::HalfLine(GigDensity::new(params.p, params.s, cfg)?),
            Regime::Cone => Self::Cone(ConeDensity::new(*params, cfg)?),
            Regime::Axis { sign } => Self::Axis(AxisDensity::new(params.p, params.s, sign, cfg)?),
        })
    }
}

impl DensityHandle for InvariantDensity {
    fn support(&self) -> Support {
        match self {
            Self::HalfLine(d) => d.support(),
            Self::Cone(d) => d.support(),
            Self::Axis(d) => d.support(),
        }
    }

    fn density_at(&self, z: Complex64) -> Result<f64> {
        match self {
            Self::HalfLine(d) => d.density_at(z),
            Self::Cone(d) => d.density_at(z),
            Self::Axis(d) => d.density_at(z),
        }
    }
}

/// Density of 1/Z given the density of Z: |z|^{−4} f(1/z) on the cone,
/// |z|^{−2} f(1/z) on a line.
#[derive(Debug, Clone, Copy)]
pub struct Inverted<D>(pub D);

impl<D: DensityHandle> DensityHandle for Inverted<D> {
    fn support(&self) -> Support {
        self.0.support()
    }

    fn density_at(&self, z: Complex64) -> Result<f64> {
        let n2 = z.norm_sqr();
        if n2 == 0.0 {
            return Ok(0.0);
        }
        let power = match self.0.support() {
            Support::Cone { .. } => 2,
            _ => 1,
        };
        let f = self.0.density_at(z.inv())?;
        if f == 0.0 {
            return Ok(0.0);
        }
        Ok((f.ln() - f64::from(power) * n2.ln()).exp())
    }
}

/// Total mass of a density handle.
pub fn total_mass<D: DensityHandle + ?Sized>(density: &D, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_against(density, |_| Ok(1.0), cfg)
}

pub const MAX_MOMENT_DEGREE: u32 = 8;

/// Coefficients of φ(t)^n (e^{iα} + t e^{−iα})^{m−n} indexed by exponent + n.
fn moment_polynomial(alpha: f64, m: u32, n: u32) -> Vec<Complex64> {
    let phi = [Complex64::new(1.0, 0.0), Complex64::new(2.0 * (2.0 * alpha).cos(), 0.0), Complex64::new(1.0, 0.0)];
    let lin = [Complex64::from_polar(1.0, alpha), Complex64::from_polar(1.0, -alpha)];
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mul = |a: &[Complex64], b: &[Complex64]| {
        let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    for _ in 0..n {
        poly = mul(&poly, &phi);
    }
    for _ in 0..(m - n) {
        poly = mul(&poly, &lin);
    }
    poly
}

/// M^{(m,n)} = E[Z^m conj(Z)^n] for n ≤ m and m + n ≤ 8.
pub fn moment(params: &ModelParams, m: u32, n: u32, cfg: &QuadratureConfig) -> Result<MomentResult> {
    params.validate()?;
    if n > m {
        return Err(Error::UnsupportedMoment { m, n, reason: "requires n <= m; use M(m,n) = conj M(n,m)" });
    }
    if m + n > MAX_MOMENT_DEGREE {
        return Err(Error::UnsupportedMoment { m, n, reason: "requires m + n <= 8" });
    }
    let (p, s, alpha) = (params.p, params.s, params.alpha);
    let value = match params.regime() {
        Regime::Axis { .. } => {
            return Err(domain("moments are defined for |alpha| < pi/2 only"));
        }
        Regime::HalfLine => {
            // E X^k = K_{p−k}(2/s)/K_p(2/s)
            let x = Complex64::new(2.0 / s, 0.0);
            let k = f64::from(m + n);
            bessel_k_scaled(p - k, x, cfg)? / bessel_k_scaled(p, x, cfg)?
        }
        Regime::Cone => {
            let u = Complex64::from_polar(2.0 / s, alpha);
            let v = u.conj();
            let power = -((m + n + 1) as i32);
            let poly = moment_polynomial(alpha, m, n);
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, coef) in poly.iter().enumerate() {
                let exponent = idx as f64 - f64::from(n);
                let order = p - f64::from(m) + exponent;
                let i = macdonald_integral_scaled(&MacdonaldIndex { order, power, u, v }, cfg)?;
                acc += coef * i;
            }
            // c·I = I_scaled / (4|e^{u}K_p(u)|²) since e^{u+v} = e^{2 Re u}
            let norm = bessel_k_scaled(p, u, cfg)?.norm_sqr() * 4.0;
            acc * (4.0 * (2.0 / s).powi((m + n) as i32) / norm)
        }
    };
    Ok(MomentResult { m, n, value })
}

/// Mean K_{p−1}(v)/K_p(v), v = 2e^{−iα}/s.
pub fn mean(params: &ModelParams, cfg: &QuadratureConfig) -> Result<Complex64> {
    params.validate()?;
    let v = params.bessel_argument().conj();
    Ok(bessel_k_scaled(params.p - 1.0, v, cfg)? / bessel_k_scaled(params.p, v, cfg)?)
}

/// Variance (s/sin 2α)·Im{e^{iα} K_{p−1}(v)/K_p(v)}, 0 < |α| < π/2.
pub fn variance(params: &ModelParams, cfg: &QuadratureConfig) -> Result<f64> {
    if params.regime() != Regime::Cone {
        return Err(domain("variance formula needs 0 < |alpha| < pi/2"));
    }
    let ratio = mean(params, cfg)?;
    let a = params.alpha;
    Ok(params.s / (2.0 * a).sin() * (Complex64::from_polar(1.0, a) * ratio).im)
}

/// ∫_0^A γ_{p,s}(a) h(a) da, with a = A v^{1/p} when p < 1 to absorb the
/// singular weight at 0.
fn gamma_expectation<H>(p: f64, s: f64, upper: f64, mut h: H, cfg: &QuadratureConfig) -> Result<f64>
where
    H: FnMut(f64) -> Result<f64>,
{
    let log_norm = -p * s.ln() - libm::lgamma(p);
    let trap = Trap::new();
    let value = if upper.is_infinite() {
        if p < 1.0 {
            // split at 1: [0,1] via substitution, [1,∞) directly
            let head = integrate(
                |v: f64| {
                    let a = v.powf(1.0 / p);
                    trap.catch(h(a)) * (-a / s + log_norm).exp() / p
                },
                0.0,
                1.0,
                cfg,
            );
            let tail = integrate_half_line(
                |a: f64| {
                    let w = ((p - 1.0) * a.ln() - a / s + log_norm).exp();
                    if w == 0.0 {
                        0.0
                    } else {
                        trap.catch(h(a)) * w
                    }
                },
                1.0,
                s.max(1.0),
                cfg,
            );
            head.and_then(|x| tail.map(|y| x + y))
        } else {
            integrate_half_line(
                |a: f64| {
                    let w = ((p - 1.0) * a.ln() - a / s + log_norm).exp();
                    if w == 0.0 {
                        0.0
                    } else {
                        trap.catch(h(a)) * w
                    }
                },
                0.0,
                s * p.max(1.0),
                cfg,
            )
        }
    } else if p < 1.0 {
        let scale = upper.powf(p) / p;
        integrate(
            |v: f64| {
                let a = upper * v.powf(1.0 / p);
                trap.catch(h(a)) * (-a / s + log_norm).exp() * scale
            },
            0.0,
            1.0,
            cfg,
        )
    } else {
        integrate(
            |a: f64| {
                let w = ((p - 1.0) * a.ln() - a / s + log_norm).exp();
                if w == 0.0 {
                    0.0
                } else {
                    trap.catch(h(a)) * w
                }
            },
            0.0,
            upper,
            cfg,
        )
    };
    trap.finish(value)
}

/// |f_α(z) − |z|^{−4} ∫_0^{a(1/z)} f_α(1/z − a e^{iα}) γ_{p,s}(a) da|, the
/// defect of the stationarity equation at z.
pub fn stationary_residual(params: &ModelParams, z: ConePoint, cfg: &QuadratureConfig) -> Result<f64> {
    let density = ConeDensity::new(*params, cfg)?;
    stationary_residual_with(&density, z, cfg)
}

/// As [`stationary_residual`] with a prebuilt density.
pub fn stationary_residual_with(density: &ConeDensity, z: ConePoint, cfg: &QuadratureConfig) -> Result<f64> {
    let ModelParams { p, s, alpha } = density.params();
    if !z.in_cone(alpha) || z.theta.abs() == alpha.abs() {
        return Ok(0.0);
    }
    let lhs = density.eval(z);
    let inv = z.to_complex().inv();
    let shift = Complex64::from_polar(1.0, alpha);
    // 1/z − a e^{iα} stays in the cone for a < sin(α−θ)/(r sin 2α)
    let upper = (alpha - z.theta).sin() / (z.r * (2.0 * alpha).sin());
    let integral = gamma_expectation(
        p,
        s,
        upper,
        |a| Ok(density.eval(ConePoint::from_complex(inv - shift * a))),
        &cfg.scaled(0.01),
    )?;
    Ok((lhs - integral / z.r.powi(4)).abs())
}

/// |f(y) − y^{−2} ∫_0^∞ f(∓a − 1/y) γ_{p,s}(a) da| on the axis, where the
/// sign follows α = ±π/2.
pub fn axis_stationary_residual(params: &ModelParams, y: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let density = AxisDensity::from_params(params, cfg)?;
    axis_stationary_residual_with(&density, y, cfg)
}

pub fn axis_stationary_residual_with(density: &AxisDensity, y: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if y == 0.0 {
        return Err(domain("axis residual needs y != 0"));
    }
    let lhs = density.eval(y)?;
    let sign = density.sign;
    let integral = gamma_expectation(density.p, density.s, f64::INFINITY, |a| density.eval(-sign * a - 1.0 / y), &cfg.scaled(0.01))?;
    Ok((lhs - integral / (y * y)).abs())
}
