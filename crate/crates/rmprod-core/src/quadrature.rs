//! Numerical integration: a step-halving trapezoid rule for doubly-exponentially
//! decaying integrands, and globally adaptive Gauss–Kronrod (7/15) on finite or
//! mapped infinite intervals.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};

/// Accuracy controls handed to every quadrature-backed routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinements: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_refinements: 12 }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_refinements: u32) -> Result<Self> {
        let cfg = Self { abs_tol, rel_tol, max_refinements };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same tolerance for absolute and relative error.
    pub fn with_tol(tol: f64) -> Result<Self> {
        Self::new(tol, tol, Self::default().max_refinements)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_refinements >= 1) {
            return Err(domain("quadrature tolerances must be positive and max_refinements >= 1"));
        }
        Ok(())
    }

    /// Tolerances scaled by `factor` (e.g. 1e-2 for an inner integral).
    pub fn scaled(&self, factor: f64) -> Self {
        Self { abs_tol: self.abs_tol * factor, rel_tol: self.rel_tol * factor, ..*self }
    }

    pub(crate) fn accepts(&self, err: f64, value: f64) -> bool {
        err <= self.abs_tol.max(self.rel_tol * value)
    }

    /// Interval budget for adaptive Gauss–Kronrod.
    pub(crate) fn max_intervals(&self) -> usize {
        200 * self.max_refinements as usize
    }
}

/// Scalar types the integrators can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Integrates an even, smooth integrand over `[0, ∞)` with the trapezoid rule,
/// halving the step until two successive estimates agree.
///
/// `h0` is the starting step and `tail_start` the abscissa past which the
/// integrand is known to decay monotonically; summation stops once terms
/// beyond it are negligible.
pub fn half_line_trapezoid<F>(mut f: F, h0: f64, tail_start: f64, cfg: &QuadratureConfig) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    cfg.validate()?;
    let mut h = h0;
    let mut raw = f(0.0) * 0.5 + sweep(&mut f, h, h, tail_start)?;
    let mut estimate = raw * h;
    let mut previous = estimate;
    for level in 0..cfg.max_refinements {
        h *= 0.5;
        raw = raw + sweep(&mut f, h, 2.0 * h, tail_start)?;
        previous = estimate;
        estimate = raw * h;
        if !(estimate.re.is_finite() && estimate.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if level >= 1 && cfg.accepts((estimate - previous).norm(), estimate.norm()) {
            return Ok(estimate);
        }
    }
    Err(Error::QuadratureFailure { last: estimate, previous })
}

/// Sums `f(start + k·step)` for k = 0, 1, ... until the tail is negligible.
fn sweep<F>(f: &mut F, start: f64, step: f64, tail_start: f64) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    const TAIL_EPS: f64 = 1e-19;
    const TAU_MAX: f64 = 700.0;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut quiet = 0;
    let mut tau = start;
    let mut k = 0u32;
    while tau < TAU_MAX {
        let v = f(tau);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        acc += v;
        if tau > tail_start && v.norm() <= TAIL_EPS * acc.norm() {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        k += 1;
        tau = start + step * f64::from(k);
    }
    Ok(acc)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

fn kronrod<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> Segment<T> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        k = k + pair * WGK[j];
        if j % 2 == 1 {
            g = g + pair * WG[j / 2];
        }
    }
    let value = k * half;
    let err = (k - g).magnitude() * half.abs();
    Segment { a, b, value, err }
}

/// Globally adaptive Gauss–Kronrod on a finite interval.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("integrate expects finite limits; use integrate_half_line or integrate_line"));
    }
    if a == b {
        return Ok(T::zero());
    }
    let mut segments: Vec<Segment<T>> = Vec::new();
    segments.push(kronrod(&mut f, a, b));
    let mut previous = segments[0].value;
    loop {
        let (total, err) = totals(&segments);
        if !total.magnitude().is_finite() {
            return Err(Error::NonFinite);
        }
        if cfg.accepts(err, total.magnitude()) {
            return Ok(total);
        }
        if segments.len() >= cfg.max_intervals() {
            return Err(Error::QuadratureFailure { last: total.to_complex(), previous: previous.to_complex() });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a.min(seg.b) && mid < seg.a.max(seg.b)) || (seg.b - seg.a).abs() < 1e-15 * mid.abs() {
            // Cannot split further: accept this piece as is.
            segments.push(Segment { err: 0.0, ..seg });
            continue;
        }
        previous = total;
        segments.push(kronrod(&mut f, seg.a, mid));
        segments.push(kronrod(&mut f, mid, seg.b));
    }
}

fn totals<T: QuadValue>(segments: &[Segment<T>]) -> (T, f64) {
    segments.iter().fold((T::zero(), 0.0), |(v, e), s| (v + s.value, e + s.err))
}

/// ∫_a^∞ f, through x = a + scale·t/(1−t) on t ∈ [0, 1).
pub fn integrate_half_line<T, F>(mut f: F, a: f64, scale: f64, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate(
        |t: f64| {
            if t >= 1.0 {
                return T::zero();
            }
            let one_minus = 1.0 - t;
            let x = a + scale * t / one_minus;
            let v = f(x);
            if v.magnitude() == 0.0 {
                T::zero()
            } else {
                v * (scale / (one_minus * one_minus))
            }
        },
        0.0,
        1.0,
        cfg,
    )
}

/// ∫_{-∞}^{∞} f, split at `center` into two mapped half-lines.
pub fn integrate_line<T, F>(mut f: F, center: f64, scale: f64, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let right = integrate_half_line(&mut f, center, scale, cfg)?;
    let left = integrate_half_line(|x: f64| f(2.0 * center - x), center, scale, cfg)?;
    Ok(right + left)
}
