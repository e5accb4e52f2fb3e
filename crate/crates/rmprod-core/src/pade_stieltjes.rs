//! Random Stieltjes continued fractions
//! F(t) = 1/(c_1 + t/(c_2 + t/(c_3 + ⋯))) with γ_{p,σ} coefficients, and the
//! measured convergence rate of their truncations.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::invariant_measure::ModelParams;
use crate::simulate::{CoefficientLaw, EstimateWithError, RngStream};

pub const PROXY_FACTOR: usize = 4;
pub const MIN_R_SQUARED: f64 = 0.9;

/// Coefficients c_1..c_N drawn from γ_{p,σ}.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesDraw {
    pub p: f64,
    pub sigma: f64,
    pub coeffs: Vec<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

impl StieltjesDraw {
    pub fn sample(p: f64, sigma: f64, len: usize, rng: &mut RngStream) -> Result<Self> {
        let law = CoefficientLaw::gamma(p, sigma)?;
        let coeffs = (0..len).map(|_| law.sample(rng)).collect();
        Ok(Self { p, sigma, coeffs, seed: rng.seed(), stream_id: rng.stream_id() })
    }

    pub fn from_coeffs(p: f64, sigma: f64, coeffs: Vec<f64>) -> Self {
        Self { p, sigma, coeffs, seed: 0, stream_id: 0 }
    }
}

fn check_t(t: Complex64) -> Result<()> {
    if !(t.re.is_finite() && t.im.is_finite()) || (t.im == 0.0 && t.re < 0.0) {
        return Err(domain("t must avoid the negative real axis"));
    }
    Ok(())
}

fn check_n(draw: &StieltjesDraw, n: usize) -> Result<()> {
    if n == 0 || n > draw.coeffs.len() {
        return Err(domain("convergent index must lie in 1..=N"));
    }
    Ok(())
}

/// F_n(t) by the backward recurrence, falling back to the forward one if a
/// partial denominator vanishes.
pub fn convergent(draw: &StieltjesDraw, n: usize, t: Complex64) -> Result<Complex64> {
    check_t(t)?;
    check_n(draw, n)?;
    let mut v = Complex64::new(draw.coeffs[n - 1], 0.0);
    for k in (0..n - 1).rev() {
        if v.norm_sqr() == 0.0 {
            return convergent_forward(draw, n, t);
        }
        v = t / v + draw.coeffs[k];
    }
    if v.norm_sqr() == 0.0 {
        return convergent_forward(draw, n, t);
    }
    Ok(v.inv())
}

/// F_n = A_n/B_n from A_k = c_k A_{k−1} + t A_{k−2}, B likewise, with
/// A_0 = 0, A_1 = 1, B_0 = 1, B_1 = c_1, rescaled as they grow.
pub fn convergent_forward(draw: &StieltjesDraw, n: usize, t: Complex64) -> Result<Complex64> {
    check_t(t)?;
    check_n(draw, n)?;
    let (mut a_prev, mut a_cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let (mut b_prev, mut b_cur) = (Complex64::new(1.0, 0.0), Complex64::new(draw.coeffs[0], 0.0));
    for &c in &draw.coeffs[1..n] {
        let a_next = a_cur * c + a_prev * t;
        let b_next = b_cur * c + b_prev * t;
        a_prev = a_cur;
        a_cur = a_next;
        b_prev = b_cur;
        b_cur = b_next;
        let big = [a_prev, a_cur, b_prev, b_cur].iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if big > 1e100 || (big < 1e-100 && big > 0.0) {
            for z in [&mut a_prev, &mut a_cur, &mut b_prev, &mut b_cur] {
                *z /= big;
            }
        }
    }
    if b_cur.norm_sqr() == 0.0 {
        return Err(Error::NonFinite);
    }
    Ok(a_cur / b_cur)
}

/// Complex logs of F_n − F_{n−1} = (−1)^{n−1} t^{n−1}/(B_n B_{n−1}) for
/// n = 2..=N (index 0 ↔ n = 2), computed without forming the differences.
fn log_increments(draw: &StieltjesDraw, t: Complex64) -> Vec<Complex64> {
    let len = draw.coeffs.len();
    let log_t = t.ln();
    let mut out = Vec::with_capacity(len.saturating_sub(1));
    let (mut b_prev, mut b_cur) = (Complex64::new(1.0, 0.0), Complex64::new(draw.coeffs[0], 0.0));
    let mut log_prev = 0.0; // B_{n−1} = b_prev·e^{log_prev}
    let mut log_cur = 0.0;
    for (idx, &c) in draw.coeffs[1..].iter().enumerate() {
        let n = idx + 2;
        // both stored values share the scale e^{log_cur} after rescaling
        let b_next = b_cur * c + b_prev * t * (log_prev - log_cur).exp();
        b_prev = b_cur;
        log_prev = log_cur;
        b_cur = b_next;
        let big = b_cur.norm();
        if big > 0.0 {
            b_cur /= big;
            log_cur += big.ln();
        }
        let sign = Complex64::new(0.0, core::f64::consts::PI * ((n - 1) % 2) as f64);
        out.push(log_t * (n - 1) as f64 + sign - b_cur.ln() - b_prev.ln() - log_cur - log_prev);
    }
    out
}

/// ln|F_N − F_n| for n = 1..N−1 (index n−1), summing the increments from
/// the tail inward in log form.
pub fn log_error_profile(draw: &StieltjesDraw, t: Complex64) -> Result<Vec<f64>> {
    check_t(t)?;
    if draw.coeffs.len() < 2 {
        return Err(domain("need at least two coefficients"));
    }
    let inc = log_increments(draw, t);
    // S_n = Σ_{m>n} d_m; ln S_n = ln d_{n+1} + ln(1 + S_{n+1}/d_{n+1})
    let mut out = alloc::vec![0.0; inc.len()];
    let mut log_tail: Option<Complex64> = None;
    for (i, &ld) in inc.iter().enumerate().rev() {
        let next = match log_tail {
            None => ld,
            Some(lt) => ld + ((lt - ld).exp() + 1.0).ln(),
        };
        if !(next.re.is_finite()) {
            return Err(Error::NonFinite);
        }
        out[i] = next.re;
        log_tail = Some(next);
    }
    Ok(out)
}

/// Slope and R² of the least-squares line through (x_i, y_i).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Model parameters whose λ governs the error decay at t.
pub fn mapped_params(p: f64, sigma: f64, t: Complex64) -> Result<ModelParams> {
    check_t(t)?;
    ModelParams::new(p, sigma / t.norm().sqrt(), -t.arg() / 2.0)
}

/// The fitted rate together with the averaged error profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStudy {
    pub estimate: EstimateWithError,
    /// Mean over realizations of ln|F − F_n|, n = 1..=n_max (index n−1).
    pub mean_log_error: Vec<f64>,
    /// Standard error of each entry of `mean_log_error`.
    pub log_error_se: Vec<f64>,
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone, k: f64) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / k;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Per-realization slopes of ln|F − F_n| over n ∈ [n_max/2, n_max] with the
/// proxy F = F_{4 n_max}, averaged over `reps` independent draws.
pub fn rate_study(p: f64, sigma: f64, t: Complex64, n_max: usize, reps: usize, rng: &mut RngStream) -> Result<RateStudy> {
    check_t(t)?;
    if n_max < 50 || reps < 10 {
        return Err(domain("rate estimate needs n_max >= 50 and reps >= 10"));
    }
    let mut slopes = Vec::with_capacity(reps);
    let mut profiles = Vec::with_capacity(reps);
    let mut worst_r2 = 1.0f64;
    let ns: Vec<f64> = (n_max / 2..=n_max).map(|n| n as f64).collect();
    for _ in 0..reps {
        let draw = StieltjesDraw::sample(p, sigma, PROXY_FACTOR * n_max, rng)?;
        let mut profile = log_error_profile(&draw, t)?;
        profile.truncate(n_max);
        let (slope, r2) = linear_fit(&ns, &profile[n_max / 2 - 1..]);
        worst_r2 = worst_r2.min(r2);
        slopes.push(slope);
        profiles.push(profile);
    }
    let k = reps as f64;
    let (mean, se) = mean_and_se(slopes.iter().copied(), k);
    let (mean_log_error, log_error_se) =
        (0..n_max).map(|i| mean_and_se(profiles.iter().map(|pr| pr[i]), k)).unzip();
    let warning = (worst_r2 < MIN_R_SQUARED).then(|| format!("noisy slope fit: minimum R^2 = {worst_r2:.3}"));
    Ok(RateStudy {
        estimate: EstimateWithError { value: mean, std_error: se, n_samples: reps as u64, warning },
        mean_log_error,
        log_error_se,
    })
}

pub fn rate_estimate(
    p: f64,
    sigma: f64,
    t: Complex64,
    n_max: usize,
    reps: usize,
    rng: &mut RngStream,
) -> Result<EstimateWithError> {
    Ok(rate_study(p, sigma, t, n_max, reps, rng)?.estimate)
}
