//! Tight-binding chain y_{k+1} = a_k y_k − y_{k−1} at energy 2 with gamma
//! site potentials.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Result};
use crate::invariant_measure::ModelParams;
use crate::lyapunov::lyapunov_exact;
use crate::quadrature::QuadratureConfig;
use crate::simulate::{BatchMeans, CoefficientLaw, EstimateWithError, Matrix2, RngStream, DEFAULT_BATCHES, MIN_PRODUCT_STEPS};

pub const ENERGY: f64 = 2.0;
pub const SPECTRUM_NOTE: &str = "almost surely sigma(H) = (0, +inf) for a potential supported on [0, inf)";
const RENORMALIZE_EVERY: usize = 16;

/// [[0, −1], [1, a]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub entries: [[f64; 2]; 2],
}

impl TransferMatrix {
    pub fn new(a: f64) -> Self {
        Self { entries: [[0.0, -1.0], [1.0, a]] }
    }

    pub fn determinant(&self) -> f64 {
        let m = self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn to_complex(&self) -> Matrix2 {
        self.entries.map(|row| row.map(|x| Complex64::new(x, 0.0)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    /// Inverse localization length in nats per site.
    pub rate: f64,
    pub energy: f64,
    pub spectrum_note: &'static str,
}

/// λ_{p,s}(π/2), the inverse localization length at energy 2.
pub fn localization_rate(p: f64, s: f64, cfg: &QuadratureConfig) -> Result<LocalizationResult> {
    let params = ModelParams::new(p, s, core::f64::consts::FRAC_PI_2)?;
    Ok(LocalizationResult { rate: lyapunov_exact(&params, cfg)?.value, energy: ENERGY, spectrum_note: SPECTRUM_NOTE })
}

/// Growth rate of (y_{k−1}, y_k) from the given start, renormalized every
/// 16 sites, with a 50-batch standard error.
pub fn wavefunction_growth_with(
    law: &CoefficientLaw,
    n: usize,
    start: (f64, f64),
    rng: &mut RngStream,
) -> Result<EstimateWithError> {
    if n < MIN_PRODUCT_STEPS {
        return Err(domain("wavefunction growth needs n >= 10^4"));
    }
    if start.0 == 0.0 && start.1 == 0.0 {
        return Err(domain("initial vector must be nonzero"));
    }
    let (mut prev, mut cur) = start;
    let mut log_scale = 0.0;
    let mut last = cur.abs().max(prev.abs()).ln();
    let mut batches = BatchMeans::new(n, DEFAULT_BATCHES)?;
    for k in 1..=n {
        let next = law.sample(rng) * cur - prev;
        prev = cur;
        cur = next;
        if k % RENORMALIZE_EVERY == 0 {
            let big = cur.abs().max(prev.abs());
            if big > 0.0 {
                prev /= big;
                cur /= big;
                log_scale += big.ln();
            }
        }
        let now = log_scale + cur.abs().max(prev.abs()).ln();
        batches.push(now - last);
        last = now;
    }
    batches.finish()
}

/// Gamma potential, start (y_0, y_1) = (0, 1).
pub fn wavefunction_growth(p: f64, s: f64, n: usize, rng: &mut RngStream) -> Result<EstimateWithError> {
    wavefunction_growth_with(&CoefficientLaw::gamma(p, s)?, n, (0.0, 1.0), rng)
}
