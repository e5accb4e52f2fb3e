//! Monte Carlo: gamma draws, the continued-fraction chain, renormalized
//! matrix products and batch-means error bars.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{domain, Error, Result};
use crate::invariant_measure::{ModelParams, Regime};

pub const DEFAULT_BATCHES: usize = 50;
pub const DEFAULT_BURN_IN: usize = 1000;
pub const MIN_PRODUCT_STEPS: usize = 10_000;

/// A reproducible random stream: ChaCha20 seeded by `seed`, on stream `stream_id`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed and a different id.
    pub fn substream(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> core::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Law of the random coefficient a_n.
#[derive(Debug, Clone, Copy)]
pub enum CoefficientLaw {
    Gamma(Gamma<f64>),
    Constant(f64),
}

impl CoefficientLaw {
    pub fn gamma(p: f64, s: f64) -> Result<Self> {
        if !(p > 0.0 && s > 0.0 && p.is_finite() && s.is_finite()) {
            return Err(domain("gamma law needs finite p, s > 0"));
        }
        Gamma::new(p, s).map(Self::Gamma).map_err(|_| domain("invalid gamma parameters"))
    }

    pub fn constant(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(domain("constant coefficient must be finite and >= 0"));
        }
        Ok(Self::Constant(a))
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::Gamma(g) => g.sample(rng),
            Self::Constant(a) => *a,
        }
    }
}

/// One γ_{p,s} draw.
pub fn sample_gamma(p: f64, s: f64, rng: &mut RngStream) -> Result<f64> {
    Ok(CoefficientLaw::gamma(p, s)?.sample(rng))
}

/// Mean with a batch-means standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub warning: Option<String>,
}

impl EstimateWithError {
    /// Combines equal-length batch means.
    pub fn from_batch_means(batches: &[f64], n_samples: u64) -> Result<Self> {
        let b = batches.len();
        if b < 2 {
            return Err(domain("need at least two batches"));
        }
        let bf = b as f64;
        let mean = batches.iter().sum::<f64>() / bf;
        let var = batches.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (bf - 1.0);
        let std_error = (var / bf).sqrt();
        if !(mean.is_finite() && std_error.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { value: mean, std_error, n_samples, warning: None })
    }

    /// Pools two independent estimates, weighting by sample count.
    pub fn merge(&self, other: &Self) -> Self {
        let n = self.n_samples + other.n_samples;
        let (w1, w2) = if n == 0 {
            (0.5, 0.5)
        } else {
            (self.n_samples as f64 / n as f64, other.n_samples as f64 / n as f64)
        };
        let warning = match (&self.warning, &other.warning) {
            (Some(a), _) => Some(a.clone()),
            (None, b) => b.clone(),
        };
        Self {
            value: w1 * self.value + w2 * other.value,
            std_error: (w1 * w1 * self.std_error * self.std_error + w2 * w2 * other.std_error * other.std_error).sqrt(),
            n_samples: n,
            warning,
        }
    }
}

/// Splits a stream of scalar observations into `batches` contiguous blocks.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    sizes: Vec<usize>,
    sums: Vec<f64>,
    current: usize,
    filled: usize,
}

impl BatchMeans {
    pub fn new(n: usize, batches: usize) -> Result<Self> {
        if batches < 2 || n < batches {
            return Err(domain("batch means need n >= batches >= 2"));
        }
        let base = n / batches;
        let extra = n % batches;
        let sizes = (0..batches).map(|b| base + usize::from(b < extra)).collect();
        Ok(Self { sizes, sums: vec![0.0; batches], current: 0, filled: 0 })
    }

    pub fn push(&mut self, x: f64) {
        if self.current >= self.sizes.len() {
            return;
        }
        self.sums[self.current] += x;
        self.filled += 1;
        if self.filled == self.sizes[self.current] {
            self.current += 1;
            self.filled = 0;
        }
    }

    pub fn finish(self) -> Result<EstimateWithError> {
        let n: usize = self.sizes.iter().sum();
        let means: Vec<f64> = self.sums.iter().zip(&self.sizes).map(|(s, &k)| s / k as f64).collect();
        EstimateWithError::from_batch_means(&means, n as u64)
    }
}

pub type Matrix2 = [[Complex64; 2]; 2];

pub fn matmul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Largest singular value of a 2×2 complex matrix.
pub fn operator_norm(m: &Matrix2) -> f64 {
    let fro = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = ((fro - 2.0 * det) * (fro + 2.0 * det)).max(0.0);
    ((fro + disc.sqrt()) / 2.0).sqrt()
}

/// A_k(α) = [[0, 1], [1, a e^{iα}]].
pub fn random_matrix(a: f64, alpha: f64) -> Matrix2 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    [[zero, one], [one, Complex64::from_polar(a, alpha)]]
}

/// Running product A_1 ⋯ A_n stored as matrix·e^{log_scale}, with the
/// largest entry of `matrix` scaled to modulus 1 after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductAccumulator {
    pub matrix: Matrix2,
    pub log_scale: f64,
    pub steps: u64,
}

impl Default for ProductAccumulator {
    fn default() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        Self { matrix: [[one, zero], [zero, one]], log_scale: 0.0, steps: 0 }
    }
}

impl ProductAccumulator {
    pub fn push(&mut self, factor: &Matrix2) {
        self.matrix = matmul(&self.matrix, factor);
        let big = self.matrix.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()));
        if big > 0.0 && big.is_finite() {
            for z in self.matrix.iter_mut().flatten() {
                *z /= big;
            }
            self.log_scale += big.ln();
        }
        self.steps += 1;
    }

    /// ln ‖A_1 ⋯ A_n‖ for the operator norm.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + operator_norm(&self.matrix).ln()
    }
}

/// (1/n) ln ‖A_1(α) ⋯ A_n(α)‖ with a 50-batch standard error.
pub fn furstenberg_estimate(params: &ModelParams, n: usize, rng: &mut RngStream) -> Result<EstimateWithError> {
    params.validate()?;
    product_estimate(&CoefficientLaw::gamma(params.p, params.s)?, params.alpha, n, rng)
}

/// Product estimate for an arbitrary coefficient law.
pub fn product_estimate(law: &CoefficientLaw, alpha: f64, n: usize, rng: &mut RngStream) -> Result<EstimateWithError> {
    if n < MIN_PRODUCT_STEPS {
        return Err(domain("product estimate needs n >= 10^4"));
    }
    let mut acc = ProductAccumulator::default();
    let mut batches = BatchMeans::new(n, DEFAULT_BATCHES)?;
    let mut last = 0.0;
    for _ in 0..n {
        acc.push(&random_matrix(law.sample(rng), alpha));
        let now = acc.log_norm();
        batches.push(now - last);
        last = now;
    }
    batches.finish()
}

/// The state of the continued-fraction chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainState {
    /// Ẑ ∈ S_α for |α| < π/2.
    Cone(Complex64),
    /// Ẑ = iY on the imaginary axis; `sign` is the sign of α.
    Axis { y: f64, sign: f64 },
}

impl ChainState {
    pub fn to_complex(&self) -> Complex64 {
        match *self {
            Self::Cone(z) => z,
            Self::Axis { y, .. } => Complex64::new(0.0, y),
        }
    }
}

/// Ẑ_k = 1/(Ẑ_{k−1} + a_k e^{iα}), run in the real coordinate on the axis.
#[derive(Debug, Clone)]
pub struct Chain {
    law: CoefficientLaw,
    rotation: Complex64,
    state: ChainState,
}

impl Chain {
    pub fn new(params: &ModelParams, z0: Complex64) -> Result<Self> {
        params.validate()?;
        Self::with_law(CoefficientLaw::gamma(params.p, params.s)?, params.alpha, z0)
    }

    pub fn with_law(law: CoefficientLaw, alpha: f64, z0: Complex64) -> Result<Self> {
        let probe = ModelParams { p: 1.0, s: 1.0, alpha };
        probe.validate()?;
        let state = match probe.regime() {
            Regime::Axis { sign } => {
                if z0.re != 0.0 {
                    return Err(domain("axis chain starts on the imaginary axis"));
                }
                ChainState::Axis { y: z0.im, sign }
            }
            _ => {
                if !(z0.norm() > 0.0) || z0.arg().abs() > alpha.abs() + 1e-12 {
                    return Err(domain("starting point must lie in the cone"));
                }
                ChainState::Cone(z0)
            }
        };
        Ok(Self { law, rotation: Complex64::from_polar(1.0, alpha), state })
    }

    pub fn state(&self) -> ChainState {
        self.state
    }

    pub fn step(&mut self, rng: &mut RngStream) -> ChainState {
        loop {
            let a = self.law.sample(rng);
            match self.state {
                ChainState::Cone(z) => {
                    let d = z + self.rotation * a;
                    if d.norm_sqr() > 0.0 {
                        self.state = ChainState::Cone(d.inv());
                        return self.state;
                    }
                }
                ChainState::Axis { y, sign } => {
                    let d = sign * a + y;
                    if d != 0.0 {
                        self.state = ChainState::Axis { y: -1.0 / d, sign };
                        return self.state;
                    }
                }
            }
            if let CoefficientLaw::Constant(_) = self.law {
                // a fixed law cannot re-draw; leave the state at the pole image
                self.state = match self.state {
                    ChainState::Cone(_) => ChainState::Cone(Complex64::new(f64::INFINITY, 0.0)),
                    ChainState::Axis { sign, .. } => ChainState::Axis { y: f64::INFINITY, sign },
                };
                return self.state;
            }
        }
    }
}

/// Final state and, if requested, every iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub last: Complex64,
    pub trajectory: Option<Vec<Complex64>>,
}

pub fn iterate_chain(
    params: &ModelParams,
    z0: Complex64,
    n: usize,
    record: bool,
    rng: &mut RngStream,
) -> Result<ChainRun> {
    let mut chain = Chain::new(params, z0)?;
    let mut trajectory = if record { Some(Vec::with_capacity(n)) } else { None };
    for _ in 0..n {
        let z = chain.step(rng).to_complex();
        if let Some(t) = trajectory.as_mut() {
            t.push(z);
        }
    }
    Ok(ChainRun { last: chain.state().to_complex(), trajectory })
}

/// A starting point inside S_α.
pub fn default_start(alpha: f64) -> Complex64 {
    if (alpha.abs() - core::f64::consts::FRAC_PI_2).abs() < crate::invariant_measure::AXIS_EPS {
        Complex64::new(0.0, alpha.signum())
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Batch-means averages of g(Ẑ_k) over n post-burn-in iterates.
pub fn ergodic_average<const K: usize, G>(
    params: &ModelParams,
    n: usize,
    burn_in: usize,
    mut g: G,
    rng: &mut RngStream,
) -> Result<[EstimateWithError; K]>
where
    G: FnMut(Complex64) -> [f64; K],
{
    let mut chain = Chain::new(params, default_start(params.alpha))?;
    for _ in 0..burn_in {
        chain.step(rng);
    }
    let mut batches: Vec<BatchMeans> = (0..K).map(|_| BatchMeans::new(n, DEFAULT_BATCHES)).collect::<Result<_>>()?;
    for _ in 0..n {
        let values = g(chain.step(rng).to_complex());
        for (b, v) in batches.iter_mut().zip(values) {
            b.push(v);
        }
    }
    let out: Vec<EstimateWithError> = batches.into_iter().map(BatchMeans::finish).collect::<Result<_>>()?;
    out.try_into().map_err(|_| Error::NonFinite)
}

/// λ as −(1/n) Σ ln|Ẑ_k|.
pub fn ergodic_lyapunov(
    params: &ModelParams,
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<EstimateWithError> {
    let [e] = ergodic_average(params, n, burn_in, |z| [-z.norm().ln()], rng)?;
    Ok(e)
}

/// Chain estimates of Re E Ẑ, Im E Ẑ and E|Ẑ|².
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMoments {
    pub mean_re: EstimateWithError,
    pub mean_im: EstimateWithError,
    pub second: EstimateWithError,
}

impl ChainMoments {
    /// E|Ẑ|² − |EẐ|², with the error of the second moment (the mean's
    /// contribution is of the same order and folded in linearly).
    pub fn variance(&self) -> EstimateWithError {
        let v = self.second.value - self.mean_re.value.powi(2) - self.mean_im.value.powi(2);
        let se = self.second.std_error
            + 2.0 * (self.mean_re.value.abs() * self.mean_re.std_error + self.mean_im.value.abs() * self.mean_im.std_error);
        EstimateWithError { value: v, std_error: se, n_samples: self.second.n_samples, warning: None }
    }
}

pub fn chain_moments(params: &ModelParams, n: usize, burn_in: usize, rng: &mut RngStream) -> Result<ChainMoments> {
    let [mean_re, mean_im, second] = ergodic_average(params, n, burn_in, |z| [z.re, z.im, z.norm_sqr()], rng)?;
    Ok(ChainMoments { mean_re, mean_im, second })
}

/// Dyson's chain X_k = a_k t/(1 + X_{k−1}), matrices [[0, a t], [1, 1]].
pub fn dyson_chain_mean(
    p: f64,
    s: f64,
    t: f64,
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<EstimateWithError> {
    if !(t > 0.0) {
        return Err(domain("Dyson chain needs t > 0"));
    }
    let law = CoefficientLaw::gamma(p, s)?;
    let mut x = 1.0;
    for _ in 0..burn_in {
        x = law.sample(rng) * t / (1.0 + x);
    }
    let mut batches = BatchMeans::new(n, DEFAULT_BATCHES)?;
    for _ in 0..n {
        x = law.sample(rng) * t / (1.0 + x);
        batches.push(x);
    }
    batches.finish()
}

/// Bin edges for a histogram of the chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Edges in r = |z| and θ = arg z for the cone.
    Cone { r_edges: Vec<f64>, theta_edges: Vec<f64> },
    /// Edges in x (half line) or y = Im Ẑ (axis).
    Line { edges: Vec<f64> },
}

impl Grid {
    pub fn uniform_cone(r_max: f64, nr: usize, alpha: f64, ntheta: usize) -> Self {
        let a = alpha.abs();
        Self::Cone {
            r_edges: (0..=nr).map(|i| r_max * i as f64 / nr as f64).collect(),
            theta_edges: (0..=ntheta).map(|i| -a + 2.0 * a * i as f64 / ntheta as f64).collect(),
        }
    }

    pub fn uniform_line(lo: f64, hi: f64, n: usize) -> Self {
        Self::Line { edges: (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect() }
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
        return Err(domain("bin edges must be finite and strictly increasing"));
    }
    Ok(())
}

fn locate(edges: &[f64], x: f64) -> Option<usize> {
    if !(x >= edges[0] && x < edges[edges.len() - 1]) {
        return None;
    }
    Some(edges.partition_point(|e| *e <= x) - 1)
}

/// Fraction of post-burn-in iterates per bin; `outside` holds the rest, so
/// the masses sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub grid: Grid,
    pub mass: Vec<f64>,
    pub outside: f64,
    pub n_samples: u64,
}

impl Histogram {
    /// (lo, hi) corners of bin `i`: ((r_lo, θ_lo), (r_hi, θ_hi)) on the cone,
    /// ((x_lo, 0), (x_hi, 0)) on a line.
    pub fn bin_bounds(&self, i: usize) -> ((f64, f64), (f64, f64)) {
        match &self.grid {
            Grid::Cone { r_edges, theta_edges } => {
                let nt = theta_edges.len() - 1;
                let (ir, it) = (i / nt, i % nt);
                ((r_edges[ir], theta_edges[it]), (r_edges[ir + 1], theta_edges[it + 1]))
            }
            Grid::Line { edges } => ((edges[i], 0.0), (edges[i + 1], 0.0)),
        }
    }
}

pub fn empirical_measure(
    params: &ModelParams,
    n: usize,
    burn_in: usize,
    grid: &Grid,
    rng: &mut RngStream,
) -> Result<Histogram> {
    params.validate()?;
    if n == 0 {
        return Err(domain("histogram needs n > 0"));
    }
    let regime = params.regime();
    let nbins = match (grid, regime) {
        (Grid::Cone { r_edges, theta_edges }, Regime::Cone) => {
            check_edges(r_edges)?;
            check_edges(theta_edges)?;
            let a = params.alpha.abs() + 1e-12;
            if r_edges[0] < 0.0 || theta_edges[0] < -a || theta_edges[theta_edges.len() - 1] > a {
                return Err(domain("grid extends outside the cone"));
            }
            (r_edges.len() - 1) * (theta_edges.len() - 1)
        }
        (Grid::Line { edges }, Regime::HalfLine) => {
            check_edges(edges)?;
            if edges[0] < 0.0 {
                return Err(domain("grid extends outside the half line"));
            }
            edges.len() - 1
        }
        (Grid::Line { edges }, Regime::Axis { .. }) => {
            check_edges(edges)?;
            edges.len() - 1
        }
        _ => return Err(domain("grid kind does not match the support")),
    };
    let mut chain = Chain::new(params, default_start(params.alpha))?;
    for _ in 0..burn_in {
        chain.step(rng);
    }
    let mut counts = vec![0u64; nbins];
    let mut outside = 0u64;
    for _ in 0..n {
        let bin = match (chain.step(rng), grid) {
            (ChainState::Cone(z), Grid::Cone { r_edges, theta_edges }) => locate(r_edges, z.norm())
                .zip(locate(theta_edges, z.arg()))
                .map(|(ir, it)| ir * (theta_edges.len() - 1) + it),
            (ChainState::Cone(z), Grid::Line { edges }) => locate(edges, z.re),
            (ChainState::Axis { y, .. }, Grid::Line { edges }) => locate(edges, y),
            _ => None,
        };
        match bin {
            Some(i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    let nf = n as f64;
    Ok(Histogram {
        grid: grid.clone(),
        mass: counts.iter().map(|&c| c as f64 / nf).collect(),
        outside: outside as f64 / nf,
        n_samples: n as u64,
    })
}
