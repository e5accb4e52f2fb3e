//! One function per subcommand, each turning a resolved [`RunConfig`] into a
//! [`Document`].

use std::f64::consts::FRAC_PI_2;

use rmprod_core::invariant_measure::{
    mean, total_mass, variance, AxisDensity, ConeDensity, ConePoint, DensityHandle, DysonDensity, GigDensity, ModelParams,
    Regime, Support,
};
use rmprod_core::lyapunov::{
    asympt_large_s, asympt_small_s, large_s_remainder, lyapunov_exact, pade_resum, small_s_series,
};
use rmprod_core::pade_stieltjes::{mapped_params, rate_study};
use rmprod_core::schrodinger::{localization_rate, wavefunction_growth, ENERGY, SPECTRUM_NOTE};
use rmprod_core::simulate::{
    chain_moments, empirical_measure, ergodic_lyapunov, furstenberg_estimate, EstimateWithError, Grid, Histogram,
    RngStream, MIN_PRODUCT_STEPS,
};
use rmprod_core::special_functions::digamma;
use rmprod_core::{Complex64, QuadratureConfig};

use crate::config::{CommandKind, Fault, RunConfig};
use crate::dyson::DysonCache;
use crate::error::{CliError, ExitCode};
use crate::output::{Cell, Document};
use crate::verify::{report_rows, run_suite, VerifyOptions, REPORT_COLUMNS};

/// Sectors |θ| ∈ [kπ/10, (k+1)π/10) of the right half-plane for the `band`
/// rows, fixed so that different α share one angular scale.
pub const THETA_BANDS: usize = 5;

/// Small-s series order used for the plain truncation column.
pub const SMALL_S_ORDER: usize = 5;

/// A finished command: the document to write, its exit status, and lines for
/// stderr that are kept out of the document (timings, warnings).
#[derive(Debug)]
pub struct Outcome {
    pub doc: Document,
    pub exit: ExitCode,
    pub notes: Vec<String>,
}

impl Outcome {
    fn ok(doc: Document) -> Self {
        Self { doc, exit: ExitCode::Success, notes: Vec::new() }
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    match config.command {
        CommandKind::Density => density(config).map(Outcome::ok),
        CommandKind::Lyapunov => lyapunov(config).map(Outcome::ok),
        CommandKind::Simulate => simulate(config),
        CommandKind::Schrodinger => schrodinger(config),
        CommandKind::Pade => pade(config),
        CommandKind::Verify => verify(config),
    }
}

fn fault_factor(config: &RunConfig) -> f64 {
    match config.inject_fault {
        Some(Fault::Normalization) => 1.01,
        None => 1.0,
    }
}

fn density(config: &RunConfig) -> Result<Document, CliError> {
    let cfg = config.quadrature()?;
    let (p, s, alpha) = config.single_params()?;
    if let Some(t) = config.dyson_t {
        let d = DysonCache::global().density(p, s, t, &cfg)?;
        return line_density(config, &cfg, "x", &LineView::Dyson(d, fault_factor(config)));
    }
    let params = ModelParams::new(p, s, alpha)?;
    match params.regime() {
        Regime::Cone => cone_density(config, &cfg, params),
        Regime::Axis { .. } => {
            let d = AxisDensity::from_params(&params, &cfg)?.with_scaled_constant(fault_factor(config));
            line_density(config, &cfg, "y", &LineView::Axis(d))
        }
        Regime::HalfLine => {
            let d = GigDensity::new(p, s, &cfg)?;
            line_density(config, &cfg, "x", &LineView::HalfLine(d, fault_factor(config)))
        }
    }
}

/// A density on a line with a pointwise evaluator.
enum LineView {
    Axis(AxisDensity),
    HalfLine(GigDensity, f64),
    Dyson(DysonDensity, f64),
}

impl DensityHandle for LineView {
    fn support(&self) -> Support {
        match self {
            Self::Axis(d) => d.support(),
            Self::HalfLine(d, _) => d.support(),
            Self::Dyson(d, _) => d.support(),
        }
    }

    fn density_at(&self, z: Complex64) -> rmprod_core::Result<f64> {
        match self {
            Self::Axis(d) => d.density_at(z),
            Self::HalfLine(d, k) => Ok(d.density_at(z)? * k),
            Self::Dyson(d, k) => Ok(d.density_at(z)? * k),
        }
    }
}

impl LineView {
    fn at(&self, x: f64) -> rmprod_core::Result<f64> {
        let z = match self {
            Self::Axis(_) => Complex64::new(0.0, x),
            _ => Complex64::new(x, 0.0),
        };
        if matches!(self, Self::HalfLine(..) | Self::Dyson(..)) && x <= 0.0 {
            return Ok(0.0);
        }
        self.density_at(z)
    }
}

fn line_density(config: &RunConfig, cfg: &QuadratureConfig, axis: &str, d: &LineView) -> Result<Document, CliError> {
    let mut doc = Document::new(config.clone(), &["kind", axis, "f"]);
    let width = config.grid_r.width();
    let mut riemann = 0.0;
    for x in config.grid_r.centers() {
        let f = d.at(x)?;
        riemann += f * width;
        doc.push(vec![Cell::text("point"), Cell::real(x), Cell::real(f)]);
    }
    let mass = total_mass(d, cfg)?;
    doc.push(vec![Cell::text("normalization"), Cell::Missing, Cell::real(mass)]);
    doc.push(vec![Cell::text("riemann_sum"), Cell::Missing, Cell::real(riemann)]);
    doc.set_meta("normalization", mass);
    doc.set_meta("riemann_sum", riemann);
    Ok(doc)
}

fn cone_density(config: &RunConfig, cfg: &QuadratureConfig, params: ModelParams) -> Result<Document, CliError> {
    let f = ConeDensity::new(params, cfg)?.with_scaled_constant(fault_factor(config));
    let a = params.alpha.abs();
    if config.grid_r.lo < 0.0 {
        return Err(CliError::Usage("--grid-r must start at r >= 0 on the cone".into()));
    }
    let nt = config.grid_theta.max(1);
    let dtheta = 2.0 * a / f64::from(nt);
    let thetas: Vec<f64> = (0..nt).map(|j| -a + (f64::from(j) + 0.5) * dtheta).collect();
    let dr = config.grid_r.width();
    let mut doc = Document::new(config.clone(), &["kind", "r", "theta", "f"]);
    let mut riemann = 0.0;
    let band_width = FRAC_PI_2 / THETA_BANDS as f64;
    let mut bands = [0.0; THETA_BANDS];
    for r in config.grid_r.centers() {
        for &theta in &thetas {
            let value = f.eval(ConePoint::new(r, theta));
            let cell = value * r * dr * dtheta;
            riemann += cell;
            bands[((theta.abs() / band_width) as usize).min(THETA_BANDS - 1)] += cell;
            doc.push(vec![Cell::text("point"), Cell::real(r), Cell::real(theta), Cell::real(value)]);
        }
    }
    for (i, mass) in bands.iter().enumerate() {
        let center = (i as f64 + 0.5) * band_width;
        doc.push(vec![Cell::text("band"), Cell::Missing, Cell::real(center), Cell::real(*mass)]);
    }
    let mass = total_mass(&f, cfg)?;
    doc.push(vec![Cell::text("normalization"), Cell::Missing, Cell::Missing, Cell::real(mass)]);
    doc.push(vec![Cell::text("riemann_sum"), Cell::Missing, Cell::Missing, Cell::real(riemann)]);
    doc.set_meta("normalization", mass);
    doc.set_meta("riemann_sum", riemann);
    Ok(doc)
}

fn lyapunov(config: &RunConfig) -> Result<Document, CliError> {
    let cfg = config.quadrature()?;
    let mut doc = Document::new(
        config.clone(),
        &[
            "p",
            "s",
            "alpha",
            "lambda_exact",
            "lambda_small_s",
            "small_s_applicable",
            "lambda_large_s",
            "large_s_applicable",
            "lambda_pade",
            "pade_applicable",
        ],
    );
    let (l, m) = (config.pade[0] as usize, config.pade[1] as usize);
    for &p in &config.p {
        for &s in &config.s {
            for &alpha in &config.alpha {
                let params = ModelParams::new(p, s, alpha)?;
                let exact = lyapunov_exact(&params, &cfg)?.value;
                let small_ok = s <= 0.5;
                let small = if small_ok {
                    asympt_small_s(&params, SMALL_S_ORDER)?.1.value
                } else {
                    small_s_series(p, alpha, SMALL_S_ORDER)?.eval(s)
                };
                let large_ok = s >= 10.0;
                let large = if large_ok {
                    asympt_large_s(&params, 1)?.1.value
                } else {
                    s.ln() + digamma(p)? + large_s_remainder(&params)
                };
                let pade = small_s_series(p, alpha, l + m).and_then(|series| pade_resum(&series, s, l, m));
                let (pade_value, pade_ok) = match pade {
                    Ok(v) if v.value.is_finite() => (v.value, true),
                    _ => (f64::NAN, false),
                };
                doc.push(vec![
                    Cell::real(p),
                    Cell::real(s),
                    Cell::real(alpha),
                    Cell::real(exact),
                    Cell::real(small),
                    Cell::Bool(small_ok),
                    Cell::real(large),
                    Cell::Bool(large_ok),
                    Cell::real(pade_value),
                    Cell::Bool(pade_ok),
                ]);
            }
        }
    }
    doc.set_meta("small_s_order", SMALL_S_ORDER as u64);
    doc.set_meta("pade_degrees", format!("[{l}/{m}]").as_str());
    Ok(doc)
}

/// Stream ids are `block · STREAM_BLOCK + worker`, so each estimated quantity
/// draws from its own streams.
const STREAM_BLOCK: u64 = 1 << 32;

/// Splits `n` over the configured workers and runs `job(rng, share)` on
/// scoped threads; results come back in worker order.
fn on_workers<R: Send>(
    config: &RunConfig,
    block: u64,
    min_share: usize,
    job: impl Fn(RngStream, usize) -> rmprod_core::Result<R> + Sync,
) -> Result<Vec<R>, CliError> {
    let n = usize::try_from(config.n).map_err(|_| CliError::Usage("--n is too large".into()))?;
    let workers = (config.workers.max(1) as usize).min(n.max(1));
    let base = n / workers;
    if base < min_share {
        return Err(CliError::Usage(format!("--n / --workers must be at least {min_share}")));
    }
    let shares: Vec<usize> = (0..workers).map(|w| base + usize::from(w < n % workers)).collect();
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = shares
            .iter()
            .enumerate()
            .map(|(w, &share)| {
                let job = &job;
                let rng = RngStream::new(config.seed, block * STREAM_BLOCK + w as u64);
                scope.spawn(move || job(rng, share))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Vec<_>>()
    });
    results.into_iter().map(|r| r.map_err(CliError::from_core)).collect()
}

fn merge_all(parts: &[EstimateWithError]) -> EstimateWithError {
    parts[1..].iter().fold(parts[0].clone(), |acc, e| acc.merge(e))
}

fn burn_in(config: &RunConfig) -> Result<usize, CliError> {
    usize::try_from(config.burn_in).map_err(|_| CliError::Usage("--burn-in is too large".into()))
}

fn estimate_row(doc: &mut Document, notes: &mut Vec<String>, quantity: &str, e: &EstimateWithError, reference: f64) {
    if let Some(w) = &e.warning {
        notes.push(format!("{quantity}: {w}"));
    }
    doc.push(vec![
        Cell::text(quantity),
        Cell::real(e.value),
        Cell::real(e.std_error),
        Cell::Int(e.n_samples as i64),
        Cell::real(reference),
    ]);
}

fn simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    let cfg = config.quadrature()?;
    let (p, s, alpha) = config.single_params()?;
    let params = ModelParams::new(p, s, alpha)?;
    let burn = burn_in(config)?;
    if config.histogram {
        return histogram(config, &params, burn);
    }
    let mut doc = Document::new(config.clone(), &["quantity", "value", "std_error", "n_samples", "reference"]);
    let mut notes = Vec::new();
    let exact = lyapunov_exact(&params, &cfg)?.value;
    let product = on_workers(config, 0, MIN_PRODUCT_STEPS, |mut rng, n| furstenberg_estimate(&params, n, &mut rng))?;
    estimate_row(&mut doc, &mut notes, "lambda_product", &merge_all(&product), exact);
    let ergodic = on_workers(config, 1, 1, |mut rng, n| ergodic_lyapunov(&params, n, burn, &mut rng))?;
    estimate_row(&mut doc, &mut notes, "lambda_ergodic", &merge_all(&ergodic), exact);
    if params.regime() == Regime::Cone {
        let moments = on_workers(config, 2, 1, |mut rng, n| chain_moments(&params, n, burn, &mut rng))?;
        let m = mean(&params, &cfg)?;
        let v = variance(&params, &cfg)?;
        let re: Vec<_> = moments.iter().map(|x| x.mean_re.clone()).collect();
        let im: Vec<_> = moments.iter().map(|x| x.mean_im.clone()).collect();
        let var: Vec<_> = moments.iter().map(|x| x.variance()).collect();
        estimate_row(&mut doc, &mut notes, "mean_re", &merge_all(&re), m.re);
        estimate_row(&mut doc, &mut notes, "mean_im", &merge_all(&im), m.im);
        estimate_row(&mut doc, &mut notes, "variance", &merge_all(&var), v);
    }
    Ok(Outcome { doc, exit: ExitCode::Success, notes })
}

fn histogram(config: &RunConfig, params: &ModelParams, burn: usize) -> Result<Outcome, CliError> {
    let grid = match params.regime() {
        Regime::Cone => {
            let a = params.alpha.abs();
            let nt = config.grid_theta.max(1);
            Grid::Cone {
                r_edges: config.grid_r.edges(),
                theta_edges: (0..=nt).map(|j| -a + 2.0 * a * f64::from(j) / f64::from(nt)).collect(),
            }
        }
        _ => Grid::Line { edges: config.grid_r.edges() },
    };
    let parts: Vec<Histogram> = on_workers(config, 3, 1, |mut rng, n| empirical_measure(params, n, burn, &grid, &mut rng))?;
    let total: u64 = parts.iter().map(|h| h.n_samples).sum();
    let weight = |h: &Histogram| h.n_samples as f64 / total as f64;
    let mut mass = vec![0.0; parts[0].mass.len()];
    let mut outside = 0.0;
    for h in &parts {
        for (m, x) in mass.iter_mut().zip(&h.mass) {
            *m += x * weight(h);
        }
        outside += h.outside * weight(h);
    }
    let cone = matches!(grid, Grid::Cone { .. });
    let columns: &[&str] = if cone { &["r_lo", "r_hi", "theta_lo", "theta_hi", "mass"] } else { &["bin_lo", "bin_hi", "mass"] };
    let mut doc = Document::new(config.clone(), columns);
    for (i, m) in mass.iter().enumerate() {
        let ((lo0, lo1), (hi0, hi1)) = parts[0].bin_bounds(i);
        let row = if cone {
            vec![Cell::real(lo0), Cell::real(hi0), Cell::real(lo1), Cell::real(hi1), Cell::real(*m)]
        } else {
            vec![Cell::real(lo0), Cell::real(hi0), Cell::real(*m)]
        };
        doc.push(row);
    }
    doc.set_meta("outside_mass", outside);
    doc.set_meta("n_samples", total);
    Ok(Outcome::ok(doc))
}

fn schrodinger(config: &RunConfig) -> Result<Outcome, CliError> {
    let cfg = config.quadrature()?;
    let n = usize::try_from(config.n).map_err(|_| CliError::Usage("--n is too large".into()))?;
    let mut doc = Document::new(config.clone(), &["p", "s", "rate", "mc_slope", "mc_stderr"]);
    let mut notes = Vec::new();
    let mut stream = 0;
    for &p in &config.p {
        for &s in &config.s {
            let rate = localization_rate(p, s, &cfg)?.rate;
            let est = wavefunction_growth(p, s, n, &mut RngStream::new(config.seed, stream))?;
            stream += 1;
            if let Some(w) = &est.warning {
                notes.push(format!("p={p}, s={s}: {w}"));
            }
            doc.push(vec![Cell::real(p), Cell::real(s), Cell::real(rate), Cell::real(est.value), Cell::real(est.std_error)]);
        }
    }
    doc.set_meta("energy", ENERGY);
    doc.set_meta("spectrum_note", SPECTRUM_NOTE);
    Ok(Outcome { doc, exit: ExitCode::Success, notes })
}

fn pade(config: &RunConfig) -> Result<Outcome, CliError> {
    let cfg = config.quadrature()?;
    let (p, sigma) = match (config.p.as_slice(), config.s.as_slice()) {
        ([p], [s]) => (*p, *s),
        _ => return Err(CliError::Usage("pade takes a single --p and --s (used as sigma)".into())),
    };
    let t = Complex64::new(config.t[0], config.t[1]);
    let n_max = usize::try_from(config.n).map_err(|_| CliError::Usage("--n is too large".into()))?;
    let reps = usize::try_from(config.reps).map_err(|_| CliError::Usage("--reps is too large".into()))?;
    let study = rate_study(p, sigma, t, n_max, reps, &mut RngStream::new(config.seed, 0))?;
    let target = -2.0 * lyapunov_exact(&mapped_params(p, sigma, t)?, &cfg)?.value;
    let mut doc = Document::new(config.clone(), &["kind", "n", "value", "std_error"]);
    for (i, (m, se)) in study.mean_log_error.iter().zip(&study.log_error_se).enumerate() {
        doc.push(vec![Cell::text("mean_log_error"), Cell::Int(i as i64 + 1), Cell::real(*m), Cell::real(*se)]);
    }
    doc.push(vec![Cell::text("slope"), Cell::Missing, Cell::real(study.estimate.value), Cell::real(study.estimate.std_error)]);
    doc.push(vec![Cell::text("target"), Cell::Missing, Cell::real(target), Cell::Missing]);
    doc.set_meta("slope", study.estimate.value);
    doc.set_meta("target", target);
    let mut notes = Vec::new();
    if let Some(w) = &study.estimate.warning {
        doc.set_meta("warning", w.as_str());
        notes.push(w.clone());
    }
    Ok(Outcome { doc, exit: ExitCode::Success, notes })
}

fn verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let opts = VerifyOptions {
        seed: config.seed,
        cfg: config.quadrature()?,
        fault: config.inject_fault,
        only: config.only.clone(),
    };
    if let Some(bad) = opts.only.iter().find(|i| !(1..=crate::verify::CRITERIA).contains(i)) {
        return Err(CliError::Usage(format!("--only {bad}: criteria are numbered 1..={}", crate::verify::CRITERIA)));
    }
    let results = run_suite(&opts);
    let mut doc = Document::new(config.clone(), &REPORT_COLUMNS);
    report_rows(&mut doc, &results);
    let notes = results
        .iter()
        .map(|r| {
            format!(
                "[{}] {:>2} {:<26} {:>8.2} s",
                if r.passed { "pass" } else { "FAIL" },
                r.id,
                r.name,
                r.elapsed.as_secs_f64()
            )
        })
        .collect();
    let exit = if results.iter().all(|r| r.passed) { ExitCode::Success } else { ExitCode::CheckFailure };
    Ok(Outcome { doc, exit, notes })
}
