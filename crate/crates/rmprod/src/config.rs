//! Run configuration: what the CLI resolved from flags and environment.

use std::fmt;

use rmprod_core::QuadratureConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TOL_ENV: &str = "RMPROD_DEFAULT_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Density,
    Lyapunov,
    Simulate,
    Schrodinger,
    Pade,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Scale every density normalization constant by 1.01.
    Normalization,
}

/// `lo:hi:count` sample grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: u32,
}

impl GridSpec {
    /// Cell centers.
    pub fn centers(&self) -> Vec<f64> {
        let h = self.width();
        (0..self.count).map(|i| self.lo + (f64::from(i) + 0.5) * h).collect()
    }

    /// Cell edges.
    pub fn edges(&self) -> Vec<f64> {
        let h = self.width();
        (0..=self.count).map(|i| self.lo + f64::from(i) * h).collect()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / f64::from(self.count)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.count)
    }
}

pub fn parse_grid(text: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, count] = parts.as_slice() else {
        return Err(format!("grid '{text}' must look like lo:hi:count"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad grid bound '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad grid bound '{hi}'"))?;
    let count: u32 = count.trim().parse().map_err(|_| format!("bad grid count '{count}'"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && count > 0) {
        return Err(format!("grid '{text}' needs finite lo < hi and count > 0"));
    }
    Ok(GridSpec { lo, hi, count })
}

/// Parses Padé degrees written `L/M` or `L,M`.
pub fn parse_pade(text: &str) -> Result<[u32; 2], String> {
    let bad = || format!("Pade degrees '{text}' must look like L/M");
    let (l, m) = text.split_once(['/', ',']).ok_or_else(bad)?;
    Ok([l.trim().parse().map_err(|_| bad())?, m.trim().parse().map_err(|_| bad())?])
}

/// Parses a real number or a multiple of π such as `pi/6`, `-9pi/20`, `0.3pi`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let t = text.trim().to_ascii_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(format!("angle '{text}' is not finite")) };
    }
    let Some(idx) = t.find("pi") else {
        return Err(format!("cannot read angle '{text}'"));
    };
    let (head, tail) = (t[..idx].trim(), t[idx + 2..].trim());
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.trim_end_matches('*').parse::<f64>().map_err(|_| format!("cannot read angle '{text}'"))?,
    };
    let divisor = match tail {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .and_then(|d| d.trim().parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(|| format!("cannot read angle '{text}'"))?,
    };
    Ok(factor * std::f64::consts::PI / divisor)
}

/// Everything needed to reproduce a run; embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub n: u64,
    pub seed: u64,
    pub burn_in: u64,
    pub grid_r: GridSpec,
    pub grid_theta: u32,
    pub format: Format,
    pub out: Option<String>,
    pub tol: f64,
    pub workers: u32,
    pub t: [f64; 2],
    pub reps: u64,
    pub pade: [u32; 2],
    pub dyson_t: Option<f64>,
    pub histogram: bool,
    pub only: Vec<u32>,
    pub inject_fault: Option<Fault>,
}

impl RunConfig {
    pub fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        QuadratureConfig::with_tol(self.tol).map_err(CliError::from_core)
    }

    pub fn single_params(&self) -> Result<(f64, f64, f64), CliError> {
        match (self.p.as_slice(), self.s.as_slice(), self.alpha.as_slice()) {
            ([p], [s], [a]) => Ok((*p, *s, *a)),
            _ => Err(CliError::Usage(format!("{:?} takes a single --p, --s and --alpha", self.command))),
        }
    }
}

/// Quadrature tolerance from the environment, or the library default.
pub fn default_tol() -> Result<f64, CliError> {
    match std::env::var(TOL_ENV) {
        Ok(v) => {
            let tol: f64 = v.trim().parse().map_err(|_| CliError::Usage(format!("{TOL_ENV}='{v}' is not a number")))?;
            if !(tol > 0.0 && tol < 1.0) {
                return Err(CliError::Usage(format!("{TOL_ENV} must lie in (0, 1)")));
            }
            Ok(tol)
        }
        Err(_) => Ok(QuadratureConfig::default().rel_tol),
    }
}
