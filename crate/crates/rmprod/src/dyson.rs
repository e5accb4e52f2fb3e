//! Process-wide memo of Dyson density normalizations.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rmprod_core::invariant_measure::DysonDensity;
use rmprod_core::{QuadratureConfig, Result};

type Key = (u64, u64, u64, u64);

/// Normalization constants keyed by (p, s, t, tolerance); the lock is held
/// across the computation so concurrent callers see a single value.
#[derive(Debug, Default)]
pub struct DysonCache {
    entries: Mutex<HashMap<Key, f64>>,
}

impl DysonCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn global() -> &'static DysonCache {
        static CACHE: OnceLock<DysonCache> = OnceLock::new();
        CACHE.get_or_init(DysonCache::new)
    }

    pub fn density(&self, p: f64, s: f64, t: f64, cfg: &QuadratureConfig) -> Result<DysonDensity> {
        let key = (p.to_bits(), s.to_bits(), t.to_bits(), cfg.rel_tol.to_bits());
        let mut map = self.entries.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        if let Some(&c) = map.get(&key) {
            return Ok(DysonDensity::with_constant(p, s, t, c));
        }
        let d = DysonDensity::new(p, s, t, cfg)?;
        map.insert(key, d.normalization());
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
