//! Comparison tolerances shared by every predicate in the crate.

use serde::{Deserialize, Serialize};

pub const EPS_ENV: &str = "CHAIN_GATHER_EPS";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute length tolerance, in connectivity-range units.
    pub len: f64,
    pub ang: f64,
    pub area: f64,
    /// Gathered once the diameter of the swarm is at most this.
    pub gather: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            len: 1e-9,
            ang: 1e-9,
            area: 1e-12,
            gather: 1e-6,
        }
    }
}

impl Tolerances {
    /// All tolerances zero; used where only a numeric fallback is wanted.
    pub fn exact() -> Self {
        Tolerances {
            len: 0.0,
            ang: 0.0,
            area: 0.0,
            gather: 0.0,
        }
    }

    /// Defaults, with `len` and `ang` replaced by `CHAIN_GATHER_EPS` when set.
    pub fn from_env() -> Result<Self, String> {
        let mut t = Tolerances::default();
        if let Ok(raw) = std::env::var(EPS_ENV) {
            let eps: f64 = raw
                .trim()
                .parse()
                .map_err(|_| format!("{EPS_ENV}: not a number: {raw:?}"))?;
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(format!("{EPS_ENV}: must be finite and non-negative"));
            }
            t.len = eps;
            t.ang = eps;
        }
        Ok(t)
    }

    /// `a ≤ b` with the inclusive side widened by `eps`.
    pub fn le(a: f64, b: f64, eps: f64) -> bool {
        a <= b + eps
    }

    /// `a < b`, strictly beating the tolerance.
    pub fn lt(a: f64, b: f64, eps: f64) -> bool {
        a < b - eps
    }

    pub fn eq(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps
    }
}
