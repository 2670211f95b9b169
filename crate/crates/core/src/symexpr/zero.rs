use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::eval::CompiledPoly;
use super::poly::Poly;
use super::Symbol;
use crate::error::SymError;
use crate::par::{map_indices, Execution};
use crate::rng;

/// Which tier established a zero verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroTier {
    /// The canonical form is the zero polynomial.
    Exact,
    /// Nonzero canonical form, but numerically zero at every sample point.
    Heuristic,
    NonZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroVerdict {
    pub tier: ZeroTier,
    /// Largest `|value| / Σ|term values|` over the sample.
    pub max_normalized: f64,
    pub points: usize,
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        self.tier != ZeroTier::NonZero
    }
}

#[derive(Clone, Debug)]
pub struct ZeroConfig {
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
    /// Default sampling interval for every free symbol.
    pub default_box: (f64, f64),
    pub boxes: BTreeMap<Symbol, (f64, f64)>,
    pub execution: Execution,
}

impl Default for ZeroConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            points: 200,
            tol: 1e-9,
            default_box: (0.5, 1.5),
            boxes: BTreeMap::new(),
            execution: Execution::default(),
        }
    }
}

/// Exact test first, sampling only when the canonical form is nonzero.
pub fn zero_test(p: &Poly, cfg: &ZeroConfig) -> Result<ZeroVerdict, SymError> {
    if p.is_zero() {
        return Ok(ZeroVerdict {
            tier: ZeroTier::Exact,
            max_normalized: 0.0,
            points: 0,
        });
    }
    heuristic_zero(p, cfg)
}

const MAX_RETRIES: u64 = 16;

/// Evaluates at seeded random points and compares `|value|` against the sum
/// of absolute term values. Points landing on a pole are redrawn.
pub fn heuristic_zero(p: &Poly, cfg: &ZeroConfig) -> Result<ZeroVerdict, SymError> {
    let compiled = CompiledPoly::new(p);
    let symbols = compiled.symbols().to_vec();
    let results = map_indices(cfg.points, cfg.execution, |i| {
        for attempt in 0..MAX_RETRIES {
            let mut r = rng::stream(cfg.seed, (i as u64) * MAX_RETRIES + attempt);
            let slots: Vec<f64> = symbols
                .iter()
                .map(|s| {
                    let (lo, hi) = cfg.boxes.get(s).copied().unwrap_or(cfg.default_box);
                    r.random_range(lo..hi)
                })
                .collect();
            match compiled.eval(&slots) {
                Ok((v, abs)) => {
                    let scale = if abs > 0.0 { abs } else { 1.0 };
                    return Ok(v.abs() / scale);
                }
                Err(SymError::Pole(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(SymError::Pole(format!("no regular sample point found for index {i}")))
    });
    let mut max = 0.0f64;
    for r in results {
        max = max.max(r?);
    }
    Ok(ZeroVerdict {
        tier: if max < cfg.tol {
            ZeroTier::Heuristic
        } else {
            ZeroTier::NonZero
        },
        max_normalized: max,
        points: cfg.points,
    })
}
