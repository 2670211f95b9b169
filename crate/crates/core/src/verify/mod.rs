//! Numeric verification: sampled bracket residuals, Hamiltonian flows,
//! drift reports and the momentum-degree check.

mod dopri;
mod flow;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SymError};
use crate::extension::ExtendedSystem;
use crate::mechanics::{poisson_bracket_poly, CanonicalChart};
use crate::par::{map_indices, Execution};
use crate::rng;
use crate::symexpr::{CompiledPoly, NumericEnv, Poly, Symbol, ZeroTier};

pub use dopri::{Dopri5, StepStats};
pub use flow::{drift_report, integrate_flow, seeded_point, DriftReport, IntegratorConfig, QuantityDrift, Trajectory};

pub const DEFAULT_THRESHOLD: f64 = 1e-9;

/// Retries per sample index when a point lands on a pole.
const POLE_RETRIES: u64 = 16;

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub seed: u64,
    pub points: usize,
    /// Per-symbol sampling interval; unlisted phase symbols use `default_box`.
    pub boxes: BTreeMap<Symbol, (f64, f64)>,
    pub default_box: (f64, f64),
    /// Values for every parameter.
    pub bindings: NumericEnv,
    pub threshold: f64,
    pub execution: Execution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            points: 1000,
            boxes: BTreeMap::new(),
            default_box: (0.5, 1.5),
            bindings: NumericEnv::new(),
            threshold: DEFAULT_THRESHOLD,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Largest sum of absolute term values over the sample.
    pub scale: f64,
    pub tier: ZeroTier,
    pub points: usize,
    pub pass: bool,
}

impl ResidualStats {
    pub fn normalized(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_abs / self.scale
        } else {
            self.max_abs
        }
    }
}

/// Samples `p` over the phase symbols of `chart` with parameters bound by
/// `cfg.bindings`. An identically zero `p` is reported as exact without sampling.
pub fn residual_stats(p: &Poly, chart: &CanonicalChart, cfg: &SamplerConfig) -> Result<ResidualStats> {
    if p.is_zero() {
        return Ok(ResidualStats {
            max_abs: 0.0,
            mean_abs: 0.0,
            scale: 0.0,
            tier: ZeroTier::Exact,
            points: 0,
            pass: true,
        });
    }
    let compiled = CompiledPoly::new(p);
    let phase = chart.phase_symbols();
    for s in compiled.symbols() {
        if !phase.contains(s) && cfg.bindings.get(s).is_none() {
            return Err(Error::InvalidParams(format!("parameter `{s}` is unbound")));
        }
    }
    let samples = map_indices(cfg.points, cfg.execution, |i| -> Result<(f64, f64)> {
        for attempt in 0..POLE_RETRIES {
            let mut r = rng::stream(cfg.seed, i as u64 * POLE_RETRIES + attempt);
            let mut env = cfg.bindings.clone();
            for s in &phase {
                let (lo, hi) = cfg.boxes.get(s).copied().unwrap_or(cfg.default_box);
                env.bind(s, r.random_range(lo..hi));
            }
            match compiled.eval(&compiled.bind(&env)?) {
                Ok((v, abs)) => return Ok((v.abs(), abs)),
                Err(SymError::Pole(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(Error::Sym(SymError::Pole(format!(
            "no regular point for sample {i}; check the sampling box"
        ))))
    });
    collect(samples, cfg)
}

/// Statistics of `{h, k}` over seeded points.
///
/// The bracket is evaluated numerically from the gradients of `h` and `k`,
/// independently of its symbolic expansion. The scale at a point is
/// `Σ A(∂h/∂q)A(∂k/∂p) + A(∂h/∂p)A(∂k/∂q)` with `A` the sum of absolute term
/// values, which bounds the absolute monomial sum of the expanded bracket.
/// The tier is exact when the symbolic bracket is the zero polynomial.
pub fn bracket_residual(h: &Poly, k: &Poly, chart: &CanonicalChart, cfg: &SamplerConfig) -> Result<ResidualStats> {
    let exact = poisson_bracket_poly(h, k, chart).is_zero();
    let phase = chart.phase_symbols();
    let mut parts = Vec::new();
    for (q, p) in chart.all_pairs() {
        parts.push([
            CompiledPoly::new(&h.derivative(q)),
            CompiledPoly::new(&k.derivative(p)),
            CompiledPoly::new(&h.derivative(p)),
            CompiledPoly::new(&k.derivative(q)),
        ]);
    }
    for c in parts.iter().flatten() {
        for s in c.symbols() {
            if !phase.contains(s) && cfg.bindings.get(s).is_none() {
                return Err(Error::InvalidParams(format!("parameter `{s}` is unbound")));
            }
        }
    }
    let samples = map_indices(cfg.points, cfg.execution, |i| -> Result<(f64, f64)> {
        'attempt: for attempt in 0..POLE_RETRIES {
            let mut r = rng::stream(cfg.seed, i as u64 * POLE_RETRIES + attempt);
            let mut env = cfg.bindings.clone();
            for s in &phase {
                let (lo, hi) = cfg.boxes.get(s).copied().unwrap_or(cfg.default_box);
                env.bind(s, r.random_range(lo..hi));
            }
            let mut value = 0.0;
            let mut scale = 0.0;
            for group in &parts {
                let mut v = [(0.0, 0.0); 4];
                for (slot, c) in v.iter_mut().zip(group) {
                    match c.eval(&c.bind(&env)?) {
                        Ok(x) => *slot = x,
                        Err(SymError::Pole(_)) => continue 'attempt,
                        Err(e) => return Err(e.into()),
                    }
                }
                value += v[0].0 * v[1].0 - v[2].0 * v[3].0;
                scale += v[0].1 * v[1].1 + v[2].1 * v[3].1;
            }
            return Ok((value.abs(), scale));
        }
        Err(Error::Sym(SymError::Pole(format!(
            "no regular point for sample {i}; check the sampling box"
        ))))
    });
    let mut stats = collect(samples, cfg)?;
    if exact {
        stats.tier = ZeroTier::Exact;
        stats.pass = true;
    }
    Ok(stats)
}

fn collect(samples: Vec<Result<(f64, f64)>>, cfg: &SamplerConfig) -> Result<ResidualStats> {
    let mut max_abs = 0.0f64;
    let mut sum = 0.0;
    let mut scale = 0.0f64;
    for s in samples {
        let (v, abs) = s?;
        max_abs = max_abs.max(v);
        sum += v;
        scale = scale.max(abs);
    }
    let mean_abs = sum / cfg.points.max(1) as f64;
    let normalized = if scale > 0.0 { max_abs / scale } else { max_abs };
    let pass = normalized < cfg.threshold;
    Ok(ResidualStats {
        max_abs,
        mean_abs,
        scale,
        tier: if pass { ZeroTier::Heuristic } else { ZeroTier::NonZero },
        points: cfg.points,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub observed: Option<u32>,
    /// `μ + ν`.
    pub mu_plus_nu: u32,
    /// Degree of `G_ν` plus `μ`: each of the `μ/2` applications of `W`
    /// raises the momentum degree by two.
    pub predicted: Option<u32>,
}

impl DegreeReport {
    pub fn matches_mu_plus_nu(&self) -> bool {
        self.observed == Some(self.mu_plus_nu)
    }

    pub fn matches_prediction(&self) -> bool {
        self.observed.is_some() && self.observed == self.predicted
    }
}

pub fn degree_check(ext: &ExtendedSystem) -> Result<DegreeReport> {
    let k = ext.first_integral()?;
    let g = ext.g_nu()?;
    let momenta = ext.chart().momentum_set();
    Ok(DegreeReport {
        observed: k.degree_in(&momenta),
        mu_plus_nu: ext.mu() + ext.nu(),
        predicted: g.degree_in(&momenta).map(|d| d + ext.mu()),
    })
}
