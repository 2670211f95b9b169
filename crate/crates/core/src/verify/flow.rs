use serde::{Deserialize, Serialize};

use super::dopri::{Dopri5, StepStats};
use crate::error::{Error, Result};
use crate::mechanics::{CanonicalChart, PhasePoint};
use crate::symexpr::{CompiledPoly, NumericEnv, Poly, Symbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// Number of equally spaced dense-output samples after `t = 0`.
    pub samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            t_end: 10.0,
            max_steps: 2_000_000,
            samples: 1000,
        }
    }
}

/// Where a compiled slot takes its value from.
#[derive(Clone, Copy, Debug)]
enum Source {
    State(usize),
    Fixed(f64),
}

/// A polynomial evaluated on state vectors laid out as
/// [`CanonicalChart::phase_symbols`].
struct StateFn {
    compiled: CompiledPoly,
    sources: Vec<Source>,
}

impl StateFn {
    fn new(p: &Poly, phase: &[Symbol], bindings: &NumericEnv) -> Result<Self> {
        let compiled = CompiledPoly::new(p);
        let sources = compiled
            .symbols()
            .iter()
            .map(|s| match phase.iter().position(|x| x == s) {
                Some(i) => Ok(Source::State(i)),
                None => bindings
                    .get(s)
                    .map(Source::Fixed)
                    .ok_or_else(|| Error::InvalidParams(format!("parameter `{s}` is unbound"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { compiled, sources })
    }

    fn eval(&self, state: &[f64], slots: &mut Vec<f64>) -> Result<f64> {
        slots.clear();
        slots.extend(self.sources.iter().map(|s| match *s {
            Source::State(i) => state[i],
            Source::Fixed(v) => v,
        }));
        Ok(self.compiled.eval(slots)?.0)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub chart: CanonicalChart,
    pub bindings: NumericEnv,
    pub times: Vec<f64>,
    /// States in [`CanonicalChart::phase_symbols`] order.
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

/// Integrates `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q` from `x0` with parameters bound by
/// `bindings`, sampling the dense output on a uniform grid.
pub fn integrate_flow(h: &Poly, x0: &PhasePoint, bindings: &NumericEnv, cfg: &IntegratorConfig) -> Result<Trajectory> {
    if cfg.t_end.is_nan() || cfg.t_end <= 0.0 {
        return Err(Error::Integrator("t_end must be positive".into()));
    }
    let chart = &x0.chart;
    let phase = chart.phase_symbols();
    let dim = chart.dimension();
    let mut rhs = Vec::with_capacity(2 * dim);
    for p in chart.momenta() {
        rhs.push((StateFn::new(&h.derivative(&p), &phase, bindings)?, 1.0));
    }
    for q in chart.coordinates() {
        rhs.push((StateFn::new(&h.derivative(&q), &phase, bindings)?, -1.0));
    }
    let mut slots = Vec::new();
    let f = move |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        for (out, (g, sign)) in dy.iter_mut().zip(&rhs) {
            *out = sign * g.eval(y, &mut slots)?;
        }
        Ok(())
    };
    let mut solver = Dopri5::new(f, cfg.rel_tol, cfg.abs_tol, cfg.max_steps)?;
    let n = cfg.samples.max(1);
    let times: Vec<f64> = (0..=n).map(|i| cfg.t_end * i as f64 / n as f64).collect();
    let states = solver.solve_dense(0.0, &x0.state(), cfg.t_end, &times)?;
    Ok(Trajectory {
        chart: chart.clone(),
        bindings: bindings.clone(),
        times,
        states,
        stats: solver.stats,
    })
}

const DRIFT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantityDrift {
    pub name: String,
    pub initial: f64,
    /// `max |Q(t) − Q(0)| / max(|Q(0)|, 1e-12)`.
    pub max_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub quantities: Vec<QuantityDrift>,
    pub threshold: f64,
    pub accepted: bool,
}

pub fn drift_report(traj: &Trajectory, quantities: &[(String, Poly)], threshold: f64) -> Result<DriftReport> {
    let phase = traj.chart.phase_symbols();
    let mut out = Vec::with_capacity(quantities.len());
    let mut slots = Vec::new();
    for (name, q) in quantities {
        let f = StateFn::new(q, &phase, &traj.bindings)?;
        let first = traj
            .states
            .first()
            .ok_or_else(|| Error::Integrator("empty trajectory".into()))?;
        let initial = f.eval(first, &mut slots)?;
        let denom = initial.abs().max(DRIFT_FLOOR);
        let mut max_drift = 0.0f64;
        for s in &traj.states {
            max_drift = max_drift.max((f.eval(s, &mut slots)? - initial).abs() / denom);
        }
        out.push(QuantityDrift {
            name: name.clone(),
            initial,
            max_drift,
        });
    }
    let accepted = out.iter().all(|q| q.max_drift < threshold);
    Ok(DriftReport {
        quantities: out,
        threshold,
        accepted,
    })
}

/// First seeded point with coordinates in `coordinate_box` and momenta in
/// `momentum_box` that satisfies `accept`; draws up to 1000 candidates.
pub fn seeded_point(
    chart: &CanonicalChart,
    seed: u64,
    coordinate_box: (f64, f64),
    momentum_box: (f64, f64),
    accept: impl Fn(&NumericEnv) -> bool,
) -> Result<PhasePoint> {
    use rand::Rng;
    for i in 0..1000 {
        let mut r = crate::rng::stream(seed, i);
        let mut env = NumericEnv::new();
        for q in chart.coordinates() {
            env.bind(&q, r.random_range(coordinate_box.0..coordinate_box.1));
        }
        for p in chart.momenta() {
            env.bind(&p, r.random_range(momentum_box.0..momentum_box.1));
        }
        if accept(&env) {
            return PhasePoint::new(chart.clone(), env);
        }
    }
    Err(Error::Integrator(
        "no acceptable initial point among 1000 seeded draws".into(),
    ))
}
