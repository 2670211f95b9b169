//! The checks behind `verify`.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::Result;

use hamext_core::catalog::Boxes;
use hamext_core::extension::check_seed;
use hamext_core::mechanics::CanonicalChart;
use hamext_core::par::Execution;
use hamext_core::symexpr::{NumericEnv, Poly, ZeroConfig, ZeroTier};
use hamext_core::verify::{
    bracket_residual, degree_check, drift_report, integrate_flow, seeded_point, IntegratorConfig, SamplerConfig,
};

use crate::report::Check;
use crate::target::Target;

pub const ROUTE_TOL: f64 = 1e-10;
pub const CROSS_CHECK_TOL: f64 = 1e-12;
pub const CROSS_CHECK_POINTS: usize = 100;
pub const DRIFT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Options {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub execution: Execution,
    /// Integrate the flow up to this time and report drift.
    pub drift: Option<f64>,
}

/// Carries an internal polynomial into the chart where it is sampled.
type Mapper<'a> = Box<dyn Fn(&Poly) -> Result<Poly> + 'a>;

struct Runner {
    checks: Vec<Check>,
    timings: BTreeMap<String, f64>,
}

impl Runner {
    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<Check>) {
        let start = Instant::now();
        let check = f().unwrap_or_else(|e| Check::failed(name, &e));
        self.timings
            .insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        self.checks.push(check);
    }
}

fn sampler(opts: &Options, env: &NumericEnv, boxes: &Boxes) -> SamplerConfig {
    SamplerConfig {
        seed: opts.seed,
        points: opts.samples,
        boxes: boxes.clone(),
        bindings: env.clone(),
        threshold: opts.tol,
        execution: opts.execution,
        ..SamplerConfig::default()
    }
}

fn bracket(name: &str, h: &Poly, k: &Poly, chart: &CanonicalChart, cfg: &SamplerConfig) -> Result<Check> {
    let s = bracket_residual(h, k, chart, cfg)?;
    let detail = format!("{} points, threshold {:.1e}", s.points, cfg.threshold);
    Ok(Check::from_stats(name, &s, detail))
}

fn tier_name(t: ZeroTier) -> String {
    format!("{t:?}").to_lowercase()
}

pub fn run(target: &Target, opts: &Options) -> (Vec<Check>, BTreeMap<String, f64>) {
    let mut r = Runner {
        checks: Vec::new(),
        timings: BTreeMap::new(),
    };
    let ext = &target.ext;
    let ext_cfg = sampler(opts, &target.ext_env, &target.ext_boxes);

    r.run("seed", || {
        let s = check_seed(ext.seed())?;
        Ok(Check {
            tier: Some(tier_name(s.tier)),
            normalized: Some(s.max_normalized),
            ..Check::plain("seed", s.passed(), "X_L^2(G) + 2(cL + L0)G = 0".into())
        })
    });
    r.run("{H,K}", || {
        bracket("{H,K}", ext.h(), ext.first_integral()?, ext.chart(), &ext_cfg)
    });
    r.run("{H,L}", || {
        bracket("{H,L}", ext.h(), ext.seed().l(), ext.chart(), &ext_cfg)
    });
    r.run("degree K", || {
        let d = degree_check(ext)?;
        let show = |x: Option<u32>| x.map_or_else(|| "none".to_string(), |v| v.to_string());
        Ok(Check::plain(
            "degree K",
            d.matches_prediction(),
            format!(
                "observed {}, deg(G_nu) + mu = {}, mu + nu = {}",
                show(d.observed),
                show(d.predicted),
                d.mu_plus_nu
            ),
        ))
    });

    if let Some(c) = &target.ccm {
        let sys = &c.sys;
        let l = ext.seed().l();
        let (chart, cfg, map): (&CanonicalChart, SamplerConfig, Mapper) = match &c.image {
            Some(id) => (
                &id.chart,
                sampler(opts, &id.bindings, &c.boxes),
                Box::new(move |p: &Poly| Ok(id.map_poly(p)?)),
            ),
            None => (
                sys.chart(),
                sampler(opts, &c.env, &c.boxes),
                Box::new(|p: &Poly| Ok(p.clone())),
            ),
        };
        r.run("{H~,K~}", || {
            bracket("{H~,K~}", &map(sys.h_tilde())?, &map(sys.k_tilde()?)?, chart, &cfg)
        });
        r.run("{H~,L}", || {
            bracket("{H~,L}", &map(sys.h_tilde())?, &map(l)?, chart, &cfg)
        });
        if let Some(rc) = &c.rchart {
            r.run("{H~,K~} r-chart", || {
                let (h, k) = (rc.transform(sys.h_tilde())?, rc.transform(sys.k_tilde()?)?);
                bracket("{H~,K~} r-chart", &h, &k, &rc.chart, &cfg)
            });
        }
        r.run("K~ routes", || {
            let zc = ZeroConfig {
                seed: opts.seed,
                tol: ROUTE_TOL,
                execution: opts.execution,
                ..ZeroConfig::default()
            };
            let a = sys.route_agreement(&zc)?;
            let worst = [a.theorem_tier, a.operator_tier]
                .into_iter()
                .max_by_key(|t| match t {
                    ZeroTier::Exact => 0,
                    ZeroTier::Heuristic => 1,
                    ZeroTier::NonZero => 2,
                })
                .unwrap_or(ZeroTier::Exact);
            Ok(Check {
                tier: Some(tier_name(worst)),
                normalized: Some(a.max_normalized),
                ..Check::plain(
                    "K~ routes",
                    a.agree(),
                    format!(
                        "substitution {}, operator substitution {}",
                        tier_name(a.theorem_tier),
                        tier_name(a.operator_tier)
                    ),
                )
            })
        });
    }

    if let Some(x) = &target.cross_check {
        r.run("cross-check", || {
            let err = x.id.max_relative_error(&x.internal, CROSS_CHECK_POINTS, opts.seed)?;
            Ok(Check {
                normalized: Some(err),
                ..Check::plain(
                    "cross-check",
                    err < CROSS_CHECK_TOL,
                    format!("{} under {}", x.label, x.id.description),
                )
            })
        });
    }

    if let Some(t_end) = opts.drift {
        r.run("drift", || drift(target, opts, t_end));
    }
    (r.checks, r.timings)
}

fn drift(target: &Target, opts: &Options, t_end: f64) -> Result<Check> {
    let ext = &target.ext;
    let l = ext.seed().l().clone();
    let (h, env, quantities, bound) = match &target.ccm {
        Some(c) => {
            let h = c.sys.h_tilde().clone();
            let q = vec![
                ("H~".to_string(), h.clone()),
                ("L".to_string(), l),
                ("K~".to_string(), c.sys.k_tilde()?.clone()),
            ];
            (h, c.env.clone(), q, true)
        }
        None => {
            let h = ext.h().clone();
            let q = vec![
                ("H".to_string(), h.clone()),
                ("L".to_string(), l),
                ("K".to_string(), ext.first_integral()?.clone()),
            ];
            (h, target.ext_env.clone(), q, false)
        }
    };
    let negative = |pt: &NumericEnv| {
        let mut e = pt.clone();
        e.extend(&env);
        h.evaluate(&e).map(|v| v < 0.0).unwrap_or(false)
    };
    let (cbox, pbox) = ((0.8, 1.3), (-0.4, 0.4));
    // Prefer a bound orbit for metamorphosed systems.
    let x0 = match bound {
        true => seeded_point(ext.chart(), opts.seed, cbox, pbox, negative)
            .or_else(|_| seeded_point(ext.chart(), opts.seed, cbox, pbox, |_| true))?,
        false => seeded_point(ext.chart(), opts.seed, cbox, pbox, |_| true)?,
    };
    let cfg = IntegratorConfig {
        t_end,
        ..IntegratorConfig::default()
    };
    let traj = integrate_flow(&h, &x0, &env, &cfg)?;
    let report = drift_report(&traj, &quantities, DRIFT_TOL)?;
    let worst = report.quantities.iter().map(|q| q.max_drift).fold(0.0, f64::max);
    let detail = report
        .quantities
        .iter()
        .map(|q| format!("{} {:.2e}", q.name, q.max_drift))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Check {
        normalized: Some(worst),
        ..Check::plain(
            "drift",
            report.accepted,
            format!("t <= {t_end}, {} steps: {detail}", traj.stats.accepted),
        )
    })
}
