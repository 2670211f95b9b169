use hamext_core::catalog::{self, Overrides};
use hamext_core::mechanics::{CanonicalChart, PhasePoint};
use hamext_core::par::Execution;
use hamext_core::symexpr::{parse, NumericEnv, Poly, Symbol, SymbolTable, ZeroTier};
use hamext_core::verify::{
    bracket_residual, degree_check, drift_report, integrate_flow, IntegratorConfig, SamplerConfig,
};

fn qp() -> (Symbol, Symbol, CanonicalChart, SymbolTable) {
    let q = Symbol::coordinate("q");
    let p = Symbol::momentum("p");
    let chart = CanonicalChart::single(&q, &p).unwrap();
    let t = SymbolTable::with(&[&q, &p]);
    (q, p, chart, t)
}

fn poly(text: &str, t: &SymbolTable) -> Poly {
    parse(text, t).unwrap().to_poly().unwrap()
}

fn ttw_sampler() -> SamplerConfig {
    let entry = catalog::entry("ttw").unwrap();
    SamplerConfig {
        seed: 42,
        points: 1000,
        boxes: catalog::default_boxes("ttw").unwrap(),
        bindings: entry.bindings(&Overrides::new()),
        ..SamplerConfig::default()
    }
}

#[test]
fn bracket_of_h_with_itself_is_exact() {
    let ext = catalog::ttw(2, 1, &Overrides::new()).unwrap();
    let stats = bracket_residual(ext.h(), ext.h(), ext.chart(), &ttw_sampler()).unwrap();
    assert_eq!(stats.tier, ZeroTier::Exact);
    assert!(stats.pass);
}

#[test]
fn ttw_integral_passes_sampled_check() {
    let ext = catalog::ttw(2, 1, &Overrides::new()).unwrap();
    let k = ext.first_integral().unwrap();
    let stats = bracket_residual(ext.h(), k, ext.chart(), &ttw_sampler()).unwrap();
    assert!(stats.pass);
    assert!(stats.max_abs >= stats.mean_abs && stats.mean_abs >= 0.0);
}

#[test]
fn deliberate_non_integral_fails() {
    let ext = catalog::ttw(2, 1, &Overrides::new()).unwrap();
    let k = ext.h() + &Poly::symbol(ext.p_u());
    let stats = bracket_residual(ext.h(), &k, ext.chart(), &ttw_sampler()).unwrap();
    assert!(!stats.pass);
    assert_eq!(stats.tier, ZeroTier::NonZero);
    // {H, p_u} = -dH/du: the residual is of the size of the radial force.
    let dh = ext.h().derivative(ext.u());
    let mut env = ttw_sampler().bindings;
    for (s, v) in [("psi", 1.0), ("u", 1.0)] {
        env.bind(&Symbol::coordinate(s), v);
    }
    env.bind(&Symbol::momentum("p_psi"), 1.0);
    assert!(dh.evaluate(&env).unwrap().abs() > 1e-3);
    assert!(stats.normalized() > 1e-3);
}

#[test]
fn unbound_parameter_is_an_error() {
    let ext = catalog::ttw(2, 1, &Overrides::new()).unwrap();
    let k = ext.first_integral().unwrap();
    let cfg = SamplerConfig {
        boxes: catalog::default_boxes("ttw").unwrap(),
        ..SamplerConfig::default()
    };
    let bad = ext.h() + &Poly::symbol(&Symbol::momentum("p_u"));
    assert!(bracket_residual(&bad, k, ext.chart(), &cfg).is_err());
}

#[test]
fn serial_and_parallel_sampling_agree_bitwise() {
    let ext = catalog::ttw(1, 2, &Overrides::new()).unwrap();
    let k = ext.first_integral().unwrap();
    // A perturbed integral so the sampled path actually runs.
    let k = k + &Poly::symbol(&Symbol::coordinate("psi"));
    let mut cfg = ttw_sampler();
    cfg.execution = Execution::Serial;
    let a = bracket_residual(ext.h(), &k, ext.chart(), &cfg).unwrap();
    cfg.execution = Execution::Parallel;
    let b = bracket_residual(ext.h(), &k, ext.chart(), &cfg).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn free_particle_moves_linearly() {
    let (q, p, chart, t) = qp();
    let h = poly("p^2/2", &t);
    let x0 = PhasePoint::new(chart, NumericEnv::new().with(&q, 0.3).with(&p, -1.7)).unwrap();
    let cfg = IntegratorConfig {
        t_end: 5.0,
        samples: 50,
        ..IntegratorConfig::default()
    };
    let traj = integrate_flow(&h, &x0, &NumericEnv::new(), &cfg).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        assert!((s[0] - (0.3 - 1.7 * t)).abs() < 1e-10);
        assert!((s[1] + 1.7).abs() < 1e-12);
    }
}

#[test]
fn harmonic_oscillator_conserves_energy_and_follows_closed_form() {
    let (q, p, chart, t) = qp();
    let h = poly("(p^2 + q^2)/2", &t);
    let x0 = PhasePoint::new(chart, NumericEnv::new().with(&q, 1.0).with(&p, 0.0)).unwrap();
    let drift_at = |rel_tol: f64| {
        let cfg = IntegratorConfig {
            rel_tol,
            abs_tol: rel_tol * 1e-2,
            t_end: 100.0,
            samples: 2000,
            ..IntegratorConfig::default()
        };
        let traj = integrate_flow(&h, &x0, &NumericEnv::new(), &cfg).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[0] - t.cos()).abs() < 1e5 * rel_tol, "t = {t}");
        }
        drift_report(&traj, &[("H".into(), h.clone())], 1e-8).unwrap()
    };
    let tight = drift_at(1e-10);
    assert!(tight.accepted, "{tight:?}");
    let loose = drift_at(2e-10);
    // Halving the tolerance may not make things worse beyond the method's order.
    assert!(tight.quantities[0].max_drift <= 4.0 * loose.quantities[0].max_drift + 1e-15);
}

#[test]
fn constant_quantity_has_zero_drift() {
    let (q, p, chart, t) = qp();
    let h = poly("(p^2 + q^2)/2", &t);
    let x0 = PhasePoint::new(chart, NumericEnv::new().with(&q, 1.0).with(&p, 0.5)).unwrap();
    let traj = integrate_flow(&h, &x0, &NumericEnv::new(), &IntegratorConfig::default()).unwrap();
    let report = drift_report(&traj, &[("three".into(), Poly::int(3))], 1e-12).unwrap();
    assert_eq!(report.quantities[0].max_drift, 0.0);
    assert_eq!(report.quantities[0].initial, 3.0);
}

fn ttw_point(ext: &hamext_core::extension::ExtendedSystem) -> PhasePoint {
    let env = NumericEnv::new()
        .with(&Symbol::coordinate("psi"), 1.1)
        .with(&Symbol::momentum("p_psi"), 0.3)
        .with(ext.u(), 1.0)
        .with(ext.p_u(), 0.2);
    PhasePoint::new(ext.chart().clone(), env).unwrap()
}

#[test]
fn ttw_flow_conserves_l() {
    let ext = catalog::ttw(2, 1, &Overrides::new()).unwrap();
    let bindings = catalog::entry("ttw").unwrap().bindings(&Overrides::new());
    let cfg = IntegratorConfig {
        t_end: 20.0,
        ..IntegratorConfig::default()
    };
    let traj = integrate_flow(ext.h(), &ttw_point(&ext), &bindings, &cfg).unwrap();
    let report = drift_report(&traj, &[("L".into(), ext.seed().l().clone())], 1e-7).unwrap();
    assert!(report.accepted, "{report:?}");
}

#[test]
fn singular_start_is_reported() {
    let ext = catalog::ttw(2, 1, &Overrides::new()).unwrap();
    let bindings = catalog::entry("ttw").unwrap().bindings(&Overrides::new());
    let env = NumericEnv::new()
        .with(&Symbol::coordinate("psi"), 0.0)
        .with(&Symbol::momentum("p_psi"), 0.3)
        .with(ext.u(), 1.0)
        .with(ext.p_u(), 0.2);
    let x0 = PhasePoint::new(ext.chart().clone(), env).unwrap();
    assert!(integrate_flow(ext.h(), &x0, &bindings, &IntegratorConfig::default()).is_err());
}

#[test]
fn degree_report_follows_generator_degree() {
    for (m, n, observed) in [(2, 1, 3), (1, 1, 5), (1, 2, 9)] {
        let ext = catalog::ttw(m, n, &Overrides::new()).unwrap();
        let d = degree_check(&ext).unwrap();
        assert_eq!(d.observed, Some(observed), "({m},{n})");
        assert!(d.matches_prediction());
    }
    let ext = catalog::ttw(2, 1, &Overrides::new()).unwrap();
    assert!(degree_check(&ext).unwrap().matches_mu_plus_nu());
    let ext = catalog::ttw(1, 1, &Overrides::new()).unwrap();
    assert!(!degree_check(&ext).unwrap().matches_mu_plus_nu());
}
