use std::f64::consts::PI;

use hamext_core::catalog::{self, Overrides, RChart};
use hamext_core::ccm::{rescaled_operator, RescaleConfig, WtildeCoefficients};
use hamext_core::mechanics::poisson_bracket_poly;
use hamext_core::symexpr::{int, rat, zero_test, Expr, NumericEnv, Poly, Symbol, ZeroConfig, ZeroTier};

fn none() -> Overrides {
    Overrides::new()
}

fn exact_zero(p: &Poly) -> bool {
    zero_test(p, &ZeroConfig::default()).unwrap().tier == ZeroTier::Exact
}

fn not_zero(p: &Poly) -> bool {
    zero_test(p, &ZeroConfig::default()).unwrap().tier == ZeroTier::NonZero
}

#[test]
fn ttw_matches_textbook_form_with_prefactor_two() {
    for (m, n) in [(1, 1), (2, 1), (1, 2), (3, 2)] {
        let ext = catalog::ttw(m, n, &none()).unwrap();
        let id = catalog::ttw_identification(&ext, &none()).unwrap();
        let err = id.max_relative_error(ext.h(), 100, 7).unwrap();
        assert!(err < 1e-12, "({m},{n}): {err}");
    }
}

#[test]
fn ttw_angular_potential_splits_into_half_angles() {
    // (c1 + c2 cos 2x)/sin^2 2x = [(c1+c2)/sin^2 x + (c1-c2)/cos^2 x]/4
    let (c1, c2) = (0.9, -0.35);
    for i in 1..20 {
        let x = 0.07 * f64::from(i);
        let lhs = (c1 + c2 * (2.0 * x).cos()) / (2.0 * x).sin().powi(2);
        let rhs = ((c1 + c2) / x.sin().powi(2) + (c1 - c2) / x.cos().powi(2)) / 4.0;
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
    }
}

#[test]
fn ttw_overrides_replace_parameters() {
    let mut o = none();
    o.insert("c2".into(), int(0));
    let ext = catalog::ttw(2, 1, &o).unwrap();
    assert!(!ext.h().depends_on(&Symbol::parameter("c2")));
    let mut bad = none();
    bad.insert("zeta".into(), int(1));
    assert!(catalog::ttw(1, 1, &bad).is_err());
}

#[test]
fn pw_integral_commutes_in_both_charts() {
    for (m, n) in [(1, 1), (2, 1)] {
        let sys = catalog::pw(m, n, &none()).unwrap();
        let h = sys.h_tilde();
        let k = sys.k_tilde().unwrap();
        assert!(
            exact_zero(&poisson_bracket_poly(h, k, sys.chart())),
            "u-chart ({m},{n})"
        );

        let rc = RChart::new(&sys).unwrap();
        let hr = rc.transform(h).unwrap();
        let kr = rc.transform(k).unwrap();
        assert!(!hr.depends_on(sys.source().u()));
        assert!(
            exact_zero(&poisson_bracket_poly(&hr, &kr, &rc.chart)),
            "r-chart ({m},{n})"
        );
    }
}

#[test]
fn pw_r_chart_matches_textbook_form() {
    for (m, n) in [(1, 1), (2, 1), (1, 2)] {
        let sys = catalog::pw(m, n, &none()).unwrap();
        let rc = RChart::new(&sys).unwrap();
        let hr = rc.transform(sys.h_tilde()).unwrap();
        let id = catalog::pw_identification(&sys, &rc, &none()).unwrap();
        let err = id.max_relative_error(&hr, 100, 11).unwrap();
        assert!(err < 1e-12, "({m},{n}): {err}");
    }
}

#[test]
fn pw_angle_doubling_map_does_not_match() {
    let sys = catalog::pw(2, 1, &none()).unwrap();
    let rc = RChart::new(&sys).unwrap();
    let hr = rc.transform(sys.h_tilde()).unwrap();
    let mut id = catalog::pw_identification(&sys, &rc, &none()).unwrap();
    let k = catalog::ttw_k(2, 1);
    let phi = Symbol::coordinate("phi");
    let p_phi = Symbol::momentum("p_phi");
    for (s, e) in id.substitutions.iter_mut() {
        if s.name() == "psi" {
            *e = Expr::constant(&k * int(2)) * Expr::sym(&phi);
        } else if s.name() == "p_psi" {
            *e = Expr::constant((&k * int(2)).recip()) * Expr::sym(&p_phi);
        }
    }
    assert!(id.max_relative_error(&hr, 50, 11).unwrap() > 1e-3);
}

#[test]
fn r_chart_rejects_odd_powers() {
    let sys = catalog::pw(1, 1, &none()).unwrap();
    let rc = RChart::new(&sys).unwrap();
    let u = Poly::symbol(sys.source().u());
    assert!(rc.transform(&u).is_err());
    let u2 = &u * &u;
    let two_r = Poly::symbol(&rc.r).scale(&int(2));
    assert_eq!(rc.transform(&u2).unwrap(), two_r);
}

#[test]
fn ccm_routes_agree() {
    for (m, n) in [(1, 1), (2, 1)] {
        let sys = catalog::pw(m, n, &none()).unwrap();
        let agreement = sys.route_agreement(&ZeroConfig::default()).unwrap();
        assert!(agreement.agree(), "pw ({m},{n}): {}", agreement.max_normalized);
        let (_, caged) = catalog::caged(m, n, &none()).unwrap();
        let agreement = caged.route_agreement(&ZeroConfig::default()).unwrap();
        assert!(agreement.agree(), "caged ({m},{n}): {}", agreement.max_normalized);
    }
}

#[test]
fn caged_extension_and_metamorphosis_commute() {
    for (m, n) in [(1, 1), (2, 1), (1, 2)] {
        let (ext, sys) = catalog::caged(m, n, &none()).unwrap();
        let k = ext.first_integral().unwrap();
        assert!(
            exact_zero(&poisson_bracket_poly(ext.h(), k, ext.chart())),
            "ext ({m},{n})"
        );
        let kt = sys.k_tilde().unwrap();
        assert!(
            exact_zero(&poisson_bracket_poly(sys.h_tilde(), kt, sys.chart())),
            "ccm ({m},{n})"
        );
    }
}

#[test]
fn caged_hamiltonian_has_closed_form() {
    // H = p_u^2/2 + (m/n)^2 A L + (m/n)^2 L0 A^2 u^2 + f0/(A^2 u^2), with gamma = -A u.
    let (ext, _) = catalog::caged(2, 1, &none()).unwrap();
    let q = Symbol::coordinate("q");
    let pq = Symbol::momentum("p_q");
    let env = NumericEnv::new()
        .with(&q, 0.8)
        .with(&pq, -0.6)
        .with(ext.u(), 1.3)
        .with(ext.p_u(), 0.4)
        .with(&Symbol::parameter("A"), 1.5)
        .with(&Symbol::parameter("a1"), 0.7)
        .with(&Symbol::parameter("a2"), 0.2)
        .with(&Symbol::parameter("c1"), 1.1)
        .with(&Symbol::parameter("c2"), 0.3)
        .with(&Symbol::parameter("L0"), 0.9)
        .with(&Symbol::parameter("f0"), 0.25);
    let (a, a1, a2, c1, c2, l0, f0) = (1.5, 0.7, 0.2, 1.1, 0.3, 0.9, 0.25);
    let (qv, pv, u, pu) = (0.8f64, -0.6f64, 1.3f64, 0.4f64);
    let s = a1 * qv + a2;
    let l = pv * pv / 2.0 + l0 / (4.0 * a1 * a1) * s * s + c1 / (s * s) + c2;
    let k2 = 4.0;
    let expected = pu * pu / 2.0 + k2 * a * l + k2 * l0 * a * a * u * u + f0 / (a * a * u * u);
    let got = ext.h().evaluate(&env).unwrap();
    assert!((got - expected).abs() < 1e-12 * expected.abs());
}

#[test]
fn halfplane_matches_textbook_form_and_commutes() {
    for (m, n) in [(1, 1), (2, 1), (3, 2)] {
        let (sys, id) = catalog::halfplane(m, n, &none()).unwrap();
        let h = id.map_poly(sys.h_tilde()).unwrap();
        let err = id.max_relative_error(sys.h_tilde(), 100, 3).unwrap();
        assert!(err < 1e-12, "({m},{n}): {err}");
        if m + n <= 3 {
            let k = id.map_poly(sys.k_tilde().unwrap()).unwrap();
            assert!(exact_zero(&poisson_bracket_poly(&h, &k, &id.chart)), "({m},{n})");
        }
    }
}

#[test]
fn halfplane_operator_has_expected_coefficients() {
    // b L must read -8k^2 L with m/n = 2k, and e = 2E' - 4 omega^2 y^2.
    let (sys, id) = catalog::halfplane(2, 1, &none()).unwrap();
    let w = sys.wtilde();
    let b = id.map_poly(&w.b).unwrap();
    let k = catalog::ttw_k(2, 1);
    assert_eq!(b.as_constant(), Some(-(&k * &k) * int(8)));
    let e = id.map_poly(&w.e).unwrap();
    let env = NumericEnv::new()
        .with(&Symbol::coordinate("y"), 1.2)
        .with(&Symbol::parameter("omega"), 0.7)
        .with(&Symbol::parameter("c2"), 0.3)
        .with(&Symbol::parameter("E"), 1.1);
    let expected = 2.0 * 1.1 + 8.0 * 0.3 * 1.0 - 4.0 * 0.49 * 1.44;
    assert!((e.evaluate(&env).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn halving_the_l0_term_breaks_the_integral() {
    let (_, sys) = catalog::caged(2, 1, &none()).unwrap();
    let mut coeffs = WtildeCoefficients::closed_form(sys.source(), sys.e());
    let gamma = &sys.source().structural().gamma;
    let r = sys.source().params().ratio();
    let l0_term = (&(gamma * gamma) * sys.source().seed().l0()).scale(&(&r * &r * int(2)));
    coeffs.e = &coeffs.e + &l0_term;
    let k = sys.k_tilde_with(&coeffs).unwrap();
    assert!(not_zero(&poisson_bracket_poly(sys.h_tilde(), &k, sys.chart())));
}

#[test]
fn flipping_the_l_coefficient_sign_breaks_the_integral() {
    let sys = catalog::pw(2, 1, &none()).unwrap();
    let mut coeffs = WtildeCoefficients::closed_form(sys.source(), sys.e());
    coeffs.b = coeffs.b.scale(&int(-1));
    let k = sys.k_tilde_with(&coeffs).unwrap();
    assert!(not_zero(&poisson_bracket_poly(sys.h_tilde(), &k, sys.chart())));
}

#[test]
fn ttw_operator_l_coefficient_in_both_charts() {
    // b = -4 (mu^2/nu^2)/u^2 = -2 (mu^2/nu^2)/r.
    let sys = catalog::pw(2, 1, &none()).unwrap();
    let (mu, nu) = (i64::from(sys.source().mu()), i64::from(sys.source().nu()));
    let rc = RChart::new(&sys).unwrap();
    let b = &sys.wtilde().b;
    let u = Poly::symbol(sys.source().u());
    let expected_u = (&u * &u).recip().unwrap().scale(&rat(-4 * mu * mu, nu * nu));
    assert_eq!(b, &expected_u);
    let r = Poly::symbol(&rc.r);
    let expected_r = r.recip().unwrap().scale(&rat(-2 * mu * mu, nu * nu));
    assert_eq!(rc.transform(b).unwrap(), expected_r);
    let halved = expected_r.scale(&rat(1, 2));
    let mut coeffs = sys.wtilde().clone();
    coeffs.b = coeffs.b.scale(&rat(1, 2));
    assert_ne!(rc.transform(&coeffs.b).unwrap(), expected_r);
    assert_eq!(rc.transform(&coeffs.b).unwrap(), halved);
    let k = sys.k_tilde_with(&coeffs).unwrap();
    assert!(not_zero(&poisson_bracket_poly(sys.h_tilde(), &k, sys.chart())));
}

#[test]
fn rescaled_operator_columns() {
    let cfg = RescaleConfig::default();
    // kappa = 0: delta1 = gamma' - c gamma^2 = -2/u^2 when c = 1, gamma = 1/u.
    let sys = catalog::pw(2, 1, &none()).unwrap();
    let env = NumericEnv::new()
        .with(&Symbol::parameter("c1"), 1.0)
        .with(&Symbol::parameter("c2"), 1.0 / 3.0)
        .with(&Symbol::parameter("E"), 1.0);
    let op = rescaled_operator(&sys, &env, &cfg).unwrap();
    assert!(op.p_coefficient_error() < 1e-9);
    assert!(op.delta1_vs_derived() < 1e-9);
    assert!(op.delta2_vs_derived() < 1e-9);
    assert_eq!(op.delta1_sign_vs_table(), -1);
    for s in &op.samples {
        assert!((s.delta1 + 2.0 / (s.u * s.u)).abs() < 1e-9);
        assert!((s.u_tilde - (s.u * s.u - 1.0) / 2.0).abs() < 1e-10);
    }

    // Flat column: gamma = -A u, delta1 = -A.
    let (_, caged) = catalog::caged(2, 1, &none()).unwrap();
    let mut env = NumericEnv::new();
    for (name, v) in catalog::entry("caged").unwrap().parameters {
        env.bind(&Symbol::parameter(name), hamext_core::symexpr::rational_to_f64(&v));
    }
    env.bind(&Symbol::parameter("A"), 1.5);
    let op = rescaled_operator(&caged, &env, &cfg).unwrap();
    assert!(op.delta1_vs_derived() < 1e-9);
    assert!(op.delta2_vs_derived() < 1e-9);
    assert!(op.u_tilde_offset_spread() < 1e-9);
    assert_eq!(op.delta1_sign_vs_table(), -1);
    for s in &op.samples {
        assert!((s.delta1 + 1.5).abs() < 1e-9);
        assert!((s.u_tilde + s.u.ln() / 1.5).abs() < 1e-10);
    }
}

#[test]
fn textbook_ttw_oracle_at_a_point() {
    // Direct evaluation of both sides at one point, independent of the identification code.
    let ext = catalog::ttw(2, 1, &none()).unwrap();
    let (alpha, beta, et) = (0.8, 1.3, -0.7);
    let k = 1.0;
    let (rho, theta, p_rho, p_theta) = (1.1, PI / 5.0, 0.3, -0.45);
    let f2 = k * k * (alpha / (k * theta).cos().powi(2) + beta / (k * theta).sin().powi(2));
    let h_ttw = p_rho * p_rho + (p_theta * p_theta + f2) / (rho * rho) - et * rho * rho;
    let env = NumericEnv::new()
        .with(ext.u(), rho)
        .with(ext.p_u(), p_rho)
        .with(&Symbol::coordinate("psi"), 2.0 * k * theta)
        .with(&Symbol::momentum("p_psi"), p_theta / (2.0 * k))
        .with(&Symbol::parameter("c1"), (alpha + beta) / 4.0)
        .with(&Symbol::parameter("c2"), (beta - alpha) / 4.0)
        .with(&Symbol::parameter("f0"), -et / 2.0);
    let h = ext.h().evaluate(&env).unwrap();
    assert!((2.0 * h - h_ttw).abs() < 1e-12 * h_ttw.abs());
}
