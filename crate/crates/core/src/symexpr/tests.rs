use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::*;

fn ttw_table() -> (SymbolTable, Symbol, Symbol) {
    let psi = Symbol::coordinate("psi");
    let p = Symbol::momentum("p_psi");
    let mut t = SymbolTable::with(&[&psi, &p]);
    for name in ["c1", "c2", "c", "u"] {
        let kind = if name == "u" {
            SymbolKind::Coordinate
        } else {
            SymbolKind::Parameter
        };
        t.declare(name, kind).unwrap();
    }
    (t, psi, p)
}

fn norm(text: &str, t: &SymbolTable) -> Expr {
    normalize(&parse(text, t).unwrap()).unwrap()
}

fn central_difference(e: &Expr, s: &Symbol, env: &NumericEnv, h: f64) -> f64 {
    let x = env.get(s).unwrap();
    let hi = evaluate(e, &env.clone().with(s, x + h)).unwrap();
    let lo = evaluate(e, &env.clone().with(s, x - h)).unwrap();
    (hi - lo) / (2.0 * h)
}

#[test]
fn parses_ttw_seed() {
    let (t, psi, p) = ttw_table();
    let l = parse("p_psi^2/2 + (c1 + c2*cos(psi))/sin(psi)^2", &t).unwrap();
    let c1 = t.get("c1").unwrap().clone();
    let c2 = t.get("c2").unwrap().clone();
    let env = NumericEnv::new()
        .with(&psi, 0.7)
        .with(&p, 1.3)
        .with(&c1, 0.4)
        .with(&c2, -0.2);
    let expected = 1.3f64.powi(2) / 2.0 + (0.4 - 0.2 * 0.7f64.cos()) / 0.7f64.sin().powi(2);
    assert!((evaluate(&l, &env).unwrap() - expected).abs() < 1e-14);
}

#[test]
fn parses_zero_and_tagged_identity() {
    let (t, _, _) = ttw_table();
    assert!(norm("0", &t).is_zero_node());
    assert_eq!(norm("S[0](c*u)", &t), norm("c*u", &t));
    assert_eq!(norm("T[0](u)", &t), norm("u", &t));
    assert_eq!(norm("C[0](u)", &t), Expr::one());
}

#[test]
fn parse_errors_carry_positions() {
    let (t, _, _) = ttw_table();
    match parse("p_psi + zz", &t) {
        Err(SymError::Undeclared { name, position }) => {
            assert_eq!(name, "zz");
            assert_eq!(position, 8);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse("u^1.5", &t), Err(SymError::Syntax { .. })));
    assert!(matches!(parse("(u + 1", &t), Err(SymError::Syntax { .. })));
    assert!(matches!(parse("u u", &t), Err(SymError::Syntax { .. })));
}

#[test]
fn negative_exponent_forms() {
    let (t, _, _) = ttw_table();
    assert_eq!(norm("u^-2", &t), norm("1/u^2", &t));
    assert_eq!(norm("u^(-2)", &t), norm("1/(u*u)", &t));
    assert_eq!(norm("C[-1/2](u)", &t), norm("C[-0.5](u)", &t));
}

#[test]
fn derivative_examples() {
    let (t, psi, _) = ttw_table();
    let u = t.get("u").unwrap().clone();
    assert_eq!(
        differentiate(&parse("p_psi*sin(psi)", &t).unwrap(), &psi).unwrap(),
        norm("p_psi*cos(psi)", &t)
    );
    assert_eq!(
        differentiate(&parse("1/u", &t).unwrap(), &u).unwrap(),
        norm("-1/u^2", &t)
    );
    let e = parse("(1 + cos(psi))/sin(psi)^2", &t).unwrap();
    let d = differentiate(&e, &psi).unwrap();
    let env = NumericEnv::new().with(&psi, PI / 3.0);
    let oracle = central_difference(&e, &psi, &env, 1e-6);
    let got = evaluate(&d, &env).unwrap();
    assert!((got - oracle).abs() < 1e-6 * oracle.abs());
    // (1 + cos)/sin^2 = 1/(1 - cos), so the slope is -sin/(1 - cos)^2 = -2*sqrt(3).
    assert!((got + 2.0 * 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn tagged_derivatives() {
    let (t, _, _) = ttw_table();
    let u = t.get("u").unwrap().clone();
    for kappa in ["2", "-3/2", "0"] {
        let s = parse(&format!("S[{kappa}](u)"), &t).unwrap();
        let c = parse(&format!("C[{kappa}](u)"), &t).unwrap();
        let tt = parse(&format!("T[{kappa}](u)"), &t).unwrap();
        assert_eq!(differentiate(&s, &u).unwrap().to_poly().unwrap(), c.to_poly().unwrap());
        let dc = parse(&format!("-({kappa})*S[{kappa}](u)"), &t).unwrap();
        assert_eq!(differentiate(&c, &u).unwrap().to_poly().unwrap(), dc.to_poly().unwrap());
        let dt = parse(&format!("1/C[{kappa}](u)^2"), &t).unwrap();
        let got = differentiate(&tt, &u).unwrap().to_poly().unwrap();
        let want = dt.to_poly().unwrap();
        let diff = &got - &want;
        let verdict = zero_test(&diff, &ZeroConfig::default()).unwrap();
        assert!(verdict.is_zero(), "kappa {kappa}: {got} vs {want}");
    }
}

#[test]
fn pythagorean_identity() {
    let (t, _, _) = ttw_table();
    assert_eq!(norm("p_psi^2*sin(psi)^2 + p_psi^2*cos(psi)^2", &t), norm("p_psi^2", &t));
    assert!(norm("C[3](u)^2 + 3*S[3](u)^2 - 1", &t).is_zero_node());
    assert!(norm("cosh(u)^2 - sinh(u)^2 - 1", &t).to_poly().unwrap().len() <= 4);
}

#[test]
fn normalize_is_idempotent_on_samples() {
    let (t, _, _) = ttw_table();
    for text in [
        "(c1 + c2*cos(psi))/sin(psi)^2 * (p_psi + u)^3",
        "u/(c*u + 1)^2 - 1/(c*u + 1)",
        "S[2](u)^3*C[2](u)^3/T[2](u)",
        "exp(2*u)*exp(-u)",
    ] {
        let once = norm(text, &t);
        assert_eq!(normalize(&once).unwrap(), once, "{text}");
    }
}

#[test]
fn substitution_without_occurrence_is_identity() {
    let (t, _, _) = ttw_table();
    let e = parse("p_psi*sin(psi) + c1", &t).unwrap();
    let mut b = BTreeMap::new();
    b.insert(Symbol::parameter("E"), Expr::one());
    let out = substitute(&e, &b);
    assert!(std::sync::Arc::ptr_eq(&out.0, &e.0));
}

#[test]
fn substitution_is_simultaneous() {
    let (t, _, _) = ttw_table();
    let c1 = t.get("c1").unwrap().clone();
    let c2 = t.get("c2").unwrap().clone();
    let e = parse("c1 - c2", &t).unwrap();
    let mut b = BTreeMap::new();
    b.insert(c1.clone(), Expr::sym(&c2));
    b.insert(c2, Expr::sym(&c1));
    assert_eq!(normalize(&substitute(&e, &b)).unwrap(), norm("c2 - c1", &t));
}

#[test]
fn evaluation_examples() {
    let (t, _, _) = ttw_table();
    let u = t.get("u").unwrap().clone();
    let env = |x: f64| NumericEnv::new().with(&u, x);
    assert_eq!(evaluate(&parse("S[0](u)", &t).unwrap(), &env(3.7)).unwrap(), 3.7);
    for k in ["2", "0", "-2"] {
        let c = parse(&format!("C[{k}](u)"), &t).unwrap();
        assert_eq!(evaluate(&c, &env(0.0)).unwrap(), 1.0);
    }
    let s4 = evaluate(&parse("S[4](u)", &t).unwrap(), &env(PI / 4.0)).unwrap();
    assert!((s4 - 0.5).abs() < 1e-15);
    assert!(matches!(
        evaluate(&parse("1/u", &t).unwrap(), &env(0.0)),
        Err(SymError::Pole(_))
    ));
    assert!(matches!(
        evaluate(&parse("u + c", &t).unwrap(), &env(1.0)),
        Err(SymError::Unbound(_))
    ));
}

#[test]
fn momentum_degree_examples() {
    let (t, _, p) = ttw_table();
    let momenta = [p].into_iter().collect();
    let deg = |s: &str| momentum_degree(&parse(s, &t).unwrap(), &momenta).unwrap();
    assert_eq!(deg("p_psi*sin(psi)"), Some(1));
    assert_eq!(deg("p_psi^2/2 + c1/sin(psi)^2"), Some(2));
    assert_eq!(deg("c1*u"), Some(0));
    assert_eq!(deg("p_psi - p_psi"), None);
}

#[test]
fn render_examples() {
    let (t, _, _) = ttw_table();
    let g = norm("sin(psi)*p_psi", &t);
    assert_eq!(render(&g, Format::Plain), "p_psi*sin(psi)");
    assert_eq!(render(&g, Format::Latex), "p_{\\psi}\\sin\\psi");
    assert_eq!(render(&Expr::zero(), Format::Plain), "0");
    let l = norm("p_psi^2/2 + (c1 + c2*cos(psi))/sin(psi)^2", &t);
    assert_eq!(render(&l, Format::Plain), render(&l, Format::Plain));
}

#[test]
fn render_reparses_to_same_normal_form() {
    let (t, _, _) = ttw_table();
    for text in [
        "p_psi^2/2 + (c1 + c2*cos(psi))/sin(psi)^2",
        "-3/(2*u^2) + S[-0.25](c*u)*p_psi",
        "u/(c*u + 1)^3",
        "T[1/3](u)^2 + exp(-u)",
    ] {
        let e = norm(text, &t);
        let again = norm(&render(&e, Format::Plain), &t);
        assert_eq!(again, e, "{text}");
    }
}

#[test]
fn heuristic_zero_catches_unreduced_identities() {
    let (t, _, _) = ttw_table();
    let p = parse("cosh(u)^2 - sinh(u)^2 - 1", &t).unwrap().to_poly().unwrap();
    let v = zero_test(&p, &ZeroConfig::default()).unwrap();
    assert!(v.is_zero());
    let q = parse("cosh(u) - sinh(u)", &t).unwrap().to_poly().unwrap();
    assert_eq!(zero_test(&q, &ZeroConfig::default()).unwrap().tier, ZeroTier::NonZero);
}
