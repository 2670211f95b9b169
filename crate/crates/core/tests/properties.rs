use proptest::prelude::*;

use hamext_core::mechanics::{poisson_bracket_poly, CanonicalChart, VectorField};
use hamext_core::symexpr::{
    evaluate, parse, rat, render, zero_test, Expr, Format, NumericEnv, Poly, Symbol, SymbolTable, Tag, ZeroConfig,
    ZeroTier,
};

fn symbols() -> [Symbol; 4] {
    [
        Symbol::coordinate("q1"),
        Symbol::coordinate("q2"),
        Symbol::momentum("p1"),
        Symbol::momentum("p2"),
    ]
}

fn chart() -> CanonicalChart {
    let [q1, q2, p1, p2] = symbols();
    CanonicalChart::new(vec![(q1, p1), (q2, p2)]).unwrap()
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0usize..4).prop_map(|i| Expr::sym(&symbols()[i])),
        (-3i64..=3).prop_map(Expr::int),
        (0usize..2).prop_map(|i| Expr::sym(&symbols()[i]).sin()),
        (0usize..2).prop_map(|i| Expr::sym(&symbols()[i]).cos()),
        (0usize..2).prop_map(|i| Expr::sym(&symbols()[i]).pow(-1)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 2i64..=3).prop_map(|(a, k)| a.pow(k)),
        ]
    })
}

fn point() -> impl Strategy<Value = NumericEnv> {
    prop::array::uniform4(0.5f64..1.5).prop_map(|v| {
        let mut env = NumericEnv::new();
        for (s, x) in symbols().iter().zip(v) {
            env.bind(s, x);
        }
        env
    })
}

fn poly(e: &Expr) -> Poly {
    e.to_poly().unwrap()
}

fn vanishes(p: &Poly) -> bool {
    zero_test(p, &ZeroConfig::default()).unwrap().tier != ZeroTier::NonZero
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric(a in expr(), b in expr()) {
        let (a, b) = (poly(&a), poly(&b));
        let c = chart();
        let sum = &poisson_bracket_poly(&a, &b, &c) + &poisson_bracket_poly(&b, &a, &c);
        prop_assert!(sum.is_zero());
    }

    #[test]
    fn bracket_obeys_leibniz(a in expr(), b in expr(), d in expr()) {
        let (a, b, d) = (poly(&a), poly(&b), poly(&d));
        let c = chart();
        let lhs = poisson_bracket_poly(&a, &(&b * &d), &c);
        let rhs = &(&poisson_bracket_poly(&a, &b, &c) * &d) + &(&b * &poisson_bracket_poly(&a, &d, &c));
        prop_assert!(vanishes(&(&lhs - &rhs)));
    }

    #[test]
    fn bracket_obeys_jacobi(a in leaf(), b in expr(), d in expr()) {
        let (a, b, d) = (poly(&a), poly(&b), poly(&d));
        let c = chart();
        let br = |x: &Poly, y: &Poly| poisson_bracket_poly(x, y, &c);
        let total = &(&br(&a, &br(&b, &d)) + &br(&b, &br(&d, &a))) + &br(&d, &br(&a, &b));
        prop_assert!(vanishes(&total));
    }

    #[test]
    fn vector_field_kills_its_generator_and_is_a_derivation(l in expr(), f in expr(), g in expr()) {
        let (l, f, g) = (poly(&l), poly(&f), poly(&g));
        let x = VectorField::new(&l, &chart());
        prop_assert!(x.apply(&l).is_zero());
        let lhs = x.apply(&(&f * &g));
        let rhs = &(&x.apply(&f) * &g) + &(&f * &x.apply(&g));
        prop_assert!(vanishes(&(&lhs - &rhs)));
    }

    #[test]
    fn normal_form_evaluates_like_the_tree(e in expr(), env in point()) {
        let tree = evaluate(&e, &env);
        let normal = poly(&e).evaluate(&env);
        if let (Ok(a), Ok(b)) = (tree, normal) {
            prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn derivative_matches_central_difference(e in expr(), env in point(), i in 0usize..4) {
        let s = &symbols()[i];
        let p = poly(&e);
        let d = p.derivative(s);
        let x = env.get(s).unwrap();
        let h = 1e-5;
        let at = |v: f64| {
            let mut env = env.clone();
            env.bind(s, v);
            p.evaluate(&env)
        };
        if let (Ok(dv), Ok(fp), Ok(fm), Ok(f0)) = (d.evaluate(&env), at(x + h), at(x - h), at(x)) {
            let fd = (fp - fm) / (2.0 * h);
            let scale = 1.0 + f0.abs() + dv.abs();
            prop_assert!((dv - fd).abs() <= 1e-5 * scale, "{dv} vs {fd}");
        }
    }

    #[test]
    fn rendered_normal_form_reparses(e in expr()) {
        let p = poly(&e);
        let t = SymbolTable::with(&symbols().iter().collect::<Vec<_>>());
        let text = render(&p.to_expr(), Format::Plain);
        let back = parse(&text, &t).unwrap().to_poly().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn tagged_pythagorean_identity_and_derivatives(num in -6i64..=6, den in 1i64..=3, x in 0.1f64..1.0) {
        let kappa = rat(num, den);
        let u = Symbol::coordinate("q1");
        let arg = Expr::sym(&u);
        let s = Expr::tagged(Tag::S, kappa.clone(), arg.clone());
        let c = Expr::tagged(Tag::C, kappa.clone(), arg.clone());
        let one = poly(&(Expr::constant(kappa.clone()) * s.pow(2) + c.pow(2)));
        prop_assert_eq!(one, Poly::int(1));
        // S' = C and C' = -kappa S, checked numerically.
        let env = NumericEnv::new().with(&u, x);
        let k = hamext_core::symexpr::rational_to_f64(&kappa);
        let ds = poly(&s).derivative(&u).evaluate(&env).unwrap();
        let dc = poly(&c).derivative(&u).evaluate(&env).unwrap();
        prop_assert!(close(ds, Tag::C.apply(k, x), 1e-12));
        prop_assert!(close(dc, -k * Tag::S.apply(k, x), 1e-12));
    }
}
