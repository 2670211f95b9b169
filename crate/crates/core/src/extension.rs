//! Modified extensions of a seed Hamiltonian and the operator-power
//! construction of their high-degree first integrals.
//!
//! Given `L` and `G` with `X_L²(G) = −2(cL + L₀)G`, the extension is
//! `H = ½p_u² + f(u) + (m/n)²α(u)L` and `K = W^{μ/2}(G_ν)` is a first integral
//! of `H`, where `W = (p_u + (μ/ν²)γX_L)² + δ`.

use std::sync::OnceLock;

use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::mechanics::{CanonicalChart, VectorField};
use crate::symexpr::{int, rat, term_ceiling, zero_test, Expr, Poly, Rational, Symbol, Tag, ZeroConfig, ZeroTier};

/// Largest `μ + ν` accepted by [`ExtendedSystem::first_integral`].
pub const DEGREE_BUDGET: u32 = 14;

/// Default names of the extension pair.
pub const U_NAME: &str = "u";
pub const PU_NAME: &str = "p_u";

/// A Hamiltonian `L` with a function `G` solving the seed equation.
#[derive(Clone, Debug)]
pub struct SeedSystem {
    chart: CanonicalChart,
    l: Poly,
    g: Poly,
    c: Rational,
    l0: Poly,
}

impl SeedSystem {
    /// Validates everything except the seed equation itself, which is
    /// reported by [`check_seed`] and enforced by [`extend`].
    pub fn new(chart: CanonicalChart, l: &Expr, g: &Expr, c: Rational, l0: &Expr) -> Result<Self> {
        if chart.extension().is_some() {
            return Err(Error::Chart("seed chart must not carry an extension pair".into()));
        }
        let l0 = l0.to_poly()?;
        if let Some(s) = chart.phase_symbols().iter().find(|s| l0.depends_on(s)) {
            return Err(Error::InvalidParams(format!(
                "L0 must be constant, but depends on `{s}`"
            )));
        }
        if c.is_zero() && l0.is_zero() {
            return Err(Error::InvalidParams("c and L0 must not both vanish".into()));
        }
        let seed = Self {
            l: l.to_poly()?,
            g: g.to_poly()?,
            chart,
            c,
            l0,
        };
        let xg = seed.vector_field().apply(&seed.g);
        let cfg = ZeroConfig::default();
        if zero_test(&xg, &cfg)?.is_zero() {
            return Err(Error::SeedCondition("X_L(G) vanishes identically".into()));
        }
        Ok(seed)
    }

    pub fn chart(&self) -> &CanonicalChart {
        &self.chart
    }

    pub fn l(&self) -> &Poly {
        &self.l
    }

    pub fn g(&self) -> &Poly {
        &self.g
    }

    pub fn c(&self) -> &Rational {
        &self.c
    }

    pub fn l0(&self) -> &Poly {
        &self.l0
    }

    pub fn vector_field(&self) -> VectorField {
        VectorField::new(&self.l, &self.chart)
    }

    /// `cL + L₀`.
    pub fn energy_form(&self) -> Poly {
        &self.l.scale(&self.c) + &self.l0
    }

    /// Replaces `L` by `L + L₀/c` so that `L₀ = 0`; requires `c ≠ 0`.
    pub fn absorb_l0(&self) -> Result<Self> {
        if self.c.is_zero() {
            return Err(Error::InvalidParams("cannot absorb L0 when c = 0".into()));
        }
        Ok(Self {
            l: &self.l + &self.l0.scale(&self.c.recip()),
            l0: Poly::zero(),
            ..self.clone()
        })
    }
}

/// Outcome of a seed-equation check.
#[derive(Clone, Debug)]
pub struct SeedReport {
    /// `X_L²(G) + 2(cL + L₀)G` in canonical form.
    pub residual: Poly,
    pub tier: ZeroTier,
    pub max_normalized: f64,
    pub points: usize,
}

impl SeedReport {
    pub fn exact(&self) -> bool {
        self.tier == ZeroTier::Exact
    }

    pub fn passed(&self) -> bool {
        self.tier != ZeroTier::NonZero
    }
}

/// `X_L²(G_ν) + 2ν²(cL + L₀)G_ν`.
pub fn seed_identity_residual(seed: &SeedSystem, g_nu: &Poly, nu: u32) -> Poly {
    let x = seed.vector_field();
    let x2 = x.apply(&x.apply(g_nu));
    let nu2 = int(2 * i64::from(nu) * i64::from(nu));
    &x2 + &(&seed.energy_form() * g_nu).scale(&nu2)
}

pub fn check_seed(seed: &SeedSystem) -> Result<SeedReport> {
    let cfg = ZeroConfig {
        points: 1000,
        ..ZeroConfig::default()
    };
    check_seed_with(seed, &cfg)
}

pub fn check_seed_with(seed: &SeedSystem, cfg: &ZeroConfig) -> Result<SeedReport> {
    let residual = seed_identity_residual(seed, &seed.g, 1);
    let verdict = zero_test(&residual, cfg)?;
    Ok(SeedReport {
        residual,
        tier: verdict.tier,
        max_normalized: verdict.max_normalized,
        points: verdict.points,
    })
}

/// `G₁ = G`, `G_{ν+1} = X_L(G₁)G_ν + (1/ν)G₁X_L(G_ν)`.
pub fn g_recursion(seed: &SeedSystem, nu: u32) -> Result<Poly> {
    if nu == 0 {
        return Err(Error::InvalidParams("recursion index starts at 1".into()));
    }
    let x = seed.vector_field();
    let g1 = seed.g.clone();
    let xg1 = x.apply(&g1);
    let mut g = g1.clone();
    for k in 1..nu {
        let next = &(&xg1 * &g) + &(&g1 * &x.apply(&g)).scale(&rat(1, i64::from(k)));
        g = next;
        check_terms(&g)?;
    }
    Ok(g)
}

fn check_terms(p: &Poly) -> Result<()> {
    let ceiling = term_ceiling();
    if p.len() > ceiling {
        return Err(Error::ResourceCap(format!(
            "expression grew to {} terms, above the ceiling of {ceiling} (set HAMEXT_TERM_CAP to raise it)",
            p.len()
        )));
    }
    Ok(())
}

/// `(μ, ν) = (m, n)` for even `m`, `(2m, 2n)` for odd `m`.
pub fn mu_nu(m: u32, n: u32) -> Result<(u32, u32)> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParams(format!(
            "m and n must be positive, got ({m}, {n})"
        )));
    }
    if m.gcd(&n) != 1 {
        return Err(Error::InvalidParams(format!("m and n must be coprime, got ({m}, {n})")));
    }
    Ok(if m.is_multiple_of(2) { (m, n) } else { (2 * m, 2 * n) })
}

/// Which column of the structural-function table applies.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtensionCase {
    /// `c = 0`, with a nonzero constant `A`.
    Flat { a: Expr },
    /// `c ≠ 0`, with curvature tag `κ`.
    Curved { kappa: Rational },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionParams {
    pub m: u32,
    pub n: u32,
    pub case: ExtensionCase,
    pub f0: Expr,
}

impl ExtensionParams {
    pub fn ratio(&self) -> Rational {
        rat(i64::from(self.m), i64::from(self.n))
    }
}

/// `α, f, γ, δ` as functions of `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralFunctions {
    pub alpha: Poly,
    pub f: Poly,
    pub gamma: Poly,
    pub delta: Poly,
}

pub fn structural_functions(
    params: &ExtensionParams,
    c: &Rational,
    l0: &Poly,
    u: &Symbol,
) -> Result<StructuralFunctions> {
    let k2 = {
        let r = params.ratio();
        &r * &r
    };
    let f0 = params.f0.to_poly()?;
    let uu = Poly::symbol(u);
    match &params.case {
        ExtensionCase::Flat { a } => {
            if !c.is_zero() {
                return Err(Error::InvalidParams("the c = 0 column needs c = 0".into()));
            }
            let a = a.to_poly()?;
            if a.is_zero() {
                return Err(Error::InvalidParams("A must be nonzero".into()));
            }
            let gamma = -&(&a * &uu);
            let gamma2 = &gamma * &gamma;
            let inv_gamma2 = gamma2.recip()?;
            Ok(StructuralFunctions {
                alpha: a,
                f: &(l0 * &gamma2).scale(&k2) + &(&f0 * &inv_gamma2),
                gamma,
                delta: (&f0 * &inv_gamma2).scale(&int(2)),
            })
        }
        ExtensionCase::Curved { kappa } => {
            if c.is_zero() {
                return Err(Error::InvalidParams("the c != 0 column needs c != 0".into()));
            }
            let x = uu.scale(c);
            let s = Poly::tagged(Tag::S, kappa, x.clone());
            let t = Poly::tagged(Tag::T, kappa, x);
            let t2 = &t * &t;
            let inv_t2 = t2.recip()?;
            Ok(StructuralFunctions {
                alpha: (&s * &s).recip()?.scale(c),
                f: &(l0 * &inv_t2).scale(&k2) + &(&f0 * &t2),
                gamma: t.recip()?,
                delta: (&f0 * &t2).scale(&int(2)),
            })
        }
    }
}

/// A modified extension together with its operator `W`.
#[derive(Debug)]
pub struct ExtendedSystem {
    seed: SeedSystem,
    params: ExtensionParams,
    chart: CanonicalChart,
    u: Symbol,
    p_u: Symbol,
    h: Poly,
    structural: StructuralFunctions,
    mu: u32,
    nu: u32,
    field: VectorField,
    k: OnceLock<Result<Poly>>,
}

impl Clone for ExtendedSystem {
    fn clone(&self) -> Self {
        let k = OnceLock::new();
        if let Some(v) = self.k.get() {
            let _ = k.set(v.clone());
        }
        Self {
            seed: self.seed.clone(),
            params: self.params.clone(),
            chart: self.chart.clone(),
            u: self.u.clone(),
            p_u: self.p_u.clone(),
            h: self.h.clone(),
            structural: self.structural.clone(),
            mu: self.mu,
            nu: self.nu,
            field: self.field.clone(),
            k,
        }
    }
}

/// Builds the extension. When `c ≠ 0`, a nonzero `L₀` is first absorbed
/// into `L`.
pub fn extend(seed: &SeedSystem, params: &ExtensionParams) -> Result<ExtendedSystem> {
    let (mu, nu) = mu_nu(params.m, params.n)?;
    let report = check_seed(seed)?;
    if !report.passed() {
        return Err(Error::SeedCondition(format!(
            "X_L^2(G) + 2(cL + L0)G does not vanish (max normalized residual {:.3e})",
            report.max_normalized
        )));
    }
    let seed = if !seed.c.is_zero() && !seed.l0.is_zero() {
        seed.absorb_l0()?
    } else {
        seed.clone()
    };
    let u = Symbol::coordinate(U_NAME);
    let p_u = Symbol::momentum(PU_NAME);
    let chart = seed.chart.with_extension(&u, &p_u)?;
    for s in [&u, &p_u] {
        if seed.l.depends_on(s) || seed.g.depends_on(s) || seed.l0.depends_on(s) {
            return Err(Error::Chart(format!("seed already uses the extension symbol `{s}`")));
        }
    }
    let structural = structural_functions(params, &seed.c, &seed.l0, &u)?;
    let k2 = {
        let r = params.ratio();
        &r * &r
    };
    let pu = Poly::symbol(&p_u);
    let h = &(&(&pu * &pu).scale(&rat(1, 2)) + &structural.f) + &(&structural.alpha * &seed.l).scale(&k2);
    let field = VectorField::new(&seed.l, &chart);
    Ok(ExtendedSystem {
        seed,
        params: params.clone(),
        chart,
        u,
        p_u,
        h,
        structural,
        mu,
        nu,
        field,
        k: OnceLock::new(),
    })
}

impl ExtendedSystem {
    pub fn seed(&self) -> &SeedSystem {
        &self.seed
    }

    pub fn params(&self) -> &ExtensionParams {
        &self.params
    }

    pub fn chart(&self) -> &CanonicalChart {
        &self.chart
    }

    pub fn u(&self) -> &Symbol {
        &self.u
    }

    pub fn p_u(&self) -> &Symbol {
        &self.p_u
    }

    pub fn h(&self) -> &Poly {
        &self.h
    }

    pub fn structural(&self) -> &StructuralFunctions {
        &self.structural
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn vector_field(&self) -> &VectorField {
        &self.field
    }

    /// `μ/ν²`.
    pub fn operator_ratio(&self) -> Rational {
        rat(i64::from(self.mu), i64::from(self.nu) * i64::from(self.nu))
    }

    /// One application of `p_u + (μ/ν²)γX_L`.
    pub fn first_order(&self, f: &Poly) -> Poly {
        let pu = Poly::symbol(&self.p_u);
        let xf = self.field.apply(f);
        &(&pu * f) + &(&self.structural.gamma * &xf).scale(&self.operator_ratio())
    }

    /// One application of `W`.
    pub fn w_apply(&self, f: &Poly) -> Poly {
        let of = self.first_order(f);
        &self.first_order(&of) + &(&self.structural.delta * f)
    }

    pub fn g_nu(&self) -> Result<Poly> {
        g_recursion(&self.seed, self.nu)
    }

    fn build_k(&self) -> Result<Poly> {
        check_budget(self.mu, self.nu)?;
        let mut k = self.g_nu()?;
        for _ in 0..self.mu / 2 {
            k = self.w_apply(&k);
            check_terms(&k)?;
        }
        Ok(k)
    }

    /// `K = W^{μ/2}(G_ν)`, computed once.
    pub fn first_integral(&self) -> Result<&Poly> {
        self.k.get_or_init(|| self.build_k()).as_ref().map_err(Clone::clone)
    }

    pub fn momentum_degree(&self, p: &Poly) -> Option<u32> {
        p.degree_in(&self.chart.momentum_set())
    }
}

pub(crate) fn check_budget(mu: u32, nu: u32) -> Result<()> {
    if mu + nu > DEGREE_BUDGET {
        return Err(Error::ResourceCap(format!(
            "mu + nu = {} exceeds the degree budget of {DEGREE_BUDGET}",
            mu + nu
        )));
    }
    Ok(())
}

/// Convenience for callers holding expressions.
pub fn w_apply(ext: &ExtendedSystem, f: &Expr) -> Result<Expr> {
    Ok(ext.w_apply(&f.to_poly()?).to_expr())
}

pub fn first_integral(ext: &ExtendedSystem) -> Result<Expr> {
    Ok(ext.first_integral()?.to_expr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, NumericEnv, SymbolKind, SymbolTable};
    use std::f64::consts::PI;

    fn ttw_seed(c1: &str, c2: &str) -> SeedSystem {
        let psi = Symbol::coordinate("psi");
        let p = Symbol::momentum("p_psi");
        let mut t = SymbolTable::with(&[&psi, &p]);
        t.declare("c1", SymbolKind::Parameter).unwrap();
        t.declare("c2", SymbolKind::Parameter).unwrap();
        let l = parse(&format!("p_psi^2/2 + ({c1} + ({c2})*cos(psi))/sin(psi)^2"), &t).unwrap();
        let g = parse("p_psi*sin(psi)", &t).unwrap();
        let chart = CanonicalChart::single(&psi, &p).unwrap();
        SeedSystem::new(chart, &l, &g, int(1), &Expr::zero()).unwrap()
    }

    fn at_pi_third(p: &Poly) -> f64 {
        let env = NumericEnv::new()
            .with(&Symbol::coordinate("psi"), PI / 3.0)
            .with(&Symbol::momentum("p_psi"), 1.0);
        p.evaluate(&env).unwrap()
    }

    #[test]
    fn mu_nu_parity_rule() {
        assert_eq!(mu_nu(2, 3).unwrap(), (2, 3));
        assert_eq!(mu_nu(1, 1).unwrap(), (2, 2));
        assert_eq!(mu_nu(3, 2).unwrap(), (6, 4));
        assert!(mu_nu(0, 1).is_err());
        assert!(mu_nu(2, 4).is_err());
    }

    #[test]
    fn ttw_seed_values_at_pi_third() {
        let seed = ttw_seed("1", "0");
        let x = seed.vector_field();
        let xg = x.apply(seed.g());
        assert!((at_pi_third(&xg) - 11.0 / 6.0).abs() < 1e-12);
        let x2g = x.apply(&xg);
        assert!((at_pi_third(&x2g) + 11.0 * 3f64.sqrt() / 6.0).abs() < 1e-12);
        let g2 = g_recursion(&seed, 2).unwrap();
        assert!((at_pi_third(&g2) - 11.0 * 3f64.sqrt() / 6.0).abs() < 1e-12);
        assert_eq!(g_recursion(&seed, 1).unwrap(), *seed.g());
        assert_eq!(g2, (seed.g() * &xg).scale(&int(2)));
    }

    #[test]
    fn seed_check_exact_and_perturbed() {
        let seed = ttw_seed("c1", "c2");
        assert!(check_seed(&seed).unwrap().exact());
        let bad = SeedSystem {
            l: &seed.l
                + &parse("psi^3", &SymbolTable::with(&[&Symbol::coordinate("psi")]))
                    .unwrap()
                    .to_poly()
                    .unwrap(),
            ..seed.clone()
        };
        let report = check_seed(&bad).unwrap();
        assert!(!report.passed());
        assert!(report.max_normalized > 1e-6);
    }

    #[test]
    fn rejects_vanishing_constants_and_trivial_g() {
        let q = Symbol::coordinate("q");
        let p = Symbol::momentum("p");
        let t = SymbolTable::with(&[&q, &p]);
        let chart = CanonicalChart::single(&q, &p).unwrap();
        let l = parse("p^2/2", &t).unwrap();
        let g = parse("p", &t).unwrap();
        let err = SeedSystem::new(chart.clone(), &l, &g, int(0), &Expr::zero()).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
        let err = SeedSystem::new(chart, &l, &g, int(1), &Expr::zero()).unwrap_err();
        assert!(matches!(err, Error::SeedCondition(_)));
    }

    #[test]
    fn table1_columns() {
        let u = Symbol::coordinate("u");
        let params = ExtensionParams {
            m: 1,
            n: 1,
            case: ExtensionCase::Curved { kappa: int(0) },
            f0: Expr::zero(),
        };
        let s = structural_functions(&params, &int(1), &Poly::zero(), &u).unwrap();
        let uu = Poly::symbol(&u);
        assert_eq!(s.gamma, uu.recip().unwrap());
        assert_eq!(s.alpha, uu.powi(-2).unwrap());
        assert_eq!(s.alpha, -&s.gamma.derivative(&u));
        let flat = ExtensionParams {
            case: ExtensionCase::Flat { a: Expr::one() },
            ..params
        };
        let s = structural_functions(&flat, &int(0), &Poly::zero(), &u).unwrap();
        assert_eq!(s.alpha, Poly::one());
        assert_eq!(s.gamma, -&uu);
        assert!(s.f.is_zero() && s.delta.is_zero());
    }

    fn ttw_extension(m: u32, n: u32) -> ExtendedSystem {
        let seed = ttw_seed("c1", "c2");
        let params = ExtensionParams {
            m,
            n,
            case: ExtensionCase::Curved { kappa: int(0) },
            f0: Expr::sym(&Symbol::parameter("f0")),
        };
        extend(&seed, &params).unwrap()
    }

    #[test]
    fn ttw_integrals_commute_exactly() {
        use crate::mechanics::poisson_bracket_poly;
        for (m, n, degree) in [(1, 1, 5), (2, 1, 3), (1, 2, 9)] {
            let ext = ttw_extension(m, n);
            let k = ext.first_integral().unwrap();
            assert_eq!(ext.momentum_degree(k), Some(degree), "({m},{n})");
            let b = poisson_bracket_poly(ext.h(), k, ext.chart());
            assert!(b.is_zero(), "({m},{n}) bracket has {} terms", b.len());
            assert!(poisson_bracket_poly(ext.h(), ext.seed().l(), ext.chart()).is_zero());
        }
    }

    #[test]
    fn budget_and_term_cap() {
        assert!(check_budget(8, 6).is_ok());
        assert!(matches!(check_budget(10, 5), Err(Error::ResourceCap(_))));
    }
}
