//! Built-in systems: TTW, Post–Winternitz, the caged anisotropic oscillator
//! and its half-plane image, with exact maps to their textbook coordinates.
//!
//! Parameters stay symbolic unless overridden by a rational value. Every
//! entry carries default numeric bindings and sampling boxes that avoid the
//! singular loci (`sin ψ = 0`, `u = 0`, `r = 0`, `x = 0`, `y = 0`).

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use rand::Rng;

use crate::ccm::{ccm_extension, CcmSystem};
use crate::error::{Error, Result};
use crate::extension::{extend, ExtendedSystem, ExtensionCase, ExtensionParams, SeedSystem};
use crate::mechanics::CanonicalChart;
use crate::rng;
use crate::symexpr::{
    int, parse, rat, rational_to_f64, CompiledPoly, Expr, NumericEnv, Poly, Rational, Symbol, SymbolKind, SymbolTable,
};

/// Rational values replacing symbolic parameters, keyed by name.
pub type Overrides = BTreeMap<String, Rational>;

/// Sampling interval per symbol.
pub type Boxes = BTreeMap<Symbol, (f64, f64)>;

pub const IDS: [&str; 4] = ["ttw", "pw", "caged", "halfplane"];

/// Static description of a catalog entry.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub summary: &'static str,
    /// Parameter names with their default numeric bindings.
    pub parameters: Vec<(&'static str, Rational)>,
}

pub fn entries() -> Vec<CatalogEntry> {
    IDS.iter().map(|id| entry(id).expect("known id")).collect()
}

pub fn entry(id: &str) -> Result<CatalogEntry> {
    let (id, summary, parameters): (&'static str, &'static str, Vec<(&'static str, Rational)>) = match id {
        "ttw" => (
            "ttw",
            "TTW system as an extension of L = p_psi^2/2 + (c1 + c2 cos psi)/sin^2 psi (c = 1, kappa = 0)",
            vec![("c1", int(1)), ("c2", rat(1, 3)), ("f0", rat(1, 2))],
        ),
        "pw" => (
            "pw",
            "Post-Winternitz system: coupling-constant metamorphosis of the TTW extension (u- and r-charts)",
            vec![("c1", int(1)), ("c2", rat(1, 3)), ("E", int(8))],
        ),
        "caged" => (
            "caged",
            "caged anisotropic oscillator as an extension with c = 0, G = (a1 q + a2) p_q",
            vec![
                ("A", int(1)),
                ("a1", int(1)),
                ("a2", rat(1, 2)),
                ("c1", int(1)),
                ("c2", rat(1, 4)),
                ("L0", int(1)),
                ("f0", rat(1, 2)),
                ("E", int(1)),
            ],
        ),
        "halfplane" => (
            "halfplane",
            "Poincare half-plane system: the caged oscillator's metamorphosis in (x, y)",
            vec![
                ("omega", int(1)),
                ("b", int(1)),
                ("c2", rat(1, 4)),
                ("a1", int(1)),
                ("a2", rat(1, 2)),
                ("E", int(1)),
            ],
        ),
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    Ok(CatalogEntry {
        id,
        summary,
        parameters,
    })
}

impl CatalogEntry {
    fn check_overrides(&self, overrides: &Overrides) -> Result<()> {
        for name in overrides.keys() {
            if !self.parameters.iter().any(|(p, _)| p == name) {
                return Err(Error::InvalidParams(format!("`{}` has no parameter `{name}`", self.id)));
            }
        }
        Ok(())
    }

    /// Default bindings for every parameter that stays symbolic.
    pub fn bindings(&self, overrides: &Overrides) -> NumericEnv {
        let mut env = NumericEnv::new();
        for (name, value) in &self.parameters {
            if !overrides.contains_key(*name) {
                env.bind(&Symbol::parameter(name), rational_to_f64(value));
            }
        }
        env
    }
}

fn param(name: &str, overrides: &Overrides) -> Expr {
    match overrides.get(name) {
        Some(q) => Expr::constant(q.clone()),
        None => Expr::sym(&Symbol::parameter(name)),
    }
}

fn table(symbols: &[&Symbol], params: &[&str]) -> SymbolTable {
    let mut t = SymbolTable::with(symbols);
    for p in params {
        t.declare(p, SymbolKind::Parameter).expect("fresh parameter");
    }
    t
}

/// Parses `text` after replacing overridden parameters by their values.
fn expr(text: &str, t: &SymbolTable, overrides: &Overrides) -> Result<Expr> {
    let e = parse(text, t)?;
    let bindings: BTreeMap<Symbol, Expr> = overrides
        .iter()
        .map(|(k, v)| (Symbol::parameter(k), Expr::constant(v.clone())))
        .collect();
    Ok(crate::symexpr::substitute(&e, &bindings))
}

/// Maps internal symbols to expressions in a reference chart, with the
/// rational prefactor relating the two Hamiltonians:
/// `reference = prefactor · mapped(internal)`.
#[derive(Clone, Debug)]
pub struct Identification {
    pub description: String,
    pub substitutions: Vec<(Symbol, Expr)>,
    pub prefactor: Rational,
    pub reference: Expr,
    pub chart: CanonicalChart,
    pub boxes: Boxes,
    pub bindings: NumericEnv,
}

impl Identification {
    pub fn map_poly(&self, p: &Poly) -> Result<Poly> {
        let map: HashMap<Symbol, Poly> = self
            .substitutions
            .iter()
            .map(|(s, e)| Ok((s.clone(), e.to_poly()?)))
            .collect::<Result<_>>()?;
        Ok(p.substitute(&map)?)
    }

    /// Largest relative deviation between `prefactor · mapped(internal)` and
    /// the reference over seeded points of the reference chart.
    pub fn max_relative_error(&self, internal: &Poly, points: usize, seed: u64) -> Result<f64> {
        let mapped = self.map_poly(internal)?.scale(&self.prefactor);
        let ours = CompiledPoly::new(&mapped);
        let theirs = CompiledPoly::new(&self.reference.to_poly()?);
        let symbols = self.chart.phase_symbols();
        let mut worst = 0.0f64;
        for i in 0..points {
            let mut r = rng::stream(seed, i as u64);
            let mut env = self.bindings.clone();
            for s in &symbols {
                let (lo, hi) = self.boxes.get(s).copied().unwrap_or((0.5, 1.5));
                env.bind(s, r.random_range(lo..hi));
            }
            let a = ours.eval(&ours.bind(&env)?)?.0;
            let b = theirs.eval(&theirs.bind(&env)?)?.0;
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
        Ok(worst)
    }
}

// ------------------------------------------------------------------- TTW

fn ttw_symbols() -> (Symbol, Symbol) {
    (Symbol::coordinate("psi"), Symbol::momentum("p_psi"))
}

pub fn ttw_seed(overrides: &Overrides) -> Result<SeedSystem> {
    let (psi, p) = ttw_symbols();
    let t = table(&[&psi, &p], &["c1", "c2"]);
    let l = expr("p_psi^2/2 + (c1 + c2*cos(psi))/sin(psi)^2", &t, overrides)?;
    let g = expr("p_psi*sin(psi)", &t, overrides)?;
    SeedSystem::new(CanonicalChart::single(&psi, &p)?, &l, &g, int(1), &Expr::zero())
}

pub fn ttw(m: u32, n: u32, overrides: &Overrides) -> Result<ExtendedSystem> {
    entry("ttw")?.check_overrides(overrides)?;
    let params = ExtensionParams {
        m,
        n,
        case: ExtensionCase::Curved { kappa: int(0) },
        f0: param("f0", overrides),
    };
    extend(&ttw_seed(overrides)?, &params)
}

/// `k = m/(2n)`: the TTW/PW angular parameter matching `(m/n)²`.
pub fn ttw_k(m: u32, n: u32) -> Rational {
    rat(i64::from(m), 2 * i64::from(n))
}

fn ttw_param_relations(overrides: &Overrides) -> Vec<(Symbol, Expr)> {
    let t = table(&[], &["alpha", "beta"]);
    let mut out = Vec::new();
    if !overrides.contains_key("c1") {
        out.push((Symbol::parameter("c1"), parse("(alpha + beta)/4", &t).expect("static")));
    }
    if !overrides.contains_key("c2") {
        out.push((Symbol::parameter("c2"), parse("(beta - alpha)/4", &t).expect("static")));
    }
    out
}

fn angular_box(k: &Rational) -> (f64, f64) {
    // Keeps k*angle inside (0.1, 1.4), away from zeros of sin and cos.
    let k = rational_to_f64(k);
    (0.1 / k, 1.4 / k)
}

fn f2_text(angle: &str, k: &Rational) -> String {
    format!(
        "({k})^2*(alpha/cos(({k})*{angle})^2 + beta/sin(({k})*{angle})^2)",
        k = k
    )
}

/// `u = ρ`, `ψ = 2kθ`, `c₁ = (α+β)/4`, `c₂ = (β−α)/4`, `f₀ = −Ẽ/2`; the
/// reference is `H_TTW = p_ρ² + (p_θ² + f₂(θ))/ρ² − Ẽρ²` and equals `2H`.
pub fn ttw_identification(ext: &ExtendedSystem, overrides: &Overrides) -> Result<Identification> {
    let (m, n) = (ext.params().m, ext.params().n);
    let k = ttw_k(m, n);
    let rho = Symbol::coordinate("rho");
    let theta = Symbol::coordinate("theta");
    let p_rho = Symbol::momentum("p_rho");
    let p_theta = Symbol::momentum("p_theta");
    let t = table(&[&rho, &theta, &p_rho, &p_theta], &["alpha", "beta", "Et"]);
    let reference = parse(
        &format!("p_rho^2 + (p_theta^2 + {})/rho^2 - Et*rho^2", f2_text("theta", &k)),
        &t,
    )?;
    let two_k = &k * int(2);
    let mut substitutions = vec![
        (ext.u().clone(), Expr::sym(&rho)),
        (ext.p_u().clone(), Expr::sym(&p_rho)),
        (
            Symbol::coordinate("psi"),
            Expr::constant(two_k.clone()) * Expr::sym(&theta),
        ),
        (
            Symbol::momentum("p_psi"),
            Expr::constant(two_k.recip()) * Expr::sym(&p_theta),
        ),
    ];
    substitutions.extend(ttw_param_relations(overrides));
    if !overrides.contains_key("f0") {
        substitutions.push((Symbol::parameter("f0"), parse("-Et/2", &t)?));
    }
    let mut boxes = Boxes::new();
    boxes.insert(theta.clone(), angular_box(&k));
    let bindings = NumericEnv::new()
        .with(&Symbol::parameter("alpha"), 0.8)
        .with(&Symbol::parameter("beta"), 1.3)
        .with(&Symbol::parameter("Et"), -0.7);
    Ok(Identification {
        description: format!("u = rho, psi = {two_k}*theta, c1 = (alpha+beta)/4, c2 = (beta-alpha)/4, f0 = -Et/2"),
        substitutions,
        prefactor: int(2),
        reference,
        chart: CanonicalChart::new(vec![(rho, p_rho), (theta, p_theta)])?,
        boxes,
        bindings,
    })
}

// -------------------------------------------------------------------- PW

pub fn pw(m: u32, n: u32, overrides: &Overrides) -> Result<CcmSystem> {
    entry("pw")?.check_overrides(overrides)?;
    if overrides.contains_key("E") {
        return Err(Error::InvalidParams(
            "E stays symbolic in the pw entry; bind it numerically instead".into(),
        ));
    }
    let ext = ttw(m, n, overrides)?;
    ccm_extension(&ext, &Symbol::parameter("E"))
}

/// The r-chart `u² = 2r`, `p_u = u·p_r`.
#[derive(Clone, Debug)]
pub struct RChart {
    pub r: Symbol,
    pub p_r: Symbol,
    pub chart: CanonicalChart,
    u: Symbol,
    p_u: Symbol,
}

impl RChart {
    pub fn new(sys: &CcmSystem) -> Result<Self> {
        let r = Symbol::coordinate("r");
        let p_r = Symbol::momentum("p_r");
        let seed_chart = sys.source().seed().chart().clone();
        let chart = seed_chart.with_extension(&r, &p_r)?;
        Ok(Self {
            r,
            p_r,
            chart,
            u: sys.source().u().clone(),
            p_u: sys.source().p_u().clone(),
        })
    }

    /// Rewrites a function of `(u, p_u)` in the r-chart; fails if an odd
    /// power of `u` survives or `u` sits inside a function.
    pub fn transform(&self, p: &Poly) -> Result<Poly> {
        let u = Poly::symbol(&self.u);
        let with_pr = p.substitute_one(&self.p_u, &(&u * &Poly::symbol(&self.p_r)))?;
        let two_r = Poly::symbol(&self.r).scale(&int(2));
        let mut out = Poly::zero();
        for (mono, c) in with_pr.terms() {
            let e = mono.symbol_exponent(&self.u);
            if mono
                .factors()
                .iter()
                .any(|(a, _)| a.as_symbol().is_none() && a.depends_on(&self.u))
            {
                return Err(Error::Chart(
                    "u appears inside a function; u^2 = 2r does not apply".into(),
                ));
            }
            if e % 2 != 0 {
                return Err(Error::Chart(format!(
                    "odd power u^{e} survives the u^2 = 2r substitution"
                )));
            }
            let rest = Poly::from_monomial(mono.without_symbol(&self.u), c.clone());
            out = &out + &(&rest * &two_r.powi(i64::from(e / 2))?);
        }
        Ok(out)
    }
}

/// `ψ = kφ`, `c₁ = (α+β)/4`, `c₂ = (β−α)/4`, `E = Q/2` in the r-chart; the
/// reference is `H_PW = p_r² + (p_φ² + ¼f₂(φ/2))/r² − Q/(2r)` and equals `2H̃`.
pub fn pw_identification(sys: &CcmSystem, rchart: &RChart, overrides: &Overrides) -> Result<Identification> {
    let ext = sys.source();
    let k = ttw_k(ext.params().m, ext.params().n);
    let phi = Symbol::coordinate("phi");
    let p_phi = Symbol::momentum("p_phi");
    let t = table(&[&rchart.r, &phi, &rchart.p_r, &p_phi], &["alpha", "beta", "Q"]);
    let half_k = &k * rat(1, 2);
    let reference = parse(
        &format!(
            "p_r^2 + (p_phi^2 + ({})/4)/r^2 - Q/(2*r)",
            f2_text("phi", &k).replace(&format!("({k})*phi"), &format!("({half_k})*phi"))
        ),
        &t,
    )?;
    let mut substitutions = vec![
        (Symbol::coordinate("psi"), Expr::constant(k.clone()) * Expr::sym(&phi)),
        (Symbol::momentum("p_psi"), Expr::constant(k.recip()) * Expr::sym(&p_phi)),
        (sys.e().clone(), parse("Q/2", &t)?),
    ];
    substitutions.extend(ttw_param_relations(overrides));
    let mut boxes = Boxes::new();
    boxes.insert(phi.clone(), angular_box(&half_k));
    let bindings = NumericEnv::new()
        .with(&Symbol::parameter("alpha"), 0.8)
        .with(&Symbol::parameter("beta"), 1.3)
        .with(&Symbol::parameter("Q"), 1.7);
    Ok(Identification {
        description: format!("psi = {k}*phi, c1 = (alpha+beta)/4, c2 = (beta-alpha)/4, E = Q/2"),
        substitutions,
        prefactor: int(2),
        reference,
        chart: CanonicalChart::new(vec![(rchart.r.clone(), rchart.p_r.clone()), (phi, p_phi)])?,
        boxes,
        bindings,
    })
}

// ----------------------------------------------------------------- caged

fn caged_symbols() -> (Symbol, Symbol) {
    (Symbol::coordinate("q"), Symbol::momentum("p_q"))
}

pub fn caged_seed(overrides: &Overrides) -> Result<SeedSystem> {
    let (q, p) = caged_symbols();
    let t = table(&[&q, &p], &["a1", "a2", "c1", "c2", "L0"]);
    let l = expr(
        "p_q^2/2 + L0/(4*a1^2)*(a1*q + a2)^2 + c1/(a1*q + a2)^2 + c2",
        &t,
        overrides,
    )?;
    let g = expr("(a1*q + a2)*p_q", &t, overrides)?;
    let l0 = param("L0", overrides);
    SeedSystem::new(CanonicalChart::single(&q, &p)?, &l, &g, int(0), &l0)
}

pub fn caged(m: u32, n: u32, overrides: &Overrides) -> Result<(ExtendedSystem, CcmSystem)> {
    entry("caged")?.check_overrides(overrides)?;
    if overrides.get("E").is_some() {
        return Err(Error::InvalidParams(
            "E stays symbolic in the caged entry; bind it numerically instead".into(),
        ));
    }
    for name in ["A", "a1"] {
        if overrides.get(name).is_some_and(Zero::is_zero) {
            return Err(Error::InvalidParams(format!("{name} must be nonzero")));
        }
    }
    let params = ExtensionParams {
        m,
        n,
        case: ExtensionCase::Flat {
            a: param("A", overrides),
        },
        f0: param("f0", overrides),
    };
    let ext = extend(&caged_seed(overrides)?, &params)?;
    let sys = ccm_extension(&ext, &Symbol::parameter("E"))?;
    Ok((ext, sys))
}

/// The half-plane image: the caged metamorphosis with `A = 1` in the chart
/// `u = y`, `q = (m/n)x − a₂/a₁`, and `L₀ = ω²/(4k²)`, `c₁ = a₁²b`,
/// `E′ = E + 4c₂k²` where `m/n = 2k`.
pub fn halfplane(m: u32, n: u32, overrides: &Overrides) -> Result<(CcmSystem, Identification)> {
    entry("halfplane")?.check_overrides(overrides)?;
    let mut caged_overrides: Overrides = overrides
        .iter()
        .filter(|(k, _)| ["c2", "a1", "a2"].contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    caged_overrides.insert("A".into(), int(1));
    caged_overrides.insert("f0".into(), int(0));
    if overrides.contains_key("E") {
        return Err(Error::InvalidParams(
            "E stays symbolic in the halfplane entry; bind it numerically instead".into(),
        ));
    }
    let (_, sys) = caged(m, n, &caged_overrides)?;
    let ratio = rat(i64::from(m), i64::from(n));
    let x = Symbol::coordinate("x");
    let y = Symbol::coordinate("y");
    let p_x = Symbol::momentum("p_x");
    let p_y = Symbol::momentum("p_y");
    let t = table(&[&x, &y, &p_x, &p_y], &["omega", "b", "c2", "a1", "a2", "E"]);
    let k = ttw_k(m, n);
    let reference = expr(
        &format!("y^2*(p_y^2/2 + p_x^2/2 + omega^2*(({k})^2*x^2 + y^2) + b/x^2 - E)"),
        &t,
        overrides,
    )?;
    let (q, p_q) = caged_symbols();
    let r = Expr::constant(ratio.clone());
    let mut substitutions = vec![
        (sys.source().u().clone(), Expr::sym(&y)),
        (sys.source().p_u().clone(), Expr::sym(&p_y)),
        (q, r.clone() * Expr::sym(&x) - expr("a2/a1", &t, overrides)?),
        (p_q, Expr::constant(ratio.recip()) * Expr::sym(&p_x)),
        (
            Symbol::parameter("L0"),
            expr(&format!("omega^2/(4*({k})^2)"), &t, overrides)?,
        ),
        (Symbol::parameter("c1"), expr("a1^2*b", &t, overrides)?),
        (
            Symbol::parameter("E"),
            expr(&format!("E + 4*c2*({k})^2"), &t, overrides)?,
        ),
    ];
    // Overridden parameters are already numbers in the caged system.
    substitutions.retain(|(s, _)| s.kind() != SymbolKind::Parameter || !overrides.contains_key(s.name()));
    let entry = entry("halfplane")?;
    Ok((
        sys,
        Identification {
            description: format!(
                "u = y, q = {ratio}*x - a2/a1, L0 = omega^2/(4k^2), c1 = a1^2*b, E' = E + 4*c2*k^2 with k = {k}"
            ),
            substitutions,
            prefactor: int(1),
            reference,
            chart: CanonicalChart::new(vec![(x, p_x), (y, p_y)])?,
            boxes: Boxes::new(),
            bindings: entry.bindings(overrides),
        },
    ))
}

/// Default sampling boxes for the internal chart of an entry.
pub fn default_boxes(id: &str) -> Result<Boxes> {
    let mut boxes = Boxes::new();
    match id {
        "ttw" | "pw" => {
            boxes.insert(Symbol::coordinate("psi"), (0.5, 1.5));
            boxes.insert(Symbol::coordinate("u"), (0.5, 1.5));
            boxes.insert(Symbol::coordinate("r"), (0.5, 1.5));
        }
        "caged" => {
            boxes.insert(Symbol::coordinate("q"), (0.5, 1.5));
            boxes.insert(Symbol::coordinate("u"), (0.5, 1.5));
        }
        "halfplane" => {
            boxes.insert(Symbol::coordinate("x"), (0.5, 1.5));
            boxes.insert(Symbol::coordinate("y"), (0.5, 1.5));
        }
        other => return Err(Error::UnknownSystem(other.to_string())),
    }
    Ok(boxes)
}
