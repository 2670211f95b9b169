//! Coupling-constant metamorphosis.
//!
//! A Hamiltonian `H = Ĥ − ẼU` with an integral `K(Ẽ)` is sent to
//! `H̃ = U⁻¹(Ĥ − E)` with the integral `K̃ = K|_{Ẽ=H̃}`. For a modified
//! extension the slot is `Ẽ = −f₀`, `U = 1/γ²`, and `K̃` is also produced by
//! the closed-form operator `W̃ = a·p_u X_L + b·L + e` applied to `G_ν`.

use std::sync::OnceLock;

use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::extension::{check_budget, extend, ExtendedSystem, ExtensionCase, ExtensionParams};
use crate::mechanics::{CanonicalChart, VectorField};
use crate::rng;
use crate::symexpr::{
    int, rat, rational_to_f64, zero_test, CompiledPoly, Expr, NumericEnv, Poly, Symbol, Tag, ZeroConfig, ZeroTier,
};

/// Name of the coupling-constant slot introduced for extensions.
pub const E_TILDE_NAME: &str = "Et";

/// Inputs of the generic transform.
#[derive(Clone, Debug)]
pub struct CcmInput {
    pub h_hat: Expr,
    pub u: Expr,
    pub k: Expr,
    pub e_tilde: Symbol,
    pub e: Symbol,
}

/// Returns `(H̃, K̃)`.
pub fn ccm(input: &CcmInput) -> Result<(Expr, Expr)> {
    let h_hat = input.h_hat.to_poly()?;
    let u = input.u.to_poly()?;
    for (name, p) in [("the Hamiltonian part", &h_hat), ("the conformal factor", &u)] {
        if p.depends_on(&input.e_tilde) {
            return Err(Error::InvalidParams(format!("`{}` occurs in {name}", input.e_tilde)));
        }
    }
    if u.is_zero() {
        return Err(Error::InvalidParams("conformal factor is zero".into()));
    }
    let h_tilde = &(&h_hat - &Poly::symbol(&input.e)) * &u.recip()?;
    let k_tilde = input.k.to_poly()?.substitute_one(&input.e_tilde, &h_tilde)?;
    Ok((h_tilde.to_expr(), k_tilde.to_expr()))
}

/// Residual of `X_L(U)`, the compatibility condition for transforming an
/// extension's integral.
#[derive(Clone, Debug)]
pub struct CompatReport {
    pub residual: Poly,
    pub tier: ZeroTier,
    pub max_normalized: f64,
}

impl CompatReport {
    pub fn exact(&self) -> bool {
        self.tier == ZeroTier::Exact
    }

    pub fn compatible(&self) -> bool {
        self.tier != ZeroTier::NonZero
    }
}

pub fn ccm_compatible(l: &Expr, u: &Expr, chart: &CanonicalChart) -> Result<CompatReport> {
    let field = VectorField::new(&l.to_poly()?, chart);
    let residual = field.apply(&u.to_poly()?);
    let verdict = zero_test(&residual, &ZeroConfig::default())?;
    Ok(CompatReport {
        residual,
        tier: verdict.tier,
        max_normalized: verdict.max_normalized,
    })
}

/// `W̃(F) = a·p_u X_L(F) + b·L·F + e·F`.
#[derive(Clone, Debug, PartialEq)]
pub struct WtildeCoefficients {
    pub a: Poly,
    pub b: Poly,
    pub e: Poly,
}

impl WtildeCoefficients {
    /// `a = 2(μ/ν²)γ`, `b = −2(μ²/ν²)(cγ² − γ′)`, `e = 2E − 4(μ²/ν²)γ²L₀`.
    pub fn closed_form(ext: &ExtendedSystem, e: &Symbol) -> Self {
        let (mu, nu) = (i64::from(ext.mu()), i64::from(ext.nu()));
        let k2 = rat(mu * mu, nu * nu);
        let gamma = &ext.structural().gamma;
        let gamma2 = gamma * gamma;
        let dgamma = gamma.derivative(ext.u());
        let c = ext.seed().c();
        let a = gamma.scale(&rat(2 * mu, nu * nu));
        let b = (&gamma2.scale(c) - &dgamma).scale(&(-&k2 * int(2)));
        let e = &Poly::symbol(e).scale(&int(2)) - &(&gamma2 * ext.seed().l0()).scale(&(&k2 * int(4)));
        Self { a, b, e }
    }

    pub fn apply(&self, f: &Poly, field: &VectorField, l: &Poly, p_u: &Symbol) -> Poly {
        let xf = field.apply(f);
        let pu = Poly::symbol(p_u);
        let first = &(&self.a * &pu) * &xf;
        let second = &(&self.b * l) * f;
        &(&first + &second) + &(&self.e * f)
    }
}

/// The transformed system of an extension.
#[derive(Debug)]
pub struct CcmSystem {
    source: ExtendedSystem,
    e: Symbol,
    e_tilde: Symbol,
    h_hat: Poly,
    conformal: Poly,
    h_tilde: Poly,
    wtilde: WtildeCoefficients,
    k_tilde: OnceLock<Result<Poly>>,
}

impl Clone for CcmSystem {
    fn clone(&self) -> Self {
        let k_tilde = OnceLock::new();
        if let Some(v) = self.k_tilde.get() {
            let _ = k_tilde.set(v.clone());
        }
        Self {
            source: self.source.clone(),
            e: self.e.clone(),
            e_tilde: self.e_tilde.clone(),
            h_hat: self.h_hat.clone(),
            conformal: self.conformal.clone(),
            h_tilde: self.h_tilde.clone(),
            wtilde: self.wtilde.clone(),
            k_tilde,
        }
    }
}

/// `Ĥ = ½p_u² − (m/n)²γ′L + (m/n)²L₀γ²`, `U = 1/γ²`, `H̃ = γ²(Ĥ − E)`.
pub fn ccm_extension(ext: &ExtendedSystem, e: &Symbol) -> Result<CcmSystem> {
    let k2 = {
        let r = ext.params().ratio();
        &r * &r
    };
    let gamma = &ext.structural().gamma;
    let gamma2 = gamma * gamma;
    let dgamma = gamma.derivative(ext.u());
    let pu = Poly::symbol(ext.p_u());
    let h_hat = &(&(&pu * &pu).scale(&rat(1, 2)) - &(&dgamma * ext.seed().l()).scale(&k2))
        + &(&gamma2 * ext.seed().l0()).scale(&k2);
    let h_tilde = &gamma2 * &(&h_hat - &Poly::symbol(e));
    Ok(CcmSystem {
        wtilde: WtildeCoefficients::closed_form(ext, e),
        source: ext.clone(),
        e: e.clone(),
        e_tilde: Symbol::parameter(E_TILDE_NAME),
        h_hat,
        conformal: gamma2.recip()?,
        h_tilde,
        k_tilde: OnceLock::new(),
    })
}

/// Differences between the three constructions of `K̃`.
#[derive(Clone, Debug)]
pub struct RouteAgreement {
    /// Substitution `Ẽ = H̃` into `K(Ẽ)` minus the closed form.
    pub theorem_vs_closed: Poly,
    /// Iterating `W|_{Ẽ=H̃}` minus the closed form.
    pub operator_vs_closed: Poly,
    pub theorem_tier: ZeroTier,
    pub operator_tier: ZeroTier,
    pub max_normalized: f64,
}

impl RouteAgreement {
    pub fn agree(&self) -> bool {
        self.theorem_tier != ZeroTier::NonZero && self.operator_tier != ZeroTier::NonZero
    }
}

impl CcmSystem {
    pub fn source(&self) -> &ExtendedSystem {
        &self.source
    }

    pub fn chart(&self) -> &CanonicalChart {
        self.source.chart()
    }

    pub fn e(&self) -> &Symbol {
        &self.e
    }

    pub fn e_tilde(&self) -> &Symbol {
        &self.e_tilde
    }

    pub fn h_hat(&self) -> &Poly {
        &self.h_hat
    }

    /// The conformal factor `U = 1/γ²`.
    pub fn conformal(&self) -> &Poly {
        &self.conformal
    }

    pub fn h_tilde(&self) -> &Poly {
        &self.h_tilde
    }

    pub fn wtilde(&self) -> &WtildeCoefficients {
        &self.wtilde
    }

    /// The extension with `f₀` replaced by `−Ẽ`, so that `H = Ĥ − ẼU`.
    pub fn slotted_source(&self) -> Result<ExtendedSystem> {
        let params = ExtensionParams {
            f0: -Expr::sym(&self.e_tilde),
            ..self.source.params().clone()
        };
        extend(self.source.seed(), &params)
    }

    pub fn w_tilde_apply(&self, f: &Poly) -> Poly {
        self.w_tilde_apply_with(&self.wtilde, f)
    }

    pub fn w_tilde_apply_with(&self, coeffs: &WtildeCoefficients, f: &Poly) -> Poly {
        coeffs.apply(f, self.source.vector_field(), self.source.seed().l(), self.source.p_u())
    }

    /// `W|_{Ẽ=H̃}(F) = (p_u + (μ/ν²)γX_L)²F − 2(Ĥ − E)F`.
    pub fn w_substituted_apply(&self, f: &Poly) -> Poly {
        let of = self.source.first_order(f);
        let shift = (&self.h_hat - &Poly::symbol(&self.e)).scale(&int(-2));
        &self.source.first_order(&of) + &(&shift * f)
    }

    fn iterate(&self, step: impl Fn(&Poly) -> Poly) -> Result<Poly> {
        check_budget(self.source.mu(), self.source.nu())?;
        let mut k = self.source.g_nu()?;
        for _ in 0..self.source.mu() / 2 {
            k = step(&k);
        }
        Ok(k)
    }

    /// `K̃ = W̃^{μ/2}(G_ν)`, computed once.
    pub fn k_tilde(&self) -> Result<&Poly> {
        self.k_tilde
            .get_or_init(|| self.iterate(|f| self.w_tilde_apply(f)))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `W̃^{μ/2}(G_ν)` for arbitrary coefficients.
    pub fn k_tilde_with(&self, coeffs: &WtildeCoefficients) -> Result<Poly> {
        self.iterate(|f| self.w_tilde_apply_with(coeffs, f))
    }

    /// `K(Ẽ)|_{Ẽ=H̃}` built from the slotted extension.
    pub fn k_tilde_by_substitution(&self) -> Result<Poly> {
        let slotted = self.slotted_source()?;
        let k = slotted.first_integral()?;
        Ok(k.substitute_one(&self.e_tilde, &self.h_tilde)?)
    }

    pub fn k_tilde_by_operator_substitution(&self) -> Result<Poly> {
        self.iterate(|f| self.w_substituted_apply(f))
    }

    pub fn route_agreement(&self, cfg: &ZeroConfig) -> Result<RouteAgreement> {
        let closed = self.k_tilde()?;
        let theorem_vs_closed = &self.k_tilde_by_substitution()? - closed;
        let operator_vs_closed = &self.k_tilde_by_operator_substitution()? - closed;
        let v1 = zero_test(&theorem_vs_closed, cfg)?;
        let v2 = zero_test(&operator_vs_closed, cfg)?;
        Ok(RouteAgreement {
            theorem_vs_closed,
            operator_vs_closed,
            theorem_tier: v1.tier,
            operator_tier: v2.tier,
            max_normalized: v1.max_normalized.max(v2.max_normalized),
        })
    }
}

// ------------------------------------------------------------ rescaled form

/// Column of the closed-form table for the rescaled operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RescaledColumn {
    CurvedNonzeroKappa,
    CurvedZeroKappa,
    Flat,
}

#[derive(Clone, Debug)]
pub struct RescaleConfig {
    /// `ũ(u₀) = 0`.
    pub anchor: f64,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub quad_tol: f64,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self {
            anchor: 1.0,
            grid: (0..=15).map(|i| 0.5 + 0.1 * f64::from(i)).collect(),
            seed: 0x7ab1e2,
            quad_tol: 1e-13,
        }
    }
}

/// One grid point of the comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct RescaledSample {
    pub u: f64,
    /// Quadrature value anchored at the configured `u₀`.
    pub u_tilde: f64,
    /// Closed-form `ũ` with the table's own anchoring.
    pub u_tilde_closed: f64,
    /// Extracted from `W|_{Ẽ=H̃}(G_ν)`.
    pub delta1: f64,
    pub delta1_table: f64,
    /// `γ′ − cγ²`.
    pub delta1_derived: f64,
    pub delta2: f64,
    pub delta2_table: f64,
    /// `2E − 4(μ²/ν²)γ²L₀`.
    pub delta2_derived: f64,
    /// Coefficient of `p_ũ X_L`; expected `2μ/ν²`.
    pub p_coefficient: f64,
}

/// The rescaled operator sampled on a grid, side by side with the table.
#[derive(Clone, Debug)]
pub struct RescaledOperator {
    pub column: RescaledColumn,
    pub anchor: f64,
    pub expected_p_coefficient: f64,
    pub samples: Vec<RescaledSample>,
    gamma: CompiledPoly,
    slots: Vec<f64>,
    u_slot: Option<usize>,
    quad_tol: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

impl RescaledOperator {
    /// Numeric `ũ(u)` anchored at `u₀`.
    pub fn u_tilde_at(&self, u: f64) -> Result<f64> {
        let f = |x: f64| -> Result<f64> {
            let mut slots = self.slots.clone();
            if let Some(i) = self.u_slot {
                slots[i] = x;
            }
            let (g, _) = self.gamma.eval(&slots)?;
            if g == 0.0 {
                return Err(Error::Quadrature(format!("gamma vanishes at u = {x}")));
            }
            Ok(1.0 / g)
        };
        integrate(&f, self.anchor, u, self.quad_tol)
    }

    /// Largest relative deviation of extracted `δ₁` from the table.
    pub fn delta1_vs_table(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| rel(s.delta1, s.delta1_table))
            .fold(0.0, f64::max)
    }

    pub fn delta1_vs_derived(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| rel(s.delta1, s.delta1_derived))
            .fold(0.0, f64::max)
    }

    pub fn delta2_vs_table(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| rel(s.delta2, s.delta2_table))
            .fold(0.0, f64::max)
    }

    pub fn delta2_vs_derived(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| rel(s.delta2, s.delta2_derived))
            .fold(0.0, f64::max)
    }

    pub fn p_coefficient_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| rel(s.p_coefficient, self.expected_p_coefficient))
            .fold(0.0, f64::max)
    }

    /// `+1` when extracted and tabulated `δ₁` agree in sign at every grid
    /// point, `−1` when they disagree at every point, `0` otherwise.
    pub fn delta1_sign_vs_table(&self) -> i32 {
        let signs: Vec<bool> = self
            .samples
            .iter()
            .map(|s| (s.delta1 > 0.0) == (s.delta1_table > 0.0))
            .collect();
        if signs.iter().all(|&x| x) {
            1
        } else if signs.iter().all(|&x| !x) {
            -1
        } else {
            0
        }
    }

    /// Spread of `ũ − ũ_closed` over the grid; zero when the two differ by a constant.
    pub fn u_tilde_offset_spread(&self) -> f64 {
        let offsets: Vec<f64> = self.samples.iter().map(|s| s.u_tilde - s.u_tilde_closed).collect();
        let lo = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol.max(f64::EPSILON * (left + right).abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}] (estimate error {delta:.3e})"
        )));
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// Samples the rescaled operator of `sys` on `cfg.grid` with parameters
/// bound by `env`.
pub fn rescaled_operator(sys: &CcmSystem, env: &NumericEnv, cfg: &RescaleConfig) -> Result<RescaledOperator> {
    let ext = sys.source();
    let u = ext.u().clone();
    let p_u = ext.p_u().clone();
    let (mu, nu) = (f64::from(ext.mu()), f64::from(ext.nu()));
    let c = ext.seed().c().clone();
    let c_f = rational_to_f64(&c);
    let column = match &ext.params().case {
        ExtensionCase::Flat { .. } => RescaledColumn::Flat,
        ExtensionCase::Curved { kappa } if kappa.is_zero() => RescaledColumn::CurvedZeroKappa,
        ExtensionCase::Curved { .. } => RescaledColumn::CurvedNonzeroKappa,
    };
    let kappa = match &ext.params().case {
        ExtensionCase::Curved { kappa } => rational_to_f64(kappa),
        ExtensionCase::Flat { .. } => 0.0,
    };
    let a_value = match &ext.params().case {
        ExtensionCase::Flat { a } => crate::symexpr::evaluate(a, env)?,
        ExtensionCase::Curved { .. } => 0.0,
    };
    let l0 = ext.seed().l0().evaluate(env)?;
    let e_value = env
        .get(sys.e())
        .ok_or_else(|| Error::InvalidParams(format!("`{}` must be bound", sys.e())))?;

    let gamma = &ext.structural().gamma;
    let dgamma = gamma.derivative(&u);
    let derived_d1 = &dgamma - &(gamma * gamma).scale(&c);
    let g_nu = ext.g_nu()?;
    let w = sys.w_substituted_apply(&g_nu);
    let xg = ext.vector_field().apply(&g_nu);
    let l = ext.seed().l();

    let compiled: Vec<CompiledPoly> = [gamma, &derived_d1, &w, &g_nu, &xg, l]
        .iter()
        .map(|p| CompiledPoly::new(p))
        .collect();
    let at = |p: &CompiledPoly, point: &NumericEnv| -> Result<f64> { Ok(p.eval(&p.bind(point)?)?.0) };

    // Two seed phase points with distinct L and nonvanishing G_ν, X_L(G_ν).
    let seed_syms = ext.seed().chart().phase_symbols();
    let mut points: Vec<NumericEnv> = Vec::new();
    for attempt in 0..256u64 {
        let mut r = rng::stream(cfg.seed, attempt);
        let mut point = env.clone();
        for s in &seed_syms {
            point.bind(s, r.random_range(0.5..1.5));
        }
        point.bind(&u, cfg.anchor).bind(&p_u, 0.0);
        let ok = (|| -> Result<bool> {
            let gv = at(&compiled[3], &point)?;
            let xv = at(&compiled[4], &point)?;
            let lv = at(&compiled[5], &point)?;
            let distinct = points
                .iter()
                .all(|q| (at(&compiled[5], q).unwrap_or(lv) - lv).abs() > 0.1);
            Ok(gv.abs() > 1e-2 && xv.abs() > 1e-2 && distinct)
        })();
        if matches!(ok, Ok(true)) {
            points.push(point);
            if points.len() == 2 {
                break;
            }
        }
    }
    if points.len() < 2 {
        return Err(Error::InvalidParams(
            "could not find regular seed points for coefficient extraction".into(),
        ));
    }

    let gamma_c = CompiledPoly::new(gamma);
    let mut base_env = env.clone();
    base_env.bind(&u, cfg.anchor);
    let slots = gamma_c.bind(&base_env)?;
    let u_slot = gamma_c.symbols().iter().position(|s| *s == u);
    let mut op = RescaledOperator {
        column,
        anchor: cfg.anchor,
        expected_p_coefficient: 2.0 * mu / (nu * nu),
        samples: Vec::new(),
        gamma: gamma_c,
        slots,
        u_slot,
        quad_tol: cfg.quad_tol,
    };

    let k2 = mu * mu / (nu * nu);
    for &uv in &cfg.grid {
        let mut ys = Vec::new();
        let mut ls = Vec::new();
        for pt in &points {
            let mut pt = pt.clone();
            pt.bind(&u, uv).bind(&p_u, 0.0);
            ys.push(at(&compiled[2], &pt)? / at(&compiled[3], &pt)?);
            ls.push(at(&compiled[5], &pt)?);
        }
        let b = (ys[0] - ys[1]) / (ls[0] - ls[1]);
        let e = ys[0] - b * ls[0];
        let mut pt = points[0].clone();
        pt.bind(&u, uv).bind(&p_u, 1.0);
        let gv = at(&compiled[3], &pt)?;
        let a = (at(&compiled[2], &pt)? - (b * ls[0] + e) * gv) / at(&compiled[4], &pt)?;
        let gamma_v = at(&compiled[0], &pt)?;
        let u_tilde = op.u_tilde_at(uv)?;
        let (ut_closed, d1_table, d2_table) = match column {
            RescaledColumn::CurvedZeroKappa => {
                let ut = c_f * uv * uv / 2.0;
                (ut, 2.0 / (c_f * uv * uv), 2.0 * e_value + l0 * k2 * kappa / (c_f * ut))
            }
            RescaledColumn::CurvedNonzeroKappa => {
                let cc = Tag::C.apply(kappa, c_f * uv);
                let ut = -cc.ln() / (kappa * c_f);
                let d1 = c_f * kappa * (1.0 + cc * cc) / (1.0 - cc * cc);
                let d2 = 2.0 * e_value + l0 * k2 * kappa * (1.0 / (c_f * kappa * ut).tanh() - 1.0);
                (ut, d1, d2)
            }
            RescaledColumn::Flat => {
                let ut = -uv.ln() / a_value;
                let d2 = 2.0 * e_value + 2.0 * k2 * l0 * a_value * a_value / (2.0 * a_value * ut).exp();
                (ut, a_value, d2)
            }
        };
        let d1_derived = at(&compiled[1], &pt)?;
        op.samples.push(RescaledSample {
            u: uv,
            u_tilde,
            u_tilde_closed: ut_closed,
            delta1: b / (2.0 * k2),
            delta1_table: d1_table,
            delta1_derived: d1_derived,
            delta2: e,
            delta2_table: d2_table,
            delta2_derived: 2.0 * e_value - 4.0 * k2 * gamma_v * gamma_v * l0,
            p_coefficient: a / gamma_v,
        });
    }
    Ok(op)
}
