//! Canonical charts, Poisson brackets and Hamiltonian vector fields.
//!
//! Sign convention: `{a, b} = Σ ∂a/∂q ∂b/∂p − ∂a/∂p ∂b/∂q` and the vector
//! field of `l` acts as `X_l(f) = {f, l}`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::symexpr::{Expr, NumericEnv, Poly, Symbol, SymbolKind};

/// Ordered canonical pairs `(q, p)` plus an optional distinguished pair `(u, p_u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalChart {
    pairs: Vec<(Symbol, Symbol)>,
    extension: Option<(Symbol, Symbol)>,
}

fn check_pair(q: &Symbol, p: &Symbol) -> Result<()> {
    if q.kind() != SymbolKind::Coordinate {
        return Err(Error::Chart(format!("`{q}` is not a coordinate")));
    }
    if p.kind() != SymbolKind::Momentum {
        return Err(Error::Chart(format!("`{p}` is not a momentum")));
    }
    Ok(())
}

impl CanonicalChart {
    pub fn new(pairs: Vec<(Symbol, Symbol)>) -> Result<Self> {
        let chart = Self { pairs, extension: None };
        chart.validate()?;
        Ok(chart)
    }

    pub fn single(q: &Symbol, p: &Symbol) -> Result<Self> {
        Self::new(vec![(q.clone(), p.clone())])
    }

    /// Adds the distinguished extension pair.
    pub fn with_extension(&self, u: &Symbol, p_u: &Symbol) -> Result<Self> {
        if self.extension.is_some() {
            return Err(Error::Chart("chart already has an extension pair".into()));
        }
        let chart = Self {
            pairs: self.pairs.clone(),
            extension: Some((u.clone(), p_u.clone())),
        };
        chart.validate()?;
        Ok(chart)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (q, p) in self.all_pairs() {
            check_pair(q, p)?;
            for s in [q, p] {
                if !seen.insert(s.name().to_string()) {
                    return Err(Error::Chart(format!("symbol `{s}` appears twice")));
                }
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[(Symbol, Symbol)] {
        &self.pairs
    }

    pub fn extension(&self) -> Option<&(Symbol, Symbol)> {
        self.extension.as_ref()
    }

    /// Seed pairs followed by the extension pair.
    pub fn all_pairs(&self) -> impl Iterator<Item = &(Symbol, Symbol)> {
        self.pairs.iter().chain(self.extension.iter())
    }

    pub fn dimension(&self) -> usize {
        self.all_pairs().count()
    }

    pub fn coordinates(&self) -> Vec<Symbol> {
        self.all_pairs().map(|(q, _)| q.clone()).collect()
    }

    pub fn momenta(&self) -> Vec<Symbol> {
        self.all_pairs().map(|(_, p)| p.clone()).collect()
    }

    pub fn momentum_set(&self) -> BTreeSet<Symbol> {
        self.momenta().into_iter().collect()
    }

    /// Coordinates then momenta, pair order.
    pub fn phase_symbols(&self) -> Vec<Symbol> {
        let mut out = self.coordinates();
        out.extend(self.momenta());
        out
    }
}

/// A point of phase space; parameters are bound separately.
#[derive(Clone, Debug)]
pub struct PhasePoint {
    pub chart: CanonicalChart,
    pub values: NumericEnv,
}

impl PhasePoint {
    pub fn new(chart: CanonicalChart, values: NumericEnv) -> Result<Self> {
        for s in chart.phase_symbols() {
            if values.get(&s).is_none() {
                return Err(Error::Chart(format!("phase point leaves `{s}` unbound")));
            }
        }
        Ok(Self { chart, values })
    }

    /// Values in [`CanonicalChart::phase_symbols`] order.
    pub fn state(&self) -> Vec<f64> {
        self.chart
            .phase_symbols()
            .iter()
            .map(|s| self.values.get(s).unwrap_or(f64::NAN))
            .collect()
    }
}

pub fn poisson_bracket_poly(a: &Poly, b: &Poly, chart: &CanonicalChart) -> Poly {
    let mut out = Poly::zero();
    for (q, p) in chart.all_pairs() {
        if a.depends_on(q) && b.depends_on(p) {
            out = &out + &(&a.derivative(q) * &b.derivative(p));
        }
        if a.depends_on(p) && b.depends_on(q) {
            out = &out - &(&a.derivative(p) * &b.derivative(q));
        }
    }
    out
}

/// `{a, b}` over every pair of the chart, returned normalized.
pub fn poisson_bracket(a: &Expr, b: &Expr, chart: &CanonicalChart) -> Result<Expr> {
    Ok(poisson_bracket_poly(&a.to_poly()?, &b.to_poly()?, chart).to_expr())
}

/// `X_l(f) = {f, l}`, returned normalized.
pub fn apply_vector_field(l: &Expr, f: &Expr, chart: &CanonicalChart) -> Result<Expr> {
    Ok(poisson_bracket_poly(&f.to_poly()?, &l.to_poly()?, chart).to_expr())
}

/// The Hamiltonian vector field of a fixed function, with its partial
/// derivatives cached for repeated application.
#[derive(Clone, Debug)]
pub struct VectorField {
    chart: CanonicalChart,
    /// `(q, p, ∂l/∂q, ∂l/∂p)` for every pair on which `l` depends.
    parts: Vec<(Symbol, Symbol, Poly, Poly)>,
}

impl VectorField {
    pub fn new(l: &Poly, chart: &CanonicalChart) -> Self {
        let parts = chart
            .all_pairs()
            .filter(|(q, p)| l.depends_on(q) || l.depends_on(p))
            .map(|(q, p)| (q.clone(), p.clone(), l.derivative(q), l.derivative(p)))
            .collect();
        Self {
            chart: chart.clone(),
            parts,
        }
    }

    pub fn chart(&self) -> &CanonicalChart {
        &self.chart
    }

    /// `X_l(f) = Σ ∂f/∂q ∂l/∂p − ∂f/∂p ∂l/∂q`.
    pub fn apply(&self, f: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (q, p, dl_dq, dl_dp) in &self.parts {
            if !dl_dp.is_zero() && f.depends_on(q) {
                out = &out + &(&f.derivative(q) * dl_dp);
            }
            if !dl_dq.is_zero() && f.depends_on(p) {
                out = &out - &(&f.derivative(p) * dl_dq);
            }
        }
        out
    }

    pub fn apply_n(&self, f: &Poly, n: usize) -> Poly {
        (0..n).fold(f.clone(), |acc, _| self.apply(&acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, SymbolTable};

    fn chart_qp() -> (CanonicalChart, SymbolTable) {
        let q = Symbol::coordinate("q");
        let p = Symbol::momentum("p");
        (CanonicalChart::single(&q, &p).unwrap(), SymbolTable::with(&[&q, &p]))
    }

    #[test]
    fn canonical_pair_bracket_is_one() {
        let (chart, t) = chart_qp();
        let q = parse("q", &t).unwrap();
        let p = parse("p", &t).unwrap();
        assert_eq!(poisson_bracket(&q, &p, &chart).unwrap(), Expr::one());
    }

    #[test]
    fn kinetic_bracket_with_position() {
        let (chart, t) = chart_qp();
        let h = parse("p^2/2", &t).unwrap();
        let q = parse("q", &t).unwrap();
        let expected = parse("-p", &t).unwrap().to_poly().unwrap();
        let got = poisson_bracket(&h, &q, &chart).unwrap().to_poly().unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn vector_field_annihilates_its_generator() {
        let (chart, t) = chart_qp();
        let l = parse("p^2/2 + 1/q^2 + q^4", &t).unwrap();
        assert!(apply_vector_field(&l, &l, &chart).unwrap().is_zero_node());
    }

    #[test]
    fn chart_rejects_duplicates_and_wrong_kinds() {
        let q = Symbol::coordinate("q");
        let p = Symbol::momentum("p");
        assert!(CanonicalChart::new(vec![(q.clone(), p.clone()), (q.clone(), p.clone())]).is_err());
        assert!(CanonicalChart::single(&p, &q).is_err());
        let chart = CanonicalChart::single(&q, &p).unwrap();
        assert!(chart.with_extension(&q, &Symbol::momentum("pu")).is_err());
    }
}
