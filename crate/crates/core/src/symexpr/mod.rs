//! Symbolic expressions over phase-space coordinates, momenta and parameters.
//!
//! [`Expr`] is an immutable tree used at the edges (parsing, rendering,
//! user-facing APIs). All algebra happens on [`Poly`], a canonical sum of
//! monomials over [`Atom`]s with exact rational coefficients. Converting an
//! `Expr` to a `Poly` and back is what [`normalize`] does.

mod atom;
mod eval;
mod parse;
mod poly;
mod render;
mod subst;
mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::SymError;

pub use atom::{Atom, AtomKind, Func, Tag};
pub use eval::{evaluate, CompiledPoly, NumericEnv};
pub use parse::parse;
pub use poly::{term_ceiling, Monomial, Poly};
pub use render::{render, render_poly, Format};
pub use subst::substitute;
pub use zero::{heuristic_zero, zero_test, ZeroConfig, ZeroTier, ZeroVerdict};

/// Exact rational number used for every constant inside a tree.
pub type Rational = BigRational;

/// Builds a rational from a numerator and denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integral rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Coordinate,
    Momentum,
    Parameter,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Coordinate => "coordinate",
            SymbolKind::Momentum => "momentum",
            SymbolKind::Parameter => "parameter",
        })
    }
}

/// A named leaf. Two symbols are equal when both name and kind agree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    kind: SymbolKind,
}

impl Symbol {
    pub fn new(name: &str, kind: SymbolKind) -> Self {
        Self {
            name: Arc::from(name),
            kind,
        }
    }

    pub fn coordinate(name: &str) -> Self {
        Self::new(name, SymbolKind::Coordinate)
    }

    pub fn momentum(name: &str) -> Self {
        Self::new(name, SymbolKind::Momentum)
    }

    pub fn parameter(name: &str) -> Self {
        Self::new(name, SymbolKind::Parameter)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn is_momentum(&self) -> bool {
        self.kind == SymbolKind::Momentum
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Declared identifiers available to the parser. Names are unique.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    symbols: BTreeMap<String, Symbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name`; redeclaring with the same kind is a no-op.
    pub fn declare(&mut self, name: &str, kind: SymbolKind) -> Result<Symbol, SymError> {
        if let Some(existing) = self.symbols.get(name) {
            if existing.kind != kind {
                return Err(SymError::KindConflict {
                    name: name.to_string(),
                    existing: existing.kind.to_string(),
                });
            }
            return Ok(existing.clone());
        }
        if !is_identifier(name) {
            return Err(SymError::Syntax {
                position: 0,
                message: format!("`{name}` is not a valid identifier"),
            });
        }
        let sym = Symbol::new(name, kind);
        self.symbols.insert(name.to_string(), sym.clone());
        Ok(sym)
    }

    pub fn insert(&mut self, sym: &Symbol) -> Result<(), SymError> {
        self.declare(sym.name(), sym.kind()).map(|_| ())
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    pub fn with(symbols: &[&Symbol]) -> Self {
        let mut table = Self::new();
        for s in symbols {
            table.insert(s).expect("conflicting symbol kinds in table literal");
        }
        table
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Immutable expression tree. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(Rational),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i64),
    Func(Func, Expr),
    /// Tagged trigonometric function with a fixed curvature tag.
    Tagged(Tag, Rational, Expr),
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(q: Rational) -> Self {
        Self::from_node(Node::Const(q))
    }

    pub fn int(n: i64) -> Self {
        Self::constant(int(n))
    }

    pub fn rat(num: i64, den: i64) -> Self {
        Self::constant(rat(num, den))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn sym(s: &Symbol) -> Self {
        Self::from_node(Node::Sym(s.clone()))
    }

    pub fn pow(&self, k: i64) -> Self {
        match k {
            1 => self.clone(),
            _ => Self::from_node(Node::Pow(self.clone(), k)),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Self {
        Self::from_node(Node::Func(f, arg))
    }

    pub fn sin(&self) -> Self {
        Self::func(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        Self::func(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Self {
        Self::func(Func::Exp, self.clone())
    }

    pub fn tagged(tag: Tag, kappa: Rational, arg: Expr) -> Self {
        Self::from_node(Node::Tagged(tag, kappa, arg))
    }

    pub fn sum(items: Vec<Expr>) -> Self {
        match items.len() {
            0 => Self::zero(),
            1 => items.into_iter().next().unwrap(),
            _ => Self::from_node(Node::Add(items)),
        }
    }

    pub fn product(items: Vec<Expr>) -> Self {
        match items.len() {
            0 => Self::one(),
            1 => items.into_iter().next().unwrap(),
            _ => Self::from_node(Node::Mul(items)),
        }
    }

    /// True only for the literal zero node; use [`normalize`] first for a semantic test.
    pub fn is_zero_node(&self) -> bool {
        matches!(self.node(), Node::Const(q) if q.is_zero())
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(q) => Some(q),
            _ => None,
        }
    }

    /// Expands into canonical polynomial form.
    pub fn to_poly(&self) -> Result<Poly, SymError> {
        Poly::from_expr(self)
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Sym(s) => {
                out.insert(s.clone());
            }
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Node::Pow(b, _) => b.collect_symbols(out),
            Node::Func(_, a) | Node::Tagged(_, _, a) => a.collect_symbols(out),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, Format::Plain))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, Format::Plain))
    }
}

impl From<&Symbol> for Expr {
    fn from(s: &Symbol) -> Self {
        Expr::sym(s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(q: Rational) -> Self {
        Expr::constant(q)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self, rhs);
                $body
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self.clone(), rhs.clone());
                $body
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self, rhs.clone());
                $body
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self.clone(), rhs);
                $body
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::from_node(Node::Add(vec![a, b])));
binop!(Sub, sub, |a, b| Expr::from_node(Node::Add(vec![a, -b])));
binop!(Mul, mul, |a, b| Expr::from_node(Node::Mul(vec![a, b])));
binop!(Div, div, |a, b| Expr::from_node(Node::Mul(vec![a, b.pow(-1)])));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Const(q) => Expr::constant(-q.clone()),
            _ => Expr::from_node(Node::Mul(vec![Expr::int(-1), self])),
        }
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

/// Canonical form: expands `e` and converts back to a tree whose terms are
/// ordered graded-lex in the momenta.
pub fn normalize(e: &Expr) -> Result<Expr, SymError> {
    Ok(e.to_poly()?.to_expr())
}

/// Partial derivative of `e` with respect to `s`, returned normalized.
pub fn differentiate(e: &Expr, s: &Symbol) -> Result<Expr, SymError> {
    Ok(e.to_poly()?.derivative(s).to_expr())
}

/// Maximum total momentum degree; `None` stands for the zero expression.
pub fn momentum_degree(e: &Expr, momenta: &BTreeSet<Symbol>) -> Result<Option<u32>, SymError> {
    Ok(e.to_poly()?.degree_in(momenta))
}

#[cfg(test)]
mod tests;
