use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::poly::{Monomial, Poly};
use super::{Rational, Symbol, SymbolKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            _ => return None,
        })
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
        }
    }
}

/// The tagged trigonometric functions `S_κ`, `C_κ`, `T_κ = S_κ / C_κ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    S,
    C,
    T,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::S => "S",
            Tag::C => "C",
            Tag::T => "T",
        }
    }

    /// Numeric value, branching on the sign of `kappa`.
    pub fn apply(self, kappa: f64, x: f64) -> f64 {
        let s = if kappa > 0.0 {
            let r = kappa.sqrt();
            (r * x).sin() / r
        } else if kappa < 0.0 {
            let r = (-kappa).sqrt();
            (r * x).sinh() / r
        } else {
            x
        };
        let c = if kappa > 0.0 {
            (kappa.sqrt() * x).cos()
        } else if kappa < 0.0 {
            ((-kappa).sqrt() * x).cosh()
        } else {
            1.0
        };
        match self {
            Tag::S => s,
            Tag::C => c,
            Tag::T => s / c,
        }
    }
}

/// A multiplicative generator of the canonical form.
///
/// `Base` holds a multi-term polynomial that only ever occurs with a negative
/// exponent; positive powers of sums are always expanded.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    Sym(Symbol),
    Func(Func, Poly),
    /// Only `Tag::S` and `Tag::C` occur here; `T` is rewritten as `S * C^-1`.
    Tagged(Tag, Rational, Poly),
    Base(Poly),
}

/// A base linear in one symbol: `coeff * mono * var + rest`.
#[derive(Clone, Debug)]
pub(crate) struct LinearForm {
    pub var: Symbol,
    pub coeff: Rational,
    pub mono: Monomial,
    pub rest: Poly,
}

struct AtomInner {
    kind: AtomKind,
    hash: u64,
    free: Vec<Symbol>,
    linear: Option<LinearForm>,
}

/// Interned-by-value atom with a cached hash and free-symbol list.
#[derive(Clone)]
pub struct Atom(Arc<AtomInner>);

impl Atom {
    pub fn new(kind: AtomKind) -> Self {
        let mut h = DefaultHasher::new();
        kind.hash(&mut h);
        let hash = h.finish();
        let mut free: Vec<Symbol> = match &kind {
            AtomKind::Sym(s) => vec![s.clone()],
            AtomKind::Func(_, p) | AtomKind::Tagged(_, _, p) | AtomKind::Base(p) => {
                p.free_symbols().into_iter().collect()
            }
        };
        free.sort();
        free.dedup();
        let linear = match &kind {
            AtomKind::Base(p) => linear_form(p),
            _ => None,
        };
        Atom(Arc::new(AtomInner {
            kind,
            hash,
            free,
            linear,
        }))
    }

    pub fn symbol(s: &Symbol) -> Self {
        Self::new(AtomKind::Sym(s.clone()))
    }

    pub fn kind(&self) -> &AtomKind {
        &self.0.kind
    }

    pub fn free_symbols(&self) -> &[Symbol] {
        &self.0.free
    }

    pub fn depends_on(&self, s: &Symbol) -> bool {
        self.0.free.binary_search(s).is_ok()
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match &self.0.kind {
            AtomKind::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_momentum(&self) -> bool {
        matches!(&self.0.kind, AtomKind::Sym(s) if s.kind() == SymbolKind::Momentum)
    }

    pub(crate) fn linear(&self) -> Option<&LinearForm> {
        self.0.linear.as_ref()
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.kind.cmp(&other.0.kind)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.kind)
    }
}

/// Finds a symbol in which `p` is linear with an invertible single-term
/// coefficient, so that `var = (p - rest) / (coeff * mono)`.
///
/// Coordinates are preferred over momenta, momenta over parameters, so the
/// choice depends only on `p`.
fn linear_form(p: &Poly) -> Option<LinearForm> {
    let mut candidates: Vec<Symbol> = p.free_symbols().into_iter().collect();
    candidates.sort_by(|a, b| a.kind().cmp(&b.kind()).then_with(|| a.name().cmp(b.name())));
    'outer: for var in candidates {
        let mut lead: Option<(Rational, Monomial)> = None;
        let mut rest = Vec::new();
        for (mono, c) in p.terms() {
            let mut exp = 0;
            for (atom, e) in mono.factors() {
                match atom.kind() {
                    AtomKind::Sym(s) if *s == var => exp = *e,
                    _ if atom.depends_on(&var) => continue 'outer,
                    _ => {}
                }
            }
            match exp {
                0 => rest.push((mono.clone(), c.clone())),
                1 => {
                    if lead.is_some() {
                        continue 'outer;
                    }
                    let stripped = mono.without_symbol(&var);
                    if stripped
                        .factors()
                        .iter()
                        .any(|(a, _)| matches!(a.kind(), AtomKind::Base(_)))
                    {
                        continue 'outer;
                    }
                    lead = Some((c.clone(), stripped));
                }
                _ => continue 'outer,
            }
        }
        if let Some((coeff, mono)) = lead {
            if rest.is_empty() {
                continue;
            }
            return Some(LinearForm {
                var,
                coeff,
                mono,
                rest: Poly::from_sorted_terms(rest),
            });
        }
    }
    None
}
