use std::collections::{BTreeMap, HashMap};

use super::atom::{Atom, AtomKind, Func, Tag};
use super::poly::{Monomial, Poly};
use super::{rational_to_f64, Expr, Node, Symbol};
use crate::error::SymError;

/// Double-precision bindings for symbols.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumericEnv {
    bindings: BTreeMap<Symbol, f64>,
}

impl NumericEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, s: &Symbol, value: f64) -> &mut Self {
        self.bindings.insert(s.clone(), value);
        self
    }

    pub fn with(mut self, s: &Symbol, value: f64) -> Self {
        self.bind(s, value);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.bindings.get(s).copied()
    }

    pub fn extend(&mut self, other: &NumericEnv) {
        for (s, v) in &other.bindings {
            self.bindings.insert(s.clone(), *v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, f64)> {
        self.bindings.iter().map(|(s, v)| (s, *v))
    }
}

fn checked(v: f64, what: impl FnOnce() -> String) -> Result<f64, SymError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SymError::Pole(what()))
    }
}

/// Evaluates a tree in IEEE double precision.
pub fn evaluate(e: &Expr, env: &NumericEnv) -> Result<f64, SymError> {
    match e.node() {
        Node::Const(q) => Ok(rational_to_f64(q)),
        Node::Sym(s) => env.get(s).ok_or_else(|| SymError::Unbound(s.name().to_string())),
        Node::Add(xs) => xs.iter().try_fold(0.0, |acc, x| Ok(acc + evaluate(x, env)?)),
        Node::Mul(xs) => xs.iter().try_fold(1.0, |acc, x| Ok(acc * evaluate(x, env)?)),
        Node::Pow(b, k) => {
            let base = evaluate(b, env)?;
            if *k < 0 && base == 0.0 {
                return Err(SymError::Pole(e.to_string()));
            }
            checked(base.powi(*k as i32), || e.to_string())
        }
        Node::Func(f, a) => checked(f.apply(evaluate(a, env)?), || e.to_string()),
        Node::Tagged(t, kappa, a) => {
            let x = evaluate(a, env)?;
            checked(t.apply(rational_to_f64(kappa), x), || e.to_string())
        }
    }
}

impl Poly {
    pub fn evaluate(&self, env: &NumericEnv) -> Result<f64, SymError> {
        let compiled = CompiledPoly::new(self);
        let slots = compiled.bind(env)?;
        compiled.eval(&slots).map(|(v, _)| v)
    }
}

#[derive(Clone, Debug)]
enum Node2 {
    Slot(usize),
    Func(Func, Terms),
    Tagged(Tag, f64, Terms),
    Base(Terms),
}

type Terms = Vec<(f64, Vec<(u32, i32)>)>;

/// A polynomial flattened for repeated numeric evaluation: each distinct atom
/// is computed once per point.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    symbols: Vec<Symbol>,
    nodes: Vec<Node2>,
    terms: Terms,
}

struct Builder {
    symbols: Vec<Symbol>,
    slot_of: HashMap<Symbol, usize>,
    nodes: Vec<Node2>,
    index: HashMap<Atom, u32>,
}

impl Builder {
    fn terms(&mut self, p: &Poly) -> Terms {
        p.terms()
            .iter()
            .map(|(m, c)| (rational_to_f64(c), self.monomial(m)))
            .collect()
    }

    fn monomial(&mut self, m: &Monomial) -> Vec<(u32, i32)> {
        m.factors().iter().map(|(a, e)| (self.atom(a), *e)).collect()
    }

    fn atom(&mut self, a: &Atom) -> u32 {
        if let Some(&i) = self.index.get(a) {
            return i;
        }
        let node = match a.kind() {
            AtomKind::Sym(s) => {
                let next = self.symbols.len();
                let slot = *self.slot_of.entry(s.clone()).or_insert(next);
                if slot == next {
                    self.symbols.push(s.clone());
                }
                Node2::Slot(slot)
            }
            AtomKind::Func(f, arg) => Node2::Func(*f, self.terms(arg)),
            AtomKind::Tagged(t, kappa, arg) => Node2::Tagged(*t, rational_to_f64(kappa), self.terms(arg)),
            AtomKind::Base(b) => Node2::Base(self.terms(b)),
        };
        let i = self.nodes.len() as u32;
        self.nodes.push(node);
        self.index.insert(a.clone(), i);
        i
    }
}

fn eval_terms(terms: &Terms, values: &[f64], abs_sum: Option<&mut f64>) -> Option<f64> {
    let mut total = 0.0;
    let mut abs = 0.0;
    for (c, factors) in terms {
        let mut t = *c;
        for &(i, e) in factors {
            let v = values[i as usize];
            if e < 0 && v == 0.0 {
                return None;
            }
            t *= if e == 1 { v } else { v.powi(e) };
        }
        total += t;
        abs += t.abs();
    }
    if let Some(a) = abs_sum {
        *a = abs;
    }
    Some(total)
}

impl CompiledPoly {
    pub fn new(p: &Poly) -> Self {
        let mut b = Builder {
            symbols: Vec::new(),
            slot_of: HashMap::new(),
            nodes: Vec::new(),
            index: HashMap::new(),
        };
        let terms = b.terms(p);
        CompiledPoly {
            symbols: b.symbols,
            nodes: b.nodes,
            terms,
        }
    }

    /// Symbols in slot order.
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn bind(&self, env: &NumericEnv) -> Result<Vec<f64>, SymError> {
        self.symbols
            .iter()
            .map(|s| env.get(s).ok_or_else(|| SymError::Unbound(s.name().to_string())))
            .collect()
    }

    /// Returns the value and the sum of absolute term values.
    pub fn eval(&self, slots: &[f64]) -> Result<(f64, f64), SymError> {
        let mut values = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            let v = match node {
                Node2::Slot(s) => slots[*s],
                Node2::Func(f, t) => f.apply(eval_terms(t, &values, None).ok_or_else(pole)?),
                Node2::Tagged(tag, kappa, t) => tag.apply(*kappa, eval_terms(t, &values, None).ok_or_else(pole)?),
                Node2::Base(t) => eval_terms(t, &values, None).ok_or_else(pole)?,
            };
            if !v.is_finite() {
                return Err(pole());
            }
            values[i] = v;
        }
        let mut abs = 0.0;
        let v = eval_terms(&self.terms, &values, Some(&mut abs)).ok_or_else(pole)?;
        if !v.is_finite() {
            return Err(pole());
        }
        Ok((v, abs))
    }
}

fn pole() -> SymError {
    SymError::Pole("compiled polynomial".to_string())
}
