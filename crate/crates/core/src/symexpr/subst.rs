use std::collections::{BTreeMap, HashMap};

use super::atom::{Atom, AtomKind};
use super::poly::{Acc, Monomial, Poly};
use super::{Expr, Node, Symbol};
use crate::error::SymError;

/// Simultaneous replacement of symbols by expressions. The tree is rebuilt
/// only along paths that contain a replaced symbol.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Symbol, Expr>) -> Expr {
    if bindings.is_empty() {
        return e.clone();
    }
    subst_tree(e, bindings).unwrap_or_else(|| e.clone())
}

fn subst_tree(e: &Expr, b: &BTreeMap<Symbol, Expr>) -> Option<Expr> {
    match e.node() {
        Node::Const(_) => None,
        Node::Sym(s) => b.get(s).cloned(),
        Node::Add(xs) | Node::Mul(xs) => {
            let mapped: Vec<Option<Expr>> = xs.iter().map(|x| subst_tree(x, b)).collect();
            if mapped.iter().all(Option::is_none) {
                return None;
            }
            let items = mapped
                .into_iter()
                .zip(xs)
                .map(|(m, x)| m.unwrap_or_else(|| x.clone()))
                .collect();
            Some(Expr::from_node(match e.node() {
                Node::Add(_) => Node::Add(items),
                _ => Node::Mul(items),
            }))
        }
        Node::Pow(base, k) => subst_tree(base, b).map(|x| Expr::from_node(Node::Pow(x, *k))),
        Node::Func(f, a) => subst_tree(a, b).map(|x| Expr::func(*f, x)),
        Node::Tagged(t, kappa, a) => subst_tree(a, b).map(|x| Expr::tagged(*t, kappa.clone(), x)),
    }
}

impl Poly {
    /// Simultaneous substitution on the canonical form.
    pub fn substitute(&self, bindings: &HashMap<Symbol, Poly>) -> Result<Poly, SymError> {
        if bindings.keys().all(|s| !self.depends_on(s)) {
            return Ok(self.clone());
        }
        let mut atom_cache: HashMap<Atom, Poly> = HashMap::new();
        let mut pow_cache: HashMap<(Atom, i32), Poly> = HashMap::new();
        let mut acc = Acc::with_capacity(self.len());
        for (mono, c) in self.terms() {
            let mut kept = Monomial::one();
            let mut product = Poly::constant(c.clone());
            for (atom, e) in mono.factors() {
                if !bindings.keys().any(|s| atom.depends_on(s)) {
                    kept = kept.mul_atom(atom, *e);
                    continue;
                }
                let key = (atom.clone(), *e);
                if !pow_cache.contains_key(&key) {
                    if !atom_cache.contains_key(atom) {
                        let v = subst_atom(atom, bindings)?;
                        atom_cache.insert(atom.clone(), v);
                    }
                    let powered = atom_cache[atom].powi(*e as i64)?;
                    pow_cache.insert(key.clone(), powered);
                }
                product = &product * &pow_cache[&key];
                if product.is_zero() {
                    break;
                }
            }
            for (m, pc) in product.terms() {
                acc.add(m.mul(&kept), pc.clone());
            }
        }
        Ok(acc.finish())
    }

    /// Convenience wrapper for a single symbol.
    pub fn substitute_one(&self, s: &Symbol, value: &Poly) -> Result<Poly, SymError> {
        let mut map = HashMap::new();
        map.insert(s.clone(), value.clone());
        self.substitute(&map)
    }
}

fn subst_atom(atom: &Atom, b: &HashMap<Symbol, Poly>) -> Result<Poly, SymError> {
    Ok(match atom.kind() {
        AtomKind::Sym(s) => b.get(s).cloned().unwrap_or_else(|| Poly::symbol(s)),
        AtomKind::Func(f, arg) => Poly::func(*f, arg.substitute(b)?),
        AtomKind::Tagged(t, kappa, arg) => Poly::tagged(*t, kappa, arg.substitute(b)?),
        AtomKind::Base(p) => p.substitute(b)?,
    })
}
