use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops;

use num_integer::binomial;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use super::atom::{Atom, AtomKind, Func, Tag};
use super::{int, Expr, Node, Rational, Symbol, SymbolKind};
use crate::error::SymError;

/// Product of atoms with integer exponents, sorted by atom, no zero exponents.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(SmallVec<[(Atom, i32); 4]>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn from_atom(atom: Atom, e: i32) -> Self {
        let mut m = Self::one();
        if e != 0 {
            m.0.push((atom, e));
        }
        m
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        if other.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return other.clone();
        }
        let mut out = SmallVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().cloned());
        Monomial(out)
    }

    pub fn mul_atom(&self, atom: &Atom, e: i32) -> Monomial {
        self.mul(&Monomial::from_atom(atom.clone(), e))
    }

    pub fn exponent_of(&self, atom: &Atom) -> i32 {
        self.0.iter().find(|(a, _)| a == atom).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn symbol_exponent(&self, s: &Symbol) -> i32 {
        self.0
            .iter()
            .find(|(a, _)| a.as_symbol() == Some(s))
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn without_symbol(&self, s: &Symbol) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter(|(a, _)| a.as_symbol() != Some(s))
                .cloned()
                .collect(),
        )
    }

    fn with_exponent(&self, idx: usize, e: i32) -> Monomial {
        let mut out = self.0.clone();
        if e == 0 {
            out.remove(idx);
        } else {
            out[idx].1 = e;
        }
        Monomial(out)
    }

    /// Total degree in the given symbols.
    pub fn degree_in(&self, symbols: &BTreeSet<Symbol>) -> i32 {
        self.0
            .iter()
            .filter_map(|(a, e)| a.as_symbol().filter(|s| symbols.contains(*s)).map(|_| *e))
            .sum()
    }

    fn momentum_part(&self) -> (i32, Vec<(&Symbol, i32)>) {
        let parts: Vec<(&Symbol, i32)> = self
            .0
            .iter()
            .filter_map(|(a, e)| match a.kind() {
                AtomKind::Sym(s) if s.kind() == SymbolKind::Momentum => Some((s, *e)),
                _ => None,
            })
            .collect();
        (parts.iter().map(|(_, e)| e).sum(), parts)
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(a, e)| format!("{a:?}^{e}")).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Display order: graded-lex in momenta (highest degree first), then by the
/// remaining factors.
pub(crate) fn display_order(a: &Monomial, b: &Monomial) -> Ordering {
    let (da, ma) = a.momentum_part();
    let (db, mb) = b.momentum_part();
    db.cmp(&da)
        .then_with(|| {
            let mut i = 0;
            let mut j = 0;
            loop {
                match (ma.get(i), mb.get(j)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Less,
                    (None, Some(_)) => return Ordering::Greater,
                    (Some((sa, ea)), Some((sb, eb))) => match sa.cmp(sb) {
                        Ordering::Less => return Ordering::Less,
                        Ordering::Greater => return Ordering::Greater,
                        Ordering::Equal => match eb.cmp(ea) {
                            Ordering::Equal => {
                                i += 1;
                                j += 1;
                            }
                            o => return o,
                        },
                    },
                }
            }
        })
        .then_with(|| a.cmp(b))
}

/// Accumulates terms, applying the canonical rewrites on insertion:
///
/// * `cos(x)^k`, `k >= 2` becomes `cos(x)^(k-2) * (1 - sin(x)^2)`;
/// * `C[κ](x)^k`, `k >= 2` becomes `C[κ](x)^(k-2) * (1 - κ S[κ](x)^2)`;
/// * `v^i * B^-j` with `B` linear in `v` is rewritten in powers of `B`
///   (partial fractions), so no term carries both.
pub(crate) struct Acc {
    map: HashMap<Monomial, Rational>,
}

impl Acc {
    pub fn new() -> Self {
        Self { map: HashMap::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            map: HashMap::with_capacity(n),
        }
    }

    fn add_raw(&mut self, mono: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.map.entry(mono) {
            std::collections::hash_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
            }
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
        }
    }

    pub fn add(&mut self, mono: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        for (idx, (atom, e)) in mono.factors().iter().enumerate() {
            match atom.kind() {
                AtomKind::Func(Func::Cos, arg) if *e >= 2 => {
                    let base = mono.with_exponent(idx, e - 2);
                    let sin = func_atom(Func::Sin, arg.clone());
                    self.add(base.mul_atom(&sin, 2), -coeff.clone());
                    self.add(base, coeff);
                    return;
                }
                AtomKind::Tagged(Tag::C, kappa, arg) if *e >= 2 => {
                    let base = mono.with_exponent(idx, e - 2);
                    let s = Atom::new(AtomKind::Tagged(Tag::S, kappa.clone(), arg.clone()));
                    self.add(base.mul_atom(&s, 2), -(coeff.clone() * kappa));
                    self.add(base, coeff);
                    return;
                }
                AtomKind::Base(base_poly) if *e < 0 => {
                    if let Some(lin) = atom.linear() {
                        let i = mono.symbol_exponent(&lin.var);
                        if i > 0 {
                            self.expand_partial_fraction(&mono, coeff, atom, *e, base_poly, i);
                            return;
                        }
                    }
                }
                _ => {}
            }
        }
        self.add_raw(mono, coeff);
    }

    /// `v^i B^e` with `B = a v + b`: `v = (B - b)/a`, so
    /// `v^i B^e = a^-i Σ_l C(i,l) (-b)^(i-l) B^(l+e)`.
    fn expand_partial_fraction(
        &mut self,
        mono: &Monomial,
        coeff: Rational,
        base_atom: &Atom,
        e: i32,
        base_poly: &Poly,
        i: i32,
    ) {
        let lin = base_atom.linear().expect("linear base");
        let rest = Monomial(
            mono.factors()
                .iter()
                .filter(|(a, _)| a != base_atom && a.as_symbol() != Some(&lin.var))
                .cloned()
                .collect(),
        );
        let a_inv = Monomial(lin.mono.factors().iter().map(|(a, k)| (a.clone(), -k * i)).collect());
        let scale = coeff / num_traits::pow(lin.coeff.clone(), i as usize);
        let neg_b = -&lin.rest;
        let outer = rest.mul(&a_inv);
        for l in 0..=i {
            let c = scale.clone() * int(binomial(i as i64, l as i64));
            let mut part = neg_b.pow((i - l) as u32);
            let k = l + e;
            if k < 0 {
                part = part.mul_monomial(&Monomial::from_atom(base_atom.clone(), k), &Rational::one());
            } else {
                part = &part * &base_poly.pow(k as u32);
            }
            for (m, pc) in part.terms {
                self.add(outer.mul(&m), c.clone() * pc);
            }
        }
    }

    pub fn finish(self) -> Poly {
        let mut terms: Vec<(Monomial, Rational)> = self.map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        Poly { terms }
    }
}

fn func_atom(f: Func, arg: Poly) -> Atom {
    Atom::new(AtomKind::Func(f, arg))
}

/// Canonical sum of monomials with exact rational coefficients.
///
/// Terms are sorted by monomial and carry nonzero coefficients, so structural
/// equality is semantic equality within the rewrite system of [`Acc`].
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    terms: Vec<(Monomial, Rational)>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Poly {
            terms: vec![(Monomial::one(), q)],
        }
    }

    pub fn int(n: i64) -> Self {
        Self::constant(int(n))
    }

    pub fn symbol(s: &Symbol) -> Self {
        Poly {
            terms: vec![(Monomial::from_atom(Atom::symbol(s), 1), Rational::one())],
        }
    }

    pub fn from_atom(atom: Atom, e: i32) -> Self {
        Self::from_monomial(Monomial::from_atom(atom, e), Rational::one())
    }

    pub fn from_monomial(mono: Monomial, coeff: Rational) -> Self {
        let mut acc = Acc::new();
        acc.add(mono, coeff);
        acc.finish()
    }

    pub(crate) fn from_sorted_terms(terms: Vec<(Monomial, Rational)>) -> Self {
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn scale(&self, q: &Rational) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn mul_monomial(&self, mono: &Monomial, coeff: &Rational) -> Poly {
        let mut acc = Acc::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            acc.add(m.mul(mono), c * coeff);
        }
        acc.finish()
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn powi(&self, k: i64) -> Result<Poly, SymError> {
        let exponent = u32::try_from(k.unsigned_abs()).map_err(|_| SymError::Syntax {
            position: 0,
            message: format!("exponent {k} out of range"),
        })?;
        if k >= 0 {
            Ok(self.pow(exponent))
        } else {
            Ok(self.recip()?.pow(exponent))
        }
    }

    /// Multiplicative inverse. Multi-term polynomials become a `Base` atom
    /// after the common monomial factor and leading coefficient are pulled out.
    pub fn recip(&self) -> Result<Poly, SymError> {
        match self.terms.as_slice() {
            [] => Err(SymError::DivisionByZero),
            [(mono, c)] => {
                let mut inv = Poly::constant(c.recip());
                let mut plain = Monomial::one();
                for (atom, e) in mono.factors() {
                    match atom.kind() {
                        AtomKind::Base(b) if *e < 0 => inv = &inv * &b.pow((-e) as u32),
                        _ => plain = plain.mul_atom(atom, -e),
                    }
                }
                Ok(inv.mul_monomial(&plain, &Rational::one()))
            }
            _ => {
                let gcd = self.monomial_gcd();
                let gcd_inv = Monomial(gcd.factors().iter().map(|(a, e)| (a.clone(), -e)).collect());
                let reduced = self.mul_monomial(&gcd_inv, &Rational::one());
                if reduced.len() == 1 {
                    return reduced.recip().map(|r| r.mul_monomial(&gcd_inv, &Rational::one()));
                }
                let lead = reduced.terms[0].1.clone();
                let monic = reduced.scale(&lead.recip());
                let atom = Atom::new(AtomKind::Base(monic));
                Ok(Poly::from_monomial(gcd_inv.mul_atom(&atom, -1), lead.recip()))
            }
        }
    }

    /// Largest monomial dividing every term, ignoring `Base` atoms. Exponents
    /// may be negative; an atom absent from a term counts as exponent 0.
    fn monomial_gcd(&self) -> Monomial {
        let atoms: BTreeSet<&Atom> = self
            .terms
            .iter()
            .flat_map(|(m, _)| m.factors().iter().map(|(a, _)| a))
            .filter(|a| !matches!(a.kind(), AtomKind::Base(_)))
            .collect();
        let mut out = SmallVec::new();
        for a in atoms {
            let e = self.terms.iter().map(|(m, _)| m.exponent_of(a)).min().unwrap_or(0);
            if e != 0 {
                out.push((a.clone(), e));
            }
        }
        Monomial(out)
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for (m, _) in &self.terms {
            for (a, _) in m.factors() {
                out.extend(a.free_symbols().iter().cloned());
            }
        }
        out
    }

    pub fn depends_on(&self, s: &Symbol) -> bool {
        self.terms
            .iter()
            .any(|(m, _)| m.factors().iter().any(|(a, _)| a.depends_on(s)))
    }

    /// Maximum total degree in `symbols`; `None` for the zero polynomial.
    pub fn degree_in(&self, symbols: &BTreeSet<Symbol>) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.degree_in(symbols).max(0) as u32).max()
    }

    /// Splits into coefficients of monomials in `symbols` (exponent vectors in
    /// the order given).
    pub fn coefficients_in(&self, symbols: &[Symbol]) -> BTreeMap<Vec<i32>, Poly> {
        let mut groups: BTreeMap<Vec<i32>, Vec<(Monomial, Rational)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let key: Vec<i32> = symbols.iter().map(|s| m.symbol_exponent(s)).collect();
            let rest = Monomial(
                m.factors()
                    .iter()
                    .filter(|(a, _)| a.as_symbol().is_none_or(|s| !symbols.contains(s)))
                    .cloned()
                    .collect(),
            );
            groups.entry(key).or_default().push((rest, c.clone()));
        }
        groups
            .into_iter()
            .map(|(k, mut v)| {
                v.sort_by(|a, b| a.0.cmp(&b.0));
                (k, Poly { terms: v })
            })
            .collect()
    }

    /// Applies a canonical function, folding `f(0)` and odd/even symmetry.
    pub fn func(f: Func, arg: Poly) -> Poly {
        if arg.is_zero() {
            return match f {
                Func::Sin | Func::Sinh => Poly::zero(),
                Func::Cos | Func::Cosh | Func::Exp => Poly::one(),
            };
        }
        let flip = f != Func::Exp && arg.terms[0].1.is_negative();
        let arg = if flip { -&arg } else { arg };
        let p = Poly::from_atom(func_atom(f, arg), 1);
        match (flip, f) {
            (true, Func::Sin | Func::Sinh) => -&p,
            _ => p,
        }
    }

    /// Tagged function; `κ = 0` folds to `S₀(x) = x`, `C₀ = 1`, `T₀(x) = x`.
    pub fn tagged(tag: Tag, kappa: &Rational, arg: Poly) -> Poly {
        if kappa.is_zero() {
            return match tag {
                Tag::S | Tag::T => arg,
                Tag::C => Poly::one(),
            };
        }
        if arg.is_zero() {
            return match tag {
                Tag::S | Tag::T => Poly::zero(),
                Tag::C => Poly::one(),
            };
        }
        let flip = arg.terms[0].1.is_negative();
        let arg = if flip { -&arg } else { arg };
        let s = Atom::new(AtomKind::Tagged(Tag::S, kappa.clone(), arg.clone()));
        let c = Atom::new(AtomKind::Tagged(Tag::C, kappa.clone(), arg));
        let p = match tag {
            Tag::S => Poly::from_atom(s, 1),
            Tag::C => return Poly::from_atom(c, 1),
            Tag::T => Poly::from_monomial(Monomial::from_atom(s, 1).mul_atom(&c, -1), Rational::one()),
        };
        if flip {
            -&p
        } else {
            p
        }
    }

    pub fn from_expr(e: &Expr) -> Result<Poly, SymError> {
        Ok(match e.node() {
            Node::Const(q) => Poly::constant(q.clone()),
            Node::Sym(s) => Poly::symbol(s),
            Node::Add(xs) => {
                let mut acc = Acc::new();
                for x in xs {
                    for (m, c) in Poly::from_expr(x)?.terms {
                        acc.add_raw(m, c);
                    }
                }
                acc.finish()
            }
            Node::Mul(xs) => {
                let mut out = Poly::one();
                for x in xs {
                    out = &out * &Poly::from_expr(x)?;
                    if out.is_zero() {
                        break;
                    }
                }
                out
            }
            Node::Pow(b, k) => Poly::from_expr_pow(b, *k)?,
            Node::Func(f, a) => Poly::func(*f, Poly::from_expr(a)?),
            Node::Tagged(t, kappa, a) => Poly::tagged(*t, kappa, Poly::from_expr(a)?),
        })
    }

    /// Negative powers are pushed through products and nested powers before
    /// expansion, so `1/(x^2*y)` and `x^-2*y^-1` reach the same form.
    fn from_expr_pow(base: &Expr, k: i64) -> Result<Poly, SymError> {
        match base.node() {
            Node::Pow(inner, a) => Poly::from_expr_pow(inner, a * k),
            Node::Mul(xs) if k < 0 => {
                let mut out = Poly::one();
                for x in xs {
                    out = &out * &Poly::from_expr_pow(x, k)?;
                }
                Ok(out)
            }
            _ => Poly::from_expr(base)?.powi(k),
        }
    }

    /// Converts back to a tree, terms in display order.
    pub fn to_expr(&self) -> Expr {
        let mut order: Vec<&(Monomial, Rational)> = self.terms.iter().collect();
        order.sort_by(|a, b| display_order(&a.0, &b.0));
        let terms: Vec<Expr> = order
            .into_iter()
            .map(|(m, c)| {
                let mut factors = Vec::with_capacity(m.factors().len() + 1);
                if !c.is_one() || m.is_one() {
                    factors.push(Expr::constant(c.clone()));
                }
                for (a, e) in m.factors() {
                    factors.push(atom_expr(a).pow(*e as i64));
                }
                Expr::product(factors)
            })
            .collect();
        Expr::sum(terms)
    }

    pub fn derivative(&self, s: &Symbol) -> Poly {
        let mut cache: HashMap<Atom, Poly> = HashMap::new();
        let mut acc = Acc::new();
        for (mono, c) in &self.terms {
            for (idx, (atom, e)) in mono.factors().iter().enumerate() {
                if !atom.depends_on(s) {
                    continue;
                }
                let da = cache.entry(atom.clone()).or_insert_with(|| atom_derivative(atom, s));
                if da.is_zero() {
                    continue;
                }
                let reduced = mono.with_exponent(idx, e - 1);
                let scale = c * int(*e as i64);
                for (m2, c2) in &da.terms {
                    acc.add(reduced.mul(m2), &scale * c2);
                }
            }
        }
        acc.finish()
    }
}

pub(crate) fn atom_expr(a: &Atom) -> Expr {
    match a.kind() {
        AtomKind::Sym(s) => Expr::sym(s),
        AtomKind::Func(f, arg) => Expr::func(*f, arg.to_expr()),
        AtomKind::Tagged(t, kappa, arg) => Expr::tagged(*t, kappa.clone(), arg.to_expr()),
        AtomKind::Base(b) => b.to_expr(),
    }
}

fn atom_derivative(atom: &Atom, s: &Symbol) -> Poly {
    match atom.kind() {
        AtomKind::Sym(t) => {
            if t == s {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        AtomKind::Func(f, arg) => {
            let da = arg.derivative(s);
            if da.is_zero() {
                return da;
            }
            let outer = match f {
                Func::Sin => Poly::func(Func::Cos, arg.clone()),
                Func::Cos => -&Poly::func(Func::Sin, arg.clone()),
                Func::Sinh => Poly::func(Func::Cosh, arg.clone()),
                Func::Cosh => Poly::func(Func::Sinh, arg.clone()),
                Func::Exp => Poly::from_atom(atom.clone(), 1),
            };
            &outer * &da
        }
        AtomKind::Tagged(tag, kappa, arg) => {
            let da = arg.derivative(s);
            if da.is_zero() {
                return da;
            }
            let outer = match tag {
                Tag::S => Poly::tagged(Tag::C, kappa, arg.clone()),
                Tag::C => Poly::tagged(Tag::S, kappa, arg.clone()).scale(&-kappa.clone()),
                Tag::T => unreachable!("T is stored as S/C"),
            };
            &outer * &da
        }
        AtomKind::Base(b) => b.derivative(s),
    }
}

impl ops::Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let (a, b) = (&self.terms, &rhs.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a[i].1 + &b[j].1;
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().cloned());
        Poly { terms: out }
    }
}

impl ops::Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl ops::Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut acc = Acc::with_capacity(self.len().max(rhs.len()) * 2);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                acc.add(ma.mul(mb), ca * cb);
            }
        }
        acc.finish()
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Default term-count ceiling for symbolic constructions; the
/// `HAMEXT_TERM_CAP` environment variable overrides it.
pub fn term_ceiling() -> usize {
    std::env::var("HAMEXT_TERM_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(200_000)
}
