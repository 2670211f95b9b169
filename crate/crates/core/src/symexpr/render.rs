use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::atom::Tag;
use super::poly::Poly;
use super::{Expr, Node, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Plain,
    Latex,
}

/// Renders a tree. Output is a pure function of the tree, so normalized
/// inputs give byte-identical text.
pub fn render(e: &Expr, format: Format) -> String {
    match format {
        Format::Plain => plain(e),
        Format::Latex => latex(e),
    }
}

pub fn render_poly(p: &Poly, format: Format) -> String {
    render(&p.to_expr(), format)
}

/// Splits a product into sign, numerator and denominator factor lists.
struct Fraction<'a> {
    negative: bool,
    num_coeff: BigInt,
    den_coeff: BigInt,
    num: Vec<&'a Expr>,
    den: Vec<(&'a Expr, i64)>,
}

fn fraction(factors: &[Expr]) -> Fraction<'_> {
    let mut coeff = Rational::one();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for f in factors {
        match f.node() {
            Node::Const(q) => coeff *= q,
            Node::Pow(b, k) if *k < 0 => den.push((b, -k)),
            _ => num.push(f),
        }
    }
    Fraction {
        negative: coeff.is_negative(),
        num_coeff: coeff.numer().abs(),
        den_coeff: coeff.denom().clone(),
        num,
        den,
    }
}

fn factors_of(e: &Expr) -> Vec<Expr> {
    match e.node() {
        Node::Mul(xs) => xs.clone(),
        Node::Const(_) => vec![e.clone()],
        Node::Pow(_, k) if *k < 0 => vec![e.clone()],
        _ => vec![e.clone()],
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Const(q) => q.is_negative(),
        Node::Mul(xs) => fraction(xs).negative,
        _ => false,
    }
}

fn kappa_text(k: &Rational) -> String {
    // Decimal when the denominator divides a power of ten.
    let mut den = k.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", k.numer(), k.denom());
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return k.numer().to_string();
    }
    let scaled = k * Rational::from_integer(num_traits::pow(BigInt::from(10), digits));
    let n = scaled.to_integer();
    let s = n.abs().to_string();
    let s = format!("{:0>width$}", s, width = digits + 1);
    let (ip, fp) = s.split_at(s.len() - digits);
    format!("{}{}.{}", if n.is_negative() { "-" } else { "" }, ip, fp)
}

// ---------------------------------------------------------------- plaintext

fn plain(e: &Expr) -> String {
    match e.node() {
        Node::Add(xs) => {
            let mut out = String::new();
            for (i, x) in xs.iter().enumerate() {
                if i == 0 {
                    out.push_str(&plain_term(x, false));
                } else if is_negative_term(x) {
                    out.push_str(" - ");
                    out.push_str(&plain_term(x, true));
                } else {
                    out.push_str(" + ");
                    out.push_str(&plain_term(x, false));
                }
            }
            out
        }
        _ => plain_term(e, false),
    }
}

fn plain_term(e: &Expr, drop_sign: bool) -> String {
    match e.node() {
        Node::Const(q) => {
            let q = if drop_sign { q.abs() } else { q.clone() };
            q.to_string()
        }
        Node::Mul(_) | Node::Pow(_, _) => {
            let factors = factors_of(e);
            let fr = fraction(&factors);
            let mut num: Vec<String> = Vec::new();
            if !fr.num_coeff.is_one() || (fr.num.is_empty() && fr.den.is_empty()) {
                num.push(fr.num_coeff.to_string());
            }
            num.extend(fr.num.iter().map(|f| plain_factor(f)));
            let mut den: Vec<String> = Vec::new();
            if !fr.den_coeff.is_one() {
                den.push(fr.den_coeff.to_string());
            }
            den.extend(fr.den.iter().map(|(b, k)| plain_power(b, *k)));
            let mut out = String::new();
            if fr.negative && !drop_sign {
                out.push('-');
            }
            if num.is_empty() {
                out.push('1');
            } else {
                out.push_str(&num.join("*"));
            }
            match den.len() {
                0 => {}
                1 => {
                    out.push('/');
                    out.push_str(&den[0]);
                }
                _ => {
                    out.push_str("/(");
                    out.push_str(&den.join("*"));
                    out.push(')');
                }
            }
            out
        }
        _ => plain_factor(e),
    }
}

fn plain_power(base: &Expr, k: i64) -> String {
    let b = plain_base(base);
    if k == 1 {
        b
    } else {
        format!("{b}^{k}")
    }
}

fn plain_base(e: &Expr) -> String {
    match e.node() {
        Node::Sym(_) | Node::Func(_, _) | Node::Tagged(_, _, _) => plain_factor(e),
        Node::Const(q) if !q.is_negative() && q.is_integer() => q.to_string(),
        _ => format!("({})", plain(e)),
    }
}

fn plain_factor(e: &Expr) -> String {
    match e.node() {
        Node::Sym(s) => s.name().to_string(),
        Node::Const(q) => {
            if q.is_integer() && !q.is_negative() {
                q.to_string()
            } else {
                format!("({q})")
            }
        }
        Node::Func(f, a) => format!("{}({})", f.name(), plain(a)),
        Node::Tagged(t, k, a) => format!("{}[{}]({})", t.name(), kappa_text(k), plain(a)),
        Node::Pow(b, k) if *k >= 0 => plain_power(b, *k),
        _ => format!("({})", plain(e)),
    }
}

// -------------------------------------------------------------------- LaTeX

const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu", "xi",
    "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi",
    "Pi", "Sigma", "Phi", "Psi", "Omega",
];

fn latex_ident(part: &str) -> String {
    if GREEK.contains(&part) {
        return format!("\\{part}");
    }
    let split = part
        .find(|c: char| c.is_ascii_digit())
        .filter(|&i| i > 0 && part[i..].chars().all(|c| c.is_ascii_digit()));
    if let Some(i) = split {
        return format!("{}_{{{}}}", latex_ident(&part[..i]), &part[i..]);
    }
    if part.chars().count() > 1 {
        format!("\\mathrm{{{part}}}")
    } else {
        part.to_string()
    }
}

fn latex_symbol(name: &str) -> String {
    match name.split_once('_') {
        Some((base, sub)) if !base.is_empty() && !sub.is_empty() => {
            let sub = sub.split('_').map(latex_ident).collect::<Vec<_>>().join(",");
            format!("{}_{{{}}}", latex_ident(base), sub)
        }
        _ => latex_ident(name),
    }
}

fn latex(e: &Expr) -> String {
    match e.node() {
        Node::Add(xs) => {
            let mut out = String::new();
            for (i, x) in xs.iter().enumerate() {
                if i == 0 {
                    out.push_str(&latex_term(x, false));
                } else if is_negative_term(x) {
                    out.push_str(" - ");
                    out.push_str(&latex_term(x, true));
                } else {
                    out.push_str(" + ");
                    out.push_str(&latex_term(x, false));
                }
            }
            out
        }
        _ => latex_term(e, false),
    }
}

fn latex_join(parts: &[String]) -> String {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            let prev_digit = out.ends_with(|c: char| c.is_ascii_digit());
            let next_digit = p.starts_with(|c: char| c.is_ascii_digit());
            if prev_digit && next_digit {
                out.push_str(" \\cdot ");
            }
        }
        out.push_str(p);
    }
    out
}

fn latex_term(e: &Expr, drop_sign: bool) -> String {
    match e.node() {
        Node::Const(q) => {
            let q = if drop_sign { q.abs() } else { q.clone() };
            if q.is_integer() {
                q.to_string()
            } else {
                format!(
                    "{}\\frac{{{}}}{{{}}}",
                    if q.is_negative() { "-" } else { "" },
                    q.numer().abs(),
                    q.denom()
                )
            }
        }
        Node::Mul(_) | Node::Pow(_, _) => {
            let factors = factors_of(e);
            let fr = fraction(&factors);
            let mut num: Vec<String> = Vec::new();
            if !fr.num_coeff.is_one() {
                num.push(fr.num_coeff.to_string());
            }
            num.extend(fr.num.iter().map(|f| latex_factor(f)));
            let mut den: Vec<String> = Vec::new();
            if !fr.den_coeff.is_one() {
                den.push(fr.den_coeff.to_string());
            }
            den.extend(fr.den.iter().map(|(b, k)| latex_power(b, *k)));
            let sign = if fr.negative && !drop_sign { "-" } else { "" };
            let num_text = if num.is_empty() {
                "1".to_string()
            } else {
                latex_join(&num)
            };
            if den.is_empty() {
                format!("{sign}{num_text}")
            } else {
                format!("{sign}\\frac{{{num_text}}}{{{}}}", latex_join(&den))
            }
        }
        _ => latex_factor(e),
    }
}

fn latex_arg(a: &Expr) -> String {
    match a.node() {
        Node::Sym(s) => latex_symbol(s.name()),
        _ => format!("\\left({}\\right)", latex(a)),
    }
}

fn latex_power(base: &Expr, k: i64) -> String {
    match base.node() {
        Node::Func(f, a) if k > 1 => format!("\\{}^{{{}}}{}", f.name(), k, latex_arg(a)),
        _ => {
            let b = match base.node() {
                Node::Sym(_) | Node::Func(_, _) | Node::Tagged(_, _, _) => latex_factor(base),
                Node::Const(q) if !q.is_negative() && q.is_integer() => q.to_string(),
                _ => format!("\\left({}\\right)", latex(base)),
            };
            if k == 1 {
                b
            } else {
                format!("{b}^{{{k}}}")
            }
        }
    }
}

fn latex_factor(e: &Expr) -> String {
    match e.node() {
        Node::Sym(s) => latex_symbol(s.name()),
        Node::Const(_) => latex_term(e, false),
        Node::Func(f, a) => format!("\\{}{}", f.name(), latex_arg(a)),
        Node::Tagged(t, k, a) => {
            let name = match t {
                Tag::S => "S",
                Tag::C => "C",
                Tag::T => "T",
            };
            format!("{name}_{{{}}}\\left({}\\right)", kappa_text(k), latex(a))
        }
        Node::Pow(b, k) if *k >= 0 => latex_power(b, *k),
        _ => format!("\\left({}\\right)", latex(e)),
    }
}
