use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use hamext_core::symexpr::{render_poly, Format, Poly};
use hamext_core::verify::ResidualStats;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    /// `exact`, `heuristic` or `nonzero` for zero tests, `null` otherwise.
    pub tier: Option<String>,
    pub max_abs: Option<f64>,
    pub mean_abs: Option<f64>,
    pub scale: Option<f64>,
    pub normalized: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn plain(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            tier: None,
            max_abs: None,
            mean_abs: None,
            scale: None,
            normalized: None,
            pass,
            detail,
        }
    }

    pub fn failed(name: &str, err: &anyhow::Error) -> Self {
        Self::plain(name, false, format!("error: {err:#}"))
    }

    pub fn from_stats(name: &str, s: &ResidualStats, detail: String) -> Self {
        Self {
            name: name.into(),
            tier: Some(format!("{:?}", s.tier).to_lowercase()),
            max_abs: Some(s.max_abs),
            mean_abs: Some(s.mean_abs),
            scale: Some(s.scale),
            normalized: Some(s.normalized()),
            pass: s.pass,
            detail,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub system: String,
    pub m: u32,
    pub n: u32,
    pub mu: u32,
    pub nu: u32,
    pub parameters: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} (m, n) = ({}, {}), (mu, nu) = ({}, {})\n",
            self.system, self.m, self.n, self.mu, self.nu
        );
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let _ = write!(out, "{verdict} {}", c.name);
            if let Some(t) = &c.tier {
                let _ = write!(out, " [{t}]");
            }
            if let Some(x) = c.normalized {
                let _ = write!(out, " normalized={x:.3e}");
            }
            if !c.detail.is_empty() {
                let _ = write!(out, ": {}", c.detail);
            }
            out.push('\n');
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(out, "{passed}/{} checks passed", self.checks.len());
        out
    }
}

/// A rendered symbolic object.
#[derive(Debug, Serialize)]
pub struct Rendered {
    pub name: String,
    pub plain: String,
    pub latex: String,
    pub terms: usize,
}

impl Rendered {
    pub fn new(name: &str, p: &Poly) -> Self {
        Self {
            name: name.into(),
            plain: render_poly(p, Format::Plain),
            latex: render_poly(p, Format::Latex),
            terms: p.len(),
        }
    }
}

/// Output of `extend`, `ccm` and `show`.
#[derive(Debug, Serialize)]
pub struct Listing {
    pub schema_version: u32,
    pub system: String,
    pub m: u32,
    pub n: u32,
    pub mu: u32,
    pub nu: u32,
    pub notes: Vec<String>,
    pub expressions: Vec<Rendered>,
}

impl Listing {
    pub fn to_text(&self, latex: bool) -> String {
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        for r in &self.expressions {
            let body = if latex { &r.latex } else { &r.plain };
            let _ = writeln!(out, "{} = {body}", r.name);
        }
        out
    }
}
