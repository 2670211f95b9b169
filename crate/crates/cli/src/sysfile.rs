//! TOML description of a user-supplied seed system.
//!
//! ```toml
//! [symbols]
//! coordinates = ["psi"]
//! momenta = ["p_psi"]
//! parameters = ["c1", "c2", "f0"]
//!
//! [seed]
//! L = "p_psi^2/2 + (c1 + c2*cos(psi))/sin(psi)^2"
//! G = "p_psi*sin(psi)"
//! c = "1"
//! L0 = "0"
//!
//! [extension]
//! m = 1
//! n = 1
//! case = "curved"   # or "flat", which takes `A` instead of `kappa`
//! kappa = "0"
//! f0 = "f0"
//!
//! [ccm]
//! E = "E"
//!
//! [bindings]
//! c1 = 1.0
//!
//! [boxes]
//! psi = [0.5, 1.5]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use hamext_core::catalog::{Boxes, Overrides};
use hamext_core::extension::{ExtensionCase, ExtensionParams, SeedSystem};
use hamext_core::mechanics::CanonicalChart;
use hamext_core::symexpr::{parse, substitute, Expr, NumericEnv, Rational, Symbol, SymbolKind, SymbolTable};

use crate::params::parse_rational;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: Option<String>,
    pub symbols: Symbols,
    pub seed: Seed,
    #[serde(default)]
    pub extension: Extension,
    pub ccm: Option<Ccm>,
    #[serde(default)]
    pub bindings: BTreeMap<String, f64>,
    #[serde(default)]
    pub boxes: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Symbols {
    pub coordinates: Vec<String>,
    pub momenta: Vec<String>,
    #[serde(default)]
    pub parameters: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seed {
    #[serde(rename = "L")]
    pub l: String,
    #[serde(rename = "G")]
    pub g: String,
    pub c: String,
    #[serde(rename = "L0", default = "zero")]
    pub l0: String,
}

#[derive(Debug, Default, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    #[default]
    Curved,
    Flat,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extension {
    pub m: Option<u32>,
    pub n: Option<u32>,
    #[serde(default)]
    pub case: Case,
    pub kappa: Option<String>,
    #[serde(rename = "A")]
    pub a: Option<String>,
    #[serde(default = "zero")]
    pub f0: String,
}

impl Default for Extension {
    fn default() -> Self {
        Self {
            m: None,
            n: None,
            case: Case::default(),
            kappa: None,
            a: None,
            f0: zero(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ccm {
    #[serde(rename = "E", default = "energy")]
    pub e: String,
}

fn zero() -> String {
    "0".into()
}

fn energy() -> String {
    "E".into()
}

/// A parsed file with overrides substituted into every expression.
pub struct Loaded {
    pub name: String,
    pub seed: SeedSystem,
    pub m: Option<u32>,
    pub n: Option<u32>,
    pub case: ExtensionCase,
    pub f0: Expr,
    pub energy: Option<Symbol>,
    pub bindings: NumericEnv,
    pub boxes: Boxes,
}

impl SystemFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn load(&self, fallback_name: &str, overrides: &Overrides) -> Result<Loaded> {
        let s = &self.symbols;
        ensure!(
            s.coordinates.len() == s.momenta.len() && !s.coordinates.is_empty(),
            "need as many momenta as coordinates, and at least one pair"
        );
        let mut table = SymbolTable::new();
        let mut pairs = Vec::new();
        for (q, p) in s.coordinates.iter().zip(&s.momenta) {
            pairs.push((
                table.declare(q, SymbolKind::Coordinate)?,
                table.declare(p, SymbolKind::Momentum)?,
            ));
        }
        for name in &s.parameters {
            table.declare(name, SymbolKind::Parameter)?;
        }
        let energy = match &self.ccm {
            Some(c) => Some(table.declare(&c.e, SymbolKind::Parameter)?),
            None => None,
        };
        for name in overrides.keys() {
            ensure!(
                s.parameters.contains(name),
                "--param {name}: not a declared parameter of the system file"
            );
        }
        let fixed: BTreeMap<Symbol, Expr> = overrides
            .iter()
            .map(|(k, v)| (Symbol::parameter(k), Expr::constant(v.clone())))
            .collect();
        let expr = |field: &str, text: &str| -> Result<Expr> {
            let e = parse(text, &table).with_context(|| format!("in `{field}`"))?;
            Ok(substitute(&e, &fixed))
        };

        let chart = CanonicalChart::new(pairs)?;
        let c = constant("seed.c", &self.seed.c)?;
        let seed = SeedSystem::new(
            chart,
            &expr("seed.L", &self.seed.l)?,
            &expr("seed.G", &self.seed.g)?,
            c,
            &expr("seed.L0", &self.seed.l0)?,
        )?;

        let ext = &self.extension;
        let case = match ext.case {
            Case::Curved => {
                if ext.a.is_some() {
                    bail!("`A` belongs to the flat case; use `kappa` for a curved extension");
                }
                ExtensionCase::Curved {
                    kappa: constant("extension.kappa", ext.kappa.as_deref().unwrap_or("0"))?,
                }
            }
            Case::Flat => {
                if ext.kappa.is_some() {
                    bail!("`kappa` belongs to the curved case; use `A` for a flat extension");
                }
                ExtensionCase::Flat {
                    a: expr("extension.A", ext.a.as_deref().unwrap_or("1"))?,
                }
            }
        };

        let mut bindings = NumericEnv::new();
        for (name, value) in &self.bindings {
            match table.get(name) {
                Some(sym) if sym.kind() == SymbolKind::Parameter => {
                    if !overrides.contains_key(name) {
                        bindings.bind(sym, *value);
                    }
                }
                _ => bail!("binding `{name}` is not a declared parameter"),
            }
        }
        let mut boxes = Boxes::new();
        for (name, [lo, hi]) in &self.boxes {
            ensure!(lo < hi, "box for `{name}` is empty");
            let sym = match name.as_str() {
                "u" => Symbol::coordinate("u"),
                _ => match table.get(name) {
                    Some(sym) if sym.kind() == SymbolKind::Coordinate => sym.clone(),
                    _ => bail!("box `{name}` does not name a coordinate"),
                },
            };
            boxes.insert(sym, (*lo, *hi));
        }
        Ok(Loaded {
            name: self.name.clone().unwrap_or_else(|| fallback_name.to_string()),
            seed,
            m: ext.m,
            n: ext.n,
            case,
            f0: expr("extension.f0", &ext.f0)?,
            energy,
            bindings,
            boxes,
        })
    }
}

impl Loaded {
    pub fn params(&self, m: u32, n: u32) -> ExtensionParams {
        ExtensionParams {
            m,
            n,
            case: self.case.clone(),
            f0: self.f0.clone(),
        }
    }
}

fn constant(field: &str, text: &str) -> Result<Rational> {
    parse_rational(text).with_context(|| format!("`{field}` must be a rational constant"))
}
