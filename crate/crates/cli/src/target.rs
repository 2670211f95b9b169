//! Resolves a catalog id or a system file into the objects the subcommands
//! operate on.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};

use hamext_core::catalog::{self, Boxes, Identification, Overrides, RChart};
use hamext_core::ccm::{ccm_extension, CcmSystem};
use hamext_core::extension::{extend, ExtendedSystem};
use hamext_core::symexpr::{evaluate, rational_to_f64, NumericEnv, Poly, Rational, Symbol, SymbolKind};

use crate::sysfile::SystemFile;

pub struct Request<'a> {
    pub system: &'a str,
    pub file: Option<&'a Path>,
    pub m: Option<u32>,
    pub n: Option<u32>,
    pub params: &'a [(String, Rational)],
}

/// The metamorphosed side of a target.
pub struct CcmTarget {
    pub sys: CcmSystem,
    /// Bindings in the internal chart, including the energy.
    pub env: NumericEnv,
    pub boxes: Boxes,
    /// Chart in which the brackets are sampled, when it differs from the
    /// internal one.
    pub image: Option<Identification>,
    pub rchart: Option<RChart>,
}

/// Comparison of an internal Hamiltonian with a published form.
pub struct CrossCheck {
    pub label: String,
    pub id: Identification,
    pub internal: Poly,
}

pub struct Target {
    pub name: String,
    pub ext: ExtendedSystem,
    pub ext_env: NumericEnv,
    pub ext_boxes: Boxes,
    pub ccm: Option<CcmTarget>,
    pub cross_check: Option<CrossCheck>,
    /// Every parameter with the value it is bound or fixed to.
    pub parameters: BTreeMap<String, f64>,
}

impl Target {
    pub fn m(&self) -> u32 {
        self.ext.params().m
    }

    pub fn n(&self) -> u32 {
        self.ext.params().n
    }

    pub fn require_ccm(&self) -> Result<&CcmTarget> {
        match &self.ccm {
            Some(c) => Ok(c),
            None if self.name == "ttw" => {
                bail!("`ttw` is an extension only; its metamorphosis is the `pw` entry")
            }
            None => bail!(
                "`{}` has no metamorphosis; add a [ccm] table to the system file",
                self.name
            ),
        }
    }
}

pub fn build(req: &Request) -> Result<Target> {
    match req.file {
        Some(path) => from_file(path, req),
        None => from_catalog(req),
    }
}

/// Splits `E` off the overrides: it stays symbolic and is bound numerically.
fn split_energy(params: &[(String, Rational)], energy: Option<&str>) -> (Overrides, Option<f64>) {
    let mut overrides = Overrides::new();
    let mut e = None;
    for (name, value) in params {
        if Some(name.as_str()) == energy {
            e = Some(rational_to_f64(value));
        } else {
            overrides.insert(name.clone(), value.clone());
        }
    }
    (overrides, e)
}

fn record(env: &NumericEnv, overrides: &Overrides) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = env
        .iter()
        .filter(|(s, _)| s.kind() == SymbolKind::Parameter)
        .map(|(s, v)| (s.name().to_string(), v))
        .collect();
    for (name, value) in overrides {
        out.insert(name.clone(), rational_to_f64(value));
    }
    out
}

fn from_catalog(req: &Request) -> Result<Target> {
    let id = req.system;
    let entry = catalog::entry(id)?;
    let (m, n) = (req.m.unwrap_or(1), req.n.unwrap_or(1));
    let energy = (id != "ttw").then_some("E");
    let (o, e) = split_energy(req.params, energy);
    let mut env = entry.bindings(&o);
    if let Some(e) = e {
        env.bind(&Symbol::parameter("E"), e);
    }
    let parameters = record(&env, &o);
    let boxes = catalog::default_boxes(id)?;
    let target = match id {
        "ttw" => {
            let ext = catalog::ttw(m, n, &o)?;
            let id = catalog::ttw_identification(&ext, &o)?;
            Target {
                name: "ttw".into(),
                cross_check: Some(CrossCheck {
                    label: "2H = H_TTW".into(),
                    internal: ext.h().clone(),
                    id,
                }),
                ext,
                ext_env: env,
                ext_boxes: boxes,
                ccm: None,
                parameters,
            }
        }
        "pw" => {
            let sys = catalog::pw(m, n, &o)?;
            let rc = RChart::new(&sys)?;
            let id = catalog::pw_identification(&sys, &rc, &o)?;
            let internal = rc.transform(sys.h_tilde())?;
            // The source extension keeps f0 symbolic.
            let mut ext_env = catalog::entry("ttw")?.bindings(&o);
            ext_env.extend(&env);
            let parameters = record(&ext_env, &o);
            Target {
                name: "pw".into(),
                ext: sys.source().clone(),
                ext_env,
                ext_boxes: boxes.clone(),
                cross_check: Some(CrossCheck {
                    label: "2H~ = H_PW (r-chart)".into(),
                    id,
                    internal,
                }),
                ccm: Some(CcmTarget {
                    sys,
                    env,
                    boxes,
                    image: None,
                    rchart: Some(rc),
                }),
                parameters,
            }
        }
        "caged" => {
            let (ext, sys) = catalog::caged(m, n, &o)?;
            Target {
                name: "caged".into(),
                ext,
                ext_env: env.clone(),
                ext_boxes: boxes.clone(),
                ccm: Some(CcmTarget {
                    sys,
                    env,
                    boxes,
                    image: None,
                    rchart: None,
                }),
                cross_check: None,
                parameters,
            }
        }
        "halfplane" => {
            let (sys, mut id) = catalog::halfplane(m, n, &o)?;
            id.bindings = env.clone();
            let internal_env = pull_back(&id, &env)?;
            Target {
                name: "halfplane".into(),
                ext: sys.source().clone(),
                ext_env: internal_env.clone(),
                ext_boxes: catalog::default_boxes("caged")?,
                cross_check: Some(CrossCheck {
                    label: "H~ = H_halfplane".into(),
                    internal: sys.h_tilde().clone(),
                    id: id.clone(),
                }),
                ccm: Some(CcmTarget {
                    sys,
                    env: internal_env,
                    boxes,
                    image: Some(id),
                    rchart: None,
                }),
                parameters,
            }
        }
        other => bail!("no builder for catalog entry `{other}`"),
    };
    Ok(target)
}

/// Bindings of the internal parameters implied by the reference bindings
/// through the identification's parameter relations.
fn pull_back(id: &Identification, env: &NumericEnv) -> Result<NumericEnv> {
    let mut out = env.clone();
    for (s, e) in &id.substitutions {
        if s.kind() == SymbolKind::Parameter {
            out.bind(s, evaluate(e, env)?);
        }
    }
    Ok(out)
}

fn from_file(path: &Path, req: &Request) -> Result<Target> {
    let file = SystemFile::read(path)?;
    let energy_name = file.ccm.as_ref().map(|c| c.e.clone());
    let (o, e) = split_energy(req.params, energy_name.as_deref());
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("file");
    let loaded = file.load(stem, &o)?;
    let m = req.m.or(loaded.m).unwrap_or(1);
    let n = req.n.or(loaded.n).unwrap_or(1);
    let ext = extend(&loaded.seed, &loaded.params(m, n))?;
    let mut env = loaded.bindings.clone();
    let ccm = match &loaded.energy {
        Some(sym) => {
            if let Some(e) = e {
                env.bind(sym, e);
            }
            Some(CcmTarget {
                sys: ccm_extension(&ext, sym)?,
                env: env.clone(),
                boxes: loaded.boxes.clone(),
                image: None,
                rchart: None,
            })
        }
        None => None,
    };
    Ok(Target {
        name: loaded.name.clone(),
        parameters: record(&env, &o),
        ext,
        ext_env: env,
        ext_boxes: loaded.boxes,
        ccm,
        cross_check: None,
    })
}
