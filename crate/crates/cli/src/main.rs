use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hamext_core::catalog;
use hamext_core::extension::{g_recursion, mu_nu};
use hamext_core::par::Execution;
use hamext_core::symexpr::{rational_to_f64, Poly, Rational};

mod checks;
mod params;
mod report;
mod sysfile;
mod target;

use report::{Check, Listing, Rendered, Report, SCHEMA_VERSION};
use target::{Request, Target};

#[derive(Parser)]
#[command(
    name = "hamext",
    version,
    about = "Extended Hamiltonians, coupling-constant metamorphosis and first-integral checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in systems and their default parameters.
    Catalog {
        #[arg(long, value_enum, default_value_t = Output::Text)]
        format: Output,
    },
    /// Build the extended Hamiltonian H and its first integral K.
    Extend {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        format: Output,
    },
    /// Apply coupling-constant metamorphosis to an extension.
    Ccm {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        format: Output,
    },
    /// Check brackets, degrees and identifications; exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        verify: VerifyArgs,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        format: Output,
    },
    /// Print one object: L, G<k>, H, K, Hhat, Htilde, Ktilde or Wtilde.
    Show {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value = "H")]
        what: String,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        format: Output,
    },
}

#[derive(Args)]
struct SystemArgs {
    /// Catalog entry; ignored when --file is given.
    #[arg(long, default_value = "ttw")]
    system: String,
    /// TOML system file.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    n: Option<u32>,
    /// Fix a parameter, e.g. `--param c2=1/3`; repeatable. The energy `E`
    /// is bound numerically rather than substituted.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = params::parse_assignment)]
    params: Vec<(String, Rational)>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Sample points per bracket check.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Threshold on the normalized bracket residual.
    #[arg(long, default_value_t = hamext_core::verify::DEFAULT_THRESHOLD)]
    tol: f64,
    /// Run the sampling sequentially.
    #[arg(long)]
    serial: bool,
    /// Also integrate the flow and report the drift of H, L and K.
    #[arg(long)]
    drift: bool,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Latex,
    #[value(name = "json-report", alias = "json")]
    JsonReport,
}

impl SystemArgs {
    fn request(&self) -> Request<'_> {
        Request {
            system: &self.system,
            file: self.file.as_deref(),
            m: self.m,
            n: self.n,
            params: &self.params,
        }
    }

    fn label(&self) -> String {
        match &self.file {
            Some(p) => p.display().to_string(),
            None => self.system.clone(),
        }
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn out(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means a check failed.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Catalog { format } => {
            print_catalog(format)?;
            Ok(true)
        }
        Command::Extend { system, format } => {
            let t = target::build(&system.request())?;
            let mut l = listing(&t);
            let k = t.ext.first_integral()?;
            l.notes.push(format!(
                "momentum degree of K: {}",
                t.ext.momentum_degree(k).map_or("none".into(), |d| d.to_string())
            ));
            for what in ["L", "G1", "H", "K"] {
                l.expressions.extend(objects(&t, what)?);
            }
            emit(&l, format)?;
            Ok(true)
        }
        Command::Ccm { system, format } => {
            let t = target::build(&system.request())?;
            t.require_ccm()?;
            let mut l = listing(&t);
            for what in ["Hhat", "Htilde", "Wtilde", "Ktilde"] {
                l.expressions.extend(objects(&t, what)?);
            }
            emit(&l, format)?;
            Ok(true)
        }
        Command::Show { system, what, format } => {
            let t = target::build(&system.request())?;
            let mut l = listing(&t);
            l.expressions = objects(&t, &what)?;
            emit(&l, format)?;
            Ok(true)
        }
        Command::Verify { system, verify, format } => verify_command(&system, &verify, format),
    }
}

fn listing(t: &Target) -> Listing {
    Listing {
        schema_version: SCHEMA_VERSION,
        system: t.name.clone(),
        m: t.m(),
        n: t.n(),
        mu: t.ext.mu(),
        nu: t.ext.nu(),
        notes: vec![format!(
            "{}: (m, n) = ({}, {}), (mu, nu) = ({}, {})",
            t.name,
            t.m(),
            t.n(),
            t.ext.mu(),
            t.ext.nu()
        )],
        expressions: Vec::new(),
    }
}

fn emit(l: &Listing, format: Output) -> Result<()> {
    match format {
        Output::JsonReport => out(&json(l)?)?,
        Output::Text => out(&l.to_text(false))?,
        Output::Latex => out(&l.to_text(true))?,
    }
    Ok(())
}

/// The named object, followed by its images in the reference charts.
fn objects(t: &Target, what: &str) -> Result<Vec<Rendered>> {
    let ext = &t.ext;
    let one = |p: &Poly| Ok(vec![Rendered::new(what, p)]);
    match what {
        "L" => one(ext.seed().l()),
        "H" => one(ext.h()),
        "K" => one(ext.first_integral()?),
        _ if what.starts_with('G') => {
            let k: u32 = what[1..]
                .parse()
                .map_err(|_| anyhow::anyhow!("`{what}`: expected G followed by a positive index"))?;
            one(&g_recursion(ext.seed(), k)?)
        }
        "Hhat" | "Htilde" | "Ktilde" | "Wtilde" => {
            let c = t.require_ccm()?;
            let sys = &c.sys;
            let items: Vec<(String, Poly)> = match what {
                "Hhat" => vec![(what.into(), sys.h_hat().clone())],
                "Htilde" => vec![(what.into(), sys.h_tilde().clone())],
                "Ktilde" => vec![(what.into(), sys.k_tilde()?.clone())],
                _ => {
                    let w = sys.wtilde();
                    vec![
                        ("Wtilde.a".into(), w.a.clone()),
                        ("Wtilde.b".into(), w.b.clone()),
                        ("Wtilde.e".into(), w.e.clone()),
                    ]
                }
            };
            let mut out = Vec::new();
            for (name, p) in &items {
                out.push(Rendered::new(name, p));
            }
            if let Some(rc) = &c.rchart {
                for (name, p) in &items {
                    if let Ok(img) = rc.transform(p) {
                        out.push(Rendered::new(&format!("{name} (r-chart)"), &img));
                    }
                }
            }
            if let Some(id) = &c.image {
                for (name, p) in &items {
                    out.push(Rendered::new(&format!("{name} (x, y)"), &id.map_poly(p)?));
                }
            }
            Ok(out)
        }
        other => bail!("unknown object `{other}`; expected L, G<k>, H, K, Hhat, Htilde, Ktilde or Wtilde"),
    }
}

fn print_catalog(format: Output) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Entry {
        id: &'static str,
        summary: &'static str,
        parameters: Vec<(&'static str, String, f64)>,
    }
    let entries: Vec<Entry> = catalog::entries()
        .into_iter()
        .map(|e| Entry {
            id: e.id,
            summary: e.summary,
            parameters: e
                .parameters
                .iter()
                .map(|(n, v): &(&'static str, Rational)| (*n, v.to_string(), rational_to_f64(v)))
                .collect(),
        })
        .collect();
    if format == Output::JsonReport {
        return out(&json(&entries)?);
    }
    let mut text = String::new();
    for e in entries {
        let defaults: Vec<String> = e.parameters.iter().map(|(n, v, _)| format!("{n} = {v}")).collect();
        text += &format!("{}: {}\n    defaults: {}\n", e.id, e.summary, defaults.join(", "));
    }
    out(&text)
}

fn verify_command(system: &SystemArgs, args: &VerifyArgs, format: Output) -> Result<bool> {
    let start = Instant::now();
    let opts = checks::Options {
        samples: args.samples.max(1),
        seed: args.seed,
        tol: args.tol,
        execution: if args.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        },
        drift: args.drift.then_some(args.t_end),
    };
    let report = match target::build(&system.request()) {
        Ok(t) => {
            let (checks, mut timings) = checks::run(&t, &opts);
            timings.insert("total".into(), start.elapsed().as_secs_f64() * 1e3);
            Report {
                schema_version: SCHEMA_VERSION,
                system: t.name.clone(),
                m: t.m(),
                n: t.n(),
                mu: t.ext.mu(),
                nu: t.ext.nu(),
                parameters: t.parameters.clone(),
                all_pass: checks.iter().all(|c| c.pass),
                checks,
                timings_ms: timings,
            }
        }
        // A seed that fails its defining identity still gets a report.
        Err(e) if matches!(e.downcast_ref(), Some(hamext_core::Error::SeedCondition(_))) => {
            let (m, n) = (system.m.unwrap_or(1), system.n.unwrap_or(1));
            let (mu, nu) = mu_nu(m, n)?;
            Report {
                schema_version: SCHEMA_VERSION,
                system: system.label(),
                m,
                n,
                mu,
                nu,
                parameters: Default::default(),
                checks: vec![Check::failed("seed", &e)],
                all_pass: false,
                timings_ms: [("total".to_string(), start.elapsed().as_secs_f64() * 1e3)].into(),
            }
        }
        Err(e) => return Err(e),
    };
    match format {
        Output::JsonReport => out(&json(&report)?)?,
        Output::Text | Output::Latex => out(&report.to_text())?,
    }
    Ok(report.all_pass)
}
