mod commands;
mod report;

use clap::{Parser, Subcommand};
use commands::{Ctx, UsageError};
use lie_reduce::exec::{self, Mode};
use lie_reduce::parser::parse_rational;
use lie_reduce::reduction::{catalog::EMBEDDED, Catalog};
use report::Report;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "lie-reduce",
    version,
    about = "Symmetry reductions of the Zabolotskaya-Khokhlov equation"
)]
struct Cli {
    /// Emit the JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Catalog file; defaults to $LIE_REDUCE_CATALOG, then the built-in catalog.
    #[arg(long, global = true, value_name = "PATH")]
    catalog: Option<PathBuf>,
    /// Record wall time per check (makes output nondeterministic).
    #[arg(long, global = true)]
    timings: bool,
    /// Run checks one at a time.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check the generator families and the commutator table.
    VerifySymmetries {
        /// `generators` or `commutators`.
        #[arg(long)]
        only: Option<String>,
    },
    /// Reduce a catalog case. Parameters are given as `--k0 1/2`.
    Reduce {
        case: String,
        /// Reduced ODE to compare against instead of the catalog's.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
    },
    /// Linearizability test for an ODE (inline, file, or catalog case).
    Linearize {
        #[arg(allow_hyphen_values = true)]
        ode: String,
        /// `NAME` for the default grid or `NAME=v1,v2,...`.
        #[arg(long)]
        scan: Option<String>,
    },
    /// Check the built-in solutions of the ZK equation.
    VerifySolutions {
        /// `symbolic`, `numeric` or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Seed for the numeric sample points.
        #[arg(long, default_value_t = exec::DEFAULT_SEED)]
        seed: u64,
    },
    /// Inspect the reduction catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogCmd,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogCmd {
    List,
    Show { name: String },
}

const FLAGS: [&str; 12] = [
    "json",
    "catalog",
    "timings",
    "sequential",
    "target",
    "scan",
    "only",
    "suite",
    "tol",
    "seed",
    "help",
    "version",
];

/// Pulls `--name value` parameter pairs of the `reduce` verb out of argv.
fn split_params(
    args: Vec<String>,
) -> Result<(Vec<String>, BTreeMap<String, lie_reduce::expr::Q>), UsageError> {
    if !args.iter().any(|a| a == "reduce") {
        return Ok((args, BTreeMap::new()));
    }
    let mut rest = Vec::new();
    let mut params = BTreeMap::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if FLAGS.contains(&name.as_str()) || name.is_empty() {
            rest.push(a);
            continue;
        }
        let value = match inline.or_else(|| it.next()) {
            Some(v) => v,
            None => return Err(UsageError::Usage(format!("--{name} needs a value"))),
        };
        let q = parse_rational(&value).ok_or_else(|| {
            UsageError::Usage(format!(
                "--{name} expects a rational such as 1/9, got `{value}`"
            ))
        })?;
        params.insert(name, q);
    }
    Ok((rest, params))
}

fn load_catalog(path: Option<PathBuf>) -> Result<(Catalog, String), UsageError> {
    let path = path.or_else(|| std::env::var_os("LIE_REDUCE_CATALOG").map(PathBuf::from));
    let text = match &path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| UsageError::Io {
            path: p.display().to_string(),
            source,
        })?,
        None => EMBEDDED.to_string(),
    };
    let digest = Sha256::digest(text.as_bytes());
    let hex = digest
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    Ok((Catalog::parse(&text)?, hex))
}

/// Writes to stdout; a closed pipe ends the process quietly.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if out
        .write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .is_err()
    {
        std::process::exit(0);
    }
}

fn run() -> Result<bool, UsageError> {
    let (args, params) = split_params(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            e.print().ok();
            std::process::exit(if code == 0 { 0 } else { 2 });
        }
    };
    let (catalog, sha) = load_catalog(cli.catalog)?;
    let mode = if cli.sequential {
        Mode::Sequential
    } else {
        Mode::available()
    };
    let ctx = Ctx {
        catalog,
        timings: cli.timings,
        mode,
    };
    if !params.is_empty() && !matches!(cli.cmd, Cmd::Reduce { .. }) {
        return Err(UsageError::Usage(
            "parameter flags apply to `reduce` only".into(),
        ));
    }
    let (name, checks) = match &cli.cmd {
        Cmd::VerifySymmetries { only } => (
            "verify-symmetries",
            commands::verify_symmetries(&ctx, only.as_deref())?,
        ),
        Cmd::Reduce { case, target } => (
            "reduce",
            commands::reduce(&ctx, case, &params, target.as_deref())?,
        ),
        Cmd::Linearize { ode, scan } => (
            "linearize",
            commands::linearize(&ctx, ode, scan.as_deref())?,
        ),
        Cmd::VerifySolutions { suite, tol, seed } => (
            "verify-solutions",
            commands::verify_solutions(&ctx, suite, *tol, *seed)?,
        ),
        Cmd::Catalog { action } => {
            catalog_cmd(&ctx, action, cli.json)?;
            return Ok(true);
        }
    };
    let report = Report::new(name, sha, checks);
    if cli.json {
        emit(&format!("{}\n", report.to_json()));
    } else {
        emit(&report.to_text());
    }
    Ok(report.ok())
}

fn catalog_cmd(ctx: &Ctx, action: &CatalogCmd, json: bool) -> Result<(), UsageError> {
    match action {
        CatalogCmd::List => {
            let rows: Vec<_> = ctx
                .catalog
                .cases
                .iter()
                .map(commands::describe_case)
                .collect();
            if json {
                emit(&format!(
                    "{}\n",
                    serde_json::to_string_pretty(&rows).expect("catalog serializes")
                ));
            } else {
                for c in &ctx.catalog.cases {
                    let kind = match &c.outcome {
                        Some(lie_reduce::reduction::Outcome::Reduced(_)) => "reduced",
                        Some(lie_reduce::reduction::Outcome::Degenerate(_)) => "degenerate",
                        Some(lie_reduce::reduction::Outcome::Transversality) => "transversality",
                        None => "-",
                    };
                    emit(&format!(
                        "{:<18} {:<16} {}\n",
                        c.name,
                        kind,
                        c.generators.join("; ")
                    ));
                }
            }
        }
        CatalogCmd::Show { name } => {
            let c = ctx.catalog.select(name, &BTreeMap::new())?;
            let d = commands::describe_case(c);
            if json {
                emit(&format!(
                    "{}\n",
                    serde_json::to_string_pretty(&d).expect("case serializes")
                ));
            } else {
                for (k, v) in d {
                    match v {
                        serde_json::Value::Null => {}
                        serde_json::Value::String(s) if s.is_empty() => {}
                        serde_json::Value::Array(a) if a.is_empty() => {}
                        serde_json::Value::String(s) => emit(&format!("{k}: {s}\n")),
                        serde_json::Value::Array(a) => {
                            let items: Vec<String> = a
                                .iter()
                                .map(|v| v.as_str().map_or(v.to_string(), String::from))
                                .collect();
                            emit(&format!("{k}: {}\n", items.join("; ")));
                        }
                        serde_json::Value::Object(o) => {
                            for (kind, v) in o {
                                emit(&format!(
                                    "{k}: {kind}: {}\n",
                                    v.as_str().unwrap_or_default()
                                ));
                            }
                        }
                        v => emit(&format!("{k}: {v}\n")),
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
