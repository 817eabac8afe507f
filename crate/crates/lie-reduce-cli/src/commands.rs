use crate::report::Check;
use lie_reduce::calculus::FnTable;
use lie_reduce::exec::{self, Mode};
use lie_reduce::expr::{Expr, Q};
use lie_reduce::lie::{
    commutation_relations, generator_families, is_symmetry, zk_equation, zk_pivot, VectorField,
};
use lie_reduce::linearize::{
    classify_family, default_grid, extract_cubic, linearizability_scan, psi, LinearizeError, Scan,
};
use lie_reduce::parser::{parse_rational, parse_with, print, print_rational, Names, ParseError};
use lie_reduce::reduction::catalog::solution_names;
use lie_reduce::reduction::{
    run_instance, sample_points, verify_implicit_solution, verify_pde_solution, verify_reduction,
    CaseSpec, Catalog, Outcome, Point, ReductionError, SolutionMode, Verdict,
};
use std::collections::BTreeMap;
use std::time::Instant;

/// Errors that end a run with exit status 2.
#[derive(Debug, thiserror::Error)]
pub enum UsageError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{text}\n{caret} {err}")]
    Parse {
        text: String,
        caret: String,
        err: ParseError,
    },
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

impl UsageError {
    fn parse(text: &str, err: ParseError) -> UsageError {
        let s = err.span();
        let caret = format!(
            "{}{}",
            " ".repeat(s.start),
            "^".repeat((s.end - s.start).max(1))
        );
        UsageError::Parse {
            text: text.to_string(),
            caret,
            err,
        }
    }
}

pub type Result<T> = std::result::Result<T, UsageError>;

pub struct Ctx {
    pub catalog: Catalog,
    pub timings: bool,
    pub mode: Mode,
}

impl Ctx {
    fn clock(&self) -> Option<Instant> {
        self.timings.then(Instant::now)
    }
}

fn elapsed(t: Option<Instant>) -> Option<std::time::Duration> {
    t.map(|t| t.elapsed())
}

pub fn verify_symmetries(ctx: &Ctx, only: Option<&str>) -> Result<Vec<Check>> {
    let (gens, comms) = match only {
        None => (true, true),
        Some("generators") => (true, false),
        Some("commutators") => (false, true),
        Some(o) => {
            return Err(UsageError::Usage(format!(
                "--only expects `generators` or `commutators`, got `{o}`"
            )))
        }
    };
    let mut out = Vec::new();
    if gens {
        let fams = generator_families();
        out.extend(exec::map(ctx.mode, &fams, |(name, v)| {
            let t = ctx.clock();
            let ok = is_symmetry(v, &zk_equation(), &zk_pivot()).unwrap_or(false);
            Check::new(
                format!("symmetry/{name}"),
                if ok { "Symmetry" } else { "NotSymmetry" },
                ok,
            )
            .input("generator", v.to_string())
            .input("equation", print(&zk_equation()))
            .timed(elapsed(t))
        }));
    }
    if comms {
        let rels = commutation_relations();
        out.extend(exec::map(ctx.mode, &rels, |r| {
            let t = ctx.clock();
            let ok = r.holds().unwrap_or(false);
            Check::new(
                format!("commutator/{}", r.id),
                if ok { "Holds" } else { "Fails" },
                ok,
            )
            .input("relation", r.text)
            .timed(elapsed(t))
        }));
    }
    Ok(out)
}

pub fn render_values(v: &BTreeMap<String, Q>) -> String {
    v.iter()
        .map(|(k, q)| format!("{k}={}", print_rational(q)))
        .collect::<Vec<_>>()
        .join(",")
}

fn case_id(prefix: &str, case: &str, values: &BTreeMap<String, Q>) -> String {
    if values.is_empty() {
        format!("{prefix}/{case}")
    } else {
        format!("{prefix}/{case}[{}]", render_values(values))
    }
}

fn bound_names(values: &BTreeMap<String, Q>) -> Names {
    let mut n = Names::default();
    for (k, v) in values {
        n = n.bind(k, Expr::num(v.clone()));
    }
    n
}

/// Parameter sets to run: the given values, or each catalog sample when a
/// numeric parameter is missing.
fn parameter_sets(spec: &CaseSpec, values: &BTreeMap<String, Q>) -> Vec<BTreeMap<String, Q>> {
    if !spec.needs_samples(values) {
        return vec![values.clone()];
    }
    spec.samples
        .iter()
        .map(|s| {
            let mut all = s.clone();
            all.extend(values.iter().map(|(k, v)| (k.clone(), v.clone())));
            all
        })
        .collect()
}

pub fn reduce(
    ctx: &Ctx,
    case: &str,
    values: &BTreeMap<String, Q>,
    target: Option<&str>,
) -> Result<Vec<Check>> {
    let spec = ctx.catalog.select(case, values)?;
    let sets = parameter_sets(spec, values);
    if sets.is_empty() {
        let p = spec.numeric.join(", ");
        return Err(UsageError::Usage(format!(
            "case {} needs a value for {p}",
            spec.name
        )));
    }
    let insts = sets
        .iter()
        .map(|v| spec.instantiate(v))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let targets = match target {
        Some(t) => Some(
            sets.iter()
                .map(|v| parse_with(t, &bound_names(v)).map_err(|e| UsageError::parse(t, e)))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let jobs: Vec<usize> = (0..insts.len()).collect();
    let results = exec::map(ctx.mode, &jobs, |&i| -> Result<Check> {
        let inst = &insts[i];
        let t = ctx.clock();
        let mut c = match &targets {
            Some(ts) => {
                let v = verify_reduction(inst, &ts[i])?;
                let passed = v.tag() == "Match";
                let c = Check::new("", v.tag(), passed).input("target", print(&ts[i]));
                match verdict_note(&v) {
                    Some(d) => c.detail(d),
                    None => c,
                }
            }
            None => {
                let r = run_instance(inst)?;
                let mut notes = Vec::new();
                notes.extend(verdict_note(&r.verdict));
                match &r.derived {
                    Some(Ok(ode)) => notes.push(format!("derived route: {}", print(ode))),
                    Some(Err(e)) => notes.push(format!("derived route: {e}")),
                    None => {}
                }
                if let Some(ok) = r.solution_ok {
                    notes.push(format!(
                        "solution {}",
                        if ok { "verified" } else { "does not verify" }
                    ));
                }
                let mut c = Check::new("", r.verdict.tag(), r.passed);
                if let Outcome::Reduced(e) = &inst.expected {
                    c = c.input("expected", print(e));
                }
                if notes.is_empty() {
                    c
                } else {
                    c.detail(notes.join("; "))
                }
            }
        };
        c.id = case_id("reduce", &spec.name, &inst.values);
        if let Some(z) = &inst.zeta {
            c = c.input("z", print(z));
        }
        if let Some(u) = &inst.ansatz {
            c = c.input("u", print(u));
        }
        let gens: Vec<String> = inst.generators.iter().map(VectorField::to_string).collect();
        c = c.input("generators", gens.join("; "));
        if !inst.values.is_empty() {
            c = c.input("parameters", render_values(&inst.values));
        }
        Ok(c.timed(elapsed(t)))
    });
    results.into_iter().collect()
}

fn verdict_note(v: &Verdict) -> Option<String> {
    let d = v.detail()?;
    Some(match v {
        Verdict::Match(_) => format!("factor {d}"),
        Verdict::Mismatch(_) => format!("residual witness {d}"),
        Verdict::Degenerate(_) => format!("condition {d} = 0"),
        Verdict::TransversalityFailure => d,
    })
}

/// Parses `--scan` text: `k0` for the default grid, `k0=1/9,0,1` for a list.
pub fn parse_scan(text: &str) -> Result<(String, Vec<Q>)> {
    let bad = || {
        UsageError::Usage(format!(
            "--scan expects NAME or NAME=v1,v2,..., got `{text}`"
        ))
    };
    match text.split_once('=') {
        None if !text.trim().is_empty() => Ok((text.trim().to_string(), default_grid())),
        None => Err(bad()),
        Some((name, vals)) => {
            let vs = vals
                .split(',')
                .map(|v| parse_rational(v.trim()).ok_or_else(bad))
                .collect::<Result<Vec<_>>>()?;
            Ok((name.trim().to_string(), vs))
        }
    }
}

enum Source<'a> {
    Case(&'a CaseSpec),
    Text(String),
}

fn source<'a>(ctx: &'a Ctx, arg: &str) -> Result<Source<'a>> {
    if let Ok(c) = ctx.catalog.select(arg, &BTreeMap::new()) {
        return Ok(Source::Case(c));
    }
    let path = std::path::Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|source| UsageError::Io {
            path: arg.into(),
            source,
        })?;
        return Ok(Source::Text(text.trim().to_string()));
    }
    Ok(Source::Text(arg.to_string()))
}

fn psi_check(id: String, ode: &Expr, symmetries: &[VectorField]) -> Check {
    let c = Check::new(id, "", true).input("ode", print(ode));
    let res = extract_cubic(ode).and_then(|cub| {
        let (p1, p2) = psi(&cub)?;
        let fam = classify_family(ode, symmetries)?;
        Ok((p1, p2, fam))
    });
    match res {
        Ok((p1, p2, fam)) => {
            let lin = lie_reduce::expr::is_zero(&p1).unwrap_or(false)
                && lie_reduce::expr::is_zero(&p2).unwrap_or(false);
            let mut c = c.detail(format!(
                "Psi1 = {}; Psi2 = {}; family {}",
                print(&p1),
                print(&p2),
                fam.tag()
            ));
            c.verdict = if lin {
                "Linearizable"
            } else {
                "NotLinearizable"
            }
            .into();
            c
        }
        Err(e) => {
            let mut c = c.detail(e.to_string());
            c.verdict = "ExtractionError".into();
            c.passed = false;
            c
        }
    }
}

fn scan_checks(prefix: &str, param: &str, scan: Scan, grid: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for e in scan.entries {
        let at = format!("{param}={}", print_rational(&e.value));
        let mut notes = vec![format!(
            "Psi1 = {}; Psi2 = {}",
            print(&e.psi.0),
            print(&e.psi.1)
        )];
        if !e.violations.is_empty() {
            notes.push(format!("sample violates {}", e.violations.join(", ")));
        }
        if let Some(w) = &e.witness {
            notes.push(format!(
                "witness Psi = ({:.6e}, {:.6e}) at {}",
                w.psi1,
                w.psi2,
                render_point(&w.point)
            ));
        }
        let verdict = if e.linearizable() {
            "Linearizable"
        } else {
            "NotLinearizable"
        };
        out.push(
            Check::new(format!("{prefix}[{at}]"), verdict, true)
                .input(param, print_rational(&e.value))
                .detail(notes.join("; ")),
        );
    }
    for (v, c) in scan.undefined {
        out.push(
            Check::new(
                format!("{prefix}[{param}={}]", print_rational(&v)),
                "Undefined",
                true,
            )
            .input(param, print_rational(&v))
            .detail(format!("reduced equation undefined: {c}")),
        );
    }
    let hits: Vec<String> = out
        .iter()
        .filter(|c| c.verdict == "Linearizable")
        .map(|c| c.inputs[param].clone())
        .collect();
    out.push(
        Check::new(format!("{prefix}/summary"), "Sampled", true)
            .input("grid", grid.to_string())
            .detail(format!(
                "sampling evidence over {grid} values: linearizable at {}",
                if hits.is_empty() {
                    "none".to_string()
                } else {
                    hits.join(", ")
                }
            )),
    );
    out
}

fn render_point(p: &BTreeMap<String, f64>) -> String {
    p.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn linearize(ctx: &Ctx, arg: &str, scan: Option<&str>) -> Result<Vec<Check>> {
    let scan = scan.map(parse_scan).transpose()?;
    match (source(ctx, arg)?, scan) {
        (Source::Case(c), None) => {
            let (ode, _) = c.reduced_ode(&BTreeMap::new())?.ok_or_else(|| {
                UsageError::Usage(format!("case {} has no reduced equation", c.name))
            })?;
            let syms = c.symmetry_fields(&BTreeMap::new())?;
            Ok(vec![psi_check(
                format!("linearize/{}", c.name),
                &ode,
                &syms,
            )])
        }
        (Source::Case(c), Some((param, grid))) => {
            let n = grid.len();
            let s = linearizability_scan(c, &param, &grid, ctx.mode).map_err(|e| match e {
                LinearizeError::Reduction(r) => UsageError::Reduction(r),
                e => UsageError::Usage(e.to_string()),
            })?;
            Ok(scan_checks(&format!("linearize/{}", c.name), &param, s, n))
        }
        (Source::Text(t), None) => {
            let ode = parse_with(&t, &Names::default()).map_err(|e| UsageError::parse(&t, e))?;
            Ok(vec![psi_check("linearize/ode".into(), &ode, &[])])
        }
        (Source::Text(t), Some((param, grid))) => {
            let odes = grid
                .iter()
                .map(|v| {
                    let names = Names::default().bind(&param, Expr::num(v.clone()));
                    parse_with(&t, &names).map_err(|e| UsageError::parse(&t, e))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out: Vec<Check> =
                exec::map(ctx.mode, &odes, |ode| psi_check(String::new(), ode, &[]));
            for (c, v) in out.iter_mut().zip(&grid) {
                let at = print_rational(v);
                c.id = format!("linearize/ode[{param}={at}]");
                c.inputs.insert(param.clone(), at);
            }
            let hits: Vec<String> = out
                .iter()
                .filter(|c| c.verdict == "Linearizable")
                .map(|c| c.inputs[&param].clone())
                .collect();
            out.push(
                Check::new(
                    "linearize/ode/summary",
                    "Sampled",
                    out.iter().all(|c| c.passed),
                )
                .detail(format!(
                    "sampling evidence over {} values: linearizable at {}",
                    grid.len(),
                    if hits.is_empty() {
                        "none".to_string()
                    } else {
                        hits.join(", ")
                    }
                )),
            );
            Ok(out)
        }
    }
}

pub const LAMBERT_SOLUTION: &str = "A/(2*(c3 + 2*t))*(1 + W(exp(-1 - 4*(B + x)/A)/A))";
pub const IMPLICIT_RELATION: &str =
    "w - (2 + c3*z*w)/(c3*z*W(-2*exp(-A/c3)*(2 + c3*z*w)/(c3*z))) - B";
pub const IMPLICIT_ODE: &str = "(4 + 2*c3*w*z)*w' + c3*z^2*w'^2 + z*(2 + c3*w*z)*w''";

fn pt(xs: &[(&str, f64)]) -> Point {
    xs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn verify_solutions(ctx: &Ctx, suite: &str, tol: f64, seed: u64) -> Result<Vec<Check>> {
    let (sym, num) = match suite {
        "symbolic" => (true, false),
        "numeric" => (false, true),
        "all" => (true, true),
        s => {
            return Err(UsageError::Usage(format!(
                "unknown suite `{s}`; expected symbolic, numeric or all"
            )))
        }
    };
    let fns = FnTable::new();
    let mut out = Vec::new();
    if sym {
        let names = solution_names(&Names::default());
        for (id, text) in [
            ("opaque-w", "alpha*(w(t) - x/(alpha*t + beta))"),
            ("zero", "0"),
            ("constant", "c1"),
            ("linear-in-x", "-x/(t + beta)"),
        ] {
            let t = ctx.clock();
            let u = parse_with(text, &names).expect("built-in solution parses");
            let r = verify_pde_solution(&u, &SolutionMode::Symbolic, &fns)?;
            out.push(
                Check::new(
                    format!("solution/{id}"),
                    if r.ok { "Solves" } else { "Residual" },
                    r.ok,
                )
                .input("u", print(&u))
                .detail(r.describe())
                .timed(elapsed(t)),
            );
        }
    }
    if num {
        let t = ctx.clock();
        let u = parse_with(LAMBERT_SOLUTION, &Names::default()).expect("built-in solution parses");
        let fixed = pt(&[("A", 1.0), ("B", 0.0), ("c3", 1.0)]);
        let points = sample_points(
            seed,
            20,
            &[("t", 0.0, 2.0), ("x", -1.0, 1.0), ("y", -1.0, 1.0)],
            &fixed,
        );
        let r = verify_pde_solution(&u, &SolutionMode::Numeric { points, tol }, &fns)?;
        out.push(
            Check::new(
                "solution/lambert-w",
                if r.ok { "Solves" } else { "Residual" },
                r.ok,
            )
            .input("u", print(&u))
            .input("parameters", "A=1,B=0,c3=1")
            .input(
                "sampling",
                format!("seed={seed},points=20,t in (0,2),x in (-1,1),y in (-1,1)"),
            )
            .input("tol", format!("{tol:e}"))
            .detail(r.describe())
            .timed(elapsed(t)),
        );
        let t = ctx.clock();
        let rel =
            parse_with(IMPLICIT_RELATION, &Names::default()).expect("built-in relation parses");
        let ode = parse_with(IMPLICIT_ODE, &Names::default()).expect("built-in equation parses");
        let zs = [2.0, -3.0, -5.0, -1.5];
        let r = verify_implicit_solution(
            &rel,
            &ode,
            &fixed,
            &zs,
            &[-3.0, -1.0, 0.5, 2.0, 5.0],
            tol.max(1e-8),
        )?;
        let pts: Vec<String> = r
            .points
            .iter()
            .map(|p| format!("w({})={:.11}", p.z, p.w))
            .collect();
        out.push(
            Check::new(
                "solution/implicit-lambert-w",
                if r.ok { "Solves" } else { "Residual" },
                r.ok,
            )
            .input("relation", print(&rel))
            .input("ode", print(&ode))
            .input("parameters", "A=1,B=0,c3=1")
            .input("tol", format!("{:e}", tol.max(1e-8)))
            .detail(format!(
                "max |residual| {:.3e} at {}",
                r.max_abs.unwrap_or(0.0),
                pts.join(", ")
            ))
            .timed(elapsed(t)),
        );
    }
    Ok(out)
}

pub fn describe_case(c: &CaseSpec) -> BTreeMap<&'static str, serde_json::Value> {
    use serde_json::json;
    let mut m = BTreeMap::new();
    m.insert("name", json!(c.name));
    m.insert("family", json!(c.family));
    m.insert("generators", json!(c.generators));
    m.insert("params", json!(c.params));
    m.insert("fixed", json!(render_values(&c.fixed)));
    m.insert("constraints", json!(c.constraints));
    m.insert("z", json!(c.z));
    m.insert("u", json!(c.u));
    let outcome = match &c.outcome {
        Some(Outcome::Reduced(s)) => json!({"reduced": s}),
        Some(Outcome::Degenerate(s)) => json!({"degenerate": s}),
        Some(Outcome::Transversality) => json!("transversality"),
        None => json!(null),
    };
    m.insert("outcome", outcome);
    m.insert(
        "samples",
        json!(c.samples.iter().map(render_values).collect::<Vec<_>>()),
    );
    m.insert(
        "symmetries",
        json!(c
            .symmetries
            .iter()
            .map(|(a, b)| format!("({a}, {b})"))
            .collect::<Vec<_>>()),
    );
    m.insert("corrects", json!(c.corrects));
    m.insert("notes", json!(c.notes));
    m
}
