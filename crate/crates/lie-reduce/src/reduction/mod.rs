//! Similarity reductions of the ZK equation to ODEs, transforms of the
//! reduced equations and solution checks.

pub mod catalog;
mod solution;
mod transform;

pub use catalog::{CaseSpec, Catalog, Outcome};
pub use solution::{
    numeric_residual, sample_points, verify_explicit_solution, verify_implicit_solution,
    verify_pde_solution, CurvePoint, ImplicitReport, Mode as SolutionMode, Point, SolutionReport,
};
pub use transform::{change_variables, reduce_order, verify_ode_symmetry, Transform};

use crate::calculus::{diff, CalcError};
use crate::expr::poly::Mono;
use crate::expr::{
    canonical, collect, is_zero, normalize, normalize_partial, simplify, Expr, ExprError, Node, Q,
};
use crate::lie::{LieError, VectorField};
use crate::parser::{print, ParseError};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("constraint `{0}` violated")]
    ConstraintViolated(String),
    #[error("case `{case}` needs a numeric value for `{param}`")]
    MissingParameter { case: String, param: String },
    #[error("`{0}` is not a parameter of this case")]
    UnknownParameter(String),
    #[error("residual still depends on {0}")]
    ResidualNotReducible(String),
    #[error("reduction degenerates to the condition {0} = 0")]
    DegenerateReduction(String),
    #[error("invariants cannot be solved for u")]
    TransversalityFailure,
    #[error("case has no inverse map")]
    NoInverse,
    #[error("transform is singular")]
    SingularTransform,
    #[error("cannot invert transform: {0}")]
    InversionFailure(String),
    #[error("{0} is not an invariant of the prolonged field")]
    NotInvariant(String),
    #[error("implicit relation is singular at the sample points")]
    ImplicitSingular,
    #[error("catalog line {line}: {msg}")]
    Catalog { line: usize, msg: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

pub type Result<T> = std::result::Result<T, ReductionError>;

/// Outcome of checking a computed reduction against an expectation.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Residual equals `factor * target`.
    Match(Expr),
    Mismatch(Expr),
    Degenerate(Expr),
    TransversalityFailure,
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Match(_) => "Match",
            Verdict::Mismatch(_) => "Mismatch",
            Verdict::Degenerate(_) => "Degenerate",
            Verdict::TransversalityFailure => "TransversalityFailure",
        }
    }

    /// Factor, residual or condition, rendered.
    pub fn detail(&self) -> Option<String> {
        match self {
            Verdict::Match(e) | Verdict::Mismatch(e) | Verdict::Degenerate(e) => Some(print(e)),
            Verdict::TransversalityFailure => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.detail() {
            Some(d) => write!(f, "{}({d})", self.tag()),
            None => f.write_str(self.tag()),
        }
    }
}

/// `u_xt - (u u_x)_x - u_yy` for an explicit `u(t, x, y)`.
pub fn zk_operator(u: &Expr) -> Expr {
    let (t, x, y) = (Expr::var("t"), Expr::var("x"), Expr::var("y"));
    let ux = diff(u, &x);
    let uy = diff(u, &y);
    diff(&ux, &t) - &ux * &ux - u * diff(&ux, &x) - diff(&uy, &y)
}

pub fn w_jets() -> [Expr; 3] {
    [0, 1, 2].map(|n| Expr::ode_jet("w", "z", n))
}

fn is_w_jet(e: &Expr) -> Option<usize> {
    match e.node() {
        Node::Jet(j) if &*j.dep == "w" => Some(j.order()),
        _ => None,
    }
}

/// Ansatz with the jet `w` replaced by the function `w(zeta)`.
pub fn compose_ansatz(ansatz: &Expr, zeta: &Expr) -> Expr {
    ansatz.replace(&mut |e| is_w_jet(e).map(|n| Expr::func("w", n as u32, zeta.clone())))
}

/// ZK residual of `u = ansatz(w(zeta))`, written with the jets `w, w', w''`
/// standing for `w^(n)(zeta)`.
pub fn pde_residual(zeta: &Expr, ansatz: &Expr) -> Expr {
    let r = zk_operator(&compose_ansatz(ansatz, zeta));
    r.replace(&mut |e| match e.node() {
        Node::Func { name, order, .. } if &**name == "w" => {
            Some(Expr::ode_jet("w", "z", *order as usize))
        }
        _ => None,
    })
}

/// `Some(mu)` when `a = mu * b` with `mu` free of `atoms`. Coefficients
/// are compared pairwise by cross-multiplication.
pub fn proportional(a: &Expr, b: &Expr, atoms: &[Expr]) -> Result<Option<Expr>> {
    Ok(match cross_check(a, b, atoms)? {
        Cross::Proportional(mu) => Some(mu),
        _ => None,
    })
}

enum Cross {
    Proportional(Expr),
    /// Keys differ, or the first key whose cross difference is nonzero.
    Differs(Option<Vec<u32>>),
}

fn cross_check(a: &Expr, b: &Expr, atoms: &[Expr]) -> Result<Cross> {
    let nonzero = |m: BTreeMap<Vec<u32>, Expr>| -> Result<BTreeMap<Vec<u32>, Expr>> {
        let mut out = BTreeMap::new();
        for (k, c) in m {
            if !is_zero(&c)? {
                out.insert(k, c);
            }
        }
        Ok(out)
    };
    let ca = nonzero(collect(a, atoms)?)?;
    let cb = nonzero(collect(b, atoms)?)?;
    if ca.len() != cb.len() || ca.keys().zip(cb.keys()).any(|(x, y)| x != y) {
        return Ok(Cross::Differs(None));
    }
    let Some((k0, a0)) = ca.iter().next() else {
        return Ok(Cross::Proportional(Expr::one()));
    };
    let b0 = &cb[k0];
    for (k, c) in ca.iter().skip(1) {
        if !is_zero(&(c * b0 - a0 * &cb[k]))? {
            return Ok(Cross::Differs(Some(k.clone())));
        }
    }
    Ok(Cross::Proportional(simplify(&(a0 / b0))?))
}

fn mentions_derivative(e: &Expr) -> bool {
    e.any(&|x| is_w_jet(x).is_some_and(|n| n > 0))
}

/// Numerator of `e` scaled to a positive leading coefficient with unit content.
pub fn primitive_numerator(e: &Expr) -> Result<Expr> {
    let cf = normalize_partial(e)?;
    if cf.num.is_zero() {
        return Ok(Expr::zero());
    }
    let (_, p) = cf.num.primitive();
    Ok(cf.poly_expr(&p))
}

/// Whether the transversality condition holds for the generator pair:
/// the `(t, x, y)` parts have the same rank as the full fields.
pub fn transversal(gens: &[VectorField]) -> Result<bool> {
    let rank = |rows: Vec<Vec<Expr>>| -> Result<usize> {
        let nonzero_row = rows
            .iter()
            .flatten()
            .any(|e| !matches!(is_zero(e), Ok(true)));
        if !nonzero_row {
            return Ok(0);
        }
        if rows.len() < 2 {
            return Ok(1);
        }
        let n = rows[0].len();
        for i in 0..n {
            for j in i + 1..n {
                let m = &rows[0][i] * &rows[1][j] - &rows[0][j] * &rows[1][i];
                if !is_zero(&m)? {
                    return Ok(2);
                }
            }
        }
        Ok(1)
    };
    let xi: Vec<Vec<Expr>> = gens.iter().map(|g| g.xi.clone()).collect();
    let full: Vec<Vec<Expr>> = gens.iter().map(|g| g.components()).collect();
    Ok(rank(xi)? == rank(full)?)
}

/// For each generator: is `zeta` invariant and is the graph of the ansatz
/// an invariant surface?
pub fn ansatz_invariance(gens: &[VectorField], zeta: &Expr, ansatz: &Expr) -> Result<Vec<bool>> {
    let u = Expr::jet("u", &[]);
    let mut out = Vec::new();
    for g in gens {
        let dz = g.apply(zeta);
        let mut surface = g.phi.subs1(&u, ansatz);
        for (v, xi) in g.vars.iter().zip(&g.xi) {
            surface = surface - xi * diff(ansatz, &Expr::var(v));
        }
        out.push(is_zero(&dz)? && is_zero(&surface)?);
    }
    Ok(out)
}

/// A catalog case with its parameters fixed and its expressions parsed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub case: String,
    pub values: BTreeMap<String, Q>,
    pub generators: Vec<VectorField>,
    pub zeta: Option<Expr>,
    pub ansatz: Option<Expr>,
    /// Base variable and its expression through `z` and the other base variables.
    pub inverse: Option<(String, Expr)>,
    pub expected: Outcome<Expr>,
    pub solution: Option<Expr>,
}

impl Instance {
    pub fn residual(&self) -> Option<Expr> {
        Some(pde_residual(self.zeta.as_ref()?, self.ansatz.as_ref()?))
    }
}

/// Divides `e`, a polynomial in `jets` (lowest order first), by the
/// coefficient of its highest monomial and checks that nothing depending on
/// `base` survives. Returns the numerator of the result.
pub fn eliminate(e: &Expr, jets: &[Expr], base: &[&str]) -> Result<Expr> {
    let coeffs = collect(e, jets)?;
    let Some(lead_key) = coeffs
        .keys()
        .max_by(|a, b| a.iter().rev().cmp(b.iter().rev()))
        .cloned()
    else {
        return Ok(Expr::zero());
    };
    let lead = coeffs[&lead_key].clone();
    let mut terms = Vec::new();
    for (k, c) in &coeffs {
        let ratio = normalize(&(c / &lead))?;
        let stray: Vec<String> = ratio
            .support()
            .iter()
            .filter(|a| base.iter().any(|v| a.depends_on_name(v)))
            .map(print)
            .collect();
        if !stray.is_empty() {
            return Err(ReductionError::ResidualNotReducible(stray.join(", ")));
        }
        let mut fs = vec![ratio.to_expr()];
        for (a, &e) in jets.iter().zip(k) {
            fs.push(Expr::powi(a.clone(), e as i64));
        }
        terms.push(Expr::mul(fs));
    }
    clean_ode(&Expr::add(terms))
}

/// Numerator of `e` with constant content and monomial factors free of jets
/// removed, positive leading coefficient.
pub fn clean_ode(e: &Expr) -> Result<Expr> {
    let cf = normalize(e)?;
    if cf.num.is_zero() {
        return Ok(Expr::zero());
    }
    let g = cf.num.gcd_monomial_content();
    let keep = Mono(
        g.0.iter()
            .filter(|(v, _)| !matches!(cf.atoms[*v as usize].node(), Node::Jet(_)))
            .cloned()
            .collect(),
    );
    let (_, p) = cf.num.div_mono(&keep).primitive();
    Ok(cf.poly_expr(&p))
}

/// Substitutes the ansatz into the ZK equation, eliminates the base variable
/// with the inverse map and returns the reduced ODE, scaled so that the
/// coefficient of its highest derivative has leading coefficient 1.
pub fn reduce(inst: &Instance) -> Result<Expr> {
    if !inst.generators.is_empty() && !transversal(&inst.generators)? {
        return Err(ReductionError::TransversalityFailure);
    }
    let r = inst
        .residual()
        .ok_or(ReductionError::TransversalityFailure)?;
    if !mentions_derivative(&r) {
        return Err(ReductionError::DegenerateReduction(print(
            &primitive_numerator(&r)?,
        )));
    }
    let (var, inv) = inst.inverse.as_ref().ok_or(ReductionError::NoInverse)?;
    let zeta = inst.zeta.as_ref().expect("residual needs zeta");
    let var = Expr::var(var);
    let z = Expr::var("z");
    let r = if is_zero(&(zeta.subs1(&var, inv) - &z))? {
        r
    } else if is_zero(&(flip_half_powers(zeta).subs1(&var, inv) - &z))? {
        flip_half_powers(&r)
    } else {
        return Err(ReductionError::InversionFailure(format!(
            "{} = {} does not invert z",
            print(&var),
            print(inv)
        )));
    };
    let ode = eliminate(&r.subs1(&var, inv), &w_jets(), &["t", "x", "y"])?;
    scale_by_leading(&ode)
}

/// Takes the other branch of every square root: `b^(k/2) -> -b^(k/2)` for
/// odd `k`.
fn flip_half_powers(e: &Expr) -> Expr {
    e.replace(&mut |x| match x.node() {
        Node::Pow(b, p) if *p.denom() == 2.into() => {
            Some(-Expr::pow(flip_half_powers(b), p.clone()))
        }
        _ => None,
    })
}

/// Divides `ode` by the leading numeric coefficient of the coefficient of its
/// highest derivative monomial.
pub fn scale_by_leading(ode: &Expr) -> Result<Expr> {
    let jets = w_jets();
    let coeffs = collect(ode, &jets)?;
    let Some(k) = coeffs.keys().max_by_key(|k| (k[2], k[1], k[0])) else {
        return Ok(Expr::zero());
    };
    let c = normalize(&coeffs[k])?;
    let lc = c
        .num
        .lead()
        .map(|(_, v)| v.clone())
        .unwrap_or_else(|| Q::from_integer(1.into()));
    let scale = Expr::num(lc.recip());
    Ok(simplify(&(ode * scale))?)
}

/// Checks the reduction of `inst` against `target`, an ODE in `z, w, w', w''`.
pub fn verify_reduction(inst: &Instance, target: &Expr) -> Result<Verdict> {
    if !inst.generators.is_empty() && !transversal(&inst.generators)? {
        return Ok(Verdict::TransversalityFailure);
    }
    let (Some(zeta), Some(_)) = (&inst.zeta, &inst.ansatz) else {
        return Ok(Verdict::TransversalityFailure);
    };
    let r = inst.residual().expect("zeta and ansatz present");
    if !mentions_derivative(&r) {
        return Ok(Verdict::Degenerate(primitive_numerator(&r)?));
    }
    let t = target.subs1(&Expr::var("z"), zeta);
    let jets = w_jets();
    match cross_check(&r, &t, &jets)? {
        Cross::Proportional(mu) => Ok(Verdict::Match(mu)),
        Cross::Differs(key) => Ok(Verdict::Mismatch(mismatch_residual(&r, &t, &jets, key)?)),
    }
}

/// Witness for a failed match: the cross difference of the first
/// disagreeing coefficient against the first shared one, or the first
/// coefficient present on one side only.
fn mismatch_residual(r: &Expr, t: &Expr, jets: &[Expr], key: Option<Vec<u32>>) -> Result<Expr> {
    let cr = collect(r, jets)?;
    let ct = collect(t, jets)?;
    let mono = |k: &[u32]| {
        Expr::mul(
            jets.iter()
                .zip(k)
                .map(|(j, &e)| Expr::powi(j.clone(), e as i64))
                .collect(),
        )
    };
    let res = match key {
        Some(k) => {
            let mut k0 = &k;
            for (j, c) in &cr {
                if !is_zero(c)? {
                    k0 = j;
                    break;
                }
            }
            (&cr[&k] * &ct[k0] - &cr[k0] * &ct[&k]) * mono(&k)
        }
        None => {
            let mut lone = None;
            for (k, c) in cr
                .iter()
                .filter(|(k, _)| !ct.contains_key(*k))
                .chain(ct.iter().filter(|(k, _)| !cr.contains_key(*k)))
            {
                if !is_zero(c)? {
                    lone = Some(c * mono(k));
                    break;
                }
            }
            lone.unwrap_or_else(|| r - t)
        }
    };
    primitive_numerator(&res)
}

/// Whether two degenerate conditions agree up to a nonzero constant.
pub fn same_condition(a: &Expr, b: &Expr) -> Result<bool> {
    if is_zero(b)? {
        return Ok(is_zero(a)?);
    }
    let ratio = normalize(&(a / b))?;
    Ok(!ratio.is_zero()
        && ratio
            .support()
            .iter()
            .all(|e| matches!(e.node(), Node::Param(_))))
}

/// Outcome of running one catalog instance through both routes.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub case: String,
    pub values: BTreeMap<String, Q>,
    pub verdict: Verdict,
    /// Reduced ODE from the inverse-map route, when the case has one.
    pub derived: Option<std::result::Result<Expr, String>>,
    /// Generators annihilate `z` and the ansatz surface.
    pub invariant: Option<bool>,
    /// Catalog solution satisfies the ZK equation.
    pub solution_ok: Option<bool>,
    pub passed: bool,
}

pub fn run_instance(inst: &Instance) -> Result<CaseResult> {
    let target = match &inst.expected {
        Outcome::Reduced(t) => t.clone(),
        _ => Expr::zero(),
    };
    let verdict = verify_reduction(inst, &target)?;
    let invariant = match (&inst.zeta, &inst.ansatz) {
        (Some(z), Some(a)) if !inst.generators.is_empty() => Some(
            ansatz_invariance(&inst.generators, z, a)?
                .into_iter()
                .all(|b| b),
        ),
        _ => None,
    };
    let derived = if inst.inverse.is_some() && matches!(inst.expected, Outcome::Reduced(_)) {
        Some(reduce(inst).map_err(|e| e.to_string()))
    } else {
        None
    };
    let solution_ok = match &inst.solution {
        Some(s) => Some(is_zero(&zk_operator(s))?),
        None => None,
    };
    let mut passed = match (&inst.expected, &verdict) {
        (Outcome::Reduced(_), Verdict::Match(_)) => true,
        (Outcome::Degenerate(c), Verdict::Degenerate(d)) => same_condition(d, c)?,
        (Outcome::Transversality, Verdict::TransversalityFailure) => true,
        _ => false,
    };
    if let Some(d) = &derived {
        passed &= match d {
            Ok(ode) => proportional(ode, &target, &w_jets())?.is_some(),
            Err(_) => false,
        };
    }
    passed &= solution_ok != Some(false);
    Ok(CaseResult {
        case: inst.case.clone(),
        values: inst.values.clone(),
        verdict,
        derived,
        invariant,
        solution_ok,
        passed,
    })
}

/// Whether a rational is zero; helper for constraint checks.
pub(crate) fn vanishes(e: &Expr) -> Result<bool> {
    Ok(canonical::normalize(e)?
        .as_constant()
        .is_some_and(|c| c.is_zero())
        || is_zero(e)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn inst(zeta: &str, ansatz: &str, inverse: Option<(&str, &str)>) -> Instance {
        Instance {
            case: "t".into(),
            values: BTreeMap::new(),
            generators: vec![],
            zeta: Some(p(zeta)),
            ansatz: Some(p(ansatz)),
            inverse: inverse.map(|(v, e)| (v.to_string(), p(e))),
            expected: Outcome::Transversality,
            solution: None,
        }
    }

    #[test]
    fn l211() {
        let i = inst("t", "x*w", Some(("t", "z")));
        assert_eq!(verify_reduction(&i, &p("w^2 - w'")).unwrap().tag(), "Match");
        let r = reduce(&i).unwrap();
        assert!(is_zero(&(r - p("w' - w^2"))).unwrap());
    }

    #[test]
    fn l27_symbolic() {
        let i = inst(
            "x*(c3 + k0*t)",
            "w/(c3 + k0*t)^2",
            Some(("x", "z/(c3 + k0*t)")),
        );
        let t = p("k0*w' + w'^2 + (w - z*k0)*w''");
        assert_eq!(verify_reduction(&i, &t).unwrap().tag(), "Match");
        let r = reduce(&i).unwrap();
        assert!(proportional(&r, &t, &w_jets()).unwrap().is_some());
    }

    #[test]
    fn l21() {
        let i = inst("y^2/x", "x*w", Some(("x", "y^2/z")));
        let t = p("-w^2 + 2*(w*z - 1)*w' - z^2*w'^2 - (4*z + w*z^2)*w''");
        assert_eq!(verify_reduction(&i, &t).unwrap().tag(), "Match");
        assert!(proportional(&reduce(&i).unwrap(), &t, &w_jets())
            .unwrap()
            .is_some());
        let bad = p("-w^2 + 2*(w*z - 1)*w' + z^2*w'^2 - (4*z + w*z^2)*w''");
        assert_eq!(verify_reduction(&i, &bad).unwrap().tag(), "Mismatch");
    }

    #[test]
    fn degenerate_l24() {
        let i = inst("t", "(w - y^2)*h''(t)/(4*h(t))", None);
        match verify_reduction(&i, &Expr::zero()).unwrap() {
            Verdict::Degenerate(c) => assert!(same_condition(&c, &p("h''(t)")).unwrap()),
            v => panic!("{v}"),
        }
    }
}
