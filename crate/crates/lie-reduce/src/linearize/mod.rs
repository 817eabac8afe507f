//! Lie's linearizability test for scalar second-order ODEs and the
//! classification of the reduced equations.

use crate::calculus::{diff, eval_f64, FnTable};
use crate::exec::{self, Mode};
use crate::expr::{collect, is_zero, normalize, simplify, Expr, ExprError, Node, Q};
use crate::lie::VectorField;
use crate::parser::print;
use crate::reduction::{proportional, verify_explicit_solution, CaseSpec, ReductionError};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinearizeError {
    #[error("degree {0} in w' exceeds 3")]
    DegreeTooHigh(u32),
    #[error("equation is not linear in w''")]
    NotLinearInSecondDerivative,
    #[error("coefficient of w'' vanishes")]
    VanishingLeadingCoefficient,
    #[error("a2 = 0 leaves a first-order equation")]
    DegenerateFamily,
    #[error("substitution has vanishing derivative")]
    SingularTransform,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

pub type Result<T> = std::result::Result<T, LinearizeError>;

fn wj(n: usize) -> Expr {
    Expr::ode_jet("w", "z", n)
}

fn zv() -> Expr {
    Expr::var("z")
}

/// `w'' + A w'^3 + B w'^2 + C w' + D = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicOde {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub d: Expr,
}

impl CubicOde {
    pub fn to_expr(&self) -> Expr {
        let p = wj(1);
        wj(2)
            + &self.a * Expr::powi(p.clone(), 3)
            + &self.b * Expr::powi(p.clone(), 2)
            + &self.c * &p
            + &self.d
    }
}

pub fn extract_cubic(ode: &Expr) -> Result<CubicOde> {
    let coeffs = collect(ode, &[wj(1), wj(2)])?;
    let mut lead = None;
    let mut parts: [Expr; 4] = std::array::from_fn(|_| Expr::zero());
    for (k, c) in &coeffs {
        if is_zero(c)? {
            continue;
        }
        match (k[0], k[1]) {
            (0, 1) => lead = Some(c.clone()),
            (_, 0) if k[0] > 3 => return Err(LinearizeError::DegreeTooHigh(k[0])),
            (i, 0) => parts[i as usize] = c.clone(),
            _ => return Err(LinearizeError::NotLinearInSecondDerivative),
        }
    }
    let lead = lead.ok_or(LinearizeError::VanishingLeadingCoefficient)?;
    let [d, c, b, a] = parts.map(|p| simplify(&(p / &lead)));
    Ok(CubicOde {
        a: a?,
        b: b?,
        c: c?,
        d: d?,
    })
}

/// The pair `(Psi_1, Psi_2)`; both vanish exactly for linearizable equations.
pub fn psi(c: &CubicOde) -> Result<(Expr, Expr)> {
    let (z, w) = (zv(), wj(0));
    let dz = |e: &Expr| diff(e, &z);
    let dw = |e: &Expr| diff(e, &w);
    let (a, b, cc, d) = (&c.a, &c.b, &c.c, &c.d);
    let three = Expr::int(3);
    let two = Expr::int(2);
    let p1 = &three * dz(&dz(a)) - &two * dz(&dw(b)) + dw(&dw(cc)) - &three * dz(&(cc * a))
        + &three * dw(&(d * a))
        + dz(&(b * b))
        + &three * a * dw(d)
        - b * dw(cc);
    let p2 = &three * dw(&dw(d)) - &two * dz(&dw(cc)) + dz(&dz(b)) - &three * dz(&(d * a))
        + &three * dw(&(d * b))
        - dw(&(cc * cc))
        - &three * d * dz(a)
        + cc * dz(b);
    Ok((simplify(&p1)?, simplify(&p2)?))
}

pub fn is_linearizable(c: &CubicOde) -> Result<bool> {
    let (p1, p2) = psi(c)?;
    Ok(is_zero(&p1)? && is_zero(&p2)?)
}

/// Numeric value of the Psi pair at a point where one of them is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub point: BTreeMap<String, f64>,
    pub psi1: f64,
    pub psi2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub value: Q,
    pub psi: (Expr, Expr),
    pub psi1_zero: bool,
    pub psi2_zero: bool,
    /// Catalog constraints the sample violates; the sample is still scanned.
    pub violations: Vec<String>,
    pub witness: Option<Witness>,
}

impl ScanEntry {
    pub fn linearizable(&self) -> bool {
        self.psi1_zero && self.psi2_zero
    }
}

const WITNESS_POINTS: [(f64, f64); 4] = [(1.3, 0.7), (2.1, -0.4), (0.6, 1.9), (3.7, 2.3)];

fn witness(p1: &Expr, p2: &Expr) -> Option<Witness> {
    let mut params = std::collections::BTreeSet::new();
    for e in [p1, p2] {
        e.walk(&mut |x| {
            if let Node::Param(n) = x.node() {
                params.insert(n.to_string());
            }
        });
    }
    let fns = FnTable::new();
    for (z, w) in WITNESS_POINTS {
        let mut point: BTreeMap<String, f64> = params.iter().map(|p| (p.clone(), 1.0)).collect();
        point.insert("z".into(), z);
        point.insert("w".into(), w);
        let (Ok(a), Ok(b)) = (eval_f64(p1, &point, &fns), eval_f64(p2, &point, &fns)) else {
            continue;
        };
        if a.is_finite() && b.is_finite() && (a != 0.0 || b != 0.0) {
            return Some(Witness {
                point,
                psi1: a,
                psi2: b,
            });
        }
    }
    None
}

/// Parameter values scanned when no grid is given. Includes the special
/// values named for the catalog families.
pub const DEFAULT_GRID: [(i64, i64); 13] = [
    (0, 1),
    (1, 1),
    (-1, 1),
    (2, 1),
    (-2, 1),
    (1, 2),
    (-1, 2),
    (1, 3),
    (2, 9),
    (3, 7),
    (1, 9),
    (-1, 15),
    (1, 21),
];

pub fn default_grid() -> Vec<Q> {
    DEFAULT_GRID
        .iter()
        .map(|&(p, q)| Q::new(p.into(), q.into()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub entries: Vec<ScanEntry>,
    /// Samples at which the reduced ODE is undefined, with the violated constraint.
    pub undefined: Vec<(Q, String)>,
}

impl Scan {
    /// Sample values at which the ODE is linearizable.
    pub fn linearizable_at(&self) -> Vec<Q> {
        self.entries
            .iter()
            .filter(|e| e.linearizable())
            .map(|e| e.value.clone())
            .collect()
    }
}

/// Runs the test on the reduced ODE of `case` for each value of `param`.
pub fn linearizability_scan(
    case: &CaseSpec,
    param: &str,
    samples: &[Q],
    mode: Mode,
) -> Result<Scan> {
    let results = exec::map(
        mode,
        samples,
        |v| -> Result<std::result::Result<ScanEntry, String>> {
            let values = BTreeMap::from([(param.to_string(), v.clone())]);
            let (ode, violations) = match case.reduced_ode(&values) {
                Ok(Some(r)) => r,
                Ok(None) => {
                    return Err(ReductionError::DegenerateReduction(format!(
                        "{} has no reduced equation",
                        case.name
                    ))
                    .into())
                }
                Err(ReductionError::ConstraintViolated(c)) => return Ok(Err(c)),
                Err(e) => return Err(e.into()),
            };
            let (p1, p2) = psi(&extract_cubic(&ode)?)?;
            let (z1, z2) = (is_zero(&p1)?, is_zero(&p2)?);
            let witness = if z1 && z2 { None } else { witness(&p1, &p2) };
            Ok(Ok(ScanEntry {
                value: v.clone(),
                psi: (p1, p2),
                psi1_zero: z1,
                psi2_zero: z2,
                violations,
                witness,
            }))
        },
    );
    let mut scan = Scan {
        entries: vec![],
        undefined: vec![],
    };
    for (v, r) in samples.iter().zip(results) {
        match r? {
            Ok(e) => scan.entries.push(e),
            Err(c) => scan.undefined.push((v.clone(), c)),
        }
    }
    Ok(scan)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `a1 w' + a2 z w'' = 0`.
    Linear(Q, Q),
    TypeA1,
    TypeA2,
    TypeB,
    OutsideFamily,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Linear(..) => "Linear",
            Family::TypeA1 => "TypeA1",
            Family::TypeA2 => "TypeA2",
            Family::TypeB => "TypeB",
            Family::OutsideFamily => "OutsideFamily",
        }
    }
}

fn constant(e: &Expr) -> Result<Option<Q>> {
    Ok(normalize(e)?.as_constant())
}

/// Exponent `m` when `e = beta * z^m` with constant `beta != 0`.
fn z_power(e: &Expr) -> Result<Option<Q>> {
    if is_zero(&diff(e, &wj(0)))? {
        constant(&(zv() * diff(e, &zv()) / e))
    } else {
        Ok(None)
    }
}

/// Polynomial in `z` and `w` with constant coefficients.
fn polynomial_zw(e: &Expr) -> Result<bool> {
    let cf = normalize(e)?;
    let moving = |a: &Expr| a.depends_on_name("z") || a.depends_on_name("w");
    if cf.den.vars().iter().any(|&v| moving(&cf.atoms[v as usize])) {
        return Ok(false);
    }
    Ok(cf.num.vars().iter().all(|&v| {
        let a = &cf.atoms[v as usize];
        !moving(a) || *a == zv() || *a == wj(0)
    }))
}

fn degree_in_w(e: &Expr) -> Result<Option<u32>> {
    let cs = collect(e, &[wj(0)])?;
    let mut top = None;
    for (k, c) in &cs {
        if c.depends_on_name("w") {
            return Ok(None);
        }
        if !is_zero(c)? {
            top = Some(top.map_or(k[0], |t: u32| t.max(k[0])));
        }
    }
    Ok(Some(top.unwrap_or(0)))
}

/// `Some((a1, a2))` when `ode` is a nonzero multiple of `a1 w' + a2 z w''`.
fn linear_family(ode: &Expr) -> Result<Option<(Q, Q)>> {
    let cs = collect(ode, &[wj(0), wj(1), wj(2)])?;
    let mut c1 = Expr::zero();
    let mut c2 = None;
    for (k, c) in &cs {
        if is_zero(c)? {
            continue;
        }
        match k.as_slice() {
            [0, 1, 0] => c1 = c.clone(),
            [0, 0, 1] => c2 = Some(c.clone()),
            _ => return Ok(None),
        }
    }
    let Some(c2) = c2 else { return Ok(None) };
    if c1.depends_on_name("w") || c2.depends_on_name("w") {
        return Ok(None);
    }
    let Some(q) = constant(&(zv() * c1 / c2))? else {
        return Ok(None);
    };
    Ok(Some((
        Q::from_integer(q.numer().clone()),
        Q::from_integer(q.denom().clone()),
    )))
}

/// Places `ode` among the linear equations `a1 w' + a2 z w'' = 0`, the
/// Type A and Type B members of the reduced-equation family, or outside it.
/// The equation is taken up to a factor `z^k`; the A1/A2 split counts
/// `symmetries`.
pub fn classify_family(ode: &Expr, symmetries: &[VectorField]) -> Result<Family> {
    if let Some((a1, a2)) = linear_family(ode)? {
        return Ok(Family::Linear(a1, a2));
    }
    let cs = collect(ode, &[wj(1), wj(2)])?;
    let mut parts: [Expr; 4] = std::array::from_fn(|_| Expr::zero());
    for (k, c) in &cs {
        if is_zero(c)? {
            continue;
        }
        match (k[0], k[1]) {
            (0, 0) => parts[0] = c.clone(),
            (1, 0) => parts[1] = c.clone(),
            (2, 0) => parts[2] = c.clone(),
            (0, 1) => parts[3] = c.clone(),
            _ => return Ok(Family::OutsideFamily),
        }
    }
    let degs: Vec<Option<u32>> = parts.iter().map(degree_in_w).collect::<Result<_>>()?;
    let max_deg = [2, 1, 0, 1];
    if degs
        .iter()
        .zip(max_deg)
        .any(|(d, m)| d.is_none_or(|d| d > m))
    {
        return Ok(Family::OutsideFamily);
    }
    let [a1, _, a3, _] = &parts;
    let shift = if !is_zero(a3)? {
        z_power(a3)?.map(|m| Q::from_integer(2.into()) - m)
    } else if !is_zero(a1)? {
        let quad = is_zero(&(wj(0) * diff(a1, &wj(0)) - Expr::int(2) * a1))?;
        let m = if quad {
            z_power(&(a1 / Expr::powi(wj(0), 2)))?
        } else {
            None
        };
        m.map(|m| -m)
    } else {
        Some(Q::zero())
    };
    let type_a = match shift {
        None => false,
        Some(k) => {
            let scale = Expr::pow(zv(), k);
            let scaled: Vec<Expr> = parts
                .iter()
                .map(|p| simplify(&(p * &scale)))
                .collect::<std::result::Result<_, _>>()?;
            let a1_ok =
                is_zero(&scaled[0])? || constant(&(&scaled[0] / Expr::powi(wj(0), 2)))?.is_some();
            let a3_ok = is_zero(&scaled[2])?
                || constant(&(&scaled[2] / Expr::powi(zv(), 2)))?.is_some_and(|b| !b.is_zero());
            let mut poly = true;
            for p in &scaled {
                poly &= polynomial_zw(p)?;
            }
            a1_ok && a3_ok && poly
        }
    };
    Ok(match (type_a, symmetries.len()) {
        (false, _) => Family::TypeB,
        (true, 0 | 1) => Family::TypeA1,
        (true, _) => Family::TypeA2,
    })
}

/// General solution of `a1 w' + a2 z w'' = 0`, checked by substitution.
pub fn solve_linear_family(a1: &Q, a2: &Q) -> Result<Expr> {
    if a2.is_zero() {
        return Err(LinearizeError::DegenerateFamily);
    }
    let (c1, c2) = (Expr::param("C1"), Expr::param("C2"));
    let sol = if a1 == a2 {
        c1 + c2 * Expr::ln(zv())
    } else {
        let e = Q::one() - a1 / a2;
        c1 + c2 * Expr::pow(zv(), e)
    };
    let ode = Expr::num(a1.clone()) * wj(1) + Expr::num(a2.clone()) * zv() * wj(2);
    let check = verify_explicit_solution(&sol, &ode, "w", "z")?;
    debug_assert!(check.ok, "{} does not solve the linear family", print(&sol));
    Ok(sol)
}

/// Whether `Z = f(w)` turns `ode` into a multiple of `target` (an
/// expression in `z, Z, Z', Z''`; `Z''` when `None`).
pub fn verify_linearizing_substitution(
    ode: &Expr,
    f: &Expr,
    target: Option<&Expr>,
) -> Result<bool> {
    let w = wj(0);
    let f1 = diff(f, &w);
    if is_zero(&f1)? {
        return Err(LinearizeError::SingularTransform);
    }
    let f2 = diff(&f1, &w);
    let big = |n| Expr::ode_jet("Z", "z", n);
    let zp = &f1 * wj(1);
    let zpp = &f2 * Expr::powi(wj(1), 2) + &f1 * wj(2);
    let target = target.cloned().unwrap_or_else(|| big(2));
    let t = target
        .subs1(&big(2), &zpp)
        .subs1(&big(1), &zp)
        .subs1(&big(0), f);
    Ok(proportional(ode, &t, &[wj(1), wj(2)])?.is_some())
}

#[cfg(test)]
mod tests;
