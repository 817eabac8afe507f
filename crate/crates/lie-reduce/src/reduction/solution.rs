use super::{zk_operator, ReductionError, Result};
use crate::calculus::{diff, eval_f64, eval_jet, CalcError, FnTable};
use crate::expr::{is_zero, simplify, Expr, Node};
use crate::parser::print;
use rand::Rng;
use std::collections::BTreeMap;

pub type Point = BTreeMap<String, f64>;

#[derive(Debug, Clone)]
pub enum Mode {
    Symbolic,
    /// Maximum of `|residual|` over `points` compared with `tol`.
    Numeric {
        points: Vec<Point>,
        tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub ok: bool,
    /// Simplified symbolic residual, when computed.
    pub residual: Option<Expr>,
    pub max_abs: Option<f64>,
    pub points: usize,
}

/// ZK residual of `u` at one point from its second-order Taylor jet.
/// `point` binds `t, x, y` and every parameter of `u`.
pub fn numeric_residual(u: &Expr, point: &Point, fns: &FnTable) -> Result<f64> {
    let j = eval_jet(u, &["t", "x", "y"], point, 2, fns)?;
    let ux = j.derivative(&["x"]);
    Ok(j.derivative(&["x", "t"])
        - ux * ux
        - j.value() * j.derivative(&["x", "x"])
        - j.derivative(&["y", "y"]))
}

pub fn verify_pde_solution(u: &Expr, mode: &Mode, fns: &FnTable) -> Result<SolutionReport> {
    match mode {
        Mode::Symbolic => {
            let r = simplify(&zk_operator(u))?;
            Ok(SolutionReport {
                ok: is_zero(&r)?,
                residual: Some(r),
                max_abs: None,
                points: 0,
            })
        }
        Mode::Numeric { points, tol } => {
            let mut worst: f64 = 0.0;
            for p in points {
                worst = worst.max(numeric_residual(u, p, fns)?.abs());
            }
            Ok(SolutionReport {
                ok: worst < *tol,
                residual: None,
                max_abs: Some(worst),
                points: points.len(),
            })
        }
    }
}

/// `n` points with each named coordinate drawn uniformly from its range,
/// merged over `fixed`.
pub fn sample_points(
    seed: u64,
    n: usize,
    ranges: &[(&str, f64, f64)],
    fixed: &Point,
) -> Vec<Point> {
    let mut rng = crate::exec::rng(seed);
    (0..n)
        .map(|_| {
            let mut p = fixed.clone();
            for (v, lo, hi) in ranges {
                p.insert(v.to_string(), rng.random_range(*lo..*hi));
            }
            p
        })
        .collect()
}

/// Checks that `w = q(z)` solves `ode`, with `dep` and `indep` naming the
/// unknown and its variable.
pub fn verify_explicit_solution(
    q: &Expr,
    ode: &Expr,
    dep: &str,
    indep: &str,
) -> Result<SolutionReport> {
    let mut e = ode.clone();
    let mut d = q.clone();
    let var = Expr::var(indep);
    for n in 0..=3 {
        e = e.subs1(&Expr::ode_jet(dep, indep, n), &d);
        d = diff(&d, &var);
    }
    let r = simplify(&e)?;
    Ok(SolutionReport {
        ok: is_zero(&r)?,
        residual: Some(r),
        max_abs: None,
        points: 0,
    })
}

/// One sampled point on an implicit solution curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub z: f64,
    pub w: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitReport {
    pub ok: bool,
    pub symbolic: bool,
    pub points: Vec<CurvePoint>,
    pub max_abs: Option<f64>,
}

/// ODE in `(z, w)` obtained by implicit differentiation of `relation = 0`.
fn implicit_residual(relation: &Expr, ode: &Expr) -> Result<Expr> {
    let z = Expr::var("z");
    let w = Expr::ode_jet("w", "z", 0);
    let gw = diff(relation, &w);
    if is_zero(&gw)? {
        return Err(ReductionError::ImplicitSingular);
    }
    let w1 = -(diff(relation, &z) / &gw);
    let w2 = diff(&w1, &z) + diff(&w1, &w) * &w1;
    Ok(ode
        .subs1(&Expr::ode_jet("w", "z", 2), &w2)
        .subs1(&Expr::ode_jet("w", "z", 1), &w1))
}

fn newton(g: &Expr, gw: &Expr, base: &Point, start: f64) -> Option<f64> {
    let fns = FnTable::new();
    let mut p = base.clone();
    let mut w = start;
    for _ in 0..100 {
        p.insert("w".into(), w);
        let (Ok(v), Ok(d)) = (eval_f64(g, &p, &fns), eval_f64(gw, &p, &fns)) else {
            return None;
        };
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let step = v / d;
        w -= step;
        if !w.is_finite() {
            return None;
        }
        if step.abs() <= 1e-14 * w.abs().max(1.0) {
            p.insert("w".into(), w);
            return eval_f64(g, &p, &fns)
                .ok()
                .filter(|r| r.abs() < 1e-9)
                .map(|_| w);
        }
    }
    None
}

/// Checks that `relation(z, w) = 0` defines solutions of `ode`. Tries an
/// exact zero test first; otherwise solves the relation for `w` at each
/// `z` sample by Newton's method from the given starts and evaluates the
/// ODE residual there.
pub fn verify_implicit_solution(
    relation: &Expr,
    ode: &Expr,
    params: &Point,
    zs: &[f64],
    starts: &[f64],
    tol: f64,
) -> Result<ImplicitReport> {
    let res = implicit_residual(relation, ode)?;
    if !res.any(&|e| matches!(e.node(), Node::LambertW(_))) && is_zero(&res)? {
        return Ok(ImplicitReport {
            ok: true,
            symbolic: true,
            points: vec![],
            max_abs: None,
        });
    }
    let w = Expr::ode_jet("w", "z", 0);
    let gw = diff(relation, &w);
    let fns = FnTable::new();
    let mut points = Vec::new();
    for &z in zs {
        let mut base = params.clone();
        base.insert("z".into(), z);
        let Some(root) = starts.iter().find_map(|&s| newton(relation, &gw, &base, s)) else {
            continue;
        };
        base.insert("w".into(), root);
        match eval_f64(&res, &base, &fns) {
            Ok(r) => points.push(CurvePoint {
                z,
                w: root,
                residual: r,
            }),
            Err(CalcError::DivisionByZeroAtPoint) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    if points.is_empty() {
        return Err(ReductionError::ImplicitSingular);
    }
    let worst = points.iter().map(|p| p.residual.abs()).fold(0.0, f64::max);
    Ok(ImplicitReport {
        ok: worst < tol,
        symbolic: false,
        points,
        max_abs: Some(worst),
    })
}

impl SolutionReport {
    pub fn describe(&self) -> String {
        match (&self.residual, self.max_abs) {
            (Some(r), _) => format!("residual {}", print(r)),
            (None, Some(m)) => format!("max |residual| {m:.3e} over {} points", self.points),
            _ => String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::Names;
    use crate::parser::{parse, parse_with};
    use crate::reduction::catalog::solution_names;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn pt(xs: &[(&str, f64)]) -> Point {
        xs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn trivial_and_linear() {
        assert!(
            verify_pde_solution(&p("0"), &Mode::Symbolic, &FnTable::new())
                .unwrap()
                .ok
        );
        let r = verify_pde_solution(&p("x"), &Mode::Symbolic, &FnTable::new()).unwrap();
        assert!(!r.ok);
        assert_eq!(r.residual, Some(p("-1")));
    }

    #[test]
    fn opaque_function_solution() {
        let names = solution_names(&Names::default());
        let u = parse_with("alpha*(w(t) - x/(alpha*t + beta))", &names).unwrap();
        assert!(
            verify_pde_solution(&u, &Mode::Symbolic, &FnTable::new())
                .unwrap()
                .ok
        );
    }

    #[test]
    fn lambert_solution_numeric() {
        let u = p("A/(2*(c3 + 2*t))*(1 + W(exp(-1 - 4*(B + x)/A)/A))");
        let fixed = pt(&[("A", 1.0), ("B", 0.0), ("c3", 1.0)]);
        let pts = sample_points(
            7,
            20,
            &[("t", 0.0, 2.0), ("x", -1.0, 1.0), ("y", -1.0, 1.0)],
            &fixed,
        );
        let r = verify_pde_solution(
            &u,
            &Mode::Numeric {
                points: pts,
                tol: 1e-10,
            },
            &FnTable::new(),
        )
        .unwrap();
        assert!(r.ok, "{r:?}");
        let bad = p("A/(2*(c3 + 2*t))*(1 + W(exp(-1 - 3*(B + x)/A)/A))");
        let pts = sample_points(
            7,
            20,
            &[("t", 0.0, 2.0), ("x", -1.0, 1.0), ("y", -1.0, 1.0)],
            &fixed,
        );
        assert!(
            !verify_pde_solution(
                &bad,
                &Mode::Numeric {
                    points: pts,
                    tol: 1e-10
                },
                &FnTable::new()
            )
            .unwrap()
            .ok
        );
    }

    #[test]
    fn explicit_ode_solutions() {
        let ode = p("-2*c3*v*(1 + v) - c3*v^2*Q'");
        assert!(
            verify_explicit_solution(&p("A - 2*v - 2*ln(v)"), &ode, "Q", "v")
                .unwrap()
                .ok
        );
        assert!(
            !verify_explicit_solution(&p("A + 2/(c3*v) + v*ln(v)"), &ode, "Q", "v")
                .unwrap()
                .ok
        );
        let derived = p("c3*v^2*Q' - c3*v^2 - c3*v + 2");
        assert!(
            verify_explicit_solution(&p("A + v + ln(v) + 2/(c3*v)"), &derived, "Q", "v")
                .unwrap()
                .ok
        );
        assert!(
            !verify_explicit_solution(&p("A + 2/(c3*v) + v*ln(v)"), &derived, "Q", "v")
                .unwrap()
                .ok
        );
    }

    #[test]
    fn implicit_trivial() {
        let r =
            verify_implicit_solution(&p("w - C1"), &p("w'"), &Point::new(), &[1.0], &[0.0], 1e-9)
                .unwrap();
        assert!(r.ok && r.symbolic);
        let r = verify_implicit_solution(
            &p("w - z"),
            &p("w' - 2"),
            &Point::new(),
            &[0.5, 1.0],
            &[0.0],
            1e-9,
        )
        .unwrap();
        assert!(!r.ok);
    }

    #[test]
    fn implicit_lambert_relation() {
        let rel = p("w - (2 + c3*z*w)/(c3*z*W(-2*exp(-A/c3)*(2 + c3*z*w)/(c3*z))) - B");
        let ode = p("(4 + 2*c3*w*z)*w' + c3*z^2*w'^2 + z*(2 + c3*w*z)*w''");
        let params = pt(&[("A", 1.0), ("B", 0.0), ("c3", 1.0)]);
        let r = verify_implicit_solution(
            &rel,
            &ode,
            &params,
            &[2.0, -3.0, -5.0, -1.5],
            &[-3.0, -1.0, 0.5, 2.0, 5.0],
            1e-8,
        )
        .unwrap();
        let expect = [
            -2.46077681728,
            -4.31221767121,
            -4.07552541271,
            -4.86062093613,
        ];
        assert_eq!(r.points.len(), 4);
        for (c, e) in r.points.iter().zip(expect) {
            assert!((c.w - e).abs() < 1e-9, "{c:?}");
        }
        assert!(r.ok, "{r:?}");
    }
}
