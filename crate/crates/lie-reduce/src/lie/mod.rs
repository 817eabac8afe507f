//! Point vector fields, the ZK symmetry generators, brackets, the adjoint
//! action and prolongation.

use crate::calculus::{diff, total_derivative_in, JetSpace};
use crate::expr::{canonical, is_zero, simplify, Expr, ExprError, Node, Q};
use crate::parser::{parse, print};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("unknown generator kind `{0}`")]
    UnknownKind(String),
    #[error("Lie series did not close within {0} terms")]
    SeriesDoesNotClose(usize),
    #[error("equation cannot be solved for {0}")]
    NotSolvableForPivot(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `sum xi^i d/dx_i + phi d/du` on the space of `vars` and one dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub vars: Vec<String>,
    pub dep: String,
    pub xi: Vec<Expr>,
    pub phi: Expr,
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .xi
            .iter()
            .chain(std::iter::once(&self.phi))
            .map(print)
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl VectorField {
    pub fn new(vars: &[&str], dep: &str, xi: Vec<Expr>, phi: Expr) -> VectorField {
        assert_eq!(vars.len(), xi.len());
        VectorField {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            dep: dep.to_string(),
            xi,
            phi,
        }
    }

    /// Field on `(t, x, y, u)`.
    pub fn txy(xi_t: Expr, xi_x: Expr, xi_y: Expr, phi: Expr) -> VectorField {
        VectorField::new(&["t", "x", "y"], "u", vec![xi_t, xi_x, xi_y], phi)
    }

    /// Field on `(z, w)`, components parsed from text.
    pub fn zw(xi: &str, phi: &str) -> Result<VectorField, crate::parser::ParseError> {
        Ok(VectorField::new(&["z"], "w", vec![parse(xi)?], parse(phi)?))
    }

    pub fn zero_like(&self) -> VectorField {
        VectorField {
            xi: vec![Expr::zero(); self.xi.len()],
            phi: Expr::zero(),
            ..self.clone()
        }
    }

    /// The dependent variable as an atom (`u` or `w`).
    pub fn dep_atom(&self) -> Expr {
        dep_jet(&self.vars, &self.dep, &[])
    }

    pub fn components(&self) -> Vec<Expr> {
        let mut c = self.xi.clone();
        c.push(self.phi.clone());
        c
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField {
            xi: self.xi.iter().map(&f).collect(),
            phi: f(&self.phi),
            ..self.clone()
        }
    }

    pub fn scale(&self, c: &Expr) -> VectorField {
        self.map(|e| c * e)
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        VectorField {
            xi: self.xi.iter().zip(&o.xi).map(|(a, b)| a + b).collect(),
            phi: &self.phi + &o.phi,
            ..self.clone()
        }
    }

    pub fn sub(&self, o: &VectorField) -> VectorField {
        self.add(&o.scale(&Expr::int(-1)))
    }

    pub fn simplified(&self) -> Result<VectorField, ExprError> {
        Ok(VectorField {
            xi: self.xi.iter().map(simplify).collect::<Result<_, _>>()?,
            phi: simplify(&self.phi)?,
            ..self.clone()
        })
    }

    /// `v(F)` for a function of the base variables and the dependent.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut terms = Vec::with_capacity(self.xi.len() + 1);
        for (v, xi) in self.vars.iter().zip(&self.xi) {
            if !xi.is_zero_literal() {
                terms.push(xi * diff(f, &Expr::var(v)));
            }
        }
        if !self.phi.is_zero_literal() {
            terms.push(&self.phi * diff(f, &self.dep_atom()));
        }
        Expr::add(terms)
    }

    pub fn is_zero(&self) -> Result<bool, ExprError> {
        for c in self.components() {
            if !is_zero(&c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equals(&self, o: &VectorField) -> Result<bool, ExprError> {
        self.sub(o).is_zero()
    }

    pub fn substitute(&self, b: &std::collections::HashMap<Expr, Expr>) -> VectorField {
        self.map(|e| e.subs(b))
    }
}

/// Jet atom of `dep` with derivative multi-index `index`; single-variable
/// dependents use primes.
pub fn dep_jet(vars: &[String], dep: &str, index: &[&str]) -> Expr {
    if vars.len() == 1 {
        Expr::ode_jet(dep, &vars[0], index.len())
    } else {
        Expr::jet(dep, index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    V0,
    X,
    Y,
    Z,
}

impl std::str::FromStr for GenKind {
    type Err = LieError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "v0" => Ok(GenKind::V0),
            "x" => Ok(GenKind::X),
            "y" => Ok(GenKind::Y),
            "z" => Ok(GenKind::Z),
            _ => Err(LieError::UnknownKind(s.to_string())),
        }
    }
}

fn d_t(e: &Expr, n: usize) -> Expr {
    let t = Expr::var("t");
    let mut out = e.clone();
    for _ in 0..n {
        out = diff(&out, &t);
    }
    out
}

/// Generators of the ZK symmetry algebra. `arg` is a function of `t`
/// (ignored for `v0`).
pub fn generator(kind: GenKind, arg: &Expr) -> VectorField {
    let (x, y) = (Expr::var("x"), Expr::var("y"));
    let u = Expr::jet("u", &[]);
    let r = |n, d| Expr::rat(n, d);
    match kind {
        GenKind::V0 => VectorField::txy(Expr::zero(), Expr::int(2) * &x, y, Expr::int(2) * u),
        GenKind::X => VectorField::txy(Expr::zero(), arg.clone(), Expr::zero(), -d_t(arg, 1)),
        GenKind::Y => {
            let (h1, h2) = (d_t(arg, 1), d_t(arg, 2));
            VectorField::txy(
                Expr::zero(),
                r(1, 2) * &y * h1,
                arg.clone(),
                r(-1, 2) * &y * h2,
            )
        }
        GenKind::Z => {
            let (f1, f2, f3) = (d_t(arg, 1), d_t(arg, 2), d_t(arg, 3));
            let y2 = Expr::powi(y.clone(), 2);
            VectorField::txy(
                arg.clone(),
                r(1, 6) * (Expr::int(2) * &x * &f1 + &y2 * &f2),
                r(2, 3) * &y * &f1,
                r(1, 6) * (Expr::int(-4) * &u * &f1 - Expr::int(2) * &x * &f2 - &y2 * &f3),
            )
        }
    }
}

pub fn generator_named(kind: &str, arg: &Expr) -> Result<VectorField, LieError> {
    Ok(generator(kind.parse()?, arg))
}

/// `[v, w]^i = v(w^i) - w(v^i)`.
pub fn commutator(v: &VectorField, w: &VectorField) -> VectorField {
    VectorField {
        xi: v
            .xi
            .iter()
            .zip(&w.xi)
            .map(|(a, b)| v.apply(b) - w.apply(a))
            .collect(),
        phi: v.apply(&w.phi) - w.apply(&v.phi),
        ..v.clone()
    }
}

/// A constant `lambda` with `b = lambda * a`, if one exists.
fn proportional(a: &VectorField, b: &VectorField) -> Result<Option<Expr>, ExprError> {
    let comps = a.components();
    let Some(k) = comps
        .iter()
        .map(is_zero)
        .position(|z| matches!(z, Ok(false)))
    else {
        return Ok(None);
    };
    let lambda = simplify(&(&b.components()[k] / &comps[k]))?;
    let constant = canonical::normalize(&lambda)?
        .support()
        .iter()
        .all(|e| matches!(e.node(), Node::Param(_)));
    if !constant {
        return Ok(None);
    }
    if b.sub(&a.scale(&lambda)).is_zero()? {
        Ok(Some(lambda))
    } else {
        Ok(None)
    }
}

fn factorial(k: usize) -> Expr {
    Expr::num(Q::from_integer((1..=k as u64).product::<u64>().into()))
}

/// `Ad(exp(eps v)) w0 = sum (-eps)^k/k! ad_v^k(w0)`, resummed in closed form
/// when the iterated brackets vanish or become proportional to the previous one.
pub fn adjoint(
    v: &VectorField,
    w0: &VectorField,
    eps: &Expr,
    max_terms: usize,
) -> Result<VectorField, LieError> {
    let neg = -eps;
    let mut terms = vec![w0.clone()];
    for k in 1..=max_terms {
        let next = commutator(v, &terms[k - 1]).simplified()?;
        if next.is_zero()? {
            let mut acc = w0.zero_like();
            for (j, a) in terms.iter().enumerate() {
                acc = acc.add(&a.scale(&(Expr::powi(neg.clone(), j as i64) / factorial(j))));
            }
            return Ok(acc.simplified()?);
        }
        if let Some(lambda) = proportional(&terms[k - 1], &next)? {
            // a_m = lambda^(m-M) a_M for m >= M = k-1
            let m = k - 1;
            let mut acc = w0.zero_like();
            for (j, a) in terms.iter().take(m).enumerate() {
                acc = acc.add(&a.scale(&(Expr::powi(neg.clone(), j as i64) / factorial(j))));
            }
            let el = &neg * &lambda;
            let mut partial = Vec::new();
            for j in 0..m {
                partial.push(Expr::powi(el.clone(), j as i64) / factorial(j));
            }
            let tail = (Expr::exp(el.clone()) - Expr::add(partial))
                * Expr::powi(lambda.clone(), -(m as i64));
            acc = acc.add(&terms[m].scale(&tail));
            return Ok(acc.simplified()?);
        }
        terms.push(next);
    }
    Err(LieError::SeriesDoesNotClose(max_terms))
}

/// A vector field together with prolongation coefficients `phi^J`.
#[derive(Debug, Clone)]
pub struct ProlongedField {
    pub base: VectorField,
    pub coeffs: BTreeMap<Vec<String>, Expr>,
}

impl ProlongedField {
    pub fn coeff(&self, index: &[&str]) -> Option<&Expr> {
        let mut k: Vec<String> = index.iter().map(|s| s.to_string()).collect();
        k.sort();
        self.coeffs.get(&k)
    }

    /// `pr v (F)` for F depending on base variables, the dependent and the
    /// jets covered by the prolongation.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut terms = vec![self.base.apply(f)];
        for (idx, c) in &self.coeffs {
            let refs: Vec<&str> = idx.iter().map(|s| s.as_str()).collect();
            let j = dep_jet(&self.base.vars, &self.base.dep, &refs);
            let d = diff(f, &j);
            if !d.is_zero_literal() {
                terms.push(c * d);
            }
        }
        Expr::add(terms)
    }
}

fn space_of(v: &VectorField) -> JetSpace {
    let mut deps = BTreeMap::new();
    deps.insert(v.dep.clone(), v.vars.clone());
    JetSpace { deps }
}

/// Prolongation coefficients for the given multi-indices:
/// `phi^J = D_J(phi - xi^i u_i) + xi^i u_{J,i}`.
pub fn prolong(v: &VectorField, indices: &[Vec<String>]) -> ProlongedField {
    let space = space_of(v);
    let mut q = v.phi.clone();
    for (var, xi) in v.vars.iter().zip(&v.xi) {
        q = q - xi * dep_jet(&v.vars, &v.dep, &[var]);
    }
    let mut coeffs = BTreeMap::new();
    for idx in indices {
        let mut idx = idx.clone();
        idx.sort();
        let mut c = q.clone();
        for var in &idx {
            c = total_derivative_in(&c, var, &space);
        }
        let refs: Vec<&str> = idx.iter().map(|s| s.as_str()).collect();
        let mut terms = vec![c];
        for (var, xi) in v.vars.iter().zip(&v.xi) {
            let mut full = refs.clone();
            full.push(var);
            terms.push(xi * dep_jet(&v.vars, &v.dep, &full));
        }
        coeffs.insert(idx, Expr::add(terms));
    }
    ProlongedField {
        base: v.clone(),
        coeffs,
    }
}

/// First-order coefficients plus the second-order ones ZK needs.
pub fn prolong2(v: &VectorField) -> ProlongedField {
    let mut idx: Vec<Vec<String>> = v.vars.iter().map(|s| vec![s.clone()]).collect();
    if v.vars.len() == 1 {
        idx.push(vec![v.vars[0].clone(), v.vars[0].clone()]);
    } else {
        for pair in [["x", "x"], ["t", "x"], ["y", "y"]] {
            if pair.iter().all(|p| v.vars.iter().any(|s| s == p)) {
                idx.push(pair.iter().map(|s| s.to_string()).collect());
            }
        }
    }
    prolong(v, &idx)
}

/// Prolongation covering every jet of `v.dep` occurring in `eq`.
pub fn prolong_for(v: &VectorField, eq: &Expr) -> ProlongedField {
    let idx: BTreeSet<Vec<String>> = eq
        .jets()
        .into_iter()
        .filter(|j| *j.dep == *v.dep && !j.index.is_empty())
        .map(|j| j.index.iter().map(|s| s.to_string()).collect())
        .collect();
    prolong(v, &idx.into_iter().collect::<Vec<_>>())
}

/// Solves `eq = 0` for `pivot`, which must enter linearly.
pub fn solve_for_pivot(eq: &Expr, pivot: &Expr) -> Result<Expr, LieError> {
    let cs = canonical::collect(eq, std::slice::from_ref(pivot))
        .map_err(|_| LieError::NotSolvableForPivot(print(pivot)))?;
    if cs.keys().any(|k| k[0] > 1) {
        return Err(LieError::NotSolvableForPivot(print(pivot)));
    }
    let a = cs.get(&vec![1]).cloned().unwrap_or_else(Expr::zero);
    if is_zero(&a)? {
        return Err(LieError::NotSolvableForPivot(print(pivot)));
    }
    let b = cs.get(&vec![0]).cloned().unwrap_or_else(Expr::zero);
    Ok(simplify(&(-b / a))?)
}

/// `pr v (eq)` restricted to solutions via `pivot := solve(eq, pivot)`.
pub fn symmetry_residual(v: &VectorField, eq: &Expr, pivot: &Expr) -> Result<Expr, LieError> {
    let sol = solve_for_pivot(eq, pivot)?;
    let pr = prolong_for(v, eq);
    let action = pr.apply(eq);
    Ok(action.subs1(pivot, &sol))
}

pub fn is_symmetry(v: &VectorField, eq: &Expr, pivot: &Expr) -> Result<bool, LieError> {
    Ok(is_zero(&symmetry_residual(v, eq, pivot)?)?)
}

/// Left side of the ZK equation `u_xt - (u u_x)_x - u_yy`.
pub fn zk_equation() -> Expr {
    parse("D(u,x,t) - D(u,x)^2 - u*D(u,x,x) - D(u,y,y)").expect("static equation")
}

pub fn zk_pivot() -> Expr {
    Expr::jet("u", &["x", "t"])
}

pub fn opaque(name: &str) -> Expr {
    Expr::func(name, 0, Expr::var("t"))
}

/// One row of the commutation table: `[lhs.0, lhs.1]` should equal `rhs`.
#[derive(Debug, Clone)]
pub struct Relation {
    pub id: &'static str,
    pub text: &'static str,
    pub left: VectorField,
    pub right: VectorField,
    pub expected: VectorField,
}

/// The nine commutation relations of the algebra, with opaque arguments.
pub fn commutation_relations() -> Vec<Relation> {
    use GenKind::*;
    let (f, g, h) = (opaque("f"), opaque("g"), opaque("h"));
    let (f1, f2, g1, g2, h1, h2) = (
        opaque("f1"),
        opaque("f2"),
        opaque("g1"),
        opaque("g2"),
        opaque("h1"),
        opaque("h2"),
    );
    let one = Expr::one();
    let dt = |e: &Expr| d_t(e, 1);
    let v0 = generator(V0, &one);
    let zero = v0.zero_like();
    vec![
        Relation {
            id: "v0-x",
            text: "[v0, x(g)] = -2 x(g)",
            left: v0.clone(),
            right: generator(X, &g),
            expected: generator(X, &g).scale(&Expr::int(-2)),
        },
        Relation {
            id: "v0-y",
            text: "[v0, y(h)] = -y(h)",
            left: v0.clone(),
            right: generator(Y, &h),
            expected: generator(Y, &h).scale(&Expr::int(-1)),
        },
        Relation {
            id: "v0-z",
            text: "[v0, z(f)] = 0",
            left: v0.clone(),
            right: generator(Z, &f),
            expected: zero.clone(),
        },
        Relation {
            id: "x-x",
            text: "[x(g1), x(g2)] = 0",
            left: generator(X, &g1),
            right: generator(X, &g2),
            expected: zero.clone(),
        },
        Relation {
            id: "z-z",
            text: "[z(f1), z(f2)] = z(f1 f2' - f1' f2)",
            left: generator(Z, &f1),
            right: generator(Z, &f2),
            expected: generator(Z, &(&f1 * dt(&f2) - dt(&f1) * &f2)),
        },
        Relation {
            id: "x-y",
            text: "[x(g), y(h)] = 0",
            left: generator(X, &g),
            right: generator(Y, &h),
            expected: zero.clone(),
        },
        Relation {
            id: "x-z",
            text: "[x(g), z(f)] = x(f' g/3 - f g')",
            left: generator(X, &g),
            right: generator(Z, &f),
            expected: generator(X, &(dt(&f) * &g / Expr::int(3) - &f * dt(&g))),
        },
        Relation {
            id: "y-z",
            text: "[y(h), z(f)] = y(2/3 f' h - f h')",
            left: generator(Y, &h),
            right: generator(Z, &f),
            expected: generator(Y, &(Expr::rat(2, 3) * dt(&f) * &h - &f * dt(&h))),
        },
        Relation {
            id: "y-y",
            text: "[y(h1), y(h2)] = x((h1 h2' - h1' h2)/2)",
            left: generator(Y, &h1),
            right: generator(Y, &h2),
            expected: generator(X, &((&h1 * dt(&h2) - dt(&h1) * &h2) / Expr::int(2))),
        },
    ]
}

impl Relation {
    pub fn holds(&self) -> Result<bool, ExprError> {
        commutator(&self.left, &self.right).equals(&self.expected)
    }
}

/// Generator families with opaque arguments, for the symmetry suite.
pub fn generator_families() -> Vec<(&'static str, VectorField)> {
    vec![
        ("v0", generator(GenKind::V0, &Expr::one())),
        ("x(g)", generator(GenKind::X, &opaque("g"))),
        ("y(h)", generator(GenKind::Y, &opaque("h"))),
        ("z(f)", generator(GenKind::Z, &opaque("f"))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_shapes() {
        let v0 = generator(GenKind::V0, &Expr::one());
        assert_eq!(v0.to_string(), "(0, 2*x, y, 2*u)");
        let x = generator(GenKind::X, &opaque("g"));
        assert_eq!(x.to_string(), "(0, g(t), 0, -g'(t))");
        let z1 = generator(GenKind::Z, &Expr::one());
        assert_eq!(z1.to_string(), "(1, 0, 0, 0)");
        let y = generator(GenKind::Y, &opaque("h"));
        assert!(is_zero(&(&y.xi[1] - parse("y*h'(t)/2").unwrap())).unwrap());
        assert!(is_zero(&(&y.phi - parse("-y*h''(t)/2").unwrap())).unwrap());
        assert!("q".parse::<GenKind>().is_err());
    }

    #[test]
    fn commutation_table_holds() {
        for r in commutation_relations() {
            assert!(r.holds().unwrap(), "{}", r.text);
        }
    }

    #[test]
    fn generators_are_symmetries() {
        let zk = zk_equation();
        for (name, v) in generator_families() {
            assert!(is_symmetry(&v, &zk, &zk_pivot()).unwrap(), "{name}");
        }
        let du = VectorField::txy(Expr::zero(), Expr::zero(), Expr::zero(), Expr::one());
        assert!(!is_symmetry(&du, &zk, &zk_pivot()).unwrap());
        let res = symmetry_residual(&du, &zk, &zk_pivot()).unwrap();
        assert!(is_zero(&(res + parse("D(u,x,x)").unwrap())).unwrap());
    }

    #[test]
    fn prolongation_examples() {
        let dx = VectorField::txy(Expr::zero(), Expr::one(), Expr::zero(), Expr::zero());
        for c in prolong2(&dx).coeffs.values() {
            assert!(is_zero(c).unwrap());
        }
        let v0 = prolong2(&generator(GenKind::V0, &Expr::one()));
        assert!(is_zero(v0.coeff(&["x"]).unwrap()).unwrap());
        assert!(is_zero(&(v0.coeff(&["y"]).unwrap() - parse("D(u,y)").unwrap())).unwrap());
        assert!(is_zero(&(v0.coeff(&["t"]).unwrap() - parse("2*D(u,t)").unwrap())).unwrap());
        let xg = prolong2(&generator(GenKind::X, &opaque("g")));
        assert!(
            is_zero(&(xg.coeff(&["t"]).unwrap() + parse("g''(t) + g'(t)*D(u,x)").unwrap()))
                .unwrap()
        );
    }

    #[test]
    fn adjoint_examples() {
        let eps = Expr::param("eps");
        let v0 = generator(GenKind::V0, &Expr::one());
        let xg = generator(GenKind::X, &opaque("g"));
        let ad = adjoint(&v0, &xg, &eps, 8).unwrap();
        let want = xg.scale(&Expr::exp(Expr::int(2) * &eps));
        assert!(ad.equals(&want).unwrap());
        let z1 = generator(GenKind::Z, &Expr::one());
        assert!(adjoint(&z1, &v0, &eps, 8).unwrap().equals(&v0).unwrap());
        let xg2 = generator(GenKind::X, &opaque("g2"));
        assert!(
            adjoint(&generator(GenKind::X, &opaque("g1")), &xg2, &eps, 8)
                .unwrap()
                .equals(&xg2)
                .unwrap()
        );
        assert!(adjoint(&v0, &xg, &Expr::zero(), 8)
            .unwrap()
            .equals(&xg)
            .unwrap());
    }
}
