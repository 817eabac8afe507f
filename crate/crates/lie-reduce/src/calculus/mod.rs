//! Partial and total derivatives over the jet space.

mod taylor;

pub use taylor::{eval_f64, eval_jet, lambert_w0, FnTable, NumFn, TaylorJet};

use crate::expr::{Expr, Jet, Name, Node, Q};
use num_traits::One;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalcError {
    #[error("division by zero at the evaluation point")]
    DivisionByZeroAtPoint,
    #[error("Lambert W argument {0} below -1/e")]
    LambertWDomain(f64),
    #[error("no numeric value for `{0}`")]
    Unbound(String),
    #[error("cannot evaluate {0}")]
    Unsupported(String),
}

/// Dependent variables and the independent variables each one depends on.
#[derive(Debug, Clone)]
pub struct JetSpace {
    pub deps: BTreeMap<String, Vec<String>>,
}

impl Default for JetSpace {
    fn default() -> Self {
        JetSpace {
            deps: crate::parser::Names::default().deps,
        }
    }
}

impl JetSpace {
    pub fn depends(&self, dep: &str, v: &str) -> bool {
        self.deps
            .get(dep)
            .is_some_and(|vs| vs.iter().any(|x| x == v))
    }
}

/// Partial derivative with respect to an atom (variable, parameter or jet).
/// Jets are independent coordinates here; see [`total_derivative`].
pub fn diff(e: &Expr, v: &Expr) -> Expr {
    let mut memo = HashMap::new();
    diff_memo(e, v, &mut memo)
}

fn diff_memo(e: &Expr, v: &Expr, memo: &mut HashMap<Expr, Expr>) -> Expr {
    if let Some(d) = memo.get(e) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Var(_) | Node::Param(_) | Node::Jet(_) => {
            if e == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Func { name, order, arg } => {
            if e == v {
                Expr::one()
            } else {
                let da = diff_memo(arg, v, memo);
                if da.is_zero_literal() {
                    Expr::zero()
                } else {
                    Expr::func(name, order + 1, arg.clone()) * da
                }
            }
        }
        Node::Add(ts) => Expr::add(ts.iter().map(|t| diff_memo(t, v, memo)).collect()),
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for i in 0..fs.len() {
                let di = diff_memo(&fs[i], v, memo);
                if di.is_zero_literal() {
                    continue;
                }
                let mut prod: Vec<Expr> = Vec::with_capacity(fs.len());
                for (j, f) in fs.iter().enumerate() {
                    prod.push(if i == j { di.clone() } else { f.clone() });
                }
                terms.push(Expr::mul(prod));
            }
            Expr::add(terms)
        }
        Node::Pow(b, r) => {
            let db = diff_memo(b, v, memo);
            if db.is_zero_literal() {
                Expr::zero()
            } else {
                Expr::mul(vec![
                    Expr::num(r.clone()),
                    Expr::pow(b.clone(), r - Q::one()),
                    db,
                ])
            }
        }
        Node::Exp(a) => {
            let da = diff_memo(a, v, memo);
            if da.is_zero_literal() {
                Expr::zero()
            } else {
                e * da
            }
        }
        Node::Ln(a) => {
            let da = diff_memo(a, v, memo);
            if da.is_zero_literal() {
                Expr::zero()
            } else {
                da / a
            }
        }
        Node::LambertW(a) => {
            let da = diff_memo(a, v, memo);
            if da.is_zero_literal() {
                Expr::zero()
            } else {
                Expr::mul(vec![e.clone(), (a * (Expr::one() + e)).recip(), da])
            }
        }
    };
    memo.insert(e.clone(), d.clone());
    d
}

/// Jet obtained by differentiating `j` once more with respect to `v`.
pub fn jet_up(j: &Jet, v: &str) -> Expr {
    let mut idx = j.index.clone();
    idx.push(Name::from(v));
    Expr::jet_from(Jet {
        dep: j.dep.clone(),
        index: idx,
        primed: j.primed,
    })
}

/// `D_v e` with the default dependents (`u(t,x,y)`, `w(z)`, ...).
pub fn total_derivative(e: &Expr, v: &str) -> Expr {
    total_derivative_in(e, v, &JetSpace::default())
}

pub fn total_derivative_in(e: &Expr, v: &str, space: &JetSpace) -> Expr {
    let var = Expr::var(v);
    let mut terms = vec![diff(e, &var)];
    for j in e.jets() {
        if !space.depends(&j.dep, v) {
            continue;
        }
        let je = Expr::jet_from(j.clone());
        let d = diff(e, &je);
        if !d.is_zero_literal() {
            terms.push(d * jet_up(&j, v));
        }
    }
    Expr::add(terms)
}

/// `D_{v1} D_{v2} ... e`.
pub fn total_derivative_multi(e: &Expr, vs: &[&str], space: &JetSpace) -> Expr {
    let mut out = e.clone();
    for v in vs {
        out = total_derivative_in(&out, v, space);
    }
    out
}
