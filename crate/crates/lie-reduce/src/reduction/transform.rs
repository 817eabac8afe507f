use super::{clean_ode, eliminate, ReductionError, Result};
use crate::calculus::{diff, total_derivative};
use crate::expr::{is_zero, Expr, Node};
use crate::lie::{is_symmetry, prolong, solve_for_pivot, VectorField};
use crate::parser::print;
use std::collections::HashMap;

/// Point transformation `(z, w) -> (r, W)` of the plane of a scalar ODE.
#[derive(Debug, Clone)]
pub struct Transform {
    /// Old independent and dependent names, e.g. `("z", "w")`.
    pub from: (String, String),
    /// New independent and dependent names, e.g. `("r", "W")`.
    pub to: (String, String),
    /// `r = R(z, w)`, `W = S(z, w)`.
    pub forward: (Expr, Expr),
    /// `z = Z(r, W)`, `w = V(r, W)`.
    pub inverse: Option<(Expr, Expr)>,
}

fn jet(dep: &str, indep: &str, n: usize) -> Expr {
    Expr::ode_jet(dep, indep, n)
}

impl Transform {
    /// `(z, w) -> (r, W)` from text, new coordinates written in `z, w` and
    /// the inverse in `r, W`.
    pub fn parse_zw(forward: (&str, &str), inverse: Option<(&str, &str)>) -> Result<Transform> {
        Transform::parse(("z", "w"), ("r", "W"), forward, inverse)
    }

    pub fn parse(
        from: (&str, &str),
        to: (&str, &str),
        forward: (&str, &str),
        inverse: Option<(&str, &str)>,
    ) -> Result<Transform> {
        let p = crate::parser::parse;
        Ok(Transform {
            from: (from.0.into(), from.1.into()),
            to: (to.0.into(), to.1.into()),
            forward: (p(forward.0)?, p(forward.1)?),
            inverse: match inverse {
                Some((a, b)) => Some((p(a)?, p(b)?)),
                None => None,
            },
        })
    }

    fn old(&self) -> (Expr, Expr) {
        (Expr::var(&self.from.0), jet(&self.from.1, &self.from.0, 0))
    }

    fn new_coords(&self) -> (Expr, Expr) {
        (Expr::var(&self.to.0), jet(&self.to.1, &self.to.0, 0))
    }

    /// Swapped transform; needs the inverse.
    pub fn inverted(&self) -> Result<Transform> {
        Ok(Transform {
            from: self.to.clone(),
            to: self.from.clone(),
            forward: self.resolve_inverse()?,
            inverse: Some(self.forward.clone()),
        })
    }

    /// The supplied inverse, or the obvious one for identities and swaps.
    fn resolve_inverse(&self) -> Result<(Expr, Expr)> {
        if let Some(i) = &self.inverse {
            return Ok(i.clone());
        }
        let (z, w) = self.old();
        let (r, big) = self.new_coords();
        if self.forward == (z.clone(), w.clone()) {
            return Ok((r, big));
        }
        if self.forward == (w, z) {
            return Ok((big, r));
        }
        Err(ReductionError::InversionFailure(
            "no inverse supplied".into(),
        ))
    }
}

/// Rewrites `ode` in `(z, w, w', w'')` through the transform, returning an
/// ODE in `(r, W, W', W'')` up to a nonzero factor.
pub fn change_variables(ode: &Expr, t: &Transform) -> Result<Expr> {
    let (z, w) = t.old();
    let (r, big) = t.new_coords();
    let (fr, fs) = &t.forward;
    let jac = diff(fr, &z) * diff(fs, &w) - diff(fr, &w) * diff(fs, &z);
    if is_zero(&jac)? {
        return Err(ReductionError::SingularTransform);
    }
    let (zi, wi) = t.resolve_inverse()?;
    let mut back = HashMap::new();
    back.insert(z.clone(), zi.clone());
    back.insert(w.clone(), wi.clone());
    if !is_zero(&(fr.subs(&back) - &r))? || !is_zero(&(fs.subs(&back) - &big))? {
        return Err(ReductionError::InversionFailure(format!(
            "({}, {}) does not invert the transform",
            print(&zi),
            print(&wi)
        )));
    }
    let ind = &t.to.0;
    let dz = total_derivative(&zi, ind);
    if is_zero(&dz)? {
        return Err(ReductionError::SingularTransform);
    }
    let dw = total_derivative(&wi, ind);
    let p = &dw / &dz;
    let pp = total_derivative(&p, ind) / &dz;
    let mut m = HashMap::new();
    m.insert(jet(&t.from.1, &t.from.0, 2), pp);
    m.insert(jet(&t.from.1, &t.from.0, 1), p);
    m.insert(z, zi);
    m.insert(w, wi);
    clean_ode(&ode.subs(&m))
}

/// Reduces the order of `ode` with the invariants `xi(z, w)` and
/// `X(z, w, w')` of the first prolongation of `v`; the result is a
/// first-order ODE in `(xi, X, X')`.
pub fn reduce_order(ode: &Expr, v: &VectorField, xi: &Expr, big_x: &Expr) -> Result<Expr> {
    let (zn, wn) = (v.vars[0].clone(), v.dep.clone());
    let pr = prolong(v, &[vec![zn.clone()]]);
    for inv in [xi, big_x] {
        if !is_zero(&pr.apply(inv))? {
            return Err(ReductionError::NotInvariant(print(inv)));
        }
    }
    let (w0, w1, w2) = (jet(&wn, &zn, 0), jet(&wn, &zn, 1), jet(&wn, &zn, 2));
    let (x0, x1) = (jet("X", "xi", 0), jet("X", "xi", 1));
    let xi_var = Expr::var("xi");
    let dxi = total_derivative(xi, &zn);
    let dx = total_derivative(big_x, &zn);
    let w2_sol = solve_for_pivot(&(&x1 * &dxi - &dx), &w2)?;
    let w1_sol = solve_for_pivot(&(big_x - &x0), &w1).map_err(|_| {
        ReductionError::InversionFailure(format!(
            "{} is not linear in {}",
            print(big_x),
            print(&w1)
        ))
    })?;
    let w0_sol = solve_for_pivot(&(xi - &xi_var), &w0).map_err(|_| {
        ReductionError::InversionFailure(format!("{} is not linear in {}", print(xi), print(&w0)))
    })?;
    let e = ode
        .subs1(&w2, &w2_sol)
        .subs1(&w1, &w1_sol)
        .subs1(&w0, &w0_sol);
    eliminate(&e, &[x0, x1], &[zn.as_str()])
}

/// On-solutions symmetry check for a scalar ODE, solved for its highest
/// derivative.
pub fn verify_ode_symmetry(v: &VectorField, ode: &Expr) -> Result<bool> {
    let mut top: Option<Expr> = None;
    let mut order = 0;
    ode.walk(&mut |e| {
        if let Node::Jet(j) = e.node() {
            if *j.dep == *v.dep && j.order() >= order {
                order = j.order();
                top = Some(e.clone());
            }
        }
    });
    let pivot = top.ok_or_else(|| {
        ReductionError::Lie(crate::lie::LieError::NotSolvableForPivot(v.dep.clone()))
    })?;
    Ok(is_symmetry(v, ode, &pivot)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::reduction::proportional;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn wjets() -> Vec<Expr> {
        vec![p("W'"), p("W''")]
    }

    #[test]
    fn swap_on_abel_example() {
        let t = Transform::parse_zw(("w", "z"), None).unwrap();
        let out = change_variables(&p("2*w' + w'^2 + w*w''"), &t).unwrap();
        assert!(proportional(&out, &p("2*W'^2 + W' - r*W''"), &wjets())
            .unwrap()
            .is_some());
    }

    #[test]
    fn identity_keeps_equation() {
        let t = Transform::parse_zw(("z", "w"), None).unwrap();
        let out = change_variables(&p("k0*w' + w'^2 + (w - z*k0)*w''"), &t).unwrap();
        assert!(
            proportional(&out, &p("k0*W' + W'^2 + (W - r*k0)*W''"), &wjets())
                .unwrap()
                .is_some()
        );
    }

    #[test]
    fn singular_transform() {
        let t = Transform::parse_zw(("z + w", "2*z + 2*w"), Some(("r", "W"))).unwrap();
        assert!(matches!(
            change_variables(&p("w''"), &t),
            Err(ReductionError::SingularTransform)
        ));
    }

    #[test]
    fn scaling_symmetries() {
        let red21 = p("-w^2 + 2*(w*z - 1)*w' - z^2*w'^2 - (4*z + w*z^2)*w''");
        assert!(verify_ode_symmetry(&VectorField::zw("z", "-w").unwrap(), &red21).unwrap());
        let red = p("2*w' + w'^2 + w*w''");
        assert!(verify_ode_symmetry(&VectorField::zw("1", "0").unwrap(), &red).unwrap());
        assert!(!verify_ode_symmetry(&VectorField::zw("0", "1").unwrap(), &red).unwrap());
    }

    #[test]
    fn order_reduction_of_second_derivative() {
        // w'' = 0 under d/dz with invariants w, w': X*X' = 0
        let v = VectorField::zw("1", "0").unwrap();
        let out = reduce_order(&p("w''"), &v, &p("w"), &p("w'")).unwrap();
        assert!(is_zero(&(out - p("X*X'"))).unwrap());
    }
}
