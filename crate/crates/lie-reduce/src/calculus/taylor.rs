//! Truncated multivariate Taylor arithmetic.

use super::CalcError;
use crate::expr::{Expr, Node, Q};
use crate::parser::print;
use num_traits::{Signed, ToPrimitive};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Numeric implementation of an opaque function: `f(x, k)` returns
/// `[f(x), f'(x), ..., f^(k)(x)]`.
pub type NumFn = Arc<dyn Fn(f64, usize) -> Vec<f64> + Send + Sync>;
pub type FnTable = HashMap<String, NumFn>;

#[derive(Debug)]
struct Shape {
    n: usize,
    d: usize,
    monos: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    table: Vec<(usize, usize, usize)>,
}

impl Shape {
    fn new(n: usize, d: usize) -> Shape {
        let mut monos = vec![vec![0u32; n]];
        for deg in 1..=d {
            let mut next = Vec::new();
            gen(n, deg as u32, &mut vec![0; n], 0, &mut next);
            monos.extend(next);
        }
        let index: HashMap<Vec<u32>, usize> = monos
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let mut table = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = index.get(&s) {
                    table.push((i, j, k));
                }
            }
        }
        Shape {
            n,
            d,
            monos,
            index,
            table,
        }
    }
}

fn gen(n: usize, left: u32, cur: &mut Vec<u32>, pos: usize, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == n {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if n == 0 {
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        gen(n, left - k, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

/// Taylor coefficients `c_a` of `sum c_a (x - x0)^a` up to total degree `d`.
#[derive(Debug, Clone)]
pub struct TaylorJet {
    shape: Arc<Shape>,
    pub vars: Arc<Vec<String>>,
    pub coeffs: Vec<f64>,
}

impl TaylorJet {
    fn constant_like(&self, c: f64) -> TaylorJet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = c;
        TaylorJet {
            shape: self.shape.clone(),
            vars: self.vars.clone(),
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.shape.d
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient for the multi-index given as variable counts.
    pub fn coeff(&self, counts: &[(&str, u32)]) -> f64 {
        let mut m = vec![0u32; self.shape.n];
        for (v, k) in counts {
            if let Some(i) = self.vars.iter().position(|x| x == v) {
                m[i] += k;
            } else if *k > 0 {
                return 0.0;
            }
        }
        self.shape.index.get(&m).map_or(0.0, |&i| self.coeffs[i])
    }

    /// Partial derivative, e.g. `derivative(&["x", "t"])` for the mixed second derivative.
    pub fn derivative(&self, vs: &[&str]) -> f64 {
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for v in vs {
            *counts.entry(v).or_default() += 1;
        }
        let fact: f64 = counts
            .values()
            .map(|&k| (1..=k).map(|i| i as f64).product::<f64>())
            .product();
        let c: Vec<(&str, u32)> = counts.into_iter().collect();
        self.coeff(&c) * fact
    }

    fn add(&self, o: &TaylorJet) -> TaylorJet {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&o.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        TaylorJet {
            coeffs,
            ..self.clone()
        }
    }

    fn mul(&self, o: &TaylorJet) -> TaylorJet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.shape.table {
            coeffs[k] += self.coeffs[i] * o.coeffs[j];
        }
        TaylorJet {
            coeffs,
            ..self.clone()
        }
    }

    /// `sum t_k (self - self_0)^k`.
    fn compose(&self, t: &[f64]) -> TaylorJet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut r = self.constant_like(t[t.len() - 1]);
        for k in (0..t.len() - 1).rev() {
            r = r.mul(&h);
            r.coeffs[0] += t[k];
        }
        r
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn series_div(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut q = vec![0.0; n];
    for k in 0..n {
        let mut s = a[k];
        for j in 1..=k {
            s -= b[j] * q[k - j];
        }
        q[k] = s / b[0];
    }
    q
}

fn series_exp(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut e = vec![0.0; n];
    e[0] = s[0].exp();
    for k in 1..n {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * s[j] * e[k - j];
        }
        e[k] = acc / k as f64;
    }
    e
}

/// Principal branch of Lambert W by Halley iteration.
pub fn lambert_w0(a: f64) -> Result<f64, CalcError> {
    let branch = -(-1.0f64).exp();
    if a < branch - 1e-15 || a.is_nan() {
        return Err(CalcError::LambertWDomain(a));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let mut w = if a < -0.25 {
        let p = (2.0 * (std::f64::consts::E * a + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0
    } else if a < 3.0 {
        (1.0 + a).ln() * 0.75
    } else {
        let l = a.ln();
        l - l.ln()
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - a;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

fn lambert_series(a0: f64, d: usize) -> Result<Vec<f64>, CalcError> {
    let w0 = lambert_w0(a0)?;
    if (w0 + 1.0).abs() < 1e-12 && d > 0 {
        return Err(CalcError::LambertWDomain(a0));
    }
    let mut s = vec![0.0; d + 1];
    s[0] = w0;
    let mut target = vec![0.0; d + 1];
    target[0] = a0;
    if d >= 1 {
        target[1] = 1.0;
    }
    // Newton on truncated series; each sweep doubles the number of correct terms
    for _ in 0..(d + 2) {
        let e = series_exp(&s);
        let f: Vec<f64> = series_mul(&s, &e)
            .iter()
            .zip(&target)
            .map(|(x, y)| x - y)
            .collect();
        let mut onep = s.clone();
        onep[0] += 1.0;
        let fp = series_mul(&e, &onep);
        let step = series_div(&f, &fp);
        for (x, y) in s.iter_mut().zip(&step) {
            *x -= y;
        }
    }
    Ok(s)
}

fn pow_coeffs(a0: f64, r: &Q, d: usize) -> Result<Vec<f64>, CalcError> {
    let rf = r.to_f64().unwrap();
    if a0 == 0.0 {
        if r.is_integer() && !r.is_negative() {
            let n = r.to_integer().to_usize().unwrap();
            let mut t = vec![0.0; d + 1];
            if n <= d {
                t[n] = 1.0;
            }
            return Ok(t);
        }
        return Err(CalcError::DivisionByZeroAtPoint);
    }
    let odd = !(r.denom() % 2u32 == 0u32.into());
    let base_pow = |s: f64| -> Result<f64, CalcError> {
        if a0 > 0.0 {
            Ok(a0.powf(s))
        } else if r.is_integer() {
            Ok(a0.powi(s.round() as i32))
        } else if odd {
            // real root of a negative base: sign follows the numerator parity
            let q = r.denom().to_f64().unwrap();
            let num = (s * q).round() as i64;
            let sign = if num % 2 == 0 { 1.0 } else { -1.0 };
            Ok(sign * (-a0).powf(s))
        } else {
            Err(CalcError::Unsupported(format!(
                "even root of negative value {a0}"
            )))
        }
    };
    let mut t = Vec::with_capacity(d + 1);
    let mut binom = 1.0;
    for k in 0..=d {
        t.push(binom * base_pow(rf - k as f64)?);
        binom *= (rf - k as f64) / (k + 1) as f64;
    }
    Ok(t)
}

struct Evaluator<'a> {
    shape: Arc<Shape>,
    vars: Arc<Vec<String>>,
    point: &'a BTreeMap<String, f64>,
    fns: &'a FnTable,
    memo: HashMap<Expr, TaylorJet>,
}

impl Evaluator<'_> {
    fn constant(&self, c: f64) -> TaylorJet {
        let mut coeffs = vec![0.0; self.shape.monos.len()];
        coeffs[0] = c;
        TaylorJet {
            shape: self.shape.clone(),
            vars: self.vars.clone(),
            coeffs,
        }
    }

    fn lookup(&self, key: &str) -> Result<f64, CalcError> {
        self.point
            .get(key)
            .copied()
            .ok_or_else(|| CalcError::Unbound(key.to_string()))
    }

    fn eval(&mut self, e: &Expr) -> Result<TaylorJet, CalcError> {
        if let Some(j) = self.memo.get(e) {
            return Ok(j.clone());
        }
        let d = self.shape.d;
        let out = match e.node() {
            Node::Num(v) => self.constant(v.to_f64().unwrap()),
            Node::Var(n) => {
                let mut j = self.constant(self.lookup(n)?);
                if let Some(i) = self.vars.iter().position(|x| **x == **n) {
                    if d > 0 {
                        let mut m = vec![0u32; self.shape.n];
                        m[i] = 1;
                        j.coeffs[self.shape.index[&m]] = 1.0;
                    }
                }
                j
            }
            Node::Param(n) => self.constant(self.lookup(n)?),
            Node::Jet(_) => self.constant(self.lookup(&print(e))?),
            Node::Func { name, order, arg } => {
                let a = self.eval(arg)?;
                let f = self
                    .fns
                    .get(&**name)
                    .ok_or_else(|| CalcError::Unbound(name.to_string()))?;
                let n = *order as usize;
                let ds = f(a.value(), n + d);
                if ds.len() < n + d + 1 {
                    return Err(CalcError::Unsupported(format!("{name} lacks derivatives")));
                }
                let t: Vec<f64> = (0..=d).map(|k| ds[n + k] / factorial(k)).collect();
                a.compose(&t)
            }
            Node::Add(ts) => {
                let mut acc = self.constant(0.0);
                for t in ts {
                    acc = acc.add(&self.eval(t)?);
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = self.constant(1.0);
                for f in fs {
                    acc = acc.mul(&self.eval(f)?);
                }
                acc
            }
            Node::Pow(b, r) => {
                let a = self.eval(b)?;
                if r == &Q::from_integer(2.into()) {
                    a.mul(&a)
                } else {
                    a.compose(&pow_coeffs(a.value(), r, d)?)
                }
            }
            Node::Exp(x) => {
                let a = self.eval(x)?;
                let e0 = a.value().exp();
                a.compose(&(0..=d).map(|k| e0 / factorial(k)).collect::<Vec<_>>())
            }
            Node::Ln(x) => {
                let a = self.eval(x)?;
                let a0 = a.value();
                if a0 <= 0.0 {
                    return Err(CalcError::Unsupported(format!(
                        "ln of non-positive value {a0}"
                    )));
                }
                let mut t = vec![a0.ln()];
                for k in 1..=d {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    t.push(sign / (k as f64 * a0.powi(k as i32)));
                }
                a.compose(&t)
            }
            Node::LambertW(x) => {
                let a = self.eval(x)?;
                a.compose(&lambert_series(a.value(), d)?)
            }
        };
        if out.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CalcError::DivisionByZeroAtPoint);
        }
        self.memo.insert(e.clone(), out.clone());
        Ok(out)
    }
}

/// Evaluates `e` as a Taylor jet in the variables `seeds` around `point`.
/// `point` must also bind every other variable, parameter or jet (by its
/// printed name) occurring in `e`.
pub fn eval_jet(
    e: &Expr,
    seeds: &[&str],
    point: &BTreeMap<String, f64>,
    degree: usize,
    fns: &FnTable,
) -> Result<TaylorJet, CalcError> {
    let shape = Arc::new(Shape::new(seeds.len(), degree));
    let vars = Arc::new(seeds.iter().map(|s| s.to_string()).collect());
    let mut ev = Evaluator {
        shape,
        vars,
        point,
        fns,
        memo: HashMap::new(),
    };
    ev.eval(e)
}

pub fn eval_f64(e: &Expr, point: &BTreeMap<String, f64>, fns: &FnTable) -> Result<f64, CalcError> {
    Ok(eval_jet(e, &[], point, 0, fns)?.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn pt(xs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        xs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn lambert_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        let om = lambert_w0(1.0).unwrap();
        assert!((om * om.exp() - 1.0).abs() < 1e-14);
        assert!(lambert_w0(-0.5).is_err());
        for a in [-0.36, -0.2, 0.1, 0.5, 1.0, 2.0, 10.0, 1e6] {
            let w = lambert_w0(a).unwrap();
            assert!((w * w.exp() - a).abs() <= 1e-13 * a.abs().max(1.0), "{a}");
        }
    }

    #[test]
    fn jet_of_w() {
        let e = parse("W(x)").unwrap();
        let j = eval_jet(
            &e,
            &["x"],
            &pt(&[("x", std::f64::consts::E)]),
            3,
            &FnTable::new(),
        )
        .unwrap();
        assert!((j.value() - 1.0).abs() < 1e-15);
        // W'(e) = 1/(2e), W''(e) = -3/(8 e^2)
        let e1 = std::f64::consts::E;
        assert!((j.derivative(&["x"]) - 1.0 / (2.0 * e1)).abs() < 1e-13);
        assert!((j.derivative(&["x", "x"]) + 3.0 / (8.0 * e1 * e1)).abs() < 1e-13);
        let j0 = eval_jet(&e, &["x"], &pt(&[("x", 0.0)]), 2, &FnTable::new()).unwrap();
        assert_eq!(j0.value(), 0.0);
    }

    #[test]
    fn mixed_partials() {
        let e = parse("exp(x*t) + x^3*y^(1/2)").unwrap();
        let j = eval_jet(
            &e,
            &["t", "x", "y"],
            &pt(&[("t", 0.5), ("x", 1.5), ("y", 4.0)]),
            2,
            &FnTable::new(),
        )
        .unwrap();
        let want = (1.0 + 0.75) * (0.75f64).exp();
        assert!((j.derivative(&["x", "t"]) - want).abs() < 1e-12);
        assert!((j.derivative(&["y", "y"]) - 3.375 * (-0.25) * 4f64.powf(-1.5)).abs() < 1e-12);
    }

    #[test]
    fn opaque_table() {
        let mut fns = FnTable::new();
        fns.insert(
            "g".into(),
            Arc::new(|x: f64, k: usize| (0..=k).map(|_| x.exp()).collect()),
        );
        let e = parse("g'(2*t)").unwrap();
        let j = eval_jet(&e, &["t"], &pt(&[("t", 0.3)]), 1, &fns).unwrap();
        assert!((j.derivative(&["t"]) - 2.0 * 0.6f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn division_by_zero() {
        let e = parse("1/x").unwrap();
        assert_eq!(
            eval_f64(&e, &pt(&[("x", 0.0)]), &FnTable::new()),
            Err(CalcError::DivisionByZeroAtPoint)
        );
    }
}
