//! Immutable expression trees with light construction-time simplification.
//!
//! Deciding equality is left to the canonical form in [`canonical`]; the
//! constructors here only flatten, fold constants and merge like terms so
//! that trees stay small and print deterministically.

pub mod canonical;
pub mod poly;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use canonical::{collect, is_zero, normalize, normalize_partial, simplify, CanonicalForm};

pub type Q = BigRational;
pub type Name = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("unsupported node: {0}")]
    UnsupportedNode(String),
    #[error("expression is not polynomial in {0}")]
    NotPolynomialInAtoms(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cyclic binding through {0}")]
    CyclicBinding(String),
}

/// Derivative of a dependent variable. `index` is kept sorted so mixed
/// partials compare equal regardless of the order they were taken in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Jet {
    pub dep: Name,
    pub index: Vec<Name>,
    /// Printed with prime marks (`w''`) rather than `D(u,x,t)`.
    pub primed: bool,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.index.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Num(Q),
    Var(Name),
    Param(Name),
    Jet(Jet),
    Func { name: Name, order: u32, arg: Expr },
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Q),
    Exp(Expr),
    Ln(Expr),
    LambertW(Expr),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}
impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parser::print(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parser::print(self))
    }
}

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn rank(n: &Node) -> u8 {
    match n {
        Node::Num(_) => 0,
        Node::Var(_) => 1,
        Node::Param(_) => 2,
        Node::Jet(_) => 3,
        Node::Func { .. } => 4,
        Node::Exp(_) => 5,
        Node::Ln(_) => 6,
        Node::LambertW(_) => 7,
        Node::Pow(..) => 8,
        Node::Mul(_) => 9,
        Node::Add(_) => 10,
    }
}

impl Expr {
    fn raw(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(v: Q) -> Expr {
        Expr::raw(Node::Num(v))
    }
    pub fn int(n: i64) -> Expr {
        Expr::num(q(n))
    }
    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::num(qr(n, d))
    }
    pub fn zero() -> Expr {
        Expr::int(0)
    }
    pub fn one() -> Expr {
        Expr::int(1)
    }
    pub fn var(name: &str) -> Expr {
        Expr::raw(Node::Var(name.into()))
    }
    pub fn param(name: &str) -> Expr {
        Expr::raw(Node::Param(name.into()))
    }
    /// Jet atom of a multi-variable dependent, e.g. `jet("u", &["x","t"])`.
    pub fn jet(dep: &str, index: &[&str]) -> Expr {
        let mut idx: Vec<Name> = index.iter().map(|s| Name::from(*s)).collect();
        idx.sort();
        Expr::raw(Node::Jet(Jet {
            dep: dep.into(),
            index: idx,
            primed: false,
        }))
    }
    /// n-th derivative of a single-variable dependent, printed with primes.
    pub fn ode_jet(dep: &str, indep: &str, n: usize) -> Expr {
        Expr::raw(Node::Jet(Jet {
            dep: dep.into(),
            index: vec![Name::from(indep); n],
            primed: true,
        }))
    }
    pub fn jet_from(j: Jet) -> Expr {
        let mut j = j;
        j.index.sort();
        Expr::raw(Node::Jet(j))
    }
    pub fn func(name: &str, order: u32, arg: Expr) -> Expr {
        Expr::raw(Node::Func {
            name: name.into(),
            order,
            arg,
        })
    }

    pub fn as_num(&self) -> Option<&Q> {
        match self.node() {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }
    pub fn is_num(&self) -> bool {
        matches!(self.node(), Node::Num(_))
    }
    pub fn is_zero_literal(&self) -> bool {
        self.as_num().is_some_and(|v| v.is_zero())
    }
    pub fn is_one_literal(&self) -> bool {
        self.as_num().is_some_and(|v| v.is_one())
    }
    pub fn is_atom(&self) -> bool {
        matches!(
            self.node(),
            Node::Var(_) | Node::Param(_) | Node::Jet(_) | Node::Func { .. }
        )
    }
    pub fn name(&self) -> Option<&str> {
        match self.node() {
            Node::Var(n) | Node::Param(n) => Some(n),
            Node::Func { name, .. } => Some(name),
            Node::Jet(j) => Some(&j.dep),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(v) | Node::Mul(v) => v.clone(),
            Node::Pow(b, _) => vec![b.clone()],
            Node::Exp(a) | Node::Ln(a) | Node::LambertW(a) => vec![a.clone()],
            Node::Func { arg, .. } => vec![arg.clone()],
            _ => vec![],
        }
    }

    // ---- constructors with simplification ----

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            match t.node() {
                Node::Add(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(t),
            }
        }
        let mut constant = Q::zero();
        let mut acc: BTreeMap<Expr, Q> = BTreeMap::new();
        for t in flat {
            match t.node() {
                Node::Num(v) => constant += v,
                _ => {
                    let (c, rest) = t.split_coeff();
                    *acc.entry(rest).or_insert_with(Q::zero) += c;
                }
            }
        }
        let mut out: Vec<Expr> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| Expr::with_coeff(c, rest))
            .collect();
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Add(out)),
        }
    }

    /// Splits `c*rest` into the rational coefficient and the remaining term.
    pub fn split_coeff(&self) -> (Q, Expr) {
        match self.node() {
            Node::Num(v) => (v.clone(), Expr::one()),
            Node::Mul(fs) => {
                if let Some(c) = fs[0].as_num() {
                    let rest: Vec<Expr> = fs[1..].to_vec();
                    let rest = if rest.len() == 1 {
                        rest.into_iter().next().unwrap()
                    } else {
                        Expr::raw(Node::Mul(rest))
                    };
                    (c.clone(), rest)
                } else {
                    (Q::one(), self.clone())
                }
            }
            _ => (Q::one(), self.clone()),
        }
    }

    fn with_coeff(c: Q, rest: Expr) -> Expr {
        if c.is_one() {
            return rest;
        }
        if rest.is_one_literal() {
            return Expr::num(c);
        }
        let mut fs = vec![Expr::num(c)];
        match rest.node() {
            Node::Mul(inner) => fs.extend(inner.iter().cloned()),
            _ => fs.push(rest),
        }
        Expr::raw(Node::Mul(fs))
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len());
        for f in factors {
            match f.node() {
                Node::Mul(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(f),
            }
        }
        let mut coeff = Q::one();
        let mut acc: BTreeMap<Expr, Q> = BTreeMap::new();
        let mut num_bases: BTreeMap<Q, Q> = BTreeMap::new();
        for f in flat {
            match f.node() {
                Node::Num(v) => {
                    if v.is_zero() {
                        return Expr::zero();
                    }
                    coeff *= v;
                }
                Node::Pow(b, e) => {
                    if let Some(bv) = b.as_num() {
                        *num_bases.entry(bv.clone()).or_insert_with(Q::zero) += e;
                    } else {
                        *acc.entry(b.clone()).or_insert_with(Q::zero) += e;
                    }
                }
                _ => *acc.entry(f).or_insert_with(Q::zero) += Q::one(),
            }
        }
        Expr::mul_finish(coeff, acc, num_bases)
    }

    fn mul_finish(mut coeff: Q, acc: BTreeMap<Expr, Q>, num_bases: BTreeMap<Q, Q>) -> Expr {
        let mut out: Vec<Expr> = Vec::new();
        for (b, e) in num_bases {
            let p = Expr::pow(Expr::num(b), e);
            match p.node() {
                Node::Num(v) => coeff *= v,
                Node::Mul(fs) => {
                    for f in fs {
                        match f.node() {
                            Node::Num(v) => coeff *= v,
                            _ => out.push(f.clone()),
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        for (b, e) in acc {
            if e.is_zero() {
                continue;
            }
            let p = if e.is_one() { b } else { Expr::pow(b, e) };
            match p.node() {
                Node::Num(v) => coeff *= v,
                _ => out.push(p),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        out.sort();
        // c*(a+b) distributes so that numeric multiples of sums cancel
        if out.len() == 1 && !coeff.is_one() {
            if let Node::Add(terms) = out[0].node() {
                let c = Expr::num(coeff);
                return Expr::add(
                    terms
                        .iter()
                        .map(|t| Expr::mul(vec![c.clone(), t.clone()]))
                        .collect(),
                );
            }
        }
        let mut fs = Vec::with_capacity(out.len() + 1);
        if !coeff.is_one() {
            fs.push(Expr::num(coeff));
        }
        fs.extend(out);
        match fs.len() {
            0 => Expr::one(),
            1 => fs.pop().unwrap(),
            _ => Expr::raw(Node::Mul(fs)),
        }
    }

    pub fn pow(base: Expr, e: Q) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return base;
        }
        match base.node() {
            Node::Num(v) => num_pow(v, &e),
            Node::Pow(b, e2) => Expr::pow(b.clone(), e2 * &e),
            Node::Mul(fs) => {
                Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), e.clone())).collect())
            }
            Node::Exp(a) => Expr::exp(Expr::mul(vec![Expr::num(e), a.clone()])),
            _ => Expr::raw(Node::Pow(base, e)),
        }
    }

    pub fn powi(base: Expr, n: i64) -> Expr {
        Expr::pow(base, q(n))
    }

    pub fn sqrt(base: Expr) -> Expr {
        Expr::pow(base, qr(1, 2))
    }

    pub fn recip(&self) -> Expr {
        Expr::pow(self.clone(), q(-1))
    }

    pub fn exp(a: Expr) -> Expr {
        match a.node() {
            Node::Num(v) if v.is_zero() => Expr::one(),
            Node::Ln(b) => b.clone(),
            Node::LambertW(b) => Expr::mul(vec![b.clone(), Expr::lambert_w(b.clone()).recip()]),
            Node::Add(ts) => Expr::mul(ts.iter().map(|t| Expr::exp(t.clone())).collect()),
            Node::Mul(fs) if fs.len() == 2 && fs[0].is_num() => {
                let c = fs[0].as_num().unwrap().clone();
                match fs[1].node() {
                    Node::Ln(b) => Expr::pow(b.clone(), c),
                    Node::LambertW(b) if c.is_integer() => {
                        let inner = Expr::mul(vec![b.clone(), Expr::lambert_w(b.clone()).recip()]);
                        Expr::pow(inner, c)
                    }
                    _ => Expr::raw(Node::Exp(a)),
                }
            }
            _ => Expr::raw(Node::Exp(a)),
        }
    }

    pub fn ln(a: Expr) -> Expr {
        match a.node() {
            Node::Num(v) if v.is_one() => Expr::zero(),
            Node::Exp(b) => b.clone(),
            Node::Pow(b, e) => Expr::mul(vec![Expr::num(e.clone()), Expr::ln(b.clone())]),
            Node::Mul(fs) => Expr::add(fs.iter().map(|f| Expr::ln(f.clone())).collect()),
            _ => Expr::raw(Node::Ln(a)),
        }
    }

    pub fn lambert_w(a: Expr) -> Expr {
        if a.is_zero_literal() {
            return Expr::zero();
        }
        Expr::raw(Node::LambertW(a))
    }

    /// Rebuilds a node of the same shape from new children.
    pub fn rebuild(&self, ch: Vec<Expr>) -> Expr {
        let mut it = ch.into_iter();
        match self.node() {
            Node::Add(_) => Expr::add(it.collect()),
            Node::Mul(_) => Expr::mul(it.collect()),
            Node::Pow(_, e) => Expr::pow(it.next().unwrap(), e.clone()),
            Node::Exp(_) => Expr::exp(it.next().unwrap()),
            Node::Ln(_) => Expr::ln(it.next().unwrap()),
            Node::LambertW(_) => Expr::lambert_w(it.next().unwrap()),
            Node::Func { name, order, .. } => Expr::raw(Node::Func {
                name: name.clone(),
                order: *order,
                arg: it.next().unwrap(),
            }),
            _ => self.clone(),
        }
    }

    /// Pre-order replacement: `f` is tried on every node before descending.
    pub fn replace(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = f(self) {
            return r;
        }
        let ch = self.children();
        if ch.is_empty() {
            return self.clone();
        }
        let new: Vec<Expr> = ch.iter().map(|c| c.replace(f)).collect();
        if new.iter().zip(ch.iter()).all(|(a, b)| a == b) {
            return self.clone();
        }
        self.rebuild(new)
    }

    /// Simultaneous substitution of atoms (or any subexpression) by expressions.
    pub fn subs(&self, bindings: &HashMap<Expr, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        self.replace(&mut |e| bindings.get(e).cloned())
    }

    pub fn subs1(&self, from: &Expr, to: &Expr) -> Expr {
        self.replace(&mut |e| if e == from { Some(to.clone()) } else { None })
    }

    pub fn contains(&self, target: &Expr) -> bool {
        if self == target {
            return true;
        }
        self.children().iter().any(|c| c.contains(target))
    }

    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        self.children().iter().any(|c| c.any(pred))
    }

    /// Variables, parameters, jets and opaque-function atoms occurring in `self`
    /// (including inside function arguments).
    pub fn atoms(&self) -> BTreeSet<Expr> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Expr>) {
        if self.is_atom() {
            out.insert(self.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    pub fn jets(&self) -> BTreeSet<Jet> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Node::Jet(j) = e.node() {
                out.insert(j.clone());
            }
        });
        out
    }

    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn depends_on_name(&self, name: &str) -> bool {
        self.any(&|e| match e.node() {
            Node::Var(n) | Node::Param(n) => &**n == name,
            Node::Jet(j) => &*j.dep == name,
            _ => false,
        })
    }

    /// Drops `(k0^2 + c3^2)`-style additive structure into a flat term list.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ => vec![self.clone()],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

impl PartialOrd for Jet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Jet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dep
            .cmp(&other.dep)
            .then(self.index.len().cmp(&other.index.len()))
            .then(self.index.cmp(&other.index))
            .then(self.primed.cmp(&other.primed))
    }
}

fn factor_list(e: &Expr) -> (Q, Vec<(Expr, Q)>) {
    match e.node() {
        Node::Mul(fs) => {
            let mut c = Q::one();
            let mut out = Vec::new();
            for f in fs {
                match f.node() {
                    Node::Num(v) => c *= v,
                    Node::Pow(b, p) => out.push((b.clone(), p.clone())),
                    _ => out.push((f.clone(), Q::one())),
                }
            }
            (c, out)
        }
        Node::Pow(b, p) => (Q::one(), vec![(b.clone(), p.clone())]),
        _ => (Q::one(), vec![(e.clone(), Q::one())]),
    }
}

fn cmp_atomic(a: &Expr, b: &Expr) -> Ordering {
    let (ra, rb) = (rank(a.node()), rank(b.node()));
    if ra != rb {
        return ra.cmp(&rb);
    }
    match (a.node(), b.node()) {
        (Node::Num(x), Node::Num(y)) => x.cmp(y),
        (Node::Var(x), Node::Var(y)) | (Node::Param(x), Node::Param(y)) => x.cmp(y),
        (Node::Jet(x), Node::Jet(y)) => x.cmp(y),
        (
            Node::Func {
                name: n1,
                order: o1,
                arg: a1,
            },
            Node::Func {
                name: n2,
                order: o2,
                arg: a2,
            },
        ) => n1.cmp(n2).then(o1.cmp(o2)).then_with(|| a1.cmp(a2)),
        (Node::Exp(x), Node::Exp(y))
        | (Node::Ln(x), Node::Ln(y))
        | (Node::LambertW(x), Node::LambertW(y)) => x.cmp(y),
        (Node::Add(x), Node::Add(y)) => x.cmp(y),
        _ => Ordering::Equal,
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        display_cmp(self, other).then_with(|| structural_cmp(self, other))
    }
}

/// Ordering used for printing: products compare by their factor lists so
/// `w^2` sits next to `w` and before `w'`.
fn display_cmp(a: &Expr, b: &Expr) -> Ordering {
    let prod = |e: &Expr| matches!(e.node(), Node::Mul(_) | Node::Pow(..));
    if !prod(a) && !prod(b) {
        return cmp_atomic(a, b);
    }
    if a.is_num() || b.is_num() {
        return rank(a.node()).cmp(&rank(b.node()));
    }
    let (ca, fa) = factor_list(a);
    let (cb, fb) = factor_list(b);
    for ((ba, ea), (bb, eb)) in fa.iter().zip(fb.iter()) {
        let o = ba.cmp(bb).then_with(|| ea.cmp(eb));
        if o != Ordering::Equal {
            return o;
        }
    }
    fa.len().cmp(&fb.len()).then_with(|| ca.cmp(&cb))
}

fn structural_cmp(a: &Expr, b: &Expr) -> Ordering {
    let (ra, rb) = (rank(a.node()), rank(b.node()));
    if ra != rb {
        return ra.cmp(&rb);
    }
    match (a.node(), b.node()) {
        (Node::Pow(b1, e1), Node::Pow(b2, e2)) => b1.cmp(b2).then_with(|| e1.cmp(e2)),
        (Node::Mul(x), Node::Mul(y)) | (Node::Add(x), Node::Add(y)) => x.cmp(y),
        _ => cmp_atomic(a, b),
    }
}

fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k.is_multiple_of(2) {
            return None;
        }
        return int_root(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

fn rat_pow_int(v: &Q, n: &BigInt) -> Q {
    let e = n.to_i64().expect("exponent too large");
    if e >= 0 {
        num_traits::pow(v.clone(), e as usize)
    } else {
        num_traits::pow(v.recip(), (-e) as usize)
    }
}

fn num_pow(v: &Q, e: &Q) -> Expr {
    if v.is_zero() {
        if e.is_positive() {
            return Expr::zero();
        }
        return Expr::raw(Node::Pow(Expr::num(v.clone()), e.clone()));
    }
    if v.is_one() {
        return Expr::one();
    }
    if e.is_integer() {
        return Expr::num(rat_pow_int(v, e.numer()));
    }
    let k = e.denom().to_u32().expect("root index too large");
    let (n, d) = (v.numer(), v.denom());
    if let (Some(rn), Some(rd)) = (int_root(n, k), int_root(d, k)) {
        return Expr::num(rat_pow_int(&Q::new(rn, rd), e.numer()));
    }
    // keep the fractional part of the exponent in (0,1)
    let fl = e.floor();
    let frac = e - &fl;
    let whole = rat_pow_int(v, fl.numer());
    let rad = Expr::raw(Node::Pow(Expr::num(v.clone()), frac));
    if whole.is_one() {
        rad
    } else {
        Expr::raw(Node::Mul(vec![Expr::num(whole), rad]))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![
    a,
    Expr::mul(vec![Expr::int(-1), b])
]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self])
    }
}
impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self.clone()])
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Q> for Expr {
    fn from(v: Q) -> Expr {
        Expr::num(v)
    }
}

/// Parameter-free bindings for [`Expr::subs`].
pub fn bindings<I: IntoIterator<Item = (Expr, Expr)>>(it: I) -> HashMap<Expr, Expr> {
    it.into_iter().collect()
}

/// Substitution that rejects binding chains `a -> ..b.., b -> ..a..`.
pub fn substitute(e: &Expr, b: &HashMap<Expr, Expr>) -> Result<Expr, ExprError> {
    for (k, v) in b {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v.clone()];
        while let Some(cur) = stack.pop() {
            for (k2, v2) in b {
                if k2 != k && cur.contains(k2) && seen.insert(k2.clone()) {
                    if v2.contains(k) {
                        return Err(ExprError::CyclicBinding(k.to_string()));
                    }
                    stack.push(v2.clone());
                }
            }
        }
    }
    Ok(e.subs(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }
    fn y() -> Expr {
        Expr::var("y")
    }

    #[test]
    fn like_terms_merge() {
        let e = &x() + &x();
        assert_eq!(e, Expr::int(2) * x());
        assert!((&x() - &x()).is_zero_literal());
    }

    #[test]
    fn powers_merge() {
        let e = &x() * &x();
        assert_eq!(e, Expr::powi(x(), 2));
        assert_eq!(&x() / &x(), Expr::one());
    }

    #[test]
    fn numeric_roots() {
        assert_eq!(Expr::pow(Expr::int(4), qr(1, 2)), Expr::int(2));
        assert_eq!(Expr::pow(Expr::rat(8, 27), qr(-2, 3)), Expr::rat(9, 4));
        let r = Expr::pow(Expr::int(2), qr(3, 2));
        assert_eq!(r.to_string(), "2*2^(1/2)");
    }

    #[test]
    fn exp_ln_identities() {
        assert_eq!(Expr::exp(Expr::ln(x())), x());
        assert_eq!(Expr::ln(Expr::exp(y())), y());
        assert_eq!(Expr::exp(Expr::int(3) * Expr::ln(x())), Expr::powi(x(), 3));
    }

    #[test]
    fn scalar_distributes_over_sum() {
        let s = &x() + &y();
        let e = Expr::int(3) * s.clone() - Expr::int(3) * x();
        assert_eq!(e, Expr::int(3) * y());
    }

    #[test]
    fn cyclic_binding_rejected() {
        let b = bindings([(x(), y()), (y(), x() + Expr::one())]);
        assert!(matches!(
            substitute(&x(), &b),
            Err(ExprError::CyclicBinding(_))
        ));
        let id = bindings([(x(), x())]);
        assert_eq!(substitute(&x(), &id).unwrap(), x());
    }
}
