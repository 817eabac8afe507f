//! Rational-function canonical form.
//!
//! An expression is mapped into `Q(atoms)[roots]`: symbols, parameters, jets,
//! opaque functions and elementary-function applications are independent
//! atoms. Fractional powers are handled by adjoining a root atom `rho` for each
//! base and rewriting the base through it:
//!
//! * an atom base `a` becomes `rho^q`;
//! * a sum linear in some atom `v` gets `v := (rho^q - b)/a`;
//! * rational constants split into prime radicals with `rho^q = p`.
//!
//! The first two are field embeddings, so zero-testing stays complete for them.

use super::poly::{gcd, Mono, Poly, Var};
use super::{Expr, ExprError, Node, Q};
use crate::parser::print;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};

type R<T> = Result<T, ExprError>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Plain(Expr),
    Root { base: Expr, q: u32 },
    PrimeRoot { p: BigInt, q: u32 },
}

/// Root orders needed per radical base, per power base and per integer.
type RootNeeds = (
    BTreeMap<Expr, u32>,
    BTreeMap<Expr, u32>,
    BTreeMap<BigInt, u32>,
);

impl Slot {
    fn expr(&self) -> Expr {
        match self {
            Slot::Plain(e) => e.clone(),
            Slot::Root { base, q } => {
                Expr::raw(Node::Pow(base.clone(), Q::new(1.into(), (*q).into())))
            }
            Slot::PrimeRoot { p, q } => Expr::raw(Node::Pow(
                Expr::num(Q::from_integer(p.clone())),
                Q::new(1.into(), (*q).into()),
            )),
        }
    }
    fn key(&self) -> String {
        match self {
            Slot::Plain(e) => print(e),
            _ => format!("~{}", print(&self.expr())),
        }
    }
}

/// Numerator over a list of distinct primitive denominator factors.
#[derive(Clone, Debug)]
pub(crate) struct Frac {
    num: Poly,
    den: Vec<(Poly, u32)>,
}

impl Frac {
    fn poly(p: Poly) -> Frac {
        Frac {
            num: p,
            den: vec![],
        }
    }
    fn constant(c: Q) -> Frac {
        Frac::poly(Poly::constant(c))
    }
    fn var(v: Var) -> Frac {
        Frac::poly(Poly::var(v))
    }

    fn den_poly(&self) -> Poly {
        let mut d = Poly::one();
        for (f, m) in &self.den {
            d = d.mul(&f.pow(*m));
        }
        d
    }

    fn push_factor(den: &mut Vec<(Poly, u32)>, f: Poly, m: u32) {
        if m == 0 {
            return;
        }
        if let Some(slot) = den.iter_mut().find(|(g, _)| *g == f) {
            slot.1 += m;
        } else {
            den.push((f, m));
        }
    }

    fn mul(&self, o: &Frac) -> Frac {
        let mut den = self.den.clone();
        for (f, m) in &o.den {
            Frac::push_factor(&mut den, f.clone(), *m);
        }
        let mut out = Frac {
            num: self.num.mul(&o.num),
            den,
        };
        out.cancel_monomials();
        out
    }

    fn inv(&self) -> R<Frac> {
        if self.num.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        let (c, p) = self.num.primitive();
        let m = p.gcd_monomial_content();
        let rest = p.div_mono(&m);
        let mut den = Vec::new();
        for &(v, e) in &m.0 {
            Frac::push_factor(&mut den, Poly::var(v), e);
        }
        if rest.as_constant().is_none() {
            Frac::push_factor(&mut den, rest, 1);
        }
        let num = self.den_poly().scale(&c.recip());
        Ok(Frac { num, den })
    }

    fn add(&self, o: &Frac) -> Frac {
        if self.num.is_zero() {
            return o.clone();
        }
        if o.num.is_zero() {
            return self.clone();
        }
        let mut den: Vec<(Poly, u32)> = self.den.clone();
        for (f, m) in &o.den {
            match den.iter_mut().find(|(g, _)| g == f) {
                Some(slot) => slot.1 = slot.1.max(*m),
                None => den.push((f.clone(), *m)),
            }
        }
        let lift = |fr: &Frac| -> Poly {
            let mut n = fr.num.clone();
            for (f, m) in &den {
                let have = fr.den.iter().find(|(g, _)| g == f).map_or(0, |x| x.1);
                if *m > have {
                    n = n.mul(&f.pow(m - have));
                }
            }
            n
        };
        let num = lift(self).add(&lift(o));
        let mut out = Frac { num, den };
        if out.num.is_zero() {
            out.den.clear();
        }
        out.cancel_monomials();
        out
    }

    fn powi(&self, n: i64) -> R<Frac> {
        if n >= 0 {
            let k = n as u32;
            Ok(Frac {
                num: self.num.pow(k),
                den: self.den.iter().map(|(f, m)| (f.clone(), m * k)).collect(),
            })
        } else {
            self.inv()?.powi(-n)
        }
    }

    /// Removes single-variable denominator factors that divide the numerator.
    fn cancel_monomials(&mut self) {
        if self.num.is_zero() {
            return;
        }
        let content = self.num.gcd_monomial_content();
        if content.is_one() {
            return;
        }
        let mut take = Mono::one();
        for (f, m) in self.den.iter_mut() {
            if f.len() == 1 {
                let (fm, _) = f.lead().unwrap();
                if fm.0.len() == 1 && fm.0[0].1 == 1 {
                    let v = fm.0[0].0;
                    let avail = content.exp_of(v).saturating_sub(take.exp_of(v));
                    let k = avail.min(*m);
                    if k > 0 {
                        take = take.mul(&Mono::var(v, k));
                        *m -= k;
                    }
                }
            }
        }
        if !take.is_one() {
            self.num = self.num.div_mono(&take);
            self.den.retain(|(_, m)| *m > 0);
        }
    }
}

#[derive(Clone, Debug)]
enum Factor {
    Rational(Q),
    Prime(BigInt),
    Atom(Expr),
    Poly(Expr),
    Sub(Expr),
}

#[derive(Default)]
struct Ctx {
    slots: Vec<Slot>,
    by_slot: HashMap<Slot, Var>,
    subst: HashMap<Var, Frac>,
    root_of_atom: HashMap<Expr, (Var, u32)>,
    root_of_poly: HashMap<Expr, (Var, u32)>,
    root_of_prime: HashMap<BigInt, (Var, u32)>,
    decomp: HashMap<Expr, Vec<(Factor, Q)>>,
    atom_key: HashMap<Expr, Expr>,
    cache: HashMap<Expr, Frac>,
}

fn denom_u32(e: &Q) -> u32 {
    e.denom().to_u32().expect("root index too large")
}

fn lcm32(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

fn small_factor(n: &BigInt) -> Vec<(BigInt, u32)> {
    let mut out = Vec::new();
    let mut n = n.abs();
    let mut p = BigInt::from(2);
    while &p * &p <= n && p < BigInt::from(100_000) {
        let mut k = 0;
        while (&n % &p).is_zero() {
            n /= &p;
            k += 1;
        }
        if k > 0 {
            out.push((p.clone(), k));
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

impl Ctx {
    fn slot(&mut self, s: Slot) -> Var {
        if let Some(&v) = self.by_slot.get(&s) {
            return v;
        }
        let v = self.slots.len() as Var;
        self.slots.push(s.clone());
        self.by_slot.insert(s, v);
        v
    }

    /// Key under which an atom is interned: arguments of opaque functions and
    /// elementary applications are canonicalized first.
    fn key_of(&mut self, e: &Expr) -> R<Expr> {
        if let Some(k) = self.atom_key.get(e) {
            return Ok(k.clone());
        }
        let k = match e.node() {
            Node::Func { .. } | Node::Ln(_) | Node::LambertW(_) => {
                let arg = simplify(&e.children()[0])?;
                e.rebuild(vec![arg])
            }
            _ => e.clone(),
        };
        self.atom_key.insert(e.clone(), k.clone());
        Ok(k)
    }

    fn decompose_pow(&mut self, base: &Expr, r: &Q) -> R<Vec<(Factor, Q)>> {
        let cf = normalize(base)?;
        let mut out = Vec::new();
        for (p, sign) in [(&cf.num, 1i64), (&cf.den, -1i64)] {
            let r = r * Q::from_integer(sign.into());
            let (c, prim) = p.primitive();
            if c.is_negative() && !r.is_integer() && r.denom() % 2u32 == BigInt::zero() {
                // even root of a negative content: keep as an opaque atom
                out.push((
                    Factor::Atom(Expr::raw(Node::Pow(cf.poly_expr(p), r.clone()))),
                    Q::one(),
                ));
                continue;
            }
            let c = if c.is_negative() {
                // odd root: (-1)^r is -1 or 1 depending on the numerator
                if r.numer().is_odd() {
                    out.push((Factor::Rational(-Q::one()), Q::one()));
                }
                -c
            } else {
                c
            };
            for (pr, k) in small_factor(c.numer()) {
                out.push((Factor::Prime(pr), &r * Q::from_integer(k.into())));
            }
            for (pr, k) in small_factor(c.denom()) {
                out.push((Factor::Prime(pr), -&r * Q::from_integer(k.into())));
            }
            let m = prim.gcd_monomial_content();
            for &(v, e) in &m.0 {
                let a = cf.atoms[v as usize].clone();
                let ex = &r * Q::from_integer(e.into());
                match a.node() {
                    Node::Pow(..) => out.push((Factor::Sub(Expr::pow(a, ex)), Q::one())),
                    _ => out.push((Factor::Atom(a), ex)),
                }
            }
            let rest = prim.div_mono(&m);
            if rest.as_constant().is_some() {
                continue;
            }
            let mut k = rest.total_degree();
            let mut root = None;
            while k >= 2 {
                if let Some(s) = rest.nth_root(k) {
                    root = Some((s, k));
                    break;
                }
                k -= 1;
            }
            let (s, k) = root.unwrap_or((rest, 1));
            let ex = &r * Q::from_integer(k.into());
            let se = cf.poly_expr(&s);
            if ex.is_integer() {
                out.push((Factor::Sub(se), ex));
            } else {
                out.push((Factor::Poly(se), ex));
            }
        }
        Ok(out)
    }

    fn decompose_exp(&mut self, a: &Expr) -> R<Vec<(Factor, Q)>> {
        let cf = normalize(a)?;
        let den = cf.poly_expr(&cf.den);
        let mut out = Vec::new();
        for (m, c) in &cf.num.terms {
            let mon = cf.poly_expr(&Poly::term(m.clone(), Q::one()));
            let arg = Expr::mul(vec![mon, den.recip()]);
            let ex = Expr::exp(arg);
            if matches!(ex.node(), Node::Exp(_)) {
                out.push((Factor::Atom(ex), c.clone()));
            } else if c.is_integer() {
                out.push((Factor::Sub(ex), c.clone()));
            } else {
                out.push((Factor::Sub(Expr::pow(ex, c.clone())), Q::one()));
            }
        }
        Ok(out)
    }

    fn decomposition(&mut self, e: &Expr) -> R<Vec<(Factor, Q)>> {
        if let Some(d) = self.decomp.get(e) {
            return Ok(d.clone());
        }
        let d = match e.node() {
            Node::Pow(b, r) => self.decompose_pow(b, r)?,
            Node::Exp(a) => self.decompose_exp(a)?,
            _ => unreachable!(),
        };
        self.decomp.insert(e.clone(), d.clone());
        Ok(d)
    }

    /// First pass: find every root the expression needs.
    fn scan(&mut self, e: &Expr, seen: &mut BTreeSet<Expr>, needs: &mut RootNeeds) -> R<()> {
        if !seen.insert(e.clone()) {
            return Ok(());
        }
        match e.node() {
            Node::Add(xs) | Node::Mul(xs) => {
                for x in xs {
                    self.scan(x, seen, needs)?;
                }
            }
            Node::Pow(b, r) if r.is_integer() => self.scan(b, seen, needs)?,
            Node::Pow(..) | Node::Exp(_) => {
                for (f, ex) in self.decomposition(e)? {
                    match f {
                        Factor::Rational(_) => {}
                        Factor::Prime(p) => {
                            if !ex.is_integer() {
                                let q = needs.2.entry(p).or_insert(1);
                                *q = lcm32(*q, denom_u32(&ex));
                            }
                        }
                        Factor::Atom(a) => {
                            if !ex.is_integer() {
                                let k = self.key_of(&a)?;
                                let q = needs.0.entry(k).or_insert(1);
                                *q = lcm32(*q, denom_u32(&ex));
                            }
                        }
                        Factor::Poly(p) => {
                            let q = needs.1.entry(p.clone()).or_insert(1);
                            *q = lcm32(*q, denom_u32(&ex));
                            self.scan(&p, seen, needs)?;
                        }
                        Factor::Sub(x) => self.scan(&x, seen, needs)?,
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn plan_roots(&mut self, needs: RootNeeds) -> R<()> {
        let (atoms, polys, primes) = needs;
        for (a, q) in &atoms {
            let av = self.slot(Slot::Plain(a.clone()));
            let rv = self.slot(Slot::Root {
                base: a.clone(),
                q: *q,
            });
            self.subst
                .insert(av, Frac::poly(Poly::term(Mono::var(rv, *q), Q::one())));
            self.root_of_atom.insert(a.clone(), (rv, *q));
        }
        for (p, q) in primes {
            let rv = self.slot(Slot::PrimeRoot { p: p.clone(), q });
            self.root_of_prime.insert(p, (rv, q));
        }
        let bases: Vec<(Expr, u32)> = polys.into_iter().collect();
        let mut fracs = Vec::new();
        for (b, _) in &bases {
            fracs.push(self.convert(b)?);
        }
        let var_sets: Vec<BTreeSet<Var>> = fracs
            .iter()
            .map(|f| {
                let mut s = f.num.vars();
                for (d, _) in &f.den {
                    s.extend(d.vars());
                }
                s
            })
            .collect();
        for (i, (b, q)) in bases.iter().enumerate() {
            let fr = &fracs[i];
            let mut cands: Vec<(String, Var)> = Vec::new();
            for v in fr.num.vars() {
                let plain = matches!(self.slots[v as usize], Slot::Plain(_));
                if !plain || self.subst.contains_key(&v) || fr.num.degree_in(v) != 1 {
                    continue;
                }
                if fr.den.iter().any(|(d, _)| d.vars().contains(&v)) {
                    continue;
                }
                if var_sets
                    .iter()
                    .enumerate()
                    .any(|(j, s)| j != i && s.contains(&v))
                {
                    continue;
                }
                cands.push((self.slots[v as usize].key(), v));
            }
            cands.sort();
            let rv = self.slot(Slot::Root {
                base: b.clone(),
                q: *q,
            });
            self.root_of_poly.insert(b.clone(), (rv, *q));
            if let Some(&(_, v)) = cands.first() {
                let cs = fr.num.coeffs_in(v);
                let a = cs.get(&1).cloned().unwrap_or_default();
                let rest = cs.get(&0).cloned().unwrap_or_default();
                let dp = Frac {
                    num: Poly::one(),
                    den: fr.den.clone(),
                }
                .inv()?
                .num;
                let top = dp.mul(&Poly::term(Mono::var(rv, *q), Q::one())).sub(&rest);
                let sub = Frac::poly(top).mul(&Frac::poly(a).inv()?);
                self.subst.insert(v, sub);
            }
        }
        self.cache.clear();
        Ok(())
    }

    fn atom(&mut self, e: &Expr) -> R<Frac> {
        let k = self.key_of(e)?;
        if k != *e
            && !matches!(
                k.node(),
                Node::Func { .. } | Node::Ln(_) | Node::LambertW(_)
            )
        {
            return self.convert(&k);
        }
        let v = self.slot(Slot::Plain(k));
        Ok(match self.subst.get(&v) {
            Some(f) => f.clone(),
            None => Frac::var(v),
        })
    }

    fn root_power(&mut self, rv: Var, q: u32, ex: &Q) -> R<Frac> {
        let k = ex * Q::from_integer(q.into());
        debug_assert!(k.is_integer());
        let k = k.to_integer().to_i64().unwrap();
        Frac::var(rv).powi(k)
    }

    fn convert(&mut self, e: &Expr) -> R<Frac> {
        if let Some(f) = self.cache.get(e) {
            return Ok(f.clone());
        }
        let out = match e.node() {
            Node::Num(v) => Frac::constant(v.clone()),
            Node::Var(_)
            | Node::Param(_)
            | Node::Jet(_)
            | Node::Func { .. }
            | Node::Ln(_)
            | Node::LambertW(_) => self.atom(e)?,
            Node::Add(xs) => {
                let mut acc = Frac::constant(Q::zero());
                for x in xs {
                    acc = acc.add(&self.convert(x)?);
                }
                acc
            }
            Node::Mul(xs) => {
                let mut acc = Frac::constant(Q::one());
                for x in xs {
                    acc = acc.mul(&self.convert(x)?);
                }
                acc
            }
            Node::Pow(b, r) if r.is_integer() => {
                let n = r
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| ExprError::UnsupportedNode("huge exponent".into()))?;
                self.convert(b)?.powi(n)?
            }
            Node::Pow(..) | Node::Exp(_) => {
                let mut acc = Frac::constant(Q::one());
                for (f, ex) in self.decomposition(e)? {
                    let part = match f {
                        Factor::Rational(c) => Frac::constant(c),
                        Factor::Prime(p) => {
                            if ex.is_integer() {
                                let n = ex.to_integer().to_i64().unwrap();
                                Frac::constant(Q::from_integer(p)).powi(n)?
                            } else {
                                let (rv, q) = self.root_of_prime[&p];
                                self.root_power(rv, q, &ex)?
                            }
                        }
                        Factor::Atom(a) => {
                            if ex.is_integer() {
                                let n = ex.to_integer().to_i64().unwrap();
                                self.atom(&a)?.powi(n)?
                            } else {
                                let k = self.key_of(&a)?;
                                let (rv, q) = self.root_of_atom[&k];
                                self.root_power(rv, q, &ex)?
                            }
                        }
                        Factor::Poly(p) => {
                            let (rv, q) = self.root_of_poly[&p];
                            self.root_power(rv, q, &ex)?
                        }
                        Factor::Sub(x) => {
                            let n = ex.to_integer().to_i64().unwrap();
                            self.convert(&x)?.powi(n)?
                        }
                    };
                    acc = acc.mul(&part);
                }
                acc
            }
        };
        self.cache.insert(e.clone(), out.clone());
        Ok(out)
    }

    /// Applies `rho^q = p` for prime radicals and clears them from denominators.
    fn reduce_primes(&self, f: Frac) -> Frac {
        if self.root_of_prime.is_empty() {
            return f;
        }
        let mut f = f;
        let mut extra = Poly::one();
        let mut den = Vec::new();
        for (d, m) in f.den.drain(..) {
            let prime = self
                .root_of_prime
                .values()
                .find(|(rv, _)| d == Poly::var(*rv));
            match prime {
                Some(&(rv, q)) => {
                    let up = (q - m % q) % q;
                    let p = match &self.slots[rv as usize] {
                        Slot::PrimeRoot { p, .. } => p.clone(),
                        _ => unreachable!(),
                    };
                    let div = num_traits::pow(Q::from_integer(p), m.div_ceil(q) as usize);
                    extra = extra.mul(&Poly::term(Mono::var(rv, up), div.recip()));
                }
                None => den.push((d, m)),
            }
        }
        let num = f.num.mul(&extra);
        let mut out = Poly::zero();
        for (m, c) in &num.terms {
            let mut c = c.clone();
            let mut mono = m.clone();
            for &(rv, q) in self.root_of_prime.values() {
                let e = mono.exp_of(rv);
                if e >= q {
                    let p = match &self.slots[rv as usize] {
                        Slot::PrimeRoot { p, .. } => p.clone(),
                        _ => unreachable!(),
                    };
                    c *= num_traits::pow(Q::from_integer(p), (e / q) as usize);
                    mono = mono.without(rv).mul(&Mono::var(rv, e % q));
                }
            }
            out = out.add(&Poly::term(mono, c));
        }
        Frac { num: out, den }
    }

    fn run(e: &Expr) -> R<(Ctx, Frac)> {
        let mut ctx = Ctx::default();
        let mut needs = Default::default();
        ctx.scan(e, &mut BTreeSet::new(), &mut needs)?;
        ctx.plan_roots(needs)?;
        let f = ctx.convert(e)?;
        let f = ctx.reduce_primes(f);
        Ok((ctx, f))
    }

    fn poly_to_expr(&self, p: &Poly) -> Expr {
        poly_expr(&self.slots.iter().map(|s| s.expr()).collect::<Vec<_>>(), p)
    }
}

fn poly_expr(atoms: &[Expr], p: &Poly) -> Expr {
    let mut terms = Vec::with_capacity(p.len());
    for (m, c) in p.terms.iter().rev() {
        let mut fs = vec![Expr::num(c.clone())];
        for &(v, e) in &m.0 {
            fs.push(Expr::pow(
                atoms[v as usize].clone(),
                Q::from_integer(e.into()),
            ));
        }
        terms.push(Expr::mul(fs));
    }
    Expr::add(terms)
}

/// Reduced numerator/denominator pair over sorted atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    pub atoms: Vec<Expr>,
    pub num: Poly,
    pub den: Poly,
}

impl CanonicalForm {
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn poly_expr(&self, p: &Poly) -> Expr {
        poly_expr(&self.atoms, p)
    }

    pub fn numerator(&self) -> Expr {
        self.poly_expr(&self.num)
    }

    pub fn denominator(&self) -> Expr {
        self.poly_expr(&self.den)
    }

    pub fn to_expr(&self) -> Expr {
        let n = self.numerator();
        if self.den.is_one() {
            return n;
        }
        Expr::mul(vec![n, self.denominator().recip()])
    }

    pub fn as_constant(&self) -> Option<Q> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    /// Atoms that actually occur, as expressions.
    pub fn support(&self) -> BTreeSet<Expr> {
        let mut vs = self.num.vars();
        vs.extend(self.den.vars());
        vs.into_iter()
            .map(|v| self.atoms[v as usize].clone())
            .collect()
    }
}

fn finish(ctx: &Ctx, f: Frac, full_gcd: bool) -> CanonicalForm {
    let mut num = f.num.clone();
    let mut den = f.den_poly();
    if num.is_zero() {
        den = Poly::one();
    } else if den.as_constant().is_none() {
        let mut rest = Vec::new();
        for (d, m) in &f.den {
            let mut left = *m;
            while left > 0 {
                match num.div_exact(d) {
                    Some(qt) => {
                        num = qt;
                        left -= 1;
                    }
                    None => break,
                }
            }
            if left > 0 {
                rest.push((d.clone(), left));
            }
        }
        den = Frac {
            num: Poly::one(),
            den: rest,
        }
        .den_poly();
        let g = if full_gcd {
            gcd(&num, &den)
        } else {
            Poly::one()
        };
        if !g.is_one() {
            num = num.div_exact(&g).expect("gcd divides numerator");
            den = den.div_exact(&g).expect("gcd divides denominator");
        }
    }
    let lc = den.lead().map(|(_, c)| c.clone()).unwrap_or_else(Q::one);
    if !lc.is_one() {
        num = num.scale(&lc.recip());
        den = den.scale(&lc.recip());
    }
    let mut used: BTreeSet<Var> = num.vars();
    used.extend(den.vars());
    let mut order: Vec<(String, Var)> = used
        .iter()
        .map(|&v| (ctx.slots[v as usize].key(), v))
        .collect();
    order.sort();
    let mut map = HashMap::new();
    let mut atoms = Vec::new();
    for (i, (_, v)) in order.iter().enumerate() {
        map.insert(*v, i as Var);
        atoms.push(ctx.slots[*v as usize].expr());
    }
    let num = num.remap(&|v| map[&v]);
    let den = den.remap(&|v| map[&v]);
    let mut cf = CanonicalForm { atoms, num, den };
    // the leading coefficient depends on the variable order; renormalize
    let lc = cf.den.lead().map(|(_, c)| c.clone()).unwrap_or_else(Q::one);
    if !lc.is_one() {
        cf.num = cf.num.scale(&lc.recip());
        cf.den = cf.den.scale(&lc.recip());
    }
    cf
}

pub fn normalize(e: &Expr) -> Result<CanonicalForm, ExprError> {
    let (ctx, f) = Ctx::run(e)?;
    Ok(finish(&ctx, f, true))
}

/// Like [`normalize`], but only cancels the denominator factors met while
/// building the form; skips the polynomial gcd, so numerator and
/// denominator may share a factor.
pub fn normalize_partial(e: &Expr) -> Result<CanonicalForm, ExprError> {
    let (ctx, f) = Ctx::run(e)?;
    Ok(finish(&ctx, f, false))
}

pub fn is_zero(e: &Expr) -> Result<bool, ExprError> {
    if let Some(v) = e.as_num() {
        return Ok(v.is_zero());
    }
    let (_, f) = Ctx::run(e)?;
    Ok(f.num.is_zero())
}

/// `normalize` rendered back to an expression.
pub fn simplify(e: &Expr) -> Result<Expr, ExprError> {
    if e.is_num() || e.is_atom() {
        return Ok(e.clone());
    }
    Ok(normalize(e)?.to_expr())
}

/// Coefficients of `e` as a polynomial in `atoms`, keyed by exponent vectors.
/// Coefficients are not gcd-reduced; pass them through [`simplify`] for display.
pub fn collect(e: &Expr, atoms: &[Expr]) -> Result<BTreeMap<Vec<u32>, Expr>, ExprError> {
    let (mut ctx, f) = Ctx::run(e)?;
    let mut ids = Vec::new();
    for a in atoms {
        let v = ctx.slot(Slot::Plain(a.clone()));
        if ctx.subst.contains_key(&v) {
            return Err(ExprError::NotPolynomialInAtoms(print(a)));
        }
        ids.push(v);
    }
    for (i, s) in ctx.slots.iter().enumerate() {
        if ids.contains(&(i as Var)) {
            continue;
        }
        let inner = match s {
            Slot::Plain(x) => x.clone(),
            Slot::Root { base, .. } => base.clone(),
            Slot::PrimeRoot { .. } => continue,
        };
        let used = f.num.vars().contains(&(i as Var))
            || f.den.iter().any(|(d, _)| d.vars().contains(&(i as Var)));
        if used && atoms.iter().any(|a| inner.contains(a)) {
            return Err(ExprError::NotPolynomialInAtoms(print(&inner)));
        }
    }
    for (d, _) in &f.den {
        if ids.iter().any(|v| d.vars().contains(v)) {
            return Err(ExprError::NotPolynomialInAtoms(print(&ctx.poly_to_expr(d))));
        }
    }
    let mut groups: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
    for (m, c) in &f.num.terms {
        let key: Vec<u32> = ids.iter().map(|&v| m.exp_of(v)).collect();
        let mut rest = m.clone();
        for &v in &ids {
            rest = rest.without(v);
        }
        groups.entry(key).or_default().terms.insert(rest, c.clone());
    }
    let den = ctx.poly_to_expr(&f.den_poly());
    Ok(groups
        .into_iter()
        .map(|(k, p)| (k, Expr::mul(vec![ctx.poly_to_expr(&p), den.recip()])))
        .collect())
}

/// Rebuilds `sum(coeff * prod(atom^exp))` from [`collect`] output.
pub fn reconstruct(atoms: &[Expr], coeffs: &BTreeMap<Vec<u32>, Expr>) -> Expr {
    Expr::add(
        coeffs
            .iter()
            .map(|(k, c)| {
                let mut fs = vec![c.clone()];
                for (a, &e) in atoms.iter().zip(k) {
                    fs.push(Expr::powi(a.clone(), e as i64));
                }
                Expr::mul(fs)
            })
            .collect(),
    )
}

/// True when `a - b` normalizes to zero.
pub fn equal(a: &Expr, b: &Expr) -> Result<bool, ExprError> {
    is_zero(&(a - b))
}
