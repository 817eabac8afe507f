//! Sparse multivariate polynomials over the rationals.

use super::Q;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

pub type Var = u32;

/// Exponent vector stored sparsely as `(var, exp)` pairs sorted by var.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(pub SmallVec<[(Var, u32); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn var(v: Var, e: u32) -> Mono {
        if e == 0 {
            return Mono::one();
        }
        let mut s = SmallVec::new();
        s.push((v, e));
        Mono(s)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exp_of(&self, v: Var) -> u32 {
        self.0.iter().find(|&&(w, _)| w == v).map_or(0, |&(_, e)| e)
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let mut out = SmallVec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < o.0.len() {
            let (a, b) = (self.0[i], o.0[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&o.0[j..]);
        Mono(out)
    }

    pub fn div(&self, o: &Mono) -> Option<Mono> {
        let mut out = SmallVec::new();
        let mut j = 0;
        for &(v, e) in &self.0 {
            if j < o.0.len() && o.0[j].0 < v {
                return None;
            }
            if j < o.0.len() && o.0[j].0 == v {
                let f = o.0[j].1;
                if f > e {
                    return None;
                }
                if e > f {
                    out.push((v, e - f));
                }
                j += 1;
            } else {
                out.push((v, e));
            }
        }
        if j < o.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    pub fn pow(&self, k: u32) -> Mono {
        Mono(self.0.iter().map(|&(v, e)| (v, e * k)).collect())
    }

    pub fn without(&self, v: Var) -> Mono {
        Mono(self.0.iter().copied().filter(|&(w, _)| w != v).collect())
    }

    pub fn gcd(&self, o: &Mono) -> Mono {
        Mono(
            self.0
                .iter()
                .filter_map(|&(v, e)| {
                    let f = o.exp_of(v);
                    (f > 0).then(|| (v, e.min(f)))
                })
                .collect(),
        )
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded lexicographic order; lower variable indices are more significant.
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.degree().cmp(&other.degree());
        if d != Ordering::Equal {
            return d;
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    pub terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn var(v: Var) -> Poly {
        Poly::term(Mono::var(v, 1), Q::one())
    }

    pub fn term(m: Mono, c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lead(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().next_back()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|&(v, _)| v))
            .collect()
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exp_of(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let (mut big, small) = if self.len() >= o.len() {
            (self.clone(), o)
        } else {
            (o.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Mono, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(a, c)| (a.mul(m), c * k)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return o.scale(&c);
        }
        if let Some(c) = o.as_constant() {
            return self.scale(&c);
        }
        let mut acc: BTreeMap<Mono, Q> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let m = ma.mul(mb);
                let c = ca * cb;
                match acc.get_mut(&m) {
                    Some(x) => *x += c,
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Poly { terms: acc }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Coefficients with respect to `v`, keyed by the exponent of `v`.
    pub fn coeffs_in(&self, v: Var) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.exp_of(v))
                .or_default()
                .terms
                .insert(m.without(v), c.clone());
        }
        out
    }

    pub fn from_coeffs_in(v: Var, cs: &BTreeMap<u32, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (&e, p) in cs {
            out = out.add(&p.mul_term(&Mono::var(v, e), &Q::one()));
        }
        out
    }

    /// Exact quotient when `d` divides `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (lm_d, lc_d) = d.lead().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut r = self.clone();
        let mut quo = Poly::zero();
        while let Some((lm_r, lc_r)) = r.lead().map(|(m, c)| (m.clone(), c.clone())) {
            let m = lm_r.div(&lm_d)?;
            let c = lc_r / &lc_d;
            r = r.sub(&d.mul_term(&m, &c));
            quo.add_term(m, c);
        }
        Some(quo)
    }

    /// Scales so the leading coefficient is one.
    pub fn monic(&self) -> Poly {
        match self.lead() {
            Some((_, c)) if !c.is_one() => self.scale(&c.recip()),
            _ => self.clone(),
        }
    }

    /// Integer-coefficient primitive form with positive leading coefficient,
    /// returned with the rational factor that was removed.
    pub fn primitive(&self) -> (Q, Poly) {
        if self.is_zero() {
            return (Q::one(), Poly::zero());
        }
        let mut g = BigInt::zero();
        let mut l = BigInt::one();
        for c in self.terms.values() {
            g = num_integer::gcd(g, c.numer().clone());
            l = num_integer::lcm(l, c.denom().clone());
        }
        let mut content = Q::new(g, l);
        if self.lead().unwrap().1.is_negative() {
            content = -content;
        }
        (content.clone(), self.scale(&content.recip()))
    }

    pub fn remap(&self, f: &dyn Fn(Var) -> Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut v: SmallVec<[(Var, u32); 4]> = m.0.iter().map(|&(x, e)| (f(x), e)).collect();
            v.sort_by_key(|p| p.0);
            out.add_term(Mono(v), c.clone());
        }
        out
    }

    /// Replaces variable `v` by the polynomial `p`.
    pub fn compose(&self, v: Var, p: &Poly) -> Poly {
        let cs = self.coeffs_in(v);
        let mut out = Poly::zero();
        let mut powers: BTreeMap<u32, Poly> = BTreeMap::new();
        for (&e, c) in &cs {
            let pe = powers.entry(e).or_insert_with(|| p.pow(e)).clone();
            out = out.add(&c.mul(&pe));
        }
        out
    }

    pub fn gcd_monomial_content(&self) -> Mono {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Mono::one();
        };
        let mut g = first.clone();
        for m in it {
            g = g.gcd(m);
            if g.is_one() {
                break;
            }
        }
        g
    }

    pub fn div_mono(&self, m: &Mono) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.div(m).expect("monomial divides"), c.clone()))
                .collect(),
        }
    }

    /// `k`-th root when `self` is a perfect power.
    pub fn nth_root(&self, k: u32) -> Option<Poly> {
        if k == 1 {
            return Some(self.clone());
        }
        let (lm, lc) = self.lead()?;
        if lm.0.iter().any(|&(_, e)| e % k != 0) {
            return None;
        }
        let rc = rat_root(lc, k)?;
        let rm = Mono(lm.0.iter().map(|&(v, e)| (v, e / k)).collect());
        let mut root = Poly::term(rm.clone(), rc.clone());
        let denom_c = Q::from_integer(BigInt::from(k)) * num_traits::pow(rc, (k - 1) as usize);
        let denom_m = rm.pow(k - 1);
        for _ in 0..=self.len() {
            let e = self.sub(&root.pow(k));
            let Some((em, ec)) = e.lead() else {
                return Some(root);
            };
            let m = em.div(&denom_m)?;
            root.add_term(m, ec / &denom_c);
        }
        None
    }

    pub fn eval_f64(&self, vals: &dyn Fn(Var) -> f64) -> f64 {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for &(v, e) in &m.0 {
                t *= vals(v).powi(e as i32);
            }
            s += t;
        }
        s
    }
}

fn rat_root(c: &Q, k: u32) -> Option<Q> {
    let root = |n: &BigInt| -> Option<BigInt> {
        if n.is_negative() {
            if k.is_multiple_of(2) {
                return None;
            }
            let r = (-n).nth_root(k);
            return (num_traits::pow(r.clone(), k as usize) == -n).then(|| -r);
        }
        let r = n.nth_root(k);
        (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
    };
    Some(Q::new(root(c.numer())?, root(c.denom())?))
}

/// Pseudo-remainder of `a` by `b` as univariate polynomials in `v`.
fn prem(a: &Poly, b: &Poly, v: Var) -> Poly {
    let db = b.degree_in(v);
    let bc = b.coeffs_in(v);
    let lb = bc.get(&db).cloned().unwrap_or_default();
    let mut r = a.clone();
    loop {
        if r.is_zero() {
            return r;
        }
        let dr = r.degree_in(v);
        if dr < db {
            return r;
        }
        let lr = r.coeffs_in(v).remove(&dr).unwrap();
        let shift = Mono::var(v, dr - db);
        r = r.mul(&lb).sub(&b.mul(&lr).mul_term(&shift, &Q::one()));
    }
}

fn content_in(p: &Poly, v: Var) -> Poly {
    let mut g = Poly::zero();
    for c in p.coeffs_in(v).values() {
        g = gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g
}

/// Monic greatest common divisor over Q.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    if a.is_monomial() || b.is_monomial() {
        let ma = a.gcd_monomial_content();
        let mb = b.gcd_monomial_content();
        return Poly::term(ma.gcd(&mb), Q::one());
    }
    if a.div_exact(b).is_some() {
        return b.monic();
    }
    if b.div_exact(a).is_some() {
        return a.monic();
    }
    let (va, vb) = (a.vars(), b.vars());
    if let Some(&v) = va.difference(&vb).next() {
        return gcd(&content_in(a, v), b);
    }
    if let Some(&v) = vb.difference(&va).next() {
        return gcd(a, &content_in(b, v));
    }
    // main variable: the one of lowest combined degree keeps the PRS short
    let v = *va
        .iter()
        .min_by_key(|&&v| a.degree_in(v) + b.degree_in(v))
        .unwrap();
    let ca = content_in(a, v);
    let cb = content_in(b, v);
    let g_c = gcd(&ca, &cb);
    let mut r0 = a.div_exact(&ca).unwrap();
    let mut r1 = b.div_exact(&cb).unwrap();
    if r0.degree_in(v) < r1.degree_in(v) {
        std::mem::swap(&mut r0, &mut r1);
    }
    while r1.degree_in(v) > 0 {
        let r = prem(&r0, &r1, v);
        if r.is_zero() {
            break;
        }
        let c = content_in(&r, v);
        r0 = r1;
        r1 = r.div_exact(&c).unwrap();
    }
    if r1.degree_in(v) == 0 {
        return g_c.monic();
    }
    let c1 = content_in(&r1, v);
    g_c.mul(&r1.div_exact(&c1).unwrap()).monic()
}
