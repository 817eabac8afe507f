use crate::expr::{Expr, Node, Q};
use num_traits::{One, Signed};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Product,
    Unary,
    Power,
    Atom,
}

/// Renders `e` in the parser grammar.
pub fn print(e: &Expr) -> String {
    let mut s = String::new();
    write(e, Prec::Sum, &mut s);
    s
}

fn rational(v: &Q) -> (String, Prec) {
    let s = if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    };
    let p = if v.is_negative() {
        Prec::Unary
    } else if v.denom().is_one() {
        Prec::Atom
    } else {
        Prec::Product
    };
    (s, p)
}

fn prec_of(e: &Expr) -> Prec {
    match e.node() {
        Node::Num(v) => rational(v).1,
        Node::Add(_) => Prec::Sum,
        Node::Mul(_) => {
            let (c, _) = e.split_coeff();
            if c.is_negative() {
                Prec::Unary
            } else {
                Prec::Product
            }
        }
        Node::Pow(_, r) if r.is_negative() => Prec::Product,
        Node::Pow(..) => Prec::Power,
        _ => Prec::Atom,
    }
}

fn write(e: &Expr, min: Prec, out: &mut String) {
    let paren = prec_of(e) < min;
    if paren {
        out.push('(');
    }
    write_bare(e, out);
    if paren {
        out.push(')');
    }
}

fn exponent(r: &Q) -> String {
    if r.denom().is_one() && !r.is_negative() {
        r.numer().to_string()
    } else {
        format!("({})", rational(r).0)
    }
}

fn write_bare(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Num(v) => out.push_str(&rational(v).0),
        Node::Var(n) | Node::Param(n) => out.push_str(n),
        Node::Jet(j) => {
            if j.primed {
                out.push_str(&j.dep);
                for _ in 0..j.index.len() {
                    out.push('\'');
                }
            } else if j.index.is_empty() {
                out.push_str(&j.dep);
            } else {
                out.push_str("D(");
                out.push_str(&j.dep);
                for i in &j.index {
                    out.push(',');
                    out.push_str(i);
                }
                out.push(')');
            }
        }
        Node::Func { name, order, arg } => {
            out.push_str(name);
            for _ in 0..*order {
                out.push('\'');
            }
            out.push('(');
            write(arg, Prec::Sum, out);
            out.push(')');
        }
        Node::Exp(a) | Node::Ln(a) | Node::LambertW(a) => {
            out.push_str(match e.node() {
                Node::Exp(_) => "exp(",
                Node::Ln(_) => "ln(",
                _ => "W(",
            });
            write(a, Prec::Sum, out);
            out.push(')');
        }
        Node::Add(ts) => {
            // lead with the first positive term when there is one
            let mut ts = ts.clone();
            if let Some(k) = ts.iter().position(|t| !t.split_coeff().0.is_negative()) {
                let lead = ts.remove(k);
                ts.insert(0, lead);
            }
            for (i, t) in ts.iter().enumerate() {
                let (c, _) = t.split_coeff();
                if i == 0 {
                    write(t, Prec::Sum, out);
                } else if c.is_negative() {
                    out.push_str(" - ");
                    write(&-t, Prec::Product, out);
                } else {
                    out.push_str(" + ");
                    write(t, Prec::Product, out);
                }
            }
        }
        Node::Pow(b, r) if r.is_negative() => {
            out.push_str("1/");
            let inv = Expr::pow(b.clone(), -r);
            write(&inv, Prec::Power, out);
        }
        Node::Pow(b, r) => {
            write(b, Prec::Atom, out);
            out.push('^');
            out.push_str(&exponent(r));
        }
        Node::Mul(fs) => write_product(fs, out),
    }
}

fn write_product(fs: &[Expr], out: &mut String) {
    let mut coeff = Q::one();
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for f in fs {
        match f.node() {
            Node::Num(v) => coeff *= v,
            Node::Pow(b, r) if r.is_negative() => den.push(Expr::pow(b.clone(), -r)),
            _ => num.push(f.clone()),
        }
    }
    if coeff.is_negative() {
        out.push('-');
        coeff = -coeff;
    }
    let mut parts: Vec<String> = Vec::new();
    if !coeff.numer().is_one() || num.is_empty() {
        parts.push(coeff.numer().to_string());
    }
    for f in &num {
        let mut s = String::new();
        write(f, Prec::Unary, &mut s);
        parts.push(s);
    }
    out.push_str(&parts.join("*"));
    let mut dparts: Vec<String> = Vec::new();
    if !coeff.denom().is_one() {
        dparts.push(coeff.denom().to_string());
    }
    let single = den.len() + dparts.len() == 1;
    for f in &den {
        let mut s = String::new();
        write(f, if single { Prec::Power } else { Prec::Unary }, &mut s);
        dparts.push(s);
    }
    if dparts.is_empty() {
        return;
    }
    out.push('/');
    if dparts.len() == 1 {
        out.push_str(&dparts[0]);
    } else {
        out.push('(');
        out.push_str(&dparts.join("*"));
        out.push(')');
    }
}
