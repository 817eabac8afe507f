//! Text <-> [`Expr`] conversion.
//!
//! Grammar (loosest to tightest):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right associative
//! primary := number | ident primes? ('(' args ')')? | '(' sum ')'
//! ```
//!
//! Juxtaposition is not multiplication. Prime marks are only legal directly
//! after an identifier naming a single-variable function or dependent.

mod print;

pub use print::print;

use crate::expr::{Expr, Q};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {span}: {msg}")]
    Syntax { msg: String, span: SourceSpan },
    #[error("unknown identifier `{name}` at {span}")]
    UnknownIdentifier { name: String, span: SourceSpan },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. } | ParseError::UnknownIdentifier { span, .. } => *span,
        }
    }
}

/// Declared-names table: which identifiers are variables, parameters,
/// dependents or opaque functions, plus macro bindings substituted at parse time.
#[derive(Debug, Clone)]
pub struct Names {
    pub vars: BTreeSet<String>,
    pub params: BTreeSet<String>,
    pub funcs: BTreeSet<String>,
    /// Dependent name to its independent variables.
    pub deps: BTreeMap<String, Vec<String>>,
    pub bindings: BTreeMap<String, Expr>,
}

impl Default for Names {
    fn default() -> Self {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
        let mut deps = BTreeMap::new();
        deps.insert("u".to_string(), vec!["t".into(), "x".into(), "y".into()]);
        for (d, v) in [("w", "z"), ("W", "r"), ("X", "xi"), ("Q", "v"), ("Z", "z")] {
            deps.insert(d.to_string(), vec![v.to_string()]);
        }
        Names {
            vars: s(&["t", "x", "y", "z", "r", "xi", "v"]),
            params: s(&[
                "k0", "k1", "c1", "c2", "c3", "alpha", "beta", "A", "B", "C1", "C2", "eps", "s",
                "a1", "a2",
            ]),
            funcs: s(&["f", "g", "h", "f1", "f2", "g1", "g2", "h1", "h2"]),
            deps,
            bindings: BTreeMap::new(),
        }
    }
}

impl Names {
    pub fn empty() -> Self {
        Names {
            vars: BTreeSet::new(),
            params: BTreeSet::new(),
            funcs: BTreeSet::new(),
            deps: BTreeMap::new(),
            bindings: BTreeMap::new(),
        }
    }

    pub fn bind(mut self, name: &str, value: Expr) -> Self {
        self.bindings.insert(name.to_string(), value);
        self
    }

    pub fn with_param(mut self, name: &str) -> Self {
        self.params.insert(name.to_string());
        self
    }

    fn is_single_var_dep(&self, name: &str) -> Option<&str> {
        match self.deps.get(name) {
            Some(v) if v.len() == 1 => Some(v[0].as_str()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String, u32),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Prime,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, SourceSpan)>,
}

fn syntax(msg: impl Into<String>, start: usize, end: usize) -> ParseError {
    ParseError::Syntax {
        msg: msg.into(),
        span: SourceSpan { start, end },
    }
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut lx = Lexer {
            src,
            toks: Vec::new(),
        };
        let b = src.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i];
            let start = i;
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() || (c == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) {
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let mut frac = "";
                if i < b.len() && b[i] == b'.' {
                    let fs = i + 1;
                    i += 1;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                    frac = &src[fs..i];
                }
                let int_part = src[start..i].split('.').next().unwrap_or("");
                let digits = format!("{}{}", int_part, frac);
                let n: BigInt = digits.parse().map_err(|_| syntax("bad number", start, i))?;
                let d = num_traits::pow(BigInt::from(10), frac.len());
                lx.push(Tok::Num(Q::new(n, d)), start, i);
                continue;
            }
            if c.is_ascii_alphabetic() || c == b'_' {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                let name = src[start..i].to_string();
                let mut primes = 0;
                while i < b.len() && b[i] == b'\'' {
                    primes += 1;
                    i += 1;
                }
                lx.push(Tok::Ident(name, primes), start, i);
                continue;
            }
            let t = match c {
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'^' => Tok::Caret,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                b'\'' => Tok::Prime,
                _ => {
                    let ch = src[start..].chars().next().unwrap();
                    return Err(syntax(
                        format!("unexpected character `{ch}`"),
                        start,
                        start + ch.len_utf8(),
                    ));
                }
            };
            i += 1;
            lx.push(t, start, i);
        }
        let n = lx.src.len();
        lx.push(Tok::Eof, n, n);
        Ok(lx.toks)
    }

    fn push(&mut self, t: Tok, start: usize, end: usize) {
        self.toks.push((t, SourceSpan { start, end }));
    }
}

struct Parser<'n> {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    names: &'n Names,
}

impl<'n> Parser<'n> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }
    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }
    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn expect(&mut self, t: Tok, what: &str) -> Result<SourceSpan, ParseError> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            let s = self.span();
            Err(self.err_here(&format!("expected {what}"), s))
        }
    }
    fn err_here(&self, msg: &str, s: SourceSpan) -> ParseError {
        if s.start == s.end {
            let span = SourceSpan {
                start: s.start.saturating_sub(1),
                end: s.end,
            };
            ParseError::Syntax {
                msg: format!("{msg}, found end of input"),
                span,
            }
        } else {
            ParseError::Syntax {
                msg: msg.to_string(),
                span: s,
            }
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.product()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.product()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(-self.product()?);
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::add(terms)
        })
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Slash => {
                    let s = self.bump().1;
                    let rhs = self.unary()?;
                    if rhs.is_zero_literal() {
                        return Err(syntax(
                            "division by zero",
                            s.start,
                            self.toks[self.pos.saturating_sub(1)].1.end,
                        ));
                    }
                    acc = acc / rhs;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let start = self.span().start;
        let ex = self.unary()?;
        let end = self.toks[self.pos.saturating_sub(1)].1.end;
        let r = match ex.as_num() {
            Some(r) => r.clone(),
            None => match crate::expr::canonical::normalize(&ex)
                .ok()
                .and_then(|c| c.as_constant())
            {
                Some(r) => r,
                None => return Err(syntax("exponent must be a rational constant", start, end)),
            },
        };
        if base.is_zero_literal() && r <= Q::zero() {
            return Err(syntax("zero raised to a non-positive power", start, end));
        }
        Ok(Expr::pow(base, r))
    }

    fn args(&mut self) -> Result<Vec<(Expr, SourceSpan)>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::new();
        loop {
            let s = self.span();
            let e = self.sum()?;
            let end = self.toks[self.pos.saturating_sub(1)].1.end;
            out.push((
                e,
                SourceSpan {
                    start: s.start,
                    end,
                },
            ));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                _ => break,
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(out)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (t, sp) = self.bump();
        match t {
            Tok::Num(v) => Ok(Expr::num(v)),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name, primes) => self.ident(name, primes, sp),
            Tok::Prime => Err(syntax(
                "prime marks must follow a function name",
                sp.start,
                sp.end,
            )),
            _ => Err(self.err_here("expected an operand", sp)),
        }
    }

    fn ident(&mut self, name: String, primes: u32, sp: SourceSpan) -> Result<Expr, ParseError> {
        let names = self.names;
        let no_primes = |what: &str| -> Result<(), ParseError> {
            if primes > 0 {
                Err(syntax(
                    format!("prime marks are not allowed on {what}"),
                    sp.start,
                    sp.end,
                ))
            } else {
                Ok(())
            }
        };
        let called = *self.peek() == Tok::LParen;
        match name.as_str() {
            "exp" | "ln" | "log" | "W" | "ProductLog" | "sqrt" if called => {
                no_primes("builtins")?;
                let a = self.one_arg(&name, sp)?;
                return Ok(match name.as_str() {
                    "exp" => Expr::exp(a),
                    "ln" | "log" => Expr::ln(a),
                    "sqrt" => Expr::sqrt(a),
                    _ => Expr::lambert_w(a),
                });
            }
            "D" if called => {
                no_primes("`D`")?;
                return self.jet_call(sp);
            }
            _ => {}
        }
        if let Some(b) = names.bindings.get(&name) {
            no_primes("bound names")?;
            return Ok(b.clone());
        }
        if names.funcs.contains(&name) {
            if !called {
                return Err(syntax(
                    format!("function `{name}` needs an argument"),
                    sp.start,
                    sp.end,
                ));
            }
            let a = self.one_arg(&name, sp)?;
            return Ok(Expr::func(&name, primes, a));
        }
        if let Some(indep) = names.deps.get(&name) {
            if indep.len() == 1 {
                let iv = indep[0].clone();
                if called {
                    let a = self.one_arg(&name, sp)?;
                    if a != Expr::var(&iv) {
                        return Err(syntax(
                            format!("`{name}` is a function of `{iv}` only"),
                            sp.start,
                            sp.end,
                        ));
                    }
                }
                return Ok(Expr::ode_jet(&name, &iv, primes as usize));
            }
            no_primes("multi-variable dependents; use D(u, ...)")?;
            if called {
                return Err(syntax(
                    format!("`{name}` is not callable; use D({name}, ...)"),
                    sp.start,
                    sp.end,
                ));
            }
            return Ok(Expr::jet(&name, &[]));
        }
        if names.vars.contains(&name) {
            no_primes("variables")?;
            return Ok(Expr::var(&name));
        }
        if names.params.contains(&name) {
            no_primes("parameters")?;
            return Ok(Expr::param(&name));
        }
        Err(ParseError::UnknownIdentifier { name, span: sp })
    }

    fn one_arg(&mut self, name: &str, sp: SourceSpan) -> Result<Expr, ParseError> {
        let mut a = self.args()?;
        if a.len() != 1 {
            let end = self.toks[self.pos.saturating_sub(1)].1.end;
            return Err(syntax(
                format!("`{name}` takes one argument"),
                sp.start,
                end,
            ));
        }
        Ok(a.pop().unwrap().0)
    }

    fn jet_call(&mut self, sp: SourceSpan) -> Result<Expr, ParseError> {
        let args = self.args()?;
        let end = self.toks[self.pos.saturating_sub(1)].1.end;
        let bad = || {
            syntax(
                "D expects a dependent followed by its variables",
                sp.start,
                end,
            )
        };
        let mut it = args.into_iter();
        let (dep, _) = it.next().ok_or_else(bad)?;
        let dep_name = match dep.node() {
            crate::expr::Node::Jet(j) if j.index.is_empty() => j.dep.to_string(),
            _ => return Err(bad()),
        };
        let indep = self.names.deps[&dep_name].clone();
        let mut idx = Vec::new();
        for (a, s) in it {
            match a.name() {
                Some(n) if indep.iter().any(|v| v == n) => idx.push(n.to_string()),
                _ => {
                    return Err(syntax(
                        format!("`{dep_name}` does not depend on this"),
                        s.start,
                        s.end,
                    ))
                }
            }
        }
        if let Some(iv) = self.names.is_single_var_dep(&dep_name) {
            return Ok(Expr::ode_jet(&dep_name, iv, idx.len()));
        }
        let refs: Vec<&str> = idx.iter().map(|s| s.as_str()).collect();
        Ok(Expr::jet(&dep_name, &refs))
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &Names::default())
}

pub fn parse_with(text: &str, names: &Names) -> Result<Expr, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::Eof {
        let s = p.span();
        return Err(syntax("unexpected trailing input", s.start, s.end));
    }
    Ok(e)
}

/// Parses `p/q`, `-p/q`, integers or exact decimals into a rational.
pub fn parse_rational(text: &str) -> Option<Q> {
    let e = parse_with(text.trim(), &Names::empty()).ok()?;
    e.as_num().cloned()
}

/// Rational rendered in the grammar (`3`, `-1/6`).
pub fn print_rational(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::is_zero;

    #[test]
    fn red27_left_side() {
        let e = parse("k0*w' + w'^2 + (w - z*k0)*w''").unwrap();
        let (w, w1, w2) = (
            Expr::ode_jet("w", "z", 0),
            Expr::ode_jet("w", "z", 1),
            Expr::ode_jet("w", "z", 2),
        );
        let k0 = Expr::param("k0");
        let z = Expr::var("z");
        let want = &k0 * &w1 + Expr::powi(w1, 2) + (&w - &z * &k0) * &w2;
        assert!(is_zero(&(e - want)).unwrap());
    }

    #[test]
    fn zero_literal() {
        assert!(parse("0").unwrap().is_zero_literal());
        assert_eq!(print(&Expr::zero()), "0");
    }

    #[test]
    fn misplaced_prime_rejected() {
        let src = "D(u,x,t) - (u*D(u,x))*'";
        let err = parse(src).unwrap_err();
        match err {
            ParseError::Syntax { span, .. } => {
                assert!(span.start < span.end && span.end <= src.len());
                assert_eq!(&src[span.start..span.end], "'");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn red211_prints() {
        let e = parse("w^2 - w'").unwrap();
        assert_eq!(print(&e), "w^2 - w'");
    }

    #[test]
    fn precedence() {
        let e = parse("-x^2").unwrap();
        assert_eq!(e, -Expr::powi(Expr::var("x"), 2));
        let e = parse("2^3^2").unwrap();
        assert_eq!(e, Expr::int(512));
        assert_eq!(parse("3/2").unwrap(), Expr::rat(3, 2));
        assert_eq!(parse("0.25").unwrap(), Expr::rat(1, 4));
    }

    #[test]
    fn jets_and_functions() {
        assert_eq!(parse("D(u,t,x)").unwrap(), Expr::jet("u", &["x", "t"]));
        assert_eq!(parse("g''(t)").unwrap(), Expr::func("g", 2, Expr::var("t")));
        assert!(matches!(
            parse("q + 1"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(parse("u'").is_err());
        assert!(parse("x^y").is_err());
    }

    #[test]
    fn bindings_substitute() {
        let n = Names::default().bind("k0", Expr::rat(1, 9));
        let e = parse_with("z^((1-9*k0)/5 + 1)", &n).unwrap();
        assert_eq!(e, Expr::var("z"));
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("-1/6"), Some(crate::expr::qr(-1, 6)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(print_rational(&crate::expr::qr(-1, 6)), "-1/6");
    }
}
