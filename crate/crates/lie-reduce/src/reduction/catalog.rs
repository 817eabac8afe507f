//! The reduction catalog: one `[case NAME]` block per subalgebra branch.
//!
//! ```text
//! [case L2.7]
//! generators: y(1); k0*v0 + y(c2) + z(-3/2*(k0*t + c3))
//! params: k0, c2, c3
//! constraint: k0^2 + c3^2 != 0
//! z = x*(c3 + k0*t)
//! u = w/(c3 + k0*t)^2
//! inverse: x = z/(c3 + k0*t)
//! reduced: k0*w' + w'^2 + (w - z*k0)*w''
//! ```
//!
//! Indented lines continue the previous value.

use super::{vanishes, Instance, ReductionError, Result};
use crate::expr::{Expr, Q};
use crate::lie::{generator_named, VectorField};
use crate::parser::{parse_rational, parse_with, print_rational, Names};
use std::collections::BTreeMap;

pub const EMBEDDED: &str = include_str!("../../data/catalog.txt");

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Reduced(T),
    Degenerate(T),
    Transversality,
}

#[derive(Debug, Clone, Default)]
pub struct CaseSpec {
    pub name: String,
    pub family: String,
    pub line: usize,
    pub generators: Vec<String>,
    pub params: Vec<String>,
    pub fixed: BTreeMap<String, Q>,
    /// Parameters that must be numeric (they enter exponents).
    pub numeric: Vec<String>,
    pub constraints: Vec<String>,
    pub lets: Vec<(String, String)>,
    pub z: Option<String>,
    pub u: Option<String>,
    pub inverse: Option<(String, String)>,
    pub outcome: Option<Outcome<String>>,
    pub solution: Option<String>,
    pub samples: Vec<BTreeMap<String, Q>>,
    /// Symmetries `(xi, phi)` of the reduced ODE on `(z, w)`.
    pub symmetries: Vec<(String, String)>,
    /// Name of the case whose printed form this one corrects.
    pub corrects: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub cases: Vec<CaseSpec>,
}

fn err(line: usize, msg: impl Into<String>) -> ReductionError {
    ReductionError::Catalog {
        line,
        msg: msg.into(),
    }
}

fn split_top(s: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if ch == sep && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(ch);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn assignments(s: &str, line: usize) -> Result<BTreeMap<String, Q>> {
    let mut out = BTreeMap::new();
    for part in split_top(s, ',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected name = value in `{part}`")))?;
        let v = parse_rational(v)
            .ok_or_else(|| err(line, format!("`{}` is not a rational", v.trim())))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

impl Catalog {
    pub fn embedded() -> Catalog {
        Catalog::parse(EMBEDDED).expect("embedded catalog parses")
    }

    pub fn parse(text: &str) -> Result<Catalog> {
        let mut lines: Vec<(usize, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let l = raw.split('#').next().unwrap_or("");
            if l.trim().is_empty() {
                continue;
            }
            if l.starts_with([' ', '\t']) && !l.trim_start().starts_with('[') {
                match lines.last_mut() {
                    Some((_, prev)) => {
                        prev.push(' ');
                        prev.push_str(l.trim());
                        continue;
                    }
                    None => return Err(err(i + 1, "continuation without a key")),
                }
            }
            lines.push((i + 1, l.trim().to_string()));
        }
        let mut cases: Vec<CaseSpec> = Vec::new();
        for (ln, l) in lines {
            if let Some(rest) = l.strip_prefix("[case ") {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(ln, "unterminated case header"))?
                    .trim();
                if cases.iter().any(|c| c.name == name) {
                    return Err(err(ln, format!("duplicate case `{name}`")));
                }
                cases.push(CaseSpec {
                    name: name.into(),
                    family: name.into(),
                    line: ln,
                    ..Default::default()
                });
                continue;
            }
            let c = cases
                .last_mut()
                .ok_or_else(|| err(ln, "entry outside a case block"))?;
            if l == "transversality" {
                c.outcome = Some(Outcome::Transversality);
                continue;
            }
            let (key, val) = if let Some(v) = l.strip_prefix("z =") {
                ("z", v)
            } else if let Some(v) = l.strip_prefix("u =") {
                ("u", v)
            } else {
                l.split_once(':')
                    .ok_or_else(|| err(ln, format!("cannot read `{l}`")))?
            };
            let (key, val) = (key.trim(), val.trim());
            match key {
                "z" => c.z = Some(val.into()),
                "u" => c.u = Some(val.into()),
                "family" => c.family = val.into(),
                "generators" => c.generators = split_top(val, ';'),
                "params" => c.params = split_top(val, ','),
                "numeric" => c.numeric = split_top(val, ','),
                "fixed" => c.fixed = assignments(val, ln)?,
                "constraint" => c.constraints.push(val.into()),
                "let" => {
                    let (n, e) = val
                        .split_once('=')
                        .ok_or_else(|| err(ln, "expected `let: name = expr`"))?;
                    c.lets.push((n.trim().into(), e.trim().into()));
                }
                "inverse" => {
                    let (n, e) = val
                        .split_once('=')
                        .ok_or_else(|| err(ln, "expected `inverse: var = expr`"))?;
                    c.inverse = Some((n.trim().into(), e.trim().into()));
                }
                "reduced" => c.outcome = Some(Outcome::Reduced(val.into())),
                "degenerate" => c.outcome = Some(Outcome::Degenerate(val.into())),
                "solution" => c.solution = Some(val.into()),
                "samples" => {
                    c.samples = split_top(val, '|')
                        .iter()
                        .map(|s| assignments(s, ln))
                        .collect::<Result<_>>()?;
                }
                "symmetries" => {
                    for s in split_top(val, ';') {
                        let inner = s
                            .strip_prefix('(')
                            .and_then(|s| s.strip_suffix(')'))
                            .ok_or_else(|| {
                                err(ln, format!("symmetry `{s}` should read (xi, phi)"))
                            })?;
                        let parts = split_top(inner, ',');
                        if parts.len() != 2 {
                            return Err(err(ln, format!("symmetry `{s}` should read (xi, phi)")));
                        }
                        c.symmetries.push((parts[0].clone(), parts[1].clone()));
                    }
                }
                "corrects" => c.corrects = Some(val.into()),
                "notes" => c.notes.push(val.into()),
                _ => return Err(err(ln, format!("unknown key `{key}`"))),
            }
        }
        for c in &cases {
            if c.outcome.is_none() {
                return Err(err(
                    c.line,
                    format!("case `{}` has no expected outcome", c.name),
                ));
            }
            if !matches!(c.outcome, Some(Outcome::Transversality))
                && (c.z.is_none() || c.u.is_none())
            {
                return Err(err(
                    c.line,
                    format!("case `{}` needs `z =` and `u =`", c.name),
                ));
            }
        }
        Ok(Catalog { cases })
    }

    pub fn get(&self, name: &str) -> Option<&CaseSpec> {
        self.cases.iter().find(|c| c.name == name)
    }

    /// Case `name`, or the branch of family `name` whose fixed parameters
    /// agree with `values` (falling back to the branch with none fixed).
    pub fn select(&self, name: &str, values: &BTreeMap<String, Q>) -> Result<&CaseSpec> {
        if let Some(c) = self.get(name) {
            return Ok(c);
        }
        let fam: Vec<&CaseSpec> = self
            .cases
            .iter()
            .filter(|c| c.family == name && c.corrects.is_none())
            .collect();
        if fam.is_empty() {
            return Err(ReductionError::UnknownCase(name.into()));
        }
        let agrees = |c: &&&CaseSpec| {
            !c.fixed.is_empty() && c.fixed.iter().all(|(k, v)| values.get(k) == Some(v))
        };
        if let Some(c) = fam.iter().find(agrees) {
            return Ok(c);
        }
        Ok(fam.iter().find(|c| c.fixed.is_empty()).unwrap_or(&fam[0]))
    }
}

/// Names used for solution expressions: `w` is an opaque function there.
pub fn solution_names(base: &Names) -> Names {
    let mut n = base.clone();
    n.deps.remove("w");
    n.funcs.insert("w".into());
    n
}

impl CaseSpec {
    pub fn needs_samples(&self, values: &BTreeMap<String, Q>) -> bool {
        self.numeric
            .iter()
            .any(|p| !values.contains_key(p) && !self.fixed.contains_key(p))
    }

    /// Parameter values merged with the fixed ones, and the name table
    /// binding them and the case's `let` definitions.
    fn bind(&self, values: &BTreeMap<String, Q>) -> Result<(BTreeMap<String, Q>, Names)> {
        let mut all = self.fixed.clone();
        for (k, v) in values {
            if let Some(f) = self.fixed.get(k) {
                if f != v {
                    return Err(ReductionError::ConstraintViolated(format!(
                        "{k} = {}",
                        print_rational(f)
                    )));
                }
            } else if !self.params.contains(k) {
                return Err(ReductionError::UnknownParameter(k.clone()));
            }
            all.insert(k.clone(), v.clone());
        }
        for p in &self.numeric {
            if !all.contains_key(p) {
                return Err(ReductionError::MissingParameter {
                    case: self.name.clone(),
                    param: p.clone(),
                });
            }
        }
        let mut names = Names::default();
        for (k, v) in &all {
            names = names.bind(k, Expr::num(v.clone()));
        }
        for (k, e) in &self.lets {
            let v = parse_with(e, &names)?;
            names = names.bind(k, v);
        }
        Ok((all, names))
    }

    /// Constraints that fail under `names`.
    fn violations(&self, names: &Names) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for c in &self.constraints {
            let (lhs, rhs) = c.split_once("!=").ok_or_else(|| {
                err(
                    self.line,
                    format!("constraint `{c}` should read `expr != expr`"),
                )
            })?;
            let d = parse_with(lhs, names)? - parse_with(rhs, names)?;
            if vanishes(&d)? {
                out.push(c.trim().to_string());
            }
        }
        Ok(out)
    }

    /// The expected reduced ODE at `values` together with the constraints
    /// those values violate; `None` when the case does not reduce.
    pub fn reduced_ode(&self, values: &BTreeMap<String, Q>) -> Result<Option<(Expr, Vec<String>)>> {
        let Some(Outcome::Reduced(text)) = &self.outcome else {
            return Ok(None);
        };
        let (_, names) = match self.bind(values) {
            Ok(b) => b,
            Err(e) => return Err(self.undefined_at(values).unwrap_or(e)),
        };
        let bad = self.violations(&names)?;
        Ok(Some((parse_with(text, &names)?, bad)))
    }

    /// A violated constraint explaining why `values` cannot be bound.
    fn undefined_at(&self, values: &BTreeMap<String, Q>) -> Option<ReductionError> {
        let mut names = Names::default();
        for (k, v) in self.fixed.iter().chain(values) {
            names = names.bind(k, Expr::num(v.clone()));
        }
        let bad = self.violations(&names).ok()?;
        bad.into_iter()
            .next()
            .map(ReductionError::ConstraintViolated)
    }

    /// Parses the case with the given parameter values.
    pub fn instantiate(&self, values: &BTreeMap<String, Q>) -> Result<Instance> {
        let (all, names) = self.bind(values)?;
        if let Some(c) = self.violations(&names)?.into_iter().next() {
            return Err(ReductionError::ConstraintViolated(c));
        }
        let parse = |s: &Option<String>| -> Result<Option<Expr>> {
            s.as_ref()
                .map(|s| parse_with(s, &names))
                .transpose()
                .map_err(Into::into)
        };
        let generators = self
            .generators
            .iter()
            .map(|g| parse_generator(g, &names))
            .collect::<Result<Vec<_>>>()?;
        let expected = match self.outcome.as_ref().expect("validated") {
            Outcome::Reduced(s) => Outcome::Reduced(parse_with(s, &names)?),
            Outcome::Degenerate(s) => Outcome::Degenerate(parse_with(s, &names)?),
            Outcome::Transversality => Outcome::Transversality,
        };
        let inverse = match &self.inverse {
            Some((v, e)) => Some((v.clone(), parse_with(e, &names)?)),
            None => None,
        };
        let solution = match &self.solution {
            Some(s) => Some(parse_with(s, &solution_names(&names))?),
            None => None,
        };
        Ok(Instance {
            case: self.name.clone(),
            values: all,
            generators,
            zeta: parse(&self.z)?,
            ansatz: parse(&self.u)?,
            inverse,
            expected,
            solution,
        })
    }

    /// Symmetries of the reduced ODE as vector fields on `(z, w)`.
    pub fn symmetry_fields(&self, values: &BTreeMap<String, Q>) -> Result<Vec<VectorField>> {
        let mut names = Names::default();
        for (k, v) in self.fixed.iter().chain(values) {
            names = names.bind(k, Expr::num(v.clone()));
        }
        self.symmetries
            .iter()
            .map(|(a, b)| {
                Ok(VectorField::new(
                    &["z"],
                    "w",
                    vec![parse_with(a, &names)?],
                    parse_with(b, &names)?,
                ))
            })
            .collect()
    }
}

/// `c1*kind(arg) + c2*kind(arg) + ...` with kinds `v0`, `x`, `y`, `z`.
pub fn parse_generator(text: &str, names: &Names) -> Result<VectorField> {
    let bad = || err(0, format!("cannot read generator `{text}`"));
    let mut total: Option<VectorField> = None;
    for term in split_top(text, '+') {
        let (coeff, kind, arg) = if let Some(pre) = term.strip_suffix("v0") {
            (pre, "v0", Expr::zero())
        } else {
            let body = term.strip_suffix(')').ok_or_else(bad)?;
            let mut depth = 0;
            let mut open = None;
            for (i, ch) in body.char_indices().rev() {
                match ch {
                    ')' => depth += 1,
                    '(' if depth == 0 => {
                        open = Some(i);
                        break;
                    }
                    '(' => depth -= 1,
                    _ => {}
                }
            }
            let open = open.ok_or_else(bad)?;
            let kind = &body[open.saturating_sub(1)..open];
            if !["x", "y", "z"].contains(&kind) {
                return Err(bad());
            }
            (
                &body[..open - 1],
                kind,
                parse_with(&body[open + 1..], names)?,
            )
        };
        let coeff = coeff.trim();
        let c = if coeff.is_empty() {
            Expr::one()
        } else {
            parse_with(coeff.strip_suffix('*').ok_or_else(bad)?, names)?
        };
        let g = generator_named(kind, &arg)?.scale(&c);
        total = Some(match total {
            Some(t) => t.add(&g),
            None => g,
        });
    }
    total.ok_or_else(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_parses() {
        let c = Catalog::embedded();
        assert!(c.get("L2.1").is_some());
        assert!(c.get("L2.3").is_some());
    }

    #[test]
    fn generator_combination() {
        let g = parse_generator("k0*v0 + z(1)", &Names::default()).unwrap();
        assert_eq!(g.to_string(), "(1, 2*x*k0, y*k0, 2*k0*u)");
    }

    #[test]
    fn branch_selection() {
        let c = Catalog::embedded();
        let k0 = |v: i64, d: i64| BTreeMap::from([("k0".to_string(), crate::expr::qr(v, d))]);
        assert_eq!(c.select("L2.8", &k0(-1, 6)).unwrap().name, "L2.8b1");
        assert_eq!(c.select("L2.8", &k0(1, 1)).unwrap().name, "L2.8a");
        assert_eq!(c.select("L2.5", &k0(0, 1)).unwrap().name, "L2.5b");
        assert!(matches!(
            c.select("L2.99", &k0(0, 1)),
            Err(ReductionError::UnknownCase(_))
        ));
    }

    #[test]
    fn constraint_violation() {
        let c = Catalog::embedded();
        let v = BTreeMap::from([
            ("k0".to_string(), crate::expr::q(0)),
            ("c3".to_string(), crate::expr::q(0)),
        ]);
        let e = c.select("L2.7", &v).unwrap().instantiate(&v).unwrap_err();
        assert!(matches!(e, ReductionError::ConstraintViolated(_)));
    }
}
