#![allow(dead_code)]

use lie_reduce::calculus::{diff, eval_f64, eval_jet, lambert_w0, total_derivative, FnTable};
use lie_reduce::expr::{is_zero, qr, Expr};
use lie_reduce::lie::{commutator, generator, GenKind, VectorField};
use lie_reduce::linearize::{extract_cubic, psi};
use lie_reduce::parser::{parse, print};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub type Rng8 = ChaCha8Rng;

fn small_rational(rng: &mut Rng8) -> Expr {
    let n = rng.random_range(-5i64..=5);
    let d = rng.random_range(1i64..=4);
    Expr::num(qr(n, d))
}

/// Random expression in `x, y`, parameter `k0` and the jets `u, u_x, u_t`.
/// Built from sums, products, small integer powers and `exp`.
pub fn algebraic(rng: &mut Rng8, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..6) {
            0 => small_rational(rng),
            1 => Expr::var("x"),
            2 => Expr::var("y"),
            3 => Expr::param("k0"),
            4 => Expr::jet("u", &[]),
            _ => Expr::jet("u", &["x"]),
        };
    }
    let a = algebraic(rng, depth - 1);
    match rng.random_range(0..5) {
        0 => a + algebraic(rng, depth - 1),
        1 => a - algebraic(rng, depth - 1),
        2 => a * algebraic(rng, depth - 1),
        3 => Expr::powi(a, rng.random_range(2..=3)),
        _ => Expr::exp(a),
    }
}

/// Random smooth expression in `x, y` for numeric checks: the arguments of
/// `ln` and fractional powers are kept positive.
pub fn smooth(rng: &mut Rng8, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..3) {
            0 => small_rational(rng),
            1 => Expr::var("x"),
            _ => Expr::var("y"),
        };
    }
    let a = smooth(rng, depth - 1);
    let positive = |e: Expr| Expr::int(1) + Expr::powi(e, 2);
    match rng.random_range(0..7) {
        0 => a + smooth(rng, depth - 1),
        1 => a * smooth(rng, depth - 1),
        2 => Expr::powi(a, 2),
        3 => Expr::exp(a / Expr::int(4)),
        4 => Expr::ln(positive(a)),
        5 => Expr::sqrt(positive(a)),
        _ => a / positive(smooth(rng, depth - 1)),
    }
}

pub fn ring_axioms(rng: &mut Rng8) -> Result<(), String> {
    let (a, b, c) = (algebraic(rng, 3), algebraic(rng, 3), algebraic(rng, 3));
    let cases = [
        ("a+b = b+a", &a + &b - (&b + &a)),
        ("(a+b)+c = a+(b+c)", (&a + &b) + &c - (&a + (&b + &c))),
        ("ab = ba", &a * &b - &b * &a),
        ("(ab)c = a(bc)", (&a * &b) * &c - &a * (&b * &c)),
        ("a(b+c) = ab+ac", &a * (&b + &c) - (&a * &b + &a * &c)),
        ("a + (-a) = 0", &a + &(-&a)),
        ("1a = a", Expr::one() * &a - &a),
    ];
    for (name, e) in cases {
        if !is_zero(&e).map_err(|e| e.to_string())? {
            return Err(format!("{name} fails for a={a}, b={b}, c={c}"));
        }
    }
    Ok(())
}

pub fn parser_round_trip(rng: &mut Rng8) -> Result<(), String> {
    let e = algebraic(rng, 4);
    let text = print(&e);
    let back = parse(&text).map_err(|err| format!("`{text}` does not parse: {err}"))?;
    if back != e {
        return Err(format!("`{text}` reparses as `{}`", print(&back)));
    }
    Ok(())
}

pub fn derivatives_commute(rng: &mut Rng8) -> Result<(), String> {
    let e = algebraic(rng, 3);
    let (x, y) = (Expr::var("x"), Expr::var("y"));
    let d1 = diff(&diff(&e, &x), &y) - diff(&diff(&e, &y), &x);
    let d2 = total_derivative(&total_derivative(&e, "x"), "t")
        - total_derivative(&total_derivative(&e, "t"), "x");
    let d3 = total_derivative(&diff(&e, &y), "x") - diff(&total_derivative(&e, "x"), &y);
    for (name, d) in [
        ("partials", d1),
        ("total derivatives", d2),
        ("partial and total", d3),
    ] {
        if !is_zero(&d).map_err(|e| e.to_string())? {
            return Err(format!("{name} do not commute on {e}"));
        }
    }
    Ok(())
}

/// Largest relative error between Taylor-mode derivatives and central
/// differences; `None` when the sample falls outside the domain.
pub fn ad_vs_fd(rng: &mut Rng8) -> Result<Option<f64>, String> {
    let e = smooth(rng, 4);
    let point: BTreeMap<String, f64> = [
        ("x".to_string(), rng.random_range(-1.0..1.0)),
        ("y".to_string(), rng.random_range(-1.0..1.0)),
    ]
    .into();
    let fns = FnTable::new();
    let Ok(jet) = eval_jet(&e, &["x", "y"], &point, 1, &fns) else {
        return Ok(None);
    };
    let mut worst: f64 = 0.0;
    for v in ["x", "y"] {
        let h = 1e-5;
        let at = |s: f64| {
            let mut p = point.clone();
            *p.get_mut(v).unwrap() += s;
            eval_f64(&e, &p, &fns)
        };
        let (Ok(fp), Ok(fm)) = (at(h), at(-h)) else {
            return Ok(None);
        };
        let fd = (fp - fm) / (2.0 * h);
        let ad = jet.derivative(&[v]);
        let err = (ad - fd).abs() / ad.abs().max(fd.abs()).max(1.0);
        if !err.is_finite() {
            return Err(format!("non-finite derivative of {e}"));
        }
        worst = worst.max(err);
    }
    Ok(Some(worst))
}

pub fn lambert_identity(rng: &mut Rng8) -> Result<f64, String> {
    let a = if rng.random_bool(0.3) {
        rng.random_range(-(-1.0f64).exp()..0.0)
    } else {
        10f64.powf(rng.random_range(-3.0..3.0))
    };
    let w = lambert_w0(a).map_err(|e| e.to_string())?;
    Ok((w * w.exp() - a).abs() / a.abs().max(1.0))
}

fn random_generator(rng: &mut Rng8) -> VectorField {
    let t = Expr::var("t");
    let poly = |rng: &mut Rng8| {
        (0..3).fold(Expr::zero(), |acc, i| {
            acc + small_rational(rng) * Expr::powi(t.clone(), i)
        })
    };
    let kinds = [GenKind::V0, GenKind::X, GenKind::Y, GenKind::Z];
    let mut v = generator(kinds[rng.random_range(0..4)], &poly(rng));
    if rng.random_bool(0.5) {
        v = v.add(&generator(kinds[rng.random_range(0..4)], &poly(rng)));
    }
    v
}

pub fn jacobi(rng: &mut Rng8) -> Result<(), String> {
    let (a, b, c) = (
        random_generator(rng),
        random_generator(rng),
        random_generator(rng),
    );
    let total = commutator(&a, &commutator(&b, &c))
        .add(&commutator(&b, &commutator(&c, &a)))
        .add(&commutator(&c, &commutator(&a, &b)));
    if !total.is_zero().map_err(|e| e.to_string())? {
        return Err(format!("Jacobi identity fails for {a}, {b}, {c}"));
    }
    Ok(())
}

/// `w'' + p(z) w' + q(z) w + r(z)` with random polynomial coefficients has
/// both Psi invariants zero.
pub fn linear_ode_psi(rng: &mut Rng8) -> Result<(), String> {
    let z = Expr::var("z");
    let poly = |rng: &mut Rng8| {
        (0..3).fold(Expr::zero(), |acc, i| {
            acc + small_rational(rng) * Expr::powi(z.clone(), i)
        })
    };
    let w = |n| Expr::ode_jet("w", "z", n);
    let ode = w(2) + poly(rng) * w(1) + poly(rng) * w(0) + poly(rng);
    let (p1, p2) =
        psi(&extract_cubic(&ode).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    if !is_zero(&p1).map_err(|e| e.to_string())? || !is_zero(&p2).map_err(|e| e.to_string())? {
        return Err(format!("Psi does not vanish on {ode}"));
    }
    Ok(())
}
