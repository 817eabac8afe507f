use super::*;
use crate::expr::qr;
use crate::parser::parse;
use crate::reduction::Catalog;

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn zero(e: &Expr) -> bool {
    is_zero(e).unwrap()
}

const RED21: &str = "-w^2 + 2*(w*z - 1)*w' - z^2*w'^2 - (4*z + w*z^2)*w''";

#[test]
fn cubic_form() {
    let c = extract_cubic(&p("w''")).unwrap();
    assert!([&c.a, &c.b, &c.c, &c.d].iter().all(|e| zero(e)));
    let c = extract_cubic(&p("k0*w' + w'^2 + (w - z*k0)*w''")).unwrap();
    assert!(zero(&c.a) && zero(&c.d));
    assert!(zero(&(&c.b - p("1/(w - z*k0)"))));
    assert!(zero(&(&c.c - p("k0/(w - z*k0)"))));
    assert_eq!(
        extract_cubic(&p("w'' + w'^4")),
        Err(LinearizeError::DegreeTooHigh(4))
    );
    assert_eq!(
        extract_cubic(&p("w'*w'' + w")),
        Err(LinearizeError::NotLinearInSecondDerivative)
    );
    assert_eq!(
        extract_cubic(&p("w'^2 + w")),
        Err(LinearizeError::VanishingLeadingCoefficient)
    );
}

#[test]
fn psi_values() {
    let (p1, p2) = psi(&extract_cubic(&p(RED21)).unwrap()).unwrap();
    assert!(zero(&(p1 - p("54*z/(4 + w*z)^3"))));
    assert!(zero(&(p2 + p("72*(-2 + w*z)/(z*(4 + w*z)^3)"))));
    let (p1, p2) = psi(&extract_cubic(&p("w'^2 + w*w''")).unwrap()).unwrap();
    assert!(zero(&p1) && zero(&p2));
    assert!(is_linearizable(&extract_cubic(&p("w''")).unwrap()).unwrap());
    assert!(!is_linearizable(&extract_cubic(&p(RED21)).unwrap()).unwrap());
}

fn scan(case: &str, param: &str, samples: &[Q]) -> Vec<ScanEntry> {
    let cat = Catalog::embedded();
    linearizability_scan(cat.get(case).unwrap(), param, samples, Mode::Sequential)
        .unwrap()
        .entries
}

#[test]
fn scan_red27() {
    let ks = [qr(0, 1), qr(1, 1), qr(-1, 1), qr(1, 2), qr(-1, 2), qr(1, 3)];
    let out = scan("L2.7", "k0", &ks);
    let lin: Vec<bool> = out.iter().map(|e| e.linearizable()).collect();
    assert_eq!(lin, [true, false, false, false, false, false]);
    assert!(out[1].witness.is_some());
}

#[test]
fn scan_red28a() {
    let ks = [qr(1, 9), qr(0, 1), qr(1, 1), qr(-1, 1), qr(1, 3), qr(2, 9)];
    let out = scan("L2.8a", "k0", &ks);
    let z1: Vec<bool> = out.iter().map(|e| e.psi1_zero).collect();
    assert_eq!(z1, [true, false, false, false, false, false]);
    assert!(zero(
        &(&out[0].psi.1 - p("18*z^(4/5)/(25*(w + z^(14/5))^2)"))
    ));
}

#[test]
fn scan_red212a() {
    let ks = [qr(-1, 15), qr(1, 21), qr(0, 1), qr(1, 2)];
    let out = scan("L2.12a", "k0", &ks);
    let z1: Vec<bool> = out.iter().map(|e| e.psi1_zero).collect();
    let z2: Vec<bool> = out.iter().map(|e| e.psi2_zero).collect();
    assert_eq!(z1, [true, false, false, false]);
    assert_eq!(z2, [false, true, false, false]);
}

#[test]
fn scan_special_branches() {
    let cs = [qr(0, 1), qr(1, 1), qr(-1, 1), qr(2, 1)];
    for (case, param) in [("L2.8b1", "c1"), ("L2.8b2", "c2"), ("L2.12b1", "c3")] {
        let out = scan(case, param, &cs);
        let lin: Vec<bool> = out.iter().map(|e| e.linearizable()).collect();
        assert_eq!(lin, [true, false, false, false], "{case}");
        assert!(!out[0].violations.is_empty(), "{case} at {param} = 0");
        assert!(out[1].violations.is_empty());
    }
}

#[test]
fn default_grid_scans() {
    let cat = Catalog::embedded();
    let grid = default_grid();
    let s = linearizability_scan(cat.get("L2.12a").unwrap(), "k0", &grid, Mode::Parallel).unwrap();
    assert_eq!(
        s.undefined,
        vec![(qr(1, 1), "(k0 - 1)*(3*k0 + 1) != 0".to_string())]
    );
    assert_eq!(s.entries.len(), grid.len() - 1);
    let s = linearizability_scan(cat.get("L2.7").unwrap(), "k0", &grid, Mode::Parallel).unwrap();
    assert_eq!(s.linearizable_at(), vec![qr(0, 1)]);
}

#[test]
fn families() {
    let none: Vec<VectorField> = vec![];
    let one = vec![VectorField::zw("z", "-w").unwrap()];
    let two = vec![
        VectorField::zw("1", "0").unwrap(),
        VectorField::zw("z", "w").unwrap(),
    ];
    assert_eq!(
        classify_family(&p("7*w' + 6*z*w''"), &none).unwrap(),
        Family::Linear(qr(7, 1), qr(6, 1))
    );
    assert_eq!(
        classify_family(&p("z*w'' + 4/3*w'"), &none).unwrap(),
        Family::Linear(qr(4, 1), qr(3, 1))
    );
    assert_eq!(
        classify_family(&p("w''"), &none).unwrap(),
        Family::Linear(qr(0, 1), qr(1, 1))
    );
    assert_eq!(classify_family(&p(RED21), &one).unwrap(), Family::TypeA1);
    assert_eq!(
        classify_family(&p("2*w' + w'^2 + w*w''"), &two).unwrap(),
        Family::TypeA2
    );
    assert_eq!(
        classify_family(&p("k0*w' + w'^2 + (w - z*k0)*w''"), &one).unwrap(),
        Family::TypeA1
    );
    assert_eq!(
        classify_family(&p("w^2 - w'"), &two).unwrap(),
        Family::TypeA2
    );
    assert_eq!(
        classify_family(&p("w'^3 + w''"), &none).unwrap(),
        Family::OutsideFamily
    );
    assert_eq!(
        classify_family(&p("w^3 + w''"), &none).unwrap(),
        Family::OutsideFamily
    );
    let cat = Catalog::embedded();
    let red22 = cat
        .get("L2.2-corrected")
        .unwrap()
        .reduced_ode(&BTreeMap::new())
        .unwrap()
        .unwrap()
        .0;
    assert_eq!(classify_family(&red22, &none).unwrap(), Family::TypeB);
}

#[test]
fn linear_family_solutions() {
    let s = solve_linear_family(&qr(7, 1), &qr(6, 1)).unwrap();
    assert!(zero(&(s - p("C1 + C2*z^(-1/6)"))));
    let s = solve_linear_family(&qr(0, 1), &qr(1, 1)).unwrap();
    assert!(zero(&(s - p("C1 + C2*z"))));
    let s = solve_linear_family(&qr(4, 1), &qr(3, 1)).unwrap();
    assert!(zero(&(s - p("C1 + C2*z^(-1/3)"))));
    let s = solve_linear_family(&qr(2, 1), &qr(2, 1)).unwrap();
    assert!(zero(&(s - p("C1 + C2*ln(z)"))));
    assert_eq!(
        solve_linear_family(&qr(1, 1), &qr(0, 1)),
        Err(LinearizeError::DegenerateFamily)
    );
}

#[test]
fn linearizing_substitutions() {
    let ode = p("w'^2 + w*w''");
    assert!(verify_linearizing_substitution(&ode, &p("w^2"), None).unwrap());
    assert!(verify_linearizing_substitution(&p("w''"), &p("w"), None).unwrap());
    assert!(!verify_linearizing_substitution(&ode, &p("w^3"), None).unwrap());
    assert_eq!(
        verify_linearizing_substitution(&ode, &p("z"), None),
        Err(LinearizeError::SingularTransform)
    );
}
