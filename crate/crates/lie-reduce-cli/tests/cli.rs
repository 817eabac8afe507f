use serde_json::Value;
use std::process::{Command, Output};

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lie-reduce"));
    c.args(args).env_remove("LIE_REDUCE_CATALOG");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.push("--json");
    let o = run(&a);
    let v: Value =
        serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)));
    (code(&o), v)
}

fn schema_valid(v: &Value) {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../docs/report-schema.json"
    ))
    .unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn checks(v: &Value) -> &Vec<Value> {
    v["checks"].as_array().unwrap()
}

fn verdicts(v: &Value) -> Vec<&str> {
    checks(v)
        .iter()
        .map(|c| c["verdict"].as_str().unwrap())
        .collect()
}

#[test]
fn symmetries_default_and_only() {
    let (c, v) = json(&["verify-symmetries"]);
    assert_eq!(c, 0);
    assert_eq!(checks(&v).len(), 13);
    schema_valid(&v);
    let (c, v) = json(&["verify-symmetries", "--only", "commutators"]);
    assert_eq!(c, 0);
    assert_eq!(checks(&v).len(), 9);
    assert!(verdicts(&v).iter().all(|s| *s == "Holds"));
    assert_eq!(code(&run(&["verify-symmetries", "--only", "nothing"])), 2);
}

#[test]
fn json_is_byte_deterministic() {
    let a = run(&["reduce", "L2.10", "--json"]);
    let b = run(&["reduce", "L2.10", "--json", "--sequential"]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let ids: Vec<&str> = checks(&v)
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(ids, sorted);
}

#[test]
fn reduce_examples() {
    let (c, v) = json(&["reduce", "L2.7", "--k0", "1", "--c3", "0"]);
    assert_eq!((c, verdicts(&v)), (0, vec!["Match"]));
    schema_valid(&v);
    let (c, v) = json(&["reduce", "L2.3"]);
    assert_eq!((c, verdicts(&v)), (0, vec!["TransversalityFailure"]));
    let o = run(&["reduce", "L2.7", "--k0", "0", "--c3", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("k0^2 + c3^2 != 0"));
    let (c, v) = json(&["reduce", "L2.8", "--k0=-1/6"]);
    assert_eq!(
        (c, checks(&v)[0]["id"].as_str().unwrap()),
        (0, "reduce/L2.8b1[k0=-1/6]")
    );
    let (c, v) = json(&[
        "reduce", "L2.7", "--k0", "1", "--c3", "0", "--target", "w''",
    ]);
    assert_eq!((c, verdicts(&v)), (1, vec!["Mismatch"]));
}

#[test]
fn reduce_reports_misprinted_forms() {
    let (c, v) = json(&["reduce", "L2.2"]);
    assert_eq!((c, verdicts(&v)), (1, vec!["Mismatch"]));
    let (c, _) = json(&["reduce", "L2.2-corrected"]);
    assert_eq!(c, 0);
}

#[test]
fn reduce_usage_errors() {
    assert_eq!(code(&run(&["reduce", "L2.99"])), 2);
    assert_eq!(code(&run(&["reduce", "L2.7", "--k0", "one"])), 2);
    assert_eq!(code(&run(&["reduce", "L2.7", "--q9", "1"])), 2);
    assert_eq!(code(&run(&["bogus"])), 2);
}

#[test]
fn linearize_examples() {
    let red21 = "-w^2 + 2*(w*z - 1)*w' - z^2*w'^2 - (4*z + w*z^2)*w''";
    let (c, v) = json(&["linearize", red21]);
    assert_eq!((c, verdicts(&v)), (0, vec!["NotLinearizable"]));
    assert!(checks(&v)[0]["detail"]
        .as_str()
        .unwrap()
        .contains("Psi1 = 54*z/"));
    schema_valid(&v);
    let (c, v) = json(&["linearize", "w''"]);
    assert_eq!((c, verdicts(&v)), (0, vec!["Linearizable"]));
    let (c, v) = json(&["linearize", "L2.8a", "--scan", "k0=1/9,0,1"]);
    assert_eq!(c, 0);
    assert_eq!(checks(&v).len(), 4);
    let ninth = checks(&v)
        .iter()
        .find(|c| c["id"] == "linearize/L2.8a[k0=1/9]")
        .unwrap();
    assert!(ninth["detail"].as_str().unwrap().starts_with("Psi1 = 0;"));
    let (_, v) = json(&["linearize", "L2.12b1", "--scan", "c3=0,1"]);
    let zero = checks(&v)
        .iter()
        .find(|c| c["id"] == "linearize/L2.12b1[c3=0]")
        .unwrap();
    assert_eq!(zero["verdict"], "Linearizable");
    assert!(zero["detail"]
        .as_str()
        .unwrap()
        .contains("violates c3 != 0"));
    let (_, v) = json(&["linearize", "L2.12a", "--scan", "k0=1,1/21"]);
    assert_eq!(
        verdicts(&v),
        vec!["Sampled", "NotLinearizable", "Undefined"]
    );
}

#[test]
fn linearize_errors() {
    let o = run(&["linearize", "w'' + q"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains('^'));
    assert_eq!(code(&run(&["linearize", "w'' + w'^4"])), 1);
    assert_eq!(code(&run(&["linearize", "L2.8a", "--scan", "k0=x"])), 2);
}

#[test]
fn linearize_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ode.txt");
    std::fs::write(&p, "w'^2 + w*w''\n").unwrap();
    let (c, v) = json(&["linearize", p.to_str().unwrap()]);
    assert_eq!((c, verdicts(&v)), (0, vec!["Linearizable"]));
}

#[test]
fn solutions() {
    let (c, v) = json(&["verify-solutions", "--suite", "symbolic"]);
    assert_eq!(c, 0);
    assert!(checks(&v)
        .iter()
        .any(|c| c["id"] == "solution/opaque-w" && c["passed"] == true));
    schema_valid(&v);
    let (c, v) = json(&["verify-solutions", "--suite", "numeric", "--tol", "1e-10"]);
    assert_eq!(c, 0);
    let lw = checks(&v)
        .iter()
        .find(|c| c["id"] == "solution/lambert-w")
        .unwrap();
    assert!(lw["detail"].as_str().unwrap().ends_with("over 20 points"));
    assert_eq!(code(&run(&["verify-solutions", "--suite", "bogus"])), 2);
}

#[test]
fn catalog_sources() {
    let builtin = json(&["verify-symmetries", "--only", "commutators"]).1["catalog_sha256"].clone();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cat.txt");
    std::fs::write(
        &p,
        "[case T]\ngenerators: x(1); v0\nz = t\nu = y^2*w\ndegenerate: w\n",
    )
    .unwrap();
    let path = p.to_str().unwrap();
    let o = run(&["reduce", "T", "--catalog", path, "--json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_ne!(v["catalog_sha256"], builtin);
    let o = run_env(&["reduce", "T"], &[("LIE_REDUCE_CATALOG", path)]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["reduce", "L2.1", "--catalog", path])), 2);
    assert_eq!(
        code(&run(&[
            "catalog",
            "list",
            "--catalog",
            "/nonexistent/catalog.txt"
        ])),
        2
    );
    std::fs::write(&p, "[case T]\nbogus line\n").unwrap();
    assert_eq!(code(&run(&["catalog", "list", "--catalog", path])), 2);
}

#[test]
fn catalog_list_and_show() {
    let o = run(&["catalog", "list"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l.starts_with("L2.12b2")));
    let o = run(&["catalog", "show", "L2.11", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"]["reduced"], "w^2 - w'");
    assert_eq!(code(&run(&["catalog", "show", "nope"])), 2);
}

#[test]
fn timings_are_opt_in() {
    let (_, v) = json(&["verify-symmetries", "--only", "generators"]);
    assert!(checks(&v).iter().all(|c| c.get("wall_ms").is_none()));
    let (_, v) = json(&["verify-symmetries", "--only", "generators", "--timings"]);
    assert!(checks(&v).iter().all(|c| c["wall_ms"].is_number()));
    schema_valid(&v);
}
