use std::process::Command;

use dtcausal::cli::run;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn records(args: &[&str]) -> (i32, String, String) {
    let mut full = vec!["dtcausal", "--format", "records"];
    full.extend_from_slice(args);
    let out = run(full);
    (out.code, out.stdout, out.stderr)
}

fn field<'a>(stdout: &'a str, key: &str) -> Vec<&'a str> {
    stdout
        .lines()
        .filter_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .collect()
}

#[test]
fn dsep_chain_and_collider() {
    let chain = fixture("chain.graph");
    let (code, out, _) = records(&["dsep", "--graph", &chain, "--a", "A", "--b", "C", "--given", "B"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "result"), ["SEPARATED"]);

    let collider = fixture("collider.graph");
    let (_, out, _) = records(&["dsep", "--graph", &collider, "--a", "A", "--b", "C", "--given", "B"]);
    assert_eq!(field(&out, "result"), ["CONNECTED"]);
    assert_eq!(field(&out, "path"), ["A - C"]);
    let (_, out, _) = records(&["dsep", "--graph", &collider, "--a", "A", "--b", "C"]);
    assert_eq!(field(&out, "result"), ["SEPARATED"]);
}

#[test]
fn identify_backdoor_matches_truth() {
    let (code, out, _) = records(&[
        "identify",
        "--graph",
        &fixture("confounded.graph"),
        "--query",
        "P(Y=1 | do(T=1))",
        "--model",
        &fixture("confounded.model"),
    ]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "estimand"), ["sum_{U} P(U) * P(Y | T,U)"]);
    let value: f64 = field(&out, "value")[0].parse().unwrap();
    let truth: f64 = field(&out, "truth")[0].parse().unwrap();
    assert!((value - truth).abs() < 1e-12);
}

#[test]
fn bow_is_not_identified() {
    let (code, _, err) = records(&["identify", "--graph", &fixture("bow.graph"), "--query", "P(Y | do(X))"]);
    assert_eq!(code, 1);
    assert!(err.contains("not identified"));
}

#[test]
fn weak_instrument_is_refused() {
    let (code, _, err) = records(&[
        "estimate",
        "iv",
        "--data",
        &fixture("zero_instrument.csv"),
        "--instrument",
        "Z",
        "--treatment",
        "X",
        "--outcome",
        "Y",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("weak"), "{err}");
}

#[test]
fn input_errors_exit_two() {
    let (code, _, _) = records(&["dsep", "--graph", &fixture("missing.graph"), "--a", "A", "--b", "B"]);
    assert_eq!(code, 2);
    let (code, _, err) = records(&["dsep", "--graph", &fixture("chain.graph"), "--a", "A", "--b", "Q"]);
    assert_eq!(code, 2);
    assert!(err.contains('Q'));
    let (code, _, _) = records(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn gformula_agrees_with_oracle() {
    let (code, out, _) = records(&[
        "gformula",
        "--model",
        &fixture("two_stage.model"),
        "--strategy",
        &fixture("responsive.strategy"),
        "--outcome",
        "Y",
    ]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "ignorable"), ["true"]);
    let g: f64 = field(&out, "consequence")[0].parse().unwrap();
    let oracle: f64 = field(&out, "oracle")[0].parse().unwrap();
    assert!((g - oracle).abs() < 1e-12);
}

#[test]
fn axioms_report_derivation() {
    let (code, out, _) = records(&["axioms", "--premise", "A _||_ B | C", "--query", "B _||_ A | C"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "entailed"), ["true"]);
    assert!(field(&out, "derivation").iter().any(|d| d.contains("P1")));
}

#[test]
fn output_is_byte_stable() {
    let args = ["simulate", "--model", &fixture("confounded.model"), "--n", "50", "--seed", "9"];
    let (a, b) = (records(&args), records(&args));
    assert_eq!(a, b);
    let mut other = args;
    other[6] = "10";
    assert_ne!(records(&other).1, a.1);

    let args = ["equiv", "--graph", &fixture("chain.graph"), "--other", &fixture("collider.graph")];
    assert_eq!(records(&args), records(&args));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dtcausal");
    let ok = Command::new(bin)
        .args(["dsep", "--graph", &fixture("chain.graph"), "--a", "A", "--b", "C", "--given", "B"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("SEPARATED"));
    let bow = Command::new(bin)
        .args(["identify", "--graph", &fixture("bow.graph"), "--query", "P(Y | do(X))"])
        .output()
        .unwrap();
    assert_eq!(bow.status.code(), Some(1));
}
