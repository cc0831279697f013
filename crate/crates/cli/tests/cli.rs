use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_refund-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Value of `column` in the first CSV row whose first cells equal `key`.
fn csv_value(text: &str, key: &[&str], column: &str) -> f64 {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|cells| cells.iter().zip(key).all(|(c, k)| c == k))
        .unwrap_or_else(|| panic!("no row {key:?} in\n{text}"))[idx]
        .parse()
        .unwrap()
}

fn table_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| {
            let mut parts = l.split_whitespace();
            (parts.next() == Some(key)).then(|| parts.collect::<Vec<_>>().join(" "))
        })
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn compute_examples() {
    let out = run(&["compute", "--mu", "0.75", "--gamma", "0.25"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(table_value(&text, "v_star"), "0.666666666667");
    assert_eq!(table_value(&text, "beta_star"), "1");
    assert_eq!(table_value(&text, "branch"), "low_cost");

    let text = stdout(&run(&["compute", "--mu", "0.75", "--gamma", "0.5"]));
    assert_eq!(table_value(&text, "v_star"), "0.5");

    let text = stdout(&run(&["compute", "--mu", "0.75", "--gamma", "0.8"]));
    let v: f64 = table_value(&text, "v_star").parse().unwrap();
    let beta: f64 = table_value(&text, "beta_star").parse().unwrap();
    assert!((v - 0.391_963_700_256).abs() < 1e-11);
    assert!((beta - 0.218_951_933_386).abs() < 1e-11);
    assert_eq!(
        table_value(&text, "discount_interval"),
        "[0.391963700256, 0.8]"
    );
}

#[test]
fn compute_with_match_value() {
    let text = stdout(&run(&[
        "compute", "--mu", "0.75", "--cost", "2", "--v-bar", "2",
    ]));
    assert_eq!(table_value(&text, "gamma"), "0.5");
    assert_eq!(table_value(&text, "scaled_profit"), "1");
    let text = stdout(&run(&["compute", "--mu", "0.75", "--cost", "4"]));
    assert_eq!(table_value(&text, "gamma"), "0.8");
}

#[test]
fn invalid_parameters_exit_2() {
    for args in [
        &["compute", "--mu", "1.5", "--gamma", "0.5"][..],
        &["compute", "--mu", "0.5", "--gamma", "-0.1"],
        &["compute", "--mu", "0.5"],
        &[
            "evaluate",
            "--mu",
            "0.5",
            "--gamma",
            "0.5",
            "--policy",
            "nope",
            "--distribution",
            "rs",
        ],
        &[
            "evaluate",
            "--mu",
            "0.5",
            "--gamma",
            "0.5",
            "--policy",
            "generous_refund",
            "--distribution",
            "random:3",
        ],
        &["compute", "--bogus"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_lists_every_flag() {
    let text = stdout(&run(&["evaluate", "--help"]));
    for flag in [
        "--scenario",
        "--mu",
        "--gamma",
        "--cost",
        "--v-bar",
        "--policy",
        "--distribution",
        "--tie",
        "--grid-n",
        "--seed",
        "--mc-samples",
        "--output",
        "--check",
    ] {
        assert!(text.contains(flag), "{flag} missing from\n{text}");
    }
    let text = stdout(&run(&["--help"]));
    for verb in [
        "compute",
        "evaluate",
        "adversary",
        "mechanism",
        "figures",
        "certify",
    ] {
        assert!(text.contains(verb));
    }
}

#[test]
fn evaluate_robust_refund_policy_on_worst_case() {
    let out = run(&[
        "evaluate",
        "--mu",
        "0.75",
        "--gamma",
        "0.8",
        "--policy",
        "robust_refund_policy",
        "--distribution",
        "worst_case",
        "--seed",
        "5",
        "--mc-samples",
        "200000",
        "--check",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let key = ["robust_refund_policy", "worst_case"];
    for route in ["closed_form", "generic"] {
        let v = csv_value(&text, &[key[0], key[1], route], "value");
        assert!((v - 0.391_963_700_256).abs() < 1e-11);
    }
    let mc = csv_value(&text, &[key[0], key[1], "monte_carlo"], "value");
    let se = csv_value(&text, &[key[0], key[1], "monte_carlo"], "std_error");
    assert!((mc - 0.391_963_700_256).abs() < 4.0 * se);
}

#[test]
fn scenario_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "s.json",
        r#"{
            "mu": 0.5, "gamma": 0.2,
            "policies": ["generous_refund", {"components": [{"weight": 1, "kind": "offer", "p": 0.3}]}],
            "distributions": ["point_mass", {"locations": [0.0, 1.0], "masses": [0.5, 0.5]}]
        }"#,
    );
    let s = scenario.to_str().unwrap();
    let text = stdout(&run(&["evaluate", "--scenario", s]));
    // generous refund against a point mass above gamma: (mu - gamma) / (1 - gamma)
    let v = csv_value(
        &text,
        &["generous_refund", "point_mass", "generic"],
        "value",
    );
    assert!((v - 0.375).abs() < 1e-12);
    assert!(
        (csv_value(&text, &["policy_1", "point_mass", "generic"], "value") - 0.3).abs() < 1e-12
    );
    assert!(
        (csv_value(&text, &["policy_1", "discrete_1", "generic"], "value") - 0.15).abs() < 1e-12
    );

    // flags replace the file's market and policies
    let text = stdout(&run(&[
        "evaluate",
        "--scenario",
        s,
        "--gamma",
        "0.6",
        "--policy",
        "generous_refund",
    ]));
    let v = csv_value(
        &text,
        &["generous_refund", "point_mass", "generic"],
        "value",
    );
    assert_eq!(v, 0.0);
    assert!(!text.contains("policy_1"));
}

#[test]
fn scenario_with_unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "s.json",
        r#"{"mu": 0.5, "gamma": 0.2, "colour": "red"}"#,
    );
    let out = run(&["evaluate", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let missing = dir.path().join("missing.json");
    let out = run(&["evaluate", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "evaluate".to_string(),
            "--mu".into(),
            "0.6".into(),
            "--gamma".into(),
            "0.7".into(),
            "--policy".into(),
            "robust_refund_policy".into(),
            "--policy".into(),
            "robust_random_pricing".into(),
            "--distribution".into(),
            "random:4".into(),
            "--distribution".into(),
            "rs".into(),
            "--seed".into(),
            "11".into(),
            "--mc-samples".into(),
            "20000".into(),
            "--output".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(bin()
        .args(args(&a))
        .env("REFUND_LAB_THREADS", "1")
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .args(args(&b))
        .env("REFUND_LAB_THREADS", "3")
        .status()
        .unwrap()
        .success());
    let a = std::fs::read(a).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(b).unwrap());
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = bin()
        .args(["compute", "--mu", "0.5", "--gamma", "0.5"])
        .env("REFUND_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn adversary_on_robust_random_pricing() {
    let out = run(&[
        "adversary",
        "--mu",
        "0.5",
        "--gamma",
        "0.4",
        "--policy",
        "robust_random_pricing",
        "--check",
    ]);
    assert!(out.status.success());
    let v = csv_value(&stdout(&out), &["robust_random_pricing"], "value");
    assert!((v - 0.186_682_308_851).abs() < 1e-9);
}

#[test]
fn adversary_reads_policy_file() {
    let dir = tempfile::tempdir().unwrap();
    let policy = write(
        dir.path(),
        "p.json",
        r#"{"components": [{"weight": 1, "kind": "offer", "p": 0.2}]}"#,
    );
    let spec = format!("json:{}", policy.display());
    let out = run(&[
        "adversary",
        "--mu",
        "0.5",
        "--gamma",
        "0.4",
        "--policy",
        &spec,
        "--check",
    ]);
    assert!(out.status.success());
    let v = csv_value(&stdout(&out), &["p"], "value");
    assert!((v - 0.2 * 0.3 / 0.8).abs() < 1e-12);
}

#[test]
fn mechanism_on_worst_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "mechanism",
        "--mu",
        "0.75",
        "--gamma",
        "0.8",
        "--distribution",
        "worst_case",
        "--distribution",
        "full_info",
        "--check",
        "--allocations-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let v = csv_value(&text, &["worst_case"], "value");
    assert!((v - 0.391_963_700_256).abs() < 2e-3);
    assert_eq!(csv_value(&text, &["full_info"], "value"), 0.75);
    let alloc = std::fs::read_to_string(dir.path().join("full_info.csv")).unwrap();
    // selling at 1 and refunding generously earn the same; either is optimal
    assert_eq!(alloc, "q,alpha0,alpha_r\n0,0,0\n1,0,1\n");
}

#[test]
fn evaluate_check_fails_on_monte_carlo_disagreement() {
    // With three samples some seed lands outside 4 standard errors.
    let tripped = (0..200).any(|seed| {
        let out = run(&[
            "evaluate",
            "--mu",
            "0.5",
            "--gamma",
            "0.5",
            "--policy",
            "robust_random_pricing",
            "--distribution",
            "full_info",
            "--seed",
            &seed.to_string(),
            "--mc-samples",
            "3",
            "--check",
        ]);
        out.status.code() == Some(1)
    });
    assert!(tripped);
}

#[test]
fn figures_match_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["figures", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let entry = entry.unwrap();
        let fresh = std::fs::read(dir.path().join(entry.file_name())).unwrap();
        assert_eq!(
            fresh,
            std::fs::read(entry.path()).unwrap(),
            "{:?}",
            entry.file_name()
        );
    }
}

#[test]
fn figures_io_error_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "");
    let out = run(&[
        "figures",
        "--out-dir",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn certify_selected_criteria() {
    let fixtures = fixtures();
    let out = run(&[
        "certify",
        "--criterion",
        "1",
        "--criterion",
        "9",
        "--fixtures",
        fixtures.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);

    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "fig2.csv", "stale\n");
    let out = run(&[
        "certify",
        "--criterion",
        "9",
        "--fixtures",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("[FAIL]"));
}
