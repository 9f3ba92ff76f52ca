use std::process::{Command, Output};

const UNIFORM2: &str = r#"[{"family":"uniform_half"},{"family":"uniform_half"}]"#;
const MIXED: &str = r#"[{"family":"frechet","theta":0.1},{"family":"weibull_galambos","theta":0.3}]"#;

fn evcop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evcop"))
        .args(args)
        .env_remove("EVCOP_SEED")
        .output()
        .expect("binary runs")
}

fn parse_csv(text: &str, d: usize) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    let header: Vec<String> = (1..=d).map(|i| format!("u{i}")).collect();
    assert_eq!(lines.next().unwrap(), header.join(","));
    lines
        .map(|l| {
            let row: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(row.len(), d);
            assert!(row.iter().all(|u| (0.0..=1.0).contains(u)));
            row
        })
        .collect()
}

#[test]
fn sample_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = evcop(&[
        "sample", "--model", UNIFORM2, "--n", "1000", "--seed", "7", "--method", "definetti", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(parse_csv(&text, 2).len(), 1000);
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let run = |threads: &str| {
        let out = evcop(&["sample", "--model", MIXED, "--n", "300", "--seed", "11", "--threads", threads]);
        assert!(out.status.success());
        out.stdout
    };
    let first = run("1");
    assert_eq!(first, run("1"));
    assert_eq!(first, run("3"));
}

#[test]
fn seed_falls_back_to_environment() {
    let with_flag = evcop(&["sample", "--model", UNIFORM2, "--n", "20", "--seed", "42"]).stdout;
    let with_env = Command::new(env!("CARGO_BIN_EXE_evcop"))
        .args(["sample", "--model", UNIFORM2, "--n", "20"])
        .env("EVCOP_SEED", "42")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(with_flag, with_env);
}

#[test]
fn model_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    std::fs::write(&path, UNIFORM2).unwrap();
    let arg = format!("@{}", path.display());
    let out = evcop(&["sample", "--model", &arg, "--n", "5", "--seed", "1"]);
    assert!(out.status.success());
    assert_eq!(parse_csv(&String::from_utf8(out.stdout).unwrap(), 2).len(), 5);
}

#[test]
fn scatter_preset() {
    let out = evcop(&["scatter", "--model", MIXED, "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(parse_csv(&String::from_utf8(out.stdout).unwrap(), 2).len(), 5000);
    let three = r#"[{"family":"uniform_half"},{"family":"uniform_half"},{"family":"uniform_half"}]"#;
    assert!(!evcop(&["scatter", "--model", three]).status.success());
}

#[test]
fn errors_exit_nonzero_with_message() {
    let cases: [&[&str]; 5] = [
        &["sample", "--model", r#"[{"family":"frechet","theta":1.5}]"#, "--n", "3"],
        &["sample", "--model", MIXED, "--n", "3", "--method", "definetti"],
        &["sample", "--model", UNIFORM2, "--n", "0"],
        &["sample", "--model", UNIFORM2, "--n", "3", "--bogus"],
        &["stdf-eval", "--model", UNIFORM2, "--t", "1,2,3"],
    ];
    for args in cases {
        let out = evcop(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let msg = String::from_utf8(evcop(cases[1]).stderr).unwrap();
    assert!(msg.contains("bounded support"), "{msg}");
}

#[test]
fn stdf_eval_prints_values() {
    let gumbel = r#"[{"family":"frechet","theta":0.5},{"family":"frechet","theta":0.5}]"#;
    let out = evcop(&["stdf-eval", "--model", gumbel, "--t", "1,1", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["stdf"]["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert!((v["copula"].as_f64().unwrap() - (-2f64.sqrt()).exp()).abs() < 1e-12);
    let out = evcop(&["stdf-eval", "--model", UNIFORM2, "--u", "0.5,0.5", "--eval", "levy"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("C(u)"));
}

#[test]
fn levy_roundtrip_reports_small_errors() {
    let model = r#"[{"family":"uniform_half"},{"family":"bounded_exp","theta":0.5},{"family":"point_mass"}]"#;
    let out = evcop(&["levy-roundtrip", "--model", model]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bounded_exp(0.5)") && text.contains("max error"));
}

#[test]
fn bench_writes_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    let out = evcop(&["bench", "--dims", "2,5", "--n", "50", "--json", path.to_str().unwrap()]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("Dimension d"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 4);
}
