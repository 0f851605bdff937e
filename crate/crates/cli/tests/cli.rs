use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mshit_cli::{parse_invocation, CliError, Command as Sub, RunConfig};
use mshit_core::{GeneratorSpec, Interval};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mshit"));
    c.env_remove("MSHIT_DEFAULT_N");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn generator_file(dir: &Path, spec: &GeneratorSpec) -> PathBuf {
    let p = dir.join(format!("{}.json", spec.name()));
    fs::write(&p, spec.to_json()).unwrap();
    p
}

fn argv(args: &[&str]) -> Vec<String> {
    std::iter::once("mshit")
        .chain(args.iter().copied())
        .map(String::from)
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn hitting_config_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let g = generator_file(dir.path(), &GeneratorSpec::two_branch());
    let cfg = parse_invocation(argv(&[
        "hitting",
        "--generator",
        g.to_str().unwrap(),
        "--x",
        "-1",
        "--seed",
        "42",
    ]))
    .unwrap();
    assert_eq!(cfg.grid_points, 1001);
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.generator, Some(GeneratorSpec::two_branch()));
    assert_eq!(
        cfg.command,
        Sub::Hitting {
            levels: vec![-1.0],
            interval: Interval::unit()
        }
    );
    if std::env::var_os("MSHIT_DEFAULT_N").is_none() {
        assert_eq!(cfg.n, 100_000);
    }
}

#[test]
fn verify_config_needs_no_generator() {
    let cfg = parse_invocation(argv(&[
        "verify",
        "--suite",
        "paper",
        "--seed",
        "7",
        "--out",
        "report.json",
    ]))
    .unwrap();
    assert_eq!(cfg.generator, None);
    assert_eq!(cfg.out, Some(PathBuf::from("report.json")));
    assert_eq!(
        cfg.command,
        Sub::Verify {
            suite: vec!["paper".into()],
            timing: true
        }
    );
}

#[test]
fn positive_level_is_a_usage_error() {
    let err = parse_invocation(argv(&["hitting", "--x", "0.5"])).unwrap_err();
    assert!(
        matches!(&err, CliError::Usage(m) if m.contains("level must be negative")),
        "{err}"
    );
    let out = run(&["hitting", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("level must be negative"));
}

#[test]
fn usage_errors_name_the_offending_token() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"variant": "sine_bump", "params": {"amp": 1.5}}"#).unwrap();
    let out = run(&["simulate", "--generator", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"variant\": ").unwrap();
    let out = run(&["simulate", "--generator", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("malformed generator JSON"));

    let out = run(&["simulate", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--bogus-flag"));

    let out = run(&["verify", "--suite", "no-such-check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no-such-check"));

    let out = run(&[
        "multihit",
        "--x",
        "-1",
        "--intervals",
        "0,0.5;0.4,1",
        "--generator",
        "x.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("overlap"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}

#[test]
fn config_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let g = generator_file(dir.path(), &GeneratorSpec::nonlinear_default());
    let g = g.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["simulate", "--generator", g, "--k", "3", "--threads", "2"],
        vec![
            "dnorm",
            "--generator",
            g,
            "--f",
            r#"{"shape": "piecewise_linear", "breakpoints": [[0, -0.5], [1, -1.5]]}"#,
        ],
        vec!["dnorm", "--generator", g, "--interval", "0.1,0.7"],
        vec![
            "hitting",
            "--generator",
            g,
            "--level-count",
            "25",
            "--interval",
            "0.2,0.9",
        ],
        vec!["hitting", "--generator", g, "--levels", "-0.3,-1.7,-0.1"],
        vec!["multihit", "--generator", g, "--x", "-1", "--t0", "0.5"],
        vec![
            "multihit",
            "--generator",
            g,
            "--x",
            "-1",
            "--times",
            "0,0.25,0.5",
        ],
        vec![
            "multihit",
            "--generator",
            g,
            "--x",
            "-1",
            "--intervals",
            "0,0.3;0.4,0.6;0.7,1",
            "--k",
            "3",
        ],
        vec!["verify", "--suite", "eq2-roundtrip,final-h", "--no-timing"],
    ];
    for args in invocations {
        let cfg = parse_invocation(argv(&args)).unwrap();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg, "{args:?}");
    }
}

#[test]
fn simulate_writes_k_columns_and_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let g = generator_file(dir.path(), &GeneratorSpec::sine_bump(0.5));
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(&[
            "simulate",
            "--generator",
            g.to_str().unwrap(),
            "--k",
            "3",
            "--seed",
            "5",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,path_0,path_1,path_2");
    assert_eq!(lines.len(), 1002);
    for row in &lines[1..] {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 4);
        assert!(cells[1..].iter().all(|v| *v < 0.0));
    }
    assert!(lines[1].starts_with("0,") || lines[1].starts_with("0.0"));
}

#[test]
fn hitting_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = generator_file(dir.path(), &GeneratorSpec::two_branch());
    let o = run(&[
        "hitting",
        "--generator",
        g.to_str().unwrap(),
        "--levels",
        "-0.5,-1,-2",
        "--n",
        "20000",
        "--seed",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,estimate,ci_lo,ci_hi,bound");
    assert_eq!(lines.len(), 4);
    for row in &lines[1..] {
        let v: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let h = (1.0 - v[0].exp() - v[0]) * v[0].exp();
        assert!((v[1] - h).abs() < 0.02, "{row}");
        assert!(v[2] <= v[1] && v[1] <= v[3]);
        assert!((v[4] - (1.0 - (2.0 * v[0]).exp())).abs() < 1e-12);
    }
    // Same argv, same bytes.
    let again = run(&[
        "hitting",
        "--generator",
        g.to_str().unwrap(),
        "--levels",
        "-0.5,-1,-2",
        "--n",
        "20000",
        "--seed",
        "3",
    ]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn multihit_and_dnorm_json() {
    let dir = tempfile::tempdir().unwrap();
    let g = generator_file(dir.path(), &GeneratorSpec::two_branch());
    let g = g.to_str().unwrap();
    let o = run(&[
        "multihit",
        "--generator",
        g,
        "--x",
        "-1",
        "--t0",
        "0.5",
        "--n",
        "20000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["query"]["kind"], "split");
    let p = v["estimate"]["value"].as_f64().unwrap();
    assert!((p - 0.056954).abs() < 0.01, "{p}");

    let o = run(&[
        "multihit",
        "--generator",
        g,
        "--x",
        "-1",
        "--intervals",
        "0,0.3;0.4,0.6;0.7,1",
        "--k",
        "3",
        "--n",
        "20000",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["estimate"]["value"].as_f64(), Some(0.0));

    let o = run(&[
        "dnorm",
        "--generator",
        g,
        "--f",
        r#"{"shape": "constant", "level": -1}"#,
        "--n",
        "20000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let d = v["estimate"]["value"].as_f64().unwrap();
    assert!((d - 2.0).abs() < 0.05, "{d}");
}

#[test]
fn env_overrides_replication_default() {
    let dir = tempfile::tempdir().unwrap();
    let g = generator_file(dir.path(), &GeneratorSpec::two_branch());
    let o = bin()
        .args([
            "multihit",
            "--generator",
            g.to_str().unwrap(),
            "--x",
            "-1",
            "--t0",
            "0.5",
        ])
        .env("MSHIT_DEFAULT_N", "500")
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["estimate"]["n"], 500);
}

#[test]
fn verify_single_check_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = run(&[
            "verify",
            "--suite",
            "example2-m",
            "--seed",
            "7",
            "--no-timing",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["suite"], "example2-m");
    assert_eq!(v["checks"].as_array().unwrap().len(), 1);
    assert_eq!(v["pass"], true);
}

#[test]
fn verify_paper_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "verify",
        "--suite",
        "paper",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(o.status.code(), Some(0), "report: {v}");
    assert_eq!(v["pass"], true);
    assert_eq!(v["n_default"], 100_000);
}
