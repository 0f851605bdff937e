use mshit_core::verify::{registry, run_checks, RunOptions};

#[test]
fn paper_suite_passes_at_seed_7() {
    let report = run_checks(&["paper"], 7, &RunOptions::default()).unwrap();
    let failing: Vec<_> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| &c.id)
        .collect();
    assert!(report.pass, "failing checks: {failing:?}");
    assert_eq!(report.checks.len(), registry().len());
    assert_eq!(report.suite, "paper");

    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    for key in ["suite", "seed", "n_default", "checks", "pass"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    for check in json["checks"].as_array().unwrap() {
        for key in ["id", "observed", "expected", "tol", "pass", "seconds"] {
            assert!(check.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn single_check_report() {
    let opts = RunOptions {
        n_default: 5_000,
        timing: false,
        ..RunOptions::default()
    };
    let report = run_checks(&["eq2-roundtrip"], 7, &opts).unwrap();
    assert_eq!(report.checks.len(), 1);
    assert_eq!(report.checks[0].id, "eq2-roundtrip");
    assert_eq!(report.checks[0].seconds, 0.0);
    let again = run_checks(&["eq2-roundtrip"], 7, &opts).unwrap();
    assert_eq!(report.to_json(), again.to_json());
}

#[test]
fn unknown_check_is_an_error() {
    assert!(run_checks(&["no-such-check"], 7, &RunOptions::default()).is_err());
}
