//! Golden-file checks: report and sweep artifacts are byte-stable across
//! builds and platforms. Regenerate with GOLDEN_REGEN=1 after an
//! intentional format change and review the diff.

use std::path::PathBuf;

use startail_core::bounds::{pipeline_const_eps, Constants};
use startail_core::montecarlo::{sweep, Estimator, GridSpec};
use startail_core::prob::EdgeProb;

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var("GOLDEN_REGEN").is_ok() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
    assert_eq!(
        actual, expected,
        "{name} drifted from its golden copy (GOLDEN_REGEN=1 to refresh)"
    );
}

#[test]
fn pipeline_report_json_is_stable() {
    let rep = pipeline_const_eps(30, 0.1, 2, 1.0, &Constants::default()).unwrap();
    let json = serde_json::to_string_pretty(&rep.to_json()).unwrap() + "\n";
    check("pipeline_const_eps_n30.json", &json);
}

#[test]
fn exact_sweep_csv_is_stable() {
    let grid = GridSpec {
        n: vec![4, 5],
        p: vec![
            EdgeProb::from_fraction(3, 10).unwrap(),
            EdgeProb::from_fraction(7, 10).unwrap(),
        ],
        r: vec![2],
        eps: vec![0.5, 1.0],
    };
    let csv = sweep(&grid, &Estimator::Exact, &Constants::default()).unwrap();
    check("sweep_exact_small.csv", &csv);
}
