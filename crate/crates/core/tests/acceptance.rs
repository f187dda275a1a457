//! Acceptance gate: every criterion at the stated sample sizes and
//! tolerances, one PASS/FAIL line each.
//!
//! Run alone with `cargo test -p movopt --test acceptance -- --nocapture`.

use movopt::validate::{run_all, Budget, ValidateOptions, CRITERIA};

#[test]
fn acceptance_criteria() {
    let scratch = tempfile::tempdir().unwrap();
    let opts = ValidateOptions::new(Budget::Full, scratch.path());
    let report = run_all(&opts, |c| println!("{}", c.summary_line()));

    let ids: Vec<&str> = report.criteria.iter().map(|c| c.id.as_str()).collect();
    let expected: Vec<&str> = CRITERIA.iter().map(|c| c.0).collect();
    assert_eq!(ids, expected);

    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            let checks: Vec<String> = c
                .checks
                .iter()
                .filter(|k| !k.passed)
                .map(|k| format!("{} = {:.4e}", k.name, k.measured))
                .collect();
            format!("{} [{}]{}", c.id, checks.join(", "), c.error.as_deref().map(|e| format!(" {e}")).unwrap_or_default())
        })
        .collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join("; "));
}
