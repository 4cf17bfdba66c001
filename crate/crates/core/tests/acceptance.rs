//! Runs every acceptance criterion and prints one PASS/FAIL line for each.

use std::io::Write;

use stoch_euler::harness::acceptance::{run_suite, Criterion};

#[test]
fn acceptance_suite() {
    let (outputs, evals) = run_suite(&Criterion::ALL);
    // Written to the raw handle so the lines show up without --nocapture.
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for e in &evals {
        writeln!(out, "{}  ({:.1} s)", e.check.summary_line(), e.seconds).unwrap();
    }
    out.flush().unwrap();
    let failed: Vec<&str> = outputs.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
