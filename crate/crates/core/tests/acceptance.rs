//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use drl2::harness::checks::{criteria, Budget};

fn main() -> ExitCode {
    let budget = Budget::default();
    let mut failed = 0;
    for c in criteria() {
        let start = Instant::now();
        let (status, detail) = match (c.check)(&budget) {
            Ok(v) => (if v.passed { "PASS" } else { "FAIL" }, v.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {} {}: {detail} ({:.1}s)", c.id, c.title, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
