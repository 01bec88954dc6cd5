//! Runs every acceptance criterion and prints one line per criterion.
//! Exits non-zero when any criterion fails; skipped criteria do not fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use tap_acceptance::{criteria, Check};

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (number, title, run) in criteria() {
        if !filter.is_empty() && !filter.iter().any(|f| *f == number.to_string() || title.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let check = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let why = panic.downcast_ref::<String>().cloned().or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()));
            Check::Fail(format!("panicked: {}", why.unwrap_or_default()))
        });
        failed += usize::from(matches!(check, Check::Fail(_)));
        println!(
            "criterion {number} {title:<26} {} {:>6.1}s  {}",
            check.label(),
            start.elapsed().as_secs_f64(),
            check.detail()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
