//! The built-in counterexamples: criteria for which the conditional
//! probability measure is beaten.

use conformal_efficiency::oracle::{verify_counterexample, COUNTEREXAMPLE_IDS};

fn main() -> conformal_efficiency::Result<()> {
    for id in COUNTEREXAMPLE_IDS {
        let report = verify_counterexample(id, None)?;
        for line in report.lines("builtin") {
            println!("{line}");
        }
    }
    Ok(())
}
