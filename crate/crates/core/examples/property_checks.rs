//! Randomized checks of the transport inequalities, plus a deliberately
//! broken plan that the checker must reject.

use wq::check::{negative_control, run_checks};

fn main() -> wq::Result<()> {
    let summary = run_checks(50, 7)?;
    for p in &summary.properties {
        println!("{:<14} {:>3}/{:<3} worst excess {:.2e}", p.name, p.passed, p.trials, p.worst);
    }
    println!("all passed: {}", summary.all_passed);
    let control = negative_control();
    println!("negative control: {} failure(s), {}", control.failed, control.first_failure.unwrap_or_default());
    Ok(())
}
