//! The verification report, first as shipped and then with every
//! noise-to-signal ratio halved, which the report must catch.
//!
//!     cargo run --release --example verify

use agreement_lab::harness::{verify_report, VerifyInputs};

fn main() -> agreement_lab::Result<()> {
    let good = verify_report(&VerifyInputs { trials: 5_000, ..Default::default() })?;
    print!("{}", good.to_text());
    let bad = verify_report(&VerifyInputs { d_scale: 0.5, trials: 0, ..Default::default() })?;
    println!("\nwith D halved: {} of {} checks fail", bad.failures(), bad.checks.len());
    for c in bad.checks.iter().filter(|c| c.margin < 0.0).take(3) {
        println!("  {} margin {:.3e}", c.name, c.margin);
    }
    Ok(())
}
