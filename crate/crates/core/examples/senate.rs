//! The senate: only a fixed group of 100 agents ever speaks, so the error of
//! the agreed action stops improving however large the population gets.
//!
//!     cargo run --example senate

use agreement_lab::bounds::theorem2_bounds;
use agreement_lab::dynamics::{analyze_staged, binomial_cdf, ProtocolKind};
use agreement_lab::harness::{mix_seed, noise_to_signal, run_monte_carlo, Mode};
use agreement_lab::rational::{ratio, to_f64};
use agreement_lab::scenarios::senate;

fn main() -> agreement_lab::Result<()> {
    let tail = to_f64(&binomial_cdf(100, &ratio(2, 3), 50));
    println!("P(Bin(100, 2/3) <= 50) = {tail:.6e}\n");
    println!("{:>7} {:>12} {:>12} {:>12}", "n", "exact error", "mc error", "i.i.d. bound");
    for n in [200usize, 1_000, 5_000, 100_000] {
        let s = senate(n, 100, ratio(2, 3))?;
        let a = analyze_staged(&s, &ProtocolKind::PublicAction)?;
        // sampling draws every agent's signal, so the largest size is exact only
        let mc = if n <= 5_000 {
            let r = run_monte_carlo(&s, &Mode::Protocol(ProtocolKind::PublicAction), 40_000, mix_seed(7, n))?;
            format!("{:.4e}", r.error_rate())
        } else {
            "-".to_string()
        };
        // the bound is for independent signals; the senate is far from that
        let bound = noise_to_signal(&s).map(|d| 1.0 - theorem2_bounds(n, agreement_lab::NoiseToSignal(d)).action_bound);
        println!(
            "{n:>7} {:>12.4e} {:>12} {:>12}",
            to_f64(&a.outcome.error()),
            mc,
            bound.map_or("-".to_string(), |b| format!("{b:.4e}"))
        );
    }
    Ok(())
}
