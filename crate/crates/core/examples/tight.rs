//! The construction with uncorrelated log-likelihood ratios whose agreed
//! action is wrong with probability of order 1/n, so `n` times the error
//! stays bounded away from zero.
//!
//!     cargo run --release --example tight

use agreement_lab::harness::{run_monte_carlo, Mode};
use agreement_lab::rational::to_f64;
use agreement_lab::scenarios::{tight_accuracy, uncorrelated_tight};

fn main() -> agreement_lab::Result<()> {
    let cov = uncorrelated_tight(8)?.max_conditional_llr_covariance()?;
    println!("max |Cov(z_u, z_v | S)| at n=8: {cov:.2e}\n");
    println!("{:>6} {:>10} {:>12} {:>10}", "n", "p(n)", "error", "n*error");
    for n in [8usize, 16, 32, 64, 128, 256] {
        let (p, _) = tight_accuracy(n)?;
        let r = run_monte_carlo(&uncorrelated_tight(n)?, &Mode::Pooled, 50_000, 3)?;
        println!("{n:>6} {:>10.6} {:>12.4e} {:>10.4}", to_f64(&p), r.error_rate(), n as f64 * r.error_rate());
    }
    Ok(())
}
