//! Log-likelihood ratios, divergences and the noise-to-signal ratio `D` for a
//! few signal models, plus what truncating the LLR does to `D`.
//!
//!     cargo run --example signals

use agreement_lab::rational::ratio;
use agreement_lab::scenarios::geometric_tail_model;
use agreement_lab::signal::{belief_from_llr, kl_divergence, symmetrized_divergence};
use agreement_lab::SignalModel;

fn describe(name: &str, m: &SignalModel) -> agreement_lab::Result<()> {
    println!("{name}");
    for (i, sym) in m.alphabet().iter().enumerate() {
        let z = m.llr_at(i)?;
        println!("  {sym:>4}  z = {:+.4}  belief = {:.4}", z.value(), belief_from_llr(z).value());
    }
    println!(
        "  KL(mu1||mu0) = {:.4}  KL(mu0||mu1) = {:.4}  sum = {:.4}  D = {:.4}",
        kl_divergence(m.mu1(), m.mu0())?,
        kl_divergence(m.mu0(), m.mu1())?,
        symmetrized_divergence(m),
        m.noise_to_signal_ratio()?.value()
    );
    Ok(())
}

fn main() -> agreement_lab::Result<()> {
    describe("binary, accuracy 2/3", &SignalModel::symmetric_binary(ratio(2, 3))?)?;
    let ternary = SignalModel::new(
        vec!["lo".into(), "mid".into(), "hi".into()],
        vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)],
        vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)],
    )?;
    describe("ternary", &ternary)?;

    let tail = geometric_tail_model(12, &ratio(7, 10))?;
    describe("geometric tail, k=12, rho=7/10", &tail)?;
    println!("  truncation:");
    for m in [0.5, 1.0, 2.0, 4.0, f64::INFINITY] {
        println!("    M = {m:>4}  D_M = {:.4}", tail.truncated_noise_to_signal_ratio(m)?.value());
    }
    Ok(())
}
