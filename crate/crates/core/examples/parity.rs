//! Two constructions where agreement does not mean learning: the parity
//! example, where nobody's belief ever moves, and the two-bit example, where
//! agents agree on an action that is wrong with constant probability.
//!
//!     cargo run --example parity

use agreement_lab::dynamics::{outcome_law, run_protocol, ProtocolKind};
use agreement_lab::harness::{run_monte_carlo, Mode};
use agreement_lab::knowledge::{InformationPartition, OutcomeSpace};
use agreement_lab::rational::to_f64;
use agreement_lab::scenarios::{parity, two_bit};

fn main() -> agreement_lab::Result<()> {
    for n in [3usize, 4, 5] {
        let space = OutcomeSpace::build(&parity(n)?)?;
        let own: Vec<_> = (0..n).map(|u| InformationPartition::own_signal(&space, u)).collect();
        let out = run_protocol(&ProtocolKind::PublicBelief.into(), &space, own, space.profile(0))?;
        let law = outcome_law(&space, &out.partitions, 0)?;
        println!(
            "parity n={n}: rounds {}, beliefs {:?}, P(success) {} P(tie) {}",
            out.trace.rounds_to_fixed_point,
            out.beliefs.0.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
            law.success,
            law.tie
        );
    }
    println!("parity, all signals pooled, n=1000: {}", summary(&Mode::Pooled, 1000, true)?);

    // at n=4 the tight accuracy is 1/2 and every signal is noise
    let n = 8;
    let space = OutcomeSpace::build(&two_bit(n)?)?;
    let own: Vec<_> = (0..n).map(|u| InformationPartition::own_signal(&space, u)).collect();
    let out = run_protocol(&ProtocolKind::PublicAction.into(), &space, own, space.profile(0))?;
    let law = outcome_law(&space, &out.partitions, 0)?;
    println!("two_bit n={n}, public actions: error {:.4}", to_f64(&law.error()));
    println!("two_bit, all signals pooled, n=1000: {}", summary(&Mode::Pooled, 1000, false)?);
    Ok(())
}

fn summary(mode: &Mode, n: usize, par: bool) -> agreement_lab::Result<String> {
    let s = if par { parity(n)? } else { two_bit(n)? };
    let r = run_monte_carlo(&s, mode, 20_000, 1)?;
    Ok(format!("action accuracy {:.4} +- {:.4}", r.action_accuracy(), r.action_accuracy_stderr()))
}
