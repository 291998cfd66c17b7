//! Runs each announcement protocol on a small i.i.d. population and prints
//! the round-by-round trace at one profile, then checks that announcing
//! beliefs publicly ends at the pooled posterior everywhere.
//!
//!     cargo run --example agreement [n]

use agreement_lab::dynamics::{common_belief_is_pooled, run_protocol, Digraph, ProtocolKind};
use agreement_lab::knowledge::{InformationPartition, OutcomeSpace};
use agreement_lab::rational::ratio;
use agreement_lab::scenarios::iid_binary;

fn main() -> agreement_lab::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scenario = iid_binary(n, ratio(2, 3))?;
    let space = OutcomeSpace::build(&scenario)?;
    let own: Vec<_> = (0..n).map(|u| InformationPartition::own_signal(&space, u)).collect();
    let here: Vec<u16> = (0..n).map(|u| u16::from(u % 2 == 0)).collect();

    for kind in [
        ProtocolKind::PublicBelief,
        ProtocolKind::PublicAction,
        ProtocolKind::PublicStatistic,
        ProtocolKind::NetworkBelief(Digraph::ring(n)),
    ] {
        let out = run_protocol(&kind.clone().into(), &space, own.clone(), &here)?;
        println!(
            "== {kind}: fixed point after {} round(s); beliefs CK: {}, actions CK: {}",
            out.trace.rounds_to_fixed_point, out.beliefs_common_knowledge, out.actions_common_knowledge
        );
        print!("{}", out.trace.to_csv()?);
        let beliefs: Vec<String> = out.beliefs.0.iter().map(|b| b.to_string()).collect();
        println!("final beliefs at {:?}: {}", here, beliefs.join(" "));
        if matches!(kind, ProtocolKind::PublicBelief) {
            println!("common belief = pooled posterior everywhere: {:?}", common_belief_is_pooled(&space, &out.partitions)?);
        }
        println!();
    }
    Ok(())
}
