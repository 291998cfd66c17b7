//! Outcome spaces and information partitions: own-signal partitions, a
//! refinement by a public announcement, the meet, and common knowledge.
//!
//!     cargo run --example partitions

use agreement_lab::knowledge::{
    is_common_knowledge, meet, refine_by_announcement, Announcement, Audience, InformationPartition, OutcomeSpace,
};
use agreement_lab::rational::ratio;
use agreement_lab::scenarios::iid_binary;

fn main() -> agreement_lab::Result<()> {
    let scenario = iid_binary(3, ratio(2, 3))?;
    let space = OutcomeSpace::build(&scenario)?;
    println!("{} profiles", space.len());
    for i in 0..space.len() {
        println!("  {:<8} P(x, S=0) = {:<6} P(x, S=1) = {:<6} pooled = {}", space.render(i), space.weight(0, i), space.weight(1, i), space.pooled_posterior(space.profile(i))?);
    }

    let own: Vec<_> = (0..3).map(|u| InformationPartition::own_signal(&space, u)).collect();
    println!("\nagent 0 before any announcement:\n{}", own[0].dump(&space));

    // agent 1 announces its belief; everyone refines by it
    let announced = Announcement { speaker: 1, values: own[1].beliefs(&space)? };
    let refined = refine_by_announcement(&own, &[announced], &Audience::Public)?;
    println!("agent 0 after agent 1 announces:\n{}", refined[0].dump(&space));

    println!("meet of the own-signal partitions: {} component(s)", meet(&own).iter().collect::<std::collections::BTreeSet<_>>().len());
    let pooled: Vec<_> = (0..space.len()).map(|i| space.pooled_posterior(space.profile(i))).collect::<Result<_, _>>()?;
    println!("pooled posterior common knowledge at the start? {}", is_common_knowledge(&own, &[pooled]));
    Ok(())
}
