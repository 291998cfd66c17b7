//! Finite outcome spaces, information partitions, posterior beliefs and
//! optimal actions, and common-knowledge predicates.
//!
//! Information sets (sigma-algebras) are partitions of the positive-weight
//! profiles. "Almost surely" becomes "on every positive-weight block".

mod partition;
mod space;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use partition::{
    initial_partitions, is_common_knowledge, is_common_knowledge_at, is_measurable, meet, refine_by_announcement, Announcement,
    Audience, InformationPartition,
};
pub use space::{OutcomeSpace, EXACT_BUDGET};

use crate::error::Result;
use crate::rational::{self, Ratio};
use crate::scenarios::Scenario;

/// Set of optimal actions: `{0}`, `{1}` or `{0,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionSet {
    #[serde(rename = "{0}")]
    Zero,
    #[serde(rename = "{1}")]
    One,
    #[serde(rename = "{0,1}")]
    Both,
}

impl ActionSet {
    /// Exact comparison of the posterior against 1/2.
    pub fn optimal(belief: &Ratio) -> Self {
        // 2 * numer vs denom, no floating point
        let twice: num_bigint::BigInt = belief.numer() * 2;
        match twice.cmp(belief.denom()) {
            std::cmp::Ordering::Less => ActionSet::Zero,
            std::cmp::Ordering::Greater => ActionSet::One,
            std::cmp::Ordering::Equal => ActionSet::Both,
        }
    }

    pub fn singleton(state: u8) -> Self {
        if state == 0 {
            ActionSet::Zero
        } else {
            ActionSet::One
        }
    }

    pub fn contains(self, action: u8) -> bool {
        matches!((self, action), (ActionSet::Both, _) | (ActionSet::Zero, 0) | (ActionSet::One, 1))
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionSet::Zero => "{0}",
            ActionSet::One => "{1}",
            ActionSet::Both => "{0,1}",
        })
    }
}

pub fn optimal_action_set(belief: &Ratio) -> ActionSet {
    ActionSet::optimal(belief)
}

/// Per-agent posterior beliefs at one profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefProfile(pub Vec<Ratio>);

impl BeliefProfile {
    /// All agents hold the same belief (exact equality).
    pub fn is_agreement(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    pub fn max_gap(&self) -> f64 {
        let vals: Vec<f64> = self.0.iter().map(rational::to_f64).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if vals.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

pub fn build_outcome_space(scenario: &Scenario) -> Result<OutcomeSpace> {
    OutcomeSpace::build(scenario)
}

/// `P(S=1 | block)`, exact.
pub fn posterior_belief(space: &OutcomeSpace, block: &[usize]) -> Result<Ratio> {
    space.posterior_of(block)
}

/// `P(S=1 | all signals)` at `profile`, exact.
pub fn pooled_posterior(space: &OutcomeSpace, profile: &[u16]) -> Result<Ratio> {
    space.pooled_posterior(profile)
}

/// Private beliefs of `agent` grouped by value.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub belief: Ratio,
    /// `P(B_u = belief)`
    pub probability: Ratio,
    /// `P(S = 1 | B_u = belief)`
    pub state_one: Ratio,
}

/// Groups the own-signal blocks of `agent` by private belief and reports the
/// conditional frequency of `S = 1` within each group.
pub fn belief_calibration(space: &OutcomeSpace, agent: usize) -> Result<Vec<CalibrationRow>> {
    let own = InformationPartition::own_signal(space, agent);
    let beliefs = own.beliefs(space)?;
    let mut groups: BTreeMap<Ratio, [BigUint; 2]> = BTreeMap::new();
    for (i, b) in beliefs.iter().enumerate() {
        let entry = groups.entry(b.clone()).or_insert_with(|| [BigUint::zero(), BigUint::zero()]);
        entry[0] += &space.numerators(i)[0];
        entry[1] += &space.numerators(i)[1];
    }
    Ok(groups
        .into_iter()
        .map(|(belief, [w0, w1])| {
            let total = &w0 + &w1;
            CalibrationRow {
                belief,
                probability: space.to_ratio(&total),
                state_one: space.to_ratio(&w1) / space.to_ratio(&total),
            }
        })
        .collect())
}

/// `(P(B_u < eps), P(S = 0 | B_u < eps))`; `None` when the event is null.
pub fn lower_tail(space: &OutcomeSpace, agent: usize, eps: &Ratio) -> Result<Option<(Ratio, Ratio)>> {
    let rows = belief_calibration(space, agent)?;
    let mut mass = Ratio::zero();
    let mut zero_mass = Ratio::zero();
    for row in rows.iter().filter(|r| &r.belief < eps) {
        mass += &row.probability;
        zero_mass += &row.probability * (Ratio::from_integer(1.into()) - &row.state_one);
    }
    if mass.is_zero() {
        return Ok(None);
    }
    let conditional = &zero_mass / &mass;
    Ok(Some((mass, conditional)))
}
