//! Lumped exact analysis of staged scenarios at sizes the enumerating engine
//! cannot reach.
//!
//! One pre-pooled group of i.i.d. agents speaks; everyone else only listens.
//! Everything a group member announces is a function of the group's signal
//! histogram, so listeners learn the class of that histogram under the
//! announced statistic and nothing more. After that round nobody refines
//! again: the group already knows everything it could hear.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{OutcomeLaw, ProtocolKind};
use crate::error::{LabError, Result};
use crate::knowledge::ActionSet;
use crate::multiset::histogram_law;
use crate::rational::{self, Ratio};
use crate::scenarios::{Scenario, Structure};
use crate::signal::SignalModel;

#[derive(Debug, Clone)]
pub struct StagedAnalysis {
    n: usize,
    group: Vec<usize>,
    model: SignalModel,
    /// Histogram of group signals -> announcement class.
    class_of: HashMap<Vec<u32>, usize>,
    /// Per class: group action set, group posterior, `P(class | S)`.
    classes: Vec<StagedClass>,
    /// `listener_actions[class][symbol]`
    listener_actions: Vec<Vec<ActionSet>>,
    pub outcome: OutcomeLaw,
    pub rounds_to_fixed_point: usize,
}

#[derive(Debug, Clone)]
pub struct StagedClass {
    pub action: ActionSet,
    pub posterior: Ratio,
    pub probability: [Ratio; 2],
}

/// Exact lumped analysis of a one-group staged scenario over an i.i.d. base.
pub fn analyze_staged(scenario: &Scenario, kind: &ProtocolKind) -> Result<StagedAnalysis> {
    let (model, group) = match scenario.structure() {
        Structure::Staged { base, groups } if groups.len() == 1 => match base.as_ref() {
            Structure::Iid(model) => (model.clone(), groups[0].clone()),
            _ => return Err(LabError::Parameter("lumped analysis needs an i.i.d. base".into())),
        },
        _ => return Err(LabError::Parameter("lumped analysis needs exactly one pre-pooled group".into())),
    };
    let by_action = match kind {
        ProtocolKind::PublicAction => true,
        ProtocolKind::PublicBelief | ProtocolKind::PublicStatistic => false,
        ProtocolKind::NetworkBelief(_) => {
            return Err(LabError::Parameter("lumped analysis supports public protocols only".into()))
        }
    };
    let n = scenario.n();
    let listeners = n - group.len();
    let half = rational::half();

    let mut class_of = HashMap::new();
    let mut key_to_class: HashMap<String, usize> = HashMap::new();
    let mut classes: Vec<StagedClass> = Vec::new();
    let mut msbe = Ratio::zero();
    for term in histogram_law(&model, group.len() as u32) {
        let posterior = term.posterior().expect("histogram_law keeps positive terms");
        let action = ActionSet::optimal(&posterior);
        let key = if by_action { action.to_string() } else { rational::format_ratio(&posterior) };
        let next = classes.len();
        let c = *key_to_class.entry(key).or_insert(next);
        if c == next {
            classes.push(StagedClass { action, posterior: posterior.clone(), probability: [Ratio::zero(), Ratio::zero()] });
        }
        let p = [term.probability(0), term.probability(1)];
        let mass = &p[0] + &p[1];
        if !mass.is_zero() {
            msbe += &half * &p[0] * &p[1] / &mass;
        }
        classes[c].probability[0] += &p[0];
        classes[c].probability[1] += &p[1];
        class_of.insert(term.counts, c);
    }
    // under action announcements, a class may mix posteriors
    if by_action {
        for c in &mut classes {
            c.posterior = &c.probability[1] / (&c.probability[0] + &c.probability[1]);
        }
    }

    let listener_actions: Vec<Vec<ActionSet>> = classes
        .iter()
        .map(|c| {
            (0..model.len())
                .map(|x| {
                    let w1 = &model.mu1()[x] * &c.probability[1];
                    let w0 = &model.mu0()[x] * &c.probability[0];
                    let total = &w0 + &w1;
                    if total.is_zero() {
                        c.action
                    } else {
                        ActionSet::optimal(&(w1 / total))
                    }
                })
                .collect()
        })
        .collect();

    let mut success = Ratio::zero();
    let mut failure = Ratio::zero();
    for (c, acts) in classes.iter().zip(&listener_actions) {
        if c.action == ActionSet::Both {
            continue;
        }
        for s in 0..2u8 {
            let law = model.law(s);
            let follow: Ratio = (0..model.len()).filter(|&x| acts[x] == c.action).map(|x| law[x].clone()).sum();
            let unanimous = num_traits::pow(follow, listeners);
            let w = &half * &c.probability[s as usize] * unanimous;
            if c.action == ActionSet::singleton(s) {
                success += w;
            } else {
                failure += w;
            }
        }
    }
    let tie = Ratio::one() - &success - &failure;
    let rounds_to_fixed_point = usize::from(listeners > 0 && classes.len() > 1);
    Ok(StagedAnalysis {
        n,
        group,
        model,
        class_of,
        classes,
        listener_actions,
        outcome: OutcomeLaw { success, tie, failure, msbe },
        rounds_to_fixed_point,
    })
}

impl StagedAnalysis {
    pub fn classes(&self) -> &[StagedClass] {
        &self.classes
    }

    pub fn listener_actions(&self) -> &[Vec<ActionSet>] {
        &self.listener_actions
    }

    /// Every class with a determinate group action is followed by every
    /// listener signal, so actions are common knowledge off group ties.
    pub fn agrees_off_ties(&self) -> bool {
        self.classes.iter().zip(&self.listener_actions).all(|(c, acts)| {
            c.action == ActionSet::Both
                || (0..self.model.len())
                    .filter(|&x| !(self.model.mu0()[x].is_zero() && self.model.mu1()[x].is_zero()))
                    .all(|x| acts[x] == c.action)
        })
    }

    /// `P(group action = {1-S})`, which does not depend on the number of listeners.
    pub fn group_error(&self) -> Ratio {
        let half = rational::half();
        self.classes
            .iter()
            .map(|c| match c.action {
                ActionSet::Zero => &half * &c.probability[1],
                ActionSet::One => &half * &c.probability[0],
                ActionSet::Both => &half * (&c.probability[0] + &c.probability[1]),
            })
            .sum()
    }

    /// Unanimous action set (if any) and the first group member's belief for
    /// a sampled profile.
    pub fn decide(&self, profile: &[u16]) -> Result<(Option<ActionSet>, f64)> {
        if profile.len() != self.n {
            return Err(LabError::Parameter("profile length differs from n".into()));
        }
        let mut counts = vec![0u32; self.model.len()];
        for &u in &self.group {
            counts[profile[u] as usize] += 1;
        }
        let c = *self
            .class_of
            .get(&counts)
            .ok_or_else(|| LabError::NullConditioning("group histogram has zero probability".into()))?;
        let class = &self.classes[c];
        let belief = self.group_posterior(&counts);
        let mut unanimous = Some(class.action);
        for (u, &x) in profile.iter().enumerate() {
            if !self.group.contains(&u) && self.listener_actions[c][x as usize] != class.action {
                unanimous = None;
                break;
            }
        }
        Ok((unanimous, belief))
    }

    fn group_posterior(&self, counts: &[u32]) -> f64 {
        let w0 = crate::multiset::power_product(self.model.mu0(), counts);
        let w1 = crate::multiset::power_product(self.model.mu1(), counts);
        rational::to_f64(&(&w1 / (w0 + &w1)))
    }
}

/// `P(Bin(n, p) <= k)` exactly.
pub fn binomial_cdf(n: u64, p: &Ratio, k: u64) -> Ratio {
    let q = Ratio::one() - p;
    (0..=k.min(n))
        .map(|j| {
            Ratio::from_integer(BigInt::from(crate::multiset::binomial(n, j)))
                * num_traits::pow(p.clone(), j as usize)
                * num_traits::pow(q.clone(), (n - j) as usize)
        })
        .sum()
}
