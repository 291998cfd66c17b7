use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::BigUint;
use num_traits::Zero;

use super::space::{posterior_from_sums, OutcomeSpace};
use crate::error::{LabError, Result};
use crate::rational::Ratio;
use crate::scenarios::Scenario;

/// One agent's information, as a partition of the positive-weight profiles.
///
/// Stored as a canonical block label per profile: labels are assigned in
/// order of first appearance, so two partitions are equal iff their label
/// vectors are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InformationPartition {
    agent: usize,
    labels: Vec<u32>,
    blocks: u32,
}

impl InformationPartition {
    /// Partition induced by an arbitrary key per profile.
    pub fn from_keys<K: Hash + Eq>(agent: usize, keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids: HashMap<K, u32> = HashMap::new();
        let labels: Vec<u32> = keys
            .into_iter()
            .map(|k| {
                let next = ids.len() as u32;
                *ids.entry(k).or_insert(next)
            })
            .collect();
        InformationPartition { agent, labels, blocks: ids.len() as u32 }
    }

    /// `F_u = sigma(signal_u)`.
    pub fn own_signal(space: &OutcomeSpace, agent: usize) -> Self {
        Self::from_keys(agent, space.profiles().iter().map(|p| p[agent]))
    }

    /// Knows everybody's signal.
    pub fn full_information(space: &OutcomeSpace, agent: usize) -> Self {
        Self::from_keys(agent, 0..space.len())
    }

    /// Knows only the signals of `agents`.
    pub fn pooled(space: &OutcomeSpace, agent: usize, agents: &[usize]) -> Self {
        Self::from_keys(agent, space.profiles().iter().map(|p| agents.iter().map(|&a| p[a]).collect::<Vec<_>>()))
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn block_count(&self) -> usize {
        self.blocks as usize
    }

    /// Block label of a profile index.
    pub fn block_of(&self, profile: usize) -> usize {
        self.labels[profile] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks as usize];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    /// Coarsest common refinement with the partition induced by `values`.
    pub fn refine_by<V: Hash + Eq>(&self, values: &[V]) -> Self {
        Self::from_keys(self.agent, self.labels.iter().zip(values))
    }

    /// Coarsest common refinement with another partition.
    pub fn join(&self, other: &InformationPartition) -> Self {
        Self::from_keys(self.agent, self.labels.iter().zip(&other.labels))
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &InformationPartition) -> bool {
        is_measurable(&coarser.labels, self)
    }

    /// `P(S=1 | block)` for every block.
    pub fn block_posteriors(&self, space: &OutcomeSpace) -> Result<Vec<Ratio>> {
        let mut sums = vec![[BigUint::zero(), BigUint::zero()]; self.blocks as usize];
        for (i, &l) in self.labels.iter().enumerate() {
            let w = space.numerators(i);
            sums[l as usize][0] += &w[0];
            sums[l as usize][1] += &w[1];
        }
        sums.into_iter().map(|[w0, w1]| posterior_from_sums(w0, w1)).collect()
    }

    /// Posterior belief as a function of the profile.
    pub fn beliefs(&self, space: &OutcomeSpace) -> Result<Vec<Ratio>> {
        let per_block = self.block_posteriors(space)?;
        Ok(self.labels.iter().map(|&l| per_block[l as usize].clone()).collect())
    }

    /// One block per line, profiles rendered as symbol strings.
    pub fn dump(&self, space: &OutcomeSpace) -> String {
        let mut out = String::new();
        for block in self.blocks() {
            let rendered: Vec<String> = block.iter().map(|&i| space.render(i)).collect();
            out.push_str(&rendered.join(" "));
            out.push('\n');
        }
        out
    }

    pub(crate) fn check_space(&self, space: &OutcomeSpace) -> Result<()> {
        if self.labels.len() != space.len() {
            return Err(LabError::InvalidPartition(format!(
                "partition of agent {} covers {} profiles, space has {}",
                self.agent,
                self.labels.len(),
                space.len()
            )));
        }
        Ok(())
    }

    /// Checks coverage and that the partition refines the own-signal partition.
    pub fn validate(&self, space: &OutcomeSpace) -> Result<()> {
        self.check_space(space)?;
        if self.agent >= space.n() {
            return Err(LabError::InvalidPartition(format!("agent {} out of range", self.agent)));
        }
        if !self.refines(&InformationPartition::own_signal(space, self.agent)) {
            return Err(LabError::InvalidPartition(format!("agent {} does not know its own signal", self.agent)));
        }
        Ok(())
    }
}

/// `values` is constant on every block of `partition`.
pub fn is_measurable<V: PartialEq>(values: &[V], partition: &InformationPartition) -> bool {
    let mut first: Vec<Option<&V>> = vec![None; partition.block_count()];
    for (v, &l) in values.iter().zip(&partition.labels) {
        match first[l as usize] {
            None => first[l as usize] = Some(v),
            Some(seen) if seen != v => return false,
            _ => {}
        }
    }
    true
}

/// Initial partitions of a scenario: own signal, or the pooled group signals
/// for members of a pre-pooled group.
pub fn initial_partitions(space: &OutcomeSpace, scenario: &Scenario) -> Vec<InformationPartition> {
    (0..space.n())
        .map(|u| match scenario.group_of(u) {
            Some(group) => InformationPartition::pooled(space, u, group),
            None => InformationPartition::own_signal(space, u),
        })
        .collect()
}

/// Who hears an announcement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Audience {
    Public,
    Agents(Vec<usize>),
}

impl Audience {
    pub fn includes(&self, agent: usize) -> bool {
        match self {
            Audience::Public => true,
            Audience::Agents(list) => list.contains(&agent),
        }
    }
}

/// A value announced by `speaker`, given as a function of the profile.
#[derive(Debug, Clone)]
pub struct Announcement<V> {
    pub speaker: usize,
    pub values: Vec<V>,
}

/// Refines every listener's partition by the preimages of what it hears.
/// Each announcement must be measurable with respect to its speaker's
/// partition.
pub fn refine_by_announcement<V: Hash + Eq>(
    partitions: &[InformationPartition],
    announcements: &[Announcement<V>],
    audience: &Audience,
) -> Result<Vec<InformationPartition>> {
    for a in announcements {
        let speaker = partitions
            .get(a.speaker)
            .ok_or_else(|| LabError::InvalidPartition(format!("no partition for speaker {}", a.speaker)))?;
        if a.values.len() != speaker.labels.len() {
            return Err(LabError::InvalidPartition("announcement length differs from the space".into()));
        }
        if !is_measurable(&a.values, speaker) {
            return Err(LabError::Measurability { agent: a.speaker });
        }
    }
    Ok(partitions
        .iter()
        .map(|p| {
            if !audience.includes(p.agent) || announcements.is_empty() {
                return p.clone();
            }
            let keys = (0..p.labels.len()).map(|i| {
                let heard: Vec<&V> = announcements.iter().map(|a| &a.values[i]).collect();
                (p.labels[i], heard)
            });
            InformationPartition::from_keys(p.agent, keys)
        })
        .collect())
}

/// For every ordered pair `(u, w)`, agent `u`'s variable is constant on each
/// block of agent `w`'s partition.
pub fn is_common_knowledge<V: PartialEq>(partitions: &[InformationPartition], variable: &[Vec<V>]) -> bool {
    variable.iter().all(|values| partitions.iter().all(|w| is_measurable(values, w)))
}

/// Meet (finest common coarsening) of all partitions, as a component label
/// per profile.
pub fn meet(partitions: &[InformationPartition]) -> Vec<usize> {
    let size = partitions.first().map(|p| p.labels.len()).unwrap_or(0);
    let mut parent: Vec<usize> = (0..size).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in partitions {
        let mut rep: Vec<Option<usize>> = vec![None; p.block_count()];
        for i in 0..size {
            let l = p.labels[i] as usize;
            match rep[l] {
                None => rep[l] = Some(i),
                Some(r) => {
                    let a = find(&mut parent, r);
                    let b = find(&mut parent, i);
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
    }
    (0..size).map(|i| find(&mut parent, i)).collect()
}

/// Local common knowledge at one profile: every agent's variable is constant
/// on the meet component containing `profile`.
pub fn is_common_knowledge_at<V: PartialEq>(partitions: &[InformationPartition], variable: &[Vec<V>], profile: usize) -> bool {
    let components = meet(partitions);
    let target = components[profile];
    variable.iter().all(|values| {
        let reference = &values[profile];
        components.iter().zip(values).filter(|(c, _)| **c == target).all(|(_, v)| v == reference)
    })
}
