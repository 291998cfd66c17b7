//! Announcement protocols driving information partitions to a fixed point.
//!
//! Refinement does not depend on the realized profile: every protocol runs on
//! all profiles at once, and the realized profile only selects which values
//! appear in the trace. A run stops after the first full round that leaves
//! every partition unchanged.

mod staged;

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub use staged::{analyze_staged, binomial_cdf, StagedAnalysis, StagedClass};

use crate::error::{LabError, Result};
use crate::knowledge::{
    is_common_knowledge, is_common_knowledge_at, refine_by_announcement, ActionSet, Announcement, Audience, BeliefProfile,
    InformationPartition, OutcomeSpace,
};
use crate::rational::{self, Ratio};

/// Directed communication graph; edge `(u, v)` means `v` hears `u`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if edges.iter().any(|&(u, v)| u >= n || v >= n || u == v) {
            return Err(LabError::Parameter("digraph edge out of range or a self loop".into()));
        }
        Ok(Digraph { n, edges })
    }

    /// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn ring(n: usize) -> Self {
        Digraph { n, edges: (0..n).map(|u| (u, (u + 1) % n)).filter(|(u, v)| u != v).collect() }
    }

    /// Directed path `0 -> 1 -> ... -> n-1`, not strongly connected for n > 1.
    pub fn path(n: usize) -> Self {
        Digraph { n, edges: (1..n).map(|v| (v - 1, v)).collect() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect();
        Digraph { n, edges }
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; self.n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(x) = stack.pop() {
                for &(u, v) in &self.edges {
                    let (from, to) = if forward { (u, v) } else { (v, u) };
                    if from == x && !seen[to] {
                        seen[to] = true;
                        stack.push(to);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// Every speaker publicly announces its posterior belief.
    PublicBelief,
    /// Every speaker publicly announces its optimal action set.
    PublicAction,
    /// The mean of the speakers' beliefs is announced publicly.
    PublicStatistic,
    /// Beliefs travel along the edges of a digraph, one edge at a time, in
    /// round-robin order.
    NetworkBelief(Digraph),
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::PublicBelief => "public-belief",
            ProtocolKind::PublicAction => "public-action",
            ProtocolKind::PublicStatistic => "statistic",
            ProtocolKind::NetworkBelief(_) => "network",
        })
    }
}

/// A protocol kind plus the set of agents allowed to speak (all by default).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub speakers: Option<Vec<usize>>,
}

impl Protocol {
    pub fn new(kind: ProtocolKind) -> Self {
        Protocol { kind, speakers: None }
    }

    pub fn with_speakers(mut self, speakers: Vec<usize>) -> Self {
        self.speakers = Some(speakers);
        self
    }

    fn speakers(&self, n: usize) -> Vec<usize> {
        self.speakers.clone().unwrap_or_else(|| (0..n).collect())
    }
}

impl From<ProtocolKind> for Protocol {
    fn from(kind: ProtocolKind) -> Self {
        Protocol::new(kind)
    }
}

/// A value placed in the trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Announced {
    Belief(Ratio),
    Action(ActionSet),
}

impl fmt::Display for Announced {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Announced::Belief(b) => f.write_str(&rational::format_ratio(b)),
            Announced::Action(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// What each agent announced at the realized profile; `None` for silent agents.
    pub announced: Vec<Option<Announced>>,
    /// Block count of every agent's partition after the round.
    pub block_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProtocolTrace {
    pub rounds: Vec<RoundRecord>,
    pub rounds_to_fixed_point: usize,
}

impl ProtocolTrace {
    /// Row-per-round-and-agent CSV: `round,agent,announced,block_count`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["round", "agent", "announced", "block_count"])?;
        for (r, round) in self.rounds.iter().enumerate() {
            for (agent, (value, blocks)) in round.announced.iter().zip(&round.block_counts).enumerate() {
                let value = value.as_ref().map(|v| v.to_string()).unwrap_or_default();
                w.write_record([(r + 1).to_string(), agent.to_string(), value, blocks.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Result of a protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub partitions: Vec<InformationPartition>,
    pub trace: ProtocolTrace,
    /// Beliefs at the realized profile.
    pub beliefs: BeliefProfile,
    /// Action sets at the realized profile.
    pub actions: Vec<ActionSet>,
    /// Belief functions are common knowledge on the whole space.
    pub beliefs_common_knowledge: bool,
    /// Action-set functions are common knowledge on the whole space.
    pub actions_common_knowledge: bool,
    /// Action sets are common knowledge at the realized profile.
    pub actions_common_knowledge_here: bool,
}

impl ProtocolOutcome {
    pub fn beliefs_at(&self, space: &OutcomeSpace, profile: usize) -> Result<Vec<Ratio>> {
        self.partitions.iter().map(|p| space.posterior_of(&block_members(p, profile))).collect()
    }
}

fn block_members(p: &InformationPartition, profile: usize) -> Vec<usize> {
    let label = p.labels()[profile];
    p.labels().iter().enumerate().filter(|(_, &l)| l == label).map(|(i, _)| i).collect()
}

/// Posterior beliefs of every agent, computed once per block and interned so
/// that equal beliefs share an id. Refinement and common-knowledge checks only
/// need equality, so they work on the ids.
struct BeliefTable {
    per_block: Vec<Vec<Ratio>>,
    ids: Vec<Vec<u32>>,
}

impl BeliefTable {
    fn new(space: &OutcomeSpace, partitions: &[InformationPartition]) -> Result<Self> {
        let per_block: Vec<Vec<Ratio>> = partitions.iter().map(|p| p.block_posteriors(space)).collect::<Result<_>>()?;
        let mut intern: HashMap<&Ratio, u32> = HashMap::new();
        let block_ids: Vec<Vec<u32>> = per_block
            .iter()
            .map(|row| {
                row.iter()
                    .map(|b| {
                        let next = intern.len() as u32;
                        *intern.entry(b).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        let ids = partitions
            .iter()
            .zip(&block_ids)
            .map(|(p, table)| p.labels().iter().map(|&l| table[l as usize]).collect())
            .collect();
        Ok(BeliefTable { per_block, ids })
    }

    fn at(&self, partitions: &[InformationPartition], agent: usize, profile: usize) -> &Ratio {
        &self.per_block[agent][partitions[agent].block_of(profile)]
    }

    fn actions(&self, partitions: &[InformationPartition]) -> Vec<Vec<ActionSet>> {
        partitions
            .iter()
            .zip(&self.per_block)
            .map(|(p, row)| {
                let per_block: Vec<ActionSet> = row.iter().map(ActionSet::optimal).collect();
                p.labels().iter().map(|&l| per_block[l as usize]).collect()
            })
            .collect()
    }
}

fn changed(a: &[InformationPartition], b: &[InformationPartition]) -> bool {
    a.iter().zip(b).any(|(x, y)| x.labels() != y.labels())
}

/// Runs announce-then-refine rounds until a round changes nothing.
pub fn run_protocol(
    protocol: &Protocol,
    space: &OutcomeSpace,
    partitions: Vec<InformationPartition>,
    profile: &[u16],
) -> Result<ProtocolOutcome> {
    let n = space.n();
    if partitions.len() != n {
        return Err(LabError::InvalidPartition(format!("{} partitions for {n} agents", partitions.len())));
    }
    for (u, p) in partitions.iter().enumerate() {
        if p.agent() != u {
            return Err(LabError::InvalidPartition("partitions must be ordered by agent".into()));
        }
        p.validate(space)?;
    }
    let here = space
        .index_of(profile)
        .ok_or_else(|| LabError::NullConditioning("realized profile has zero weight".into()))?;
    if let ProtocolKind::NetworkBelief(g) = &protocol.kind {
        if g.n != n {
            return Err(LabError::Parameter(format!("digraph has {} nodes for {n} agents", g.n)));
        }
        if !g.is_strongly_connected() {
            return Err(LabError::Disconnected);
        }
    }
    let speakers = protocol.speakers(n);
    if speakers.iter().any(|&s| s >= n) {
        return Err(LabError::Parameter("speaker index out of range".into()));
    }

    let mut parts = partitions;
    let mut trace = ProtocolTrace::default();
    // each refining round adds at least one block somewhere
    let max_rounds = n * space.len() + 1;
    loop {
        if trace.rounds.len() > max_rounds {
            return Err(LabError::InvalidPartition("protocol failed to reach a fixed point".into()));
        }
        let table = BeliefTable::new(space, &parts)?;
        let mut announced: Vec<Option<Announced>> = vec![None; n];
        let refined = match &protocol.kind {
            ProtocolKind::PublicBelief => {
                for &s in &speakers {
                    announced[s] = Some(Announced::Belief(table.at(&parts, s, here).clone()));
                }
                public_round(&parts, &speakers, |s| table.ids[s].clone())?
            }
            ProtocolKind::PublicAction => {
                let actions = table.actions(&parts);
                for &s in &speakers {
                    announced[s] = Some(Announced::Action(actions[s][here]));
                }
                public_round(&parts, &speakers, |s| actions[s].clone())?
            }
            ProtocolKind::PublicStatistic => {
                // the mean only depends on the speakers' belief ids, so it is
                // computed once per distinct tuple of ids
                let count = BigRational::from_integer(BigInt::from(speakers.len()));
                let mut means: HashMap<Vec<u32>, (u32, Ratio)> = HashMap::new();
                let mut mean_ids = Vec::with_capacity(space.len());
                for i in 0..space.len() {
                    let key: Vec<u32> = speakers.iter().map(|&s| table.ids[s][i]).collect();
                    let next = means.len() as u32;
                    let entry = means.entry(key).or_insert_with(|| {
                        let sum: Ratio = speakers.iter().map(|&s| table.at(&parts, s, i).clone()).sum();
                        (next, sum / &count)
                    });
                    mean_ids.push(entry.0);
                    if i == here {
                        for &s in &speakers {
                            announced[s] = Some(Announced::Belief(entry.1.clone()));
                        }
                    }
                }
                parts.iter().map(|p| p.refine_by(&mean_ids)).collect()
            }
            ProtocolKind::NetworkBelief(g) => {
                for (u, slot) in announced.iter_mut().enumerate() {
                    *slot = Some(Announced::Belief(table.at(&parts, u, here).clone()));
                }
                let mut next = parts.clone();
                for &(u, v) in &g.edges {
                    let values = BeliefTable::new(space, std::slice::from_ref(&next[u]))?.ids.remove(0);
                    next[v] = next[v].refine_by(&values);
                }
                next
            }
        };
        let moved = changed(&parts, &refined);
        trace.rounds.push(RoundRecord { announced, block_counts: refined.iter().map(|p| p.block_count()).collect() });
        parts = refined;
        if !moved {
            break;
        }
    }
    trace.rounds_to_fixed_point = trace.rounds.len() - 1;

    let table = BeliefTable::new(space, &parts)?;
    let actions = table.actions(&parts);
    Ok(ProtocolOutcome {
        beliefs: BeliefProfile((0..n).map(|u| table.at(&parts, u, here).clone()).collect()),
        actions: actions.iter().map(|a| a[here]).collect(),
        beliefs_common_knowledge: is_common_knowledge(&parts, &table.ids),
        actions_common_knowledge: is_common_knowledge(&parts, &actions),
        actions_common_knowledge_here: is_common_knowledge_at(&parts, &actions, here),
        partitions: parts,
        trace,
    })
}

fn public_round<V: Hash + Eq, F: Fn(usize) -> Vec<V>>(
    parts: &[InformationPartition],
    speakers: &[usize],
    values: F,
) -> Result<Vec<InformationPartition>> {
    let anns: Vec<Announcement<V>> = speakers.iter().map(|&s| Announcement { speaker: s, values: values(s) }).collect();
    refine_by_announcement(parts, &anns, &Audience::Public)
}

/// When beliefs are common knowledge, checks that the common belief equals
/// the pooled posterior on every positive-weight profile. `None` when beliefs
/// are not common knowledge.
pub fn common_belief_is_pooled(space: &OutcomeSpace, partitions: &[InformationPartition]) -> Result<Option<bool>> {
    let table = BeliefTable::new(space, partitions)?;
    if !is_common_knowledge(partitions, &table.ids) {
        return Ok(None);
    }
    for i in 0..space.len() {
        let pooled = space.posterior_of(&[i])?;
        if (0..partitions.len()).any(|u| *table.at(partitions, u, i) != pooled) {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

/// Exact probabilities of the agreement outcomes of a finished run.
///
/// A world is a success when every agent's action set is `{S}`, a failure
/// when every agent's action set is `{1-S}`, and a tie otherwise (including
/// unanimous `{0,1}` and disagreement). `msbe` is `E[(X - S)^2]` for the
/// belief `X` of `reference_agent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeLaw {
    #[serde(with = "rational::serde_ratio")]
    pub success: Ratio,
    #[serde(with = "rational::serde_ratio")]
    pub tie: Ratio,
    #[serde(with = "rational::serde_ratio")]
    pub failure: Ratio,
    #[serde(with = "rational::serde_ratio")]
    pub msbe: Ratio,
}

impl OutcomeLaw {
    /// `P(L != {S})`
    pub fn error(&self) -> Ratio {
        &self.tie + &self.failure
    }
}

pub fn outcome_law(space: &OutcomeSpace, partitions: &[InformationPartition], reference_agent: usize) -> Result<OutcomeLaw> {
    let table = BeliefTable::new(space, partitions)?;
    let actions = table.actions(partitions);
    let mut success = Ratio::zero();
    let mut failure = Ratio::zero();
    let mut msbe = Ratio::zero();
    for i in 0..space.len() {
        let first = actions[0][i];
        let unanimous = actions.iter().all(|a| a[i] == first);
        let x = table.at(partitions, reference_agent, i);
        for s in 0..2u8 {
            let w = space.weight(s, i);
            if w.is_zero() {
                continue;
            }
            let err = x - Ratio::from_integer(BigInt::from(s));
            msbe += &w * &err * &err;
            if unanimous && first == ActionSet::singleton(s) {
                success += &w;
            } else if unanimous && first == ActionSet::singleton(1 - s) {
                failure += &w;
            }
        }
    }
    let tie = Ratio::one() - &success - &failure;
    Ok(OutcomeLaw { success, tie, failure, msbe })
}
