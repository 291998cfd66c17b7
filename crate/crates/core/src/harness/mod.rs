//! Monte Carlo and exact evaluation of agreement outcomes, n-sweeps and
//! verification reports.
//!
//! Every trial draws from its own ChaCha8 stream, selected by the trial
//! index, so results do not depend on how trials are scheduled across
//! threads. Trials run in fixed-size chunks whose partial sums are combined
//! in chunk order.

mod sweep;
mod verify;

use std::collections::HashMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sweep::{mix_seed, noise_to_signal, rows_to_csv, sweep_n, write_rows, SweepRow, SweepTable, CSV_HEADER};
pub use verify::{desk_suite, verify_report, verify_sweep, Check, CheckStatus, VerificationReport, VerifyInputs};

use crate::dynamics::{analyze_staged, outcome_law, run_protocol, OutcomeLaw, Protocol, ProtocolKind, StagedAnalysis};
use crate::error::{LabError, Result};
use crate::knowledge::{initial_partitions, ActionSet, InformationPartition, OutcomeSpace, EXACT_BUDGET};
use crate::multiset::histogram_law;
use crate::rational::{self, Ratio};
use crate::scenarios::{PreparedScenario, Scenario, Structure};
use crate::signal::SignalModel;

/// Generator and stream layout, recorded next to every output file.
pub const RNG_VERSION: &str = "rand_chacha 0.9 ChaCha8Rng; seed_from_u64(row seed); stream = trial index";

const CHUNK: u64 = 4096;

/// How the fixed-point action is obtained in a trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// Act on the pooled posterior of all signals.
    Pooled,
    /// Run the announcement protocol to its fixed point.
    Protocol(ProtocolKind),
}

impl Mode {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "pooled" => Mode::Pooled,
            "public-belief" => Mode::Protocol(ProtocolKind::PublicBelief),
            "public-action" => Mode::Protocol(ProtocolKind::PublicAction),
            "statistic" => Mode::Protocol(ProtocolKind::PublicStatistic),
            "network" => Mode::Protocol(ProtocolKind::NetworkBelief(crate::dynamics::Digraph::ring(0))),
            other => return Err(LabError::Parameter(format!("unknown protocol `{other}`"))),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Mode::Pooled => "pooled".into(),
            Mode::Protocol(k) => k.to_string(),
        }
    }

    /// Network modes parsed by name carry a placeholder graph; this fills in
    /// the directed ring on `n` agents.
    fn resolved(&self, n: usize) -> Mode {
        match self {
            Mode::Protocol(ProtocolKind::NetworkBelief(g)) if g.n != n => {
                Mode::Protocol(ProtocolKind::NetworkBelief(crate::dynamics::Digraph::ring(n)))
            }
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct McOptions {
    pub trials: u64,
    pub seed: u64,
    /// Draw every trial with this state instead of from the prior.
    pub condition: Option<u8>,
}

/// Tally of Monte Carlo trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub scenario: String,
    pub mode: String,
    pub n: usize,
    pub trials: u64,
    /// Every agent's action set is `{S}`.
    pub successes: u64,
    /// Anything other than unanimous `{S}` or unanimous `{1-S}`.
    pub ties: u64,
    /// Every agent's action set is `{1-S}`.
    pub failures: u64,
    /// Ties in which a fair coin picked `S`.
    pub tie_wins: u64,
    pub success_rate: f64,
    pub stderr: f64,
    /// Mean of `(X - S)^2` for the first agent's fixed-point belief.
    pub msbe: f64,
    pub seed: u64,
    pub condition: Option<u8>,
}

impl TrialSummary {
    /// `P(L != {S})` estimate.
    pub fn error_rate(&self) -> f64 {
        (self.ties + self.failures) as f64 / self.trials as f64
    }

    /// Success rate when ties are broken by a fair coin.
    pub fn action_accuracy(&self) -> f64 {
        (self.successes + self.tie_wins) as f64 / self.trials as f64
    }

    pub fn action_accuracy_stderr(&self) -> f64 {
        binomial_stderr(self.action_accuracy(), self.trials)
    }
}

pub fn binomial_stderr(rate: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (rate * (1.0 - rate) / trials as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    successes: u64,
    ties: u64,
    failures: u64,
    tie_wins: u64,
    sq_err: f64,
}

impl Tally {
    fn add(mut self, other: Tally) -> Tally {
        self.successes += other.successes;
        self.ties += other.ties;
        self.failures += other.failures;
        self.tie_wins += other.tie_wins;
        self.sq_err += other.sq_err;
        self
    }
}

/// Per-profile decision used inside trials.
enum Decider {
    Pooled(PreparedScenario),
    Table { prepared: PreparedScenario, outcomes: HashMap<Vec<u16>, (Option<ActionSet>, f64)> },
    Staged { prepared: PreparedScenario, analysis: StagedAnalysis },
}

impl Decider {
    fn new(scenario: &Scenario, mode: &Mode) -> Result<Self> {
        let prepared = scenario.prepare()?;
        match mode.resolved(scenario.n()) {
            Mode::Pooled => Ok(Decider::Pooled(prepared)),
            Mode::Protocol(kind) => {
                if scenario.exact_pairs() <= EXACT_BUDGET {
                    let space = OutcomeSpace::build(scenario)?;
                    let partitions = fixed_point(scenario, &space, &kind)?;
                    Ok(Decider::Table { prepared, outcomes: profile_outcomes(&space, &partitions)? })
                } else if matches!(scenario.structure(), Structure::Staged { .. }) {
                    Ok(Decider::Staged { prepared, analysis: analyze_staged(scenario, &kind)? })
                } else {
                    Err(LabError::TooLarge { required: scenario.exact_pairs(), budget: EXACT_BUDGET })
                }
            }
        }
    }

    fn prepared(&self) -> &PreparedScenario {
        match self {
            Decider::Pooled(p) | Decider::Table { prepared: p, .. } | Decider::Staged { prepared: p, .. } => p,
        }
    }

    fn decide(&self, profile: &[u16]) -> Result<(Option<ActionSet>, f64)> {
        match self {
            Decider::Pooled(p) => {
                let (a, b) = p.pooled_decision(profile)?;
                Ok((Some(a), b))
            }
            Decider::Table { outcomes, .. } => outcomes
                .get(profile)
                .cloned()
                .ok_or_else(|| LabError::NullConditioning("sampled profile outside the outcome space".into())),
            Decider::Staged { analysis, .. } => analysis.decide(profile),
        }
    }
}

/// Fixed-point partitions of a protocol started from the scenario's initial
/// partitions, with speech restricted to the scenario's speakers.
pub fn fixed_point(scenario: &Scenario, space: &OutcomeSpace, kind: &ProtocolKind) -> Result<Vec<InformationPartition>> {
    let protocol = Protocol::new(kind.clone()).with_speakers(scenario.speakers());
    let here = space.profile(0).to_vec();
    Ok(run_protocol(&protocol, space, initial_partitions(space, scenario), &here)?.partitions)
}

/// Unanimous action (if any) and reference belief per profile.
type OutcomeTable = HashMap<Vec<u16>, (Option<ActionSet>, f64)>;

fn profile_outcomes(
    space: &OutcomeSpace,
    partitions: &[InformationPartition],
) -> Result<OutcomeTable> {
    let per_block: Vec<Vec<Ratio>> = partitions.iter().map(|p| p.block_posteriors(space)).collect::<Result<_>>()?;
    let actions: Vec<Vec<ActionSet>> = per_block.iter().map(|row| row.iter().map(ActionSet::optimal).collect()).collect();
    let first_belief: Vec<f64> = per_block[0].iter().map(rational::to_f64).collect();
    Ok((0..space.len())
        .map(|i| {
            let action = |u: usize| actions[u][partitions[u].block_of(i)];
            let first = action(0);
            let unanimous = (1..partitions.len()).all(|u| action(u) == first).then_some(first);
            (space.profile(i).to_vec(), (unanimous, first_belief[partitions[0].block_of(i)]))
        })
        .collect())
}

pub fn run_monte_carlo(scenario: &Scenario, mode: &Mode, trials: u64, seed: u64) -> Result<TrialSummary> {
    run_monte_carlo_with(scenario, mode, &McOptions { trials, seed, condition: None })
}

pub fn run_monte_carlo_with(scenario: &Scenario, mode: &Mode, options: &McOptions) -> Result<TrialSummary> {
    if options.trials == 0 {
        return Err(LabError::Parameter("trials must be at least 1".into()));
    }
    if options.condition.is_some_and(|s| s > 1) {
        return Err(LabError::Parameter("conditioning state must be 0 or 1".into()));
    }
    let decider = Decider::new(scenario, mode)?;
    let chunks = options.trials.div_ceil(CHUNK);
    let partials: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(options.trials);
            let mut tally = Tally::default();
            for t in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(t);
                let state = options.condition.unwrap_or_else(|| rng.random::<bool>() as u8);
                let profile = decider.prepared().sample_profile(state, &mut rng);
                let (action, belief) = decider.decide(&profile)?;
                let err = belief - state as f64;
                tally.sq_err += err * err;
                match action {
                    Some(a) if a == ActionSet::singleton(state) => tally.successes += 1,
                    Some(a) if a == ActionSet::singleton(1 - state) => tally.failures += 1,
                    _ => {
                        tally.ties += 1;
                        if rng.random::<bool>() {
                            tally.tie_wins += 1;
                        }
                    }
                }
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::default();
    for p in partials {
        total = total.add(p?);
    }
    let success_rate = total.successes as f64 / options.trials as f64;
    Ok(TrialSummary {
        scenario: scenario.name().to_string(),
        mode: mode.name(),
        n: scenario.n(),
        trials: options.trials,
        successes: total.successes,
        ties: total.ties,
        failures: total.failures,
        tie_wins: total.tie_wins,
        success_rate,
        stderr: binomial_stderr(success_rate, options.trials),
        msbe: total.sq_err / options.trials as f64,
        seed: options.seed,
        condition: options.condition,
    })
}

/// Exact outcome law of the pooled decision for `n` i.i.d. agents, summed
/// over signal histograms.
pub fn exact_iid_pooled(model: &SignalModel, n: usize) -> OutcomeLaw {
    let half = rational::half();
    let mut success = Ratio::zero();
    let mut failure = Ratio::zero();
    let mut msbe = Ratio::zero();
    for term in histogram_law(model, n as u32) {
        let p0 = term.probability(0);
        let p1 = term.probability(1);
        let mass = &p0 + &p1;
        msbe += &half * &p0 * &p1 / &mass;
        match ActionSet::optimal(&term.posterior().expect("positive term")) {
            ActionSet::One => {
                success += &half * &p1;
                failure += &half * &p0;
            }
            ActionSet::Zero => {
                success += &half * &p0;
                failure += &half * &p1;
            }
            ActionSet::Both => {}
        }
    }
    let tie = Ratio::one() - &success - &failure;
    OutcomeLaw { success, tie, failure, msbe }
}

/// Exact outcome law of a scenario under a mode, by the cheapest exact route.
pub fn exact_outcome(scenario: &Scenario, mode: &Mode) -> Result<OutcomeLaw> {
    match (mode.resolved(scenario.n()), scenario.structure()) {
        (Mode::Pooled, Structure::Iid(model)) => Ok(exact_iid_pooled(model, scenario.n())),
        (Mode::Protocol(kind), Structure::Staged { .. }) if scenario.exact_pairs() > EXACT_BUDGET => {
            Ok(analyze_staged(scenario, &kind)?.outcome)
        }
        (Mode::Pooled, _) => {
            let space = OutcomeSpace::build(scenario)?;
            let full: Vec<InformationPartition> =
                (0..space.n()).map(|u| InformationPartition::full_information(&space, u)).collect();
            outcome_law(&space, &full, 0)
        }
        (Mode::Protocol(kind), _) => {
            let space = OutcomeSpace::build(scenario)?;
            let parts = fixed_point(scenario, &space, &kind)?;
            outcome_law(&space, &parts, 0)
        }
    }
}

/// `P(L != {S} | S = state)` for the pooled decision of `n` i.i.d. agents.
pub fn exact_iid_pooled_given(model: &SignalModel, n: usize, state: u8) -> Ratio {
    let mut wrong = Ratio::zero();
    for term in histogram_law(model, n as u32) {
        let a = ActionSet::optimal(&term.posterior().expect("positive term"));
        if a != ActionSet::singleton(state) {
            wrong += term.probability(state);
        }
    }
    wrong
}
