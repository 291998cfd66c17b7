//! Scenario constructors: the signal structures the laboratory can simulate.
//!
//! A [`Scenario`] fixes the number of agents and the joint law of the private
//! signals given the state. Three structure kinds exist:
//!
//! * `Iid` - conditionally i.i.d. signals from one [`SignalModel`];
//! * `Joint` - an explicit joint conditional law over whole profiles;
//! * `Staged` - a base structure plus groups of agents that pool their
//!   signals before any announcement, and that are the only speakers.
//!
//! Every structure supports exact enumeration (small `n`), exact sampling and
//! a fast pooled-posterior decision used by the Monte Carlo harness.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::knowledge::ActionSet;
use crate::multiset::{self, binomial};
use crate::rational::{self, ratio, Ratio};
use crate::signal::SignalModel;

/// A profile assigns one symbol index to every agent.
pub type Profile = Vec<u16>;

#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub alphabet: Vec<String>,
    /// `(profile, [P(profile | S=0), P(profile | S=1)])`
    pub rows: Vec<(Profile, [Ratio; 2])>,
}

impl JointTable {
    pub fn new(alphabet: Vec<String>, n: usize, rows: Vec<(Profile, [Ratio; 2])>) -> Result<Self> {
        let mut totals = [Ratio::zero(), Ratio::zero()];
        let mut seen = std::collections::HashSet::new();
        for (profile, weights) in &rows {
            if profile.len() != n {
                return Err(LabError::InvalidDistribution(format!("profile of length {} in an {n}-agent table", profile.len())));
            }
            if profile.iter().any(|&s| s as usize >= alphabet.len()) {
                return Err(LabError::InvalidDistribution("profile symbol outside the alphabet".into()));
            }
            if !seen.insert(profile.clone()) {
                return Err(LabError::InvalidDistribution("duplicate profile in joint table".into()));
            }
            for s in 0..2 {
                if weights[s].is_negative() {
                    return Err(LabError::InvalidDistribution("negative joint weight".into()));
                }
                totals[s] += &weights[s];
            }
        }
        for (s, total) in totals.iter().enumerate() {
            if !total.is_one() {
                return Err(LabError::InvalidDistribution(format!(
                    "joint conditional for S={s} sums to {}",
                    rational::format_ratio(total)
                )));
            }
        }
        Ok(JointTable { alphabet, rows })
    }

    fn weight(&self, profile: &[u16], state: u8) -> Ratio {
        self.rows
            .iter()
            .find(|(p, _)| p.as_slice() == profile)
            .map(|(_, w)| w[state as usize].clone())
            .unwrap_or_else(Ratio::zero)
    }
}

/// Joint conditional laws with structure the engine can exploit.
#[derive(Debug, Clone, PartialEq)]
pub enum JointLaw {
    Table(JointTable),
    /// Uniform bits with `S` equal to their sum modulo 2.
    Parity,
    /// A noisy copy `S^` of `S` (correct with probability `p`), revealed
    /// through a uniformly random set `U` of `3n/4` agents who see `S^` while
    /// the rest see `1 - S^`. `U` is integrated out.
    UncorrelatedTight { p: Ratio },
    /// Two bits per agent: a parity bit and an uncorrelated-tight bit.
    ParityWithTight { p: Ratio },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Iid(SignalModel),
    Joint(JointLaw),
    Staged { base: Box<Structure>, groups: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    n: usize,
    structure: Structure,
    metadata: BTreeMap<String, String>,
    claims_uncorrelated: bool,
}

/// Tolerance of the zero-covariance check on floating-point parameters.
pub const COVARIANCE_TOLERANCE: f64 = 1e-12;

impl Scenario {
    pub fn new(name: impl Into<String>, n: usize, structure: Structure) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Parameter("a scenario needs at least one agent".into()));
        }
        if let Structure::Joint(JointLaw::Table(t)) = &structure {
            if let Some((p, _)) = t.rows.first() {
                if p.len() != n {
                    return Err(LabError::Parameter("joint table profile length differs from n".into()));
                }
            }
        }
        if let Structure::Staged { groups, .. } = &structure {
            let mut seen = vec![false; n];
            for g in groups {
                for &a in g {
                    if a >= n || std::mem::replace(&mut seen[a], true) {
                        return Err(LabError::Parameter("staged groups must be disjoint agent indices".into()));
                    }
                }
            }
        }
        Ok(Scenario { name: name.into(), n, structure, metadata: BTreeMap::new(), claims_uncorrelated: false })
    }

    /// Declares the signals uncorrelated given `S` and verifies it.
    pub fn claiming_uncorrelated(mut self) -> Result<Self> {
        let worst = self.max_conditional_llr_covariance()?;
        let exact = self.metadata.get("exact").map(|v| v == "true").unwrap_or(true);
        let tolerance = if exact { 0.0 } else { COVARIANCE_TOLERANCE };
        if worst > tolerance {
            return Err(LabError::InvalidDistribution(format!(
                "claimed uncorrelated signals have conditional LLR covariance {worst:e}"
            )));
        }
        self.claims_uncorrelated = true;
        Ok(self)
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn claims_uncorrelated(&self) -> bool {
        self.claims_uncorrelated
    }

    pub fn alphabet(&self) -> Vec<String> {
        structure_alphabet(&self.structure)
    }

    /// `|alphabet|^n`, saturating.
    pub fn profile_count(&self) -> u128 {
        let k = self.alphabet().len() as u128;
        (0..self.n).try_fold(1u128, |acc, _| acc.checked_mul(k)).unwrap_or(u128::MAX)
    }

    /// Number of `(state, profile)` pairs the exact engine would enumerate.
    pub fn exact_pairs(&self) -> u128 {
        self.profile_count().saturating_mul(2)
    }

    /// Agents allowed to announce. Staged scenarios restrict speech to their groups.
    pub fn speakers(&self) -> Vec<usize> {
        match &self.structure {
            Structure::Staged { groups, .. } => {
                let mut v: Vec<usize> = groups.iter().flatten().copied().collect();
                v.sort_unstable();
                v
            }
            _ => (0..self.n).collect(),
        }
    }

    /// The pre-pooled group containing `agent`, if any.
    pub fn group_of(&self, agent: usize) -> Option<&[usize]> {
        match &self.structure {
            Structure::Staged { groups, .. } => groups.iter().find(|g| g.contains(&agent)).map(|g| g.as_slice()),
            _ => None,
        }
    }

    /// `P(profile | S = state)`, exactly.
    pub fn conditional_weight(&self, profile: &[u16], state: u8) -> Ratio {
        conditional_weight(&self.structure, self.n, profile, state)
    }

    /// All positive-weight profiles with their conditional weights, in
    /// lexicographic profile order. Refuses to enumerate beyond `budget` pairs.
    pub fn enumerate(&self, budget: u128) -> Result<Vec<(Profile, [Ratio; 2])>> {
        let required = self.exact_pairs();
        if required > budget {
            return Err(LabError::TooLarge { required, budget });
        }
        if let Structure::Joint(JointLaw::Table(t)) = base_structure(&self.structure) {
            let mut rows: Vec<_> = t
                .rows
                .iter()
                .filter(|(_, w)| !(w[0].is_zero() && w[1].is_zero()))
                .cloned()
                .collect();
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            return Ok(rows);
        }
        let k = self.alphabet().len() as u16;
        let mut out = Vec::new();
        let mut profile = vec![0u16; self.n];
        loop {
            let w0 = self.conditional_weight(&profile, 0);
            let w1 = self.conditional_weight(&profile, 1);
            if !(w0.is_zero() && w1.is_zero()) {
                out.push((profile.clone(), [w0, w1]));
            }
            // odometer increment, last agent fastest
            let mut slot = self.n;
            loop {
                if slot == 0 {
                    return Ok(out);
                }
                slot -= 1;
                profile[slot] += 1;
                if profile[slot] < k {
                    break;
                }
                profile[slot] = 0;
            }
        }
    }

    /// Exact `P(S = 1 | whole profile)`.
    pub fn pooled_posterior_exact(&self, profile: &[u16]) -> Result<Ratio> {
        pooled_exact(base_structure(&self.structure), self.n, profile)
    }

    /// Per-agent marginal signal model, when the structure is exchangeable
    /// across agents and the marginal is informative.
    pub fn marginal_model(&self) -> Option<SignalModel> {
        marginal_model(base_structure(&self.structure), self.n)
    }

    /// Largest `|Cov(z_u, z_w | S)|` over pairs of agents and both states,
    /// where `z` is the LLR of the per-agent marginal.
    pub fn max_conditional_llr_covariance(&self) -> Result<f64> {
        let base = base_structure(&self.structure);
        match base {
            Structure::Iid(_) => Ok(0.0),
            Structure::Joint(JointLaw::Parity) => Ok(0.0),
            Structure::Joint(JointLaw::UncorrelatedTight { p }) | Structure::Joint(JointLaw::ParityWithTight { p }) => {
                tight_covariance(self.n, p)
            }
            Structure::Joint(JointLaw::Table(_)) => self.enumerated_covariance(),
            Structure::Staged { .. } => unreachable!("base_structure strips stages"),
        }
    }

    fn enumerated_covariance(&self) -> Result<f64> {
        if self.n < 2 {
            return Ok(0.0);
        }
        let rows = self.enumerate(crate::knowledge::EXACT_BUDGET)?;
        let alphabet = self.alphabet();
        // marginal law of each agent, per state
        let mut worst: f64 = 0.0;
        let marginal = |agent: usize, state: usize| {
            let mut law = vec![Ratio::zero(); alphabet.len()];
            for (p, w) in &rows {
                law[p[agent] as usize] += &w[state];
            }
            law
        };
        let llr: Vec<Vec<f64>> = (0..self.n)
            .map(|u| {
                let m0 = marginal(u, 0);
                let m1 = marginal(u, 1);
                (0..alphabet.len())
                    .map(|i| if m0[i].is_zero() || m1[i].is_zero() { 0.0 } else { rational::to_f64(&(&m1[i] / &m0[i])).ln() })
                    .collect()
            })
            .collect();
        for state in 0..2 {
            let weights: Vec<f64> = rows.iter().map(|(_, w)| rational::to_f64(&w[state])).collect();
            let mean: Vec<f64> = (0..self.n)
                .map(|u| rows.iter().zip(&weights).map(|((p, _), w)| w * llr[u][p[u] as usize]).sum())
                .collect();
            for u in 0..self.n {
                for v in (u + 1)..self.n {
                    let cov: f64 = rows
                        .iter()
                        .zip(&weights)
                        .map(|((p, _), w)| w * (llr[u][p[u] as usize] - mean[u]) * (llr[v][p[v] as usize] - mean[v]))
                        .sum();
                    worst = worst.max(cov.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Precomputes samplers and decision tables for repeated use.
    pub fn prepare(&self) -> Result<PreparedScenario> {
        PreparedScenario::new(self)
    }
}

fn base_structure(s: &Structure) -> &Structure {
    match s {
        Structure::Staged { base, .. } => base_structure(base),
        other => other,
    }
}

fn structure_alphabet(s: &Structure) -> Vec<String> {
    match s {
        Structure::Iid(m) => m.alphabet().to_vec(),
        Structure::Joint(JointLaw::Table(t)) => t.alphabet.clone(),
        Structure::Joint(JointLaw::Parity) | Structure::Joint(JointLaw::UncorrelatedTight { .. }) => {
            vec!["0".into(), "1".into()]
        }
        Structure::Joint(JointLaw::ParityWithTight { .. }) => {
            vec!["00".into(), "01".into(), "10".into(), "11".into()]
        }
        Structure::Staged { base, .. } => structure_alphabet(base),
    }
}

fn parity_of(bits: impl Iterator<Item = u16>) -> u8 {
    (bits.fold(0u16, |acc, b| acc ^ (b & 1))) as u8
}

fn pow_half(exponent: usize) -> Ratio {
    BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(2), exponent))
}

/// Probability that the noisy common bit equals 1, given `S`.
fn tight_hat_law(p: &Ratio, state: u8) -> [Ratio; 2] {
    let hit = p.clone();
    let miss = Ratio::one() - p;
    if state == 1 {
        [miss, hit]
    } else {
        [hit, miss]
    }
}

/// `P(bits | S)` for the uncorrelated-tight construction.
fn tight_weight(n: usize, p: &Ratio, bits: impl Iterator<Item = u16>, state: u8) -> Ratio {
    let ones = bits.filter(|&b| b == 1).count();
    let big = 3 * n / 4;
    let small = n / 4;
    let hat = if ones == big {
        1
    } else if ones == small {
        0
    } else {
        return Ratio::zero();
    };
    let law = tight_hat_law(p, state);
    &law[hat] / BigRational::from_integer(BigInt::from(binomial(n as u64, big as u64)))
}

fn conditional_weight(s: &Structure, n: usize, profile: &[u16], state: u8) -> Ratio {
    match s {
        Structure::Iid(m) => {
            let law = m.law(state);
            profile.iter().fold(Ratio::one(), |acc, &x| acc * &law[x as usize])
        }
        Structure::Joint(JointLaw::Table(t)) => t.weight(profile, state),
        Structure::Joint(JointLaw::Parity) => {
            if parity_of(profile.iter().copied()) == state {
                pow_half(n - 1)
            } else {
                Ratio::zero()
            }
        }
        Structure::Joint(JointLaw::UncorrelatedTight { p }) => tight_weight(n, p, profile.iter().copied(), state),
        Structure::Joint(JointLaw::ParityWithTight { p }) => {
            if parity_of(profile.iter().map(|&x| x >> 1)) != state {
                return Ratio::zero();
            }
            pow_half(n - 1) * tight_weight(n, p, profile.iter().map(|&x| x & 1), state)
        }
        Structure::Staged { base, .. } => conditional_weight(base, n, profile, state),
    }
}

fn pooled_exact(s: &Structure, n: usize, profile: &[u16]) -> Result<Ratio> {
    let null = || LabError::NullConditioning("profile has zero probability".into());
    match s {
        Structure::Joint(JointLaw::Parity) | Structure::Joint(JointLaw::ParityWithTight { .. })
            if conditional_weight(s, n, profile, 0).is_zero() && conditional_weight(s, n, profile, 1).is_zero() =>
        {
            Err(null())
        }
        Structure::Joint(JointLaw::Parity) => Ok(Ratio::from_integer(BigInt::from(parity_of(profile.iter().copied())))),
        Structure::Joint(JointLaw::ParityWithTight { .. }) => {
            Ok(Ratio::from_integer(BigInt::from(parity_of(profile.iter().map(|&x| x >> 1)))))
        }
        Structure::Joint(JointLaw::UncorrelatedTight { p }) => {
            let ones = profile.iter().filter(|&&b| b == 1).count();
            if ones == 3 * n / 4 {
                Ok(p.clone())
            } else if ones == n / 4 {
                Ok(Ratio::one() - p)
            } else {
                Err(null())
            }
        }
        _ => {
            let w0 = conditional_weight(s, n, profile, 0);
            let w1 = conditional_weight(s, n, profile, 1);
            let total = &w0 + &w1;
            if total.is_zero() {
                Err(null())
            } else {
                Ok(w1 / total)
            }
        }
    }
}

fn tight_marginal(p: &Ratio) -> Ratio {
    // P(x_u = 1 | S = 1) = (3/4) p + (1/4)(1 - p)
    ratio(1, 4) + p / Ratio::from_integer(BigInt::from(2))
}

fn marginal_model(s: &Structure, _n: usize) -> Option<SignalModel> {
    match s {
        Structure::Iid(m) => Some(m.clone()),
        Structure::Joint(JointLaw::UncorrelatedTight { p }) => SignalModel::symmetric_binary(tight_marginal(p)).ok(),
        Structure::Joint(JointLaw::ParityWithTight { p }) => {
            let a = tight_marginal(p);
            let b = Ratio::one() - &a;
            let h = ratio(1, 2);
            SignalModel::new(
                structure_alphabet(s),
                vec![&h * &a, &h * &b, &h * &a, &h * &b],
                vec![&h * &b, &h * &a, &h * &b, &h * &a],
            )
            .ok()
        }
        _ => None,
    }
}

fn tight_covariance(n: usize, p: &Ratio) -> Result<f64> {
    if n < 2 {
        return Ok(0.0);
    }
    let a = tight_marginal(p);
    let half = ratio(1, 2);
    if a == half {
        // marginal LLR is identically zero
        return Ok(0.0);
    }
    let nn = BigInt::from(n as u64);
    let pair = |k: usize| -> Ratio {
        let k = BigInt::from(k as u64);
        BigRational::new(&k * (&k - 1), &nn * (&nn - 1))
    };
    let single = |k: usize| -> Ratio { BigRational::new(BigInt::from(k as u64), nn.clone()) };
    let big = 3 * n / 4;
    let small = n / 4;
    let llr_gap = {
        let r = rational::to_f64(&(&a / (Ratio::one() - &a)));
        2.0 * r.ln()
    };
    let mut worst: f64 = 0.0;
    for state in 0..2u8 {
        let law = tight_hat_law(p, state);
        let both = &law[1] * pair(big) + &law[0] * pair(small);
        let one = &law[1] * single(big) + &law[0] * single(small);
        let cov_bits = both - &one * &one;
        let cov = rational::to_f64(&cov_bits) * llr_gap * llr_gap;
        worst = worst.max(cov.abs());
    }
    Ok(worst)
}

/// Exact sampler over finitely many outcomes with rational weights. Uses
/// integer weights when the common denominator fits in 128 bits.
#[derive(Debug, Clone)]
pub enum WeightSampler {
    Exact(WeightedIndex<u128>),
    Approx(WeightedIndex<f64>),
}

impl WeightSampler {
    pub fn new(weights: &[Ratio]) -> Result<Self> {
        let den = rational::common_denominator(weights.iter());
        let ints: Option<Vec<u128>> = weights
            .iter()
            .map(|w| rational::scaled_numerator(w, &den).to_u128())
            .collect();
        if let Some(ints) = ints {
            if ints.iter().try_fold(0u128, |acc, &x| acc.checked_add(x)).is_some() {
                return WeightedIndex::new(ints)
                    .map(WeightSampler::Exact)
                    .map_err(|e| LabError::InvalidDistribution(e.to_string()));
            }
        }
        let floats: Vec<f64> = weights.iter().map(rational::to_f64).collect();
        WeightedIndex::new(floats)
            .map(WeightSampler::Approx)
            .map_err(|e| LabError::InvalidDistribution(e.to_string()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            WeightSampler::Exact(d) => d.sample(rng),
            WeightSampler::Approx(d) => d.sample(rng),
        }
    }
}

/// Relative slack below which a floating LLR sum is re-decided exactly.
const NEAR_TIE: f64 = 1e-9;

/// Samplers and pooled-decision tables for one scenario.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    n: usize,
    kind: PreparedKind,
}

#[derive(Debug, Clone)]
enum PreparedKind {
    Iid { model: SignalModel, samplers: [WeightSampler; 2], llr: Vec<f64> },
    Parity,
    Tight { hat: [WeightSampler; 2], p: Ratio, p_f64: f64 },
    ParityWithTight { hat: [WeightSampler; 2] },
    Table { samplers: [WeightSampler; 2], rows: Vec<(Profile, [Ratio; 2])> },
}

impl PreparedScenario {
    fn new(scenario: &Scenario) -> Result<Self> {
        let n = scenario.n;
        let kind = match base_structure(&scenario.structure) {
            Structure::Iid(model) => PreparedKind::Iid {
                samplers: [WeightSampler::new(model.mu0())?, WeightSampler::new(model.mu1())?],
                llr: model.llr_table().into_iter().map(|z| z.unwrap_or(0.0)).collect(),
                model: model.clone(),
            },
            Structure::Joint(JointLaw::Parity) => PreparedKind::Parity,
            Structure::Joint(JointLaw::UncorrelatedTight { p }) => PreparedKind::Tight {
                hat: [WeightSampler::new(&tight_hat_law(p, 0))?, WeightSampler::new(&tight_hat_law(p, 1))?],
                p: p.clone(),
                p_f64: rational::to_f64(p),
            },
            Structure::Joint(JointLaw::ParityWithTight { p }) => PreparedKind::ParityWithTight {
                hat: [WeightSampler::new(&tight_hat_law(p, 0))?, WeightSampler::new(&tight_hat_law(p, 1))?],
            },
            Structure::Joint(JointLaw::Table(t)) => {
                let w0: Vec<Ratio> = t.rows.iter().map(|(_, w)| w[0].clone()).collect();
                let w1: Vec<Ratio> = t.rows.iter().map(|(_, w)| w[1].clone()).collect();
                PreparedKind::Table { samplers: [WeightSampler::new(&w0)?, WeightSampler::new(&w1)?], rows: t.rows.clone() }
            }
            Structure::Staged { .. } => unreachable!("base_structure strips stages"),
        };
        Ok(PreparedScenario { n, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Draws a signal profile from `P(. | S = state)`.
    pub fn sample_profile<R: Rng + ?Sized>(&self, state: u8, rng: &mut R) -> Profile {
        let n = self.n;
        match &self.kind {
            PreparedKind::Iid { samplers, .. } => {
                let d = &samplers[state as usize];
                (0..n).map(|_| d.sample(rng) as u16).collect()
            }
            PreparedKind::Parity => sample_parity_bits(n, state, rng),
            PreparedKind::Tight { hat, .. } => sample_tight_bits(n, &hat[state as usize], rng),
            PreparedKind::ParityWithTight { hat } => {
                let first = sample_parity_bits(n, state, rng);
                let second = sample_tight_bits(n, &hat[state as usize], rng);
                first.iter().zip(&second).map(|(f, s)| (f << 1) | s).collect()
            }
            PreparedKind::Table { samplers, rows } => rows[samplers[state as usize].sample(rng)].0.clone(),
        }
    }

    /// Pooled optimal action set and pooled posterior (as `f64`) for a
    /// profile. Ties are always decided on exact rationals.
    pub fn pooled_decision(&self, profile: &[u16]) -> Result<(ActionSet, f64)> {
        match &self.kind {
            PreparedKind::Iid { model, llr, .. } => {
                let mut sum = 0.0;
                let mut scale = 0.0;
                for &x in profile {
                    let z = llr[x as usize];
                    sum += z;
                    scale += z.abs();
                }
                if sum.abs() > NEAR_TIE * (1.0 + scale) {
                    let belief = crate::signal::belief_from_llr(crate::signal::LlrValue(sum)).value();
                    let action = if sum > 0.0 { ActionSet::One } else { ActionSet::Zero };
                    return Ok((action, belief));
                }
                let mut counts = vec![0u32; model.len()];
                for &x in profile {
                    counts[x as usize] += 1;
                }
                let w0 = multiset::power_product(model.mu0(), &counts);
                let w1 = multiset::power_product(model.mu1(), &counts);
                let total = &w0 + &w1;
                if total.is_zero() {
                    return Err(LabError::NullConditioning("profile has zero probability".into()));
                }
                let post = w1 / total;
                Ok((ActionSet::optimal(&post), rational::to_f64(&post)))
            }
            PreparedKind::Parity => {
                let s = parity_of(profile.iter().copied());
                Ok((ActionSet::singleton(s), s as f64))
            }
            PreparedKind::ParityWithTight { .. } => {
                let s = parity_of(profile.iter().map(|&x| x >> 1));
                Ok((ActionSet::singleton(s), s as f64))
            }
            PreparedKind::Tight { p, p_f64, .. } => {
                let ones = profile.iter().filter(|&&b| b == 1).count();
                let (post, post_f) = if ones == 3 * self.n / 4 {
                    (p.clone(), *p_f64)
                } else if ones == self.n / 4 {
                    (Ratio::one() - p, 1.0 - p_f64)
                } else {
                    return Err(LabError::NullConditioning("profile has zero probability".into()));
                };
                Ok((ActionSet::optimal(&post), post_f))
            }
            PreparedKind::Table { rows, .. } => {
                let (_, w) = rows
                    .iter()
                    .find(|(p, _)| p.as_slice() == profile)
                    .ok_or_else(|| LabError::NullConditioning("profile not in table".into()))?;
                let total = &w[0] + &w[1];
                if total.is_zero() {
                    return Err(LabError::NullConditioning("profile has zero probability".into()));
                }
                let post = &w[1] / total;
                Ok((ActionSet::optimal(&post), rational::to_f64(&post)))
            }
        }
    }
}

fn sample_parity_bits<R: Rng + ?Sized>(n: usize, state: u8, rng: &mut R) -> Profile {
    let mut bits: Profile = (0..n - 1).map(|_| rng.random::<bool>() as u16).collect();
    let partial = parity_of(bits.iter().copied());
    bits.push((partial ^ state) as u16);
    bits
}

fn sample_tight_bits<R: Rng + ?Sized>(n: usize, hat: &WeightSampler, rng: &mut R) -> Profile {
    let s_hat = hat.sample(rng) as u16;
    let mut bits = vec![1 - s_hat; n];
    for u in rand::seq::index::sample(rng, n, 3 * n / 4) {
        bits[u] = s_hat;
    }
    bits
}

/// `p(n) = 1/2 + 1/2 sqrt(1 - 3/(n-1))`, exactly when the square root is
/// rational, otherwise as the exact value of the nearest `f64`.
pub fn tight_accuracy(n: usize) -> Result<(Ratio, bool)> {
    if n < 4 {
        return Err(LabError::Parameter(format!("p(n) is imaginary for n = {n} < 4")));
    }
    if !n.is_multiple_of(4) {
        return Err(LabError::Parameter(format!("n = {n} is not divisible by 4")));
    }
    let inner = BigRational::new(BigInt::from(n as i64 - 4), BigInt::from(n as i64 - 1));
    let half = ratio(1, 2);
    if let (Some(rn), Some(rd)) = (exact_sqrt(inner.numer()), exact_sqrt(inner.denom())) {
        let root = BigRational::new(rn, rd);
        return Ok((&half + &half * root, true));
    }
    let approx = 0.5 + 0.5 * rational::to_f64(&inner).sqrt();
    Ok((rational::from_f64(approx)?, false))
}

fn exact_sqrt(v: &BigInt) -> Option<BigInt> {
    if v.is_negative() {
        return None;
    }
    let r = v.sqrt();
    if &r * &r == *v {
        Some(r)
    } else {
        None
    }
}

/// Scenario families by name, as used by the CLI and config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Parity { n: usize },
    UncorrelatedTight { n: usize },
    TwoBit { n: usize },
    Senate {
        n: usize,
        senate_size: usize,
        #[serde(with = "rational::serde_ratio")]
        accuracy: Ratio,
    },
    IidBinary {
        n: usize,
        #[serde(with = "rational::serde_ratio")]
        p: Ratio,
    },
    GeometricTail {
        n: usize,
        k: u32,
        #[serde(with = "rational::serde_ratio")]
        ratio: Ratio,
    },
    Iid { n: usize, model: SignalModel },
}

/// One entry of `scenario list`.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

pub fn catalog() -> Vec<FamilyInfo> {
    vec![
        FamilyInfo { name: "parity", params: "n>=2", summary: "uniform bits, S is their sum mod 2; private beliefs stay at 1/2" },
        FamilyInfo {
            name: "uncorrelated_tight",
            params: "n>=4, n divisible by 4",
            summary: "pairwise independent bits that reveal S only up to an error ~ (3/4)/(n-1)",
        },
        FamilyInfo { name: "two_bit", params: "n>=4, n divisible by 4", summary: "parity bit plus uncorrelated-tight bit per agent" },
        FamilyInfo {
            name: "senate",
            params: "n>senate_size, senate_size=100, accuracy=2/3",
            summary: "a pre-pooled senate announces its action; everybody else follows",
        },
        FamilyInfo { name: "iid_binary", params: "p in (1/2,1)", summary: "i.i.d. bits equal to S with probability p" },
        FamilyInfo {
            name: "geometric_tail",
            params: "k>=1, ratio in (0,1)",
            summary: "i.i.d. signals with LLR support {+-1..+-k}*log(1/ratio); beliefs reach toward 0 and 1 as k grows",
        },
        FamilyInfo { name: "iid", params: "model (config file)", summary: "i.i.d. signals from an explicit signal model" },
    ]
}

impl ScenarioSpec {
    /// Builds a spec from a family name and `key=value` parameters.
    pub fn from_params(name: &str, n: usize, params: &BTreeMap<String, String>, model: Option<SignalModel>) -> Result<Self> {
        let get_ratio = |key: &str, default: Option<Ratio>| -> Result<Ratio> {
            match params.get(key) {
                Some(v) => rational::parse_ratio(v),
                None => default.ok_or_else(|| LabError::Parameter(format!("missing parameter `{key}`"))),
            }
        };
        let get_int = |key: &str, default: Option<u64>| -> Result<u64> {
            match params.get(key) {
                Some(v) => v.trim().parse().map_err(|_| LabError::Parameter(format!("`{key}` must be an integer"))),
                None => default.ok_or_else(|| LabError::Parameter(format!("missing parameter `{key}`"))),
            }
        };
        let known: &[&str] = match name {
            "parity" | "uncorrelated_tight" | "two_bit" | "iid" => &[],
            "senate" => &["senate_size", "accuracy"],
            "iid_binary" => &["p"],
            "geometric_tail" => &["k", "ratio"],
            other => return Err(LabError::Parameter(format!("unknown scenario `{other}`"))),
        };
        if let Some(extra) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(LabError::Parameter(format!("scenario `{name}` has no parameter `{extra}`")));
        }
        Ok(match name {
            "parity" => ScenarioSpec::Parity { n },
            "uncorrelated_tight" => ScenarioSpec::UncorrelatedTight { n },
            "two_bit" => ScenarioSpec::TwoBit { n },
            "senate" => ScenarioSpec::Senate {
                n,
                senate_size: get_int("senate_size", Some(100))? as usize,
                accuracy: get_ratio("accuracy", Some(ratio(2, 3)))?,
            },
            "iid_binary" => ScenarioSpec::IidBinary { n, p: get_ratio("p", None)? },
            "geometric_tail" => ScenarioSpec::GeometricTail {
                n,
                k: get_int("k", None)? as u32,
                ratio: get_ratio("ratio", None)?,
            },
            "iid" => ScenarioSpec::Iid {
                n,
                model: model.ok_or_else(|| LabError::Parameter("scenario `iid` needs a signal model in the config file".into()))?,
            },
            _ => unreachable!(),
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            ScenarioSpec::Parity { .. } => "parity",
            ScenarioSpec::UncorrelatedTight { .. } => "uncorrelated_tight",
            ScenarioSpec::TwoBit { .. } => "two_bit",
            ScenarioSpec::Senate { .. } => "senate",
            ScenarioSpec::IidBinary { .. } => "iid_binary",
            ScenarioSpec::GeometricTail { .. } => "geometric_tail",
            ScenarioSpec::Iid { .. } => "iid",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ScenarioSpec::Parity { n }
            | ScenarioSpec::UncorrelatedTight { n }
            | ScenarioSpec::TwoBit { n }
            | ScenarioSpec::Senate { n, .. }
            | ScenarioSpec::IidBinary { n, .. }
            | ScenarioSpec::GeometricTail { n, .. }
            | ScenarioSpec::Iid { n, .. } => *n,
        }
    }

    /// The same family with a different agent count.
    pub fn with_n(&self, new_n: usize) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            ScenarioSpec::Parity { n }
            | ScenarioSpec::UncorrelatedTight { n }
            | ScenarioSpec::TwoBit { n }
            | ScenarioSpec::Senate { n, .. }
            | ScenarioSpec::IidBinary { n, .. }
            | ScenarioSpec::GeometricTail { n, .. }
            | ScenarioSpec::Iid { n, .. } => *n = new_n,
        }
        spec
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioSpec::Senate { n, senate_size, accuracy } => {
                write!(f, "senate(n={n}, senate_size={senate_size}, accuracy={})", rational::format_ratio(accuracy))
            }
            ScenarioSpec::IidBinary { n, p } => write!(f, "iid_binary(n={n}, p={})", rational::format_ratio(p)),
            ScenarioSpec::GeometricTail { n, k, ratio } => {
                write!(f, "geometric_tail(n={n}, k={k}, ratio={})", rational::format_ratio(ratio))
            }
            other => write!(f, "{}(n={})", other.family(), other.n()),
        }
    }
}

pub fn build_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    match spec {
        ScenarioSpec::Parity { n } => parity(*n),
        ScenarioSpec::UncorrelatedTight { n } => uncorrelated_tight(*n),
        ScenarioSpec::TwoBit { n } => two_bit(*n),
        ScenarioSpec::Senate { n, senate_size, accuracy } => senate(*n, *senate_size, accuracy.clone()),
        ScenarioSpec::IidBinary { n, p } => iid_binary(*n, p.clone()),
        ScenarioSpec::GeometricTail { n, k, ratio } => geometric_tail(*n, *k, ratio.clone()),
        ScenarioSpec::Iid { n, model } => Scenario::new(format!("iid(n={n})"), *n, Structure::Iid(model.clone())),
    }
}

pub fn parity(n: usize) -> Result<Scenario> {
    if n < 2 {
        return Err(LabError::Parameter("parity needs n >= 2".into()));
    }
    Ok(Scenario::new(format!("parity(n={n})"), n, Structure::Joint(JointLaw::Parity))?.with_metadata("exact", true))
}

pub fn uncorrelated_tight(n: usize) -> Result<Scenario> {
    let (p, exact) = tight_accuracy(n)?;
    Scenario::new(format!("uncorrelated_tight(n={n})"), n, Structure::Joint(JointLaw::UncorrelatedTight { p: p.clone() }))?
        .with_metadata("exact", exact)
        .with_metadata("p", rational::to_f64(&p))
        .claiming_uncorrelated()
}

pub fn two_bit(n: usize) -> Result<Scenario> {
    if n < 2 {
        return Err(LabError::Parameter("two_bit needs n >= 2".into()));
    }
    let (p, exact) = tight_accuracy(n)?;
    Scenario::new(format!("two_bit(n={n})"), n, Structure::Joint(JointLaw::ParityWithTight { p: p.clone() }))?
        .with_metadata("exact", exact)
        .with_metadata("p", rational::to_f64(&p))
        .claiming_uncorrelated()
}

pub fn senate(n: usize, senate_size: usize, accuracy: Ratio) -> Result<Scenario> {
    if senate_size == 0 {
        return Err(LabError::Parameter("senate_size must be positive".into()));
    }
    if n <= senate_size {
        return Err(LabError::Parameter(format!("senate needs n > senate_size ({n} <= {senate_size})")));
    }
    if !(accuracy > ratio(1, 2) && accuracy < Ratio::one()) {
        return Err(LabError::Parameter("senate accuracy must lie in (1/2, 1)".into()));
    }
    let model = SignalModel::symmetric_binary(accuracy.clone())?;
    Ok(Scenario::new(
        format!("senate(n={n}, senate_size={senate_size})"),
        n,
        Structure::Staged { base: Box::new(Structure::Iid(model)), groups: vec![(0..senate_size).collect()] },
    )?
    .with_metadata("exact", true)
    .with_metadata("senate_size", senate_size)
    .with_metadata("accuracy", rational::format_ratio(&accuracy)))
}

pub fn iid_binary(n: usize, p: Ratio) -> Result<Scenario> {
    if !(p > ratio(1, 2) && p < Ratio::one()) {
        return Err(LabError::Parameter("iid_binary needs p in (1/2, 1)".into()));
    }
    let model = SignalModel::symmetric_binary(p.clone())?;
    Ok(Scenario::new(format!("iid_binary(n={n}, p={})", rational::format_ratio(&p)), n, Structure::Iid(model))?
        .with_metadata("exact", true))
}

/// Signal model with symbols `-k..-1, +1..+k`. Symbol `+j` has weight
/// proportional to `ratio^j` under `mu1` and `ratio^(2j)` under `mu0`;
/// `-j` mirrors it. Its LLR is `j * log(1/ratio)`.
pub fn geometric_tail_model(k: u32, rho: &Ratio) -> Result<SignalModel> {
    if k == 0 {
        return Err(LabError::Parameter("geometric_tail needs k >= 1".into()));
    }
    if !(rho > &Ratio::zero() && rho < &Ratio::one()) {
        return Err(LabError::Parameter("geometric_tail ratio must lie in (0, 1)".into()));
    }
    let strong: Vec<Ratio> = (1..=k).map(|j| num_traits::pow(rho.clone(), j as usize)).collect();
    let weak: Vec<Ratio> = (1..=k).map(|j| num_traits::pow(rho.clone(), 2 * j as usize)).collect();
    let z: Ratio = strong.iter().chain(&weak).cloned().sum();
    let mut alphabet = Vec::new();
    let mut mu0 = Vec::new();
    let mut mu1 = Vec::new();
    for j in (1..=k as usize).rev() {
        alphabet.push(format!("-{j}"));
        mu0.push(&strong[j - 1] / &z);
        mu1.push(&weak[j - 1] / &z);
    }
    for j in 1..=k as usize {
        alphabet.push(format!("+{j}"));
        mu0.push(&weak[j - 1] / &z);
        mu1.push(&strong[j - 1] / &z);
    }
    SignalModel::new(alphabet, mu0, mu1)
}

pub fn geometric_tail(n: usize, k: u32, rho: Ratio) -> Result<Scenario> {
    let model = geometric_tail_model(k, &rho)?;
    Ok(Scenario::new(
        format!("geometric_tail(n={n}, k={k}, ratio={})", rational::format_ratio(&rho)),
        n,
        Structure::Iid(model),
    )?
    .with_metadata("exact", true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_weights_are_products() {
        let s = iid_binary(2, ratio(2, 3)).unwrap();
        let rows = s.enumerate(1 << 24).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(s.conditional_weight(&[1, 1], 1), ratio(4, 9));
    }

    #[test]
    fn parity_support() {
        let s = parity(2).unwrap();
        let rows = s.enumerate(1 << 24).unwrap();
        for (p, w) in &rows {
            let x = (p[0] ^ p[1]) as usize;
            assert_eq!(w[x], ratio(1, 2));
            assert!(w[1 - x].is_zero());
        }
    }

    #[test]
    fn tight_accuracy_values() {
        assert_eq!(tight_accuracy(4).unwrap(), (ratio(1, 2), true));
        let (p8, exact) = tight_accuracy(8).unwrap();
        assert!(!exact);
        let expected = 0.5 + 0.5 * (4.0f64 / 7.0).sqrt();
        assert!((rational::to_f64(&p8) - expected).abs() < 1e-15);
        assert!((rational::to_f64(&p8) - 0.877964).abs() < 1e-6);
        assert!(matches!(tight_accuracy(6), Err(LabError::Parameter(_))));
        assert!(matches!(tight_accuracy(2), Err(LabError::Parameter(_))));
        assert!(uncorrelated_tight(10).is_err());
    }

    #[test]
    fn tight_is_pairwise_independent() {
        for n in [4, 8, 12, 16, 128] {
            let s = uncorrelated_tight(n).unwrap();
            assert!(s.claims_uncorrelated());
            assert!(s.max_conditional_llr_covariance().unwrap() <= COVARIANCE_TOLERANCE);
        }
    }

    #[test]
    fn wrong_p_is_not_uncorrelated() {
        let s = Scenario::new("bad", 8, Structure::Joint(JointLaw::UncorrelatedTight { p: ratio(9, 10) }))
            .unwrap()
            .with_metadata("exact", true);
        assert!(s.claiming_uncorrelated().is_err());
    }

    #[test]
    fn senate_validation() {
        assert!(senate(100, 100, ratio(2, 3)).is_err());
        let s = senate(200, 100, ratio(2, 3)).unwrap();
        assert_eq!(s.speakers().len(), 100);
        assert_eq!(s.group_of(5).unwrap().len(), 100);
        assert!(s.group_of(150).is_none());
    }

    #[test]
    fn geometric_tail_llr_support() {
        let m = geometric_tail_model(3, &ratio(1, 2)).unwrap();
        let unit = 2f64.ln();
        let llr: Vec<f64> = m.llr_table().into_iter().map(|z| z.unwrap() / unit).collect();
        let expected = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        for (a, b) in llr.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_profiles_have_positive_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [parity(5).unwrap(), uncorrelated_tight(8).unwrap(), two_bit(8).unwrap(), iid_binary(6, ratio(3, 4)).unwrap()] {
            let prep = s.prepare().unwrap();
            for trial in 0..50 {
                let state = (trial % 2) as u8;
                let x = prep.sample_profile(state, &mut rng);
                assert_eq!(x.len(), s.n());
                assert!(!s.conditional_weight(&x, state).is_zero());
                let (action, belief) = prep.pooled_decision(&x).unwrap();
                let exact = s.pooled_posterior_exact(&x).unwrap();
                assert_eq!(action, ActionSet::optimal(&exact));
                assert!((belief - rational::to_f64(&exact)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_tie_resolution() {
        let s = iid_binary(2, ratio(2, 3)).unwrap();
        let prep = s.prepare().unwrap();
        assert_eq!(prep.pooled_decision(&[0, 1]).unwrap().0, ActionSet::Both);
        assert_eq!(prep.pooled_decision(&[1, 1]).unwrap().0, ActionSet::One);
    }

    #[test]
    fn spec_from_params() {
        let mut params = BTreeMap::new();
        params.insert("p".to_string(), "2/3".to_string());
        let spec = ScenarioSpec::from_params("iid_binary", 10, &params, None).unwrap();
        assert_eq!(spec, ScenarioSpec::IidBinary { n: 10, p: ratio(2, 3) });
        assert_eq!(spec.with_n(20).n(), 20);
        params.insert("bogus".into(), "1".into());
        assert!(ScenarioSpec::from_params("iid_binary", 10, &params, None).is_err());
        assert!(ScenarioSpec::from_params("nope", 10, &BTreeMap::new(), None).is_err());
        let senate = ScenarioSpec::from_params("senate", 200, &BTreeMap::new(), None).unwrap();
        assert_eq!(senate, ScenarioSpec::Senate { n: 200, senate_size: 100, accuracy: ratio(2, 3) });
    }
}
