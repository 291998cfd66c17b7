use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{LabError, Result};
use crate::rational::{self, Ratio};
use crate::scenarios::{Profile, Scenario};

/// Exact engine refuses spaces with more `(state, profile)` pairs than this.
pub const EXACT_BUDGET: u128 = 1 << 24;

/// Enumerated joint space of `(state, profile)` with exact prior weights.
///
/// Only positive-weight profiles are stored. Weights are kept as integer
/// numerators over one shared denominator so block sums stay in `BigUint`.
#[derive(Debug, Clone)]
pub struct OutcomeSpace {
    n: usize,
    alphabet: Vec<String>,
    profiles: Vec<Profile>,
    numerators: Vec<[BigUint; 2]>,
    denominator: BigUint,
    index: HashMap<Profile, usize>,
}

impl OutcomeSpace {
    pub fn build(scenario: &Scenario) -> Result<Self> {
        Self::build_with_budget(scenario, EXACT_BUDGET)
    }

    pub fn build_with_budget(scenario: &Scenario, budget: u128) -> Result<Self> {
        let rows = scenario.enumerate(budget)?;
        Self::from_conditionals(scenario.n(), scenario.alphabet(), rows)
    }

    /// Builds the space from conditional laws `P(profile | S)`; the prior on
    /// `S` is uniform.
    pub fn from_conditionals(n: usize, alphabet: Vec<String>, rows: Vec<(Profile, [Ratio; 2])>) -> Result<Self> {
        let half = rational::half();
        let joint: Vec<[Ratio; 2]> = rows.iter().map(|(_, w)| [&w[0] * &half, &w[1] * &half]).collect();
        let mut totals = [Ratio::zero(), Ratio::zero()];
        for w in &joint {
            for s in 0..2 {
                if w[s] < Ratio::zero() {
                    return Err(LabError::InvalidDistribution("negative weight".into()));
                }
                totals[s] += &w[s];
            }
        }
        if totals[0] != half || totals[1] != half {
            return Err(LabError::InvalidDistribution("state marginals must both equal 1/2".into()));
        }
        let denominator = rational::common_denominator(joint.iter().flatten());
        let mut profiles = Vec::with_capacity(rows.len());
        let mut numerators = Vec::with_capacity(rows.len());
        let mut index = HashMap::with_capacity(rows.len());
        for ((profile, _), w) in rows.into_iter().zip(joint) {
            if w[0].is_zero() && w[1].is_zero() {
                continue;
            }
            if profile.len() != n {
                return Err(LabError::InvalidDistribution("profile length differs from n".into()));
            }
            if index.insert(profile.clone(), profiles.len()).is_some() {
                return Err(LabError::InvalidDistribution("duplicate profile".into()));
            }
            numerators.push([
                rational::scaled_numerator(&w[0], &denominator),
                rational::scaled_numerator(&w[1], &denominator),
            ]);
            profiles.push(profile);
        }
        Ok(OutcomeSpace { n, alphabet, profiles, numerators, denominator, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// Number of positive-weight profiles.
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn profile(&self, index: usize) -> &[u16] {
        &self.profiles[index]
    }

    pub fn index_of(&self, profile: &[u16]) -> Option<usize> {
        self.index.get(profile).copied()
    }

    /// Joint weight `P(S = state, profile)`.
    pub fn weight(&self, state: u8, index: usize) -> Ratio {
        self.to_ratio(&self.numerators[index][state as usize])
    }

    /// Joint weight numerators over [`Self::denominator`].
    pub fn numerators(&self, index: usize) -> &[BigUint; 2] {
        &self.numerators[index]
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub(crate) fn to_ratio(&self, numerator: &BigUint) -> Ratio {
        BigRational::new(BigInt::from(numerator.clone()), BigInt::from(self.denominator.clone()))
    }

    /// Profile rendered as a symbol string: symbols are concatenated when
    /// they are all one character long, comma separated otherwise.
    pub fn render(&self, index: usize) -> String {
        let single = self.alphabet.iter().all(|s| s.chars().count() == 1);
        let syms = self.profiles[index].iter().map(|&x| self.alphabet[x as usize].as_str());
        if single {
            syms.collect()
        } else {
            syms.collect::<Vec<_>>().join(",")
        }
    }

    /// `P(S=1 | block)` for a set of profile indices.
    pub fn posterior_of(&self, block: &[usize]) -> Result<Ratio> {
        let mut w0 = BigUint::zero();
        let mut w1 = BigUint::zero();
        for &i in block {
            w0 += &self.numerators[i][0];
            w1 += &self.numerators[i][1];
        }
        posterior_from_sums(w0, w1)
    }

    /// Exact pooled posterior `P(S=1 | profile)`.
    pub fn pooled_posterior(&self, profile: &[u16]) -> Result<Ratio> {
        let i = self
            .index_of(profile)
            .ok_or_else(|| LabError::NullConditioning("profile has zero weight".into()))?;
        self.posterior_of(&[i])
    }
}

pub(crate) fn posterior_from_sums(w0: BigUint, w1: BigUint) -> Result<Ratio> {
    let total = &w0 + &w1;
    if total.is_zero() {
        return Err(LabError::NullConditioning("block has zero weight".into()));
    }
    Ok(BigRational::new(BigInt::from(w1), BigInt::from(total)))
}
