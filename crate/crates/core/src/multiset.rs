//! Symbol-count histograms of `n` i.i.d. draws and their exact laws.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::rational::Ratio;
use crate::signal::SignalModel;

/// All vectors of `parts` non-negative integers summing to `total`, in
/// lexicographic order.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut current = vec![0u32; parts];
    fill(total, 0, &mut current, &mut out);
    out
}

fn fill(remaining: u32, slot: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if slot + 1 == current.len() {
        current[slot] = remaining;
        out.push(current.clone());
        return;
    }
    for take in 0..=remaining {
        current[slot] = take;
        fill(remaining - take, slot + 1, current, out);
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn multinomial(counts: &[u32]) -> BigUint {
    let mut acc = BigUint::one();
    let mut seen: u64 = 0;
    for &c in counts {
        seen += c as u64;
        acc *= binomial(seen, c as u64);
    }
    acc
}

/// `prod_w weights[w]^counts[w]`.
pub fn power_product(weights: &[Ratio], counts: &[u32]) -> Ratio {
    weights
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0)
        .fold(Ratio::one(), |acc, (w, &c)| acc * num_traits::pow(w.clone(), c as usize))
}

/// One histogram of `n` i.i.d. draws with its likelihoods.
#[derive(Debug, Clone)]
pub struct HistogramTerm {
    pub counts: Vec<u32>,
    /// Number of profiles with this histogram.
    pub multiplicity: BigUint,
    /// Probability of any single profile with this histogram, per state.
    pub profile_weight: [Ratio; 2],
}

impl HistogramTerm {
    /// `P(histogram | S = state)`.
    pub fn probability(&self, state: u8) -> Ratio {
        &self.profile_weight[state as usize] * BigRational::from_integer(BigInt::from(self.multiplicity.clone()))
    }

    /// Exact pooled posterior `P(S=1 | histogram)` under the uniform prior.
    pub fn posterior(&self) -> Option<Ratio> {
        let total = &self.profile_weight[0] + &self.profile_weight[1];
        if total.is_zero() {
            None
        } else {
            Some(&self.profile_weight[1] / total)
        }
    }
}

/// Histograms of `n` draws from `model` that have positive probability.
pub fn histogram_law(model: &SignalModel, n: u32) -> Vec<HistogramTerm> {
    compositions(n, model.len())
        .into_iter()
        .filter_map(|counts| {
            let w0 = power_product(model.mu0(), &counts);
            let w1 = power_product(model.mu1(), &counts);
            if w0.is_zero() && w1.is_zero() {
                return None;
            }
            Some(HistogramTerm { multiplicity: multinomial(&counts), counts, profile_weight: [w0, w1] })
        })
        .collect()
}
