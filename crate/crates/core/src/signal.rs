//! Private-signal distributions and the quantities derived from them:
//! log-likelihood ratios, private beliefs, Kullback-Leibler divergences and
//! the noise-to-signal ratio `D`.
//!
//! Weights are exact rationals. Logarithms, divergences and variances are
//! `f64`, computed from exactly reduced likelihood ratios.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::rational::{self, Ratio};

/// Finite signal alphabet with the two state-conditional laws `mu0`, `mu1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SignalModelRepr", into = "SignalModelRepr")]
pub struct SignalModel {
    alphabet: Vec<String>,
    mu0: Vec<Ratio>,
    mu1: Vec<Ratio>,
}

#[derive(Serialize, Deserialize)]
struct SignalModelRepr {
    alphabet: Vec<String>,
    #[serde(with = "rational::serde_ratio_vec")]
    mu0: Vec<Ratio>,
    #[serde(with = "rational::serde_ratio_vec")]
    mu1: Vec<Ratio>,
}

impl TryFrom<SignalModelRepr> for SignalModel {
    type Error = LabError;
    fn try_from(r: SignalModelRepr) -> Result<Self> {
        SignalModel::new(r.alphabet, r.mu0, r.mu1)
    }
}

impl From<SignalModel> for SignalModelRepr {
    fn from(m: SignalModel) -> Self {
        SignalModelRepr { alphabet: m.alphabet, mu0: m.mu0, mu1: m.mu1 }
    }
}

/// Log-likelihood ratio `log(mu1/mu0)` in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LlrValue(pub f64);

impl LlrValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A probability assigned to the event `S = 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Belief(f64);

impl Belief {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Belief(value))
        } else {
            Err(LabError::Parameter(format!("belief {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dimensionless noise-to-signal ratio of a signal model.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct NoiseToSignal(pub f64);

impl NoiseToSignal {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl SignalModel {
    /// Validates and builds a model. Both weight vectors must be exact
    /// probability vectors with identical support, and must differ.
    pub fn new(alphabet: Vec<String>, mu0: Vec<Ratio>, mu1: Vec<Ratio>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(LabError::InvalidDistribution("empty alphabet".into()));
        }
        if mu0.len() != alphabet.len() || mu1.len() != alphabet.len() {
            return Err(LabError::InvalidDistribution(format!(
                "alphabet has {} symbols but weights have lengths {} and {}",
                alphabet.len(),
                mu0.len(),
                mu1.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for sym in &alphabet {
            if !seen.insert(sym.as_str()) {
                return Err(LabError::InvalidDistribution(format!("duplicate symbol `{sym}`")));
            }
        }
        for (name, weights) in [("mu0", &mu0), ("mu1", &mu1)] {
            if weights.iter().any(|w| w.is_negative()) {
                return Err(LabError::InvalidDistribution(format!("{name} has a negative weight")));
            }
            let total: Ratio = weights.iter().cloned().sum();
            if !total.is_one() {
                return Err(LabError::InvalidDistribution(format!(
                    "{name} sums to {}, not 1",
                    rational::format_ratio(&total)
                )));
            }
        }
        for (i, sym) in alphabet.iter().enumerate() {
            if mu0[i].is_zero() != mu1[i].is_zero() {
                return Err(LabError::AbsoluteContinuity(sym.clone()));
            }
        }
        if mu0 == mu1 {
            return Err(LabError::NonInformative("mu0 equals mu1".into()));
        }
        Ok(SignalModel { alphabet, mu0, mu1 })
    }

    /// Binary signal that equals the state with probability `accuracy`.
    /// Symbol `"1"` has weight `accuracy` under `mu1` and `1 - accuracy` under `mu0`.
    pub fn symmetric_binary(accuracy: Ratio) -> Result<Self> {
        if !(accuracy > Ratio::zero() && accuracy < Ratio::one()) {
            return Err(LabError::Parameter("accuracy must lie in (0, 1)".into()));
        }
        let miss = Ratio::one() - &accuracy;
        SignalModel::new(
            vec!["0".into(), "1".into()],
            vec![accuracy.clone(), miss.clone()],
            vec![miss, accuracy],
        )
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabet.is_empty()
    }

    pub fn mu0(&self) -> &[Ratio] {
        &self.mu0
    }

    pub fn mu1(&self) -> &[Ratio] {
        &self.mu1
    }

    /// Weight vector for `state` (0 or 1).
    pub fn law(&self, state: u8) -> &[Ratio] {
        if state == 0 {
            &self.mu0
        } else {
            &self.mu1
        }
    }

    pub fn symbol_index(&self, symbol: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| LabError::InvalidSymbol(symbol.to_string()))
    }

    /// The same model with the roles of the two states exchanged.
    pub fn swapped(&self) -> SignalModel {
        SignalModel { alphabet: self.alphabet.clone(), mu0: self.mu1.clone(), mu1: self.mu0.clone() }
    }

    /// Symbols with positive weight, by index.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.mu0[i].is_zero())
    }

    pub fn log_likelihood_ratio(&self, symbol: &str) -> Result<LlrValue> {
        self.llr_at(self.symbol_index(symbol)?)
    }

    pub fn llr_at(&self, index: usize) -> Result<LlrValue> {
        let sym = || self.alphabet.get(index).cloned().unwrap_or_else(|| index.to_string());
        if index >= self.len() {
            return Err(LabError::InvalidSymbol(sym()));
        }
        if self.mu0[index].is_zero() || self.mu1[index].is_zero() {
            return Err(LabError::AbsoluteContinuity(sym()));
        }
        let ratio = &self.mu1[index] / &self.mu0[index];
        Ok(LlrValue(rational::to_f64(&ratio).ln()))
    }

    /// Exact likelihood ratio `mu1/mu0` at a positive-weight symbol.
    pub fn likelihood_ratio_at(&self, index: usize) -> Result<Ratio> {
        if self.mu0[index].is_zero() {
            return Err(LabError::AbsoluteContinuity(self.alphabet[index].clone()));
        }
        Ok(&self.mu1[index] / &self.mu0[index])
    }

    /// LLR per symbol; zero-weight symbols get `None`.
    pub fn llr_table(&self) -> Vec<Option<f64>> {
        (0..self.len()).map(|i| self.llr_at(i).ok().map(LlrValue::value)).collect()
    }

    /// Exact private belief `P(S=1 | signal)` under a uniform prior.
    pub fn private_belief_at(&self, index: usize) -> Result<Ratio> {
        let total = &self.mu0[index] + &self.mu1[index];
        if total.is_zero() {
            return Err(LabError::NullConditioning(format!("symbol `{}` has zero weight", self.alphabet[index])));
        }
        Ok(&self.mu1[index] / total)
    }

    /// Mean and variance of `statistic` under the law of `state`.
    pub fn moments<F: Fn(usize) -> f64>(&self, state: u8, statistic: F) -> (f64, f64) {
        let law = self.law(state);
        let mut mean = 0.0;
        for i in self.support() {
            mean += rational::to_f64(&law[i]) * statistic(i);
        }
        let mut var = 0.0;
        for i in self.support() {
            let w = rational::to_f64(&law[i]);
            let d = statistic(i) - mean;
            var += w * d * d;
        }
        (mean, var)
    }

    /// Conditional means `(E[z | S=0], E[z | S=1])` of the log-likelihood ratio.
    pub fn llr_means(&self) -> (f64, f64) {
        let table = self.llr_table();
        let z = |i: usize| table[i].expect("support symbol");
        (self.moments(0, z).0, self.moments(1, z).0)
    }

    pub fn noise_to_signal_ratio(&self) -> Result<NoiseToSignal> {
        noise_to_signal_ratio(self)
    }

    /// Distributions `(values, mu0_M, mu1_M)` of the truncated statistic
    /// `truncate_llr(z, M)`, merged over symbols with equal value.
    pub fn truncated_laws(&self, m: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut values: Vec<f64> = Vec::new();
        let mut w0: Vec<f64> = Vec::new();
        let mut w1: Vec<f64> = Vec::new();
        for i in self.support() {
            let z = truncate_llr(self.llr_at(i)?, m)?.value();
            let slot = match values.iter().position(|v| *v == z) {
                Some(pos) => pos,
                None => {
                    values.push(z);
                    w0.push(0.0);
                    w1.push(0.0);
                    values.len() - 1
                }
            };
            w0[slot] += rational::to_f64(&self.mu0[i]);
            w1[slot] += rational::to_f64(&self.mu1[i]);
        }
        Ok((values, w0, w1))
    }

    /// Noise-to-signal ratio computed with the truncated statistic in place of `z`.
    pub fn truncated_noise_to_signal_ratio(&self, m: f64) -> Result<NoiseToSignal> {
        let (values, w0, w1) = self.truncated_laws(m)?;
        let informative = w0.iter().zip(&w1).any(|(a, b)| (a - b).abs() > 1e-15);
        if !informative {
            return Err(LabError::NonInformativeTruncation(m));
        }
        let moments = |w: &[f64]| {
            let mean: f64 = values.iter().zip(w).map(|(v, p)| v * p).sum();
            let var: f64 = values.iter().zip(w).map(|(v, p)| p * (v - mean).powi(2)).sum();
            (mean, var)
        };
        let (m0, v0) = moments(&w0);
        let (m1, v1) = moments(&w1);
        let gap = m1 - m0;
        if gap.abs() < 1e-15 {
            return Err(LabError::NonInformativeTruncation(m));
        }
        Ok(NoiseToSignal(2.0 * (v0 + v1) / (gap * gap)))
    }
}

/// Posterior `P(S=1)` after observing total log-likelihood ratio `z`,
/// starting from the uniform prior: `e^z / (1 + e^z)`.
pub fn belief_from_llr(z: LlrValue) -> Belief {
    let z = z.0;
    let b = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    Belief(b)
}

/// `sum_w p(w) log(p(w)/q(w))` over the common support.
pub fn kl_divergence(p: &[Ratio], q: &[Ratio]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(LabError::InvalidDistribution("distributions over different alphabets".into()));
    }
    let mut total = 0.0;
    for (i, (pi, qi)) in p.iter().zip(q).enumerate() {
        if pi.is_zero() != qi.is_zero() {
            return Err(LabError::AbsoluteContinuity(i.to_string()));
        }
        if pi.is_zero() {
            continue;
        }
        let r = pi / qi;
        if r.is_one() {
            continue;
        }
        total += rational::to_f64(pi) * rational::to_f64(&r).ln();
    }
    Ok(total)
}

/// Symmetrized divergence `KL(mu1||mu0) + KL(mu0||mu1)`.
pub fn symmetrized_divergence(model: &SignalModel) -> f64 {
    kl_divergence(model.mu1(), model.mu0()).expect("validated model")
        + kl_divergence(model.mu0(), model.mu1()).expect("validated model")
}

/// `D = 2 (Var_mu1[z] + Var_mu0[z]) / (KL(mu1||mu0) + KL(mu0||mu1))^2`.
pub fn noise_to_signal_ratio(model: &SignalModel) -> Result<NoiseToSignal> {
    if model.mu0() == model.mu1() {
        return Err(LabError::NonInformative("mu0 equals mu1".into()));
    }
    let table = model.llr_table();
    let z = |i: usize| table[i].expect("support symbol");
    let (_, var0) = model.moments(0, z);
    let (_, var1) = model.moments(1, z);
    let divergence = symmetrized_divergence(model);
    if divergence <= 0.0 {
        return Err(LabError::NonInformative("zero divergence".into()));
    }
    Ok(NoiseToSignal(2.0 * (var1 + var0) / (divergence * divergence)))
}

/// Keeps `z` when `|z| < M`, replaces it with 0 otherwise.
pub fn truncate_llr(z: LlrValue, m: f64) -> Result<LlrValue> {
    if !(m > 0.0) {
        return Err(LabError::Parameter(format!("truncation threshold must be positive, got {m}")));
    }
    Ok(if z.0.abs() < m { z } else { LlrValue(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use std::f64::consts::LN_2;

    fn binary_two_thirds() -> SignalModel {
        SignalModel::symmetric_binary(ratio(2, 3)).unwrap()
    }

    #[test]
    fn llr_of_binary_model() {
        let m = binary_two_thirds();
        assert!((m.log_likelihood_ratio("1").unwrap().value() - LN_2).abs() < 1e-15);
        assert!((m.log_likelihood_ratio("0").unwrap().value() + LN_2).abs() < 1e-15);
    }

    #[test]
    fn llr_zero_when_weights_match() {
        let m = SignalModel::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)],
            vec![ratio(1, 3), ratio(1, 2), ratio(1, 6)],
        )
        .unwrap();
        assert_eq!(m.log_likelihood_ratio("a").unwrap().value(), 0.0);
    }

    #[test]
    fn llr_errors() {
        let m = SignalModel::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![ratio(1, 2), ratio(1, 2), ratio(0, 1)],
            vec![ratio(1, 4), ratio(3, 4), ratio(0, 1)],
        )
        .unwrap();
        assert!(matches!(m.log_likelihood_ratio("z"), Err(LabError::InvalidSymbol(_))));
        assert!(matches!(m.log_likelihood_ratio("c"), Err(LabError::AbsoluteContinuity(_))));
    }

    #[test]
    fn model_validation() {
        let bad_sum = SignalModel::new(vec!["0".into(), "1".into()], vec![ratio(1, 2), ratio(1, 3)], vec![ratio(1, 2), ratio(1, 2)]);
        assert!(matches!(bad_sum, Err(LabError::InvalidDistribution(_))));
        let uninformative = SignalModel::new(vec!["0".into(), "1".into()], vec![ratio(1, 2), ratio(1, 2)], vec![ratio(1, 2), ratio(1, 2)]);
        assert!(matches!(uninformative, Err(LabError::NonInformative(_))));
        let not_ac = SignalModel::new(vec!["0".into(), "1".into()], vec![ratio(1, 1), ratio(0, 1)], vec![ratio(1, 2), ratio(1, 2)]);
        assert!(matches!(not_ac, Err(LabError::AbsoluteContinuity(_))));
        let negative = SignalModel::new(vec!["0".into(), "1".into()], vec![ratio(3, 2), ratio(-1, 2)], vec![ratio(1, 2), ratio(1, 2)]);
        assert!(matches!(negative, Err(LabError::InvalidDistribution(_))));
    }

    #[test]
    fn beliefs_from_llr() {
        assert_eq!(belief_from_llr(LlrValue(0.0)).value(), 0.5);
        assert!((belief_from_llr(LlrValue(LN_2)).value() - 2.0 / 3.0).abs() < 1e-15);
        assert!((belief_from_llr(LlrValue(2.0 * LN_2)).value() - 0.8).abs() < 1e-15);
        assert!(belief_from_llr(LlrValue(-800.0)).value() >= 0.0);
        assert!(belief_from_llr(LlrValue(800.0)).value() <= 1.0);
    }

    #[test]
    fn kl_examples() {
        let p = [ratio(1, 3), ratio(2, 3)];
        let q = [ratio(2, 3), ratio(1, 3)];
        let expected = LN_2 / 3.0;
        assert!((kl_divergence(&p, &q).unwrap() - expected).abs() < 1e-12);
        assert!((kl_divergence(&q, &p).unwrap() - expected).abs() < 1e-12);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let r = [ratio(1, 1), ratio(0, 1)];
        assert!(matches!(kl_divergence(&p, &r), Err(LabError::AbsoluteContinuity(_))));
    }

    #[test]
    fn noise_to_signal_closed_forms() {
        let d = noise_to_signal_ratio(&binary_two_thirds()).unwrap().value();
        assert!((d - 8.0).abs() < 1e-12);
        let d = noise_to_signal_ratio(&SignalModel::symmetric_binary(ratio(3, 4)).unwrap()).unwrap().value();
        assert!((d - 3.0).abs() < 1e-12);
        let m = binary_two_thirds();
        assert_eq!(noise_to_signal_ratio(&m).unwrap(), noise_to_signal_ratio(&m.swapped()).unwrap());
    }

    #[test]
    fn truncation() {
        assert_eq!(truncate_llr(LlrValue(0.5), 1.0).unwrap().value(), 0.5);
        assert_eq!(truncate_llr(LlrValue(3.0), 1.0).unwrap().value(), 0.0);
        assert_eq!(truncate_llr(LlrValue(-3.0), 1.0).unwrap().value(), 0.0);
        assert!(truncate_llr(LlrValue(0.1), 0.0).is_err());
    }

    #[test]
    fn truncated_noise_to_signal() {
        let m = binary_two_thirds();
        // |z| = log 2 < 1: nothing truncated.
        let d = m.truncated_noise_to_signal_ratio(1.0).unwrap().value();
        assert!((d - 8.0).abs() < 1e-12);
        // Every symbol truncated to 0: the statistic carries no information.
        assert!(matches!(m.truncated_noise_to_signal_ratio(0.5), Err(LabError::NonInformativeTruncation(_))));
    }

    #[test]
    fn serde_round_trip() {
        let m = binary_two_thirds();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"2/3\""));
        let back: SignalModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"alphabet":["a","b"],"mu0":["1/2","1/2"],"mu1":["1/2","1/2"]}"#;
        assert!(serde_json::from_str::<SignalModel>(bad).is_err());
    }
}
