//! Estimators and quantitative learning bounds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::multiset::histogram_law;
use crate::rational::{self, Ratio};
use crate::signal::{Belief, LlrValue, NoiseToSignal, SignalModel};

/// The normalized LLR average `Y`, an unbiased estimate of `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorY {
    pub value: f64,
}

/// `(1/n) sum_u (z_u - E[z|S=0]) / (E[z|S=1] - E[z|S=0])`
pub fn estimator_y(model: &SignalModel, llrs: &[LlrValue]) -> Result<EstimatorY> {
    if llrs.is_empty() {
        return Err(LabError::Parameter("estimator needs at least one agent".into()));
    }
    let (e0, e1) = model.llr_means();
    let gap = e1 - e0;
    if gap.abs() < 1e-15 {
        return Err(LabError::NonInformative("equal conditional LLR means".into()));
    }
    let sum: f64 = llrs.iter().map(|z| (z.0 - e0) / gap).sum();
    Ok(EstimatorY { value: sum / llrs.len() as f64 })
}

/// Second moments of `Y` and `S` for `n` i.i.d. agents, by summing over
/// signal histograms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMoments {
    pub n: usize,
    pub mean_y: f64,
    pub var_y: f64,
    pub cov_s_y: f64,
    pub var_y_minus_s: f64,
    pub d: f64,
}

pub fn estimator_moments(model: &SignalModel, n: usize) -> Result<EstimatorMoments> {
    if n == 0 {
        return Err(LabError::Parameter("n must be at least 1".into()));
    }
    let d = model.noise_to_signal_ratio()?.0;
    let (e0, e1) = model.llr_means();
    let gap = e1 - e0;
    let table = model.llr_table();
    let mut ey = 0.0;
    let mut ey2 = 0.0;
    let mut esy = 0.0;
    let mut err2 = 0.0;
    for term in histogram_law(model, n as u32) {
        let mut y = 0.0;
        for (x, &c) in term.counts.iter().enumerate() {
            if c > 0 {
                let z = table[x].ok_or_else(|| LabError::AbsoluteContinuity(model.alphabet()[x].clone()))?;
                y += c as f64 * (z - e0) / gap;
            }
        }
        y /= n as f64;
        for s in 0..2u8 {
            let w = 0.5 * rational::to_f64(&term.probability(s));
            ey += w * y;
            ey2 += w * y * y;
            esy += w * s as f64 * y;
            err2 += w * (y - s as f64).powi(2);
        }
    }
    Ok(EstimatorMoments {
        n,
        mean_y: ey,
        var_y: ey2 - ey * ey,
        cov_s_y: esy - 0.5 * ey,
        // E[Y - S] = 0, so the second moment is the variance
        var_y_minus_s: err2,
        d,
    })
}

/// `Cov(S, z)` for one agent, summed over the joint law of state and signal.
pub fn state_llr_covariance(model: &SignalModel) -> Result<f64> {
    let table = model.llr_table();
    let mut ez = 0.0;
    let mut esz = 0.0;
    for s in 0..2u8 {
        for x in model.support() {
            let z = table[x].ok_or_else(|| LabError::AbsoluteContinuity(model.alphabet()[x].clone()))?;
            let w = 0.5 * rational::to_f64(&model.law(s)[x]);
            ez += w * z;
            esz += w * s as f64 * z;
        }
    }
    Ok(esz - 0.5 * ez)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub d: f64,
    /// `D/(n+D)`, bounds `E[(X - S)^2]`.
    pub var_bound: f64,
    /// `1 - 4D/(n+D)`, lower bound on `P(L = {S})`; may be negative.
    pub action_bound: f64,
}

impl BoundReport {
    pub fn is_vacuous(&self) -> bool {
        self.action_bound <= 0.0
    }
}

pub fn theorem2_bounds(n: usize, d: NoiseToSignal) -> BoundReport {
    let d = d.0;
    let denom = n as f64 + d;
    BoundReport { n, d, var_bound: d / denom, action_bound: 1.0 - 4.0 * d / denom }
}

/// Fraction of beliefs strictly below `eps`.
pub fn k_statistic(beliefs: &[Belief], eps: f64) -> f64 {
    if beliefs.is_empty() {
        return 0.0;
    }
    beliefs.iter().filter(|b| b.value() < eps).count() as f64 / beliefs.len() as f64
}

/// Log-spaced thresholds, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for EpsGrid {
    fn default() -> Self {
        EpsGrid { lo: 1e-6, hi: 0.5, points: 512 }
    }
}

impl EpsGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi && hi < 1.0) || points == 0 || (points == 1 && lo != hi) {
            return Err(LabError::Parameter(format!("bad eps grid {lo}:{hi}:{points}")));
        }
        Ok(EpsGrid { lo, hi, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let step = (b - a) / (self.points - 1) as f64;
        let mut v: Vec<f64> = (0..self.points).map(|i| (a + step * i as f64).exp()).collect();
        v[0] = self.lo;
        v[self.points - 1] = self.hi;
        v
    }
}

impl FromStr for EpsGrid {
    type Err = LabError;

    /// `lo:hi:points`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || LabError::Parameter(format!("eps grid `{s}` is not lo:hi:points"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        EpsGrid::new(lo, hi, points)
    }
}

impl fmt::Display for EpsGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnBound {
    pub value: f64,
    /// Minimizing threshold.
    pub eps: f64,
}

/// `min_eps max{ 2 eps/(1-eps), 4/(n P(B < eps | S=0)) }` over `grid`.
///
/// `cdf_marginal` is only used to reject inconsistent inputs: the marginal
/// lower tail is at least half the conditional one.
pub fn qn_bound<F, G>(n: usize, cdf_given_s0: F, cdf_marginal: G, grid: &[f64]) -> Result<QnBound>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if grid.is_empty() {
        return Err(LabError::Parameter("empty eps grid".into()));
    }
    if n == 0 {
        return Err(LabError::Parameter("n must be at least 1".into()));
    }
    let mut best: Option<QnBound> = None;
    for &eps in grid {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(LabError::Parameter(format!("eps {eps} outside (0, 1)")));
        }
        let p0 = cdf_given_s0(eps);
        let pm = cdf_marginal(eps);
        if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&pm) {
            return Err(LabError::InvalidDistribution(format!("cdf value outside [0, 1] at eps {eps}")));
        }
        if p0 > 2.0 * pm + 1e-12 {
            return Err(LabError::InvalidDistribution(format!("conditional cdf exceeds twice the marginal at eps {eps}")));
        }
        if p0 <= 0.0 {
            continue;
        }
        let value = (2.0 * eps / (1.0 - eps)).max(4.0 / (n as f64 * p0));
        if best.is_none_or(|b| value < b.value) {
            best = Some(QnBound { value, eps });
        }
    }
    best.ok_or(LabError::BoundedBeliefs)
}

/// Private-belief tail `P(B < eps | S = state)` of an i.i.d. model, or the
/// marginal tail under the uniform prior when `state` is `None`.
pub fn private_belief_cdf(model: &SignalModel, state: Option<u8>, eps: f64) -> f64 {
    let mut total = 0.0;
    for x in model.support() {
        let b = match model.private_belief_at(x) {
            Ok(b) => rational::to_f64(&b),
            Err(_) => continue,
        };
        if b < eps {
            total += match state {
                Some(s) => rational::to_f64(&model.law(s)[x]),
                None => 0.5 * (rational::to_f64(&model.mu0()[x]) + rational::to_f64(&model.mu1()[x])),
            };
        }
    }
    total
}

/// [`qn_bound`] with the model's own private-belief distribution.
pub fn qn_bound_for_model(model: &SignalModel, n: usize, grid: &EpsGrid) -> Result<QnBound> {
    qn_bound(n, |e| private_belief_cdf(model, Some(0), e), |e| private_belief_cdf(model, None, e), &grid.values())
}

/// Exact `(P(B < eps), P(S = 0 | B < eps))` for an i.i.d. model; `None`
/// when the event is null.
pub fn lower_tail_exact(model: &SignalModel, eps: &Ratio) -> Result<Option<(Ratio, Ratio)>> {
    let half = rational::half();
    let mut mass = Ratio::from_integer(0.into());
    let mut zero = mass.clone();
    for x in model.support() {
        if model.private_belief_at(x)? < *eps {
            zero += &half * &model.mu0()[x];
            mass += &half * (&model.mu0()[x] + &model.mu1()[x]);
        }
    }
    if mass == Ratio::from_integer(0.into()) {
        return Ok(None);
    }
    let posterior = &zero / &mass;
    Ok(Some((mass, posterior)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Range guaranteed to contain `E[Z | A]` given `E[Z]`, `Var(Z)` and `P(A)`.
pub fn conditional_expectation_interval(mean: f64, variance: f64, p_event: f64) -> Result<Interval> {
    if p_event == 0.0 {
        return Err(LabError::NullConditioning("event has probability zero".into()));
    }
    // probabilities summed in floating point may overshoot 1 by a few ulps
    if !(p_event > 0.0 && p_event <= 1.0 + 1e-12) || variance < 0.0 || !variance.is_finite() {
        return Err(LabError::Parameter("need variance >= 0 and 0 < p_event <= 1".into()));
    }
    let p_event = p_event.min(1.0);
    let half_width = (variance / p_event).sqrt();
    Ok(Interval { lo: mean - half_width, hi: mean + half_width })
}

/// Per conditioning class `x`: `E[Z g(Z) | X=x] - E[g(Z) | X=x] E[Z | X=x]`
/// and whether `Z` is constant on the class. Rows are `(x, z, probability)`.
pub fn chebyshev_sum_gaps<G: Fn(f64) -> f64>(rows: &[(usize, f64, f64)], g: G) -> Vec<(usize, f64, bool)> {
    let classes = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
    let mut out = Vec::new();
    for x in 0..classes {
        let members: Vec<&(usize, f64, f64)> = rows.iter().filter(|r| r.0 == x && r.2 > 0.0).collect();
        let mass: f64 = members.iter().map(|r| r.2).sum();
        if mass <= 0.0 {
            continue;
        }
        let ez: f64 = members.iter().map(|r| r.1 * r.2).sum::<f64>() / mass;
        let eg: f64 = members.iter().map(|r| g(r.1) * r.2).sum::<f64>() / mass;
        let ezg: f64 = members.iter().map(|r| r.1 * g(r.1) * r.2).sum::<f64>() / mass;
        let constant = members.iter().all(|r| r.1 == members[0].1);
        out.push((x, ezg - eg * ez, constant));
    }
    out
}
