use std::fmt;

use serde::Serialize;

use super::{exact_iid_pooled, run_monte_carlo_with, McOptions, Mode, SweepTable};
use crate::bounds::{estimator_moments, qn_bound_for_model, theorem2_bounds, EpsGrid};
use crate::dynamics::{analyze_staged, binomial_cdf, common_belief_is_pooled, run_protocol, ProtocolKind};
use crate::error::Result;
use crate::knowledge::{InformationPartition, OutcomeSpace};
use crate::rational::{self, ratio};
use crate::scenarios::{geometric_tail, iid_binary, parity, senate, uncorrelated_tight, Scenario, Structure};
use crate::signal::{NoiseToSignal, SignalModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The bound says nothing at this size.
    Vacuous,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Vacuous => "VACUOUS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The claim being checked, in words.
    pub anchor: String,
    pub status: CheckStatus,
    pub observed: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// Signed slack; negative when the check fails.
    pub margin: f64,
}

impl Check {
    /// Passes when `observed <= bound + tolerance`.
    pub fn at_most(name: impl Into<String>, anchor: &str, observed: f64, bound: f64, tolerance: f64) -> Self {
        let margin = bound + tolerance - observed;
        let status = if margin >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail };
        Check { name: name.into(), anchor: anchor.into(), status, observed, bound, tolerance, margin }
    }

    /// Passes when `|observed - target| <= tolerance`.
    pub fn close(name: impl Into<String>, anchor: &str, observed: f64, target: f64, tolerance: f64) -> Self {
        let margin = tolerance - (observed - target).abs();
        let status = if margin >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail };
        Check { name: name.into(), anchor: anchor.into(), status, observed, bound: target, tolerance, margin }
    }

    pub fn holds(name: impl Into<String>, anchor: &str, ok: bool) -> Self {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        let v = if ok { 1.0 } else { 0.0 };
        Check { name: name.into(), anchor: anchor.into(), status, observed: v, bound: 1.0, tolerance: 0.0, margin: v - 1.0 }
    }

    fn vacuous(mut self) -> Self {
        self.status = CheckStatus::Vacuous;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:<7} {}  observed={:.6e} bound={:.6e} tol={:.1e} margin={:.3e}  [{}]\n",
                c.status.to_string(),
                c.name,
                c.observed,
                c.bound,
                c.tolerance,
                c.margin,
                c.anchor
            ));
        }
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), self.failures()));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// What `verify_report` runs.
#[derive(Debug, Clone)]
pub struct VerifyInputs {
    /// Multiplies every noise-to-signal ratio fed to the checks; anything but
    /// 1 corrupts the suite on purpose.
    pub d_scale: f64,
    /// Monte Carlo trials per statistical check; 0 skips them.
    pub trials: u64,
    pub seed: u64,
    pub grid: EpsGrid,
    /// Sweep results to check against their bound columns.
    pub sweep: Option<SweepTable>,
}

impl Default for VerifyInputs {
    fn default() -> Self {
        VerifyInputs { d_scale: 1.0, trials: 20_000, seed: 2024, grid: EpsGrid::default(), sweep: None }
    }
}

const AGREEMENT: &str = "common-knowledge beliefs equal P(S=1 | all signals)";
const ERROR_BOUND: &str = "P(L != {S}) <= 4D/(n+D)";
const VAR_BOUND: &str = "E[(X-S)^2] <= D/(n+D)";
const Y_IDENTITY: &str = "Var(Y-S) = D/(4n)";
const QN: &str = "q_n <= min_eps max{2eps/(1-eps), 4/(n P(B<eps|S=0))}";

pub fn verify_report(inputs: &VerifyInputs) -> Result<VerificationReport> {
    let mut checks = desk_suite(inputs)?;
    if let Some(table) = &inputs.sweep {
        checks.extend(verify_sweep(table));
    }
    Ok(VerificationReport { checks })
}

fn ternary() -> SignalModel {
    SignalModel::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)],
        vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)],
    )
    .expect("valid model")
}

/// The default exact-plus-statistical suite.
pub fn desk_suite(inputs: &VerifyInputs) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // agreement on beliefs reproduces the pooled posterior
    for n in 2..=3 {
        for (label, scenario) in [
            ("binary", iid_binary(n, ratio(2, 3))?),
            ("ternary", Scenario::new(format!("ternary(n={n})"), n, Structure::Iid(ternary()))?),
        ] {
            let space = OutcomeSpace::build(&scenario)?;
            let own: Vec<_> = (0..n).map(|u| InformationPartition::own_signal(&space, u)).collect();
            let here = space.profile(0).to_vec();
            let out = run_protocol(&ProtocolKind::PublicBelief.into(), &space, own, &here)?;
            let ok = common_belief_is_pooled(&space, &out.partitions)? == Some(true);
            checks.push(Check::holds(format!("agreement/{label} n={n}"), AGREEMENT, ok));
        }
    }

    // exact learning bounds for i.i.d. bits
    let model = SignalModel::symmetric_binary(ratio(2, 3))?;
    let d = model.noise_to_signal_ratio()?.0 * inputs.d_scale;
    for n in [10usize, 20, 50, 100, 200] {
        let law = exact_iid_pooled(&model, n);
        let report = theorem2_bounds(n, NoiseToSignal(d));
        let err = Check::at_most(format!("learning-bound/error n={n}"), ERROR_BOUND, rational::to_f64(&law.error()), 1.0 - report.action_bound, 0.0);
        checks.push(if report.is_vacuous() { err.vacuous() } else { err });
        checks.push(Check::at_most(format!("learning-bound/msbe n={n}"), VAR_BOUND, rational::to_f64(&law.msbe), report.var_bound, 0.0));
    }
    for p in [ratio(3, 5), ratio(2, 3), ratio(3, 4)] {
        let m = SignalModel::symmetric_binary(p.clone())?;
        let d = m.noise_to_signal_ratio()?.0 * inputs.d_scale;
        for n in 1..=10 {
            let mo = estimator_moments(&m, n)?;
            checks.push(Check::close(
                format!("learning-bound/estimator p={} n={n}", rational::format_ratio(&p)),
                Y_IDENTITY,
                mo.var_y_minus_s,
                d / (4.0 * n as f64),
                1e-10,
            ));
        }
    }

    // lower-tail bound for unbounded-looking beliefs
    if inputs.trials > 0 {
        let rho = ratio(7, 10);
        for n in [10usize, 40, 160] {
            let s = geometric_tail(n, 4, rho.clone())?;
            let model = s.marginal_model().expect("i.i.d. family");
            let q = qn_bound_for_model(&model, n, &inputs.grid)?;
            let options = McOptions { trials: inputs.trials, seed: super::mix_seed(inputs.seed, n), condition: Some(0) };
            let r = run_monte_carlo_with(&s, &Mode::Pooled, &options)?;
            let qhat = r.error_rate();
            let sigma = super::binomial_stderr(qhat, r.trials);
            checks.push(Check::at_most(format!("lower-tail/q_n geometric_tail(k=4) n={n}"), QN, qhat, q.value, 3.0 * sigma));
        }
    }

    // example invariants
    for n in [3usize, 4] {
        let space = OutcomeSpace::build(&parity(n)?)?;
        let own: Vec<_> = (0..n).map(|u| InformationPartition::own_signal(&space, u)).collect();
        let here = space.profile(0).to_vec();
        let out = run_protocol(&ProtocolKind::PublicBelief.into(), &space, own, &here)?;
        let ok = out.trace.rounds_to_fixed_point == 0 && out.beliefs.0.iter().all(|b| *b == rational::half());
        checks.push(Check::holds(format!("example/parity n={n}"), "parity: beliefs stay at 1/2, nobody refines", ok));
    }
    let tail = binomial_cdf(100, &ratio(2, 3), 50);
    for n in [200usize, 400] {
        let a = analyze_staged(&senate(n, 100, ratio(2, 3))?, &ProtocolKind::PublicAction)?;
        let ok = a.outcome.error() == tail && a.agrees_off_ties();
        checks.push(Check::holds(format!("example/senate n={n}"), "senate: error is the 100-draw binomial tail", ok));
    }
    let cov = uncorrelated_tight(8)?.max_conditional_llr_covariance()?;
    checks.push(Check::at_most("example/uncorrelated_tight n=8 covariance", "Cov(z_u, z_v | S) = 0", cov, 0.0, 1e-12));
    Ok(checks)
}

/// Checks each sweep row against its own bound columns, with a 3 sigma margin.
pub fn verify_sweep(table: &SweepTable) -> Vec<Check> {
    let belief_mode = !matches!(table.mode.as_str(), "public-action");
    let mut checks = Vec::new();
    for row in &table.rows {
        let s = &row.summary;
        if let (Some(b), true) = (row.bounds, belief_mode) {
            let c = Check::at_most(
                format!("sweep/error n={}", s.n),
                ERROR_BOUND,
                1.0 - s.success_rate,
                1.0 - b.action_bound,
                3.0 * s.stderr,
            );
            checks.push(if b.is_vacuous() { c.vacuous() } else { c });
        }
        if let (Some(q), Some(0)) = (row.qn_bound, s.condition) {
            let qhat = s.error_rate();
            checks.push(Check::at_most(format!("sweep/q_n n={}", s.n), QN, qhat, q.value, 3.0 * super::binomial_stderr(qhat, s.trials)));
        }
    }
    checks
}
