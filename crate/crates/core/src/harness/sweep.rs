use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{run_monte_carlo_with, McOptions, Mode, TrialSummary, RNG_VERSION};
use crate::bounds::{qn_bound_for_model, theorem2_bounds, BoundReport, EpsGrid, QnBound};
use crate::error::{LabError, Result};
use crate::scenarios::{build_scenario, Scenario, ScenarioSpec, Structure};
use crate::signal::NoiseToSignal;

pub const CSV_HEADER: [&str; 13] = [
    "n",
    "trials",
    "successes",
    "ties",
    "failures",
    "success_rate",
    "stderr",
    "msbe",
    "D",
    "var_bound",
    "action_bound",
    "qn_bound",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub summary: TrialSummary,
    pub bounds: Option<BoundReport>,
    pub qn_bound: Option<QnBound>,
}

impl SweepRow {
    /// Tallies a scenario and attaches the bounds that apply to its signals.
    pub fn evaluate(scenario: &Scenario, mode: &Mode, options: &McOptions, grid: &EpsGrid) -> Result<Self> {
        let summary = run_monte_carlo_with(scenario, mode, options)?;
        let n = scenario.n();
        let bounds = noise_to_signal(scenario).map(|d| theorem2_bounds(n, NoiseToSignal(d)));
        let qn_bound = iid_model(scenario).and_then(|m| qn_bound_for_model(&m, n, grid).ok());
        Ok(SweepRow { summary, bounds, qn_bound })
    }

    fn csv_record(&self) -> Vec<String> {
        let s = &self.summary;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            s.n.to_string(),
            s.trials.to_string(),
            s.successes.to_string(),
            s.ties.to_string(),
            s.failures.to_string(),
            s.success_rate.to_string(),
            s.stderr.to_string(),
            s.msbe.to_string(),
            opt(self.bounds.map(|b| b.d)),
            opt(self.bounds.map(|b| b.var_bound)),
            opt(self.bounds.map(|b| b.action_bound)),
            opt(self.qn_bound.map(|q| q.value)),
            s.seed.to_string(),
        ]
    }
}

/// `D` of the per-agent signal law, for structures the learning bounds cover:
/// i.i.d. signals and signals verified to be conditionally uncorrelated.
pub fn noise_to_signal(scenario: &Scenario) -> Option<f64> {
    let covered = scenario.claims_uncorrelated() || iid_model(scenario).is_some();
    if !covered {
        return None;
    }
    scenario.marginal_model()?.noise_to_signal_ratio().ok().map(|d| d.0)
}

fn iid_model(scenario: &Scenario) -> Option<crate::signal::SignalModel> {
    match scenario.structure() {
        Structure::Iid(m) => Some(m.clone()),
        Structure::Staged { base, .. } => match base.as_ref() {
            Structure::Iid(m) => Some(m.clone()),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub family: String,
    pub mode: String,
    pub seed: u64,
    pub rng: String,
    pub rows: Vec<SweepRow>,
}

/// Seed of the row for `n`, derived from the sweep seed with splitmix64.
pub fn mix_seed(seed: u64, n: usize) -> u64 {
    let mut z = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One Monte Carlo row per agent count, sorted by `n`, each on its own seed.
pub fn sweep_n(
    family: &ScenarioSpec,
    ns: &[usize],
    mode: &Mode,
    trials: u64,
    seed: u64,
    condition: Option<u8>,
    grid: &EpsGrid,
) -> Result<SweepTable> {
    if ns.is_empty() {
        return Err(LabError::Parameter("sweep needs at least one n".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let scenario = build_scenario(&family.with_n(n))?;
        let options = McOptions { trials, seed: mix_seed(seed, n), condition };
        rows.push(SweepRow::evaluate(&scenario, mode, &options, grid)?);
    }
    Ok(SweepTable { family: family.family().to_string(), mode: mode.name(), seed, rng: RNG_VERSION.into(), rows })
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes CSV (with a `.meta.json` sidecar naming the generator) or JSON.
    pub fn write(&self, path: &Path, format: &str) -> Result<()> {
        write_rows(path, format, &self.rows, self)
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.csv_record())?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes rows as CSV plus sidecar, or `whole` as JSON.
pub fn write_rows<T: Serialize>(path: &Path, format: &str, rows: &[SweepRow], whole: &T) -> Result<()> {
    match format {
        "csv" => {
            fs::write(path, rows_to_csv(rows)?)?;
            let meta = serde_json::json!({ "rng": RNG_VERSION, "columns": CSV_HEADER });
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".meta.json");
            fs::write(sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
            Ok(())
        }
        "json" => {
            fs::write(path, serde_json::to_string_pretty(whole)? + "\n")?;
            Ok(())
        }
        other => Err(LabError::Parameter(format!("unknown format `{other}`"))),
    }
}
