//! Command-line front end: `simulate`, `sweep`, `verify`, `bound`,
//! `scenario list`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification failures,
//! 3 exact-engine budget exceeded.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::bounds::{qn_bound_for_model, theorem2_bounds, EpsGrid};
use crate::dynamics::{run_protocol, Protocol};
use crate::error::{LabError, Result};
use crate::harness::{self, McOptions, Mode, SweepRow, VerifyInputs, RNG_VERSION};
use crate::knowledge::{initial_partitions, OutcomeSpace};
use crate::scenarios::{build_scenario, catalog, ScenarioSpec};
use crate::signal::{NoiseToSignal, SignalModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "agreement-lab", version, about = "Bayesian agreement dynamics: exact and Monte Carlo experiments")]
struct Cli {
    /// JSON config file mirroring the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo run of one scenario under one protocol.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also run the exact protocol once and write its trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// One Monte Carlo row per agent count.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the verification suite.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Scale every noise-to-signal ratio (mutation testing).
        #[arg(long)]
        d_scale: Option<f64>,
    },
    /// Print the learning bounds for given parameters.
    Bound {
        #[command(flatten)]
        run: RunArgs,
        /// Noise-to-signal ratio; taken from the scenario when omitted.
        #[arg(long = "d")]
        d: Option<f64>,
    },
    /// Scenario catalogue.
    Scenario {
        #[command(subcommand)]
        action: ScenarioCommand,
    },
}

#[derive(Debug, Subcommand)]
enum ScenarioCommand {
    List,
}

#[derive(Debug, Args, Default, Clone)]
struct RunArgs {
    #[arg(long)]
    scenario: Option<String>,
    /// Scenario parameter `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// public-belief, public-action, statistic, network or pooled.
    #[arg(long)]
    protocol: Option<String>,
    /// Agent count: `N`, `N1,N2,...` or `log:LO:HI:POINTS`.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// `lo:hi:points`, log-spaced.
    #[arg(long = "eps-grid")]
    eps_grid: Option<String>,
    /// Draw every trial with this state (0 or 1).
    #[arg(long)]
    condition: Option<u8>,
}

/// Config file layout.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scenario: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, serde_json::Value>,
    protocol: Option<String>,
    n: Option<serde_json::Value>,
    trials: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
    eps_grid: Option<String>,
    condition: Option<u8>,
    d_scale: Option<f64>,
    model: Option<SignalModel>,
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
struct Settings {
    scenario: Option<String>,
    params: BTreeMap<String, String>,
    mode: Mode,
    ns: Option<Vec<usize>>,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
    format: String,
    grid: EpsGrid,
    condition: Option<u8>,
    d_scale: f64,
    model: Option<SignalModel>,
}

impl Settings {
    fn merge(file: FileConfig, run: &RunArgs) -> Result<Self> {
        let mut params: BTreeMap<String, String> = file
            .params
            .into_iter()
            .map(|(k, v)| json_scalar(&v).map(|v| (k, v)))
            .collect::<Result<_>>()?;
        for p in &run.params {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("--param expects key=value, got `{p}`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let ns = match (&run.n, &file.n) {
            (Some(text), _) => Some(parse_ns(text)?),
            (None, Some(v)) => Some(parse_ns(&json_ns(v)?)?),
            (None, None) => None,
        };
        let format = run.format.clone().or(file.format).unwrap_or_else(|| "csv".into());
        if format != "csv" && format != "json" {
            return Err(LabError::Config(format!("unknown format `{format}`")));
        }
        let grid = match run.eps_grid.as_deref().or(file.eps_grid.as_deref()) {
            Some(g) => g.parse()?,
            None => EpsGrid::default(),
        };
        Ok(Settings {
            scenario: run.scenario.clone().or(file.scenario),
            params,
            mode: Mode::parse(run.protocol.as_deref().or(file.protocol.as_deref()).unwrap_or("pooled"))?,
            ns,
            trials: run.trials.or(file.trials).unwrap_or(10_000),
            seed: run.seed.or(file.seed).unwrap_or(0),
            out: run.out.clone().or(file.out),
            format,
            grid,
            condition: run.condition.or(file.condition),
            d_scale: file.d_scale.unwrap_or(1.0),
            model: file.model,
        })
    }

    fn family(&self, n: usize) -> Result<ScenarioSpec> {
        let name = self.scenario.as_deref().ok_or_else(|| LabError::Config("--scenario is required".into()))?;
        ScenarioSpec::from_params(name, n, &self.params, self.model.clone())
    }

    fn single_n(&self) -> Result<usize> {
        match self.ns.as_deref() {
            Some([n]) => Ok(*n),
            Some(_) => Err(LabError::Config("this command takes a single --n".into())),
            None => Err(LabError::Config("--n is required".into())),
        }
    }
}

fn json_scalar(v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(LabError::Config(format!("parameter value {other} must be a string or number"))),
    }
}

fn json_ns(v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::Array(items) => Ok(items.iter().map(json_scalar).collect::<Result<Vec<_>>>()?.join(",")),
        other => json_scalar(other),
    }
}

/// `N`, `N1,N2,...` or `log:LO:HI:POINTS` (rounded, deduplicated).
pub fn parse_ns(text: &str) -> Result<Vec<usize>> {
    let bad = || LabError::Config(format!("cannot parse agent counts `{text}`"));
    if let Some(rest) = text.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let points: usize = parts[2].parse().map_err(|_| bad())?;
        if !(lo >= 1.0 && hi >= lo) || points < 2 {
            return Err(bad());
        }
        let mut ns: Vec<usize> = (0..points)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64).exp().round() as usize)
            .collect();
        ns.dedup();
        return Ok(ns);
    }
    text.split(',').map(|s| s.trim().parse::<usize>().map_err(|_| bad())).collect()
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn emit(settings: &Settings, text: &str) -> Result<()> {
    match &settings.out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(settings: &Settings, trace: Option<&Path>) -> Result<i32> {
    let n = settings.single_n()?;
    let scenario = build_scenario(&settings.family(n)?)?;
    let options = McOptions { trials: settings.trials, seed: settings.seed, condition: settings.condition };
    let row = SweepRow::evaluate(&scenario, &settings.mode, &options, &settings.grid)?;
    if let Some(path) = trace {
        write_trace(settings, &scenario, path)?;
    }
    let doc = serde_json::json!({ "rng": RNG_VERSION, "row": &row });
    let rows = std::slice::from_ref(&row);
    match &settings.out {
        Some(path) => harness::write_rows(path, &settings.format, rows, &doc)?,
        None if settings.format == "json" => print!("{}", serde_json::to_string_pretty(&doc)? + "\n"),
        None => print!("{}", harness::rows_to_csv(rows)?),
    }
    Ok(EXIT_OK)
}

/// One exact protocol run at a profile drawn from the seed.
fn write_trace(settings: &Settings, scenario: &crate::scenarios::Scenario, path: &Path) -> Result<()> {
    let kind = match &settings.mode {
        Mode::Pooled => return Err(LabError::Config("--trace needs an announcement protocol".into())),
        Mode::Protocol(crate::dynamics::ProtocolKind::NetworkBelief(_)) => {
            crate::dynamics::ProtocolKind::NetworkBelief(crate::dynamics::Digraph::ring(scenario.n()))
        }
        Mode::Protocol(k) => k.clone(),
    };
    let space = OutcomeSpace::build(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let state = settings.condition.unwrap_or_else(|| rng.random::<bool>() as u8);
    let profile = scenario.prepare()?.sample_profile(state, &mut rng);
    let protocol = Protocol::new(kind).with_speakers(scenario.speakers());
    let out = run_protocol(&protocol, &space, initial_partitions(&space, scenario), &profile)?;
    Ok(fs::write(path, out.trace.to_csv()?)?)
}

fn sweep(settings: &Settings) -> Result<i32> {
    let ns = settings.ns.clone().ok_or_else(|| LabError::Config("--n is required".into()))?;
    let family = settings.family(ns[0])?;
    let table = harness::sweep_n(&family, &ns, &settings.mode, settings.trials, settings.seed, settings.condition, &settings.grid)?;
    match &settings.out {
        Some(path) => table.write(path, &settings.format)?,
        None if settings.format == "json" => print!("{}", table.to_json()?),
        None => print!("{}", table.to_csv()?),
    }
    Ok(EXIT_OK)
}

fn verify(settings: &Settings, d_scale: Option<f64>) -> Result<i32> {
    let sweep = match (&settings.scenario, &settings.ns) {
        (Some(_), Some(ns)) => {
            let family = settings.family(ns[0])?;
            Some(harness::sweep_n(&family, ns, &settings.mode, settings.trials, settings.seed, settings.condition, &settings.grid)?)
        }
        _ => None,
    };
    let inputs = VerifyInputs {
        d_scale: d_scale.unwrap_or(settings.d_scale),
        trials: settings.trials.min(1_000_000),
        seed: settings.seed,
        grid: settings.grid,
        sweep,
    };
    let report = harness::verify_report(&inputs)?;
    let text = if settings.format == "json" { report.to_json()? } else { report.to_text() };
    emit(settings, &text)?;
    Ok(if report.failures() > 0 { EXIT_VERIFY } else { EXIT_OK })
}

fn bound(settings: &Settings, d: Option<f64>) -> Result<i32> {
    let ns = settings.ns.clone().ok_or_else(|| LabError::Config("--n is required".into()))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["n", "D", "var_bound", "action_bound", "vacuous", "qn_bound", "qn_eps"])?;
    let mut docs = Vec::new();
    for n in ns {
        let scenario = match &settings.scenario {
            Some(_) => Some(build_scenario(&settings.family(n)?)?),
            None => None,
        };
        let model = scenario.as_ref().and_then(|s| s.marginal_model());
        let d = match (d, scenario.as_ref()) {
            (Some(d), _) => d,
            (None, Some(s)) => harness_noise(s)?,
            (None, None) => return Err(LabError::Config("bound needs --d or --scenario".into())),
        };
        if !(d > 0.0) {
            return Err(LabError::Config("D must be positive".into()));
        }
        let report = theorem2_bounds(n, NoiseToSignal(d));
        let qn = match &model {
            Some(m) => match qn_bound_for_model(m, n, &settings.grid) {
                Ok(q) => Some(q),
                Err(LabError::BoundedBeliefs) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            n.to_string(),
            d.to_string(),
            report.var_bound.to_string(),
            report.action_bound.to_string(),
            report.is_vacuous().to_string(),
            opt(qn.map(|q| q.value)),
            opt(qn.map(|q| q.eps)),
        ])?;
        docs.push(serde_json::json!({ "bounds": report, "vacuous": report.is_vacuous(), "qn_bound": qn }));
    }
    let text = if settings.format == "json" {
        serde_json::to_string_pretty(&docs)? + "\n"
    } else {
        String::from_utf8(w.into_inner().map_err(|e| LabError::Io(e.to_string()))?).expect("utf-8")
    };
    emit(settings, &text)?;
    Ok(EXIT_OK)
}

fn harness_noise(s: &crate::scenarios::Scenario) -> Result<f64> {
    harness::noise_to_signal(s)
        .ok_or_else(|| LabError::Config(format!("no noise-to-signal ratio for {}; pass --d", s.name())))
}

fn scenario_list() -> i32 {
    for f in catalog() {
        println!("{:<20} {:<45} {}", f.name, f.params, f.summary);
    }
    EXIT_OK
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::TooLarge { .. } => EXIT_BUDGET,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Scenario { action: ScenarioCommand::List } => Ok(scenario_list()),
        Command::Simulate { run, trace } => simulate(&Settings::merge(file, &run)?, trace.as_deref()),
        Command::Sweep { run } => sweep(&Settings::merge(file, &run)?),
        Command::Verify { run, d_scale } => verify(&Settings::merge(file, &run)?, d_scale),
        Command::Bound { run, d } => bound(&Settings::merge(file, &run)?, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agent_count_syntax() {
        assert_eq!(parse_ns("12").unwrap(), vec![12]);
        assert_eq!(parse_ns("8, 16,32").unwrap(), vec![8, 16, 32]);
        let ns = parse_ns("log:10:1000:5").unwrap();
        assert_eq!(ns, vec![10, 32, 100, 316, 1000]);
        assert!(parse_ns("log:10:1000").is_err());
        assert!(parse_ns("ten").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["agreement-lab", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["agreement-lab", "sweep", "--scenario", "iid_binary", "--param", "p=2/3"]), EXIT_USAGE);
        assert_eq!(run(["agreement-lab", "--help"]), EXIT_OK);
    }

    #[test]
    fn budget_exit_code() {
        let code = run([
            "agreement-lab", "simulate", "--scenario", "iid_binary", "--param", "p=2/3", "--n", "40", "--protocol",
            "public-belief", "--trials", "10",
        ]);
        assert_eq!(code, EXIT_BUDGET);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"scenario": "iid_binary", "params": {"p": "2/3"}, "n": [5, 10], "trials": 50, "seed": 3}"#).unwrap();
        let file = load_config(Some(&cfg)).unwrap();
        let run = RunArgs { trials: Some(70), params: vec!["p=3/4".into()], ..Default::default() };
        let s = Settings::merge(file, &run).unwrap();
        assert_eq!(s.trials, 70);
        assert_eq!(s.seed, 3);
        assert_eq!(s.ns, Some(vec![5, 10]));
        assert_eq!(s.params["p"], "3/4");
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"scenaro": "x"}"#).unwrap();
        assert!(load_config(Some(&bad)).is_err());
    }
}
