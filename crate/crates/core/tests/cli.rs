use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agreement-lab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn scenario_list_names_every_family() {
    let o = lab(&["scenario", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["parity", "uncorrelated_tight", "two_bit", "senate", "iid_binary", "geometric_tail"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(lab(&["nonsense"]).status.code(), Some(1));
    assert_eq!(lab(&["sweep", "--scenario", "nope", "--n", "4"]).status.code(), Some(1));
    assert_eq!(lab(&["simulate", "--scenario", "uncorrelated_tight", "--n", "6"]).status.code(), Some(1));
    let big = lab(&["simulate", "--scenario", "iid_binary", "--param", "p=2/3", "--n", "40", "--protocol", "public-action", "--trials", "5"]);
    assert_eq!(big.status.code(), Some(3));
    assert_eq!(lab(&["verify", "--trials", "0", "--d-scale", "0.5"]).status.code(), Some(2));
    assert_eq!(lab(&["verify", "--trials", "500"]).status.code(), Some(0));
}

#[test]
fn bound_prints_raw_vacuous_values() {
    let o = lab(&["bound", "--d", "8", "--n", "8,100"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,D,var_bound,action_bound,vacuous,qn_bound,qn_eps");
    assert!(lines[1].starts_with("8,8,0.5,-1,true"));
    assert!(lines[2].starts_with("100,8,0.07407407407407407,0.7037037037037037,false"));
}

#[test]
fn simulate_json_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = lab(&[
        "simulate", "--scenario", "iid_binary", "--param", "p=2/3", "--n", "3", "--protocol", "public-belief",
        "--trials", "200", "--seed", "4", "--format", "json", "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["row"]["summary"]["trials"], 200);
    assert!(doc["rng"].as_str().unwrap().contains("ChaCha8"));
    let t = std::fs::read_to_string(trace).unwrap();
    assert!(t.starts_with("round,agent,announced,block_count\n"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"scenario": "senate", "params": {"senate_size": 3}, "protocol": "public-action", "n": [5, 6], "trials": 300, "seed": 1}"#,
    )
    .unwrap();
    let o = lab(&["--config", cfg.to_str().unwrap(), "sweep", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("100")));
}

#[test]
fn explicit_model_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    std::fs::write(
        &cfg,
        r#"{"scenario": "iid", "n": 4, "model": {"alphabet": ["a", "b", "c"], "mu0": ["1/2", "1/3", "1/6"], "mu1": ["1/6", "1/3", "1/2"]}}"#,
    )
    .unwrap();
    let o = lab(&["--config", cfg.to_str().unwrap(), "simulate", "--trials", "1000", "--protocol", "public-belief"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
