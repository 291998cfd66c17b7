//! A sweep over population sizes written as CSV to stdout, with the bound
//! columns filled in where they apply.
//!
//!     cargo run --release --example sweep

use std::collections::BTreeMap;

use agreement_lab::bounds::EpsGrid;
use agreement_lab::dynamics::ProtocolKind;
use agreement_lab::harness::{sweep_n, Mode};
use agreement_lab::ScenarioSpec;

fn main() -> agreement_lab::Result<()> {
    let params = BTreeMap::from([("p".to_string(), "3/4".to_string())]);
    let family = ScenarioSpec::from_params("iid_binary", 2, &params, None)?;
    let grid = EpsGrid::default();
    for mode in [Mode::Pooled, Mode::Protocol(ProtocolKind::PublicBelief)] {
        let table = sweep_n(&family, &[2, 4, 8, 12], &mode, 10_000, 42, None, &grid)?;
        println!("# {}", table.mode);
        print!("{}", table.to_csv()?);
    }
    Ok(())
}
