//! Laboratory for Bayesian agreement dynamics.
//!
//! Agents observe private signals about a binary state `S`, announce beliefs
//! or actions until nothing new can be learned, and end up agreeing. This
//! crate builds the finite probability models behind such processes, runs the
//! announcement protocols exactly on small populations, and checks the
//! resulting learning bounds exactly or by seeded Monte Carlo on large ones.
//!
//! Module map:
//!
//! * [`signal`] - signal models, log-likelihood ratios, divergences, `D`
//! * [`knowledge`] - outcome spaces, information partitions, common knowledge
//! * [`dynamics`] - announcement protocols and their fixed points
//! * [`bounds`] - estimator `Y`, variance/action bounds, `q_n` bound
//! * [`scenarios`] - the example constructions and parameterized families
//! * [`harness`] - Monte Carlo engine, sweeps, verification reports, output
//! * [`cli`] - the `agreement-lab` command line

pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod knowledge;
pub mod multiset;
pub mod rational;
pub mod scenarios;
pub mod signal;

pub use error::{LabError, Result};
pub use knowledge::{ActionSet, InformationPartition, OutcomeSpace};
pub use rational::Ratio;
pub use scenarios::{build_scenario, Scenario, ScenarioSpec};
pub use signal::{Belief, LlrValue, NoiseToSignal, SignalModel};
