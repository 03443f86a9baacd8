//! Monte-Carlo quasi-static time-series simulation of how stochastic PEV
//! charging wears distribution assets, and what that wear costs.
//!
//! The pipeline per scenario is: sample charging events, compose per-node
//! load profiles, then step a radial power flow, the transformer thermal
//! model and the regulator tap controller through the day. Scenario outputs
//! are averaged into expected loss-of-life, lifetimes and cost curves.
//!
//! Scenarios run on a rayon pool when the `parallel` feature is enabled
//! (the default) and sequentially otherwise. Results are bit-identical
//! either way.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod feeder;
pub mod format;
pub mod mcs;
pub mod pev;
pub mod regulator;
pub mod report;
pub mod tco;
pub mod thermal;

pub use error::{Error, Result};
pub use feeder::{FeederModel, PowerFlowSolution};
pub use mcs::{AggregateResult, Execution, RunConfig, ScenarioResult};
