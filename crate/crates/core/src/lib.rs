//! Reputation-aware edge offloading: topology, workload, performance models,
//! an emulated reputation ledger, the decision engines and a seeded
//! discrete-event simulator with experiment reporting.

// `!(x >= 0.0)` style checks are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decision;
pub mod error;
pub mod experiment;
pub mod infra;
pub mod ledger;
pub mod perf;
pub mod rng;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
