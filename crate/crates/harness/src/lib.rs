//! Command-line experiments on top of the `capillary` library: configuration, sweep
//! orchestration, CSV/JSON tables and a run manifest per invocation.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod list;
pub mod manifest;
pub mod output;
pub mod table;

pub use config::{parse_config, resolve, RunConfig};
pub use error::HarnessError;
pub use list::parse_list;
pub use table::read_profile_csv;
