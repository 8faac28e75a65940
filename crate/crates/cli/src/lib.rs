//! Recipe parsing, experiment execution and figure data behind the `sphlab` binary.

pub mod config;
pub mod plot;
pub mod run;
