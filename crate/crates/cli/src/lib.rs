//! Scenario-driven front end for the `adiabat` command.

pub mod commands;
pub mod scenario;

pub use commands::{fmt_num, Outcome};
pub use scenario::{load, parse, Scenario};
