//! File formats and command-line front end for the admittance simulator:
//! TOML scenarios, CSV traces, the bundled scenario corpus and trace
//! metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod csv_trace;
pub mod metrics;
pub mod scenario_file;
