//! Scenario files bundled into the binary.

use admittance_core::sim::Scenario;

use crate::scenario_file::{parse_scenario_str, ScenarioError};

pub const NAMES: [&str; 4] = [
    "fig1_unstable_nominal",
    "fig2_detection",
    "fig3_tank_vs_conservative",
    "fig5_constant_ratio",
];

const SOURCES: [&str; 4] = [
    include_str!("../scenarios/fig1_unstable_nominal.toml"),
    include_str!("../scenarios/fig2_detection.toml"),
    include_str!("../scenarios/fig3_tank_vs_conservative.toml"),
    include_str!("../scenarios/fig5_constant_ratio.toml"),
];

/// Full name of a bundled scenario. Accepts the full name or its `figN`
/// prefix.
pub fn resolve(name: &str) -> Option<&'static str> {
    NAMES
        .iter()
        .copied()
        .find(|full| *full == name || full.split('_').next() == Some(name))
}

/// TOML text of a bundled scenario.
pub fn source(name: &str) -> Option<&'static str> {
    let full = resolve(name)?;
    NAMES.iter().position(|n| *n == full).map(|i| SOURCES[i])
}

/// Parsed bundled scenario.
pub fn load(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    source(name).map(parse_scenario_str)
}
