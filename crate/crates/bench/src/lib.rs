//! Shared fixtures for the criterion benchmarks under `benches/`.

use std::path::PathBuf;

use chansense::{load_scenario, ScenarioConfig};

/// Loads one of the scenario files shipped in the workspace `scenarios/` directory.
pub fn shipped_scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
