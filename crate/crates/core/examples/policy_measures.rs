//! One-at-a-time evaluation of the nine control measures and the configured
//! disturbance channels, each scaled by the scenario's relative delta.

use std::path::PathBuf;

use sezsim::{parse_scenario, run_pipeline, Mode};

fn main() -> sezsim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference/scenario.toml")
        });
    let scenario = parse_scenario(&path)?;
    let results = run_pipeline(&scenario, Mode::Measures)?;
    print!("{}", sezsim::policy::measures_text(&results.measures));
    Ok(())
}
