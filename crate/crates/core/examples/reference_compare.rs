//! Baseline against sanctions on the reference fixture, printed as the damage report.
//!
//! `cargo run --example reference_compare [-- <scenario.toml>]`

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
    let results = run_pipeline(&scenario, Mode::Compare)?;
    let report = results.damage.expect("compare mode produces a report");
    print!("{}", report.to_text(scenario.grid.t_max() as f64 / 12.0));
    Ok(())
}
