//! Writes the correlation surface and indicator series of the sanctioned
//! reference run as plot-ready CSV grids.
//!
//! `cargo run --example export_surface [-- <output dir>]`

use std::path::PathBuf;

use sezsim::adaptometry::export_surface;
use sezsim::io::{fmt_f64, write_csv};
use sezsim::parse_scenario;
use sezsim::pipeline::run_once;

fn main() -> sezsim::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sezsim-surface"));
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference/scenario.toml");
    let s = parse_scenario(&path)?;
    for (label, regimes) in [("baseline", false), ("sanctions", true)] {
        let run = run_once(&s, label, regimes)?;
        let (r, g) = &run.analyses[0];
        let rows = export_surface(r);
        write_csv(
            &out.join(format!("{label}_surface.csv")),
            ["t", "s", "r"],
            rows.iter()
                .map(|(t, u, v)| [t.to_string(), u.to_string(), fmt_f64(*v)]),
        )?;
        write_csv(
            &out.join(format!("{label}_indicator.csv")),
            ["t", "G"],
            g.series
                .iter()
                .enumerate()
                .map(|(i, v)| [(i + 1).to_string(), fmt_f64(*v)]),
        )?;
        println!(
            "{label}: {} surface rows, G = {:.2}, breaks {:?}",
            rows.len(),
            g.scalar,
            g.break_periods
        );
    }
    println!("written to {}", out.display());
    Ok(())
}
