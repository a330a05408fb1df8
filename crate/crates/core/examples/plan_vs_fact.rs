//! Plan against fact: with no planning error and no sanctions the forecast
//! reproduces the realized state exactly; a sanctions regime opens a gap on
//! the export line, and a constant planning error shifts every line.

use std::path::PathBuf;

use sezsim::dynamics::Epsilon;
use sezsim::{parse_scenario, simulate, Scenario};

fn max_gap(s: &Scenario, with_regime: bool, row: &str) -> sezsim::Result<(f64, f64)> {
    let regimes = if with_regime { &s.regimes[..] } else { &[] };
    let tr = simulate(&s.zone, &s.grid, &s.schedules, regimes, &s.planning, s.seed)?;
    let e = &tr.enterprises[0];
    let plan = e.plan.row(row).expect("row exists");
    let fact = e.realized.row(row).expect("row exists");
    let gaps = plan
        .iter()
        .zip(&fact)
        .skip(s.planning.lag)
        .map(|(p, f)| (p - f).abs());
    let worst = gaps.fold(0.0, f64::max);
    Ok((worst, fact.iter().sum::<f64>() / fact.len() as f64))
}

fn main() -> sezsim::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference/scenario.toml");
    let mut s = parse_scenario(&path)?;
    s.planning.epsilon = Epsilon::default();
    for (label, regime) in [("no sanctions", false), ("sanctions", true)] {
        let (gap, mean) = max_gap(&s, regime, "export_sales")?;
        println!("{label:>13}, eps = 0:   max |plan - fact| on export_sales = {gap:.3} (mean level {mean:.0})");
    }
    s.planning.epsilon.default = 1000.0;
    let (gap, _) = max_gap(&s, false, "payroll")?;
    println!(
        "{:>13}, eps = 1000: max |plan - fact| on payroll = {gap:.3}",
        "no sanctions"
    );
    Ok(())
}
