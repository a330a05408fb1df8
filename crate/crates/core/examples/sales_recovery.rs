//! Export sales multiplier and warehouse build-up around the sanctions onset,
//! followed by the cash, debt and default path of the reference enterprise.

use std::path::PathBuf;

use sezsim::sanctions::sales_multiplier;
use sezsim::{parse_scenario, simulate};

fn main() -> sezsim::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference/scenario.toml");
    let s = parse_scenario(&path)?;
    let regime = &s.regimes[0];
    let tr = simulate(
        &s.zone,
        &s.grid,
        &s.schedules,
        &s.regimes,
        &s.planning,
        s.seed,
    )?;
    let e = &tr.enterprises[0];
    println!(" t   multiplier   export sales   warehouse        cash         debt");
    for t in (regime.onset - 2)..=(regime.onset + 13).min(s.grid.t_max()) {
        println!(
            "{t:>2}   {:>10.4}   {:>12.0}   {:>9.0}   {:>9.0}   {:>10.0}",
            sales_multiplier(regime, t),
            e.export_sales[t - 1],
            e.warehouse[t - 1],
            e.cash[t - 1],
            e.debt[t - 1]
        );
    }
    println!(
        "distress from {:?}, technical default at {:?}",
        e.distress_from, e.defaulted_at
    );
    for ev in tr
        .events
        .iter()
        .filter(|ev| ev.kind.to_string() != "emergency_borrowing")
    {
        println!("  period {:>2}: {} ({:.1})", ev.period, ev.kind, ev.value);
    }
    Ok(())
}
