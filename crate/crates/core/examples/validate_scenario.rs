//! Loads a scenario and lists every validation problem at once, or the
//! resolved defaults when it is valid.

use std::path::PathBuf;

use sezsim::{parse_scenario, Error};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference/scenario.toml")
        });
    match parse_scenario(&path) {
        Ok(s) => {
            println!(
                "zone `{}`: {} enterprise(s), {} periods, seed {}",
                s.zone.id,
                s.zone.enterprises.len(),
                s.grid.t_max(),
                s.seed
            );
            for r in &s.regimes {
                println!(
                    "regime: onset {}, severity {}, premium {}, horizon {}",
                    r.onset, r.severity, r.borrow_premium, r.default_horizon
                );
            }
            println!(
                "adaptometry: {} with threshold {}",
                s.adaptometry.variant, s.adaptometry.drop_threshold
            );
        }
        Err(Error::Validation(report)) => {
            eprintln!("{report}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code().into());
        }
    }
}
