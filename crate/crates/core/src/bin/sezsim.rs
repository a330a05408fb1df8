use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sezsim::pipeline::stored_report;
use sezsim::{parse_scenario, run_pipeline, write_outputs, Error, Mode};

#[derive(Parser)]
#[command(name = "sezsim", version, about = "Special economic zone simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Baseline,
    Sanctions,
    Compare,
    Measures,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::Sanctions => Mode::Sanctions,
            ModeArg::Compare => Mode::Compare,
            ModeArg::Measures => Mode::Measures,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario without running it.
    Validate {
        /// Scenario TOML file.
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run a scenario and write all outputs.
    Run {
        /// Scenario TOML file.
        #[arg(long)]
        scenario: PathBuf,
        /// Which runs to perform.
        #[arg(long, value_enum, default_value = "compare")]
        mode: ModeArg,
        /// Output directory; defaults to `output_dir` in the scenario.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed overriding the one in the scenario.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the stored reports of an output directory after checking its manifest.
    Report {
        /// Output directory written by `run`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> sezsim::Result<()> {
    match cli.command {
        Command::Validate { scenario } => {
            let s = parse_scenario(&scenario)?;
            println!(
                "ok: zone `{}`, {} enterprise(s), {} periods, {} regime(s)",
                s.zone.id,
                s.zone.enterprises.len(),
                s.grid.t_max(),
                s.regimes.len()
            );
        }
        Command::Run {
            scenario,
            mode,
            out,
            seed,
        } => {
            let mut s = parse_scenario(&scenario)?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let dir = out.or_else(|| s.output_dir.clone()).ok_or_else(|| {
                Error::Invalid("no output directory: pass --out or set output_dir".into())
            })?;
            let results = run_pipeline(&s, mode.into())?;
            let manifest = write_outputs(&results, &s, &dir)?;
            if let Some(d) = &results.damage {
                print!("{}", d.to_text(s.grid.t_max() as f64 / 12.0));
            }
            if !results.measures.is_empty() {
                print!("{}", sezsim::policy::measures_text(&results.measures));
            }
            println!(
                "wrote {} files to {}",
                manifest.entries.len() + 1,
                dir.display()
            );
        }
        Command::Report { out } => print!("{}", stored_report(&out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(e.exit_code())
        }
    }
}
