//! End-to-end runs and their file outputs.
//!
//! Output tree of `write_outputs`:
//!
//! ```text
//! manifest.csv                 path,bytes,sha256 of every other file
//! scenario/                    resolved scenario and side-files
//! baseline/ | sanctions/
//!     zone_grp.csv             t,grp (thousand rubles)
//!     events.csv               period,enterprise,event,value
//!     run_summary.csv          key,value
//!     indicator_summary.csv    enterprise,variant,G,break_periods
//!     <enterprise>/trajectory.csv, plan.csv, observations.csv,
//!                  accounts.csv, surface.csv (t,s,r), indicator.csv (t,G)
//! damage_report.csv, damage_report.txt          (compare)
//! measures.csv, measures.txt                    (measures)
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::adaptometry::{analyze, export_surface, CorrelationMatrix, IndicatorResult};
use crate::dynamics::{simulate, Trajectory};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_records, write_csv, write_labeled_matrix};
use crate::model::{Control, ValidationReport};
use crate::policy::{
    damage_assessment, disturbance_sensitivity, evaluate_measure, join, measures_text, to_billions,
    DamageReport, MeasureEffect,
};
use crate::scenario::{write_scenario, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Baseline,
    Sanctions,
    Compare,
    Measures,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "sanctions" => Ok(Mode::Sanctions),
            "compare" => Ok(Mode::Compare),
            "measures" => Ok(Mode::Measures),
            other => Err(Error::Invalid(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Sanctions => "sanctions",
            Mode::Compare => "compare",
            Mode::Measures => "measures",
        })
    }
}

/// One simulated run with the adaptometry of each enterprise.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub label: String,
    pub trajectory: Trajectory,
    pub analyses: Vec<(CorrelationMatrix, IndicatorResult)>,
}

impl RunOutput {
    pub fn indicators(&self) -> Vec<IndicatorResult> {
        self.analyses.iter().map(|(_, g)| g.clone()).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineResults {
    pub runs: Vec<RunOutput>,
    pub damage: Option<DamageReport>,
    pub measures: Vec<MeasureEffect>,
}

/// Simulate the scenario with or without its regimes and analyse every enterprise.
pub fn run_once(scenario: &Scenario, label: &str, with_regimes: bool) -> Result<RunOutput> {
    let regimes = if with_regimes {
        &scenario.regimes[..]
    } else {
        &[]
    };
    let trajectory = simulate(
        &scenario.zone,
        &scenario.grid,
        &scenario.schedules,
        regimes,
        &scenario.planning,
        scenario.seed,
    )?;
    let analyses = scenario
        .zone
        .enterprises
        .iter()
        .map(|e| analyze(&trajectory, &e.id, &scenario.adaptometry))
        .collect::<Result<_>>()?;
    Ok(RunOutput {
        label: label.to_string(),
        trajectory,
        analyses,
    })
}

fn require_regimes(scenario: &Scenario, mode: Mode) -> Result<()> {
    if scenario.regimes.is_empty() {
        let mut r = ValidationReport::default();
        r.push(
            "regime",
            format!("mode `{mode}` needs at least one [[regime]] block"),
        );
        return Err(Error::Validation(r));
    }
    Ok(())
}

pub fn run_pipeline(scenario: &Scenario, mode: Mode) -> Result<PipelineResults> {
    let mut out = PipelineResults::default();
    match mode {
        Mode::Baseline => out.runs.push(run_once(scenario, "baseline", false)?),
        Mode::Sanctions => {
            require_regimes(scenario, mode)?;
            out.runs.push(run_once(scenario, "sanctions", true)?);
        }
        Mode::Compare => {
            require_regimes(scenario, mode)?;
            let base = run_once(scenario, "baseline", false)?;
            let hit = run_once(scenario, "sanctions", true)?;
            out.damage = Some(damage_assessment(
                &base.trajectory,
                &hit.trajectory,
                &base.indicators(),
                &hit.indicators(),
            )?);
            out.runs.push(base);
            out.runs.push(hit);
        }
        Mode::Measures => {
            let s = scenario;
            for c in Control::ALL {
                out.measures.push(evaluate_measure(
                    &s.zone,
                    &s.grid,
                    &s.schedules,
                    c,
                    s.measures.delta,
                    &s.planning,
                    s.seed,
                )?);
            }
            for &d in &s.measures.disturbances {
                out.measures.push(disturbance_sensitivity(
                    &s.zone,
                    &s.grid,
                    &s.schedules,
                    d,
                    s.measures.delta,
                    &s.planning,
                    s.seed,
                )?);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

/// Every output file with its content checksum, sorted by path.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.csv";

fn hash_file(path: &Path) -> Result<(u64, String)> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((data.len() as u64, hex::encode(Sha256::digest(&data))))
}

fn rel_string(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

impl Manifest {
    fn build(dir: &Path, files: &[PathBuf]) -> Result<Self> {
        let mut entries = files
            .iter()
            .map(|rel| {
                let (bytes, sha256) = hash_file(&dir.join(rel))?;
                Ok(ManifestEntry {
                    path: rel.clone(),
                    bytes,
                    sha256,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        entries.dedup_by(|a, b| a.path == b.path);
        Ok(Self { entries })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_csv(
            &dir.join(MANIFEST_FILE),
            ["path", "bytes", "sha256"],
            self.entries
                .iter()
                .map(|e| vec![rel_string(&e.path), e.bytes.to_string(), e.sha256.clone()]),
        )
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let (_, records) = read_records(&path)?;
        let entries = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if r.len() != 3 {
                    return Err(Error::parse(
                        &path,
                        format!("line {}: expected 3 cells", i + 2),
                    ));
                }
                Ok(ManifestEntry {
                    path: PathBuf::from(&r[0]),
                    bytes: r[1].parse().map_err(|_| {
                        Error::parse(&path, format!("line {}: bad byte count", i + 2))
                    })?,
                    sha256: r[2].to_string(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    pub fn get(&self, path: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| rel_string(&e.path) == path)
    }
}

/// Re-hash every manifest entry against the files on disk.
pub fn verify_manifest(dir: &Path) -> Result<Manifest> {
    let manifest = Manifest::read(dir)?;
    for e in &manifest.entries {
        let (bytes, sha) = hash_file(&dir.join(&e.path))?;
        if bytes != e.bytes || sha != e.sha256 {
            return Err(Error::Checksum(e.path.clone()));
        }
    }
    Ok(manifest)
}

fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn period_labels(t_max: usize) -> Vec<String> {
    (1..=t_max).map(|t| t.to_string()).collect()
}

fn write_run(run: &RunOutput, root: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let rel_dir = PathBuf::from(&run.label);
    let dir = root.join(&rel_dir);
    let tr = &run.trajectory;
    let t_max = tr.grid.t_max();
    let mut put = |rel: PathBuf| files.push(rel_dir.join(rel));

    write_csv(
        &dir.join("zone_grp.csv"),
        ["t", "grp"],
        tr.zone_grp
            .iter()
            .enumerate()
            .map(|(i, g)| [(i + 1).to_string(), fmt_f64(*g)]),
    )?;
    put("zone_grp.csv".into());

    write_csv(
        &dir.join("events.csv"),
        ["period", "enterprise", "event", "value"],
        tr.events.iter().map(|e| {
            [
                e.period.to_string(),
                e.enterprise.clone(),
                e.kind.to_string(),
                fmt_f64(e.value),
            ]
        }),
    )?;
    put("events.csv".into());

    let mut summary = vec![
        ["zone".to_string(), tr.zone_id.clone()],
        ["periods".into(), t_max.to_string()],
        ["seed".into(), tr.seed.to_string()],
        ["planning_criterion".into(), fmt_f64(tr.planning_criterion)],
        [
            "cumulative_grp_bn".into(),
            fmt_f64(to_billions(tr.zone_grp.iter().sum())),
        ],
    ];
    for e in &tr.enterprises {
        summary.push([
            format!("defaulted_at.{}", e.enterprise),
            e.defaulted_at.map_or(String::new(), |t| t.to_string()),
        ]);
    }
    write_csv(&dir.join("run_summary.csv"), ["key", "value"], summary)?;
    put("run_summary.csv".into());

    write_csv(
        &dir.join("indicator_summary.csv"),
        ["enterprise", "variant", "G", "break_periods"],
        run.analyses.iter().map(|(_, g)| {
            [
                g.enterprise.clone(),
                g.variant.to_string(),
                fmt_f64(g.scalar),
                join(&g.break_periods),
            ]
        }),
    )?;
    put("indicator_summary.csv".into());

    let periods = period_labels(t_max);
    for (e, (r, g)) in tr.enterprises.iter().zip(&run.analyses) {
        let sub = PathBuf::from(safe_name(&e.enterprise));
        let edir = dir.join(&sub);
        write_labeled_matrix(
            &edir.join("trajectory.csv"),
            "parameter",
            e.realized.names(),
            &periods,
            e.realized.values(),
        )?;
        write_labeled_matrix(
            &edir.join("plan.csv"),
            "parameter",
            e.plan.names(),
            &periods,
            e.plan.values(),
        )?;
        write_labeled_matrix(
            &edir.join("observations.csv"),
            "observation",
            &e.observation_names,
            &periods,
            &e.observations,
        )?;
        write_csv(
            &edir.join("accounts.csv"),
            [
                "t",
                "cash",
                "debt",
                "warehouse",
                "export_production",
                "export_sales",
            ],
            (0..t_max).map(|i| {
                [
                    (i + 1).to_string(),
                    fmt_f64(e.cash[i]),
                    fmt_f64(e.debt[i]),
                    fmt_f64(e.warehouse[i]),
                    fmt_f64(e.export_production[i]),
                    fmt_f64(e.export_sales[i]),
                ]
            }),
        )?;
        write_csv(
            &edir.join("surface.csv"),
            ["t", "s", "r"],
            export_surface(r)
                .into_iter()
                .map(|(t, s, v)| [t.to_string(), s.to_string(), fmt_f64(v)]),
        )?;
        write_csv(
            &edir.join("indicator.csv"),
            ["t", "G"],
            g.series
                .iter()
                .enumerate()
                .map(|(i, v)| [(i + 1).to_string(), fmt_f64(*v)]),
        )?;
        for f in [
            "trajectory.csv",
            "plan.csv",
            "observations.csv",
            "accounts.csv",
            "surface.csv",
            "indicator.csv",
        ] {
            put(sub.join(f));
        }
    }
    Ok(())
}

fn write_damage(
    report: &DamageReport,
    years: f64,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut rows: Vec<[String; 3]> = vec![
        [
            "baseline_grp_bn".into(),
            String::new(),
            fmt_f64(report.baseline_grp_bn),
        ],
        [
            "sanctioned_grp_bn".into(),
            String::new(),
            fmt_f64(report.sanctioned_grp_bn),
        ],
        ["loss_pct".into(), String::new(), fmt_f64(report.loss_pct)],
    ];
    for g in &report.indicators {
        rows.push([
            "g_baseline".into(),
            g.enterprise.clone(),
            fmt_f64(g.baseline),
        ]);
        rows.push([
            "g_sanctioned".into(),
            g.enterprise.clone(),
            fmt_f64(g.sanctioned),
        ]);
        rows.push([
            "g_drop_pct".into(),
            g.enterprise.clone(),
            fmt_f64(g.drop_pct),
        ]);
        for &b in &g.sanctioned_breaks {
            rows.push(["break_period".into(), g.enterprise.clone(), b.to_string()]);
        }
    }
    for (e, t) in &report.distress {
        rows.push(["distress_period".into(), e.clone(), t.to_string()]);
    }
    for (e, t) in &report.defaults {
        rows.push(["default_period".into(), e.clone(), t.to_string()]);
    }
    write_csv(
        &dir.join("damage_report.csv"),
        ["metric", "enterprise", "value"],
        rows,
    )?;
    let txt = dir.join("damage_report.txt");
    fs::write(&txt, report.to_text(years)).map_err(|e| Error::io(&txt, e))?;
    files.push("damage_report.csv".into());
    files.push("damage_report.txt".into());
    Ok(())
}

fn write_measures(effects: &[MeasureEffect], dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    write_csv(
        &dir.join("measures.csv"),
        [
            "measure",
            "label",
            "delta",
            "annual_grp_pct",
            "annual_grp_bn",
        ],
        effects.iter().map(|e| {
            [
                e.measure.key().to_string(),
                e.measure.label().to_string(),
                fmt_f64(e.delta),
                fmt_f64(e.annual_grp_pct),
                fmt_f64(e.annual_grp_bn),
            ]
        }),
    )?;
    let txt = dir.join("measures.txt");
    fs::write(&txt, measures_text(effects)).map_err(|e| Error::io(&txt, e))?;
    files.push("measures.csv".into());
    files.push("measures.txt".into());
    Ok(())
}

/// Write the resolved scenario and every result file, then the manifest.
pub fn write_outputs(
    results: &PipelineResults,
    scenario: &Scenario,
    dir: &Path,
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = write_scenario(scenario, &dir.join("scenario"))?
        .into_iter()
        .map(|p| Path::new("scenario").join(p))
        .collect();
    for run in &results.runs {
        write_run(run, dir, &mut files)?;
    }
    if let Some(d) = &results.damage {
        let years = scenario.grid.t_max() as f64 / 12.0;
        write_damage(d, years, dir, &mut files)?;
    }
    if !results.measures.is_empty() {
        write_measures(&results.measures, dir, &mut files)?;
    }
    let manifest = Manifest::build(dir, &files)?;
    manifest.write(dir)?;
    Ok(manifest)
}

/// Stored human-readable reports of an output directory, after checking its manifest.
pub fn stored_report(dir: &Path) -> Result<String> {
    let manifest = verify_manifest(dir)?;
    let mut out = String::new();
    for name in ["damage_report.txt", "measures.txt"] {
        if manifest.get(name).is_some() {
            let p = dir.join(name);
            out.push_str(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?);
            out.push('\n');
        }
    }
    for run in ["baseline", "sanctions"] {
        let rel = format!("{run}/indicator_summary.csv");
        if manifest.get(&rel).is_some() {
            let (_, records) = read_records(&dir.join(&rel))?;
            out.push_str(&format!("{run} integral indicators:\n"));
            for r in records {
                let breaks = if r[3].is_empty() { "none" } else { &r[3] };
                out.push_str(&format!(
                    "  {:<20} {} G = {}  break at {}\n",
                    &r[0], &r[1], &r[2], breaks
                ));
            }
        }
    }
    out.push_str(&format!(
        "{} files verified against {MANIFEST_FILE}\n",
        manifest.entries.len()
    ));
    Ok(out)
}
