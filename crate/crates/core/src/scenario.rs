//! Scenario files: a sectioned TOML document with CSV side-files for the
//! parameter lists and system matrices of each enterprise.
//!
//! ```toml
//! seed = 1
//!
//! [grid]
//! t_max = 60
//!
//! [zone]
//! id = "zone"
//!
//! [[zone.enterprise]]
//! id = "resident"
//! parameters = "resident/parameters.csv"
//! a = "resident/A.csv"
//! b = "resident/B.csv"
//! e = "resident/E.csv"
//! h = "resident/H.csv"
//!
//! [controls.default]
//! u6 = 0.3
//!
//! [[regime]]
//! onset = 37
//! ```
//!
//! Paths are relative to the scenario file. [`write_scenario`] dumps a
//! fully resolved scenario, every default spelled out, next to copies of
//! its side-files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::adaptometry::AdaptometrySettings;
use crate::dynamics::{DisturbanceNoise, Epsilon, PlanningPolicy, Schedules};
use crate::error::{Error, Result};
use crate::io::{
    read_labeled_matrix, read_records, write_csv, write_labeled_matrix, LabeledMatrix,
};
use crate::model::{
    validate_zone, Control, ControlVector, Disturbance, DisturbanceVector, Enterprise,
    MatrixSchedule, Parameter, ParameterKind, Schedule, SystemMatrices, TimeGrid, ValidationReport,
    Zone,
};
use crate::sanctions::SanctionsRegime;

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSettings {
    /// Relative perturbation applied to each measure.
    pub delta: f64,
    /// Disturbance channels evaluated after the nine controls.
    pub disturbances: Vec<Disturbance>,
}

impl Default for MeasureSettings {
    fn default() -> Self {
        Self {
            delta: 0.2,
            disturbances: vec![Disturbance::DollarRate],
        }
    }
}

/// Everything a pipeline run needs, loaded and validated.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub zone: Zone,
    pub schedules: Schedules,
    pub regimes: Vec<SanctionsRegime>,
    pub planning: PlanningPolicy,
    pub adaptometry: AdaptometrySettings,
    pub measures: MeasureSettings,
    pub seed: u64,
    /// Output directory as written in the file.
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_zone(&self.zone, &self.grid);
        report.extend(self.schedules.controls.validate(&self.grid));
        report.extend(self.schedules.disturbances.validate(&self.grid));
        for (d, sd) in Disturbance::ALL.iter().zip(self.schedules.noise.std_dev) {
            if !(sd >= 0.0) || !sd.is_finite() {
                report.push(
                    "noise",
                    format!("{} standard deviation {sd} must be non-negative", d.key()),
                );
            }
        }
        for (i, r) in self.regimes.iter().enumerate() {
            let scope = format!("regime {}", i + 1);
            for msg in r.violations(&self.grid) {
                report.push(&scope, msg);
            }
            if let Some(t) = &r.target {
                if self.zone.enterprise(t).is_none() {
                    report.push(&scope, format!("target `{t}` is not a zone enterprise"));
                }
            }
        }
        for msg in self.planning.violations(&self.grid) {
            report.push("planning", msg);
        }
        for msg in self.adaptometry.violations() {
            report.push("adaptometry", msg);
        }
        if let Some(sel) = &self.adaptometry.parameters {
            for e in &self.zone.enterprises {
                for name in sel {
                    if e.parameter_index(name).is_none() {
                        report.push(
                            "adaptometry",
                            format!("enterprise `{}` has no parameter `{name}`", e.id),
                        );
                    }
                }
            }
        }
        if !self.measures.delta.is_finite() {
            report.push("measures", "delta must be finite");
        }
        report
    }

    /// The scenario with the seed replaced.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn default_spectral_tolerance() -> f64 {
    Zone::DEFAULT_SPECTRAL_TOLERANCE
}

fn default_credit_rate() -> f64 {
    0.12
}

fn default_lag() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_dir: Option<String>,
    grid: GridSection,
    zone: ZoneSection,
    #[serde(default)]
    controls: ScheduleSection,
    #[serde(default)]
    disturbances: ScheduleSection,
    #[serde(default)]
    noise: BTreeMap<String, f64>,
    #[serde(default)]
    regime: Vec<SanctionsRegime>,
    #[serde(default)]
    planning: PlanningSection,
    #[serde(default)]
    adaptometry: AdaptometrySettings,
    #[serde(default)]
    measures: MeasuresSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    t_max: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneSection {
    id: String,
    #[serde(default = "default_spectral_tolerance")]
    spectral_tolerance: f64,
    #[serde(default)]
    enterprise: Vec<EnterpriseSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnterpriseSection {
    id: String,
    parameters: String,
    a: String,
    b: String,
    e: String,
    h: String,
    #[serde(default)]
    export_share: f64,
    #[serde(default)]
    cash0: f64,
    #[serde(default)]
    assets0: f64,
    #[serde(default = "default_credit_rate")]
    credit_rate: f64,
    #[serde(default, rename = "override", skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<MatrixOverrideSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixOverrideSection {
    from_period: usize,
    a: String,
    b: String,
    e: String,
    h: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleSection {
    #[serde(default)]
    default: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    month: Vec<MonthOverride>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    period: Vec<PeriodOverride>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MonthOverride {
    month: u32,
    #[serde(flatten)]
    values: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PeriodOverride {
    period: usize,
    #[serde(flatten)]
    values: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanningSection {
    #[serde(default = "default_lag")]
    lag: usize,
    #[serde(default)]
    epsilon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    epsilon_period: Vec<EpsilonOverride>,
}

impl Default for PlanningSection {
    fn default() -> Self {
        Self {
            lag: default_lag(),
            epsilon: 0.0,
            epsilon_period: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpsilonOverride {
    period: usize,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasuresSection {
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default = "default_measure_channels")]
    disturbances: Vec<String>,
}

fn default_delta() -> f64 {
    0.2
}

fn default_measure_channels() -> Vec<String> {
    vec!["v10".into()]
}

impl Default for MeasuresSection {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            disturbances: default_measure_channels(),
        }
    }
}

trait Keyed: Copy + 'static {
    const ALL: &'static [Self];
    fn key(self) -> &'static str;
    fn index(self) -> usize;
}

impl Keyed for Control {
    const ALL: &'static [Self] = &Control::ALL;
    fn key(self) -> &'static str {
        Control::key(self)
    }
    fn index(self) -> usize {
        Control::index(self)
    }
}

impl Keyed for Disturbance {
    const ALL: &'static [Self] = &Disturbance::ALL;
    fn key(self) -> &'static str {
        Disturbance::key(self)
    }
    fn index(self) -> usize {
        Disturbance::index(self)
    }
}

fn apply_keys<K: Keyed, const N: usize>(
    path: &Path,
    section: &str,
    base: [f64; N],
    values: &BTreeMap<String, f64>,
) -> Result<[f64; N]> {
    let mut out = base;
    for (key, &v) in values {
        let k = K::ALL
            .iter()
            .find(|k| k.key() == key)
            .ok_or_else(|| Error::parse(path, format!("[{section}]: unknown key `{key}`")))?;
        out[k.index()] = v;
    }
    Ok(out)
}

fn keys_of<K: Keyed, const N: usize>(values: &[f64; N]) -> BTreeMap<String, f64> {
    K::ALL
        .iter()
        .map(|k| (k.key().to_string(), values[k.index()]))
        .collect()
}

fn load_schedule<K: Keyed, const N: usize, V>(
    path: &Path,
    name: &str,
    section: &ScheduleSection,
    base: [f64; N],
    build: impl Fn([f64; N]) -> V,
) -> Result<Schedule<V>> {
    let default = apply_keys::<K, N>(path, &format!("{name}.default"), base, &section.default)?;
    let mut schedule = Schedule::constant(build(default));
    for m in &section.month {
        let v = apply_keys::<K, N>(
            path,
            &format!("{name}.month {}", m.month),
            default,
            &m.values,
        )?;
        if schedule.months.insert(m.month, build(v)).is_some() {
            return Err(Error::parse(
                path,
                format!("[{name}]: month {} listed twice", m.month),
            ));
        }
    }
    for p in &section.period {
        let v = apply_keys::<K, N>(
            path,
            &format!("{name}.period {}", p.period),
            default,
            &p.values,
        )?;
        if schedule.periods.insert(p.period, build(v)).is_some() {
            return Err(Error::parse(
                path,
                format!("[{name}]: period {} listed twice", p.period),
            ));
        }
    }
    Ok(schedule)
}

/// Keys whose value differs from `base`, which overrides inherit.
fn changed_keys<K: Keyed, const N: usize>(
    values: &[f64; N],
    base: &[f64; N],
) -> BTreeMap<String, f64> {
    K::ALL
        .iter()
        .filter(|k| values[k.index()].to_bits() != base[k.index()].to_bits())
        .map(|k| (k.key().to_string(), values[k.index()]))
        .collect()
}

fn dump_schedule<K: Keyed, const N: usize, V>(
    schedule: &Schedule<V>,
    values: impl Fn(&V) -> [f64; N],
) -> ScheduleSection {
    let base = values(&schedule.default);
    ScheduleSection {
        default: keys_of::<K, N>(&values(&schedule.default)),
        month: schedule
            .months
            .iter()
            .map(|(&month, v)| MonthOverride {
                month,
                values: changed_keys::<K, N>(&values(v), &base),
            })
            .collect(),
        period: schedule
            .periods
            .iter()
            .map(|(&period, v)| PeriodOverride {
                period,
                values: changed_keys::<K, N>(&values(v), &base),
            })
            .collect(),
    }
}

#[derive(Debug, Deserialize)]
struct ParameterRow {
    name: String,
    kind: ParameterKind,
    #[serde(default)]
    export: bool,
    #[serde(default)]
    distress_cut: bool,
    x0: f64,
}

fn load_parameters(path: &Path) -> Result<(Vec<Parameter>, DVector<f64>)> {
    let (header, records) = read_records(path)?;
    let header = csv::StringRecord::from(header);
    let mut params = Vec::new();
    let mut x0 = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let row: ParameterRow = rec
            .deserialize(Some(&header))
            .map_err(|e| Error::parse(path, format!("line {}: {e}", i + 2)))?;
        params.push(Parameter {
            name: row.name,
            kind: row.kind,
            export: row.export,
            distress_cut: row.distress_cut,
        });
        x0.push(row.x0);
    }
    Ok((params, DVector::from_vec(x0)))
}

fn load_matrix(
    path: &Path,
    expect_rows: Option<&[String]>,
    expect_cols: &[String],
) -> Result<LabeledMatrix> {
    let m = read_labeled_matrix(path)?;
    if m.col_labels != expect_cols {
        return Err(Error::parse(
            path,
            format!(
                "column labels {:?} do not match expected {:?}",
                m.col_labels, expect_cols
            ),
        ));
    }
    if let Some(rows) = expect_rows {
        if m.row_labels != rows {
            return Err(Error::parse(
                path,
                format!(
                    "row labels {:?} do not match expected {:?}",
                    m.row_labels, rows
                ),
            ));
        }
    }
    Ok(m)
}

fn control_labels() -> Vec<String> {
    Control::ALL.iter().map(|c| c.key().to_string()).collect()
}

fn disturbance_labels() -> Vec<String> {
    Disturbance::ALL
        .iter()
        .map(|d| d.key().to_string())
        .collect()
}

fn load_system(
    base: &Path,
    names: &[String],
    a: &str,
    b: &str,
    e: &str,
    h: &str,
) -> Result<SystemMatrices> {
    let a = load_matrix(&base.join(a), Some(names), names)?;
    let b = load_matrix(&base.join(b), Some(names), &control_labels())?;
    let e = load_matrix(&base.join(e), Some(names), &disturbance_labels())?;
    let h = load_matrix(&base.join(h), None, names)?;
    Ok(SystemMatrices {
        a: a.values,
        b: b.values,
        e: e.values,
        h: h.values,
        observation_names: h.row_labels,
    })
}

/// Load a scenario file and its side-files, apply defaults and validate.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let grid =
        TimeGrid::new(file.grid.t_max).map_err(|e| Error::parse(path, format!("[grid]: {e}")))?;

    let mut enterprises = Vec::new();
    for sec in &file.zone.enterprise {
        let (parameters, x0) = load_parameters(&base.join(&sec.parameters))?;
        let names: Vec<String> = parameters.iter().map(|p| p.name.clone()).collect();
        let mut matrices =
            MatrixSchedule::constant(load_system(base, &names, &sec.a, &sec.b, &sec.e, &sec.h)?);
        for o in &sec.overrides {
            let m = load_system(base, &names, &o.a, &o.b, &o.e, &o.h)?;
            if matrices.overrides.insert(o.from_period, m).is_some() {
                return Err(Error::parse(
                    path,
                    format!(
                        "enterprise `{}`: two overrides from period {}",
                        sec.id, o.from_period
                    ),
                ));
            }
        }
        enterprises.push(Enterprise {
            id: sec.id.clone(),
            parameters,
            x0,
            matrices,
            export_share: sec.export_share,
            cash0: sec.cash0,
            assets0: sec.assets0,
            credit_rate: sec.credit_rate,
        });
    }
    let zone = Zone {
        id: file.zone.id.clone(),
        enterprises,
        spectral_tolerance: file.zone.spectral_tolerance,
    };

    let controls = load_schedule::<Control, 9, _>(
        path,
        "controls",
        &file.controls,
        *ControlVector::default().as_array(),
        ControlVector::from_array,
    )?;
    let disturbances = load_schedule::<Disturbance, 10, _>(
        path,
        "disturbances",
        &file.disturbances,
        *DisturbanceVector::default().as_array(),
        DisturbanceVector::from_array,
    )?;
    let noise = DisturbanceNoise {
        std_dev: apply_keys::<Disturbance, 10>(path, "noise", [0.0; 10], &file.noise)?,
    };

    let mut epsilon = Epsilon {
        default: file.planning.epsilon,
        periods: BTreeMap::new(),
    };
    for o in &file.planning.epsilon_period {
        epsilon.periods.insert(o.period, o.value);
    }

    let disturbances_measured = file
        .measures
        .disturbances
        .iter()
        .map(|k| {
            Disturbance::from_key(k).ok_or_else(|| {
                Error::parse(
                    path,
                    format!("[measures]: unknown disturbance channel `{k}`"),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scenario = Scenario {
        grid,
        zone,
        schedules: Schedules {
            controls,
            disturbances,
            noise,
        },
        regimes: file.regime,
        planning: PlanningPolicy {
            lag: file.planning.lag,
            epsilon,
        },
        adaptometry: file.adaptometry,
        measures: MeasureSettings {
            delta: file.measures.delta,
            disturbances: disturbances_measured,
        },
        seed: file.seed,
        output_dir: file.output_dir.map(PathBuf::from),
    };
    scenario.validate().into_result()?;
    Ok(scenario)
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

fn write_system(
    dir: &Path,
    stem: &str,
    names: &[String],
    m: &SystemMatrices,
) -> Result<[String; 4]> {
    let file = |tag: &str| format!("{stem}{tag}.csv");
    let [a, b, e, h] = [file("A"), file("B"), file("E"), file("H")];
    write_labeled_matrix(&dir.join(&a), "parameter", names, names, &m.a)?;
    write_labeled_matrix(&dir.join(&b), "parameter", names, &control_labels(), &m.b)?;
    write_labeled_matrix(
        &dir.join(&e),
        "parameter",
        names,
        &disturbance_labels(),
        &m.e,
    )?;
    write_labeled_matrix(
        &dir.join(&h),
        "observation",
        &m.observation_names,
        names,
        &m.h,
    )?;
    Ok([a, b, e, h])
}

/// Write the resolved scenario as `scenario.toml` plus side-files under `dir`.
/// Returns every file written, relative to `dir`.
pub fn write_scenario(scenario: &Scenario, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut sections = Vec::new();
    for e in &scenario.zone.enterprises {
        let sub = safe_name(&e.id);
        let edir = dir.join(&sub);
        let rel = |f: &str| format!("{sub}/{f}");
        let names = e.parameter_names();

        let params = "parameters.csv";
        write_csv(
            &edir.join(params),
            ["name", "kind", "export", "distress_cut", "x0"],
            e.parameters.iter().zip(e.x0.iter()).map(|(p, x)| {
                let kind = match p.kind {
                    ParameterKind::Income => "income",
                    ParameterKind::Cost => "cost",
                    ParameterKind::Interest => "interest",
                    ParameterKind::Memo => "memo",
                };
                vec![
                    p.name.clone(),
                    kind.to_string(),
                    p.export.to_string(),
                    p.distress_cut.to_string(),
                    crate::io::fmt_f64(*x),
                ]
            }),
        )?;
        written.push(PathBuf::from(rel(params)));

        let base_files = write_system(&edir, "", &names, &e.matrices.base)?;
        written.extend(base_files.iter().map(|f| PathBuf::from(rel(f))));
        let mut overrides = Vec::new();
        for (&from, m) in &e.matrices.overrides {
            let files = write_system(&edir, &format!("from{from}_"), &names, m)?;
            written.extend(files.iter().map(|f| PathBuf::from(rel(f))));
            let [a, b, e_, h] = files.map(|f| rel(&f));
            overrides.push(MatrixOverrideSection {
                from_period: from,
                a,
                b,
                e: e_,
                h,
            });
        }
        let [a, b, e_, h] = base_files.map(|f| rel(&f));
        sections.push(EnterpriseSection {
            id: e.id.clone(),
            parameters: rel(params),
            a,
            b,
            e: e_,
            h,
            export_share: e.export_share,
            cash0: e.cash0,
            assets0: e.assets0,
            credit_rate: e.credit_rate,
            overrides,
        });
    }

    let file = ScenarioFile {
        seed: scenario.seed,
        output_dir: scenario
            .output_dir
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned()),
        grid: GridSection {
            t_max: scenario.grid.t_max(),
        },
        zone: ZoneSection {
            id: scenario.zone.id.clone(),
            spectral_tolerance: scenario.zone.spectral_tolerance,
            enterprise: sections,
        },
        controls: dump_schedule::<Control, 9, _>(&scenario.schedules.controls, |v| *v.as_array()),
        disturbances: dump_schedule::<Disturbance, 10, _>(&scenario.schedules.disturbances, |v| {
            *v.as_array()
        }),
        noise: keys_of::<Disturbance, 10>(&scenario.schedules.noise.std_dev),
        regime: scenario.regimes.clone(),
        planning: PlanningSection {
            lag: scenario.planning.lag,
            epsilon: scenario.planning.epsilon.default,
            epsilon_period: scenario
                .planning
                .epsilon
                .periods
                .iter()
                .map(|(&period, &value)| EpsilonOverride { period, value })
                .collect(),
        },
        adaptometry: scenario.adaptometry.clone(),
        measures: MeasuresSection {
            delta: scenario.measures.delta,
            disturbances: scenario
                .measures
                .disturbances
                .iter()
                .map(|d| d.key().to_string())
                .collect(),
        },
    };
    let text =
        toml::to_string(&file).map_err(|e| Error::Invalid(format!("serializing scenario: {e}")))?;
    let path = dir.join("scenario.toml");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.insert(0, PathBuf::from("scenario.toml"));
    Ok(written)
}

/// Matrix helper for building scenarios in code: rows given as slices.
pub fn matrix(rows: &[&[f64]]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}
