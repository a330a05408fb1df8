//! Domain types for a special economic zone and its resident enterprises.
//!
//! Amounts are thousand rubles per month throughout. Rates that are
//! conventionally quoted per annum (wage growth, inflation, credit rates)
//! are stored annual and converted with [`monthly_rate`] where they enter
//! the monthly recursion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compounded monthly equivalent of an annual rate: `(1 + r)^(1/12) - 1`.
pub fn monthly_rate(annual: f64) -> f64 {
    (annual.ln_1p() / 12.0).exp_m1()
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Monthly periods `1..=t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: usize,
}

impl TimeGrid {
    pub fn new(t_max: usize) -> Result<Self> {
        if t_max < 2 {
            return Err(Error::Invalid(format!(
                "t_max must be at least 2, got {t_max}"
            )));
        }
        Ok(Self { t_max })
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn periods(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.t_max
    }

    pub fn contains(&self, t: usize) -> bool {
        (1..=self.t_max).contains(&t)
    }

    pub fn check(&self, t: usize) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::PeriodOutOfRange {
                period: t,
                t_max: self.t_max,
            })
        }
    }

    /// Calendar month (1..=12) of period `t`, with period 1 in January.
    pub fn month_of(t: usize) -> u32 {
        ((t - 1) % 12 + 1) as u32
    }

    /// Period ranges of the accounting years. A trailing partial year is
    /// kept; a horizon shorter than a year is a single year.
    pub fn years(&self) -> Vec<std::ops::RangeInclusive<usize>> {
        (0..self.t_max.div_ceil(12))
            .map(|y| (y * 12 + 1)..=((y + 1) * 12).min(self.t_max))
            .collect()
    }
}

/// State control measures, in the order they appear in `B`'s columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Control {
    RegionalProfitTax,
    ConsolidatedProfitTax,
    TransportTax,
    PropertyTax,
    ElectricityCost,
    TransportSubsidy,
    SocialContributions,
    LandRent,
    ForestRent,
}

impl Control {
    pub const ALL: [Control; 9] = [
        Control::RegionalProfitTax,
        Control::ConsolidatedProfitTax,
        Control::TransportTax,
        Control::PropertyTax,
        Control::ElectricityCost,
        Control::TransportSubsidy,
        Control::SocialContributions,
        Control::LandRent,
        Control::ForestRent,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column key used in scenario files and reports (`u1`..`u9`).
    pub fn key(self) -> &'static str {
        ["u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9"][self.index()]
    }

    pub fn label(self) -> &'static str {
        match self {
            Control::RegionalProfitTax => "profit tax rate, regional budget",
            Control::ConsolidatedProfitTax => "profit tax rate, consolidated budget",
            Control::TransportTax => "transport tax",
            Control::PropertyTax => "property tax rate",
            Control::ElectricityCost => "electricity cost",
            Control::TransportSubsidy => "transport cost subsidy rate",
            Control::SocialContributions => "social fund contribution rate",
            Control::LandRent => "land rent",
            Control::ForestRent => "forest rent",
        }
    }

    /// Whether the component is a rate bounded to `[0, 1]` (otherwise a price `>= 0`).
    pub fn is_rate(self) -> bool {
        matches!(
            self,
            Control::RegionalProfitTax
                | Control::ConsolidatedProfitTax
                | Control::PropertyTax
                | Control::TransportSubsidy
                | Control::SocialContributions
        )
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.key() == key)
    }
}

/// Exogenous factors, in the order they appear in `E`'s columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Disturbance {
    ResourcePrices,
    WageGrowth,
    OwnerInvestment,
    TechnologyInnovation,
    MaterialFlow,
    LogisticsMeasures,
    LaborResources,
    TechnologyPrices,
    Inflation,
    DollarRate,
}

impl Disturbance {
    pub const ALL: [Disturbance; 10] = [
        Disturbance::ResourcePrices,
        Disturbance::WageGrowth,
        Disturbance::OwnerInvestment,
        Disturbance::TechnologyInnovation,
        Disturbance::MaterialFlow,
        Disturbance::LogisticsMeasures,
        Disturbance::LaborResources,
        Disturbance::TechnologyPrices,
        Disturbance::Inflation,
        Disturbance::DollarRate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column key used in scenario files and reports (`v1`..`v10`).
    pub fn key(self) -> &'static str {
        ["v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9", "v10"][self.index()]
    }

    pub fn label(self) -> &'static str {
        match self {
            Disturbance::ResourcePrices => "resource price index",
            Disturbance::WageGrowth => "wage growth rate (annual)",
            Disturbance::OwnerInvestment => "owner investment",
            Disturbance::TechnologyInnovation => "technology innovation index",
            Disturbance::MaterialFlow => "material flow index",
            Disturbance::LogisticsMeasures => "logistics measures index",
            Disturbance::LaborResources => "labor resource index",
            Disturbance::TechnologyPrices => "technology price index",
            Disturbance::Inflation => "inflation rate (annual)",
            Disturbance::DollarRate => "dollar rate, rubles per dollar",
        }
    }

    /// Whether the component is an annual rate that enters the recursion monthly.
    pub fn is_annual_rate(self) -> bool {
        matches!(self, Disturbance::WageGrowth | Disturbance::Inflation)
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.key() == key)
    }
}

/// Control vector `u(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ControlVector {
    values: [f64; 9],
}

impl ControlVector {
    pub fn from_array(values: [f64; 9]) -> Self {
        Self { values }
    }

    pub fn as_array(&self) -> &[f64; 9] {
        &self.values
    }

    pub fn get(&self, c: Control) -> f64 {
        self.values[c.index()]
    }

    pub fn set(&mut self, c: Control, value: f64) {
        self.values[c.index()] = value;
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn violations(&self) -> Vec<String> {
        Control::ALL
            .into_iter()
            .filter_map(|c| {
                let x = self.get(c);
                if !x.is_finite() {
                    Some(format!("{} is not finite", c.key()))
                } else if c.is_rate() && !(0.0..=1.0).contains(&x) {
                    Some(format!("{} = {x} outside [0, 1]", c.key()))
                } else if x < 0.0 {
                    Some(format!("{} = {x} is negative", c.key()))
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Disturbance vector `v(t)`, annual rates kept annual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisturbanceVector {
    values: [f64; 10],
}

impl Default for DisturbanceVector {
    /// Index channels at 1, no owner investment, 4%/yr wage growth and
    /// inflation, 70 rubles per dollar.
    fn default() -> Self {
        Self {
            values: [1.0, 0.04, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.04, 70.0],
        }
    }
}

impl DisturbanceVector {
    pub fn from_array(values: [f64; 10]) -> Self {
        Self { values }
    }

    pub fn as_array(&self) -> &[f64; 10] {
        &self.values
    }

    pub fn get(&self, d: Disturbance) -> f64 {
        self.values[d.index()]
    }

    pub fn set(&mut self, d: Disturbance, value: f64) {
        self.values[d.index()] = value;
    }

    /// The vector as it enters the monthly recursion: annual rates converted.
    pub fn monthly(&self) -> DVector<f64> {
        DVector::from_iterator(
            10,
            Disturbance::ALL.into_iter().map(|d| {
                let x = self.get(d);
                if d.is_annual_rate() {
                    monthly_rate(x)
                } else {
                    x
                }
            }),
        )
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = Disturbance::ALL
            .into_iter()
            .filter(|&d| !self.get(d).is_finite())
            .map(|d| format!("{} is not finite", d.key()))
            .collect();
        if self.get(Disturbance::DollarRate) <= 0.0 {
            out.push(format!(
                "v10 = {} must be positive",
                self.get(Disturbance::DollarRate)
            ));
        }
        for d in [Disturbance::WageGrowth, Disturbance::Inflation] {
            if self.get(d) <= -1.0 {
                out.push(format!("{} = {} must exceed -1", d.key(), self.get(d)));
            }
        }
        out
    }
}

/// A default value with calendar-month and period overrides.
///
/// Lookup precedence is period, then month of year, then default.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<V> {
    pub default: V,
    pub months: BTreeMap<u32, V>,
    pub periods: BTreeMap<usize, V>,
}

pub type ControlSchedule = Schedule<ControlVector>;
pub type DisturbanceSchedule = Schedule<DisturbanceVector>;

impl<V: Default> Default for Schedule<V> {
    fn default() -> Self {
        Self::constant(V::default())
    }
}

impl<V> Schedule<V> {
    pub fn constant(default: V) -> Self {
        Self {
            default,
            months: BTreeMap::new(),
            periods: BTreeMap::new(),
        }
    }

    pub fn at(&self, t: usize) -> &V {
        self.periods
            .get(&t)
            .or_else(|| self.months.get(&TimeGrid::month_of(t)))
            .unwrap_or(&self.default)
    }

    pub fn entries_mut(&mut self) -> impl Iterator<Item = &mut V> {
        std::iter::once(&mut self.default)
            .chain(self.months.values_mut())
            .chain(self.periods.values_mut())
    }

    fn entries(&self) -> impl Iterator<Item = (String, &V)> {
        std::iter::once(("default".to_string(), &self.default))
            .chain(self.months.iter().map(|(m, v)| (format!("month {m}"), v)))
            .chain(self.periods.iter().map(|(p, v)| (format!("period {p}"), v)))
    }
}

impl ControlSchedule {
    pub fn validate(&self, grid: &TimeGrid) -> ValidationReport {
        schedule_report("controls", self, grid, ControlVector::violations)
    }
}

impl DisturbanceSchedule {
    pub fn validate(&self, grid: &TimeGrid) -> ValidationReport {
        schedule_report("disturbances", self, grid, DisturbanceVector::violations)
    }
}

fn schedule_report<V>(
    name: &str,
    schedule: &Schedule<V>,
    grid: &TimeGrid,
    check: impl Fn(&V) -> Vec<String>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    for &p in schedule.periods.keys() {
        if !grid.contains(p) {
            report.push(
                name,
                format!("override period {p} outside 1..={}", grid.t_max()),
            );
        }
    }
    for &m in schedule.months.keys() {
        if !(1..=12).contains(&m) {
            report.push(name, format!("month override {m} outside 1..=12"));
        }
    }
    for (at, v) in schedule.entries() {
        for msg in check(v) {
            report.push(name, format!("{at}: {msg}"));
        }
    }
    report
}

/// How a parameter enters the enterprise's cash account.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterKind {
    Income,
    Cost,
    /// Interest expense; emergency-credit interest is added to this row.
    Interest,
    /// Tracked but not a cash flow.
    Memo,
}

impl ParameterKind {
    pub fn cash_sign(self) -> f64 {
        match self {
            ParameterKind::Income => 1.0,
            ParameterKind::Cost | ParameterKind::Interest => -1.0,
            ParameterKind::Memo => 0.0,
        }
    }
}

/// One cost/income line of an enterprise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub kind: ParameterKind,
    /// Revenue or volume line sold partly through the export channel.
    #[serde(default)]
    pub export: bool,
    /// Production or administrative funding cut when distress sets in.
    #[serde(default)]
    pub distress_cut: bool,
}

/// `A` (n×n), `B` (n×9), `E` (n×10) and `H` (K×n) for one enterprise.
///
/// Row 0 of `H` is the enterprise's GRP (value added) contribution; its
/// signed weights add revenue rows and subtract intermediate costs.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub observation_names: Vec<String>,
}

impl SystemMatrices {
    pub fn zeros(n: usize) -> Self {
        Self {
            a: DMatrix::zeros(n, n),
            b: DMatrix::zeros(n, 9),
            e: DMatrix::zeros(n, 10),
            h: DMatrix::zeros(1, n),
            observation_names: vec!["grp".to_string()],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn violations(&self, n: usize, delta: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut dims = |name: &str, m: &DMatrix<f64>, rows: usize, cols: usize| {
            if m.nrows() != rows || m.ncols() != cols {
                out.push(format!(
                    "dimension mismatch: {name} is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                ));
            }
        };
        dims("A", &self.a, n, n);
        dims("B", &self.b, n, 9);
        dims("E", &self.e, n, 10);
        dims("H", &self.h, self.h.nrows().max(1), n);
        if self.h.nrows() == 0 {
            out.push("H needs at least one (GRP) row".into());
        }
        if self.observation_names.len() != self.h.nrows() {
            out.push(format!(
                "{} observation names for {} H rows",
                self.observation_names.len(),
                self.h.nrows()
            ));
        }
        for (name, m) in [
            ("A", &self.a),
            ("B", &self.b),
            ("E", &self.e),
            ("H", &self.h),
        ] {
            if m.iter().any(|x| !x.is_finite()) {
                out.push(format!("{name} has non-finite entries"));
            }
        }
        if self.a.is_square() && self.a.iter().all(|x| x.is_finite()) {
            let rho = spectral_radius(&self.a);
            if rho > 1.0 + delta {
                out.push(format!(
                    "spectral radius of A is {rho:.6}, exceeds 1 + {delta}"
                ));
            }
        }
        out
    }
}

/// Base matrices plus replacements taking effect from a given period.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSchedule {
    pub base: SystemMatrices,
    pub overrides: BTreeMap<usize, SystemMatrices>,
}

impl MatrixSchedule {
    pub fn constant(base: SystemMatrices) -> Self {
        Self {
            base,
            overrides: BTreeMap::new(),
        }
    }

    /// Matrices in force at period `t`: the latest override starting at or before `t`.
    pub fn at(&self, t: usize) -> &SystemMatrices {
        self.overrides
            .range(..=t)
            .next_back()
            .map(|(_, m)| m)
            .unwrap_or(&self.base)
    }

    pub fn all(&self) -> impl Iterator<Item = &SystemMatrices> {
        std::iter::once(&self.base).chain(self.overrides.values())
    }

    pub fn all_mut(&mut self) -> impl Iterator<Item = &mut SystemMatrices> {
        std::iter::once(&mut self.base).chain(self.overrides.values_mut())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enterprise {
    pub id: String,
    pub parameters: Vec<Parameter>,
    /// State at period 0, the month before the horizon opens.
    pub x0: DVector<f64>,
    pub matrices: MatrixSchedule,
    /// Share of each export-flagged revenue line that goes abroad.
    pub export_share: f64,
    pub cash0: f64,
    /// Book value of fixed assets available for distress sales.
    pub assets0: f64,
    /// Annual interest rate on credit before any sanctions premium.
    pub credit_rate: f64,
}

impl Enterprise {
    pub fn n(&self) -> usize {
        self.parameters.len()
    }

    pub fn parameter_names(&self) -> Vec<String> {
        self.parameters.iter().map(|p| p.name.clone()).collect()
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Zone {
    pub id: String,
    pub enterprises: Vec<Enterprise>,
    /// Tolerance `δ` in the guard `spectral radius(A) <= 1 + δ`.
    pub spectral_tolerance: f64,
}

impl Zone {
    pub const DEFAULT_SPECTRAL_TOLERANCE: f64 = 0.05;

    pub fn enterprise(&self, id: &str) -> Option<&Enterprise> {
        self.enterprises.iter().find(|e| e.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub scope: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.scope, self.message)
    }
}

/// Violated invariants; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, scope: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            scope: scope.into(),
            message: message.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Check every structural invariant of the zone against the grid.
pub fn validate_zone(zone: &Zone, grid: &TimeGrid) -> ValidationReport {
    let mut report = ValidationReport::default();
    let zscope = format!("zone `{}`", zone.id);
    if zone.enterprises.is_empty() {
        report.push(&zscope, "needs at least one enterprise");
    }
    if !(zone.spectral_tolerance >= 0.0) {
        report.push(&zscope, "spectral tolerance must be non-negative");
    }
    let mut seen = BTreeSet::new();
    for e in &zone.enterprises {
        if !seen.insert(e.id.as_str()) {
            report.push(&zscope, format!("duplicate enterprise id `{}`", e.id));
        }
    }
    for e in &zone.enterprises {
        let scope = format!("enterprise `{}`", e.id);
        let n = e.n();
        if n < 2 {
            report.push(&scope, format!("needs at least 2 parameters, has {n}"));
        }
        let mut names = BTreeSet::new();
        for p in &e.parameters {
            if !names.insert(p.name.as_str()) {
                report.push(&scope, format!("duplicate parameter name `{}`", p.name));
            }
            if p.export && !matches!(p.kind, ParameterKind::Income | ParameterKind::Memo) {
                report.push(
                    &scope,
                    format!("export flag on cost parameter `{}`", p.name),
                );
            }
        }
        if e.x0.len() != n {
            report.push(
                &scope,
                format!(
                    "dimension mismatch: x0 has {} entries for {n} parameters",
                    e.x0.len()
                ),
            );
        }
        if e.x0.iter().any(|x| !x.is_finite()) {
            report.push(&scope, "x0 has non-finite entries");
        }
        if !(0.0..=1.0).contains(&e.export_share) {
            report.push(
                &scope,
                format!("export_share {} outside [0, 1]", e.export_share),
            );
        }
        for (label, x) in [
            ("cash0", e.cash0),
            ("assets0", e.assets0),
            ("credit_rate", e.credit_rate),
        ] {
            if !x.is_finite() {
                report.push(&scope, format!("{label} is not finite"));
            }
        }
        if e.assets0 < 0.0 {
            report.push(&scope, "assets0 is negative");
        }
        for &from in e.matrices.overrides.keys() {
            if !grid.contains(from) {
                report.push(
                    &scope,
                    format!("matrix override period {from} outside the grid"),
                );
            }
        }
        for m in e.matrices.all() {
            for msg in m.violations(n, zone.spectral_tolerance) {
                report.push(&scope, msg);
            }
        }
    }
    report
}

/// Parameters × periods matrix of one enterprise, columns are periods `1..=t_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterMatrix {
    enterprise: String,
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl ParameterMatrix {
    pub fn new(
        enterprise: impl Into<String>,
        names: Vec<String>,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        if names.len() != values.nrows() {
            return Err(Error::Dimension {
                context: "parameter matrix row labels",
                expected: values.nrows(),
                actual: names.len(),
            });
        }
        if let Some(((r, c), _)) = values
            .iter()
            .enumerate()
            .map(|(i, x)| ((i % values.nrows().max(1), i / values.nrows().max(1)), x))
            .find(|(_, x)| !x.is_finite())
        {
            return Err(Error::Invalid(format!(
                "non-finite entry in parameter matrix at ({}, period {})",
                names[r],
                c + 1
            )));
        }
        Ok(Self {
            enterprise: enterprise.into(),
            names,
            values,
        })
    }

    pub fn enterprise(&self) -> &str {
        &self.enterprise
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn t_max(&self) -> usize {
        self.values.ncols()
    }

    /// Column of period `t` (1-based).
    pub fn column(&self, t: usize) -> DVector<f64> {
        self.values.column(t - 1).into_owned()
    }

    pub fn row(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.values.row(i).iter().copied().collect())
    }
}
