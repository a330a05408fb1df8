//! One-at-a-time evaluation of state measures and disturbance channels on
//! zone GRP, and the damage assessment of a sanctions run.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::adaptometry::IndicatorResult;
use crate::dynamics::{simulate, EventKind, PlanningPolicy, Schedules, Trajectory};
use crate::error::{Error, Result};
use crate::model::{Control, Disturbance, TimeGrid, Zone};

/// Thousand rubles in a billion rubles.
pub const THOUSANDS_PER_BILLION: f64 = 1e6;

pub fn to_billions(thousand_rubles: f64) -> f64 {
    thousand_rubles / THOUSANDS_PER_BILLION
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MeasureId {
    Control(Control),
    Disturbance(Disturbance),
}

impl MeasureId {
    pub fn key(self) -> &'static str {
        match self {
            MeasureId::Control(c) => c.key(),
            MeasureId::Disturbance(d) => d.key(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MeasureId::Control(c) => c.label(),
            MeasureId::Disturbance(d) => d.label(),
        }
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for MeasureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Control::from_key(s)
            .map(MeasureId::Control)
            .or_else(|| Disturbance::from_key(s).map(MeasureId::Disturbance))
            .ok_or_else(|| Error::UnknownMeasure(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureEffect {
    pub measure: MeasureId,
    /// Relative change applied to every scheduled value of the measure.
    pub delta: f64,
    /// Mean over years of the per-year percentage GRP difference.
    pub annual_grp_pct: f64,
    /// Mean over years of the per-year GRP difference, billion rubles.
    pub annual_grp_bn: f64,
}

/// Copy of `schedules` with one measure scaled by `1 + delta` everywhere.
pub fn perturbed(schedules: &Schedules, measure: MeasureId, delta: f64) -> Schedules {
    let mut out = schedules.clone();
    match measure {
        MeasureId::Control(c) => {
            for u in out.controls.entries_mut() {
                u.set(c, u.get(c) * (1.0 + delta));
            }
        }
        MeasureId::Disturbance(d) => {
            for v in out.disturbances.entries_mut() {
                v.set(d, v.get(d) * (1.0 + delta));
            }
        }
    }
    out
}

/// Yearly zone GRP totals.
pub fn annual_grp(trajectory: &Trajectory) -> Vec<f64> {
    trajectory
        .grid
        .years()
        .into_iter()
        .map(|y| y.map(|t| trajectory.zone_grp[t - 1]).sum())
        .collect()
}

/// Mean per-year percentage and absolute GRP difference of `other` against `base`.
pub fn annual_grp_change(base: &Trajectory, other: &Trajectory) -> (f64, f64) {
    let b = annual_grp(base);
    let o = annual_grp(other);
    let years = b.len() as f64;
    let pct = b
        .iter()
        .zip(&o)
        .map(|(b, o)| (o - b) / b * 100.0)
        .sum::<f64>()
        / years;
    let abs = b.iter().zip(&o).map(|(b, o)| o - b).sum::<f64>() / years;
    (pct, to_billions(abs))
}

fn perturbation_effect(
    zone: &Zone,
    grid: &TimeGrid,
    schedules: &Schedules,
    measure: MeasureId,
    delta: f64,
    policy: &PlanningPolicy,
    seed: u64,
) -> Result<MeasureEffect> {
    let base = simulate(zone, grid, schedules, &[], policy, seed)?;
    let shifted = simulate(
        zone,
        grid,
        &perturbed(schedules, measure, delta),
        &[],
        policy,
        seed,
    )?;
    let (annual_grp_pct, annual_grp_bn) = annual_grp_change(&base, &shifted);
    Ok(MeasureEffect {
        measure,
        delta,
        annual_grp_pct,
        annual_grp_bn,
    })
}

/// GRP response to scaling one control measure by `1 + delta`, without sanctions.
pub fn evaluate_measure(
    zone: &Zone,
    grid: &TimeGrid,
    schedules: &Schedules,
    control: Control,
    delta: f64,
    policy: &PlanningPolicy,
    seed: u64,
) -> Result<MeasureEffect> {
    perturbation_effect(
        zone,
        grid,
        schedules,
        MeasureId::Control(control),
        delta,
        policy,
        seed,
    )
}

/// GRP response to scaling one disturbance channel by `1 + delta`, without sanctions.
pub fn disturbance_sensitivity(
    zone: &Zone,
    grid: &TimeGrid,
    schedules: &Schedules,
    channel: Disturbance,
    delta: f64,
    policy: &PlanningPolicy,
    seed: u64,
) -> Result<MeasureEffect> {
    perturbation_effect(
        zone,
        grid,
        schedules,
        MeasureId::Disturbance(channel),
        delta,
        policy,
        seed,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorComparison {
    pub enterprise: String,
    pub baseline: f64,
    pub sanctioned: f64,
    /// `(baseline - sanctioned) / baseline * 100`.
    pub drop_pct: f64,
    pub sanctioned_breaks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DamageReport {
    pub baseline_grp_bn: f64,
    pub sanctioned_grp_bn: f64,
    pub loss_pct: f64,
    pub indicators: Vec<IndicatorComparison>,
    /// `(enterprise, period)` of technical defaults in the sanctioned run.
    pub defaults: Vec<(String, usize)>,
    pub distress: Vec<(String, usize)>,
}

pub fn percent_loss(baseline: f64, other: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        (baseline - other) / baseline * 100.0
    }
}

/// Compare a sanctions run with its baseline.
pub fn damage_assessment(
    baseline: &Trajectory,
    sanctioned: &Trajectory,
    baseline_g: &[IndicatorResult],
    sanctioned_g: &[IndicatorResult],
) -> Result<DamageReport> {
    if baseline.grid != sanctioned.grid {
        return Err(Error::Mismatch(format!(
            "grids differ ({} vs {} periods)",
            baseline.grid.t_max(),
            sanctioned.grid.t_max()
        )));
    }
    if baseline.zone_id != sanctioned.zone_id {
        return Err(Error::Mismatch(format!(
            "zones differ (`{}` vs `{}`)",
            baseline.zone_id, sanctioned.zone_id
        )));
    }
    let ids_b: Vec<_> = baseline.enterprises.iter().map(|e| &e.enterprise).collect();
    let ids_s: Vec<_> = sanctioned
        .enterprises
        .iter()
        .map(|e| &e.enterprise)
        .collect();
    if ids_b != ids_s {
        return Err(Error::Mismatch("enterprise lists differ".into()));
    }
    let baseline_grp_bn = to_billions(baseline.zone_grp.iter().sum());
    let sanctioned_grp_bn = to_billions(sanctioned.zone_grp.iter().sum());
    let loss_pct = percent_loss(baseline_grp_bn, sanctioned_grp_bn);

    let mut indicators = Vec::new();
    for b in baseline_g {
        let s = sanctioned_g
            .iter()
            .find(|s| s.enterprise == b.enterprise)
            .ok_or_else(|| {
                Error::Mismatch(format!("no sanctioned indicator for `{}`", b.enterprise))
            })?;
        if s.variant != b.variant {
            return Err(Error::Mismatch("indicator variants differ".into()));
        }
        indicators.push(IndicatorComparison {
            enterprise: b.enterprise.clone(),
            baseline: b.scalar,
            sanctioned: s.scalar,
            drop_pct: percent_loss(b.scalar, s.scalar),
            sanctioned_breaks: s.break_periods.clone(),
        });
    }
    let events_of = |kind| {
        sanctioned
            .events
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| (e.enterprise.clone(), e.period))
            .collect()
    };
    Ok(DamageReport {
        baseline_grp_bn,
        sanctioned_grp_bn,
        loss_pct,
        indicators,
        defaults: events_of(EventKind::TechnicalDefault),
        distress: events_of(EventKind::Distress),
    })
}

impl DamageReport {
    pub fn to_text(&self, years: f64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Sanctions damage assessment");
        let _ = writeln!(s, "===========================");
        let _ = writeln!(s);
        let _ = writeln!(s, "Cumulative zone GRP over {years} years:");
        let _ = writeln!(s, "  baseline   {:>10.3} bn rub", self.baseline_grp_bn);
        let _ = writeln!(s, "  sanctions  {:>10.3} bn rub", self.sanctioned_grp_bn);
        let _ = writeln!(s, "  loss       {:>10.2} %", self.loss_pct);
        let _ = writeln!(s);
        let _ = writeln!(s, "Integral indicator G:");
        for g in &self.indicators {
            let breaks = if g.sanctioned_breaks.is_empty() {
                "none".to_string()
            } else {
                join(&g.sanctioned_breaks)
            };
            let _ = writeln!(
                s,
                "  {:<20} baseline {:>10.3}  sanctions {:>10.3}  drop {:>6.2} %  break at {}",
                g.enterprise, g.baseline, g.sanctioned, g.drop_pct, breaks
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Distress onset:");
        if self.distress.is_empty() {
            let _ = writeln!(s, "  none");
        }
        for (e, t) in &self.distress {
            let _ = writeln!(s, "  {e} at period {t}");
        }
        let _ = writeln!(s, "Technical default:");
        if self.defaults.is_empty() {
            let _ = writeln!(s, "  none");
        }
        for (e, t) in &self.defaults {
            let _ = writeln!(s, "  {e} at period {t}");
        }
        s
    }
}

pub(crate) fn join(periods: &[usize]) -> String {
    periods
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn measures_text(effects: &[MeasureEffect]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "One-at-a-time measure effects on zone GRP");
    let _ = writeln!(s, "=========================================");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<5} {:<40} {:>8} {:>12} {:>14}",
        "id", "measure", "delta", "GRP %/yr", "GRP bn/yr"
    );
    for e in effects {
        let _ = writeln!(
            s,
            "{:<5} {:<40} {:>+8.3} {:>+12.4} {:>+14.6}",
            e.measure.key(),
            e.measure.label(),
            e.delta,
            e.annual_grp_pct,
            e.annual_grp_bn
        );
    }
    s
}
