//! Correlation adaptometry: the period-by-period correlation matrix of an
//! enterprise's parameter vector, the integral indicator summarizing it,
//! and detection of the period where its correlation structure breaks.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::ParameterMatrix;

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// A column centered on its mean, second pass of the two-pass scheme.
struct Centered {
    dev: Vec<f64>,
    norm: f64,
    constant: bool,
}

impl Centered {
    fn new(column: &[f64]) -> Self {
        let n = column.len() as f64;
        let mean = compensated_sum(column.iter().copied()) / n;
        let dev: Vec<f64> = column.iter().map(|x| x - mean).collect();
        let norm = compensated_sum(dev.iter().map(|d| d * d)).sqrt();
        let constant = column.iter().all(|&x| x == column[0]);
        Self {
            dev,
            norm,
            constant,
        }
    }
}

fn correlate(a: &Centered, b: &Centered) -> f64 {
    if a.constant || b.constant {
        return 0.0;
    }
    let cross = compensated_sum(a.dev.iter().zip(&b.dev).map(|(x, y)| x * y));
    (cross / (a.norm * b.norm)).clamp(-1.0, 1.0)
}

fn column_of(x: &ParameterMatrix, t: usize) -> Result<Vec<f64>> {
    if t == 0 || t > x.t_max() {
        return Err(Error::PeriodOutOfRange {
            period: t,
            t_max: x.t_max(),
        });
    }
    Ok(x.values().column(t - 1).iter().copied().collect())
}

/// Pearson correlation across parameters between periods `a` and `b` (1-based).
///
/// A constant column carries no correlation information and yields 0.
pub fn column_correlation(x: &ParameterMatrix, a: usize, b: usize) -> Result<f64> {
    if x.n() < 2 {
        return Err(Error::TooFewParameters(x.n()));
    }
    let ca = Centered::new(&column_of(x, a)?);
    if a == b {
        return Ok(if ca.constant { 0.0 } else { 1.0 });
    }
    let cb = Centered::new(&column_of(x, b)?);
    Ok(correlate(&ca, &cb))
}

/// Symmetric `t_max × t_max` matrix of period-to-period correlations.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    enterprise: String,
    r: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Wrap a matrix after checking symmetry, range and diagonal.
    pub fn from_matrix(enterprise: impl Into<String>, r: DMatrix<f64>) -> Result<Self> {
        if !r.is_square() {
            return Err(Error::Invalid("correlation matrix must be square".into()));
        }
        let t = r.nrows();
        for i in 0..t {
            let d = r[(i, i)];
            if d != 1.0 && d != 0.0 {
                return Err(Error::Invalid(format!("diagonal entry {} is {d}", i + 1)));
            }
            for j in 0..t {
                let x = r[(i, j)];
                if !(-1.0..=1.0).contains(&x) {
                    return Err(Error::Invalid(format!(
                        "entry ({}, {}) = {x} outside [-1, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                if (x - r[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Invalid(format!(
                        "asymmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            enterprise: enterprise.into(),
            r,
        })
    }

    pub fn enterprise(&self) -> &str {
        &self.enterprise
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn t_max(&self) -> usize {
        self.r.nrows()
    }

    /// Entry for periods `t`, `s` (1-based).
    pub fn get(&self, t: usize, s: usize) -> f64 {
        self.r[(t - 1, s - 1)]
    }
}

pub fn correlation_matrix(x: &ParameterMatrix) -> Result<CorrelationMatrix> {
    if x.n() < 2 {
        return Err(Error::TooFewParameters(x.n()));
    }
    let t_max = x.t_max();
    let cols: Vec<Centered> = (1..=t_max)
        .map(|t| column_of(x, t).map(|c| Centered::new(&c)))
        .collect::<Result<_>>()?;
    let mut r = DMatrix::zeros(t_max, t_max);
    for a in 0..t_max {
        r[(a, a)] = if cols[a].constant { 0.0 } else { 1.0 };
        for b in (a + 1)..t_max {
            let v = correlate(&cols[a], &cols[b]);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    Ok(CorrelationMatrix {
        enterprise: x.enterprise().to_string(),
        r,
    })
}

/// How the correlation matrix is folded into the integral indicator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorVariant {
    /// Absolute correlation mass of the upper triangle.
    #[default]
    TotalAbs,
    /// Signed sum along the first row.
    Row1Signed,
    /// Per-period absolute row sums, halved in total.
    RowAbs,
}

impl fmt::Display for IndicatorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndicatorVariant::TotalAbs => "total-abs",
            IndicatorVariant::Row1Signed => "row1-signed",
            IndicatorVariant::RowAbs => "row-abs",
        })
    }
}

impl FromStr for IndicatorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total-abs" => Ok(IndicatorVariant::TotalAbs),
            "row1-signed" => Ok(IndicatorVariant::Row1Signed),
            "row-abs" => Ok(IndicatorVariant::RowAbs),
            other => Err(Error::Invalid(format!(
                "unknown indicator variant `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorResult {
    pub enterprise: String,
    pub variant: IndicatorVariant,
    /// `G(t)` for periods `1..=t_max`.
    pub series: Vec<f64>,
    pub scalar: f64,
    pub break_periods: Vec<usize>,
}

/// Integral indicator of a correlation matrix. `break_periods` is left
/// empty; see [`analyze`] for the combined computation.
pub fn integral_indicator(r: &CorrelationMatrix, variant: IndicatorVariant) -> IndicatorResult {
    let m = r.matrix();
    let t_max = r.t_max();
    let row_abs = || -> Vec<f64> {
        (0..t_max)
            .map(|t| compensated_sum((0..t_max).filter(|&s| s != t).map(|s| m[(t, s)].abs())))
            .collect()
    };
    let (series, scalar) = match variant {
        IndicatorVariant::TotalAbs => {
            let upper = compensated_sum(
                (0..t_max).flat_map(|t| ((t + 1)..t_max).map(move |s| m[(t, s)].abs())),
            );
            (row_abs(), upper)
        }
        IndicatorVariant::RowAbs => {
            let series = row_abs();
            let scalar = compensated_sum(series.iter().copied()) / 2.0;
            (series, scalar)
        }
        IndicatorVariant::Row1Signed => {
            let mut series = Vec::with_capacity(t_max);
            let mut acc = 0.0;
            series.push(0.0);
            for s in 1..t_max {
                acc += m[(0, s)];
                series.push(acc);
            }
            (series, acc)
        }
    };
    IndicatorResult {
        enterprise: r.enterprise().to_string(),
        variant,
        series,
        scalar,
        break_periods: Vec::new(),
    }
}

/// Shortest segment either side of a candidate split.
pub fn min_segment(t_max: usize) -> usize {
    3.max(t_max.div_ceil(6))
}

/// Relative drop of the cross-block correlation mass against the pre-block
/// mass for a split at period `split` (first period of the second block).
pub fn split_contrast(r: &CorrelationMatrix, split: usize) -> f64 {
    let m = r.matrix();
    let k = split - 1;
    let t_max = r.t_max();
    let pre = compensated_sum((0..k).flat_map(|t| ((t + 1)..k).map(move |s| m[(t, s)].abs())));
    let pre_mean = pre / (k * (k - 1) / 2) as f64;
    let cross = compensated_sum((0..k).flat_map(|t| (k..t_max).map(move |s| m[(t, s)].abs())));
    let cross_mean = cross / (k * (t_max - k)) as f64;
    if pre_mean > 0.0 {
        (pre_mean - cross_mean) / pre_mean
    } else {
        0.0
    }
}

/// Period where the correlation grouping changes, if the maximal-contrast
/// split reaches `drop_threshold`.
pub fn detect_structure_change(r: &CorrelationMatrix, drop_threshold: f64) -> Vec<usize> {
    let t_max = r.t_max();
    let seg = min_segment(t_max);
    if t_max < 2 * seg {
        return Vec::new();
    }
    let mut best: Option<(usize, f64)> = None;
    for split in (seg + 1)..=(t_max - seg + 1) {
        let c = split_contrast(r, split);
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((split, c));
        }
    }
    match best {
        Some((split, c)) if c >= drop_threshold => vec![split],
        _ => Vec::new(),
    }
}

/// Surface rows `(t, s, R[t][s])` in lexicographic order.
pub fn export_surface(r: &CorrelationMatrix) -> Vec<(usize, usize, f64)> {
    let t_max = r.t_max();
    (1..=t_max)
        .flat_map(|t| (1..=t_max).map(move |s| (t, s, r.get(t, s))))
        .collect()
}

/// Reassemble a correlation matrix from surface rows.
pub fn surface_to_matrix(
    enterprise: &str,
    rows: &[(usize, usize, f64)],
    t_max: usize,
) -> Result<CorrelationMatrix> {
    if rows.len() != t_max * t_max {
        return Err(Error::Dimension {
            context: "surface rows",
            expected: t_max * t_max,
            actual: rows.len(),
        });
    }
    let mut r = DMatrix::zeros(t_max, t_max);
    for &(t, s, v) in rows {
        if t == 0 || s == 0 || t > t_max || s > t_max {
            return Err(Error::PeriodOutOfRange {
                period: t.max(s),
                t_max,
            });
        }
        r[(t - 1, s - 1)] = v;
    }
    CorrelationMatrix::from_matrix(enterprise, r)
}

/// Rows of the realized matrix chosen for analysis, in selection order.
pub fn build_parameter_matrix<S: AsRef<str>>(
    trajectory: &Trajectory,
    enterprise: &str,
    selection: &[S],
) -> Result<ParameterMatrix> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    let e = trajectory
        .enterprise(enterprise)
        .ok_or_else(|| Error::UnknownEnterprise(enterprise.to_string()))?;
    let x = &e.realized;
    let rows = selection
        .iter()
        .map(|name| {
            let name = name.as_ref();
            x.names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownParameter(name.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let values = DMatrix::from_fn(rows.len(), x.t_max(), |i, c| x.values()[(rows[i], c)]);
    let names = selection.iter().map(|s| s.as_ref().to_string()).collect();
    ParameterMatrix::new(enterprise, names, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptometrySettings {
    pub variant: IndicatorVariant,
    pub drop_threshold: f64,
    /// Parameters analysed; all of them when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Vec<String>>,
}

impl Default for AdaptometrySettings {
    fn default() -> Self {
        Self {
            variant: IndicatorVariant::TotalAbs,
            drop_threshold: 0.3,
            parameters: None,
        }
    }
}

impl AdaptometrySettings {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.drop_threshold > 0.0 && self.drop_threshold < 1.0) {
            out.push(format!(
                "drop_threshold {} outside (0, 1)",
                self.drop_threshold
            ));
        }
        if self.parameters.as_ref().is_some_and(|p| p.is_empty()) {
            out.push("parameter selection is empty".into());
        }
        out
    }
}

/// Correlation matrix and integral indicator, with breaks, for one enterprise.
pub fn analyze(
    trajectory: &Trajectory,
    enterprise: &str,
    settings: &AdaptometrySettings,
) -> Result<(CorrelationMatrix, IndicatorResult)> {
    let all;
    let selection: &[String] = match &settings.parameters {
        Some(p) => p,
        None => {
            all = trajectory
                .enterprise(enterprise)
                .ok_or_else(|| Error::UnknownEnterprise(enterprise.to_string()))?
                .realized
                .names()
                .to_vec();
            &all
        }
    };
    let x = build_parameter_matrix(trajectory, enterprise, selection)?;
    let r = correlation_matrix(&x)?;
    let mut g = integral_indicator(&r, settings.variant);
    g.break_periods = detect_structure_change(&r, settings.drop_threshold);
    Ok((r, g))
}
