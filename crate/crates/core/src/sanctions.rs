//! Export restriction, sales recovery, warehouse build-up and the
//! cash-distress path that ends in technical default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{monthly_rate, TimeGrid};

/// Sanctions imposed on the export channel from an onset period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SanctionsRegime {
    /// Enterprise the regime targets; `None` hits every resident.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub onset: usize,
    /// Fraction of export flow blocked.
    pub severity: f64,
    pub recovery_months: usize,
    /// Sales level reached after recovery, as a fraction of pre-sanction exports.
    pub recovered_fraction: f64,
    /// Jump straight to the recovered level at onset instead of ramping from zero.
    pub instant_floor: bool,
    /// Annual premium over the enterprise credit rate on emergency borrowing.
    pub borrow_premium: f64,
    /// Consecutive cash-negative months that constitute technical default.
    pub default_horizon: usize,
    /// Divisor on production and administrative funding once distress sets in.
    pub distress_cut_factor: f64,
    /// Share of fixed assets sold for cash when distress sets in.
    pub asset_sale_fraction: f64,
    /// Monthly carrying cost as a fraction of warehouse value.
    pub warehouse_carrying_rate: f64,
}

impl Default for SanctionsRegime {
    fn default() -> Self {
        Self {
            target: None,
            onset: 37,
            severity: 0.8,
            recovery_months: 3,
            recovered_fraction: 0.2,
            instant_floor: false,
            borrow_premium: 0.10,
            default_horizon: 12,
            distress_cut_factor: 5.0,
            asset_sale_fraction: 0.05,
            warehouse_carrying_rate: 0.0,
        }
    }
}

impl SanctionsRegime {
    pub fn applies_to(&self, enterprise: &str) -> bool {
        self.target.as_deref().is_none_or(|t| t == enterprise)
    }

    pub fn is_active(&self, t: usize) -> bool {
        t >= self.onset
    }

    /// Sales level the recovery converges to. Recovery cannot exceed the
    /// unblocked share of the flow.
    pub fn recovered_level(&self) -> f64 {
        self.recovered_fraction.min(1.0 - self.severity)
    }

    pub fn violations(&self, grid: &TimeGrid) -> Vec<String> {
        let mut out = Vec::new();
        if !grid.contains(self.onset) {
            out.push(format!("onset {} outside 1..={}", self.onset, grid.t_max()));
        }
        for (name, x) in [
            ("severity", self.severity),
            ("recovered_fraction", self.recovered_fraction),
            ("asset_sale_fraction", self.asset_sale_fraction),
        ] {
            if !(0.0..=1.0).contains(&x) {
                out.push(format!("{name} = {x} outside [0, 1]"));
            }
        }
        if !(self.distress_cut_factor >= 1.0) {
            out.push(format!(
                "distress_cut_factor = {} must be at least 1",
                self.distress_cut_factor
            ));
        }
        if self.default_horizon == 0 {
            out.push("default_horizon must be at least 1".into());
        }
        for (name, x) in [
            ("borrow_premium", self.borrow_premium),
            ("warehouse_carrying_rate", self.warehouse_carrying_rate),
        ] {
            if !(x >= 0.0) || !x.is_finite() {
                out.push(format!("{name} = {x} must be a non-negative number"));
            }
        }
        out
    }
}

/// Fraction of the export flow that can still be sold at period `t`.
///
/// One before onset. At onset sales stop, then recover linearly to
/// [`SanctionsRegime::recovered_level`] over `recovery_months` periods.
pub fn sales_multiplier(regime: &SanctionsRegime, t: usize) -> f64 {
    if t < regime.onset {
        return 1.0;
    }
    let level = regime.recovered_level();
    if regime.instant_floor || regime.recovery_months == 0 {
        return level;
    }
    let elapsed = (t - regime.onset) as f64;
    let months = regime.recovery_months as f64;
    level * (elapsed / months).min(1.0)
}

/// Split an export flow into realized sales and the part shipped to the warehouse.
pub fn split_flow(flow: f64, multiplier: f64) -> Result<(f64, f64)> {
    if !(flow >= 0.0) {
        return Err(Error::NegativeFlow(flow));
    }
    let realized = flow * multiplier;
    Ok((realized, flow - realized))
}

pub fn apply_regime(flow: f64, regime: &SanctionsRegime, t: usize) -> Result<(f64, f64)> {
    split_flow(flow, sales_multiplier(regime, t))
}

/// Cash position and distress bookkeeping of one enterprise.
#[derive(Clone, Debug, PartialEq)]
pub struct DistressState {
    pub cash: f64,
    /// Value of unsold output.
    pub warehouse: f64,
    /// Outstanding emergency credit.
    pub debt: f64,
    pub assets: f64,
    /// Annual base credit rate.
    pub credit_rate: f64,
    pub consecutive_negative: usize,
    pub distress_active: bool,
    pub defaulted_at: Option<usize>,
}

impl DistressState {
    pub fn new(cash: f64, assets: f64, credit_rate: f64) -> Self {
        Self {
            cash,
            warehouse: 0.0,
            debt: 0.0,
            assets,
            credit_rate,
            consecutive_negative: 0,
            distress_active: false,
            defaulted_at: None,
        }
    }
}

/// What happened to the cash account in one period.
#[derive(Clone, Debug, PartialEq)]
pub struct DistressOutcome {
    pub state: DistressState,
    /// Interest charged on outstanding emergency credit.
    pub interest: f64,
    pub carrying_cost: f64,
    pub borrowed: f64,
    pub asset_sale: f64,
    pub distress_triggered: bool,
    pub default_triggered: bool,
}

/// Advance the cash account by one period.
///
/// Interest on existing emergency debt (at the credit rate, plus the
/// regime's premium once it is active) and warehouse carrying cost are
/// charged on top of `cash_flow`. A shortfall is covered by new emergency
/// credit and counts as a cash-negative month. The first cash-negative
/// month at or after onset triggers distress and a one-off asset sale.
pub fn update_distress(
    state: &DistressState,
    cash_flow: f64,
    regime: Option<&SanctionsRegime>,
    t: usize,
) -> DistressOutcome {
    let mut s = state.clone();
    let active = regime.is_some_and(|r| r.is_active(t));
    let annual = s.credit_rate + regime.filter(|_| active).map_or(0.0, |r| r.borrow_premium);
    let interest = s.debt * monthly_rate(annual);
    let carrying_cost = regime.map_or(0.0, |r| r.warehouse_carrying_rate) * s.warehouse;

    s.cash += cash_flow - interest - carrying_cost;

    let mut borrowed = 0.0;
    let mut asset_sale = 0.0;
    let mut distress_triggered = false;
    let mut default_triggered = false;

    if s.cash < 0.0 {
        s.consecutive_negative += 1;
        if let Some(r) = regime.filter(|_| active) {
            if !s.distress_active {
                s.distress_active = true;
                distress_triggered = true;
                asset_sale = r.asset_sale_fraction * s.assets;
                s.assets -= asset_sale;
                s.cash += asset_sale;
            }
        }
        if s.cash < 0.0 {
            borrowed = -s.cash;
            s.debt += borrowed;
            s.cash = 0.0;
        }
    } else {
        s.consecutive_negative = 0;
    }

    if let Some(r) = regime {
        if s.defaulted_at.is_none() && t > r.onset && s.consecutive_negative >= r.default_horizon {
            s.defaulted_at = Some(t);
            default_triggered = true;
        }
    }

    DistressOutcome {
        state: s,
        interest,
        carrying_cost,
        borrowed,
        asset_sale,
        distress_triggered,
        default_triggered,
    }
}
