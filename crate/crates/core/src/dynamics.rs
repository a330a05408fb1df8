//! State recursion, GRP observation, lagged planning and full-horizon
//! simulation of a zone.
//!
//! Each enterprise carries a model state that follows
//! `x(t) = A x(t-1) + B u(t) + E v(t)`. Sanctions and distress act on top
//! of that state: the realized parameter vector is the model state with
//! export sales restricted and distressed funding lines cut. Observation
//! `y(t) = H x(t)` reads the realized vector.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    validate_zone, ControlSchedule, Disturbance, DisturbanceSchedule, MatrixSchedule,
    ParameterKind, ParameterMatrix, SystemMatrices, TimeGrid, Zone,
};
use crate::sanctions::{
    sales_multiplier, split_flow, update_distress, DistressState, SanctionsRegime,
};

/// Planning error `ε(t)`, broadcast to every parameter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Epsilon {
    pub default: f64,
    pub periods: BTreeMap<usize, f64>,
}

impl Epsilon {
    pub fn at(&self, t: usize) -> f64 {
        self.periods.get(&t).copied().unwrap_or(self.default)
    }
}

/// Lagged planning: the plan for `t` is the model forecast from the state at `t - lag`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningPolicy {
    pub lag: usize,
    pub epsilon: Epsilon,
}

impl Default for PlanningPolicy {
    fn default() -> Self {
        Self {
            lag: 1,
            epsilon: Epsilon::default(),
        }
    }
}

impl PlanningPolicy {
    pub fn violations(&self, grid: &TimeGrid) -> Vec<String> {
        let mut out = Vec::new();
        if self.lag < 1 || self.lag >= grid.t_max() {
            out.push(format!("lag {} must be in 1..{}", self.lag, grid.t_max()));
        }
        let eps = std::iter::once(&self.epsilon.default).chain(self.epsilon.periods.values());
        if eps.into_iter().any(|e| !e.is_finite()) {
            out.push("epsilon must be finite".into());
        }
        for &p in self.epsilon.periods.keys() {
            if !grid.contains(p) {
                out.push(format!("epsilon period {p} outside the grid"));
            }
        }
        out
    }
}

/// Standard deviation of seeded white noise added to each disturbance channel.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DisturbanceNoise {
    pub std_dev: [f64; 10],
}

impl DisturbanceNoise {
    pub fn is_silent(&self) -> bool {
        self.std_dev.iter().all(|&s| s == 0.0)
    }
}

/// Control, disturbance and noise inputs of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schedules {
    pub controls: ControlSchedule,
    pub disturbances: DisturbanceSchedule,
    pub noise: DisturbanceNoise,
}

/// Per-period `u(t)` and monthly `v(t)` (index 0 is period 1).
#[derive(Clone, Debug, PartialEq)]
pub struct Drivers {
    controls: Vec<DVector<f64>>,
    disturbances: Vec<DVector<f64>>,
}

impl Drivers {
    /// Resolve schedules over the grid. Noise is drawn period by period in
    /// channel order, so the draws do not depend on the scheduled values.
    pub fn build(grid: &TimeGrid, schedules: &Schedules, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut controls = Vec::with_capacity(grid.t_max());
        let mut disturbances = Vec::with_capacity(grid.t_max());
        for t in grid.periods() {
            controls.push(schedules.controls.at(t).to_dvector());
            let mut v = *schedules.disturbances.at(t);
            for d in Disturbance::ALL {
                let sd = schedules.noise.std_dev[d.index()];
                if sd != 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v.set(d, v.get(d) + sd * z);
                }
            }
            disturbances.push(v.monthly());
        }
        Self {
            controls,
            disturbances,
        }
    }

    pub fn control(&self, t: usize) -> &DVector<f64> {
        &self.controls[t - 1]
    }

    pub fn disturbance(&self, t: usize) -> &DVector<f64> {
        &self.disturbances[t - 1]
    }
}

/// Sanctions and distress modifications applied to a model state.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeEffect {
    /// Export revenue rows, counted in the production and warehouse ledger.
    pub export_rows: Vec<usize>,
    /// Export volume rows restricted alike but kept out of the ledger.
    pub export_volume_rows: Vec<usize>,
    pub export_share: f64,
    pub sales_multiplier: f64,
    pub cut_rows: Vec<usize>,
    pub cut_factor: f64,
}

/// Realized vector plus the export-channel split behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct AppliedEffect {
    pub realized: DVector<f64>,
    pub export_production: f64,
    pub export_sales: f64,
    pub warehoused: f64,
}

impl RegimeEffect {
    pub fn identity() -> Self {
        Self {
            export_rows: Vec::new(),
            export_volume_rows: Vec::new(),
            export_share: 0.0,
            sales_multiplier: 1.0,
            cut_rows: Vec::new(),
            cut_factor: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.sales_multiplier == 1.0 && self.cut_factor == 1.0
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<AppliedEffect> {
        let mut production = 0.0;
        for &i in &self.export_rows {
            production += self.export_share * x[i];
        }
        if self.is_identity() {
            return Ok(AppliedEffect {
                realized: x.clone(),
                export_production: production,
                export_sales: production,
                warehoused: 0.0,
            });
        }
        let mut realized = x.clone();
        let (mut sold_total, mut stored_total) = (0.0, 0.0);
        for &i in &self.export_rows {
            let flow = self.export_share * x[i];
            let (sold, stored) = split_flow(flow, self.sales_multiplier)?;
            realized[i] = (x[i] - flow) + sold;
            sold_total += sold;
            stored_total += stored;
        }
        for &i in &self.export_volume_rows {
            let flow = self.export_share * x[i];
            let (sold, _) = split_flow(flow, self.sales_multiplier)?;
            realized[i] = (x[i] - flow) + sold;
        }
        for &i in &self.cut_rows {
            realized[i] /= self.cut_factor;
        }
        Ok(AppliedEffect {
            realized,
            export_production: production,
            export_sales: sold_total,
            warehoused: stored_total,
        })
    }
}

fn check_dims(
    x: &DVector<f64>,
    m: &SystemMatrices,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<()> {
    let n = m.a.nrows();
    let pairs = [
        ("state vector", n, x.len()),
        ("A columns", n, m.a.ncols()),
        ("B rows", n, m.b.nrows()),
        ("B columns vs control vector", m.b.ncols(), u.len()),
        ("E rows", n, m.e.nrows()),
        ("E columns vs disturbance vector", m.e.ncols(), v.len()),
    ];
    for (context, expected, actual) in pairs {
        if expected != actual {
            return Err(Error::Dimension {
                context,
                expected,
                actual,
            });
        }
    }
    Ok(())
}

/// Model recursion `A x + B u + E v` without any regime effect.
pub fn propagate(
    x_prev: &DVector<f64>,
    mats: &SystemMatrices,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dims(x_prev, mats, u, v)?;
    Ok(&mats.a * x_prev + &mats.b * u + &mats.e * v)
}

/// One period of the recursion followed by the regime effect.
///
/// `period` only labels the overflow error.
pub fn step(
    x_prev: &DVector<f64>,
    mats: &SystemMatrices,
    u: &DVector<f64>,
    v: &DVector<f64>,
    effect: &RegimeEffect,
    period: usize,
) -> Result<DVector<f64>> {
    let x = propagate(x_prev, mats, u, v)?;
    let realized = effect.apply(&x)?.realized;
    if realized.iter().any(|z| !z.is_finite()) {
        return Err(Error::NumericalOverflow {
            enterprise: String::new(),
            period,
        });
    }
    Ok(realized)
}

/// Observation `y = H x`.
pub fn observe(h: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    if h.ncols() != x.len() {
        return Err(Error::Dimension {
            context: "observation matrix columns",
            expected: x.len(),
            actual: h.ncols(),
        });
    }
    Ok(h * x)
}

/// Planned state `x*(t)`: the model state at `t - lag` stepped forward
/// `lag` periods with the scheduled inputs, adding `ε` at every step.
///
/// `history` holds the model state by period in its columns, column 0
/// being the initial state.
pub fn plan(
    history: &DMatrix<f64>,
    matrices: &MatrixSchedule,
    drivers: &Drivers,
    policy: &PlanningPolicy,
    t: usize,
) -> Result<DVector<f64>> {
    let lag = policy.lag;
    if t <= lag || history.ncols() <= t - lag {
        return Err(Error::InsufficientHistory { period: t, lag });
    }
    let mut x = history.column(t - lag).into_owned();
    for s in (t - lag + 1)..=t {
        x = propagate(
            &x,
            matrices.at(s),
            drivers.control(s),
            drivers.disturbance(s),
        )?;
        let eps = policy.epsilon.at(s);
        if eps != 0.0 {
            x.add_scalar_mut(eps);
        }
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    SanctionsOnset,
    EmergencyBorrowing,
    Distress,
    AssetSale,
    TechnicalDefault,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::SanctionsOnset => "sanctions_onset",
            EventKind::EmergencyBorrowing => "emergency_borrowing",
            EventKind::Distress => "distress",
            EventKind::AssetSale => "asset_sale",
            EventKind::TechnicalDefault => "technical_default",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub period: usize,
    pub enterprise: String,
    pub kind: EventKind,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnterpriseTrajectory {
    pub enterprise: String,
    pub realized: ParameterMatrix,
    pub plan: ParameterMatrix,
    /// Model state by period, column 0 is the initial state.
    pub model_state: DMatrix<f64>,
    pub observation_names: Vec<String>,
    /// `K × t_max`, row 0 is the GRP contribution.
    pub observations: DMatrix<f64>,
    pub cash: Vec<f64>,
    pub debt: Vec<f64>,
    pub warehouse: Vec<f64>,
    pub export_production: Vec<f64>,
    pub export_sales: Vec<f64>,
    pub distress_from: Option<usize>,
    pub defaulted_at: Option<usize>,
}

impl EnterpriseTrajectory {
    pub fn grp(&self) -> Vec<f64> {
        self.observations.row(0).iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub zone_id: String,
    pub seed: u64,
    pub enterprises: Vec<EnterpriseTrajectory>,
    /// Zone GRP per period, thousand rubles.
    pub zone_grp: Vec<f64>,
    pub events: Vec<Event>,
    /// Sum of every realized parameter over every period and enterprise.
    pub planning_criterion: f64,
}

impl Trajectory {
    pub fn enterprise(&self, id: &str) -> Option<&EnterpriseTrajectory> {
        self.enterprises.iter().find(|e| e.enterprise == id)
    }
}

/// Run the zone over the whole grid.
pub fn simulate(
    zone: &Zone,
    grid: &TimeGrid,
    schedules: &Schedules,
    regimes: &[SanctionsRegime],
    policy: &PlanningPolicy,
    seed: u64,
) -> Result<Trajectory> {
    validate_zone(zone, grid).into_result()?;
    let drivers = Drivers::build(grid, schedules, seed);
    let t_max = grid.t_max();

    let mut enterprises = Vec::with_capacity(zone.enterprises.len());
    let mut events = Vec::new();
    for e in &zone.enterprises {
        let own: Vec<&SanctionsRegime> = regimes.iter().filter(|r| r.applies_to(&e.id)).collect();
        let distress_regime = own.iter().copied().min_by_key(|r| r.onset);
        let n = e.n();
        let exported = |memo: bool| -> Vec<usize> {
            (0..n)
                .filter(|&i| {
                    e.parameters[i].export && (e.parameters[i].kind == ParameterKind::Memo) == memo
                })
                .collect()
        };
        let (export_rows, export_volume_rows) = (exported(false), exported(true));
        let cut_rows: Vec<usize> = (0..n).filter(|&i| e.parameters[i].distress_cut).collect();
        let interest_row = e
            .parameters
            .iter()
            .position(|p| p.kind == ParameterKind::Interest);
        let signs: Vec<f64> = e.parameters.iter().map(|p| p.kind.cash_sign()).collect();
        let k = e.matrices.base.h.nrows();

        let mut model_state = DMatrix::zeros(n, t_max + 1);
        model_state.set_column(0, &e.x0);
        let mut realized_m = DMatrix::zeros(n, t_max);
        let mut plan_m = DMatrix::zeros(n, t_max);
        let mut obs = DMatrix::zeros(k, t_max);
        let mut out = EnterpriseTrajectory {
            enterprise: e.id.clone(),
            realized: ParameterMatrix::new(&e.id, e.parameter_names(), DMatrix::zeros(n, 0))?,
            plan: ParameterMatrix::new(&e.id, e.parameter_names(), DMatrix::zeros(n, 0))?,
            model_state: DMatrix::zeros(0, 0),
            observation_names: e.matrices.base.observation_names.clone(),
            observations: DMatrix::zeros(0, 0),
            cash: Vec::with_capacity(t_max),
            debt: Vec::with_capacity(t_max),
            warehouse: Vec::with_capacity(t_max),
            export_production: Vec::with_capacity(t_max),
            export_sales: Vec::with_capacity(t_max),
            distress_from: None,
            defaulted_at: None,
        };
        let overflow = |period| Error::NumericalOverflow {
            enterprise: e.id.clone(),
            period,
        };

        let mut state = DistressState::new(e.cash0, e.assets0, e.credit_rate);
        let mut x_prev = e.x0.clone();
        for t in grid.periods() {
            let mats = e.matrices.at(t);
            let x = propagate(&x_prev, mats, drivers.control(t), drivers.disturbance(t))?;
            if x.iter().any(|z| !z.is_finite()) {
                return Err(overflow(t));
            }
            let effect = RegimeEffect {
                export_rows: export_rows.clone(),
                export_volume_rows: export_volume_rows.clone(),
                export_share: e.export_share,
                sales_multiplier: own.iter().map(|r| sales_multiplier(r, t)).product(),
                cut_rows: cut_rows.clone(),
                cut_factor: match distress_regime {
                    Some(r) if state.distress_active => r.distress_cut_factor,
                    _ => 1.0,
                },
            };
            let applied = effect.apply(&x)?;
            let mut realized = applied.realized;
            state.warehouse += applied.warehoused;

            let cash_flow: f64 = realized.iter().zip(&signs).map(|(x, s)| x * s).sum();
            let step = update_distress(&state, cash_flow, distress_regime, t);
            if let Some(i) = interest_row {
                realized[i] += step.interest;
            }
            if realized.iter().any(|z| !z.is_finite()) || !step.state.cash.is_finite() {
                return Err(overflow(t));
            }

            let mut record = |kind, value| {
                events.push(Event {
                    period: t,
                    enterprise: e.id.clone(),
                    kind,
                    value,
                })
            };
            if own.iter().any(|r| r.onset == t) {
                record(EventKind::SanctionsOnset, effect.sales_multiplier);
            }
            if step.distress_triggered {
                out.distress_from = Some(t);
                record(EventKind::Distress, cash_flow);
            }
            if step.asset_sale > 0.0 {
                record(EventKind::AssetSale, step.asset_sale);
            }
            if step.borrowed > 0.0 {
                record(EventKind::EmergencyBorrowing, step.borrowed);
            }
            if step.default_triggered {
                out.defaulted_at = Some(t);
                record(EventKind::TechnicalDefault, step.state.debt);
            }
            state = step.state;

            let y = observe(&mats.h, &realized)?;
            if y.len() != k {
                return Err(Error::Dimension {
                    context: "observation rows across matrix overrides",
                    expected: k,
                    actual: y.len(),
                });
            }
            obs.set_column(t - 1, &y);
            model_state.set_column(t, &x);
            let planned = if t > policy.lag {
                plan(&model_state, &e.matrices, &drivers, policy, t)?
            } else {
                realized.clone()
            };
            if planned.iter().any(|z| !z.is_finite()) {
                return Err(overflow(t));
            }
            plan_m.set_column(t - 1, &planned);
            realized_m.set_column(t - 1, &realized);

            out.cash.push(state.cash);
            out.debt.push(state.debt);
            out.warehouse.push(state.warehouse);
            out.export_production.push(applied.export_production);
            out.export_sales.push(applied.export_sales);
            x_prev = x;
        }
        out.realized = ParameterMatrix::new(&e.id, e.parameter_names(), realized_m)?;
        out.plan = ParameterMatrix::new(&e.id, e.parameter_names(), plan_m)?;
        out.model_state = model_state;
        out.observations = obs;
        enterprises.push(out);
    }

    let zone_grp = (0..t_max)
        .map(|c| enterprises.iter().map(|e| e.observations[(0, c)]).sum())
        .collect();
    let planning_criterion = enterprises.iter().map(|e| e.realized.values().sum()).sum();

    Ok(Trajectory {
        grid: *grid,
        zone_id: zone.id.clone(),
        seed,
        enterprises,
        zone_grp,
        events,
        planning_criterion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Enterprise, Parameter};
    use proptest::prelude::*;

    fn vec(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn mats(n: usize) -> SystemMatrices {
        SystemMatrices::zeros(n)
    }

    #[test]
    fn identity_dynamics_hold_state() {
        let mut m = mats(3);
        m.a = DMatrix::identity(3, 3);
        let x = vec(&[1.0, -2.0, 3.5]);
        let out = step(
            &x,
            &m,
            &DVector::zeros(9),
            &DVector::zeros(10),
            &RegimeEffect::identity(),
            1,
        )
        .unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn owner_investment_reaches_cash_inflow_row() {
        let mut m = mats(3);
        m.e[(1, Disturbance::OwnerInvestment.index())] = 1.0;
        let mut v = DVector::zeros(10);
        v[Disturbance::OwnerInvestment.index()] = 100.0;
        let out = step(
            &DVector::zeros(3),
            &m,
            &DVector::zeros(9),
            &v,
            &RegimeEffect::identity(),
            1,
        )
        .unwrap();
        assert_eq!(out, vec(&[0.0, 100.0, 0.0]));
    }

    #[test]
    fn step_matches_dense_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = mats(4);
        m.a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        m.b = DMatrix::from_fn(4, 9, |_, _| rng.random_range(-1.0..1.0));
        m.e = DMatrix::from_fn(4, 10, |_, _| rng.random_range(-1.0..1.0));
        let x = DVector::from_fn(4, |_, _| rng.random_range(-10.0..10.0));
        let u = DVector::from_fn(9, |_, _| rng.random_range(0.0..1.0));
        let v = DVector::from_fn(10, |_, _| rng.random_range(0.0..100.0));
        let got = step(&x, &m, &u, &v, &RegimeEffect::identity(), 1).unwrap();
        for i in 0..4 {
            let mut want = 0.0;
            for j in 0..4 {
                want += m.a[(i, j)] * x[j];
            }
            for j in 0..9 {
                want += m.b[(i, j)] * u[j];
            }
            for j in 0..10 {
                want += m.e[(i, j)] * v[j];
            }
            assert!(
                (got[i] - want).abs() < 1e-12,
                "row {i}: {} vs {want}",
                got[i]
            );
        }
    }

    #[test]
    fn step_rejects_bad_dims_and_overflow() {
        let m = mats(3);
        let err = step(
            &DVector::zeros(4),
            &m,
            &DVector::zeros(9),
            &DVector::zeros(10),
            &RegimeEffect::identity(),
            1,
        );
        assert!(matches!(err, Err(Error::Dimension { .. })));
        let mut m = mats(2);
        m.a = DMatrix::from_element(2, 2, f64::MAX);
        let err = step(
            &vec(&[f64::MAX, f64::MAX]),
            &m,
            &DVector::zeros(9),
            &DVector::zeros(10),
            &RegimeEffect::identity(),
            7,
        );
        assert!(matches!(
            err,
            Err(Error::NumericalOverflow { period: 7, .. })
        ));
    }

    #[test]
    fn observe_examples() {
        let x = vec(&[1.0, 2.0, 3.0]);
        assert_eq!(
            observe(&DMatrix::from_element(1, 3, 1.0), &x).unwrap(),
            vec(&[6.0])
        );
        assert_eq!(observe(&DMatrix::zeros(1, 3), &x).unwrap(), vec(&[0.0]));
        assert!(observe(&DMatrix::zeros(1, 2), &x).is_err());
    }

    #[test]
    fn regime_effect_splits_exports_and_cuts() {
        let effect = RegimeEffect {
            export_rows: vec![0],
            export_volume_rows: Vec::new(),
            export_share: 0.5,
            sales_multiplier: 0.2,
            cut_rows: vec![1],
            cut_factor: 5.0,
        };
        let out = effect.apply(&vec(&[1000.0, 50.0, 7.0])).unwrap();
        assert!((out.realized[0] - 600.0).abs() < 1e-12);
        assert!((out.realized[1] - 10.0).abs() < 1e-12);
        assert_eq!(out.realized[2], 7.0);
        assert_eq!(out.export_production, 500.0);
        assert!((out.export_sales - 100.0).abs() < 1e-12);
        assert!((out.warehoused - 400.0).abs() < 1e-12);
    }

    fn toy_zone() -> Zone {
        let n = 3;
        let mut m = SystemMatrices::zeros(n);
        m.a = DMatrix::from_row_slice(3, 3, &[0.9, 0.0, 0.0, 0.05, 0.8, 0.0, 0.0, 0.0, 1.0]);
        m.e[(0, Disturbance::DollarRate.index())] = 2.0;
        m.e[(1, Disturbance::MaterialFlow.index())] = 10.0;
        m.b[(2, 0)] = -5.0;
        m.h = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
        Zone {
            id: "toy".into(),
            enterprises: vec![Enterprise {
                id: "e".into(),
                parameters: vec![
                    Parameter {
                        name: "sales".into(),
                        kind: ParameterKind::Income,
                        export: true,
                        distress_cut: false,
                    },
                    Parameter {
                        name: "costs".into(),
                        kind: ParameterKind::Cost,
                        export: false,
                        distress_cut: true,
                    },
                    Parameter {
                        name: "interest".into(),
                        kind: ParameterKind::Interest,
                        export: false,
                        distress_cut: false,
                    },
                ],
                x0: vec(&[1400.0, 100.0, 0.0]),
                matrices: MatrixSchedule::constant(m),
                export_share: 1.0,
                cash0: 0.0,
                assets0: 1000.0,
                credit_rate: 0.1,
            }],
            spectral_tolerance: 0.05,
        }
    }

    #[test]
    fn null_system_is_all_zero() {
        let mut zone = toy_zone();
        zone.enterprises[0].matrices = MatrixSchedule::constant(SystemMatrices::zeros(3));
        let schedules = Schedules {
            controls: ControlSchedule::default(),
            disturbances: DisturbanceSchedule::constant(
                crate::model::DisturbanceVector::from_array([
                    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
                ]),
            ),
            noise: DisturbanceNoise::default(),
        };
        let grid = TimeGrid::new(12).unwrap();
        let tr = simulate(&zone, &grid, &schedules, &[], &PlanningPolicy::default(), 0).unwrap();
        assert!(tr.enterprises[0]
            .realized
            .values()
            .iter()
            .all(|&x| x == 0.0));
        assert_eq!(tr.planning_criterion, 0.0);
        assert!(tr.zone_grp.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn plan_equals_fact_without_error() {
        let grid = TimeGrid::new(24).unwrap();
        let schedules = Schedules::default();
        for lag in [1, 3, 7] {
            let policy = PlanningPolicy {
                lag,
                ..Default::default()
            };
            let tr = simulate(&toy_zone(), &grid, &schedules, &[], &policy, 0).unwrap();
            let e = &tr.enterprises[0];
            assert_eq!(e.plan.values(), e.realized.values());
        }
    }

    #[test]
    fn plan_adds_final_step_error() {
        let grid = TimeGrid::new(24).unwrap();
        let zone = toy_zone();
        let tr = simulate(
            &zone,
            &grid,
            &Schedules::default(),
            &[],
            &PlanningPolicy::default(),
            0,
        )
        .unwrap();
        let drivers = Drivers::build(&grid, &Schedules::default(), 0);
        let mut policy = PlanningPolicy::default();
        policy.epsilon.periods.insert(10, 2.5);
        let e = &tr.enterprises[0];
        let planned = plan(
            &e.model_state,
            &zone.enterprises[0].matrices,
            &drivers,
            &policy,
            10,
        )
        .unwrap();
        let fact = e.realized.column(10);
        for i in 0..3 {
            assert!((planned[i] - fact[i] - 2.5).abs() < 1e-9);
        }
        let err = plan(
            &e.model_state,
            &zone.enterprises[0].matrices,
            &drivers,
            &policy,
            1,
        );
        assert!(matches!(
            err,
            Err(Error::InsufficientHistory { period: 1, lag: 1 })
        ));
    }

    #[test]
    fn plan_misses_sanctions_inside_window() {
        let grid = TimeGrid::new(24).unwrap();
        let regime = SanctionsRegime {
            onset: 12,
            ..Default::default()
        };
        let tr = simulate(
            &toy_zone(),
            &grid,
            &Schedules::default(),
            &[regime],
            &PlanningPolicy::default(),
            0,
        )
        .unwrap();
        let e = &tr.enterprises[0];
        let t = 14;
        assert!(e.plan.column(t)[0] > e.realized.column(t)[0]);
    }

    #[test]
    fn sanctions_drop_exports_at_onset_and_keep_prefix() {
        let grid = TimeGrid::new(30).unwrap();
        let regime = SanctionsRegime {
            onset: 20,
            ..Default::default()
        };
        let base = simulate(
            &toy_zone(),
            &grid,
            &Schedules::default(),
            &[],
            &PlanningPolicy::default(),
            3,
        )
        .unwrap();
        let hit = simulate(
            &toy_zone(),
            &grid,
            &Schedules::default(),
            &[regime],
            &PlanningPolicy::default(),
            3,
        )
        .unwrap();
        let (b, h) = (&base.enterprises[0], &hit.enterprises[0]);
        for t in 1..20 {
            assert_eq!(b.realized.column(t), h.realized.column(t));
            assert_eq!(base.zone_grp[t - 1], hit.zone_grp[t - 1]);
        }
        assert_eq!(h.realized.column(20)[0], 0.0);
        assert!(b.realized.column(20)[0] > 0.0);
        let production: f64 = h.export_production.iter().sum();
        let sold: f64 = h.export_sales.iter().sum();
        assert!((production - sold - h.warehouse.last().unwrap()).abs() < 1e-9);
        assert!(hit
            .events
            .iter()
            .any(|ev| ev.kind == EventKind::SanctionsOnset && ev.period == 20));
    }

    #[test]
    fn zone_grp_sums_enterprises() {
        let mut zone = toy_zone();
        let mut second = zone.enterprises[0].clone();
        second.id = "f".into();
        second.x0 *= 0.5;
        zone.enterprises.push(second);
        let grid = TimeGrid::new(12).unwrap();
        let tr = simulate(
            &zone,
            &grid,
            &Schedules::default(),
            &[],
            &PlanningPolicy::default(),
            0,
        )
        .unwrap();
        for t in 0..12 {
            let sum: f64 = tr.enterprises.iter().map(|e| e.observations[(0, t)]).sum();
            assert!((tr.zone_grp[t] - sum).abs() < 1e-9);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let grid = TimeGrid::new(12).unwrap();
        let mut schedules = Schedules::default();
        schedules.noise.std_dev[Disturbance::DollarRate.index()] = 3.0;
        let a = simulate(
            &toy_zone(),
            &grid,
            &schedules,
            &[],
            &PlanningPolicy::default(),
            11,
        )
        .unwrap();
        let b = simulate(
            &toy_zone(),
            &grid,
            &schedules,
            &[],
            &PlanningPolicy::default(),
            11,
        )
        .unwrap();
        let c = simulate(
            &toy_zone(),
            &grid,
            &schedules,
            &[],
            &PlanningPolicy::default(),
            12,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a.zone_grp, c.zone_grp);
    }

    #[allow(clippy::type_complexity)]
    fn arb_system() -> impl Strategy<
        Value = (
            SystemMatrices,
            Vec<f64>,
            Vec<f64>,
            Vec<f64>,
            Vec<f64>,
            Vec<f64>,
        ),
    > {
        (
            proptest::collection::vec(-1.0f64..1.0, 16),
            proptest::collection::vec(-5.0f64..5.0, 36),
            proptest::collection::vec(-5.0f64..5.0, 40),
            proptest::collection::vec(-100.0f64..100.0, 4),
            proptest::collection::vec(-100.0f64..100.0, 4),
            proptest::collection::vec(0.0f64..1.0, 9),
            proptest::collection::vec(0.0f64..1.0, 9),
        )
            .prop_map(|(a, b, e, x1, x2, u1, u2)| {
                let mut m = SystemMatrices::zeros(4);
                m.a = DMatrix::from_row_slice(4, 4, &a);
                m.b = DMatrix::from_row_slice(4, 9, &b);
                m.e = DMatrix::from_row_slice(4, 10, &e);
                (m, x1, x2, u1, u2, vec![0.5; 10])
            })
    }

    proptest! {
        #[test]
        fn step_is_affine((m, x1, x2, u, _, v) in arb_system(), alpha in 0.0f64..=1.0) {
            let (x1, x2, u, v) = (vec(&x1), vec(&x2), vec(&u), vec(&v));
            let id = RegimeEffect::identity();
            let mixed = step(&(&x1 * alpha + &x2 * (1.0 - alpha)), &m, &u, &v, &id, 1).unwrap();
            let blend = step(&x1, &m, &u, &v, &id, 1).unwrap() * alpha + step(&x2, &m, &u, &v, &id, 1).unwrap() * (1.0 - alpha);
            prop_assert!((mixed - blend).amax() < 1e-9);
        }

        #[test]
        fn controls_superpose((m, x, _, u1, u2, _) in arb_system()) {
            let (x, u1, u2) = (vec(&x), vec(&u1), vec(&u2));
            let zero_u = DVector::zeros(9);
            let zero_v = DVector::zeros(10);
            let id = RegimeEffect::identity();
            let base = step(&x, &m, &zero_u, &zero_v, &id, 1).unwrap();
            let joint = step(&x, &m, &(&u1 + &u2), &zero_v, &id, 1).unwrap() - &base;
            let sep = (step(&x, &m, &u1, &zero_v, &id, 1).unwrap() - &base) + (step(&x, &m, &u2, &zero_v, &id, 1).unwrap() - &base);
            prop_assert!((joint - sep).amax() < 1e-9);
        }
    }
}
