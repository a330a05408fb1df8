//! Discrete-time simulator of enterprises inside a special economic zone,
//! with a sanctions regime and a correlation-adaptometry analyzer.
//!
//! The usual flow is: load a [`Scenario`] with [`parse_scenario`], run it
//! through [`run_pipeline`] in one of the [`Mode`]s, then persist everything
//! with [`write_outputs`]. Every stage is also usable on its own: the
//! `examples/` directory has one program per capability.
//!
//! Units: monetary flows are in thousand rubles per month, time is counted
//! in months starting at period 1, and annual rates are converted to
//! monthly compounding rates with [`model::monthly_rate`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptometry;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod policy;
pub mod sanctions;
pub mod scenario;

pub use adaptometry::{
    analyze, correlation_matrix, detect_structure_change, integral_indicator, AdaptometrySettings,
    CorrelationMatrix, IndicatorResult, IndicatorVariant,
};
pub use dynamics::{simulate, PlanningPolicy, Schedules, Trajectory};
pub use error::{Error, Result};
pub use model::{
    Control, Disturbance, Enterprise, ParameterMatrix, SystemMatrices, TimeGrid, ValidationReport,
    Zone,
};
pub use pipeline::{run_pipeline, verify_manifest, write_outputs, Manifest, Mode, PipelineResults};
pub use policy::{damage_assessment, evaluate_measure, DamageReport, MeasureEffect, MeasureId};
pub use sanctions::SanctionsRegime;
pub use scenario::{parse_scenario, write_scenario, Scenario};
