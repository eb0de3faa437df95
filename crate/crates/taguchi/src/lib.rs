//! Multi-objective, derivative-free hyperparameter search via orthogonal
//! experiment design.
//!
//! The pipeline: describe a [`design_space::DesignSpace`] of factors with
//! discrete level grids, pick a strength-2 [`oa::OrthogonalArray`] from the
//! [`catalog`] (or construct one over a finite field), realize it into an
//! [`plan::ExperimentPlan`], produce [`objective::RunRecord`]s with an
//! [`evaluator`], collapse each run's measurements into a scalar index J with
//! an [`objective::NormSpec`], and run the [`analysis`] that selects the
//! per-factor optimum H*, ranks factor importance by group-mean variation
//! range, and checks a confirmation run against every orthogonal run.

pub mod analysis;
pub mod bench;
pub mod catalog;
pub mod design_space;
pub mod error;
pub mod evaluator;
pub mod gf;
pub mod oa;
pub mod objective;
pub mod plan;

pub use analysis::{analyze, group_means, select_optimum, variation_ranges, AnalysisReport};
pub use catalog::{catalog_by_name, catalog_entries, catalog_lookup};
pub use design_space::{Assignment, DesignSpace, Factor, FactorKind, LevelValue};
pub use error::{Error, Result};
pub use evaluator::{evaluate, parallel_evaluate, EvaluationOutcome, EvaluatorSpec};
pub use oa::{gf_construct, OrthogonalArray, ValidationReport};
pub use objective::{
    preset, preset_error_and_time, preset_single_error, NormKind, NormSpec, ObjectiveSpec,
    RunRecord, ScalerSpec,
};
pub use plan::{plan, ExperimentPlan, PlanRow};

/// Format a float with the given number of significant digits, decimal
/// notation. Used for CSV output so replayed and exported tables stay
/// readable without losing measurement precision.
pub fn format_significant(x: f64, digits: u32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = digits as i32 - 1 - magnitude;
    if decimals >= 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}
