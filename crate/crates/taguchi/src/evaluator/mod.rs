//! Producing run records for plan rows through pluggable backends.
//!
//! Three backends: external-command execution, replay from a results table,
//! and synthetic analytic functions. Failures are isolated per run; the
//! analysis stage refuses incomplete record sets, so a partial outcome is
//! visible, never silently averaged over.

mod replay;
mod subprocess;
mod synthetic;

pub use replay::{write_records_csv, ReplayTable};
pub use synthetic::{run_rng, Measurements, SyntheticFunction};

pub(crate) use synthetic::mix3;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{RunMetadata, RunRecord};
use crate::plan::ExperimentPlan;

/// Environment variable that overrides synthetic seeds.
pub const SEED_ENV_VAR: &str = "TAGUCHI_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorSpec {
    Subprocess {
        /// Command template with `{factor_name}` and `{run_id}` placeholders.
        command: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timeout_secs: Option<f64>,
        /// Result file template, typically `{run_id}.json`.
        #[serde(default = "default_result_path")]
        result_path: String,
    },
    Replay {
        path: PathBuf,
    },
    Synthetic {
        function: SyntheticFunction,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        noise: f64,
    },
}

fn default_result_path() -> String {
    "{run_id}.json".to_string()
}

/// One run that did not produce a usable record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFailure {
    pub run_id: usize,
    pub message: String,
}

/// Records for the runs that succeeded plus failure entries for those that
/// did not; `records` is sorted by run id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl EvaluationOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Resolve the synthetic seed, letting `TAGUCHI_SEED` override.
pub fn effective_seed(spec_seed: u64) -> Result<u64> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text.parse().map_err(|_| Error::InvalidEvaluator {
            reason: format!("{SEED_ENV_VAR}=`{text}` is not an unsigned integer"),
        }),
        Err(_) => Ok(spec_seed),
    }
}

/// Check the spec against a plan before any run starts.
pub fn validate_spec(spec: &EvaluatorSpec, plan: &ExperimentPlan) -> Result<()> {
    match spec {
        EvaluatorSpec::Subprocess {
            command,
            result_path,
            ..
        } => {
            subprocess::validate_template(command, &plan.space)?;
            subprocess::validate_template(result_path, &plan.space)
        }
        EvaluatorSpec::Replay { .. } => Ok(()),
        EvaluatorSpec::Synthetic { function, .. } => function.validate_space(&plan.space),
    }
}

fn eval_row(
    spec: &EvaluatorSpec,
    plan: &ExperimentPlan,
    index: usize,
    seed: u64,
) -> std::result::Result<RunRecord, RunFailure> {
    let row = &plan.rows[index];
    match spec {
        EvaluatorSpec::Subprocess {
            command,
            timeout_secs,
            result_path,
        } => subprocess::run_row(command, result_path, *timeout_secs, row),
        EvaluatorSpec::Synthetic {
            function, noise, ..
        } => {
            let measurements = function
                .noisy_measurements(&plan.space, &row.levels, seed, row.run_id as u64, *noise)
                .map_err(|e| RunFailure {
                    run_id: row.run_id,
                    message: e.to_string(),
                })?;
            Ok(RunRecord {
                run_id: row.run_id,
                assignment: row.assignment.clone(),
                measurements,
                metadata: RunMetadata::default(),
            })
        }
        EvaluatorSpec::Replay { .. } => unreachable!("replay is handled without per-row dispatch"),
    }
}

fn replay_records(path: &PathBuf, plan: &ExperimentPlan) -> Result<EvaluationOutcome> {
    let table = ReplayTable::load(path)?;
    let missing: Vec<usize> = plan
        .rows
        .iter()
        .map(|r| r.run_id)
        .filter(|id| table.run(*id).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingRuns { run_ids: missing });
    }
    let records = plan
        .rows
        .iter()
        .map(|row| RunRecord {
            run_id: row.run_id,
            assignment: row.assignment.clone(),
            measurements: table.run(row.run_id).expect("coverage checked").clone(),
            metadata: RunMetadata::default(),
        })
        .collect();
    Ok(EvaluationOutcome {
        records,
        failures: Vec::new(),
    })
}

/// Evaluate every plan row sequentially.
pub fn evaluate(spec: &EvaluatorSpec, plan: &ExperimentPlan) -> Result<EvaluationOutcome> {
    parallel_evaluate(spec, plan, 1)
}

/// Evaluate with up to `max_in_flight` rows running concurrently.
///
/// The result set is identical for every `max_in_flight >= 1`: per-run seeds
/// derive from the global seed plus the run id, and records are published
/// sorted by run id. Replay ignores the limit.
pub fn parallel_evaluate(
    spec: &EvaluatorSpec,
    plan: &ExperimentPlan,
    max_in_flight: usize,
) -> Result<EvaluationOutcome> {
    if max_in_flight == 0 {
        return Err(Error::InvalidEvaluator {
            reason: "max_in_flight must be at least 1".into(),
        });
    }
    validate_spec(spec, plan)?;
    if let EvaluatorSpec::Replay { path } = spec {
        return replay_records(path, plan);
    }
    let seed = match spec {
        EvaluatorSpec::Synthetic { seed, .. } => effective_seed(*seed)?,
        _ => 0,
    };

    let next = AtomicUsize::new(0);
    let workers = max_in_flight.min(plan.rows.len().max(1));
    let mut records = Vec::with_capacity(plan.rows.len());
    let mut failures = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut ok = Vec::new();
                    let mut failed = Vec::new();
                    loop {
                        let index = next.fetch_add(1, Ordering::SeqCst);
                        if index >= plan.rows.len() {
                            break;
                        }
                        match eval_row(spec, plan, index, seed) {
                            Ok(record) => ok.push(record),
                            Err(failure) => failed.push(failure),
                        }
                    }
                    (ok, failed)
                })
            })
            .collect();
        for handle in handles {
            let (ok, failed) = handle.join().expect("evaluator worker panicked");
            records.extend(ok);
            failures.extend(failed);
        }
    });
    records.sort_by_key(|r| r.run_id);
    failures.sort_by_key(|f| f.run_id);
    Ok(EvaluationOutcome { records, failures })
}

/// Evaluate a single assignment outside any plan (used for confirmation runs
/// with synthetic or subprocess backends).
pub fn evaluate_single(
    spec: &EvaluatorSpec,
    space: &crate::design_space::DesignSpace,
    levels: &[usize],
    run_id: usize,
) -> Result<RunRecord> {
    let row = crate::plan::PlanRow {
        run_id,
        levels: levels.to_vec(),
        assignment: space.realize(levels)?,
    };
    match spec {
        EvaluatorSpec::Replay { .. } => Err(Error::InvalidEvaluator {
            reason: "replay confirmations come from the table's confirm rows".into(),
        }),
        EvaluatorSpec::Subprocess {
            command,
            timeout_secs,
            result_path,
        } => {
            subprocess::validate_template(command, space)?;
            subprocess::run_row(command, result_path, *timeout_secs, &row).map_err(|f| {
                Error::InvalidEvaluator {
                    reason: format!("confirmation run failed: {}", f.message),
                }
            })
        }
        EvaluatorSpec::Synthetic {
            function,
            seed,
            noise,
        } => {
            let seed = effective_seed(*seed)?;
            let measurements =
                function.noisy_measurements(space, levels, seed, run_id as u64, *noise)?;
            Ok(RunRecord {
                run_id,
                assignment: row.assignment,
                measurements,
                metadata: RunMetadata::default(),
            })
        }
    }
}
