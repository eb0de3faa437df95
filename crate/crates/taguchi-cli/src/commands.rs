//! The pipeline stages: plan, run, analyze, confirm, bench, arrays dump.
//!
//! Stage outputs land in the configured output directory:
//!
//! ```text
//! plan.csv, plan.json
//! records/run_###.json      one per completed run
//! records/confirm_<name>.json   replayed confirmation measurements
//! records.csv               consolidated, replayable
//! analysis_<name>.{json,txt}
//! confirm_<name>.json
//! bench.csv
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use taguchi::analysis::{analyze, AnalysisReport};
use taguchi::bench::{bench, BenchConfig, BenchReport};
use taguchi::design_space::DesignSpace;
use taguchi::evaluator::{
    evaluate_single, parallel_evaluate, write_records_csv, EvaluatorSpec, Measurements,
    ReplayTable, SyntheticFunction,
};
use taguchi::objective::{preset, NormSpec, RunRecord};
use taguchi::plan::{plan, ExperimentPlan};

use crate::config::ProjectConfig;
use crate::CliError;

fn record_path(output_dir: &Path, run_id: usize) -> PathBuf {
    output_dir
        .join("records")
        .join(format!("run_{run_id:03}.json"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Validation(format!("cannot write `{}`: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Validation(format!("cannot create `{}`: {e}", dir.display())))
}

/// Generate plan.csv and plan.json; returns the summary line
/// `R=<runs>, N=<grid>, saved=<difference>`.
pub fn cmd_plan(config: &ProjectConfig) -> Result<String, CliError> {
    let experiment = plan(&config.space, &config.array)?;
    ensure_dir(&config.output_dir)?;
    let csv_path = config.output_dir.join("plan.csv");
    let mut csv_bytes = Vec::new();
    experiment.write_csv(&mut csv_bytes)?;
    fs::write(&csv_path, csv_bytes)
        .map_err(|e| CliError::Validation(format!("cannot write `{}`: {e}", csv_path.display())))?;
    write_json(&config.output_dir.join("plan.json"), &experiment)?;

    let runs = experiment.run_count() as u64;
    let grid = config.space.grid_size()?;
    Ok(format!(
        "R={runs}, N={grid}, saved={}",
        grid.saturating_sub(runs)
    ))
}

fn load_plan(output_dir: &Path) -> Result<ExperimentPlan, CliError> {
    let path = output_dir.join("plan.json");
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "`{}` not found; run `taguchi plan` first",
            path.display()
        )));
    }
    Ok(ExperimentPlan::from_json_file(&path)?)
}

/// Confirmation measurements held until the analyze/confirm stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfirmationMeasurements {
    pub name: String,
    pub measurements: Measurements,
}

pub struct RunSummary {
    pub executed: usize,
    pub skipped: usize,
    pub failures: Vec<(usize, String)>,
    pub confirmations: usize,
}

/// Evaluate plan rows that have no record yet (all of them with `force`),
/// then write per-run JSONs and the consolidated CSV.
pub fn cmd_run(
    config: &ProjectConfig,
    force: bool,
    max_in_flight: usize,
) -> Result<RunSummary, CliError> {
    let experiment = load_plan(&config.output_dir)?;
    if experiment.rows.is_empty() {
        return Err(CliError::Validation("plan has no runs".into()));
    }
    ensure_dir(&config.output_dir.join("records"))?;

    let pending: Vec<_> = experiment
        .rows
        .iter()
        .filter(|row| force || !record_path(&config.output_dir, row.run_id).exists())
        .cloned()
        .collect();
    let skipped = experiment.rows.len() - pending.len();

    let mut failures = Vec::new();
    if !pending.is_empty() {
        let sub_plan = ExperimentPlan {
            space: experiment.space.clone(),
            array_name: experiment.array_name.clone(),
            rows: pending,
        };
        let outcome = parallel_evaluate(&config.evaluator, &sub_plan, max_in_flight).map_err(
            |e| match e {
                taguchi::Error::MissingRuns { .. } | taguchi::Error::ReplayTable { .. } => {
                    CliError::Evaluator(e.to_string())
                }
                other => CliError::from(other),
            },
        )?;
        for record in &outcome.records {
            write_json(&record_path(&config.output_dir, record.run_id), record)?;
        }
        failures = outcome
            .failures
            .into_iter()
            .map(|f| (f.run_id, f.message))
            .collect();
    }

    // Replay tables may carry confirmation rows; persist them for later stages.
    let mut confirmations = Vec::new();
    if let EvaluatorSpec::Replay { path } = &config.evaluator {
        let table = ReplayTable::load(path)?;
        for (name, measurements) in &table.confirmations {
            let doc = ConfirmationMeasurements {
                name: name.clone(),
                measurements: measurements.clone(),
            };
            write_json(
                &config
                    .output_dir
                    .join("records")
                    .join(format!("confirm_{name}.json")),
                &doc,
            )?;
            confirmations.push((name.clone(), measurements.clone()));
        }
    }

    // Consolidated CSV over everything recorded so far.
    let records = load_records(&config.output_dir, &experiment)?;
    let mut csv_bytes = Vec::new();
    write_records_csv(&mut csv_bytes, &records, &confirmations)?;
    let csv_path = config.output_dir.join("records.csv");
    fs::write(&csv_path, csv_bytes)
        .map_err(|e| CliError::Validation(format!("cannot write `{}`: {e}", csv_path.display())))?;

    let executed = experiment.rows.len() - skipped - failures.len();
    let summary = RunSummary {
        executed,
        skipped,
        failures,
        confirmations: confirmations.len(),
    };
    if !summary.failures.is_empty() {
        let detail = summary
            .failures
            .iter()
            .map(|(id, msg)| format!("run {id}: {msg}"))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(CliError::Evaluator(format!(
            "{} of {} runs failed:\n{detail}",
            summary.failures.len(),
            experiment.rows.len()
        )));
    }
    Ok(summary)
}

/// All available per-run records, in run-id order (gaps allowed here; the
/// analysis itself rejects incomplete sets).
fn load_records(
    output_dir: &Path,
    experiment: &ExperimentPlan,
) -> Result<Vec<RunRecord>, CliError> {
    let mut records = Vec::new();
    for row in &experiment.rows {
        let path = record_path(output_dir, row.run_id);
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Validation(format!("cannot read `{}`: {e}", path.display())))?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("`{}` is not a record: {e}", path.display()))
        })?;
        records.push(record);
    }
    Ok(records)
}

fn missing_run_ids(experiment: &ExperimentPlan, records: &[RunRecord]) -> Vec<usize> {
    experiment
        .rows
        .iter()
        .map(|r| r.run_id)
        .filter(|id| !records.iter().any(|rec| rec.run_id == *id))
        .collect()
}

/// Analyze every configured objective; writes analysis_<name>.{json,txt}.
pub fn cmd_analyze(config: &ProjectConfig) -> Result<Vec<(String, AnalysisReport)>, CliError> {
    let experiment = load_plan(&config.output_dir)?;
    let records = load_records(&config.output_dir, &experiment)?;
    let missing = missing_run_ids(&experiment, &records);
    if !missing.is_empty() {
        return Err(CliError::Incomplete(format!(
            "records missing for runs {missing:?}; run `taguchi run` to completion first"
        )));
    }
    let mut reports = Vec::new();
    for (name, norm) in &config.norms {
        let report = analyze(
            &experiment,
            &records,
            norm,
            &config.metric_sets,
            &config.selection_metric_set,
        )?;
        write_json(
            &config.output_dir.join(format!("analysis_{name}.json")),
            &report,
        )?;
        let txt_path = config.output_dir.join(format!("analysis_{name}.txt"));
        fs::write(&txt_path, report.render_text()).map_err(|e| {
            CliError::Validation(format!("cannot write `{}`: {e}", txt_path.display()))
        })?;
        reports.push((name.clone(), report));
    }
    Ok(reports)
}

fn load_analysis(output_dir: &Path, name: &str) -> Result<AnalysisReport, CliError> {
    let path = output_dir.join(format!("analysis_{name}.json"));
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "`{}` not found; run `taguchi analyze` first",
            path.display()
        )));
    }
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read `{}`: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("`{}` is not a report: {e}", path.display())))
}

/// Confirm H* for every configured objective. The confirmation record comes
/// from `--record`, from the replay table's confirm rows, or from running the
/// evaluator at H*.
pub fn cmd_confirm(
    config: &ProjectConfig,
    record_override: Option<&Path>,
) -> Result<Vec<(String, AnalysisReport)>, CliError> {
    let experiment = load_plan(&config.output_dir)?;
    let mut results = Vec::new();
    for (name, norm) in &config.norms {
        let mut report = load_analysis(&config.output_dir, name)?;
        let record = match record_override {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read `{}`: {e}", path.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Validation(format!("`{}` is not a record: {e}", path.display()))
                })?
            }
            None => confirmation_record(config, &experiment, &report, name)?,
        };
        report.confirm(&record, norm)?;
        write_json(
            &config.output_dir.join(format!("confirm_{name}.json")),
            report.confirmation.as_ref().expect("confirm just ran"),
        )?;
        // Keep the analysis document in sync with its confirmation.
        write_json(
            &config.output_dir.join(format!("analysis_{name}.json")),
            &report,
        )?;
        results.push((name.clone(), report));
    }
    Ok(results)
}

fn confirmation_record(
    config: &ProjectConfig,
    experiment: &ExperimentPlan,
    report: &AnalysisReport,
    name: &str,
) -> Result<RunRecord, CliError> {
    match &config.evaluator {
        EvaluatorSpec::Replay { .. } => {
            let path = config
                .output_dir
                .join("records")
                .join(format!("confirm_{name}.json"));
            if !path.exists() {
                return Err(CliError::Validation(format!(
                    "no confirmation row `{name}` was replayed; expected `{}`",
                    path.display()
                )));
            }
            let text = fs::read_to_string(&path).map_err(|e| {
                CliError::Validation(format!("cannot read `{}`: {e}", path.display()))
            })?;
            let doc: ConfirmationMeasurements = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("`{}`: {e}", path.display())))?;
            Ok(RunRecord {
                run_id: experiment.run_count(),
                assignment: report.optimum_assignment(),
                measurements: doc.measurements,
                metadata: Default::default(),
            })
        }
        spec => Ok(evaluate_single(
            spec,
            &config.space,
            &report.optimum_indices,
            experiment.run_count(),
        )?),
    }
}

pub struct BenchArgs {
    pub space: PathBuf,
    pub function: String,
    pub trials: usize,
    pub seed: u64,
    pub noise: f64,
    pub budgets: Vec<usize>,
    pub preset: String,
    pub alpha_error: Option<f64>,
    pub exhaustive_cap: u64,
    pub out: PathBuf,
}

/// Compare orthogonal selection, random search and the exhaustive optimum on
/// a synthetic function; writes the per-trial CSV and returns the report.
pub fn cmd_bench(args: &BenchArgs) -> Result<(BenchReport, String), CliError> {
    let space = DesignSpace::from_json_file(&args.space)
        .map_err(|e| CliError::Validation(format!("design space: {e}")))?;
    let norm: NormSpec = preset(&args.preset, args.alpha_error)?;
    let config = BenchConfig {
        function: SyntheticFunction::parse(&args.function)?,
        norm,
        seed: args.seed,
        noise: args.noise,
        trials: args.trials,
        budgets: args.budgets.clone(),
        exhaustive_cap: args.exhaustive_cap,
    };
    let report = bench(&space, &config)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let mut csv_bytes = Vec::new();
    report.write_csv(&mut csv_bytes)?;
    fs::write(&args.out, csv_bytes)
        .map_err(|e| CliError::Validation(format!("cannot write `{}`: {e}", args.out.display())))?;

    let mut summary = format!(
        "grid={}, orthogonal runs={}, trials={}\n",
        report.grid_size, report.taguchi_runs, report.trials
    );
    let mut budgets: BTreeMap<(String, usize), ()> = BTreeMap::new();
    for row in &report.rows {
        budgets.insert((row.strategy.clone(), row.budget), ());
    }
    for (strategy, budget) in budgets.keys() {
        if let Some(mean) = report.mean_regret(strategy, *budget) {
            summary.push_str(&format!(
                "{strategy:>10} budget={budget:<6} mean regret={}\n",
                taguchi::format_significant(mean, 6)
            ));
        }
    }
    Ok((report, summary))
}

/// Render catalog arrays (all, or one by name) as text.
pub fn cmd_arrays_dump(name: Option<&str>) -> Result<String, CliError> {
    let entries = match name {
        Some(name) => vec![taguchi::catalog::catalog_by_name(name)?],
        None => taguchi::catalog::catalog_entries(),
    };
    let mut out = String::new();
    for oa in entries {
        out.push_str(&format!(
            "{}: runs={}, columns={}, levels={}\n",
            oa.name(),
            oa.runs(),
            oa.columns(),
            oa.levels()
        ));
        for row in oa.rows() {
            let line = row
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str("  ");
            out.push_str(&line);
            out.push('\n');
        }
    }
    Ok(out)
}
