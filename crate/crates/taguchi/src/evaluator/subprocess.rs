//! External-command evaluation backend.
//!
//! The command template may reference `{run_id}` and any `{factor_name}` of
//! the space; the command must write a JSON document
//! `{"<metric_set>": {"<objective>": value, ...}, ...}` to the result path
//! (itself a template, typically `{run_id}.json`). Stdout is ignored.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::design_space::DesignSpace;
use crate::error::{Error, Result};
use crate::objective::{RunMetadata, RunRecord};
use crate::plan::PlanRow;

use super::synthetic::Measurements;
use super::RunFailure;

/// Substitute `{placeholder}` tokens from the plan row.
fn substitute(template: &str, row: &PlanRow) -> String {
    let mut out = template.replace("{run_id}", &row.run_id.to_string());
    for (name, value) in &row.assignment {
        out = out.replace(&format!("{{{name}}}"), &value.to_string());
    }
    out
}

/// Collect `{name}` placeholder tokens from a template. Only
/// identifier-shaped tokens count, so shell commands may contain literal
/// braces (JSON payloads, awk blocks) without tripping validation.
fn placeholders(template: &str) -> Vec<&str> {
    let is_ident = |s: &str| {
        !s.is_empty()
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !s.starts_with(|c: char| c.is_ascii_digit())
    };
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        rest = &rest[start + 1..];
        match rest.find(['{', '}']) {
            Some(end) if rest[end..].starts_with('}') && is_ident(&rest[..end]) => {
                out.push(&rest[..end]);
                rest = &rest[end + 1..];
            }
            Some(end) => rest = rest[end..].strip_prefix('}').unwrap_or(&rest[end..]),
            None => break,
        }
    }
    out
}

/// Reject templates that reference anything but factor names and `run_id`.
pub fn validate_template(template: &str, space: &DesignSpace) -> Result<()> {
    for name in placeholders(template) {
        if name != "run_id" && space.factor(name).is_err() {
            return Err(Error::InvalidEvaluator {
                reason: format!("command template references unknown placeholder `{{{name}}}`"),
            });
        }
    }
    Ok(())
}

/// Run one plan row to completion, with an optional timeout.
pub fn run_row(
    command_template: &str,
    result_path_template: &str,
    timeout_secs: Option<f64>,
    row: &PlanRow,
) -> std::result::Result<RunRecord, RunFailure> {
    let fail = |message: String| RunFailure {
        run_id: row.run_id,
        message,
    };
    let command = substitute(command_template, row);
    let result_path = substitute(result_path_template, row);

    let started = Instant::now();
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| fail(format!("failed to spawn `{command}`: {e}")))?;

    let deadline = timeout_secs.map(|s| started + Duration::from_secs_f64(s));
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if let Some(deadline) = deadline {
                    if Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Err(fail(format!(
                            "timed out after {:.1}s: `{command}`",
                            timeout_secs.unwrap_or_default()
                        )));
                    }
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(fail(format!("wait failed: {e}"))),
        }
    };
    let wall_time = started.elapsed().as_secs_f64();

    if !status.success() {
        return Err(fail(format!(
            "`{command}` exited with status {}",
            status
                .code()
                .map_or("signal".to_string(), |c| c.to_string())
        )));
    }
    let text = std::fs::read_to_string(Path::new(&result_path))
        .map_err(|e| fail(format!("cannot read result file `{result_path}`: {e}")))?;
    let measurements: Measurements = serde_json::from_str(&text)
        .map_err(|e| fail(format!("result file `{result_path}` is not valid: {e}")))?;

    Ok(RunRecord {
        run_id: row.run_id,
        assignment: row.assignment.clone(),
        measurements,
        metadata: RunMetadata {
            wall_time_secs: Some(wall_time),
            exit_status: status.code(),
            notes: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design_space::{DesignSpace, Factor};
    use crate::plan::plan;

    fn tiny_plan() -> crate::plan::ExperimentPlan {
        let space = DesignSpace::new(vec![Factor::numeric("x", &[1.0, 2.0]).unwrap()]).unwrap();
        let array = crate::catalog::catalog_lookup(1, 2).unwrap();
        plan(&space, &array).unwrap()
    }

    #[test]
    fn placeholder_extraction_and_validation() {
        assert_eq!(placeholders("run {x} id {run_id}"), vec!["x", "run_id"]);
        let space = DesignSpace::new(vec![Factor::numeric("x", &[1.0]).unwrap()]).unwrap();
        assert!(validate_template("echo {x} {run_id}", &space).is_ok());
        assert!(matches!(
            validate_template("echo {y}", &space),
            Err(Error::InvalidEvaluator { .. })
        ));
    }

    #[test]
    fn echo_evaluator_round_trips_inputs() {
        let plan = tiny_plan();
        let dir = tempfile::tempdir().unwrap();
        let result = dir.path().join("{run_id}.json");
        let command = format!(
            "printf '{{\"train\": {{\"error\": %s, \"time\": 1.0}}}}' {{x}} > {}",
            result.display()
        );
        for row in &plan.rows {
            let record = run_row(&command, &result.to_string_lossy(), Some(10.0), row).unwrap();
            assert_eq!(
                record.measurements["train"]["error"],
                row.assignment["x"].as_f64().unwrap()
            );
            assert_eq!(record.metadata.exit_status, Some(0));
            assert!(record.metadata.wall_time_secs.is_some());
        }
    }

    #[test]
    fn nonzero_exit_and_missing_output_fail_per_run() {
        let plan = tiny_plan();
        let row = &plan.rows[0];
        let err = run_row("exit 3", "/nonexistent/{run_id}.json", Some(5.0), row).unwrap_err();
        assert!(err.message.contains("status 3"), "{}", err.message);

        let err = run_row("true", "/nonexistent/{run_id}.json", Some(5.0), row).unwrap_err();
        assert!(err.message.contains("result file"), "{}", err.message);
    }

    #[test]
    fn timeout_kills_the_run() {
        let plan = tiny_plan();
        let row = &plan.rows[0];
        let started = std::time::Instant::now();
        let err = run_row("sleep 30", "out.json", Some(0.2), row).unwrap_err();
        assert!(err.message.contains("timed out"), "{}", err.message);
        assert!(started.elapsed() < Duration::from_secs(5));
    }
}
