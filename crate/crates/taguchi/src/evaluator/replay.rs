//! Replay of previously measured results from a CSV table.
//!
//! Format: header `run_id[,confirm],<metric_set>.<objective>,...`; one row
//! per run keyed by `run_id`, plus optional confirmation rows whose `confirm`
//! column names the objective configuration they verify (their `run_id` may
//! be blank). The consolidated CSV the runner writes uses the same layout, so
//! its output can be replayed directly.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format_significant;
use crate::objective::RunRecord;

use super::synthetic::Measurements;

#[derive(Debug, Clone, Default)]
pub struct ReplayTable {
    /// Measurements keyed by run id.
    pub runs: BTreeMap<usize, Measurements>,
    /// Confirmation measurements keyed by the `confirm` flag value.
    pub confirmations: BTreeMap<String, Measurements>,
}

impl ReplayTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let fail = |reason: String| Error::ReplayTable {
            path: path.display().to_string(),
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let headers = reader.headers()?.clone();
        let mut columns: Vec<(usize, String, String)> = Vec::new();
        let mut run_id_col = None;
        let mut confirm_col = None;
        for (i, name) in headers.iter().enumerate() {
            match name {
                "run_id" => run_id_col = Some(i),
                "confirm" => confirm_col = Some(i),
                other => match other.split_once('.') {
                    Some((metric_set, objective)) => {
                        columns.push((i, metric_set.to_string(), objective.to_string()));
                    }
                    None => {
                        return Err(fail(format!(
                            "column `{other}` is not of the form <metric_set>.<objective>"
                        )))
                    }
                },
            }
        }
        let run_id_col = run_id_col.ok_or_else(|| fail("missing `run_id` column".into()))?;
        if columns.is_empty() {
            return Err(fail("no measurement columns".into()));
        }

        let mut table = ReplayTable::default();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let mut measurements = Measurements::new();
            for (col, metric_set, objective) in &columns {
                let raw = record.get(*col).unwrap_or("");
                let value: f64 = raw.parse().map_err(|_| {
                    fail(format!(
                        "row {line}: column `{metric_set}.{objective}` value `{raw}` is not a number"
                    ))
                })?;
                measurements
                    .entry(metric_set.clone())
                    .or_default()
                    .insert(objective.clone(), value);
            }
            let confirm_flag = confirm_col
                .and_then(|c| record.get(c))
                .filter(|v| !v.is_empty());
            if let Some(flag) = confirm_flag {
                if table
                    .confirmations
                    .insert(flag.to_string(), measurements)
                    .is_some()
                {
                    return Err(fail(format!("duplicate confirmation row `{flag}`")));
                }
            } else {
                let raw_id = record.get(run_id_col).unwrap_or("");
                let run_id: usize = raw_id.parse().map_err(|_| {
                    fail(format!("row {line}: run_id `{raw_id}` is not an integer"))
                })?;
                if table.runs.insert(run_id, measurements).is_some() {
                    return Err(fail(format!("duplicate row for run {run_id}")));
                }
            }
        }
        Ok(table)
    }

    /// Measurements for one plan run.
    pub fn run(&self, run_id: usize) -> Option<&Measurements> {
        self.runs.get(&run_id)
    }

    pub fn confirmation(&self, name: &str) -> Option<&Measurements> {
        self.confirmations.get(name)
    }
}

/// Write records as a replayable CSV (plus confirmation rows, when given).
///
/// Column order: `run_id,confirm`, then every `<metric_set>.<objective>`
/// present across the records, sorted. Values carry six significant digits.
pub fn write_records_csv<W: Write>(
    writer: W,
    records: &[RunRecord],
    confirmations: &[(String, Measurements)],
) -> Result<()> {
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut collect = |measurements: &Measurements| {
        for (ms, values) in measurements {
            for objective in values.keys() {
                let key = (ms.clone(), objective.clone());
                if !keys.contains(&key) {
                    keys.push(key);
                }
            }
        }
    };
    for record in records {
        collect(&record.measurements);
    }
    for (_, measurements) in confirmations {
        collect(measurements);
    }
    keys.sort();

    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["run_id".to_string(), "confirm".to_string()];
    header.extend(keys.iter().map(|(ms, obj)| format!("{ms}.{obj}")));
    csv.write_record(&header)?;

    let row_of = |id: String, flag: String, measurements: &Measurements| {
        let mut row = vec![id, flag];
        for (ms, obj) in &keys {
            let value = measurements.get(ms).and_then(|v| v.get(obj));
            row.push(value.map(|&v| format_significant(v, 6)).unwrap_or_default());
        }
        row
    };
    for record in records {
        csv.write_record(row_of(
            record.run_id.to_string(),
            String::new(),
            &record.measurements,
        ))?;
    }
    for (flag, measurements) in confirmations {
        csv.write_record(row_of(String::new(), flag.clone(), measurements))?;
    }
    csv.flush()?;
    Ok(())
}
