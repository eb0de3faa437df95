//! Main-effects analysis: per-factor per-level group means of J, optimum
//! selection, variation-range importance ranking, and confirmation-run
//! comparison.
//!
//! Group means are always recomputed from raw measurements rather than read
//! from any intermediate column, and ties are broken toward the lowest level
//! index with an explicit flag.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::design_space::LevelValue;
use crate::error::{Error, Result};
use crate::objective::{NormSpec, RunRecord};
use crate::plan::ExperimentPlan;

/// One level's group within a factor: its member runs and their mean J.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupRow {
    pub level_index: usize,
    pub level: LevelValue,
    pub run_ids: Vec<usize>,
    pub mean: f64,
}

/// All level groups of one factor for one metric set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupTable {
    pub factor: String,
    pub rows: Vec<GroupRow>,
}

/// Selected level for one factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimumEntry {
    pub factor: String,
    pub level_index: usize,
    pub level: LevelValue,
    pub group_mean: f64,
    pub tied: bool,
}

/// Variation range and importance rank for one factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RangeEntry {
    pub factor: String,
    pub range: f64,
    pub rank: usize,
    pub tied: bool,
}

/// Confirmation-run comparison against every orthogonal run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Confirmation {
    /// J of the confirmation run per metric set.
    pub j: BTreeMap<String, f64>,
    /// Whether the confirmation strictly beats all orthogonal runs.
    pub beats_all: BTreeMap<String, bool>,
    /// Runs whose J equals the confirmation J (ties, not losses).
    pub tied_runs: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub selection_metric_set: String,
    pub metric_sets: Vec<String>,
    /// Run ids in the order the `j_values` vectors use.
    pub run_ids: Vec<usize>,
    /// Per-run J values per metric set, aligned with `run_ids`.
    pub j_values: BTreeMap<String, Vec<f64>>,
    /// Group tables per metric set, factors in design-space order.
    pub group_tables: BTreeMap<String, Vec<GroupTable>>,
    /// Optimum selected on the selection metric set.
    pub optimum: Vec<OptimumEntry>,
    pub optimum_indices: Vec<usize>,
    /// Ranges and ranks on the selection metric set.
    pub ranges: Vec<RangeEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confirmation: Option<Confirmation>,
}

/// Check that `records` covers the plan exactly once and return them in
/// run-id order.
fn ordered_records<'a>(
    plan: &ExperimentPlan,
    records: &'a [RunRecord],
) -> Result<Vec<&'a RunRecord>> {
    let mut by_id: BTreeMap<usize, Vec<&RunRecord>> = BTreeMap::new();
    for record in records {
        if plan.row(record.run_id).is_none() {
            return Err(Error::UnplannedRun {
                run_id: record.run_id,
            });
        }
        by_id.entry(record.run_id).or_default().push(record);
    }
    let duplicates: Vec<usize> = by_id
        .iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(&id, _)| id)
        .collect();
    if !duplicates.is_empty() {
        return Err(Error::DuplicateRuns {
            run_ids: duplicates,
        });
    }
    let missing: Vec<usize> = plan
        .rows
        .iter()
        .map(|r| r.run_id)
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingRuns { run_ids: missing });
    }
    Ok(by_id.into_values().map(|mut v| v.pop().unwrap()).collect())
}

/// Per-factor group means of J on one metric set.
///
/// For factor k and level l the group holds exactly the runs whose plan row
/// has level l in column k; balance of the underlying array makes every group
/// the same size.
pub fn group_means(
    plan: &ExperimentPlan,
    records: &[RunRecord],
    norm: &NormSpec,
    metric_set: &str,
) -> Result<Vec<GroupTable>> {
    let ordered = ordered_records(plan, records)?;
    let j = ordered
        .iter()
        .map(|r| Ok((r.run_id, r.aggregate(norm, metric_set)?)))
        .collect::<Result<BTreeMap<usize, f64>>>()?;
    Ok(group_means_of(plan, &j))
}

/// Group means when the per-run J values are already computed.
fn group_means_of(plan: &ExperimentPlan, j: &BTreeMap<usize, f64>) -> Vec<GroupTable> {
    let mut tables = Vec::with_capacity(plan.space.factor_count());
    for (k, factor) in plan.space.factors().iter().enumerate() {
        let mut rows = Vec::with_capacity(factor.level_count());
        for level_index in 1..=factor.level_count() {
            let run_ids: Vec<usize> = plan
                .rows
                .iter()
                .filter(|row| row.levels[k] == level_index)
                .map(|row| row.run_id)
                .collect();
            let mean = if run_ids.is_empty() {
                f64::NAN
            } else {
                run_ids.iter().map(|&id| j[&id]).sum::<f64>() / run_ids.len() as f64
            };
            rows.push(GroupRow {
                level_index,
                level: factor.levels()[level_index - 1].clone(),
                run_ids,
                mean,
            });
        }
        tables.push(GroupTable {
            factor: factor.name().to_string(),
            rows,
        });
    }
    tables
}

/// Per factor, the level with the minimal group mean. Ties break toward the
/// lowest level index and are flagged.
pub fn select_optimum(tables: &[GroupTable]) -> Vec<OptimumEntry> {
    tables
        .iter()
        .map(|table| {
            let best = table
                .rows
                .iter()
                .min_by(|a, b| a.mean.total_cmp(&b.mean))
                .expect("group table has at least one level");
            let tied = table.rows.iter().filter(|r| r.mean == best.mean).count() > 1;
            let first_best = table
                .rows
                .iter()
                .find(|r| r.mean == best.mean)
                .expect("minimum exists");
            OptimumEntry {
                factor: table.factor.clone(),
                level_index: first_best.level_index,
                level: first_best.level.clone(),
                group_mean: first_best.mean,
                tied,
            }
        })
        .collect()
}

/// Max-minus-min of each factor's group means, ranked descending (rank 1 is
/// the widest range, i.e. the most important factor). Equal ranges share a
/// tie flag and take consecutive ranks in factor order.
pub fn variation_ranges(tables: &[GroupTable]) -> Vec<RangeEntry> {
    let ranges: Vec<f64> = tables
        .iter()
        .map(|t| {
            let min = t.rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
            let max = t
                .rows
                .iter()
                .map(|r| r.mean)
                .fold(f64::NEG_INFINITY, f64::max);
            max - min
        })
        .collect();
    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.sort_by(|&a, &b| ranges[b].total_cmp(&ranges[a]).then(a.cmp(&b)));
    let mut entries: Vec<Option<RangeEntry>> = vec![None; tables.len()];
    for (rank0, &idx) in order.iter().enumerate() {
        let tied = ranges
            .iter()
            .enumerate()
            .any(|(j, &r)| j != idx && r == ranges[idx]);
        entries[idx] = Some(RangeEntry {
            factor: tables[idx].factor.clone(),
            range: ranges[idx],
            rank: rank0 + 1,
            tied,
        });
    }
    entries.into_iter().map(|e| e.expect("filled")).collect()
}

/// Run Steps 6-7 for every metric set, selecting on `selection_metric_set`.
pub fn analyze(
    plan: &ExperimentPlan,
    records: &[RunRecord],
    norm: &NormSpec,
    metric_sets: &[String],
    selection_metric_set: &str,
) -> Result<AnalysisReport> {
    norm.validate()?;
    if !metric_sets.iter().any(|m| m == selection_metric_set) {
        return Err(Error::InvalidPlan {
            reason: format!(
                "selection metric set `{selection_metric_set}` is not among the configured metric sets {metric_sets:?}"
            ),
        });
    }
    let ordered = ordered_records(plan, records)?;
    let run_ids: Vec<usize> = ordered.iter().map(|r| r.run_id).collect();
    let mut j_values = BTreeMap::new();
    let mut group_tables = BTreeMap::new();
    for ms in metric_sets {
        let j: Vec<f64> = ordered
            .iter()
            .map(|r| r.aggregate(norm, ms))
            .collect::<Result<_>>()?;
        let by_id = run_ids.iter().copied().zip(j.iter().copied()).collect();
        group_tables.insert(ms.clone(), group_means_of(plan, &by_id));
        j_values.insert(ms.clone(), j);
    }
    let selection_tables = &group_tables[selection_metric_set];
    let optimum = select_optimum(selection_tables);
    let optimum_indices = optimum.iter().map(|o| o.level_index).collect();
    let ranges = variation_ranges(selection_tables);
    Ok(AnalysisReport {
        selection_metric_set: selection_metric_set.to_string(),
        metric_sets: metric_sets.to_vec(),
        run_ids,
        j_values,
        group_tables,
        optimum,
        optimum_indices,
        ranges,
        confirmation: None,
    })
}

impl AnalysisReport {
    /// The suggested optimal assignment as a factor -> level map.
    pub fn optimum_assignment(&self) -> crate::design_space::Assignment {
        self.optimum
            .iter()
            .map(|o| (o.factor.clone(), o.level.clone()))
            .collect()
    }

    /// Compare a confirmation record against every orthogonal run.
    ///
    /// The record's assignment must realize exactly the selected optimum;
    /// the comparison marks, per metric set, whether J(H*) strictly beats
    /// every run (equal J counts as a tie, not a loss).
    pub fn confirm(&mut self, record: &RunRecord, norm: &NormSpec) -> Result<Confirmation> {
        let expected = self.optimum_assignment();
        if record.assignment != expected {
            let mut diff = String::new();
            for entry in &self.optimum {
                let got = record
                    .assignment
                    .get(&entry.factor)
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "<missing>".into());
                if record.assignment.get(&entry.factor) != Some(&entry.level) {
                    let _ = writeln!(
                        diff,
                        "  {}: expected {}, got {}",
                        entry.factor, entry.level, got
                    );
                }
            }
            for name in record.assignment.keys() {
                if !expected.contains_key(name) {
                    let _ = writeln!(diff, "  {name}: unexpected factor");
                }
            }
            return Err(Error::AssignmentMismatch { diff });
        }

        let mut j = BTreeMap::new();
        let mut beats_all = BTreeMap::new();
        let mut tied_runs = BTreeMap::new();
        for ms in &self.metric_sets {
            let confirm_j = record.aggregate(norm, ms)?;
            let runs = &self.j_values[ms];
            beats_all.insert(ms.clone(), runs.iter().all(|&r| confirm_j < r));
            tied_runs.insert(
                ms.clone(),
                self.run_ids
                    .iter()
                    .zip(runs)
                    .filter(|(_, &r)| r == confirm_j)
                    .map(|(&id, _)| id)
                    .collect(),
            );
            j.insert(ms.clone(), confirm_j);
        }
        let confirmation = Confirmation {
            j,
            beats_all,
            tied_runs,
        };
        self.confirmation = Some(confirmation.clone());
        Ok(confirmation)
    }

    /// Aligned-column rendering: one group table per factor, the optimum row,
    /// and the range/rank table. Means are shown at four decimals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (ms, tables) in &self.group_tables {
            for table in tables {
                let _ = writeln!(out, "factor {} ({ms})", table.factor);
                let _ = writeln!(
                    out,
                    "  {:<6} {:<12} {:<16} {:>10}",
                    "level", "value", "runs", "mean J"
                );
                for row in &table.rows {
                    let runs = row
                        .run_ids
                        .iter()
                        .map(|id| id.to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    let _ = writeln!(
                        out,
                        "  {:<6} {:<12} {:<16} {:>10.4}",
                        row.level_index,
                        row.level.to_string(),
                        runs,
                        row.mean
                    );
                }
            }
            let _ = writeln!(out);
        }
        let hstar = self
            .optimum
            .iter()
            .map(|o| {
                format!(
                    "{}={}{}",
                    o.factor,
                    o.level,
                    if o.tied { " (tie)" } else { "" }
                )
            })
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "H* ({}): {hstar}", self.selection_metric_set);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12} {:>10} {:>6}", "factor", "range", "rank");
        for entry in &self.ranges {
            let _ = writeln!(
                out,
                "{:<12} {:>10.4} {:>6}{}",
                entry.factor,
                entry.range,
                entry.rank,
                if entry.tied { " (tie)" } else { "" }
            );
        }
        if let Some(confirmation) = &self.confirmation {
            let _ = writeln!(out);
            for (ms, j) in &confirmation.j {
                let verdict = if confirmation.beats_all[ms] {
                    "beats all orthogonal runs"
                } else if !confirmation.tied_runs[ms].is_empty() {
                    "ties an orthogonal run"
                } else {
                    "does not beat every orthogonal run"
                };
                let _ = writeln!(out, "confirmation J[{ms}] = {j:.4}: {verdict}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::l16_4_5;
    use crate::objective::{preset_error_and_time, preset_single_error};
    use crate::plan::plan;
    use crate::test_fixtures::{cifar10_records, cifar10_space, confirm_measurements};

    fn fixture() -> (ExperimentPlan, Vec<RunRecord>) {
        let space = cifar10_space();
        let plan = plan(&space, &l16_4_5()).unwrap();
        let records = cifar10_records(&plan);
        (plan, records)
    }

    #[test]
    fn group_memberships_match_published_grouping() {
        let (plan, records) = fixture();
        let tables = group_means(&plan, &records, &preset_single_error(), "train").unwrap();
        let lr = &tables[0];
        assert_eq!(lr.factor, "lr");
        assert_eq!(lr.rows[0].run_ids, vec![0, 3, 10, 13]);
        assert_eq!(lr.rows[1].run_ids, vec![1, 4, 5, 14]);
        assert_eq!(lr.rows[2].run_ids, vec![8, 9, 12, 15]);
        assert_eq!(lr.rows[3].run_ids, vec![2, 6, 7, 11]);
    }

    #[test]
    fn lr_group_means_match_published_and_typo_corrected_values() {
        let (plan, records) = fixture();
        let tables = group_means(&plan, &records, &preset_single_error(), "train").unwrap();
        let means: Vec<f64> = tables[0].rows.iter().map(|r| r.mean).collect();
        // mean(0.0023, 0.0967, 0.0099, 0.0373) as published.
        assert!((means[0] - 0.0366).abs() < 5e-4);
        // Recomputed level-2 group; the published table repeats the level-1
        // row here by mistake.
        assert!((means[1] - 0.0306).abs() < 5e-4);
        assert!((means[2] - 0.0182).abs() < 5e-4);
        assert!((means[3] - 0.0127).abs() < 5e-4);
    }

    #[test]
    fn constant_response_groups_are_constant_and_tied() {
        let (plan, mut records) = fixture();
        for record in &mut records {
            for values in record.measurements.values_mut() {
                values.insert("error".into(), 0.25);
            }
        }
        let tables = group_means(&plan, &records, &preset_single_error(), "train").unwrap();
        for table in &tables {
            for row in &table.rows {
                assert_eq!(row.mean, 0.25);
            }
        }
        let optimum = select_optimum(&tables);
        for entry in &optimum {
            assert_eq!(entry.level_index, 1);
            assert!(entry.tied);
        }
        let ranges = variation_ranges(&tables);
        for entry in &ranges {
            assert_eq!(entry.range, 0.0);
            assert!(entry.tied);
        }
        let ranks: Vec<usize> = ranges.iter().map(|r| r.rank).collect();
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn optimum_matches_published_selection_for_both_presets() {
        let (plan, records) = fixture();
        for norm in [preset_single_error(), preset_error_and_time(0.8).unwrap()] {
            let tables = group_means(&plan, &records, &norm, "train").unwrap();
            let optimum = select_optimum(&tables);
            let indices: Vec<usize> = optimum.iter().map(|o| o.level_index).collect();
            assert_eq!(indices, vec![4, 4, 4, 4, 2]);
            let values: Vec<String> = optimum.iter().map(|o| o.level.to_string()).collect();
            assert_eq!(values, vec!["0.1", "150", "1", "110", "64"]);
            assert!(optimum.iter().all(|o| !o.tied));
        }
    }

    #[test]
    fn variation_ranges_match_published_ranks() {
        let (plan, records) = fixture();
        let tables = group_means(&plan, &records, &preset_single_error(), "train").unwrap();
        let ranges = variation_ranges(&tables);
        let expect = [
            ("lr", 0.0239, 3),
            ("epochs", 0.0402, 2),
            ("sampling", 0.0421, 1),
            ("backbone", 0.0212, 4),
            ("batch", 0.0179, 5),
        ];
        for (entry, (name, range, rank)) in ranges.iter().zip(expect) {
            assert_eq!(entry.factor, name);
            assert!(
                (entry.range - range).abs() < 1e-3,
                "{name}: {}",
                entry.range
            );
            assert_eq!(entry.rank, rank, "{name}");
        }
    }

    #[test]
    fn partition_identity_holds_per_factor() {
        let (plan, records) = fixture();
        let norm = preset_error_and_time(0.8).unwrap();
        let tables = group_means(&plan, &records, &norm, "train").unwrap();
        let total: f64 = records
            .iter()
            .map(|r| r.aggregate(&norm, "train").unwrap())
            .sum();
        for table in &tables {
            let grouped: f64 = table
                .rows
                .iter()
                .map(|row| row.mean * row.run_ids.len() as f64)
                .sum();
            assert!((grouped - total).abs() <= 1e-12 * total.abs());
        }
    }

    #[test]
    fn missing_and_duplicate_records_are_listed() {
        let (plan, mut records) = fixture();
        let removed = records.remove(3);
        match group_means(&plan, &records, &preset_single_error(), "train") {
            Err(Error::MissingRuns { run_ids }) => assert_eq!(run_ids, vec![3]),
            other => panic!("expected missing runs, got {other:?}"),
        }
        records.push(removed.clone());
        records.push(removed);
        match group_means(&plan, &records, &preset_single_error(), "train") {
            Err(Error::DuplicateRuns { run_ids }) => assert_eq!(run_ids, vec![3]),
            other => panic!("expected duplicate runs, got {other:?}"),
        }
    }

    #[test]
    fn confirmation_dominates_all_runs_on_both_metric_sets() {
        let (plan, records) = fixture();
        let sets = vec!["train".to_string(), "test".to_string()];
        for norm in [preset_single_error(), preset_error_and_time(0.8).unwrap()] {
            let mut report = analyze(&plan, &records, &norm, &sets, "train").unwrap();
            let confirm_record = RunRecord {
                run_id: 16,
                assignment: report.optimum_assignment(),
                measurements: confirm_measurements(),
                metadata: Default::default(),
            };
            let confirmation = report.confirm(&confirm_record, &norm).unwrap();
            assert!(confirmation.beats_all["train"]);
            assert!(confirmation.beats_all["test"]);
        }
    }

    #[test]
    fn confirmation_j_matches_published_values() {
        let (plan, records) = fixture();
        let sets = vec!["train".to_string(), "test".to_string()];
        let norm = preset_error_and_time(0.8).unwrap();
        let mut report = analyze(&plan, &records, &norm, &sets, "train").unwrap();
        let record = RunRecord {
            run_id: 16,
            assignment: report.optimum_assignment(),
            measurements: confirm_measurements(),
            metadata: Default::default(),
        };
        let confirmation = report.confirm(&record, &norm).unwrap();
        assert!((confirmation.j["train"] - 0.0008).abs() < 5e-4);
        assert!((confirmation.j["test"] - 0.0466).abs() < 5e-4);
    }

    #[test]
    fn confirmation_equal_to_a_run_ties_without_error() {
        let (plan, records) = fixture();
        let sets = vec!["train".to_string()];
        let norm = preset_single_error();
        let mut report = analyze(&plan, &records, &norm, &sets, "train").unwrap();
        // Copy the best run's measurements into a confirmation at H*.
        let best_run = 8; // smallest training error in the fixture
        let record = RunRecord {
            run_id: 16,
            assignment: report.optimum_assignment(),
            measurements: records[best_run].measurements.clone(),
            metadata: Default::default(),
        };
        let confirmation = report.confirm(&record, &norm).unwrap();
        assert!(!confirmation.beats_all["train"]);
        assert_eq!(confirmation.tied_runs["train"], vec![best_run]);
    }

    #[test]
    fn confirmation_assignment_mismatch_shows_diff() {
        let (plan, records) = fixture();
        let sets = vec!["train".to_string()];
        let norm = preset_single_error();
        let mut report = analyze(&plan, &records, &norm, &sets, "train").unwrap();
        let mut assignment = report.optimum_assignment();
        assignment.insert("lr".into(), LevelValue::numeric(0.01));
        let record = RunRecord {
            run_id: 16,
            assignment,
            measurements: confirm_measurements(),
            metadata: Default::default(),
        };
        match report.confirm(&record, &norm) {
            Err(Error::AssignmentMismatch { diff }) => {
                assert!(diff.contains("lr"), "{diff}");
                assert!(diff.contains("0.1"), "{diff}");
                assert!(diff.contains("0.01"), "{diff}");
            }
            other => panic!("expected assignment mismatch, got {other:?}"),
        }
    }

    #[test]
    fn select_optimum_invariant_under_positive_affine_transform() {
        let (plan, records) = fixture();
        let norm = preset_single_error();
        let base = group_means(&plan, &records, &norm, "train").unwrap();
        let base_opt: Vec<usize> = select_optimum(&base)
            .iter()
            .map(|o| o.level_index)
            .collect();

        // J -> 3J + 0.5 via an affine single-objective scaler.
        let affine = NormSpec {
            objectives: vec![crate::objective::ObjectiveSpec {
                name: "error".into(),
                scaler: crate::objective::ScalerSpec::Affine { a: 3.0, b: 0.5 },
                weight: 1.0,
            }],
            norm: crate::objective::NormKind::PNorm { p: 2.0 },
        };
        let transformed = group_means(&plan, &records, &affine, "train").unwrap();
        let trans_opt: Vec<usize> = select_optimum(&transformed)
            .iter()
            .map(|o| o.level_index)
            .collect();
        assert_eq!(base_opt, trans_opt);
    }

    #[test]
    fn text_rendering_mentions_groups_optimum_and_ranks() {
        let (plan, records) = fixture();
        let sets = vec!["train".to_string(), "test".to_string()];
        let report = analyze(&plan, &records, &preset_single_error(), &sets, "train").unwrap();
        let text = report.render_text();
        assert!(text.contains("factor lr (train)"));
        assert!(text.contains("0,3,10,13"));
        assert!(text.contains("H* (train): lr=0.1 epochs=150 sampling=1 backbone=110 batch=64"));
        assert!(text.contains("rank"));
    }
}
