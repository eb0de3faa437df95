//! Realizing an orthogonal array against a design space into a runnable plan.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design_space::{Assignment, DesignSpace};
use crate::error::{Error, Result};
use crate::oa::OrthogonalArray;

/// One planned run: stable id, the array row's level indices, and the
/// realized factor assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub run_id: usize,
    pub levels: Vec<usize>,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub space: DesignSpace,
    pub array_name: String,
    pub rows: Vec<PlanRow>,
}

impl ExperimentPlan {
    pub fn run_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, run_id: usize) -> Option<&PlanRow> {
        // Canonical plans use ids 0..R-1, but filtered sub-plans may not.
        match self.rows.get(run_id) {
            Some(row) if row.run_id == run_id => Some(row),
            _ => self.rows.iter().find(|r| r.run_id == run_id),
        }
    }

    /// CSV with header `run_id,<factor names...>`, one row per run.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["run_id".to_string()];
        header.extend(self.space.factors().iter().map(|f| f.name().to_string()));
        csv.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.run_id.to_string()];
            for factor in self.space.factors() {
                record.push(row.assignment[factor.name()].to_string());
            }
            csv.write_record(&record)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Assign each factor the level its array column dictates, row by row.
///
/// The array must have exactly one column per factor and use the same level
/// count as every factor; there is no level collapsing.
pub fn plan(space: &DesignSpace, array: &OrthogonalArray) -> Result<ExperimentPlan> {
    if array.columns() != space.factor_count() {
        return Err(Error::ColumnCountMismatch {
            array_columns: array.columns(),
            factors: space.factor_count(),
        });
    }
    for factor in space.factors() {
        if factor.level_count() != array.levels() as usize {
            return Err(Error::LevelCountMismatch {
                factor: factor.name().to_string(),
                factor_levels: factor.level_count(),
                array_levels: array.levels(),
            });
        }
    }
    let mut rows = Vec::with_capacity(array.runs());
    for (run_id, array_row) in array.rows().iter().enumerate() {
        let levels: Vec<usize> = array_row.iter().map(|&v| v as usize).collect();
        let assignment = space.realize(&levels)?;
        rows.push(PlanRow {
            run_id,
            levels,
            assignment,
        });
    }
    Ok(ExperimentPlan {
        space: space.clone(),
        array_name: array.name().to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_lookup, l16_4_5};
    use crate::design_space::{Factor, LevelValue};
    use crate::test_fixtures::cifar10_space;

    #[test]
    fn cifar10_plan_matches_published_rows() {
        let space = cifar10_space();
        let plan = plan(&space, &l16_4_5()).unwrap();
        assert_eq!(plan.run_count(), 16);

        let row0 = &plan.rows[0];
        assert_eq!(row0.assignment["lr"], LevelValue::numeric(0.01));
        assert_eq!(row0.assignment["epochs"], LevelValue::numeric(150.0));
        assert_eq!(row0.assignment["sampling"], LevelValue::numeric(1.0));
        assert_eq!(row0.assignment["backbone"], LevelValue::numeric(110.0));
        assert_eq!(row0.assignment["batch"], LevelValue::numeric(256.0));

        let row3 = &plan.rows[3];
        assert_eq!(row3.assignment["lr"], LevelValue::numeric(0.01));
        assert_eq!(row3.assignment["epochs"], LevelValue::numeric(60.0));
        assert_eq!(row3.assignment["sampling"], LevelValue::numeric(0.382));
        assert_eq!(row3.assignment["backbone"], LevelValue::numeric(20.0));
        assert_eq!(row3.assignment["batch"], LevelValue::numeric(32.0));
    }

    #[test]
    fn single_factor_plan_visits_each_level() {
        let space = DesignSpace::new(vec![Factor::numeric("x", &[10.0, 20.0]).unwrap()]).unwrap();
        let array = catalog_lookup(1, 2).unwrap();
        let plan = plan(&space, &array).unwrap();
        assert_eq!(plan.run_count(), 2);
        assert_eq!(plan.rows[0].assignment["x"], LevelValue::numeric(10.0));
        assert_eq!(plan.rows[1].assignment["x"], LevelValue::numeric(20.0));
    }

    #[test]
    fn plan_is_deterministic() {
        let space = cifar10_space();
        let a = plan(&space, &l16_4_5()).unwrap().to_json_pretty().unwrap();
        let b = plan(&space, &l16_4_5()).unwrap().to_json_pretty().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatches_name_the_problem() {
        let space = cifar10_space();
        let narrow = l16_4_5().truncated(4).unwrap();
        assert!(matches!(
            plan(&space, &narrow),
            Err(Error::ColumnCountMismatch {
                array_columns: 4,
                factors: 5
            })
        ));

        let mixed = DesignSpace::new(vec![
            Factor::numeric("a", &[1.0, 2.0, 3.0, 4.0]).unwrap(),
            Factor::numeric("b", &[1.0, 2.0]).unwrap(),
        ])
        .unwrap();
        let array = catalog_lookup(2, 4).unwrap();
        match plan(&mixed, &array) {
            Err(Error::LevelCountMismatch { factor, .. }) => assert_eq!(factor, "b"),
            other => panic!("expected level mismatch, got {other:?}"),
        }
    }

    #[test]
    fn csv_export_layout() {
        let space = cifar10_space();
        let plan = plan(&space, &l16_4_5()).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run_id,lr,epochs,sampling,backbone,batch"
        );
        assert_eq!(lines.next().unwrap(), "0,0.01,150,1,110,256");
        assert_eq!(text.lines().count(), 17);
    }

    #[test]
    fn run_count_meets_main_effects_lower_bound() {
        let space = cifar10_space();
        let plan = plan(&space, &l16_4_5()).unwrap();
        assert!(plan.run_count() as u64 >= space.min_runs());
    }
}
