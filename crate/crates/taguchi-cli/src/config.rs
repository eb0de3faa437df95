//! Project configuration: a JSON document naming the design space, array
//! selection, objective configurations, evaluator and output directory.
//! Relative paths resolve against the config file's directory; flags may
//! override individual fields.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use taguchi::catalog::{catalog_by_name, catalog_lookup};
use taguchi::design_space::DesignSpace;
use taguchi::evaluator::EvaluatorSpec;
use taguchi::oa::OrthogonalArray;
use taguchi::objective::{preset, NormSpec};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ArraySelectionDoc {
    /// `"auto"` or a catalog name such as `"L16(4^5)"`.
    Named(String),
    /// `{"file": "array.json"}` with an explicit array document.
    File { file: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
struct NormConfigDoc {
    name: Option<String>,
    preset: Option<String>,
    alpha_error: Option<f64>,
    path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
struct ProjectConfigDoc {
    space: PathBuf,
    #[serde(default = "default_array")]
    array: ArraySelectionDoc,
    norms: Vec<NormConfigDoc>,
    #[serde(default = "default_metric_sets")]
    metric_sets: Vec<String>,
    #[serde(default = "default_selection")]
    selection_metric_set: String,
    evaluator: EvaluatorSpec,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
}

fn default_array() -> ArraySelectionDoc {
    ArraySelectionDoc::Named("auto".into())
}

fn default_metric_sets() -> Vec<String> {
    vec!["train".into()]
}

fn default_selection() -> String {
    "train".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("taguchi-out")
}

/// Fully resolved project configuration.
#[derive(Debug, Clone)]
pub struct ProjectConfig {
    pub space: DesignSpace,
    pub array: OrthogonalArray,
    /// (name, spec) pairs; names default to obj1, obj2, ... by position.
    pub norms: Vec<(String, NormSpec)>,
    pub metric_sets: Vec<String>,
    pub selection_metric_set: String,
    pub evaluator: EvaluatorSpec,
    pub output_dir: PathBuf,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

impl ProjectConfig {
    pub fn load(config_path: &Path, output_dir_override: Option<&Path>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(config_path).map_err(|e| {
            CliError::Validation(format!(
                "cannot read config `{}`: {e}",
                config_path.display()
            ))
        })?;
        let doc: ProjectConfigDoc = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config is not valid: {e}")))?;
        let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();

        let space = DesignSpace::from_json_file(resolve(&base, &doc.space))
            .map_err(|e| CliError::Validation(format!("design space: {e}")))?;

        let max_levels = space
            .factors()
            .iter()
            .map(|f| f.level_count())
            .max()
            .unwrap_or(1) as u32;
        let array = match &doc.array {
            ArraySelectionDoc::Named(name) if name == "auto" => {
                catalog_lookup(space.factor_count(), max_levels)
                    .map_err(|e| CliError::Validation(format!("array selection: {e}")))?
            }
            ArraySelectionDoc::Named(name) => {
                let full = catalog_by_name(name)
                    .map_err(|e| CliError::Validation(format!("array selection: {e}")))?;
                if full.columns() < space.factor_count() {
                    return Err(CliError::Validation(format!(
                        "catalog array `{name}` has {} columns but the space has {} factors",
                        full.columns(),
                        space.factor_count()
                    )));
                }
                full.truncated(space.factor_count())
                    .map_err(|e| CliError::Validation(e.to_string()))?
            }
            ArraySelectionDoc::File { file } => {
                let text = std::fs::read_to_string(resolve(&base, file)).map_err(|e| {
                    CliError::Validation(format!("cannot read array `{}`: {e}", file.display()))
                })?;
                let array: OrthogonalArray = serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("array document: {e}")))?;
                let report = array.validate();
                if !report.ok {
                    return Err(CliError::Validation(format!(
                        "array `{}` fails strength-2 validation on column pairs {:?}",
                        array.name(),
                        report.offending_pairs()
                    )));
                }
                array
            }
        };

        let mut norms = Vec::new();
        for (i, norm_doc) in doc.norms.iter().enumerate() {
            let name = norm_doc
                .name
                .clone()
                .unwrap_or_else(|| format!("obj{}", i + 1));
            let spec = match (&norm_doc.path, &norm_doc.preset) {
                (Some(path), None) => NormSpec::from_json_file(resolve(&base, path))
                    .map_err(|e| CliError::Validation(format!("norm `{name}`: {e}")))?,
                (None, Some(preset_name)) => preset(preset_name, norm_doc.alpha_error)
                    .map_err(|e| CliError::Validation(format!("norm `{name}`: {e}")))?,
                _ => {
                    return Err(CliError::Validation(format!(
                        "norm `{name}` must set exactly one of `preset` or `path`"
                    )))
                }
            };
            norms.push((name, spec));
        }
        if norms.is_empty() {
            return Err(CliError::Validation(
                "config must define at least one norm".into(),
            ));
        }

        if !doc.metric_sets.contains(&doc.selection_metric_set) {
            return Err(CliError::Validation(format!(
                "selection metric set `{}` is not among metric_sets {:?}",
                doc.selection_metric_set, doc.metric_sets
            )));
        }

        let evaluator = match doc.evaluator {
            EvaluatorSpec::Replay { path } => EvaluatorSpec::Replay {
                path: resolve(&base, &path),
            },
            other => other,
        };

        let output_dir = match output_dir_override {
            Some(dir) => dir.to_path_buf(),
            None => resolve(&base, &doc.output_dir),
        };

        Ok(ProjectConfig {
            space,
            array,
            norms,
            metric_sets: doc.metric_sets,
            selection_metric_set: doc.selection_metric_set,
            evaluator,
            output_dir,
        })
    }
}
