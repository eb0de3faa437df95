//! Scalar performance index from raw multi-objective measurements.
//!
//! Each raw objective value p_j is scaled by s_j, weighted by alpha_j (the
//! weights sum to one), and the weighted vector is collapsed with a norm:
//!
//! ```text
//! J = || (alpha_j * s_j(p_j))_j ||
//! ```
//!
//! All objectives are minimized and scaled values must be non-negative, so a
//! smaller J is always better. Accuracy-style measurements are supplied as
//! error rates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design_space::Assignment;
use crate::error::{Error, Result};

/// Weight-sum tolerance for [`NormSpec::validate`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerSpec {
    Identity,
    /// log10(raw) / divisor; raw must be strictly positive.
    Log10Scaled {
        divisor: f64,
    },
    /// a * raw + b.
    Affine {
        a: f64,
        b: f64,
    },
    /// (raw - lo) / (hi - lo), clamped to [0, 1].
    Minmax {
        lo: f64,
        hi: f64,
    },
}

impl ScalerSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScalerSpec::Identity | ScalerSpec::Affine { .. } => Ok(()),
            ScalerSpec::Log10Scaled { divisor } => {
                if *divisor > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidScaler {
                        reason: format!("log10_scaled divisor must be positive, got {divisor}"),
                    })
                }
            }
            ScalerSpec::Minmax { lo, hi } => {
                if lo < hi {
                    Ok(())
                } else {
                    Err(Error::InvalidScaler {
                        reason: format!("minmax requires lo < hi, got lo={lo}, hi={hi}"),
                    })
                }
            }
        }
    }

    pub fn scale(&self, raw: f64) -> Result<f64> {
        self.validate()?;
        let scaled = match self {
            ScalerSpec::Identity => raw,
            ScalerSpec::Log10Scaled { divisor } => {
                if raw <= 0.0 {
                    return Err(Error::ScaleDomain {
                        reason: format!("log10 scaling needs a positive input, got {raw}"),
                    });
                }
                raw.log10() / divisor
            }
            ScalerSpec::Affine { a, b } => a * raw + b,
            ScalerSpec::Minmax { lo, hi } => ((raw - lo) / (hi - lo)).clamp(0.0, 1.0),
        };
        Ok(scaled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: String,
    pub scaler: ScalerSpec,
    pub weight: f64,
}

/// Norm choice, serialized as `{"p": 2.0}` or the string `"max"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// p-norm with p >= 1; everything here defaults to p = 2.
    PNorm { p: f64 },
    /// Max (infinity) norm.
    MaxNorm,
}

impl Serialize for NormKind {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormKind::PNorm { p } => {
                use serde::ser::SerializeStruct;
                let mut s = serializer.serialize_struct("PNorm", 1)?;
                s.serialize_field("p", p)?;
                s.end()
            }
            NormKind::MaxNorm => serializer.serialize_str("max"),
        }
    }
}

impl<'de> Deserialize<'de> for NormKind {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = serde_json::Value::deserialize(deserializer)?;
        match &raw {
            serde_json::Value::String(s) if s == "max" => Ok(NormKind::MaxNorm),
            serde_json::Value::Object(map) => match map.get("p").and_then(|v| v.as_f64()) {
                Some(p) => Ok(NormKind::PNorm { p }),
                None => Err(D::Error::custom("p-norm object needs a numeric `p` field")),
            },
            other => Err(D::Error::custom(format!(
                "norm must be {{\"p\": ...}} or \"max\", got {other}"
            ))),
        }
    }
}

/// Full aggregation recipe: the objectives (scaler + weight each) and the norm.
///
/// Fields are public so specs can be assembled directly; [`validate`]
/// enforces the invariants and is called by every loading path before use.
///
/// [`validate`]: NormSpec::validate
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub objectives: Vec<ObjectiveSpec>,
    pub norm: NormKind,
}

impl NormSpec {
    pub fn new(objectives: Vec<ObjectiveSpec>, norm: NormKind) -> Result<Self> {
        let spec = NormSpec { objectives, norm };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.objectives.is_empty() {
            return Err(Error::InvalidNorm {
                reason: "at least one objective is required".into(),
            });
        }
        for obj in &self.objectives {
            obj.scaler.validate()?;
            if !(obj.weight > 0.0 && obj.weight <= 1.0) {
                return Err(Error::BadWeight {
                    objective: obj.name.clone(),
                    weight: obj.weight,
                });
            }
        }
        let sum: f64 = self.objectives.iter().map(|o| o.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSum { sum });
        }
        if let NormKind::PNorm { p } = self.norm {
            if p.is_nan() || p < 1.0 {
                return Err(Error::InvalidNorm {
                    reason: format!("p-norm requires p >= 1, got {p}"),
                });
            }
        }
        Ok(())
    }

    pub fn objective_names(&self) -> Vec<&str> {
        self.objectives.iter().map(|o| o.name.as_str()).collect()
    }

    /// Aggregate one run's raw objective values into J.
    ///
    /// `run_id` only labels error messages. The single-objective case returns
    /// the weighted scaled value itself, so the identity preset reproduces
    /// the raw error rate exactly.
    pub fn aggregate_for_run(&self, run_id: usize, raw: &BTreeMap<String, f64>) -> Result<f64> {
        let mut weighted = Vec::with_capacity(self.objectives.len());
        for obj in &self.objectives {
            let value = *raw.get(&obj.name).ok_or_else(|| Error::MissingObjective {
                run_id,
                objective: obj.name.clone(),
                metric_set: String::new(),
            })?;
            let scaled = obj.scaler.scale(value)?;
            if scaled < 0.0 {
                return Err(Error::NegativeScaled {
                    objective: obj.name.clone(),
                    value: scaled,
                });
            }
            weighted.push(obj.weight * scaled);
        }
        if weighted.len() == 1 {
            return Ok(weighted[0]);
        }
        Ok(match self.norm {
            NormKind::PNorm { p } => weighted
                .iter()
                .map(|w| w.powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
            NormKind::MaxNorm => weighted.iter().fold(0.0_f64, |acc, &w| acc.max(w)),
        })
    }

    pub fn aggregate(&self, raw: &BTreeMap<String, f64>) -> Result<f64> {
        self.aggregate_for_run(0, raw)
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: NormSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Single objective, identity scaling, weight one: J is the error rate itself.
pub fn preset_single_error() -> NormSpec {
    NormSpec {
        objectives: vec![ObjectiveSpec {
            name: "error".into(),
            scaler: ScalerSpec::Identity,
            weight: 1.0,
        }],
        norm: NormKind::PNorm { p: 2.0 },
    }
}

/// Error rate plus log-scaled wall time under the 2-norm:
/// J = sqrt((alpha_e * e)^2 + ((1 - alpha_e) * log10(t)/1000)^2).
pub fn preset_error_and_time(alpha_error: f64) -> Result<NormSpec> {
    if !(alpha_error > 0.0 && alpha_error < 1.0) {
        return Err(Error::BadWeight {
            objective: "error".into(),
            weight: alpha_error,
        });
    }
    NormSpec::new(
        vec![
            ObjectiveSpec {
                name: "error".into(),
                scaler: ScalerSpec::Identity,
                weight: alpha_error,
            },
            ObjectiveSpec {
                name: "time".into(),
                scaler: ScalerSpec::Log10Scaled { divisor: 1000.0 },
                weight: 1.0 - alpha_error,
            },
        ],
        NormKind::PNorm { p: 2.0 },
    )
}

/// Resolve a preset by name: `single_error` or `error_and_time`.
pub fn preset(name: &str, alpha_error: Option<f64>) -> Result<NormSpec> {
    match name {
        "single_error" => Ok(preset_single_error()),
        "error_and_time" => preset_error_and_time(alpha_error.unwrap_or(0.8)),
        other => Err(Error::InvalidNorm {
            reason: format!("unknown preset `{other}`"),
        }),
    }
}

/// Execution metadata attached to a run record. Wall time is excluded from
/// determinism comparisons, so only the subprocess evaluator fills it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit_status: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

/// One experiment's raw measurements, keyed by metric set then objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub assignment: Assignment,
    pub measurements: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub metadata: RunMetadata,
}

impl RunRecord {
    /// Raw objective values for one metric set.
    pub fn metric_set(&self, name: &str) -> Result<&BTreeMap<String, f64>> {
        self.measurements
            .get(name)
            .ok_or_else(|| Error::MissingMetricSet {
                run_id: self.run_id,
                metric_set: name.to_string(),
            })
    }

    /// Check that every listed metric set supplies every objective the norm
    /// spec names.
    pub fn require_complete(&self, norm: &NormSpec, metric_sets: &[String]) -> Result<()> {
        for ms in metric_sets {
            let values = self.metric_set(ms)?;
            for obj in &norm.objectives {
                if !values.contains_key(&obj.name) {
                    return Err(Error::MissingObjective {
                        run_id: self.run_id,
                        objective: obj.name.clone(),
                        metric_set: ms.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// J for one metric set under the given norm spec.
    pub fn aggregate(&self, norm: &NormSpec, metric_set: &str) -> Result<f64> {
        norm.aggregate_for_run(self.run_id, self.metric_set(metric_set)?)
            .map_err(|e| match e {
                Error::MissingObjective {
                    run_id, objective, ..
                } => Error::MissingObjective {
                    run_id,
                    objective,
                    metric_set: metric_set.to_string(),
                },
                other => other,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn log10_scaling_matches_published_column() {
        let scaler = ScalerSpec::Log10Scaled { divisor: 1000.0 };
        let scaled = scaler.scale(3284.64).unwrap();
        assert!((scaled - 0.003516487777).abs() < 1e-12);
        assert_eq!(scaler.scale(1.0).unwrap(), 0.0);
        assert!(matches!(scaler.scale(0.0), Err(Error::ScaleDomain { .. })));
        assert!(matches!(scaler.scale(-3.0), Err(Error::ScaleDomain { .. })));
    }

    #[test]
    fn identity_scaling_is_exact() {
        assert_eq!(ScalerSpec::Identity.scale(0.0023).unwrap(), 0.0023);
    }

    #[test]
    fn affine_and_minmax_scalers() {
        assert_eq!(
            ScalerSpec::Affine { a: 2.0, b: 1.0 }.scale(3.0).unwrap(),
            7.0
        );
        let mm = ScalerSpec::Minmax { lo: 10.0, hi: 20.0 };
        assert_eq!(mm.scale(15.0).unwrap(), 0.5);
        assert_eq!(mm.scale(5.0).unwrap(), 0.0);
        assert_eq!(mm.scale(25.0).unwrap(), 1.0);
        assert!(ScalerSpec::Minmax { lo: 2.0, hi: 2.0 }.validate().is_err());
        assert!(ScalerSpec::Log10Scaled { divisor: 0.0 }.validate().is_err());
    }

    #[test]
    fn bi_objective_aggregate_matches_worked_example() {
        let norm = preset_error_and_time(0.8).unwrap();
        let j = norm
            .aggregate(&raw(&[("error", 0.0023), ("time", 3284.64)]))
            .unwrap();
        // Published value rounds to 0.0020.
        assert!((j - 0.001969829295).abs() < 1e-9, "J = {j}");
        assert!((j - 0.0020).abs() < 5e-4);
    }

    #[test]
    fn single_objective_aggregate_returns_input_exactly() {
        let norm = preset_single_error();
        assert_eq!(norm.aggregate(&raw(&[("error", 0.0144)])).unwrap(), 0.0144);
        assert_eq!(norm.aggregate(&raw(&[("error", 0.0)])).unwrap(), 0.0);
    }

    #[test]
    fn zero_vector_aggregates_to_zero() {
        let norm = preset_error_and_time(0.8).unwrap();
        let j = norm
            .aggregate(&raw(&[("error", 0.0), ("time", 1.0)]))
            .unwrap();
        assert_eq!(j, 0.0);
    }

    #[test]
    fn presets_carry_published_weights() {
        let bi = preset_error_and_time(0.8).unwrap();
        assert_eq!(bi.objectives[0].weight, 0.8);
        assert!((bi.objectives[1].weight - 0.2).abs() < 1e-15);
        assert_eq!(
            bi.objectives[1].scaler,
            ScalerSpec::Log10Scaled { divisor: 1000.0 }
        );

        let single = preset_single_error();
        assert_eq!(single.objectives.len(), 1);
        assert_eq!(single.objectives[0].weight, 1.0);

        let even = preset_error_and_time(0.5).unwrap();
        assert_eq!(even.objectives[0].weight, 0.5);
        assert_eq!(even.objectives[1].weight, 0.5);

        assert!(preset_error_and_time(0.0).is_err());
        assert!(preset_error_and_time(1.0).is_err());
        assert!(preset_error_and_time(1.3).is_err());
    }

    #[test]
    fn weight_sum_validation() {
        let mut spec = preset_error_and_time(0.8).unwrap();
        spec.objectives[0].weight = 0.81;
        assert!(matches!(spec.validate(), Err(Error::WeightSum { .. })));

        // Within tolerance passes.
        let mut near = preset_error_and_time(0.8).unwrap();
        near.objectives[0].weight = 0.8 + 4e-13;
        assert!(near.validate().is_ok());
    }

    #[test]
    fn missing_objective_is_named() {
        let norm = preset_error_and_time(0.8).unwrap();
        match norm.aggregate(&raw(&[("error", 0.1)])) {
            Err(Error::MissingObjective { objective, .. }) => assert_eq!(objective, "time"),
            other => panic!("expected missing objective, got {other:?}"),
        }
    }

    #[test]
    fn negative_scaled_value_rejected() {
        let norm = NormSpec {
            objectives: vec![ObjectiveSpec {
                name: "x".into(),
                scaler: ScalerSpec::Affine { a: 1.0, b: -10.0 },
                weight: 1.0,
            }],
            norm: NormKind::PNorm { p: 2.0 },
        };
        assert!(matches!(
            norm.aggregate(&raw(&[("x", 1.0)])),
            Err(Error::NegativeScaled { .. })
        ));
    }

    #[test]
    fn max_norm_takes_largest_component() {
        let norm = NormSpec::new(
            vec![
                ObjectiveSpec {
                    name: "a".into(),
                    scaler: ScalerSpec::Identity,
                    weight: 0.5,
                },
                ObjectiveSpec {
                    name: "b".into(),
                    scaler: ScalerSpec::Identity,
                    weight: 0.5,
                },
            ],
            NormKind::MaxNorm,
        )
        .unwrap();
        let j = norm.aggregate(&raw(&[("a", 2.0), ("b", 6.0)])).unwrap();
        assert_eq!(j, 3.0);
    }

    #[test]
    fn norm_spec_json_round_trip() {
        let spec = preset_error_and_time(0.8).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"p\":2.0"), "{json}");
        let back: NormSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);

        let max = NormSpec {
            objectives: spec.objectives.clone(),
            norm: NormKind::MaxNorm,
        };
        let json = serde_json::to_string(&max).unwrap();
        assert!(json.contains("\"max\""), "{json}");
        let back: NormSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.norm, NormKind::MaxNorm);
    }

    #[test]
    fn record_completeness_check() {
        let norm = preset_error_and_time(0.8).unwrap();
        let mut record = RunRecord {
            run_id: 7,
            assignment: Assignment::new(),
            measurements: BTreeMap::new(),
            metadata: RunMetadata::default(),
        };
        record
            .measurements
            .insert("train".into(), raw(&[("error", 0.1), ("time", 100.0)]));
        let sets = vec!["train".to_string(), "test".to_string()];
        assert!(matches!(
            record.require_complete(&norm, &sets),
            Err(Error::MissingMetricSet { run_id: 7, .. })
        ));
        record
            .measurements
            .insert("test".into(), raw(&[("error", 0.2)]));
        assert!(matches!(
            record.require_complete(&norm, &sets),
            Err(Error::MissingObjective { .. })
        ));
        record
            .measurements
            .get_mut("test")
            .unwrap()
            .insert("time".into(), 100.0);
        assert!(record.require_complete(&norm, &sets).is_ok());
    }
}
