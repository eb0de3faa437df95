//! Generalized hyperparameter space: named factors with ordered discrete level grids.
//!
//! A factor is either numeric (learning rate, batch size) or categorical (a
//! backbone identifier). Levels are referenced downstream by 1-based index, so
//! the distinction never matters for the analysis itself; it only affects how
//! values are parsed, displayed and fed to synthetic evaluators.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One concrete level value of a factor.
///
/// Numeric levels keep the decimal text they were given (`"0.382"`, `"150"`)
/// so that exports and fixture comparisons round-trip without float
/// re-derivation; the parsed value is carried alongside for computation.
#[derive(Debug, Clone)]
pub enum LevelValue {
    Numeric { text: String, value: f64 },
    Categorical(String),
}

impl LevelValue {
    pub fn numeric(value: f64) -> Self {
        LevelValue::Numeric {
            text: format!("{value}"),
            value,
        }
    }

    pub fn categorical(label: impl Into<String>) -> Self {
        LevelValue::Categorical(label.into())
    }

    /// Numeric value when the level is numeric.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            LevelValue::Numeric { value, .. } => Some(*value),
            LevelValue::Categorical(_) => None,
        }
    }
}

impl PartialEq for LevelValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (LevelValue::Numeric { value: a, .. }, LevelValue::Numeric { value: b, .. }) => a == b,
            (LevelValue::Categorical(a), LevelValue::Categorical(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for LevelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelValue::Numeric { text, .. } => f.write_str(text),
            LevelValue::Categorical(label) => f.write_str(label),
        }
    }
}

impl Serialize for LevelValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LevelValue::Numeric { text, value } => {
                // Emit the original decimal text as a JSON number when possible.
                match serde_json::Number::from_str(text) {
                    Ok(n) => n.serialize(serializer),
                    Err(_) => serializer.serialize_f64(*value),
                }
            }
            LevelValue::Categorical(label) => serializer.serialize_str(label),
        }
    }
}

impl<'de> Deserialize<'de> for LevelValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        match raw {
            serde_json::Value::Number(n) => {
                let value = n
                    .as_f64()
                    .ok_or_else(|| D::Error::custom(format!("non-finite level value {n}")))?;
                Ok(LevelValue::Numeric {
                    text: n.to_string(),
                    value,
                })
            }
            serde_json::Value::String(s) => Ok(LevelValue::Categorical(s)),
            other => Err(D::Error::custom(format!(
                "level value must be a number or string, got {other}"
            ))),
        }
    }
}

/// Mapping of factor name to the level value chosen for one run.
pub type Assignment = BTreeMap<String, LevelValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Numeric,
    Categorical,
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorKind::Numeric => f.write_str("numeric"),
            FactorKind::Categorical => f.write_str("categorical"),
        }
    }
}

/// A named hyperparameter with an ordered grid of candidate levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factor {
    name: String,
    kind: FactorKind,
    levels: Vec<LevelValue>,
}

impl Factor {
    pub fn new(name: impl Into<String>, kind: FactorKind, levels: Vec<LevelValue>) -> Result<Self> {
        let name = name.into();
        if levels.is_empty() {
            return Err(Error::EmptyLevels { factor: name });
        }
        for (i, level) in levels.iter().enumerate() {
            let kind_ok = matches!(
                (kind, level),
                (FactorKind::Numeric, LevelValue::Numeric { .. })
                    | (FactorKind::Categorical, LevelValue::Categorical(_))
            );
            if !kind_ok {
                return Err(Error::LevelKindMismatch {
                    factor: name,
                    level: level.to_string(),
                    kind: kind.to_string(),
                });
            }
            if levels[..i].contains(level) {
                return Err(Error::DuplicateLevel {
                    factor: name,
                    level: level.to_string(),
                });
            }
        }
        Ok(Factor { name, kind, levels })
    }

    pub fn numeric(name: impl Into<String>, values: &[f64]) -> Result<Self> {
        Self::new(
            name,
            FactorKind::Numeric,
            values.iter().copied().map(LevelValue::numeric).collect(),
        )
    }

    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, labels: &[S]) -> Result<Self> {
        Self::new(
            name,
            FactorKind::Categorical,
            labels
                .iter()
                .map(|l| LevelValue::categorical(l.as_ref()))
                .collect(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn levels(&self) -> &[LevelValue] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Level value at 1-based index.
    pub fn level(&self, index: usize) -> Result<&LevelValue> {
        if index == 0 || index > self.levels.len() {
            return Err(Error::LevelIndexOutOfRange {
                factor: self.name.clone(),
                index,
                max: self.levels.len(),
            });
        }
        Ok(&self.levels[index - 1])
    }

    /// 1-based index of a level value.
    pub fn index_of(&self, value: &LevelValue) -> Result<usize> {
        self.levels
            .iter()
            .position(|l| l == value)
            .map(|p| p + 1)
            .ok_or_else(|| Error::UnknownLevelValue {
                factor: self.name.clone(),
                value: value.to_string(),
            })
    }
}

impl<'de> Deserialize<'de> for Factor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Doc {
            name: String,
            kind: FactorKind,
            levels: Vec<serde_json::Value>,
        }
        let doc = Doc::deserialize(deserializer)?;
        let levels = doc
            .levels
            .into_iter()
            .map(|v| match (doc.kind, v) {
                (FactorKind::Numeric, serde_json::Value::Number(n)) => {
                    let value = n
                        .as_f64()
                        .ok_or_else(|| D::Error::custom(format!("non-finite level {n}")))?;
                    Ok(LevelValue::Numeric {
                        text: n.to_string(),
                        value,
                    })
                }
                // Numeric levels given as decimal strings keep their exact text.
                (FactorKind::Numeric, serde_json::Value::String(s)) => {
                    let value = s.parse::<f64>().map_err(|_| {
                        D::Error::custom(format!("numeric factor `{}` has level `{s}`", doc.name))
                    })?;
                    Ok(LevelValue::Numeric { text: s, value })
                }
                (FactorKind::Categorical, serde_json::Value::String(s)) => {
                    Ok(LevelValue::Categorical(s))
                }
                (kind, other) => Err(D::Error::custom(format!(
                    "factor `{}` is {kind} but has level {other}",
                    doc.name
                ))),
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        Factor::new(doc.name, doc.kind, levels).map_err(D::Error::custom)
    }
}

/// Ordered collection of factors; the search space is their level grid product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    factors: Vec<Factor>,
}

impl DesignSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyDesignSpace);
        }
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].iter().any(|g| g.name() == f.name()) {
                return Err(Error::DuplicateFactor {
                    name: f.name().to_string(),
                });
            }
        }
        Ok(DesignSpace { factors })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let space: DesignSpace = serde_json::from_str(json)?;
        DesignSpace::new(space.factors)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, name: &str) -> Result<&Factor> {
        self.factors
            .iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownFactor {
                name: name.to_string(),
            })
    }

    /// Total number of grid points, `N = prod L_k`, with overflow detection.
    pub fn grid_size(&self) -> Result<u64> {
        let mut n: u64 = 1;
        for f in &self.factors {
            n = n
                .checked_mul(f.level_count() as u64)
                .ok_or_else(|| Error::GridOverflow {
                    factor: f.name().to_string(),
                })?;
        }
        Ok(n)
    }

    /// Lower bound on the number of runs needed for main-effect estimates,
    /// `1 + sum (L_k - 1)`. Equals `1 + K(L-1)` when all factors share L.
    pub fn min_runs(&self) -> u64 {
        1 + self
            .factors
            .iter()
            .map(|f| f.level_count() as u64 - 1)
            .sum::<u64>()
    }

    /// Map 1-based level indices (one per factor, in factor order) to concrete values.
    pub fn realize(&self, level_indices: &[usize]) -> Result<Assignment> {
        if level_indices.len() != self.factors.len() {
            return Err(Error::IndexCountMismatch {
                expected: self.factors.len(),
                got: level_indices.len(),
            });
        }
        let mut assignment = Assignment::new();
        for (factor, &index) in self.factors.iter().zip(level_indices) {
            assignment.insert(factor.name().to_string(), factor.level(index)?.clone());
        }
        Ok(assignment)
    }

    /// Inverse of [`realize`](Self::realize): recover 1-based level indices.
    pub fn indices_of(&self, assignment: &Assignment) -> Result<Vec<usize>> {
        self.factors
            .iter()
            .map(|factor| {
                let value = assignment
                    .get(factor.name())
                    .ok_or_else(|| Error::UnknownFactor {
                        name: factor.name().to_string(),
                    })?;
                factor.index_of(value)
            })
            .collect()
    }
}
