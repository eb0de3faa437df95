//! Synthetic analytic evaluators for testing and benchmarking.
//!
//! All functions are pure given (function id, seed); noise is derived from
//! the global seed and the run id, never from shared state, so results do
//! not depend on scheduling.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design_space::DesignSpace;
use crate::error::{Error, Result};

pub type Measurements = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticFunction {
    /// error = sum of factor values (level index for categorical factors).
    AdditiveSum,
    /// error = sum over factors of a seeded pseudorandom per-level effect in
    /// [0, 1). Additive by construction, so strength-2 selection recovers the
    /// exact grid argmin.
    RandomAdditive,
    /// A five-factor (lr, epochs, sampling, backbone, batch) surrogate with
    /// multiplicative diminishing-returns error and a time measurement that
    /// grows with epochs, sampling and backbone depth. Synthetic; none of its
    /// outputs are measured values.
    CnnSurrogate,
}

impl SyntheticFunction {
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "additive_sum" => Ok(SyntheticFunction::AdditiveSum),
            "random_additive" => Ok(SyntheticFunction::RandomAdditive),
            "cnn_surrogate" => Ok(SyntheticFunction::CnnSurrogate),
            other => Err(Error::InvalidEvaluator {
                reason: format!("unknown synthetic function `{other}`"),
            }),
        }
    }

    /// Check the function applies to this space.
    pub fn validate_space(&self, space: &DesignSpace) -> Result<()> {
        if let SyntheticFunction::CnnSurrogate = self {
            let numeric = space
                .factors()
                .iter()
                .all(|f| f.kind() == crate::design_space::FactorKind::Numeric);
            if space.factor_count() != 5 || !numeric {
                return Err(Error::InvalidEvaluator {
                    reason: "cnn_surrogate expects five numeric factors \
                             (lr, epochs, sampling, backbone, batch)"
                        .into(),
                });
            }
        }
        Ok(())
    }

    /// Noise-free measurements at 1-based level indices.
    pub fn measurements(
        &self,
        space: &DesignSpace,
        levels: &[usize],
        seed: u64,
    ) -> Result<Measurements> {
        self.validate_space(space)?;
        let values = factor_values(space, levels)?;
        Ok(match self {
            SyntheticFunction::AdditiveSum => {
                let error: f64 = values.iter().sum();
                flat_measurements(error, 1000.0, error)
            }
            SyntheticFunction::RandomAdditive => {
                let error: f64 = levels
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| unit_from(mix3(seed, EFFECT_SALT ^ k as u64, l as u64)))
                    .sum();
                flat_measurements(error, 1000.0, error)
            }
            SyntheticFunction::CnnSurrogate => {
                let [lr, epochs, sampling, backbone, batch] = values[..] else {
                    unreachable!("validated as five factors");
                };
                let r_lr = (0.01 / lr).powf(0.3);
                let r_ep = (60.0 / epochs).powf(0.8);
                let r_s = (0.382 / sampling).powf(1.2);
                let r_bb = (20.0 / backbone).powf(0.25);
                let r_batch = 1.0 + 0.15 * (batch / 64.0).log2().powi(2);
                let train_error = 0.002 + 0.09 * r_lr * r_ep * r_s * r_bb * r_batch;
                let train_time = 400.0
                    * (epochs / 60.0)
                    * sampling
                    * (backbone / 20.0).powf(0.9)
                    * (64.0 / batch).powf(0.4);
                let test_error = 0.05 + 0.8 * train_error + 0.02 * r_ep;
                let mut out = Measurements::new();
                out.insert(
                    "train".into(),
                    BTreeMap::from([
                        ("error".to_string(), train_error),
                        ("time".to_string(), train_time),
                    ]),
                );
                out.insert(
                    "test".into(),
                    BTreeMap::from([
                        ("error".to_string(), test_error),
                        ("time".to_string(), train_time),
                    ]),
                );
                out
            }
        })
    }

    /// Measurements with seeded multiplicative noise for one run.
    pub fn noisy_measurements(
        &self,
        space: &DesignSpace,
        levels: &[usize],
        seed: u64,
        run_id: u64,
        noise: f64,
    ) -> Result<Measurements> {
        let mut measurements = self.measurements(space, levels, seed)?;
        if noise > 0.0 {
            let mut rng = run_rng(seed, run_id);
            for values in measurements.values_mut() {
                for value in values.values_mut() {
                    *value = (*value * (1.0 + noise * standard_normal(&mut rng))).max(1e-9);
                }
            }
        }
        Ok(measurements)
    }
}

fn flat_measurements(train_error: f64, time: f64, test_error: f64) -> Measurements {
    let mut out = Measurements::new();
    for (name, error) in [("train", train_error), ("test", test_error)] {
        out.insert(
            name.into(),
            BTreeMap::from([("error".to_string(), error), ("time".to_string(), time)]),
        );
    }
    out
}

/// Numeric value per factor; categorical levels contribute their 1-based index.
fn factor_values(space: &DesignSpace, levels: &[usize]) -> Result<Vec<f64>> {
    if levels.len() != space.factor_count() {
        return Err(Error::IndexCountMismatch {
            expected: space.factor_count(),
            got: levels.len(),
        });
    }
    space
        .factors()
        .iter()
        .zip(levels)
        .map(|(factor, &index)| {
            let value = factor.level(index)?;
            Ok(value.as_f64().unwrap_or(index as f64))
        })
        .collect()
}

const EFFECT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; platform-independent.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mix3(a: u64, b: u64, c: u64) -> u64 {
    mix(mix(mix(a).wrapping_add(b)).wrapping_add(c))
}

fn unit_from(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

const RUN_SALT: u64 = 0x7261_6e64_5f72_756e;

/// Per-run RNG, derived from the global seed and the run id so results are
/// identical regardless of scheduling or in-flight limits.
pub fn run_rng(seed: u64, run_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix3(seed, RUN_SALT, run_id))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on two uniform draws; u1 kept away from zero.
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
