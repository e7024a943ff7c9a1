use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A differentiable training objective.
///
/// `initial_constant` and `leaf_value` solve the one-dimensional
/// minimisations over a constant and over a leaf offset respectively.
pub trait Loss {
    fn name(&self) -> &'static str;

    fn evaluate(&self, target: f64, prediction: f64) -> f64;

    /// `-∂L/∂F` at `prediction`.
    fn negative_gradient(&self, target: f64, prediction: f64) -> f64;

    /// `argmin_γ Σ L(T_i, γ)`.
    fn initial_constant(&self, targets: &[f64]) -> Result<f64>;

    /// `argmin_γ Σ L(T_i, F_i + γ)` over one leaf.
    fn leaf_value(&self, targets: &[f64], predictions: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFunction {
    /// `½ (T − F)²`
    #[default]
    Squared,
    /// `|T − F|`
    Absolute,
}

impl LossFunction {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "squared" => Some(Self::Squared),
            "absolute" => Some(Self::Absolute),
            _ => None,
        }
    }
}

impl Loss for LossFunction {
    fn name(&self) -> &'static str {
        match self {
            Self::Squared => "squared",
            Self::Absolute => "absolute",
        }
    }

    fn evaluate(&self, target: f64, prediction: f64) -> f64 {
        let d = target - prediction;
        match self {
            Self::Squared => 0.5 * d * d,
            Self::Absolute => d.abs(),
        }
    }

    fn negative_gradient(&self, target: f64, prediction: f64) -> f64 {
        let d = target - prediction;
        match self {
            Self::Squared => d,
            Self::Absolute => {
                if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn initial_constant(&self, targets: &[f64]) -> Result<f64> {
        if targets.is_empty() {
            return Err(Error::arg("cannot fit a constant to zero targets"));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::arg("targets must be finite"));
        }
        match self {
            Self::Squared => Ok(canonical_mean(targets.to_vec())),
            Self::Absolute => Ok(median(targets.to_vec())),
        }
    }

    fn leaf_value(&self, targets: &[f64], predictions: &[f64]) -> Result<f64> {
        if targets.len() != predictions.len() {
            return Err(Error::arg("leaf targets and predictions differ in length"));
        }
        if targets.is_empty() {
            return Err(Error::Internal(
                "empty leaf: tree growth produced a leaf without members".into(),
            ));
        }
        let diffs: Vec<f64> = targets.iter().zip(predictions).map(|(t, f)| t - f).collect();
        match self {
            Self::Squared => Ok(canonical_mean(diffs)),
            Self::Absolute => Ok(median(diffs)),
        }
    }
}

/// Mean summed in ascending order, so the result ignores input order.
fn canonical_mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Lower median. Panics on an empty input.
pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty(), "median of empty set");
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Loss-minimising constant over `targets`.
pub fn init_constant(targets: &[f64], loss: &impl Loss) -> Result<f64> {
    loss.initial_constant(targets)
}

/// Elementwise negative gradient.
pub fn pseudo_residuals(targets: &[f64], predictions: &[f64], loss: &impl Loss) -> Result<Vec<f64>> {
    if targets.len() != predictions.len() {
        return Err(Error::arg(format!(
            "targets ({}) and predictions ({}) differ in length",
            targets.len(),
            predictions.len()
        )));
    }
    Ok(targets
        .iter()
        .zip(predictions)
        .map(|(&t, &f)| loss.negative_gradient(t, f))
        .collect())
}

/// Optimal additive offset for the members of one leaf.
pub fn leaf_value(targets: &[f64], predictions: &[f64], loss: &impl Loss) -> Result<f64> {
    loss.leaf_value(targets, predictions)
}
