use crate::error::{Error, Result};

/// Row-major feature matrix with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        let n_features = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::arg("rows differ in feature arity"));
        }
        Self::from_flat(rows.concat(), n_features, targets)
    }

    pub fn from_flat(features: Vec<f64>, n_features: usize, targets: Vec<f64>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::arg("dataset has no rows"));
        }
        if n_features == 0 {
            return Err(Error::arg("dataset has no features"));
        }
        if features.len() != n_features * targets.len() {
            return Err(Error::arg(format!(
                "feature buffer of {} values does not hold {} rows × {} features",
                features.len(),
                targets.len(),
                n_features
            )));
        }
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::arg("dataset contains non-finite values"));
        }
        Ok(Self {
            n_features,
            features,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.n_features + feature]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Same features, new targets.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.features.clone(), self.n_features, targets)
    }

    /// Rows `[from, until)`.
    pub fn slice(&self, from: usize, until: usize) -> Result<Self> {
        if from >= until || until > self.len() {
            return Err(Error::arg(format!("bad row range {from}..{until}")));
        }
        Self::from_flat(
            self.features[from * self.n_features..until * self.n_features].to_vec(),
            self.n_features,
            self.targets[from..until].to_vec(),
        )
    }
}
