use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::loss::{Loss, LossFunction};
use super::tree::{grow, Presorted, RegressionTree, TreeConfig, TreeNode};
use crate::error::{Error, Result};

/// Version tag written into serialized models.
pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "dfc-gbdt";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    /// Boosting rounds `M`.
    pub n_iterations: usize,
    /// Shrinkage `v`.
    pub learning_rate: f64,
    #[serde(flatten)]
    pub tree: TreeConfig,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_iterations: 200,
            learning_rate: 0.1,
            tree: TreeConfig::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations < 1 {
            return Err(Error::arg("n_iterations must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::arg(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        self.tree.validate()
    }
}

/// Trained additive model `F_0 + v · Σ tree_m(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub base_value: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
    pub loss: LossFunction,
    /// Mean training loss after `F_0` and after each round.
    pub train_loss: Vec<f64>,
    /// Mean held-out loss per round when a validation set was supplied.
    pub valid_loss: Vec<f64>,
}

impl Ensemble {
    /// A model with no trees.
    pub fn constant(base_value: f64, learning_rate: f64, n_features: usize, loss: LossFunction) -> Self {
        Self {
            base_value,
            learning_rate,
            trees: Vec::new(),
            n_features,
            loss,
            train_loss: Vec::new(),
            valid_loss: Vec::new(),
        }
    }

    /// Sum of raw tree outputs at `x`, before shrinkage.
    fn tree_sum(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::arg(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(self.base_value + self.learning_rate * self.tree_sum(x))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        (0..data.len()).map(|i| self.predict(data.row(i))).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Free-function form of [`Ensemble::predict`].
pub fn predict(ensemble: &Ensemble, x: &[f64]) -> Result<f64> {
    ensemble.predict(x)
}

fn mean_loss(loss: &impl Loss, targets: &[f64], preds: &[f64]) -> f64 {
    targets
        .iter()
        .zip(preds)
        .map(|(&t, &f)| loss.evaluate(t, f))
        .sum::<f64>()
        / targets.len() as f64
}

/// Trains an ensemble: `F_0` from the loss, then `M` rounds of
/// residuals → tree → per-leaf line search → shrunken update.
pub fn train(data: &Dataset, loss: LossFunction, cfg: &BoostConfig) -> Result<Ensemble> {
    train_with_validation(data, None, loss, cfg)
}

/// As [`train`], additionally reporting loss on `valid` each round. The
/// report never changes the fitted model.
pub fn train_with_validation(
    data: &Dataset,
    valid: Option<&Dataset>,
    loss: LossFunction,
    cfg: &BoostConfig,
) -> Result<Ensemble> {
    cfg.validate()?;
    if let Some(v) = valid {
        if v.n_features() != data.n_features() {
            return Err(Error::arg("validation set has a different feature arity"));
        }
    }
    let n = data.len();
    let targets = data.targets();
    let base = loss.initial_constant(targets)?;
    let v = cfg.learning_rate;
    let pre = Presorted::new(data);

    let mut ens = Ensemble::constant(base, v, data.n_features(), loss);
    // Unshrunk per-row tree sums; predictions are base + v·sum, as in `predict`.
    let mut sums = vec![0.0; n];
    let mut preds = vec![base; n];
    let mut valid_sums = valid.map(|d| vec![0.0; d.len()]);
    ens.train_loss.push(mean_loss(&loss, targets, &preds));
    if let (Some(d), Some(s)) = (valid, &valid_sums) {
        let p: Vec<f64> = s.iter().map(|x| base + v * x).collect();
        ens.valid_loss.push(mean_loss(&loss, d.targets(), &p));
    }

    let mut residuals = vec![0.0; n];
    let mut leaf_targets = Vec::new();
    let mut leaf_preds = Vec::new();
    for _ in 0..cfg.n_iterations {
        for i in 0..n {
            residuals[i] = loss.negative_gradient(targets[i], preds[i]);
        }
        let grown = grow(data, &pre, &residuals, &cfg.tree)?;
        let mut tree = grown.tree;
        for (node, members) in &grown.leaves {
            leaf_targets.clear();
            leaf_preds.clear();
            for &r in members {
                leaf_targets.push(targets[r as usize]);
                leaf_preds.push(preds[r as usize]);
            }
            let gamma = loss.leaf_value(&leaf_targets, &leaf_preds)?;
            tree.set_leaf_value(*node, gamma);
        }
        for (node, members) in &grown.leaves {
            let gamma = match tree.nodes()[*node] {
                TreeNode::Leaf { value } => value,
                TreeNode::Split { .. } => unreachable!(),
            };
            for &r in members {
                let r = r as usize;
                sums[r] += gamma;
                preds[r] = base + v * sums[r];
            }
        }
        if let (Some(d), Some(s)) = (valid, valid_sums.as_mut()) {
            for (i, acc) in s.iter_mut().enumerate() {
                *acc += tree.predict(d.row(i));
            }
            let p: Vec<f64> = s.iter().map(|x| base + v * x).collect();
            ens.valid_loss.push(mean_loss(&loss, d.targets(), &p));
        }
        ens.trees.push(tree);
        ens.train_loss.push(mean_loss(&loss, targets, &preds));
    }
    Ok(ens)
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    loss: LossFunction,
    n_features: usize,
    base_value: f64,
    learning_rate: f64,
    trees: Vec<TreeDoc>,
    #[serde(default)]
    train_loss: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    nodes: Vec<TreeNode>,
}

impl From<&Ensemble> for ModelDoc {
    fn from(e: &Ensemble) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            loss: e.loss,
            n_features: e.n_features,
            base_value: e.base_value,
            learning_rate: e.learning_rate,
            trees: e
                .trees
                .iter()
                .map(|t| TreeDoc {
                    nodes: t.nodes().to_vec(),
                })
                .collect(),
            train_loss: e.train_loss.clone(),
        }
    }
}

impl TryFrom<ModelDoc> for Ensemble {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        if doc.format != FORMAT_NAME {
            return Err(Error::Format(format!("unknown model format `{}`", doc.format)));
        }
        if doc.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {} (expected {FORMAT_VERSION})",
                doc.version
            )));
        }
        if !doc.base_value.is_finite() || !(doc.learning_rate > 0.0 && doc.learning_rate <= 1.0) {
            return Err(Error::Format("invalid base value or learning rate".into()));
        }
        let trees = doc
            .trees
            .into_iter()
            .map(|t| RegressionTree::from_nodes(t.nodes))
            .collect::<Result<Vec<_>>>()?;
        if trees
            .iter()
            .filter_map(|t| t.max_feature())
            .any(|f| f >= doc.n_features)
        {
            return Err(Error::Format("tree references a feature beyond n_features".into()));
        }
        Ok(Self {
            base_value: doc.base_value,
            learning_rate: doc.learning_rate,
            trees,
            n_features: doc.n_features,
            loss: doc.loss,
            train_loss: doc.train_loss,
            valid_loss: Vec::new(),
        })
    }
}
