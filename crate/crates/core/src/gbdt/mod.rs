//! Exact greedy gradient boosting with best-first regression trees.
//!
//! The ensemble is `F(x) = F_0 + v · Σ_m tree_m(x)`: a loss-minimising
//! constant, then `M` rounds that fit a tree to the negative loss gradient
//! and re-solve each leaf value against the loss before adding the tree
//! scaled by the learning rate `v`.

mod dataset;
mod ensemble;
mod loss;
pub(crate) mod tree;

pub use dataset::Dataset;
pub use ensemble::{predict, train, train_with_validation, BoostConfig, Ensemble, FORMAT_VERSION};
pub use loss::{init_constant, leaf_value, median, pseudo_residuals, Loss, LossFunction};
pub use tree::{fit_tree, fit_tree_traced, Presorted, RegressionTree, SplitRecord, TreeConfig, TreeNode};
