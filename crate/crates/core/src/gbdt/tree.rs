use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// Upper bound on terminal regions.
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_leaves: 31,
            min_samples_leaf: 5,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_leaves < 1 {
            return Err(Error::arg("max_leaves must be >= 1"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::arg("min_samples_leaf must be >= 1"));
        }
        Ok(())
    }
}

/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Arena-stored binary regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    /// Builds a tree from explicit nodes, checking structure.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        let tree = Self { nodes };
        tree.check()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Largest feature index referenced, if any split exists.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    /// Index of the leaf node that `x` routes to.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Leaf { .. } => return idx,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { value } => value,
            TreeNode::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub(crate) fn set_leaf_value(&mut self, node: usize, v: f64) {
        if let TreeNode::Leaf { value } = &mut self.nodes[node] {
            *value = v;
        }
    }

    /// Children must come after their parent and every node must be reached once.
    fn check(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        seen[0] = true;
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split {
                    threshold, left, right, ..
                } => {
                    if !threshold.is_finite() {
                        return Err(Error::Format(format!("node {i}: non-finite threshold")));
                    }
                    for child in [left, right] {
                        if child <= i || child >= self.nodes.len() || seen[child] {
                            return Err(Error::Format(format!("node {i}: bad child index {child}")));
                        }
                        seen[child] = true;
                    }
                }
                TreeNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(Error::Format(format!("node {i}: non-finite leaf value")));
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("tree has unreachable nodes".into()));
        }
        Ok(())
    }
}

/// Per-feature row orderings, computed once per dataset and reused by
/// every boosting round.
///
/// Rows are ordered by feature value, then by a canonical rank derived from
/// the full row contents, so all accumulations happen in an order that does
/// not depend on how the caller arranged the rows.
#[derive(Debug, Clone)]
pub struct Presorted {
    by_feature: Vec<Vec<u32>>,
    canonical: Vec<u32>,
    /// Feature values column by column.
    columns: Vec<Vec<f64>>,
    /// `columns[f]` permuted into `by_feature[f]` order.
    sorted_values: Vec<Vec<f64>>,
}

impl Presorted {
    pub fn new(data: &Dataset) -> Self {
        let n = data.len();
        let mut canonical: Vec<u32> = (0..n as u32).collect();
        canonical.sort_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            cmp_slices(data.row(a), data.row(b)).then(data.targets()[a].total_cmp(&data.targets()[b]))
        });
        let mut rank = vec![0u32; n];
        for (r, &row) in canonical.iter().enumerate() {
            rank[row as usize] = r as u32;
        }
        let by_feature: Vec<Vec<u32>> = (0..data.n_features())
            .map(|f| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| {
                    data.value(a as usize, f)
                        .total_cmp(&data.value(b as usize, f))
                        .then(rank[a as usize].cmp(&rank[b as usize]))
                });
                idx
            })
            .collect();
        let columns: Vec<Vec<f64>> = (0..data.n_features())
            .map(|f| (0..n).map(|i| data.value(i, f)).collect())
            .collect();
        let sorted_values = by_feature
            .iter()
            .zip(&columns)
            .map(|(order, col)| order.iter().map(|&r| col[r as usize]).collect())
            .collect();
        Self {
            by_feature,
            canonical,
            columns,
            sorted_values,
        }
    }
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// One accepted split during best-first growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRecord {
    pub node: usize,
    pub feature: usize,
    pub threshold: f64,
    /// Reduction in sum of squared deviations.
    pub gain: f64,
    pub n_rows: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// An unsplit leaf: the half-open range `start..end` of every per-feature
/// order and of the canonical member list.
struct Open {
    node: usize,
    start: usize,
    end: usize,
    best: Option<Candidate>,
}

/// Result of growing a tree: the tree with mean-residual leaves, leaf
/// membership in canonical row order, and the split sequence.
pub(crate) struct Grown {
    pub tree: RegressionTree,
    pub leaves: Vec<(usize, Vec<u32>)>,
    pub splits: Vec<SplitRecord>,
}

/// Tolerance below which two gains count as tied, and below which a gain
/// counts as no improvement at all.
fn tie_tolerance(residuals: &[f64], members: &[u32]) -> f64 {
    let scale: f64 = members.iter().map(|&i| residuals[i as usize].powi(2)).sum();
    1e-12 * scale.max(f64::MIN_POSITIVE)
}

/// Row orders and values per feature, partitioned in place as leaves split.
struct Workspace {
    orders: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
    members: Vec<u32>,
    /// `reciprocal[k] = 1 / k`.
    reciprocal: Vec<f64>,
    scratch_rows: Vec<u32>,
    scratch_values: Vec<f64>,
}

impl Workspace {
    fn new(pre: &Presorted) -> Self {
        let n = pre.canonical.len();
        Self {
            orders: pre.by_feature.clone(),
            values: pre.sorted_values.clone(),
            members: pre.canonical.clone(),
            reciprocal: (0..=n).map(|k| 1.0 / k as f64).collect(),
            scratch_rows: Vec::with_capacity(n),
            scratch_values: Vec::with_capacity(n),
        }
    }

    /// Stable partition of `start..end` in every list; returns the split point.
    fn partition(&mut self, start: usize, end: usize, left: &[bool]) -> usize {
        for (order, values) in self.orders.iter_mut().zip(&mut self.values) {
            self.scratch_rows.clear();
            self.scratch_values.clear();
            let mut w = start;
            for k in start..end {
                let (r, v) = (order[k], values[k]);
                if left[r as usize] {
                    order[w] = r;
                    values[w] = v;
                    w += 1;
                } else {
                    self.scratch_rows.push(r);
                    self.scratch_values.push(v);
                }
            }
            order[w..end].copy_from_slice(&self.scratch_rows);
            values[w..end].copy_from_slice(&self.scratch_values);
        }
        self.scratch_rows.clear();
        let mut w = start;
        for k in start..end {
            let r = self.members[k];
            if left[r as usize] {
                self.members[w] = r;
                w += 1;
            } else {
                self.scratch_rows.push(r);
            }
        }
        self.members[w..end].copy_from_slice(&self.scratch_rows);
        w
    }

    fn best_split(&self, residuals: &[f64], start: usize, end: usize, cfg: &TreeConfig, tol: f64) -> Option<Candidate> {
        let n = end - start;
        let msl = cfg.min_samples_leaf;
        if n < 2 * msl || n < 2 {
            return None;
        }
        let total: f64 = self.members[start..end].iter().map(|&i| residuals[i as usize]).sum();
        let parent = total * total / n as f64;
        let inv = &self.reciprocal;
        let mut best: Option<Candidate> = None;
        for (f, (order, values)) in self.orders.iter().zip(&self.values).enumerate() {
            let order = &order[start..end];
            let values = &values[start..end];
            let mut left_sum: f64 = order[..msl - 1].iter().map(|&r| residuals[r as usize]).sum();
            // Candidate k puts rows 0..=k on the left.
            for k in (msl - 1)..(n - msl) {
                left_sum += residuals[order[k] as usize];
                let (x, x_next) = (values[k], values[k + 1]);
                if x_next <= x {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum * inv[k + 1] + right_sum * right_sum * inv[n - k - 1] - parent;
                if gain > tol && best.is_none_or(|b| gain > b.gain + tol) {
                    best = Some(Candidate {
                        feature: f,
                        threshold: 0.5 * (x + x_next),
                        gain,
                    });
                }
            }
        }
        best
    }
}

pub(crate) fn grow(data: &Dataset, pre: &Presorted, residuals: &[f64], cfg: &TreeConfig) -> Result<Grown> {
    cfg.validate()?;
    if residuals.len() != data.len() {
        return Err(Error::arg("residuals and dataset differ in length"));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::arg("non-finite residual"));
    }
    let tol = tie_tolerance(residuals, &pre.canonical);
    let mut ws = Workspace::new(pre);
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let n = data.len();
    let mut open = vec![Open {
        node: 0,
        start: 0,
        end: n,
        best: ws.best_split(residuals, 0, n, cfg, tol),
    }];
    let mut splits = Vec::new();
    let mut left_mask = vec![false; n];

    while open.len() < cfg.max_leaves {
        // Largest gain first; ties go to the earliest-created leaf.
        let mut pick: Option<usize> = None;
        for (i, o) in open.iter().enumerate() {
            if let Some(c) = o.best {
                if pick.is_none_or(|p| c.gain > open[p].best.unwrap().gain + tol) {
                    pick = Some(i);
                }
            }
        }
        let Some(i) = pick else { break };
        let leaf = open.remove(i);
        let c = leaf.best.unwrap();
        let col = &pre.columns[c.feature];
        for &r in &ws.members[leaf.start..leaf.end] {
            left_mask[r as usize] = col[r as usize] <= c.threshold;
        }

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes[leaf.node] = TreeNode::Split {
            feature: c.feature,
            threshold: c.threshold,
            left: left_id,
            right: right_id,
        };
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes.push(TreeNode::Leaf { value: 0.0 });
        splits.push(SplitRecord {
            node: leaf.node,
            feature: c.feature,
            threshold: c.threshold,
            gain: c.gain,
            n_rows: leaf.end - leaf.start,
        });

        let mid = ws.partition(leaf.start, leaf.end, &left_mask);
        // `open` stays ordered by node id, i.e. creation order.
        for (node, start, end) in [(left_id, leaf.start, mid), (right_id, mid, leaf.end)] {
            let best = ws.best_split(residuals, start, end, cfg, tol);
            open.push(Open { node, start, end, best });
        }
    }

    let mut leaves = Vec::with_capacity(open.len());
    for o in open {
        let members = ws.members[o.start..o.end].to_vec();
        nodes[o.node] = TreeNode::Leaf {
            value: mean_in_order(residuals, &members),
        };
        leaves.push((o.node, members));
    }
    Ok(Grown {
        tree: RegressionTree { nodes },
        leaves,
        splits,
    })
}

fn mean_in_order(residuals: &[f64], members: &[u32]) -> f64 {
    members.iter().map(|&i| residuals[i as usize]).sum::<f64>() / members.len() as f64
}

/// Fits a regression tree to the dataset's targets (the residuals) by
/// best-first variance-reduction splitting. Leaves hold mean residuals.
pub fn fit_tree(data: &Dataset, cfg: &TreeConfig) -> Result<RegressionTree> {
    Ok(fit_tree_traced(data, cfg)?.0)
}

/// As [`fit_tree`], also returning the accepted splits in growth order.
pub fn fit_tree_traced(data: &Dataset, cfg: &TreeConfig) -> Result<(RegressionTree, Vec<SplitRecord>)> {
    let pre = Presorted::new(data);
    let grown = grow(data, &pre, data.targets(), cfg)?;
    Ok((grown.tree, grown.splits))
}
