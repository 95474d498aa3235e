//! Histogram gradient boosting on the log-loss objective.
//!
//! Numeric features are bucketed into at most `n_histogram_bins` bins whose
//! upper edges become split thresholds (`x <= threshold` goes left).
//! Categorical features split on a category set found by ordering categories
//! by gradient/hessian ratio; categories outside the set go right. Trees grow
//! depth-wise to `max_depth`.

use serde::{Deserialize, Serialize};

use super::{require_labels, sigmoid, ModelParams, TrainingMeta, WinProbError, WinProbModel};
use crate::features::{FeatureKind, FeatureMatrix, FeatureSchema};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub learning_rate: f64,
    pub n_histogram_bins: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_child_weight: 1.0,
            learning_rate: 0.1,
            n_histogram_bins: 256,
            lambda: 1.0,
            seed: 0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<(), WinProbError> {
        let bad = |m: String| Err(WinProbError::InvalidConfig(m));
        if self.max_depth == 0 || self.max_depth > 16 {
            return bad(format!("max_depth must be in 1..=16, got {}", self.max_depth));
        }
        if !(self.min_child_weight > 0.0) {
            return bad(format!("min_child_weight must be positive, got {}", self.min_child_weight));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(2..=256).contains(&self.n_histogram_bins) {
            return bad(format!("n_histogram_bins must be in 2..=256, got {}", self.n_histogram_bins));
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Numeric split: `x <= threshold` goes left.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        /// Categorical split: codes in the set go left.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        categories: Option<Vec<u32>>,
        gain: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn zero() -> Self {
        Tree {
            nodes: vec![Node::Leaf { value: 0.0 }],
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    categories,
                    left,
                    right,
                    ..
                } => {
                    let x = row[*feature];
                    let go_left = match (threshold, categories) {
                        (Some(t), _) => x <= *t,
                        (None, Some(set)) => set.binary_search(&(x as u32)).is_ok(),
                        (None, None) => unreachable!("split without a rule"),
                    };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub feature_names: Vec<String>,
}

impl GbtParams {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub(crate) fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }
}

struct Binned {
    /// Column-major bin codes.
    bins: Vec<Vec<u8>>,
    /// Per numeric feature, threshold of each bin (upper edge); empty for
    /// categoricals.
    thresholds: Vec<Vec<f64>>,
    n_bins: Vec<usize>,
    categorical: Vec<bool>,
}

fn bin_features(schema: &FeatureSchema, matrix: &FeatureMatrix, max_bins: usize) -> Result<Binned, WinProbError> {
    let n = matrix.n_rows();
    let mut bins = Vec::with_capacity(matrix.n_cols);
    let mut thresholds = Vec::with_capacity(matrix.n_cols);
    let mut n_bins = Vec::with_capacity(matrix.n_cols);
    let mut categorical = Vec::with_capacity(matrix.n_cols);
    for (j, spec) in schema.features.iter().enumerate() {
        let column: Vec<f64> = (0..n).map(|i| matrix.data[i * matrix.n_cols + j]).collect();
        if spec.kind == FeatureKind::Categorical {
            let levels = schema.n_categories(j);
            if levels > 256 {
                return Err(WinProbError::InvalidConfig(format!("feature {} has {levels} categories (max 256)", spec.name)));
            }
            bins.push(column.iter().map(|&v| v as u8).collect());
            thresholds.push(Vec::new());
            n_bins.push(levels);
            categorical.push(true);
            continue;
        }
        let mut sorted = column.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        // upper edges: midpoints between consecutive distinct values, thinned
        // to quantiles when there are too many
        let cuts: Vec<f64> = if sorted.len() <= max_bins {
            sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
        } else {
            let mut all = column.clone();
            all.sort_by(f64::total_cmp);
            let mut c: Vec<f64> = (1..max_bins)
                .map(|k| {
                    let v = all[k * (n - 1) / max_bins];
                    // place the cut between v and the next distinct value
                    let next = sorted.partition_point(|&u| u <= v);
                    if next < sorted.len() {
                        0.5 * (v + sorted[next])
                    } else {
                        v
                    }
                })
                .collect();
            c.dedup();
            c.retain(|&t| t < *sorted.last().expect("non-empty column"));
            c
        };
        bins.push(column.iter().map(|v| cuts.partition_point(|t| t < v) as u8).collect());
        n_bins.push(cuts.len() + 1);
        thresholds.push(cuts);
        categorical.push(false);
    }
    Ok(Binned {
        bins,
        thresholds,
        n_bins,
        categorical,
    })
}

#[derive(Clone, Copy, Default)]
struct Stat {
    g: f64,
    h: f64,
}

struct Candidate {
    gain: f64,
    feature: usize,
    /// Numeric: highest bin going left. Categorical: prefix length of the
    /// ratio-sorted categories.
    cut: usize,
    left_cats: Option<Vec<u32>>,
}

struct Grower<'a> {
    data: &'a Binned,
    grad: &'a [f64],
    hess: &'a [f64],
    config: &'a GbtConfig,
}

// strict improvement keeps the lowest feature index / threshold on ties
fn improves(best: &Option<Candidate>, gain: f64) -> bool {
    gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain)
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

impl Grower<'_> {
    fn best_split(&self, rows: &[u32], total: Stat) -> Option<Candidate> {
        let lambda = self.config.lambda;
        let mcw = self.config.min_child_weight;
        let parent = score(total.g, total.h, lambda);
        let mut best: Option<Candidate> = None;
        let mut hist = vec![Stat::default(); 256];
        for f in 0..self.data.bins.len() {
            let nb = self.data.n_bins[f];
            if nb < 2 {
                continue;
            }
            hist[..nb].iter_mut().for_each(|s| *s = Stat::default());
            let col = &self.data.bins[f];
            for &r in rows {
                let s = &mut hist[col[r as usize] as usize];
                s.g += self.grad[r as usize];
                s.h += self.hess[r as usize];
            }
            if self.data.categorical[f] {
                let mut cats: Vec<u32> = (0..nb as u32).filter(|&c| hist[c as usize].h > 0.0).collect();
                cats.sort_by(|&a, &b| {
                    let (sa, sb) = (hist[a as usize], hist[b as usize]);
                    (sa.g / sa.h).total_cmp(&(sb.g / sb.h)).then(a.cmp(&b))
                });
                let mut left = Stat::default();
                for k in 0..cats.len().saturating_sub(1) {
                    let s = hist[cats[k] as usize];
                    left.g += s.g;
                    left.h += s.h;
                    let right = Stat {
                        g: total.g - left.g,
                        h: total.h - left.h,
                    };
                    if left.h < mcw || right.h < mcw {
                        continue;
                    }
                    let gain = 0.5 * (score(left.g, left.h, lambda) + score(right.g, right.h, lambda) - parent);
                    if improves(&best, gain) {
                        let mut set = cats[..=k].to_vec();
                        set.sort_unstable();
                        best = Some(Candidate {
                            gain,
                            feature: f,
                            cut: k + 1,
                            left_cats: Some(set),
                        });
                    }
                }
            } else {
                let mut left = Stat::default();
                for b in 0..nb - 1 {
                    left.g += hist[b].g;
                    left.h += hist[b].h;
                    let right = Stat {
                        g: total.g - left.g,
                        h: total.h - left.h,
                    };
                    if left.h < mcw || right.h < mcw {
                        continue;
                    }
                    let gain = 0.5 * (score(left.g, left.h, lambda) + score(right.g, right.h, lambda) - parent);
                    if improves(&best, gain) {
                        best = Some(Candidate {
                            gain,
                            feature: f,
                            cut: b,
                            left_cats: None,
                        });
                    }
                }
            }
        }
        best
    }

    fn leaf(&self, total: Stat) -> Node {
        Node::Leaf {
            value: -total.g / (total.h + self.config.lambda) * self.config.learning_rate,
        }
    }

    fn grow(&self, rows: &mut [u32]) -> Tree {
        let mut nodes = Vec::new();
        self.grow_node(rows, 0, &mut nodes);
        Tree { nodes }
    }

    fn grow_node(&self, rows: &mut [u32], depth: usize, nodes: &mut Vec<Node>) -> usize {
        let total = rows.iter().fold(Stat::default(), |acc, &r| Stat {
            g: acc.g + self.grad[r as usize],
            h: acc.h + self.hess[r as usize],
        });
        let id = nodes.len();
        nodes.push(self.leaf(total));
        if depth >= self.config.max_depth || total.h < 2.0 * self.config.min_child_weight {
            return id;
        }
        let Some(c) = self.best_split(rows, total) else {
            return id;
        };
        let col = &self.data.bins[c.feature];
        let goes_left = |r: u32| match &c.left_cats {
            Some(set) => set.binary_search(&(col[r as usize] as u32)).is_ok(),
            None => (col[r as usize] as usize) <= c.cut,
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if goes_left(rows[i]) {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l_rows, r_rows) = rows.split_at_mut(split);
        let left = self.grow_node(l_rows, depth + 1, nodes);
        let right = self.grow_node(r_rows, depth + 1, nodes);
        let (threshold, categories) = match c.left_cats {
            Some(set) => (None, Some(set)),
            None => (Some(self.data.thresholds[c.feature][c.cut]), None),
        };
        nodes[id] = Node::Split {
            feature: c.feature,
            threshold,
            categories,
            gain: c.gain,
            left,
            right,
        };
        id
    }
}

fn mean_log_loss(raw: &[f64], y: &[bool]) -> f64 {
    raw.iter()
        .zip(y)
        .map(|(&z, &yi)| {
            let l = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            l - if yi { z } else { 0.0 }
        })
        .sum::<f64>()
        / y.len() as f64
}

/// Fits a boosted ensemble. A stage whose tree would raise the training log
/// loss contributes a zero tree instead.
pub fn train_gbt(schema: &FeatureSchema, matrix: &FeatureMatrix, config: &GbtConfig) -> Result<WinProbModel, WinProbError> {
    config.validate()?;
    let labels = require_labels(matrix)?;
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(WinProbError::DegenerateLabels);
    }
    let n = labels.len();
    let prior = positives as f64 / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();
    let data = bin_features(schema, matrix, config.n_histogram_bins)?;

    let mut raw = vec![base_score; n];
    let mut loss = mean_log_loss(&raw, labels);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rows: Vec<u32> = (0..n as u32).collect();
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut next = vec![0.0; n];
    for stage in 0..config.n_trees {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad[i] = p - if labels[i] { 1.0 } else { 0.0 };
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let grower = Grower {
            data: &data,
            grad: &grad,
            hess: &hess,
            config,
        };
        let tree = grower.grow(&mut rows);
        for (i, row) in matrix.rows().enumerate() {
            next[i] = raw[i] + tree.predict(row);
        }
        let next_loss = mean_log_loss(&next, labels);
        if next_loss <= loss {
            std::mem::swap(&mut raw, &mut next);
            loss = next_loss;
            trees.push(tree);
        } else {
            log::debug!("gbt: stage {stage} would raise training loss; adding a zero tree");
            trees.push(Tree::zero());
        }
    }
    log::debug!("gbt: final training loss {loss:.6} after {} trees", config.n_trees);
    Ok(WinProbModel {
        schema: schema.clone(),
        params: ModelParams::Gbt(GbtParams {
            base_score,
            trees,
            feature_names: schema.names(),
        }),
        meta: TrainingMeta {
            seed: config.seed,
            hyperparameters: serde_json::to_value(config).expect("config serializes"),
            train_rows: n,
            split: None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    /// Share of total split gain, scaled so all entries sum to 100.
    pub importance: f64,
}

/// Total-gain importance per schema feature, normalized to sum to 100 and
/// sorted descending (ties keep schema order). An ensemble without splits
/// reports all zeros.
pub fn feature_importance(model: &WinProbModel) -> Result<Vec<Importance>, WinProbError> {
    let ModelParams::Gbt(params) = &model.params else {
        return Err(WinProbError::NotATreeModel(model.kind()));
    };
    let mut gains = vec![0.0; params.feature_names.len()];
    for tree in &params.trees {
        for node in &tree.nodes {
            if let Node::Split { feature, gain, .. } = node {
                gains[*feature] += gain;
            }
        }
    }
    let total: f64 = gains.iter().sum();
    let mut out: Vec<Importance> = params
        .feature_names
        .iter()
        .zip(&gains)
        .map(|(name, &g)| Importance {
            feature: name.clone(),
            importance: if total > 0.0 { 100.0 * g / total } else { 0.0 },
        })
        .collect();
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    Ok(out)
}
