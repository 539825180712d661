//! CART trees grown on Gini impurity, bagged into a random forest.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, RecordSet, FEATURE_ORDER};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

pub const DEFAULT_TREES: usize = 100;

/// Gini impurity `1 − Σ p²` of a `[negative, positive]` count pair.
pub fn gini(class_counts: [u64; 2]) -> Result<f64> {
    let n = class_counts[0] + class_counts[1];
    if n == 0 {
        return Err(Error::Contract("gini impurity of an empty node".into()));
    }
    Ok(gini_unchecked(class_counts[0] as f64, class_counts[1] as f64))
}

fn gini_unchecked(neg: f64, pos: f64) -> f64 {
    let n = neg + pos;
    1.0 - (neg * neg + pos * pos) / (n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeaturesRule {
    Sqrt,
    All,
}

/// How many features each node may consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxFeatures {
    Rule(MaxFeaturesRule),
    Count(usize),
}

impl Default for MaxFeatures {
    fn default() -> Self {
        MaxFeatures::Rule(MaxFeaturesRule::Sqrt)
    }
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Rule(MaxFeaturesRule::Sqrt) => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::Rule(MaxFeaturesRule::All) => n_features,
            MaxFeatures::Count(k) => k.clamp(1, n_features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    #[serde(default)]
    pub max_features: MaxFeatures,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

fn default_min_samples_split() -> usize {
    2
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_features: MaxFeatures::default(),
            min_samples_split: default_min_samples_split(),
            max_depth: None,
        }
    }
}

impl TreeParams {
    /// Every feature at every node, grown until pure.
    pub fn unrestricted() -> Self {
        TreeParams {
            max_features: MaxFeatures::Rule(MaxFeaturesRule::All),
            ..TreeParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// `value <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        impurity_decrease: f64,
        n_samples: u64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf { class_counts: [u64; 2] },
}

impl TreeNode {
    pub fn leaf_for(&self, x: &[u64]) -> [u64; 2] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class_counts } => return *class_counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] as f64 <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Class frequencies `[negative, positive]` of the leaf reached by `x`.
    pub fn predict_frequencies(&self, x: &[u64]) -> [f64; 2] {
        let [neg, pos] = self.leaf_for(x);
        let n = (neg + pos) as f64;
        [neg as f64 / n, pos as f64 / n]
    }

    pub fn predict(&self, x: &[u64]) -> Label {
        let [neg, pos] = self.predict_frequencies(x);
        if pos > neg {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn n_samples(&self) -> u64 {
        match self {
            TreeNode::Split { n_samples, .. } => *n_samples,
            TreeNode::Leaf { class_counts } => class_counts[0] + class_counts[1],
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Adds `n_samples × impurity_decrease` of every split into `acc[feature]`.
    pub fn accumulate_importance(&self, acc: &mut [f64]) {
        if let TreeNode::Split {
            feature,
            impurity_decrease,
            n_samples,
            left,
            right,
            ..
        } = self
        {
            acc[*feature] += *n_samples as f64 * impurity_decrease;
            left.accumulate_importance(acc);
            right.accumulate_importance(acc);
        }
    }

    /// Indented text rendering, one node per line.
    pub fn render(&self, feature_names: &[String]) -> String {
        let mut out = String::new();
        self.render_into(feature_names, 0, &mut out);
        out
    }

    fn render_into(&self, names: &[String], depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match self {
            TreeNode::Leaf { class_counts } => {
                let _ = writeln!(out, "{pad}leaf negative={} positive={}", class_counts[0], class_counts[1]);
            }
            TreeNode::Split {
                feature,
                threshold,
                impurity_decrease,
                n_samples,
                left,
                right,
            } => {
                let name = names.get(*feature).map_or("?", String::as_str);
                let _ = writeln!(
                    out,
                    "{pad}{name} <= {threshold} (samples={n_samples}, decrease={impurity_decrease:.6})"
                );
                left.render_into(names, depth + 1, out);
                right.render_into(names, depth + 1, out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// Column-major copy of the training matrix.
struct Columns {
    cols: Vec<Vec<u64>>,
    labels: Vec<Label>,
}

impl Columns {
    fn from_rows<R: AsRef<[u64]>>(rows: &[R], labels: &[Label]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Contract(format!("{} rows for {} labels", rows.len(), labels.len())));
        }
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut cols = vec![Vec::with_capacity(rows.len()); width];
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::Contract("rows have differing widths".into()));
            }
            for (col, &v) in cols.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Ok(Columns {
            cols,
            labels: labels.to_vec(),
        })
    }

    fn n_features(&self) -> usize {
        self.cols.len()
    }

    fn class_counts(&self, samples: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &i in samples {
            c[self.labels[i].index()] += 1;
        }
        c
    }
}

// Relative slack when comparing candidate decreases, so equal splits reached
// through different float paths still resolve to the lowest (feature, threshold).
const TIE_EPS: f64 = 1e-12;

/// Best split over `candidates` at midpoints between consecutive distinct
/// values, with zero-gain splits allowed. Returns `None` only when every
/// candidate feature is constant over `samples`.
fn find_split(data: &Columns, samples: &[usize], candidates: &[usize], buf: &mut Vec<(u64, Label)>) -> Option<Split> {
    let parent = data.class_counts(samples);
    let n = samples.len() as f64;
    let parent_gini = gini_unchecked(parent[0] as f64, parent[1] as f64);
    let mut best: Option<Split> = None;
    for &f in candidates {
        buf.clear();
        buf.extend(samples.iter().map(|&i| (data.cols[f][i], data.labels[i])));
        buf.sort_unstable_by_key(|&(v, _)| v);
        let mut left = [0u64; 2];
        for k in 0..buf.len() - 1 {
            left[buf[k].1.index()] += 1;
            let (v, next) = (buf[k].0, buf[k + 1].0);
            if v == next {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let nl = (left[0] + left[1]) as f64;
            let nr = (right[0] + right[1]) as f64;
            let children = nl / n * gini_unchecked(left[0] as f64, left[1] as f64)
                + nr / n * gini_unchecked(right[0] as f64, right[1] as f64);
            let decrease = (parent_gini - children).max(0.0);
            if best.is_none_or(|b| decrease > b.impurity_decrease + TIE_EPS) {
                best = Some(Split {
                    feature: f,
                    threshold: (v as f64 + next as f64) / 2.0,
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

/// The split with the largest positive weighted impurity decrease, if any.
/// Ties go to the lower feature index, then the lower threshold.
pub fn best_split<R: AsRef<[u64]>>(rows: &[R], labels: &[Label], candidates: &[usize]) -> Option<Split> {
    if rows.len() < 2 || candidates.is_empty() {
        return None;
    }
    let data = Columns::from_rows(rows, labels).ok()?;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let samples: Vec<usize> = (0..rows.len()).collect();
    find_split(&data, &samples, &sorted, &mut Vec::new()).filter(|s| s.impurity_decrease > 0.0)
}

struct Grower<'a> {
    data: &'a Columns,
    params: &'a TreeParams,
    n_candidates: usize,
    buf: Vec<(u64, Label)>,
}

impl Grower<'_> {
    fn grow(&mut self, samples: &mut [usize], depth: usize, rng: &mut Rng) -> TreeNode {
        let counts = self.data.class_counts(samples);
        let pure = counts[0] == 0 || counts[1] == 0;
        let too_small = samples.len() < self.params.min_samples_split.max(2);
        let too_deep = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || too_small || too_deep {
            return TreeNode::Leaf { class_counts: counts };
        }

        // Features constant over this node cannot split it and do not count
        // towards `max_features`.
        let varying: Vec<usize> = (0..self.data.n_features())
            .filter(|&f| {
                let col = &self.data.cols[f];
                let first = col[samples[0]];
                samples.iter().any(|&i| col[i] != first)
            })
            .collect();
        let mut candidates: Vec<usize> = if self.n_candidates >= varying.len() {
            varying
        } else {
            index::sample(rng, varying.len(), self.n_candidates)
                .into_iter()
                .map(|k| varying[k])
                .collect()
        };
        candidates.sort_unstable();

        let Some(split) = find_split(self.data, samples, &candidates, &mut self.buf) else {
            return TreeNode::Leaf { class_counts: counts };
        };

        let col = &self.data.cols[split.feature];
        let mut boundary = 0;
        for k in 0..samples.len() {
            if (col[samples[k]] as f64) <= split.threshold {
                samples.swap(boundary, k);
                boundary += 1;
            }
        }
        let n_samples = samples.len() as u64;
        let (l, r) = samples.split_at_mut(boundary);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            impurity_decrease: split.impurity_decrease,
            n_samples,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

fn grow_tree(data: &Columns, samples: &mut [usize], params: &TreeParams, rng: &mut Rng) -> TreeNode {
    let mut grower = Grower {
        data,
        params,
        n_candidates: params.max_features.resolve(data.n_features()),
        buf: Vec::with_capacity(samples.len()),
    };
    grower.grow(samples, 0, rng)
}

/// Grows one CART tree on all of `rows`.
///
/// Each node draws a fresh candidate set from the features that vary over
/// it. A node becomes a leaf when it is pure, smaller than
/// `min_samples_split`, at `max_depth`, or when no feature varies. Impure nodes whose best split has
/// zero gain are still split, so unrestricted trees always fit
/// contradiction-free data exactly.
pub fn fit_tree<R: AsRef<[u64]>>(rows: &[R], labels: &[Label], params: &TreeParams, rng: &mut Rng) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::Fit("cannot grow a tree on zero rows".into()));
    }
    let data = Columns::from_rows(rows, labels)?;
    let mut samples: Vec<usize> = (0..rows.len()).collect();
    Ok(grow_tree(&data, &mut samples, params, rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default)]
    pub max_features: MaxFeatures,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    /// Disabling bootstrap trains every tree on the full input.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
}

fn default_trees() -> usize {
    DEFAULT_TREES
}

fn default_bootstrap() -> bool {
    true
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: DEFAULT_TREES,
            max_features: MaxFeatures::default(),
            min_samples_split: default_min_samples_split(),
            max_depth: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_features: self.max_features,
            min_samples_split: self.min_samples_split,
            max_depth: self.max_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub feature_order: Vec<String>,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<TreeNode>,
}

impl Forest {
    pub fn fit(train: &RecordSet, params: &ForestParams, seed: u64) -> Result<Self> {
        let rows: Vec<&[u64]> = train.rows.iter().map(|r| &r.values[..]).collect();
        let names = FEATURE_ORDER.iter().map(|f| f.name().to_string()).collect();
        Self::fit_counts(&rows, &train.labels(), params, seed, names)
    }

    /// Tree `i` uses a generator seeded from `(seed, i)` for both its
    /// bootstrap draw and its feature sampling.
    pub fn fit_counts<R: AsRef<[u64]> + Sync>(
        rows: &[R],
        labels: &[Label],
        params: &ForestParams,
        seed: u64,
        feature_order: Vec<String>,
    ) -> Result<Self> {
        if params.n_trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        let data = Columns::from_rows(rows, labels)?;
        let counts = data.class_counts(&(0..rows.len()).collect::<Vec<_>>());
        if counts.contains(&0) {
            return Err(Error::Fit(format!(
                "random forest needs both classes, got {} positive and {} negative rows",
                counts[1], counts[0]
            )));
        }
        let n = rows.len();
        let tree_params = params.tree_params();
        let tree_seeds: Vec<u64> = (0..params.n_trees as u64)
            .map(|i| rng::derive_seed(seed, "tree", i))
            .collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&s| {
                let mut rng = rng::seeded(s);
                let mut samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow_tree(&data, &mut samples, &tree_params, &mut rng)
            })
            .collect();
        Ok(Forest {
            params: params.clone(),
            feature_order,
            tree_seeds,
            trees,
        })
    }

    /// Mean of the per-tree leaf class frequencies, `[negative, positive]`.
    pub fn predict_frequencies(&self, x: &[u64]) -> [f64; 2] {
        let mut acc = [0.0, 0.0];
        for t in &self.trees {
            let f = t.predict_frequencies(x);
            acc[0] += f[0];
            acc[1] += f[1];
        }
        let n = self.trees.len() as f64;
        [acc[0] / n, acc[1] / n]
    }

    /// Soft vote; an exact tie is negative.
    pub fn predict(&self, x: &[u64]) -> Label {
        let [neg, pos] = self.predict_frequencies(x);
        if pos > neg {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// Normalized Gini importance: per feature, the sample-weighted impurity
    /// decrease of every split on it across all trees, scaled to sum to 1.
    pub fn gini_importance(&self) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.feature_order.len()];
        for t in &self.trees {
            t.accumulate_importance(&mut acc);
        }
        let total: f64 = acc.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Importance(
                "forest has no impurity-reducing splits to attribute".into(),
            ));
        }
        Ok(acc.into_iter().map(|v| v / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use Label::{Negative as N, Positive as P};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini([5, 5]).unwrap(), 0.5);
        assert_eq!(gini([10, 0]).unwrap(), 0.0);
        assert_abs_diff_eq!(gini([3, 1]).unwrap(), 0.375, epsilon = 1e-15);
        assert!(matches!(gini([0, 0]), Err(Error::Contract(_))));
    }

    #[test]
    fn single_candidate_split() {
        let rows = [[0u64], [0], [5]];
        let s = best_split(&rows, &[N, N, P], &[0]).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert_abs_diff_eq!(s.impurity_decrease, 4.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_rows_have_no_split() {
        let rows = [[1u64, 2], [1, 2], [1, 2]];
        assert_eq!(best_split(&rows, &[N, P, N], &[0, 1]), None);
    }

    #[test]
    fn pure_children_recover_parent_impurity() {
        let rows = [[1u64], [2], [3], [9]];
        let s = best_split(&rows, &[N, N, N, P], &[0]).unwrap();
        assert_abs_diff_eq!(s.impurity_decrease, 0.375, epsilon = 1e-12);
        assert_eq!(s.threshold, 6.0);
    }

    #[test]
    fn ties_prefer_lower_feature_then_threshold() {
        // Both features separate perfectly; feature 0 must win.
        let rows = [[0u64, 0], [1, 1]];
        let s = best_split(&rows, &[N, P], &[1, 0]).unwrap();
        assert_eq!(s.feature, 0);
        // Two equally good thresholds on one feature: the lower wins.
        let rows = [[0u64], [1], [2], [3]];
        let s = best_split(&rows, &[N, P, P, N], &[0]).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn xor_has_no_positive_split_but_tree_still_fits() {
        let rows = [[0u64, 0], [1, 1], [0, 1], [1, 0]];
        let labels = [P, P, N, N];
        assert_eq!(best_split(&rows, &labels, &[0, 1]), None);
        let tree = fit_tree(&rows, &labels, &TreeParams::unrestricted(), &mut rng::seeded(0)).unwrap();
        for (r, l) in rows.iter().zip(labels) {
            assert_eq!(tree.predict(r), l);
        }
    }

    #[test]
    fn single_row_and_pure_inputs_are_leaves() {
        let tree = fit_tree(&[[3u64, 1]], &[P], &TreeParams::default(), &mut rng::seeded(1)).unwrap();
        assert_eq!(tree, TreeNode::Leaf { class_counts: [0, 1] });
        let tree = fit_tree(&[[3u64], [4], [9]], &[N, N, N], &TreeParams::default(), &mut rng::seeded(1)).unwrap();
        assert_eq!(tree, TreeNode::Leaf { class_counts: [3, 0] });
    }

    #[test]
    fn separable_one_feature_gives_stump() {
        let rows: Vec<[u64; 1]> = (0..20).map(|i| [i]).collect();
        let labels: Vec<Label> = (0..20).map(|i| if i >= 12 { P } else { N }).collect();
        let tree = fit_tree(&rows, &labels, &TreeParams::unrestricted(), &mut rng::seeded(2)).unwrap();
        assert_eq!(tree.depth(), 1);
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(tree.predict(r), *l);
        }
    }

    #[test]
    fn max_depth_is_respected() {
        let rows: Vec<[u64; 2]> = (0..64).map(|i| [i % 8, i / 8]).collect();
        let labels: Vec<Label> = (0..64).map(|i| if (i % 8 + i / 8) % 2 == 0 { P } else { N }).collect();
        let params = TreeParams {
            max_depth: Some(3),
            ..TreeParams::unrestricted()
        };
        let tree = fit_tree(&rows, &labels, &params, &mut rng::seeded(3)).unwrap();
        assert!(tree.depth() <= 3);
    }

    #[test]
    fn forest_prediction_rules() {
        let leaf = |n, p| TreeNode::Leaf { class_counts: [n, p] };
        let forest = |trees| Forest {
            params: ForestParams::default(),
            feature_order: names(1),
            tree_seeds: vec![],
            trees,
        };
        assert_eq!(forest(vec![leaf(0, 3), leaf(1, 4)]).predict(&[0]), P);
        assert_eq!(forest(vec![leaf(1, 0), leaf(0, 1)]).predict(&[0]), N);
        let stump = TreeNode::Split {
            feature: 0,
            threshold: 1.5,
            impurity_decrease: 0.5,
            n_samples: 4,
            left: Box::new(leaf(2, 0)),
            right: Box::new(leaf(0, 2)),
        };
        let f = forest(vec![stump.clone()]);
        for x in 0..5u64 {
            assert_eq!(f.predict(&[x]), stump.predict(&[x]));
        }
        assert_eq!(f.gini_importance().unwrap(), vec![1.0]);
        assert!(matches!(forest(vec![leaf(1, 1)]).gini_importance(), Err(Error::Importance(_))));
    }

    #[test]
    fn duplicated_trees_keep_importance() {
        let rows: Vec<[u64; 3]> = (0..40).map(|i| [i % 7, i % 5, i % 3]).collect();
        let labels: Vec<Label> = (0..40).map(|i| if i % 7 + i % 3 > 4 { P } else { N }).collect();
        let mut f = Forest::fit_counts(&rows, &labels, &ForestParams { n_trees: 5, ..Default::default() }, 1, names(3))
            .unwrap();
        let before = f.gini_importance().unwrap();
        let copy = f.trees.clone();
        f.trees.extend(copy);
        let after = f.gini_importance().unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn forest_needs_two_classes() {
        let r = Forest::fit_counts(&[[1u64], [2]], &[P, P], &ForestParams::default(), 0, names(1));
        assert!(matches!(r, Err(Error::Fit(_))));
    }

    #[test]
    fn render_mentions_feature_names() {
        let rows = [[0u64, 1], [5, 1]];
        let tree = fit_tree(&rows, &[N, P], &TreeParams::unrestricted(), &mut rng::seeded(0)).unwrap();
        let text = tree.render(&["peer_review".into(), "gplus".into()]);
        assert!(text.starts_with("peer_review <= 2.5"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::default().resolve(11), 4);
        assert_eq!(MaxFeatures::Rule(MaxFeaturesRule::All).resolve(11), 11);
        assert_eq!(MaxFeatures::Count(20).resolve(11), 11);
        let parsed: MaxFeatures = serde_json::from_str("\"sqrt\"").unwrap();
        assert_eq!(parsed, MaxFeatures::default());
        let parsed: MaxFeatures = serde_json::from_str("3").unwrap();
        assert_eq!(parsed, MaxFeatures::Count(3));
    }
}
