//! Stratified train/test splitting, stratified k-fold cross-validation, and
//! binary classification metrics. The positive class is "cited in policy".

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, RecordSet};
use crate::error::{Error, Result};
use crate::rng;

fn indices_by_class(rows: &RecordSet) -> [Vec<usize>; 2] {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, r) in rows.rows.iter().enumerate() {
        by_class[r.label.index()].push(i);
    }
    by_class
}

/// Per-class test counts summing to `floor(n * test_fraction)`: each class
/// gets the floor of its exact share, leftover slots go to the classes with
/// the largest fractional remainders.
fn stratified_test_counts(class_sizes: [usize; 2], test_fraction: f64) -> [usize; 2] {
    let n: usize = class_sizes.iter().sum();
    let total = (n as f64 * test_fraction).floor() as usize;
    let exact = class_sizes.map(|c| c as f64 * test_fraction);
    let mut counts = exact.map(|e| e.floor() as usize);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if counts[c] < class_sizes[c] {
            counts[c] += 1;
            left -= 1;
        }
    }
    counts
}

/// Stratified holdout split. Returns `(train, test)`; both keep input order.
pub fn split_train_test(rows: &RecordSet, test_fraction: f64, seed: u64) -> Result<(RecordSet, RecordSet)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!("test fraction {test_fraction} is not in (0, 1)")));
    }
    if rows.len() < 5 {
        return Err(Error::Split(format!("need at least 5 rows, got {}", rows.len())));
    }
    let mut by_class = indices_by_class(rows);
    let test_counts = stratified_test_counts([by_class[0].len(), by_class[1].len()], test_fraction);
    if test_counts.iter().sum::<usize>() == 0 {
        return Err(Error::Split(format!(
            "{} rows at test fraction {test_fraction} leave no test rows",
            rows.len()
        )));
    }
    for (class, count) in by_class.iter().zip(test_counts) {
        if class.len() == count {
            return Err(Error::Split(
                "a class would be absent from the training split".into(),
            ));
        }
    }

    let mut rng = rng::seeded(seed);
    let mut in_test = vec![false; rows.len()];
    for (class, count) in by_class.iter_mut().zip(test_counts) {
        class.shuffle(&mut rng);
        for &i in &class[..count] {
            in_test[i] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| in_test[i]);
    Ok((
        rows.subset(&train_idx, format!("{} | train", rows.provenance)),
        rows.subset(&test_idx, format!("{} | test", rows.provenance)),
    ))
}

#[derive(Debug, Clone)]
pub struct Fold {
    pub train: RecordSet,
    pub validation: RecordSet,
}

/// Validation-fold membership for stratified k-fold: `result[f]` holds the
/// sorted row indices of fold `f`.
pub fn kfold_indices(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::Fold(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Fold(format!("k = {k} exceeds the {n} available rows")));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    for (label, class) in Label::BOTH.iter().zip(&by_class) {
        if !class.is_empty() && class.len() < k {
            return Err(Error::Fold(format!(
                "{label:?} class has {} rows, fewer than k = {k}",
                class.len()
            )));
        }
    }

    let mut rng = rng::seeded(seed);
    let mut folds = vec![Vec::new(); k];
    // Dealing the classes one after the other off a single counter keeps the
    // per-class and the total fold sizes within one of each other.
    let mut slot = 0usize;
    for class in by_class.iter_mut() {
        class.shuffle(&mut rng);
        for &i in class.iter() {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn kfold(rows: &RecordSet, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let folds = kfold_indices(&rows.labels(), k, seed)?;
    let mut fold_of = vec![0usize; rows.len()];
    for (f, members) in folds.iter().enumerate() {
        for &i in members {
            fold_of[i] = f;
        }
    }
    Ok(folds
        .iter()
        .enumerate()
        .map(|(f, members)| {
            let train_idx: Vec<usize> = (0..rows.len()).filter(|&i| fold_of[i] != f).collect();
            Fold {
                train: rows.subset(&train_idx, format!("{} | fold {f} train", rows.provenance)),
                validation: rows.subset(members, format!("{} | fold {f} validation", rows.provenance)),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(predictions: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Contract("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (Label::Positive, Label::Positive) => cm.tp += 1,
            (Label::Positive, Label::Negative) => cm.fp += 1,
            (Label::Negative, Label::Positive) => cm.fn_ += 1,
            (Label::Negative, Label::Negative) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Accuracy plus positive-class precision, recall and F1.
///
/// `micro_recall` is recall pooled over both classes, which for single-label
/// binary data equals accuracy. `degenerate` is set when any ratio had a zero
/// denominator and was reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub micro_recall: f64,
    pub degenerate: bool,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Contract("empty confusion matrix".into()));
    }
    let mut degenerate = false;
    let mut ratio = |num: f64, den: f64| {
        if den == 0.0 {
            degenerate = true;
            0.0
        } else {
            num / den
        }
    };
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let accuracy = (tp + tn) / total as f64;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        micro_recall: accuracy,
        degenerate,
    })
}

/// Component-wise mean of per-fold metrics; degenerate if any fold was.
pub fn mean_metrics(per_fold: &[Metrics]) -> Result<Metrics> {
    if per_fold.is_empty() {
        return Err(Error::Contract("no folds to average".into()));
    }
    let n = per_fold.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| per_fold.iter().map(f).sum::<f64>() / n;
    Ok(Metrics {
        accuracy: mean(|m| m.accuracy),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        micro_recall: mean(|m| m.micro_recall),
        degenerate: per_fold.iter().any(|m| m.degenerate),
    })
}

/// Metrics for several models under one evaluation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `"cv-mean"` for fold averages, `"held-out"` for a test set.
    pub mode: String,
    pub folds: Option<usize>,
    pub models: BTreeMap<String, Metrics>,
}

impl EvalReport {
    pub fn new(mode: impl Into<String>, folds: Option<usize>) -> Self {
        EvalReport {
            mode: mode.into(),
            folds,
            models: BTreeMap::new(),
        }
    }

    /// Metrics as rows, models as columns, three decimals.
    pub fn markdown(&self) -> String {
        let mut out = String::new();
        out.push('|');
        for name in self.models.keys() {
            let _ = write!(out, " | {}", crate::model::ModelKind::display_for(name));
        }
        out.push_str(" |\n|---|");
        out.push_str(&"---:|".repeat(self.models.len()));
        out.push('\n');
        let rows: [(&str, fn(&Metrics) -> f64); 5] = [
            ("Accuracy", |m| m.accuracy),
            ("Precision", |m| m.precision),
            ("Recall", |m| m.recall),
            ("F1-Measure", |m| m.f1),
            ("Recall (micro)", |m| m.micro_recall),
        ];
        for (label, get) in rows {
            let _ = write!(out, "| {label} |");
            for m in self.models.values() {
                let _ = write!(out, " {:.3} |", get(m));
            }
            out.push('\n');
        }
        let degenerate: Vec<&str> = self
            .models
            .iter()
            .filter(|(_, m)| m.degenerate)
            .map(|(k, _)| k.as_str())
            .collect();
        if !degenerate.is_empty() {
            let _ = writeln!(out, "\nZero-denominator metrics reported as 0 for: {}", degenerate.join(", "));
        }
        out
    }
}
