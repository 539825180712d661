//! Multinomial naive Bayes over mention counts.
//!
//! Parameters are additively smoothed, `θ[c][f] = (N[c][f] + α) / (N[c] + α·F)`,
//! and scoring stays in log space throughout.

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, RecordSet, FEATURE_ORDER};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0;

/// Per-class arrays are indexed by [`Label::index`]: negative first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub alpha: f64,
    pub log_priors: [f64; 2],
    pub log_cond: [Vec<f64>; 2],
    pub feature_order: Vec<String>,
}

impl MnbModel {
    pub fn fit(train: &RecordSet, alpha: f64) -> Result<Self> {
        let labels = train.labels();
        let rows: Vec<&[u64]> = train.rows.iter().map(|r| &r.values[..]).collect();
        let names = FEATURE_ORDER.iter().map(|f| f.name().to_string()).collect();
        Self::fit_counts(&rows, &labels, alpha, names)
    }

    /// Fits on arbitrary-width count rows; `feature_order` names the columns.
    pub fn fit_counts<R: AsRef<[u64]>>(
        rows: &[R],
        labels: &[Label],
        alpha: f64,
        feature_order: Vec<String>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("smoothing alpha must be positive, got {alpha}")));
        }
        if rows.len() != labels.len() {
            return Err(Error::Contract(format!("{} rows for {} labels", rows.len(), labels.len())));
        }
        let width = feature_order.len();
        let mut feature_totals = [vec![0u64; width], vec![0u64; width]];
        let mut class_rows = [0usize; 2];
        for (row, label) in rows.iter().zip(labels) {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::Contract(format!("row has {} features, expected {width}", row.len())));
            }
            let c = label.index();
            class_rows[c] += 1;
            for (acc, &x) in feature_totals[c].iter_mut().zip(row) {
                *acc += x;
            }
        }
        if class_rows.contains(&0) {
            return Err(Error::Fit(format!(
                "naive Bayes needs both classes, got {} positive and {} negative rows",
                class_rows[1], class_rows[0]
            )));
        }

        let n = rows.len() as f64;
        let log_priors = class_rows.map(|c| (c as f64 / n).ln());
        let log_cond = feature_totals.map(|totals| {
            let class_total: u64 = totals.iter().sum();
            let denom = (class_total as f64 + alpha * width as f64).ln();
            totals.iter().map(|&t| (t as f64 + alpha).ln() - denom).collect()
        });
        Ok(MnbModel {
            alpha,
            log_priors,
            log_cond,
            feature_order,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_order.len()
    }

    /// Unnormalized joint log-likelihood per class, `[negative, positive]`.
    pub fn log_scores(&self, x: &[u64]) -> [f64; 2] {
        debug_assert_eq!(x.len(), self.n_features());
        [0, 1].map(|c| {
            self.log_priors[c]
                + self.log_cond[c]
                    .iter()
                    .zip(x)
                    .map(|(lc, &v)| v as f64 * lc)
                    .sum::<f64>()
        })
    }

    /// Argmax of [`log_scores`](Self::log_scores); an exact tie is negative.
    pub fn predict(&self, x: &[u64]) -> Label {
        let [neg, pos] = self.log_scores(x);
        if pos > neg {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `|log θ[+][f] − log θ[−][f]|`, how strongly feature `f` separates the classes.
    pub fn feature_weight(&self, f: usize) -> f64 {
        (self.log_cond[1][f] - self.log_cond[0][f]).abs()
    }

    pub fn feature_weights(&self) -> Vec<f64> {
        (0..self.n_features()).map(|f| self.feature_weight(f)).collect()
    }
}
