//! Model-derived feature rankings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Feature, FEATURE_ORDER, N_FEATURES};
use crate::error::{Error, Result};
use crate::model::TrainedModel;

/// Why RBF-kernel SVMs get no ranking.
pub const SVM_RANKING_RATIONALE: &str =
    "per-feature weights can be determined only for linear kernels; the SVM uses an RBF kernel";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: Feature,
    pub weight: f64,
}

/// Features in descending weight order; exact ties keep canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub model: String,
    pub entries: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn from_weights(model: impl Into<String>, weights: &[f64]) -> Result<Self> {
        if weights.len() != N_FEATURES {
            return Err(Error::Contract(format!(
                "expected {N_FEATURES} feature weights, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Contract(format!("feature weight {w} is not a non-negative number")));
        }
        let mut entries: Vec<RankedFeature> = FEATURE_ORDER
            .iter()
            .zip(weights)
            .map(|(&feature, &weight)| RankedFeature { feature, weight })
            .collect();
        // Stable sort keeps canonical order among equal weights.
        entries.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        Ok(FeatureRanking {
            model: model.into(),
            entries,
        })
    }

    pub fn order(&self) -> Vec<Feature> {
        self.entries.iter().map(|e| e.feature).collect()
    }

    pub fn weight_of(&self, feature: Feature) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.weight)
    }
}

pub fn rank_features(model: &TrainedModel) -> Result<FeatureRanking> {
    match model {
        TrainedModel::Mnb(m) => FeatureRanking::from_weights(model.kind().name(), &m.feature_weights()),
        TrainedModel::Rf(f) => FeatureRanking::from_weights(model.kind().name(), &f.gini_importance()?),
        TrainedModel::Svm(_) => Err(Error::UnsupportedModel {
            model: model.kind().name().into(),
            reason: SVM_RANKING_RATIONALE.into(),
        }),
    }
}

/// Platform rows, one weight column per ranking. Rows follow the first
/// ranking's order; weights are shown to six decimals.
pub fn rankings_markdown(rankings: &[FeatureRanking]) -> String {
    let mut out = String::new();
    if rankings.is_empty() {
        return out;
    }
    out.push_str("| Platform |");
    for r in rankings {
        let _ = write!(out, " {} |", crate::model::ModelKind::display_for(&r.model));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in rankings {
        out.push_str("---:|");
    }
    out.push('\n');
    for feature in rankings[0].order() {
        let _ = write!(out, "| {} |", feature.display_name());
        for r in rankings {
            let w = r.weight_of(feature).unwrap_or(0.0);
            let _ = write!(out, " {w:.6} |");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Feature::*;

    #[test]
    fn sorts_descending_with_canonical_ties() {
        let mut w = [0.0; N_FEATURES];
        w[PeerReview.index()] = 0.5;
        w[Twitter.index()] = 0.3;
        w[News.index()] = 0.2;
        let r = FeatureRanking::from_weights("rf", &w).unwrap();
        let order = r.order();
        assert_eq!(&order[..3], &[PeerReview, Twitter, News]);
        let rest: Vec<Feature> = FEATURE_ORDER
            .iter()
            .copied()
            .filter(|f| ![PeerReview, Twitter, News].contains(f))
            .collect();
        assert_eq!(&order[3..], &rest[..]);
    }

    #[test]
    fn equal_weights_give_canonical_order() {
        let r = FeatureRanking::from_weights("mnb", &[1.0; N_FEATURES]).unwrap();
        assert_eq!(r.order(), FEATURE_ORDER.to_vec());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(FeatureRanking::from_weights("rf", &[1.0; 3]).is_err());
        let mut w = [0.1; N_FEATURES];
        w[2] = f64::NAN;
        assert!(FeatureRanking::from_weights("rf", &w).is_err());
    }

    #[test]
    fn markdown_layout() {
        let mut w = [0.0; N_FEATURES];
        w[News.index()] = 1.0;
        let r = FeatureRanking::from_weights("rf", &w).unwrap();
        let md = rankings_markdown(&[r]);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 2 + N_FEATURES);
        assert_eq!(lines[2], "| news | 1.000000 |");
    }
}
