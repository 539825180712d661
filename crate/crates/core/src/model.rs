//! The three classifiers behind one type, plus their JSON persistence.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, RecordSet, N_FEATURES};
use crate::error::{Error, Result};
use crate::evalkit::{self, Metrics};
use crate::forest::{Forest, ForestParams};
use crate::mnb::{MnbModel, DEFAULT_ALPHA};
use crate::svm::{self, SvmModel, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mnb,
    Rf,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Mnb, ModelKind::Rf, ModelKind::Svm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mnb => "mnb",
            ModelKind::Rf => "rf",
            ModelKind::Svm => "svm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Mnb => "Multinomial Naive Bayes",
            ModelKind::Rf => "Random Forest",
            ModelKind::Svm => "SVM",
        }
    }

    pub(crate) fn display_for(name: &str) -> &str {
        match name.parse::<ModelKind>() {
            Ok(kind) => kind.display_name(),
            Err(_) => name,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnb" => Ok(ModelKind::Mnb),
            "rf" => Ok(ModelKind::Rf),
            "svm" => Ok(ModelKind::Svm),
            other => Err(Error::Config(format!("unknown model `{other}` (expected mnb, rf or svm)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnbParams {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl Default for MnbParams {
    fn default() -> Self {
        MnbParams { alpha: DEFAULT_ALPHA }
    }
}

/// Hyperparameters for every model kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelParams {
    pub mnb: MnbParams,
    pub rf: ForestParams,
    pub svm: SvmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum TrainedModel {
    Mnb(MnbModel),
    Rf(Forest),
    Svm(SvmModel),
}

impl TrainedModel {
    /// `seed` only matters for the forest.
    pub fn fit(kind: ModelKind, train: &RecordSet, params: &ModelParams, seed: u64) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Fit(format!("cannot train {kind} on an empty set")));
        }
        train.require_both_classes(kind.display_name())?;
        Ok(match kind {
            ModelKind::Mnb => TrainedModel::Mnb(MnbModel::fit(train, params.mnb.alpha)?),
            ModelKind::Rf => TrainedModel::Rf(Forest::fit(train, &params.rf, seed)?),
            ModelKind::Svm => TrainedModel::Svm(svm::fit(train, &params.svm)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Mnb(_) => ModelKind::Mnb,
            TrainedModel::Rf(_) => ModelKind::Rf,
            TrainedModel::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn predict(&self, x: &[u64; N_FEATURES]) -> Label {
        match self {
            TrainedModel::Mnb(m) => m.predict(x),
            TrainedModel::Rf(f) => f.predict(x),
            TrainedModel::Svm(s) => s.predict(x),
        }
    }

    pub fn predict_all(&self, rows: &RecordSet) -> Vec<Label> {
        rows.rows.iter().map(|r| self.predict(&r.values)).collect()
    }

    pub fn evaluate(&self, rows: &RecordSet) -> Result<Metrics> {
        let cm = evalkit::confusion(&self.predict_all(rows), &rows.labels())?;
        evalkit::metrics(&cm)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // Fully grown trees nest deeper than serde_json's default limit.
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let model = TrainedModel::deserialize(&mut de)?;
        de.end()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
        de.disable_recursion_limit();
        let model = TrainedModel::deserialize(&mut de)?;
        de.end()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureVector;

    fn tiny() -> RecordSet {
        let rows = (0..12u64)
            .map(|i| {
                let mut values = [0; N_FEATURES];
                values[(i % 3) as usize] = i;
                FeatureVector {
                    article_id: format!("a{i}"),
                    values,
                    label: if i % 2 == 0 { Label::Positive } else { Label::Negative },
                }
            })
            .collect();
        RecordSet::new(rows, "tiny")
    }

    #[test]
    fn json_roundtrip_every_kind() {
        let set = tiny();
        let params = ModelParams {
            rf: ForestParams { n_trees: 3, ..Default::default() },
            ..Default::default()
        };
        for kind in ModelKind::ALL {
            let m = TrainedModel::fit(kind, &set, &params, 5).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.predict_all(&set), m.predict_all(&set));
        }
    }

    #[test]
    fn mnb_json_keys() {
        let m = TrainedModel::fit(ModelKind::Mnb, &tiny(), &ModelParams::default(), 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        for key in ["model", "alpha", "log_priors", "log_cond", "feature_order"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["log_cond"][0].as_array().unwrap().len(), N_FEATURES);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("rf".parse::<ModelKind>().unwrap(), ModelKind::Rf);
        assert!(matches!("lasso".parse::<ModelKind>(), Err(Error::Config(_))));
    }
}
