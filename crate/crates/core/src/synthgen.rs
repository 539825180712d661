//! Synthetic attention-count data.
//!
//! Each class/feature pair has a zero-inflated negative binomial: with
//! probability `zero_inflation` the count is 0, otherwise it is drawn from a
//! negative binomial with the given mean and dispersion `φ` (variance
//! `μ + φμ²`; `φ = 0` is Poisson). The negative binomial is sampled as a
//! gamma-Poisson mixture.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Feature, FeatureVector, Label, RecordSet, FEATURE_ORDER, N_FEATURES};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// The checked-in calibration spec used by the end-to-end experiment.
pub const CALIBRATION_SPEC_JSON: &str = include_str!("../data/calibration.genspec.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountDist {
    pub mean: f64,
    #[serde(default)]
    pub dispersion: f64,
    #[serde(default)]
    pub zero_inflation: f64,
}

impl CountDist {
    pub fn poisson(mean: f64) -> Self {
        CountDist {
            mean,
            dispersion: 0.0,
            zero_inflation: 0.0,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.mean.is_finite() && self.mean >= 0.0) {
            return Err(Error::Config(format!("{what}: mean {} must be finite and >= 0", self.mean)));
        }
        if !(self.dispersion.is_finite() && self.dispersion >= 0.0) {
            return Err(Error::Config(format!("{what}: dispersion {} must be >= 0", self.dispersion)));
        }
        if !(0.0..=1.0).contains(&self.zero_inflation) {
            return Err(Error::Config(format!(
                "{what}: zero_inflation {} must be in [0, 1]",
                self.zero_inflation
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng) -> u64 {
        if self.zero_inflation > 0.0 && rng.random::<f64>() < self.zero_inflation {
            return 0;
        }
        if self.mean == 0.0 {
            return 0;
        }
        let lambda = if self.dispersion > 0.0 {
            let shape = 1.0 / self.dispersion;
            let g = Gamma::new(shape, self.dispersion * self.mean).expect("validated gamma parameters");
            g.sample(rng)
        } else {
            self.mean
        };
        if !(lambda > 0.0) {
            return 0;
        }
        let p = Poisson::new(lambda).expect("positive poisson rate");
        p.sample(rng) as u64
    }
}

/// Generation parameters; `positive` and `negative` must each name all
/// eleven features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub rows: usize,
    pub seed: u64,
    pub positive_prior: f64,
    pub positive: BTreeMap<Feature, CountDist>,
    pub negative: BTreeMap<Feature, CountDist>,
}

impl GenSpec {
    /// Same distribution for every feature and both classes.
    pub fn uniform(rows: usize, seed: u64, positive_prior: f64, dist: CountDist) -> Self {
        let all: BTreeMap<Feature, CountDist> = FEATURE_ORDER.iter().map(|&f| (f, dist)).collect();
        GenSpec {
            rows,
            seed,
            positive_prior,
            positive: all.clone(),
            negative: all,
        }
    }

    pub fn calibration() -> Self {
        serde_json::from_str(CALIBRATION_SPEC_JSON).expect("calibration spec is valid JSON")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GenSpec = serde_json::from_str(text).map_err(|e| Error::Config(format!("genspec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 {
            return Err(Error::Config(format!("genspec rows must be >= 2, got {}", self.rows)));
        }
        if !(0.0..=1.0).contains(&self.positive_prior) {
            return Err(Error::Config(format!(
                "positive_prior {} must be in [0, 1]",
                self.positive_prior
            )));
        }
        for (name, class) in [("positive", &self.positive), ("negative", &self.negative)] {
            for f in FEATURE_ORDER {
                let d = class
                    .get(&f)
                    .ok_or_else(|| Error::Config(format!("genspec {name} class is missing feature `{f}`")))?;
                d.validate(&format!("{name}.{f}"))?;
            }
        }
        Ok(())
    }

    fn dists(&self, label: Label) -> [CountDist; N_FEATURES] {
        let class = match label {
            Label::Positive => &self.positive,
            Label::Negative => &self.negative,
        };
        FEATURE_ORDER.map(|f| class[&f])
    }
}

/// Row `i` is drawn from its own generator seeded by `(spec.seed, i)`.
pub fn generate(spec: &GenSpec) -> Result<RecordSet> {
    spec.validate()?;
    let dists = [spec.dists(Label::Negative), spec.dists(Label::Positive)];
    let width = spec.rows.to_string().len();
    let rows = (0..spec.rows)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::seeded(rng::derive_seed(spec.seed, "row", i as u64));
            let label = if rng.random::<f64>() < spec.positive_prior {
                Label::Positive
            } else {
                Label::Negative
            };
            let values = dists[label.index()].map(|d| d.sample(&mut rng));
            FeatureVector {
                article_id: format!("syn-{i:0width$}"),
                values,
                label,
            }
        })
        .collect();
    Ok(RecordSet::new(
        rows,
        format!("synthetic(rows={}, seed={})", spec.rows, spec.seed),
    ))
}
