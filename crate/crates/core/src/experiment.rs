//! End-to-end experiment: load or generate, balance, split, cross-validate,
//! refit, evaluate on the held-out split, rank features, report.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, InputFormat, RecordSet};
use crate::error::{Error, ErrorKind, Result};
use crate::evalkit::{self, ConfusionMatrix, EvalReport, Metrics};
use crate::forest::ForestParams;
use crate::model::{MnbParams, ModelKind, ModelParams, TrainedModel};
use crate::ranking::{self, FeatureRanking, SVM_RANKING_RATIONALE};
use crate::rng::derive_seed;
use crate::svm::SvmParams;
use crate::synthgen::{self, GenSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileInput {
    pub path: PathBuf,
    /// Inferred from the extension when absent (`.jsonl` or CSV).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<InputFormat>,
}

impl FileInput {
    pub fn resolved_format(&self) -> InputFormat {
        self.format.unwrap_or_else(|| match self.path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenSpecSource {
    Path(PathBuf),
    Inline(GenSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticInput {
    pub genspec: GenSpecSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    File(FileInput),
    Synthetic(SyntheticInput),
}

fn yes() -> bool {
    true
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_folds() -> usize {
    10
}
fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: InputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub balance: bool,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub mnb: MnbParams,
    #[serde(default)]
    pub rf: ForestParams,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    /// Not echoed into reports, so the same experiment written to two
    /// directories produces identical report files.
    #[serde(default = "default_output", skip_serializing)]
    pub output: PathBuf,
    /// Directory relative input paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(input: InputSpec) -> Self {
        ExperimentConfig {
            input,
            seed: 0,
            balance: true,
            test_fraction: default_test_fraction(),
            cv_folds: default_folds(),
            mnb: MnbParams::default(),
            rf: ForestParams::default(),
            svm: SvmParams::default(),
            models: default_models(),
            output: default_output(),
            base_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            mnb: self.mnb.clone(),
            rf: self.rf.clone(),
            svm: self.svm.clone(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction {} must be in (0, 1)", self.test_fraction)));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config(format!("cv_folds must be at least 2, got {}", self.cv_folds)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model must be selected".into()));
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return Err(Error::Config("models list has duplicates".into()));
        }
        if !(self.mnb.alpha > 0.0 && self.mnb.alpha.is_finite()) {
            return Err(Error::Config(format!("mnb.alpha must be positive, got {}", self.mnb.alpha)));
        }
        if self.rf.n_trees == 0 {
            return Err(Error::Config("rf.n_trees must be at least 1".into()));
        }
        if let crate::forest::MaxFeatures::Count(0) = self.rf.max_features {
            return Err(Error::Config("rf.max_features must be at least 1".into()));
        }
        self.svm.validate()?;
        if let InputSpec::Synthetic(SyntheticInput {
            genspec: GenSpecSource::Inline(spec),
        }) = &self.input
        {
            spec.validate()?;
        }
        Ok(())
    }

    /// The selected models in canonical order.
    pub fn selected_models(&self) -> Vec<ModelKind> {
        let mut m = self.models.clone();
        m.sort();
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Balance,
    Split,
    CrossValidate,
    Fit,
    Evaluate,
    Rank,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Balance => "balance",
            Stage::Split => "split",
            Stage::CrossValidate => "cross-validate",
            Stage::Fit => "fit",
            Stage::Evaluate => "evaluate",
            Stage::Rank => "rank",
            Stage::Write => "write",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct ExperimentError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl ExperimentError {
    pub fn kind(&self) -> ErrorKind {
        self.source.kind()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, ExperimentError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, ExperimentError> {
        self.map_err(|source| ExperimentError { stage, source })
    }
}

/// Sees every training set handed to a model fit.
pub trait FitObserver: Sync {
    fn on_fit(&self, kind: ModelKind, context: &str, train: &RecordSet);
}

pub struct NoObserver;

impl FitObserver for NoObserver {
    fn on_fit(&self, _: ModelKind, _: &str, _: &RecordSet) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

impl From<[usize; 2]> for ClassCounts {
    fn from([negative, positive]: [usize; 2]) -> Self {
        ClassCounts { positive, negative }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub provenance: String,
    pub rows_loaded: usize,
    pub loaded: ClassCounts,
    pub balanced: bool,
    pub rows_used: usize,
    pub used: ClassCounts,
    pub train_rows: usize,
    pub train: ClassCounts,
    pub test_rows: usize,
    pub test: ClassCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub report: EvalReport,
    pub per_fold: BTreeMap<String, Vec<Metrics>>,
}

/// Fits every model on every fold's training part and scores it on the
/// fold's validation part. Folds run in parallel; results are reduced in
/// fold order.
pub fn cross_validate(
    rows: &RecordSet,
    models: &[ModelKind],
    params: &ModelParams,
    k: usize,
    seed: u64,
    observer: &dyn FitObserver,
) -> Result<CrossValidation> {
    let folds = evalkit::kfold(rows, k, derive_seed(seed, "kfold", 0))?;
    let mut report = EvalReport::new("cv-mean", Some(k));
    let mut per_fold = BTreeMap::new();
    for &kind in models {
        let scores: Vec<Metrics> = folds
            .par_iter()
            .enumerate()
            .map(|(f, fold)| {
                observer.on_fit(kind, &format!("cv fold {f}"), &fold.train);
                let model = TrainedModel::fit(kind, &fold.train, params, derive_seed(seed, kind.name(), f as u64))?;
                model.evaluate(&fold.validation)
            })
            .collect::<Result<_>>()?;
        report.models.insert(kind.name().into(), evalkit::mean_metrics(&scores)?);
        per_fold.insert(kind.name().into(), scores);
    }
    Ok(CrossValidation { report, per_fold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub cross_validation: CrossValidation,
    pub held_out: EvalReport,
    pub held_out_confusion: BTreeMap<String, ConfusionMatrix>,
    pub rankings: Vec<FeatureRanking>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timings {
    pub stages: Vec<StageTiming>,
}

impl Timings {
    fn record(&mut self, stage: impl Into<String>, since: Instant) {
        self.stages.push(StageTiming {
            stage: stage.into(),
            seconds: since.elapsed().as_secs_f64(),
        });
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub timings: Timings,
    pub models: BTreeMap<ModelKind, TrainedModel>,
}

pub fn load_input(config: &ExperimentConfig) -> Result<RecordSet> {
    match &config.input {
        InputSpec::File(f) => dataset::load_record_set(&config.resolve(&f.path), f.resolved_format()),
        InputSpec::Synthetic(s) => {
            let spec = match &s.genspec {
                GenSpecSource::Inline(spec) => spec.clone(),
                GenSpecSource::Path(p) => GenSpec::load(&config.resolve(p))?,
            };
            synthgen::generate(&spec)
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> std::result::Result<Outcome, ExperimentError> {
    run_experiment_observed(config, &NoObserver)
}

pub fn run_experiment_observed(
    config: &ExperimentConfig,
    observer: &dyn FitObserver,
) -> std::result::Result<Outcome, ExperimentError> {
    config.validate().at(Stage::Load)?;
    let seed = config.seed;
    let models = config.selected_models();
    let params = config.model_params();
    let mut timings = Timings::default();

    let t = Instant::now();
    let loaded = load_input(config).at(Stage::Load)?;
    if loaded.is_empty() {
        return Err(Error::Schema("input has no rows".into())).at(Stage::Load);
    }
    timings.record("load", t);

    let t = Instant::now();
    let used = if config.balance {
        dataset::balance(&loaded, derive_seed(seed, "balance", 0)).at(Stage::Balance)?
    } else {
        loaded.clone()
    };
    timings.record("balance", t);

    let t = Instant::now();
    let (train, test) = evalkit::split_train_test(&used, config.test_fraction, derive_seed(seed, "split", 0))
        .at(Stage::Split)?;
    timings.record("split", t);

    let t = Instant::now();
    let cv = cross_validate(&train, &models, &params, config.cv_folds, seed, observer).at(Stage::CrossValidate)?;
    timings.record("cross_validate", t);

    let mut held_out = EvalReport::new("held-out", None);
    let mut held_out_confusion = BTreeMap::new();
    let mut fitted = BTreeMap::new();
    for &kind in &models {
        let t = Instant::now();
        observer.on_fit(kind, "final", &train);
        let model = TrainedModel::fit(kind, &train, &params, derive_seed(seed, kind.name(), config.cv_folds as u64))
            .at(Stage::Fit)?;
        timings.record(format!("fit_{kind}"), t);

        let t = Instant::now();
        let cm = evalkit::confusion(&model.predict_all(&test), &test.labels()).at(Stage::Evaluate)?;
        held_out
            .models
            .insert(kind.name().into(), evalkit::metrics(&cm).at(Stage::Evaluate)?);
        held_out_confusion.insert(kind.name().into(), cm);
        timings.record(format!("evaluate_{kind}"), t);
        fitted.insert(kind, model);
    }

    let t = Instant::now();
    let mut rankings = Vec::new();
    let mut notes = Vec::new();
    // Forest first, so rendered tables follow its order.
    for kind in [ModelKind::Rf, ModelKind::Mnb, ModelKind::Svm] {
        let Some(model) = fitted.get(&kind) else { continue };
        match ranking::rank_features(model) {
            Ok(r) => rankings.push(r),
            Err(Error::UnsupportedModel { .. }) => {
                notes.push(format!("svm: no feature ranking; {SVM_RANKING_RATIONALE}"));
            }
            Err(e) => return Err(e).at(Stage::Rank),
        }
    }
    timings.record("rank", t);

    let dataset = DatasetSummary {
        provenance: loaded.provenance.clone(),
        rows_loaded: loaded.len(),
        loaded: loaded.class_counts().into(),
        balanced: config.balance,
        rows_used: used.len(),
        used: used.class_counts().into(),
        train_rows: train.len(),
        train: train.class_counts().into(),
        test_rows: test.len(),
        test: test.class_counts().into(),
    };
    notes.push(format!(
        "cross-validation ran inside the {:.0}% training portion; held-out metrics come from models refit on all of it",
        (1.0 - config.test_fraction) * 100.0
    ));
    notes.push("precision, recall and F1 are for the positive (policy-cited) class; micro-averaged recall equals accuracy".into());

    Ok(Outcome {
        report: Report {
            seed,
            config: config.clone(),
            dataset,
            cross_validation: cv,
            held_out,
            held_out_confusion,
            rankings,
            notes,
        },
        timings,
        models: fitted,
    })
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn markdown(&self) -> String {
        let mut out = String::new();
        let d = &self.dataset;
        let _ = writeln!(out, "# Policy citation prediction\n");
        let _ = writeln!(out, "- input: {}", d.provenance);
        let _ = writeln!(out, "- seed: {}", self.seed);
        let _ = writeln!(
            out,
            "- rows loaded: {} ({} positive, {} negative)",
            d.rows_loaded, d.loaded.positive, d.loaded.negative
        );
        let _ = writeln!(
            out,
            "- rows used{}: {} ({} positive, {} negative)",
            if d.balanced { " after balancing" } else { "" },
            d.rows_used,
            d.used.positive,
            d.used.negative
        );
        let _ = writeln!(out, "- train / test: {} / {}\n", d.train_rows, d.test_rows);

        let folds = self.cross_validation.report.folds.unwrap_or(0);
        let _ = writeln!(out, "## Cross-validation ({folds}-fold mean, training portion)\n");
        out.push_str(&self.cross_validation.report.markdown());
        let _ = writeln!(out, "\n## Held-out test set\n");
        out.push_str(&self.held_out.markdown());
        if !self.rankings.is_empty() {
            let _ = writeln!(out, "\n## Feature ranking\n");
            out.push_str(&ranking::rankings_markdown(&self.rankings));
        }
        if !self.notes.is_empty() {
            let _ = writeln!(out, "\n## Notes\n");
            for n in &self.notes {
                let _ = writeln!(out, "- {n}");
            }
        }
        out
    }
}

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const TIMINGS_JSON: &str = "timings.json";

/// Writes all three files, or none: everything is rendered first, written to
/// temporaries, then renamed into place.
pub fn write_outputs(out_dir: &Path, report: &Report, timings: &Timings) -> Result<()> {
    let files = [
        (REPORT_JSON, report.to_json()?),
        (REPORT_MD, report.markdown()),
        (TIMINGS_JSON, serde_json::to_string_pretty(timings)? + "\n"),
    ];
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut staged = Vec::new();
    for (name, body) in &files {
        let tmp = out_dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, body) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(Error::io(&tmp, e));
        }
        staged.push((tmp, out_dir.join(name)));
    }
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).map_err(|e| Error::io(dest, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"input": {"path": "x.csv"}}"#).unwrap();
        assert_eq!(cfg.seed, 0);
        assert!(cfg.balance);
        assert_eq!(cfg.test_fraction, 0.2);
        assert_eq!(cfg.cv_folds, 10);
        assert_eq!(cfg.mnb.alpha, 1.0);
        assert_eq!(cfg.rf.n_trees, 100);
        assert_eq!(cfg.rf.max_features, crate::forest::MaxFeatures::default());
        assert_eq!(cfg.svm, SvmParams::default());
        assert_eq!(cfg.models, ModelKind::ALL.to_vec());
        match &cfg.input {
            InputSpec::File(f) => assert_eq!(f.resolved_format(), InputFormat::Csv),
            other => panic!("unexpected input {other:?}"),
        }
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        for bad in [
            r#"{"input": {"path": "x.csv"}, "sed": 1}"#,
            r#"{"input": {"path": "x.csv"}, "rf": {"trees": 3}}"#,
            r#"{"input": {"path": "x.csv"}, "svm": {"c": 1.0, "kernel": "linear"}}"#,
            r#"{"input": {"path": "x.csv", "fmt": "csv"}}"#,
            r#"{"input": {"path": "x.csv"}, "test_fraction": 1.0}"#,
            r#"{"input": {"path": "x.csv"}, "cv_folds": 1}"#,
            r#"{"input": {"path": "x.csv"}, "models": []}"#,
            r#"{"input": {"path": "x.csv"}, "models": ["rf", "rf"]}"#,
            r#"{"input": {"path": "x.csv"}, "models": ["knn"]}"#,
            r#"{"input": {"path": "x.csv"}, "svm": {"gamma": -2}}"#,
            r#"{"input": {"path": "x.csv"}, "mnb": {"alpha": 0}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "accepted {bad}");
        }
    }

    #[test]
    fn genspec_path_or_inline() {
        let cfg = ExperimentConfig::from_json(r#"{"input": {"genspec": "spec.json"}}"#).unwrap();
        assert!(matches!(
            cfg.input,
            InputSpec::Synthetic(SyntheticInput { genspec: GenSpecSource::Path(_) })
        ));
        let inline = format!(r#"{{"input": {{"genspec": {}}}}}"#, synthgen::CALIBRATION_SPEC_JSON);
        let cfg = ExperimentConfig::from_json(&inline).unwrap();
        assert!(matches!(
            cfg.input,
            InputSpec::Synthetic(SyntheticInput { genspec: GenSpecSource::Inline(_) })
        ));
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut cfg = ExperimentConfig::new(InputSpec::File(FileInput {
            path: "data.csv".into(),
            format: None,
        }));
        cfg.base_dir = Some("/tmp/exp".into());
        assert_eq!(cfg.resolve(Path::new("data.csv")), PathBuf::from("/tmp/exp/data.csv"));
        assert_eq!(cfg.resolve(Path::new("/abs.csv")), PathBuf::from("/abs.csv"));
    }
}
