use std::collections::BTreeSet;
use std::fs;
use std::sync::Mutex;

use policycite::dataset::{self, Label, RecordSet};
use policycite::experiment::{
    self, ExperimentConfig, FileInput, FitObserver, GenSpecSource, InputSpec, Stage, SyntheticInput,
};
use policycite::forest::ForestParams;
use policycite::synthgen::{self, GenSpec};
use policycite::{ErrorKind, ModelKind};

fn small_spec(rows: usize) -> GenSpec {
    GenSpec { rows, ..GenSpec::calibration() }
}

fn small_config(rows: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(InputSpec::Synthetic(SyntheticInput {
        genspec: GenSpecSource::Inline(small_spec(rows)),
    }));
    cfg.rf = ForestParams { n_trees: 10, ..Default::default() };
    cfg.cv_folds = 5;
    cfg.seed = 3;
    cfg
}

#[derive(Default)]
struct Recorder {
    fits: Mutex<Vec<(ModelKind, String, BTreeSet<String>)>>,
}

impl FitObserver for Recorder {
    fn on_fit(&self, kind: ModelKind, context: &str, train: &RecordSet) {
        let ids = train.rows.iter().map(|r| r.article_id.clone()).collect();
        self.fits.lock().unwrap().push((kind, context.to_string(), ids));
    }
}

#[test]
fn held_out_rows_never_reach_a_fit() {
    let cfg = small_config(600);
    let recorder = Recorder::default();
    let outcome = experiment::run_experiment_observed(&cfg, &recorder).unwrap();

    // Rebuild the held-out set the way the pipeline does.
    let loaded = experiment::load_input(&cfg).unwrap();
    let used = dataset::balance(&loaded, policycite::rng::derive_seed(cfg.seed, "balance", 0)).unwrap();
    let (_, test) =
        policycite::evalkit::split_train_test(&used, cfg.test_fraction, policycite::rng::derive_seed(cfg.seed, "split", 0))
            .unwrap();
    assert_eq!(test.len(), outcome.report.dataset.test_rows);
    let test_ids: BTreeSet<String> = test.rows.iter().map(|r| r.article_id.clone()).collect();

    let fits = recorder.fits.lock().unwrap();
    // 5 folds plus one final fit per model.
    assert_eq!(fits.len(), 3 * 6);
    for (kind, context, ids) in fits.iter() {
        assert!(ids.is_disjoint(&test_ids), "{kind} {context} saw held-out rows");
    }
    let finals: Vec<_> = fits.iter().filter(|(_, c, _)| c == "final").collect();
    assert_eq!(finals.len(), 3);
    for (_, _, ids) in finals {
        assert_eq!(ids.len(), outcome.report.dataset.train_rows);
    }
}

#[test]
fn identical_configs_give_identical_reports() {
    let cfg = small_config(500);
    let a = experiment::run_experiment(&cfg).unwrap();
    let b = experiment::run_experiment(&cfg).unwrap();
    assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
    assert_eq!(a.report.markdown(), b.report.markdown());

    let mut other = cfg.clone();
    other.seed = 4;
    let c = experiment::run_experiment(&other).unwrap();
    assert_ne!(a.report.to_json().unwrap(), c.report.to_json().unwrap());
}

#[test]
fn output_directory_does_not_leak_into_report() {
    let mut cfg = small_config(300);
    cfg.models = vec![ModelKind::Mnb];
    let a = experiment::run_experiment(&cfg).unwrap();
    cfg.output = "elsewhere".into();
    let b = experiment::run_experiment(&cfg).unwrap();
    assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
}

#[test]
fn report_structure() {
    let cfg = small_config(400);
    let outcome = experiment::run_experiment(&cfg).unwrap();
    let r = &outcome.report;
    assert_eq!(r.dataset.used.positive, r.dataset.used.negative);
    assert_eq!(r.dataset.train_rows + r.dataset.test_rows, r.dataset.rows_used);
    assert_eq!(r.cross_validation.report.folds, Some(5));
    for kind in ModelKind::ALL {
        assert_eq!(r.cross_validation.per_fold[kind.name()].len(), 5);
        let cm = r.held_out_confusion[kind.name()];
        assert_eq!(cm.total() as usize, r.dataset.test_rows);
    }
    let models: Vec<&str> = r.rankings.iter().map(|x| x.model.as_str()).collect();
    assert_eq!(models, ["rf", "mnb"]);
    assert!(r.notes.iter().any(|n| n.starts_with("svm:")));

    let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        ["config", "cross_validation", "dataset", "held_out", "held_out_confusion", "notes", "rankings", "seed"]
    );
    assert!(v["config"].get("output").is_none());
    assert!(v["held_out_confusion"]["rf"].get("fn").is_some());

    let md = r.markdown();
    assert!(md.contains("| | Multinomial Naive Bayes | Random Forest | SVM |"));
    assert!(md.contains("| F1-Measure |"));
}

#[test]
fn write_outputs_creates_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(200);
    cfg.models = vec![ModelKind::Mnb, ModelKind::Rf];
    let outcome = experiment::run_experiment(&cfg).unwrap();
    let out = dir.path().join("nested/out");
    experiment::write_outputs(&out, &outcome.report, &outcome.timings).unwrap();
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["report.json", "report.md", "timings.json"]);
    let timings: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("timings.json")).unwrap()).unwrap();
    assert!(timings["stages"].as_array().unwrap().iter().any(|s| s["stage"] == "cross_validate"));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(!report.contains("seconds"));
}

#[test]
fn csv_and_jsonl_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let set = synthgen::generate(&small_spec(300)).unwrap();
    let csv_path = dir.path().join("data.csv");
    dataset::save_record_set(&csv_path, &set).unwrap();

    let records = dataset::load_records(&csv_path, dataset::InputFormat::Csv).unwrap();
    let mut jsonl = String::new();
    for r in &records {
        let mut obj = serde_json::Map::new();
        obj.insert("article_id".into(), r.article_id.clone().into());
        for s in dataset::Source::all() {
            obj.insert(s.name().into(), r.mention(s).into());
        }
        obj.insert("policy".into(), r.policy_count.into());
        jsonl.push_str(&serde_json::Value::Object(obj).to_string());
        jsonl.push('\n');
    }
    let jsonl_path = dir.path().join("data.jsonl");
    fs::write(&jsonl_path, jsonl).unwrap();

    let run = |path: &std::path::Path| {
        let mut cfg = ExperimentConfig::new(InputSpec::File(FileInput { path: path.to_path_buf(), format: None }));
        cfg.models = vec![ModelKind::Mnb];
        cfg.cv_folds = 3;
        let mut r = experiment::run_experiment(&cfg).unwrap().report;
        r.config.input = InputSpec::File(FileInput { path: "x".into(), format: None });
        r.dataset.provenance.clear();
        r.to_json().unwrap()
    };
    assert_eq!(run(&csv_path), run(&jsonl_path));
}

#[test]
fn unbalanced_runs_keep_every_row() {
    let mut cfg = small_config(300);
    cfg.balance = false;
    cfg.models = vec![ModelKind::Mnb];
    let r = experiment::run_experiment(&cfg).unwrap().report;
    assert_eq!(r.dataset.rows_used, 300);
    assert!(!r.dataset.balanced);
}

#[test]
fn failures_carry_stage_and_kind() {
    let missing = ExperimentConfig::new(InputSpec::File(FileInput {
        path: "/nonexistent/records.csv".into(),
        format: None,
    }));
    let e = experiment::run_experiment(&missing).unwrap_err();
    assert_eq!(e.stage, Stage::Load);
    assert_eq!(e.kind(), ErrorKind::Data);

    // Every row positive: balancing has nothing to pair with.
    let mut spec = small_spec(50);
    spec.positive_prior = 1.0;
    let cfg = ExperimentConfig::new(InputSpec::Synthetic(SyntheticInput { genspec: GenSpecSource::Inline(spec) }));
    let e = experiment::run_experiment(&cfg).unwrap_err();
    assert_eq!(e.stage, Stage::Balance);

    let mut cfg = small_config(100);
    cfg.cv_folds = 1;
    let e = experiment::run_experiment(&cfg).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Config);

    // Too few rows per class for 10 folds inside the training portion.
    let mut cfg = small_config(20);
    cfg.cv_folds = 10;
    let e = experiment::run_experiment(&cfg).unwrap_err();
    assert_eq!(e.stage, Stage::CrossValidate);
}

#[test]
fn calibration_sample_is_learnable() {
    let set = synthgen::generate(&small_spec(2000)).unwrap();
    let [neg, pos] = set.class_counts();
    assert!(neg > 800 && pos > 800);
    let means = |label: Label| {
        let rows: Vec<_> = set.rows.iter().filter(|r| r.label == label).collect();
        rows.iter().map(|r| r.values.iter().sum::<u64>() as f64).sum::<f64>() / rows.len() as f64
    };
    assert!(means(Label::Positive) > means(Label::Negative));
}
