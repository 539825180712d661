use approx::assert_abs_diff_eq;

use policycite::dataset::{FeatureVector, Label, RecordSet, N_FEATURES};
use policycite::forest::{Forest, ForestParams, TreeNode};
use policycite::svm::{self, Gamma, SvmParams};
use policycite::synthgen::{self, GenSpec};
use policycite::{ModelKind, ModelParams, TrainedModel};

fn calibration_sample(rows: usize, seed: u64) -> RecordSet {
    synthgen::generate(&GenSpec { rows, seed, ..GenSpec::calibration() }).unwrap()
}

#[test]
fn saved_models_predict_identically() {
    let dir = tempfile::tempdir().unwrap();
    let train = calibration_sample(400, 1);
    let probe = calibration_sample(200, 2);
    let params = ModelParams {
        rf: ForestParams { n_trees: 15, ..Default::default() },
        ..Default::default()
    };
    for kind in ModelKind::ALL {
        let m = TrainedModel::fit(kind, &train, &params, 9).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        m.save(&path).unwrap();
        let back = TrainedModel::load(&path).unwrap();
        assert_eq!(back.predict_all(&probe), m.predict_all(&probe), "{kind}");
    }
}

#[test]
fn forest_is_seed_deterministic() {
    let train = calibration_sample(300, 4);
    let p = ForestParams { n_trees: 12, ..Default::default() };
    let a = Forest::fit(&train, &p, 77).unwrap();
    let b = Forest::fit(&train, &p, 77).unwrap();
    let c = Forest::fit(&train, &p, 78).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.trees, c.trees);
}

#[test]
fn deep_trees_survive_json() {
    // A staircase labelling forces one split per distinct value.
    let rows = (0..400u64)
        .map(|i| {
            let mut values = [0; N_FEATURES];
            values[0] = i;
            FeatureVector {
                article_id: i.to_string(),
                values,
                label: if i % 2 == 0 { Label::Positive } else { Label::Negative },
            }
        })
        .collect();
    let set = RecordSet::new(rows, "staircase");
    let params = ModelParams {
        rf: ForestParams { n_trees: 1, bootstrap: false, ..Default::default() },
        ..Default::default()
    };
    let m = TrainedModel::fit(ModelKind::Rf, &set, &params, 0).unwrap();
    let TrainedModel::Rf(forest) = &m else { unreachable!() };
    assert!(forest.trees[0].depth() > 100);
    let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn forest_soft_vote_matches_tree_average() {
    let train = calibration_sample(300, 5);
    let f = Forest::fit(&train, &ForestParams { n_trees: 7, ..Default::default() }, 1).unwrap();
    for row in calibration_sample(50, 6).rows {
        let mut avg = [0.0; 2];
        for t in &f.trees {
            let p = t.predict_frequencies(&row.values);
            avg[0] += p[0] / 7.0;
            avg[1] += p[1] / 7.0;
        }
        let got = f.predict_frequencies(&row.values);
        assert_abs_diff_eq!(got[0], avg[0], epsilon = 1e-12);
        assert_abs_diff_eq!(got[1], avg[1], epsilon = 1e-12);
        let want = if avg[1] > avg[0] { Label::Positive } else { Label::Negative };
        assert_eq!(f.predict(&row.values), want);
    }
}

#[test]
fn tree_nodes_account_for_samples() {
    fn check(node: &TreeNode) -> u64 {
        match node {
            TreeNode::Leaf { class_counts } => class_counts[0] + class_counts[1],
            TreeNode::Split { n_samples, left, right, impurity_decrease, .. } => {
                assert!(*impurity_decrease >= 0.0);
                assert_eq!(check(left) + check(right), *n_samples);
                *n_samples
            }
        }
    }
    let train = calibration_sample(500, 7);
    let f = Forest::fit(&train, &ForestParams { n_trees: 5, ..Default::default() }, 3).unwrap();
    for t in &f.trees {
        assert_eq!(check(t), 500);
    }
    let names: Vec<String> = f.feature_order.clone();
    assert!(f.trees[0].render(&names).contains("<="));
}

#[test]
fn svm_on_calibration_sample_satisfies_dual_constraints() {
    let train = calibration_sample(600, 8);
    let rows: Vec<&[u64]> = train.rows.iter().map(|r| &r.values[..]).collect();
    let labels = train.labels();
    let params = SvmParams { c: 2.0, ..Default::default() };
    let (model, diag) = svm::fit_counts(&rows, &labels, &params, true).unwrap();
    assert!(diag.converged);
    assert!(diag.final_gap < params.tol);
    assert!(model.dual_coef_sum().abs() < 1e-6);
    for (a, m) in model.alphas().iter().zip(&model.multiplicities) {
        assert!(*a >= 0.0 && *a <= 2.0 * (1.0 + 1e-12), "alpha {a} (x{m})");
    }
    for w in diag.objective_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-8);
    }
    let acc = rows.iter().zip(&labels).filter(|(x, l)| model.predict(x) == **l).count() as f64 / 600.0;
    assert!(acc > 0.7, "training accuracy {acc}");
}

#[test]
fn svm_explicit_gamma_is_used() {
    let train = calibration_sample(200, 9);
    let m = svm::fit(&train, &SvmParams { gamma: Gamma::Value(0.25), ..Default::default() }).unwrap();
    assert_eq!(m.gamma, 0.25);
}

#[test]
fn duplicating_every_point_keeps_the_decision_function() {
    // Two separated clusters, so no multiplier reaches C and doubling the
    // data leaves the optimum in place.
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30u64 {
        let mut a = [0u64; N_FEATURES];
        a[0] = i % 5;
        a[1] = i / 5;
        rows.push(a);
        labels.push(Label::Negative);
        let mut b = a;
        b[0] += 20;
        rows.push(b);
        labels.push(Label::Positive);
    }
    let params = SvmParams { c: 100.0, ..Default::default() };
    let (single, _) = svm::fit_counts(&rows, &labels, &params, false).unwrap();
    let doubled_rows: Vec<_> = rows.iter().chain(&rows).copied().collect();
    let doubled_labels: Vec<_> = labels.iter().chain(&labels).copied().collect();
    let (double, _) = svm::fit_counts(&doubled_rows, &doubled_labels, &params, false).unwrap();
    assert!(single.alphas().iter().all(|&a| a < params.c));
    for probe in 0..60u64 {
        let mut x = [0u64; N_FEATURES];
        x[0] = probe % 30;
        x[1] = probe / 10;
        x[2] = probe % 3;
        assert_abs_diff_eq!(single.decision(&x), double.decision(&x), epsilon = 1e-6);
    }
}
