//! End-to-end tests of the alternating driver on synthetic domain shifts.

mod common;

use mmdt_core::data::{load_model, make_shifted_pair, save_model, ShiftKind, SynthConfig};
use mmdt_core::mmdt::{self, transfer_new_category};
use mmdt_core::svm::{self, TrainOptions};
use mmdt_core::{
    Dataset, DomainTag, FeatureVector, Loss, RegularizerMode, SolverConfig,
};

fn ova_accuracy(planes: &mmdt_core::HyperplaneSet, data: &Dataset, bias: bool) -> f64 {
    let mut correct = 0;
    for (x, cat) in data.examples() {
        let input = if bias { x.with_appended(1.0) } else { x.clone() };
        let (pred, _) = svm::ova_predict(planes, &input).unwrap();
        if pred == *cat {
            correct += 1;
        }
    }
    correct as f64 / data.len() as f64
}

fn fit_config(mode: RegularizerMode) -> SolverConfig {
    SolverConfig {
        regularizer: mode,
        epsilon: 1e-4,
        max_passes: 20_000,
        ..SolverConfig::default()
    }
}

#[test]
fn identical_distributions_do_not_degrade() {
    let synth = make_shifted_pair(&SynthConfig {
        shift: ShiftKind::Identity,
        categories: 4,
        source_per_class: 25,
        target_per_class: 2,
        test_per_class: 25,
        source_dim: 10,
        target_dim: 10,
        center_spread: 6.0,
        noise: 0.4,
        rng_seed: 60,
        ..SynthConfig::default()
    })
    .unwrap();

    let config = SolverConfig {
        c_target: 0.1,
        ..fit_config(RegularizerMode::IdentityPlus)
    };
    let source_only_config = SolverConfig {
        outer_iterations: 0,
        ..config.clone()
    };
    let (baseline, _) =
        mmdt::fit(&synth.source_train, &synth.target_train, &source_only_config).unwrap();
    let (adapted, _) = mmdt::fit(&synth.source_train, &synth.target_train, &config).unwrap();

    let j_baseline =
        mmdt::joint_objective(&baseline, &synth.source_train, &synth.target_train, &config)
            .unwrap();
    let j_adapted =
        mmdt::joint_objective(&adapted, &synth.source_train, &synth.target_train, &config)
            .unwrap();
    println!("joint objective: baseline {j_baseline}, adapted {j_adapted}");
    assert!(
        (j_adapted - j_baseline).abs() <= 0.01 * j_baseline,
        "joint objective moved more than 1%: {j_baseline} -> {j_adapted}"
    );

    let acc_baseline = mmdt::evaluate(&baseline, &synth.target_test).unwrap().accuracy();
    let acc_adapted = mmdt::evaluate(&adapted, &synth.target_test).unwrap().accuracy();
    println!("accuracy: baseline {acc_baseline}, adapted {acc_adapted}");
    assert!(
        acc_adapted >= acc_baseline - 0.01,
        "adaptation degraded accuracy: {acc_baseline} -> {acc_adapted}"
    );
}

#[test]
fn rotation_shift_is_recovered() {
    let synth = make_shifted_pair(&SynthConfig {
        shift: ShiftKind::Rotation,
        categories: 4,
        source_per_class: 15,
        target_per_class: 4,
        test_per_class: 25,
        source_dim: 12,
        target_dim: 12,
        center_spread: 3.0,
        noise: 0.8,
        rng_seed: 61,
        ..SynthConfig::default()
    })
    .unwrap();

    let opts = TrainOptions {
        epsilon: 1e-4,
        max_passes: 20_000,
        ..TrainOptions::default()
    };
    let source_planes =
        svm::train_one_vs_all(&synth.source_train.with_bias_feature(), 1.0, &opts).unwrap();
    let acc_source = ova_accuracy(&source_planes, &synth.target_test, true);

    let (model, report) =
        mmdt::fit(&synth.source_train, &synth.target_train, &fit_config(RegularizerMode::Pure))
            .unwrap();
    let acc_adapted = mmdt::evaluate(&model, &synth.target_test).unwrap().accuracy();
    println!("rotation: source-only {acc_source}, adapted {acc_adapted}");
    assert!(
        acc_adapted > acc_source,
        "no adaptation benefit: {acc_source} vs {acc_adapted}"
    );
    // the fit log is non-increasing
    for pair in report.steps.windows(2) {
        assert!(
            pair[1].joint_objective
                <= pair[0].joint_objective + 1e-8 * (1.0 + pair[0].joint_objective)
        );
    }
}

#[test]
fn cross_dimensional_pipeline_runs() {
    let synth = make_shifted_pair(&SynthConfig {
        shift: ShiftKind::DimensionChange,
        categories: 3,
        source_per_class: 15,
        target_per_class: 5,
        test_per_class: 20,
        source_dim: 6,
        target_dim: 9,
        center_spread: 3.0,
        noise: 0.7,
        rng_seed: 62,
        ..SynthConfig::default()
    })
    .unwrap();
    let (model, _) =
        mmdt::fit(&synth.source_train, &synth.target_train, &fit_config(RegularizerMode::Pure))
            .unwrap();
    assert_eq!(model.source_input_dim(), 6);
    assert_eq!(model.target_input_dim(), 9);
    let acc = mmdt::evaluate(&model, &synth.target_test).unwrap().accuracy();
    println!("cross-dimensional accuracy {acc}");
    assert!(acc > 1.0 / 3.0, "no better than chance: {acc}");
}

#[test]
fn predictions_match_materialized_transform() {
    let synth = make_shifted_pair(&SynthConfig {
        shift: ShiftKind::Rotation,
        categories: 3,
        source_per_class: 10,
        target_per_class: 4,
        test_per_class: 10,
        source_dim: 7,
        target_dim: 7,
        rng_seed: 63,
        ..SynthConfig::default()
    })
    .unwrap();
    let (model, _) =
        mmdt::fit(&synth.source_train, &synth.target_train, &fit_config(RegularizerMode::Pure))
            .unwrap();
    let w = model.transform().materialize().unwrap();
    let predictor = model.predictor().unwrap();
    for (x, _) in synth.target_test.examples() {
        let scores = predictor.scores(x).unwrap();
        // dense route: augment, multiply through W, then dot with each plane
        let augmented = x.with_appended(1.0).to_dense(model.transform().target_dim());
        let wx: Vec<f64> = w
            .iter()
            .map(|row| row.iter().zip(&augmented).map(|(a, b)| a * b).sum())
            .collect();
        let mut best = 0;
        let mut dense_scores = Vec::new();
        for (k, plane) in model.classifiers().planes().iter().enumerate() {
            let s: f64 = plane.iter().zip(&wx).map(|(a, b)| a * b).sum();
            dense_scores.push(s);
            if s > dense_scores[best] {
                best = k;
            }
        }
        let (fast_pred, _) = predictor.predict(x).unwrap();
        assert_eq!(fast_pred, best);
        for (a, b) in scores.iter().zip(&dense_scores) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn transferred_clone_matches_original_classifier() {
    let synth = make_shifted_pair(&SynthConfig {
        shift: ShiftKind::Rotation,
        categories: 3,
        source_per_class: 12,
        target_per_class: 4,
        test_per_class: 10,
        source_dim: 6,
        target_dim: 6,
        rng_seed: 64,
        ..SynthConfig::default()
    })
    .unwrap();
    // a source-only model keeps every classifier a plain one-vs-all plane,
    // so a transferred clone of class c1 solves the same problem
    let config = SolverConfig {
        outer_iterations: 0,
        epsilon: 1e-8,
        max_passes: 100_000,
        ..SolverConfig::default()
    };
    let (model, _) = mmdt::fit(&synth.source_train, &synth.target_train, &config).unwrap();

    let clone_name = "c1_clone";
    let positives: Vec<FeatureVector> = synth
        .source_train
        .examples()
        .iter()
        .filter(|(_, c)| synth.source_train.categories()[*c] == "c1")
        .map(|(x, _)| x.clone())
        .collect();
    let negatives: Vec<(FeatureVector, usize)> = synth
        .source_train
        .examples()
        .iter()
        .filter(|(_, c)| synth.source_train.categories()[*c] != "c1")
        .map(|(x, c)| (x.clone(), usize::from(*c > 1) /* compact ids */))
        .collect();
    let negatives = Dataset::new(
        negatives,
        synth.source_train.dimension(),
        vec!["c0".into(), "c2".into()],
        DomainTag::Source,
    )
    .unwrap();

    let opts = TrainOptions {
        epsilon: 1e-8,
        max_passes: 100_000,
        seed: 7,
        ..TrainOptions::default()
    };
    let extended =
        transfer_new_category(&model, clone_name, &positives, &negatives, 1.0, &opts).unwrap();
    let predictor = extended.predictor().unwrap();
    let original_id = 1;
    let clone_id = extended.category_count() - 1;
    for (x, _) in synth.target_test.examples() {
        let scores = predictor.scores(x).unwrap();
        assert!(
            (scores[original_id] - scores[clone_id]).abs() < 1e-4,
            "clone scores diverge: {} vs {}",
            scores[original_id],
            scores[clone_id]
        );
    }
}

#[test]
fn fitted_model_round_trips_exactly() {
    let synth = make_shifted_pair(&SynthConfig {
        shift: ShiftKind::LinearPlusBias,
        categories: 3,
        source_per_class: 10,
        target_per_class: 4,
        test_per_class: 15,
        source_dim: 5,
        target_dim: 5,
        rng_seed: 65,
        ..SynthConfig::default()
    })
    .unwrap();
    let (model, _) =
        mmdt::fit(&synth.source_train, &synth.target_train, &fit_config(RegularizerMode::Pure))
            .unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    save_model(&model, file.path()).unwrap();
    let loaded = load_model(file.path()).unwrap();
    let pa = model.predictor().unwrap();
    let pb = loaded.predictor().unwrap();
    for (x, _) in synth.target_test.examples() {
        let (ka, sa) = pa.predict(x).unwrap();
        let (kb, sb) = pb.predict(x).unwrap();
        assert_eq!(ka, kb);
        assert_eq!(sa, sb);
    }
}

#[test]
fn l1_loss_adaptation_works_end_to_end() {
    let synth = make_shifted_pair(&SynthConfig {
        shift: ShiftKind::Rotation,
        categories: 3,
        source_per_class: 12,
        target_per_class: 4,
        test_per_class: 20,
        source_dim: 8,
        target_dim: 8,
        rng_seed: 66,
        ..SynthConfig::default()
    })
    .unwrap();
    let config = SolverConfig {
        loss: Loss::L1,
        ..fit_config(RegularizerMode::Pure)
    };
    let (model, _) = mmdt::fit(&synth.source_train, &synth.target_train, &config).unwrap();
    let acc = mmdt::evaluate(&model, &synth.target_test).unwrap().accuracy();
    println!("L1 adapted accuracy {acc}");
    assert!(acc > 0.5, "L1 adaptation accuracy {acc}");
}
