use clam_core::classifier::{class_accuracies, train_baseline, train_clam, train_method, Architecture, TrainConfig};
use clam_core::data::{gen_synthetic, Dataset, OverlapPair, SampleShape, Split, SyntheticSpec};
use clam_core::game::verify_theorem1;
use clam_core::losses::LossSpec;
use clam_core::simplex::{MwConfig, Projection, RestrictedSimplex};

fn blobs(n_classes: usize, per_class: usize, separation: f64, pairs: Vec<OverlapPair>, seed: u64) -> (Dataset<f64>, Dataset<f64>) {
    let spec = SyntheticSpec {
        n_classes,
        dim: n_classes.max(4),
        train_per_class: per_class,
        test_per_class: per_class / 2,
        separation,
        overlap_pairs: pairs,
        seed,
    };
    gen_synthetic(&spec).unwrap()
}

fn small_cfg(seed: u64) -> TrainConfig {
    TrainConfig { epochs: 8, batch_size: 32, learning_rate: 0.05, seed, architecture: Architecture::Mlp { hidden: 16 }, ..Default::default() }
}

#[test]
fn same_seed_same_result() {
    let (tr, te) = blobs(4, 100, 4.0, vec![OverlapPair { a: 0, b: 1, strength: 0.5 }], 3);
    for spec in [LossSpec::Normal, LossSpec::clam_default(), LossSpec::tce_default(), LossSpec::pw_default()] {
        let a = train_method(&tr, Some(&te), &small_cfg(11), &spec).unwrap();
        let b = train_method(&tr, Some(&te), &small_cfg(11), &spec).unwrap();
        assert_eq!(a, b, "{}", spec.name());
        let c = train_method(&tr, Some(&te), &small_cfg(12), &spec).unwrap();
        assert_ne!(a.params, c.params);
    }
}

#[test]
fn trace_lengths_match_epochs() {
    let (tr, te) = blobs(3, 60, 4.0, vec![], 1);
    let r = train_method(&tr, Some(&te), &small_cfg(0), &LossSpec::clam_default()).unwrap();
    assert_eq!(r.epochs.len(), 8);
    assert!(r.epochs.iter().all(|e| e.weights.len() == 3 && e.train_acc.len() == 3 && e.test_acc.is_some()));
}

#[test]
fn clam_weights_stay_in_restricted_simplex() {
    let (tr, _) = blobs(5, 80, 3.0, vec![OverlapPair { a: 0, b: 1, strength: 0.9 }], 2);
    for proj in [Projection::ScaledClip, Projection::Euclidean, Projection::ProofClip] {
        let s = RestrictedSimplex::new(5, 0.1).unwrap();
        let mw = MwConfig::new(2.0, proj).unwrap();
        let r = train_clam(&tr, None, &small_cfg(5), &mw, &s).unwrap();
        for w in r.epochs.iter().map(|e| &e.weights).chain([&r.final_weights]) {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // the single-pass clip can undershoot the floor after renormalizing
            if proj != Projection::ProofClip {
                assert!(s.contains(w), "{proj:?}: {w:?}");
            }
        }
    }
}

#[test]
fn clam_run_is_a_valid_game_trace() {
    let (tr, _) = blobs(4, 80, 3.0, vec![OverlapPair { a: 0, b: 1, strength: 0.8 }], 4);
    let s = RestrictedSimplex::new(4, 0.05).unwrap();
    let mw = MwConfig::new(1.0, Projection::ProofClip).unwrap();
    let r = train_clam(&tr, None, &small_cfg(1), &mw, &s).unwrap();
    let trace = r.as_game_trace().unwrap();
    assert_eq!(trace.len(), 8);
    let d = verify_theorem1(&trace, &s, 1.0).unwrap();
    assert!(d.per_step_holds(), "{:?}", d.max_excess);
    assert!(train_method(&tr, None, &small_cfg(1), &LossSpec::Normal).unwrap().as_game_trace().is_err());
}

#[test]
fn separable_two_class_reaches_perfect_fit() {
    let (tr, te) = blobs(2, 200, 12.0, vec![], 8);
    let cfg = TrainConfig { epochs: 10, ..small_cfg(3) };
    let r = train_method(&tr, Some(&te), &cfg, &LossSpec::clam_default()).unwrap();
    assert_eq!(r.final_train_acc(), &[1.0, 1.0]);
    // once both classes are fit the multiplicative factors cancel
    let last = &r.epochs[r.epochs.len() - 1];
    assert_eq!(last.train_acc, vec![1.0, 1.0]);
    for (a, b) in last.weights.iter().zip(&r.final_weights) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(r.final_weights.iter().all(|&w| (w - 0.5).abs() < 0.01), "{:?}", r.final_weights);
    let full = class_accuracies(&r.params, &tr).unwrap();
    assert_eq!(full.acc.as_slice(), &[1.0, 1.0]);
}

#[test]
fn well_separated_classes_are_learned() {
    let (tr, te) = blobs(5, 300, 10.0, vec![], 21);
    let cfg = TrainConfig { epochs: 10, ..small_cfg(0) };
    let r = train_method(&tr, Some(&te), &cfg, &LossSpec::Normal).unwrap();
    assert!(r.final_test_acc().unwrap().iter().all(|&a| a >= 0.99), "{:?}", r.final_test_acc());
}

#[test]
fn identical_classes_are_a_coin_flip() {
    let (tr, te) = blobs(3, 400, 10.0, vec![OverlapPair { a: 0, b: 1, strength: 1.0 }], 6);
    let cfg = TrainConfig { epochs: 10, ..small_cfg(2) };
    let r = train_method(&tr, Some(&te), &cfg, &LossSpec::Normal).unwrap();
    let v = r.final_test_acc().unwrap();
    assert!(v[0] + v[1] > 0.85 && v[0] + v[1] < 1.15, "{v:?}");
    assert!(v[2] > 0.99);
}

#[test]
fn full_pass_accuracy_flag() {
    let (tr, _) = blobs(3, 50, 4.0, vec![], 9);
    let cfg = TrainConfig { full_pass_accuracy: true, ..small_cfg(4) };
    let r = train_method(&tr, None, &cfg, &LossSpec::Normal).unwrap();
    let v = class_accuracies(&r.params, &tr).unwrap();
    assert_eq!(r.final_train_acc(), v.acc.as_slice());
}

#[test]
fn json_export_layout() {
    let (tr, te) = blobs(3, 40, 4.0, vec![], 2);
    let cfg = small_cfg(1);
    let r = train_method(&tr, Some(&te), &cfg, &LossSpec::clam_default()).unwrap();
    let j = r.to_json(&cfg, 0.1).unwrap();
    assert_eq!(j["per_epoch"].as_array().unwrap().len(), 8);
    for key in ["epoch", "w", "train_acc", "test_acc", "mean_loss"] {
        assert!(j["per_epoch"][0].get(key).is_some(), "{key}");
    }
    assert_eq!(j["config"]["epochs"], 8);
    assert!(j["final"]["test"]["std"].is_number());
    assert_eq!(j["method"]["method"], "clam");
}

#[test]
fn f32_training_runs() {
    let (tr, te) = blobs(3, 60, 6.0, vec![], 5);
    let (tr, te) = (tr.cast::<f32>(), te.cast::<f32>());
    let r = train_method(&tr, Some(&te), &small_cfg(0), &LossSpec::<f32>::clam_default()).unwrap();
    assert!(r.final_test_acc().unwrap().iter().all(|&a| a > 0.8));
}

#[test]
fn config_errors() {
    let (tr, _) = blobs(3, 20, 4.0, vec![], 0);
    let bad = [
        TrainConfig { epochs: 0, ..small_cfg(0) },
        TrainConfig { batch_size: 0, ..small_cfg(0) },
        TrainConfig { learning_rate: 0.0, ..small_cfg(0) },
        TrainConfig { iterations_per_epoch: Some(0), ..small_cfg(0) },
    ];
    for cfg in bad {
        assert!(train_method(&tr, None, &cfg, &LossSpec::Normal).is_err());
    }
    assert!(train_baseline(&tr, None, &small_cfg(0), &LossSpec::clam_default()).is_err());
    let huge_u = LossSpec::Clam { tau: 1.0, u_min: Some(0.5), projection: Projection::ScaledClip };
    assert!(train_method(&tr, None, &small_cfg(0), &huge_u).is_err());
    let one_class = Dataset::new(vec![0.0, 1.0], vec![0, 0], 1, SampleShape::Flat { dim: 1 }, Split::Train).unwrap();
    assert!(train_method(&one_class, None, &small_cfg(0), &LossSpec::Normal).is_err());
}

#[test]
fn diverging_step_reports_non_finite_gradient() {
    let (tr, _) = blobs(3, 50, 4.0, vec![], 1);
    let cfg = TrainConfig { learning_rate: 1e300, ..small_cfg(0) };
    let err = train_method(&tr, None, &cfg, &LossSpec::Normal).unwrap_err();
    assert!(matches!(err, clam_core::Error::NonFiniteGradient(_)), "{err}");
    assert!(err.to_string().contains("epoch 0"), "{err}");
}
