mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stateseek_core::winprob::{
    auc, examples_from_matches, featurize, round_series, t_probability, train, train_with, TrainConfig,
    WinProbModel,
};

#[test]
fn held_out_auc_and_probability_range() {
    let matches = synth_matches(24, 31);
    let (train_m, test_m) = matches.split_at(18);
    let model = train(&examples_from_matches(train_m), 5).unwrap();
    assert!(model.training_meta.converged);
    let test = examples_from_matches(test_m);
    let scores: Vec<f64> = test.iter().map(|e| model.predict_features(&e.features)).collect();
    let labels: Vec<bool> = test.iter().map(|e| e.ct_won).collect();
    assert!(scores.iter().all(|&p| p > 0.0 && p < 1.0));
    let a = auc(&scores, &labels).unwrap();
    assert!(a > 0.7, "held-out AUC {a}");
    // CT numbers help CT, T numbers help T.
    assert!(model.weight("ct_alive").unwrap() > 0.0);
    assert!(model.weight("t_alive").unwrap() < 0.0);
}

#[test]
fn training_is_reproducible() {
    let ex = examples_from_matches(&synth_matches(6, 2));
    let a = train(&ex, 9).unwrap();
    let b = train(&ex, 9).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    // Subsampling is driven by the seed.
    let cfg = TrainConfig {
        max_samples: 2_000,
        ..Default::default()
    };
    let c = train_with(&ex, 1, "c", &cfg).unwrap();
    let d = train_with(&ex, 1, "c", &cfg).unwrap();
    let e = train_with(&ex, 2, "c", &cfg).unwrap();
    assert_eq!(c, d);
    assert_ne!(c.weights, e.weights);
    assert_eq!(c.training_meta.samples, 2_000);
}

#[test]
fn loss_decreases_and_model_file_round_trips() {
    let ex = examples_from_matches(&synth_matches(4, 3));
    let m = train(&ex, 0).unwrap();
    assert!(m.training_meta.loss_curve.windows(2).all(|w| w[1] <= w[0]));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wp.json");
    m.save(&path).unwrap();
    assert_eq!(WinProbModel::load(&path).unwrap(), m);
}

#[test]
fn series_complementary_per_frame() {
    let matches = synth_matches(3, 4);
    let model = train(&examples_from_matches(&matches), 1).unwrap();
    for r in matches.iter().flat_map(|m| &m.rounds).take(20) {
        let s = round_series(&model, r);
        assert_eq!(s.points.len(), r.frames.len());
        assert_eq!(s.bomb_plant_t, r.bomb_plant_t);
        for (pt, f) in s.points.iter().zip(&r.frames) {
            assert_eq!(pt.t, f.t);
            assert_eq!(pt.p_ct, model.predict_features(&featurize(f, r)));
            assert!((pt.p_ct + t_probability(pt.p_ct) - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn auc_equals_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.gen_range(2..200);
        let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..20) as f64) / 20.0).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if labels[i] && !labels[j] {
                    den += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        match auc(&scores, &labels) {
            Some(a) => assert!((a - num / den).abs() < 1e-12),
            None => assert_eq!(den, 0.0),
        }
    }
}
