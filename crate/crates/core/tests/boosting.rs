use dfc_core::gbdt::{
    init_constant, leaf_value, pseudo_residuals, train, BoostConfig, Dataset, Ensemble, Loss, LossFunction, TreeConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQ: LossFunction = LossFunction::Squared;
const ABS: LossFunction = LossFunction::Absolute;

#[test]
fn constant_is_mean_or_median() {
    let t = [1.0, 2.0, 6.0];
    assert_eq!(init_constant(&t, &SQ).unwrap(), 3.0);
    assert_eq!(init_constant(&t, &ABS).unwrap(), 2.0);
    assert_eq!(init_constant(&[4.0, -1.0, 7.0, 0.0, 2.0], &ABS).unwrap(), 2.0);
    assert!(init_constant(&[], &SQ).is_err());
}

#[test]
fn squared_residual_is_target_minus_prediction() {
    let r = pseudo_residuals(&[1.0, 2.0, 6.0], &[3.0, 3.0, 3.0], &SQ).unwrap();
    assert_eq!(r, vec![-2.0, -1.0, 3.0]);
    let r = pseudo_residuals(&[1.0, 3.0, 6.0], &[3.0, 3.0, 3.0], &ABS).unwrap();
    assert_eq!(r, vec![-1.0, 0.0, 1.0]);
    assert!(pseudo_residuals(&[1.0], &[1.0, 2.0], &SQ).is_err());
}

#[test]
fn squared_leaf_value_is_mean_residual() {
    assert_eq!(leaf_value(&[1.0, 2.0], &[3.0, 3.0], &SQ).unwrap(), -1.5);
    assert_eq!(leaf_value(&[6.0, 0.0, 9.0], &[3.0, 3.0, 3.0], &SQ).unwrap(), 2.0);
    assert_eq!(leaf_value(&[6.0, 0.0, 9.0], &[3.0, 3.0, 3.0], &ABS).unwrap(), 3.0);
}

#[test]
fn one_round_by_hand() {
    let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
    let data = Dataset::new(&x, vec![0.0, 0.0, 10.0, 10.0]).unwrap();
    let cfg = BoostConfig {
        n_iterations: 1,
        learning_rate: 0.5,
        tree: TreeConfig {
            max_leaves: 2,
            min_samples_leaf: 1,
        },
    };
    let ens = train(&data, SQ, &cfg).unwrap();
    assert_eq!(ens.base_value, 5.0);
    assert_eq!(ens.trees.len(), 1);
    // Residuals ±5 split at 1.5 into leaves of −5 and +5, shrunk by half.
    assert_eq!(ens.predict(&[0.0]).unwrap(), 2.5);
    assert_eq!(ens.predict(&[3.0]).unwrap(), 7.5);
    assert_eq!(ens.predict(&[1.5]).unwrap(), 2.5);
    assert_eq!(ens.train_loss, vec![12.5, 3.125]);
}

fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let n = rng.gen_range(2..=40);
    let d = rng.gen_range(1..=3);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| r[0].sin() * 4.0 + rng.gen_range(-1.0..1.0) + if rng.gen_bool(0.1) { 20.0 } else { 0.0 })
        .collect();
    Dataset::new(&rows, y).unwrap()
}

#[test]
fn training_loss_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let data = random_dataset(&mut rng);
        let cfg = BoostConfig {
            n_iterations: 25,
            learning_rate: rng.gen_range(0.05..=1.0),
            tree: TreeConfig {
                max_leaves: rng.gen_range(1..=6),
                min_samples_leaf: rng.gen_range(1..=3),
            },
        };
        for loss in [SQ, ABS] {
            let ens = train(&data, loss, &cfg).unwrap();
            assert_eq!(ens.train_loss.len(), cfg.n_iterations + 1);
            for (m, w) in ens.train_loss.windows(2).enumerate() {
                assert!(
                    w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
                    "case {case} {loss:?} round {m}: {} -> {}",
                    w[0],
                    w[1]
                );
            }
            let preds = ens.predict_dataset(&data).unwrap();
            let recomputed = data
                .targets()
                .iter()
                .zip(&preds)
                .map(|(&t, &f)| loss.evaluate(t, f))
                .sum::<f64>()
                / data.len() as f64;
            let last = *ens.train_loss.last().unwrap();
            assert!((recomputed - last).abs() <= 1e-9 * last.abs().max(1.0));
        }
    }
}

#[test]
fn round_trip_through_file() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = random_dataset(&mut rng);
    let ens = train(&data, SQ, &BoostConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    ens.save(&path).unwrap();
    let back = Ensemble::load(&path).unwrap();
    assert_eq!(
        back.predict_dataset(&data).unwrap(),
        ens.predict_dataset(&data).unwrap()
    );
}

#[test]
fn malformed_model_rejected() {
    assert!(Ensemble::from_json("{}").is_err());
    assert!(Ensemble::from_json("not json").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn json_round_trip_is_prediction_exact(
        seed in any::<u64>(),
        probes in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 2), 1..20),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]).collect();
        let y = rows.iter().map(|r| r[0] * r[1] + rng.gen_range(-0.1..0.1)).collect();
        let data = Dataset::new(&rows, y).unwrap();
        let cfg = BoostConfig { n_iterations: 20, ..BoostConfig::default() };
        let ens = train(&data, SQ, &cfg).unwrap();
        let back = Ensemble::from_json(&ens.to_json().unwrap()).unwrap();
        for p in &probes {
            prop_assert_eq!(ens.predict(p).unwrap().to_bits(), back.predict(p).unwrap().to_bits());
        }
    }

    #[test]
    fn constant_minimises_loss(t in prop::collection::vec(-100f64..100.0, 1..30), shift in -5f64..5.0) {
        for loss in [SQ, ABS] {
            let c = init_constant(&t, &loss).unwrap();
            let total = |g: f64| t.iter().map(|&v| loss.evaluate(v, g)).sum::<f64>();
            prop_assert!(total(c) <= total(c + shift) + 1e-9 * total(c).max(1.0));
        }
    }
}
