mod common;

use std::sync::Arc;

use common::{raw_logistic, synthetic_states};
use csgo_wpa::features::{fit_schema, vectorize, FeatureMatrix, FeatureSchema, FitOptions, MAP};
use csgo_wpa::ingest::{generate_synthetic, MapSpec, SyntheticConfig};
use csgo_wpa::model::{replay_match, GameState};
use csgo_wpa::winprob::{
    auc, calibration_curve, calibration_table, evaluate, evaluate_by_time, evaluate_predictions, feature_importance,
    load_model, predict, read_model, save_model, train_baseline, train_gbt, train_logistic, write_model, GbtConfig,
    LogisticConfig, ModelParams, WinProbError, WinProbModel, PROB_EPS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy_state(map: &str, ct_equip: u32, t_equip: u32, y: bool) -> GameState {
    GameState {
        match_id: Arc::from("toy"),
        match_date: chrono::NaiveDate::from_ymd_opt(2019, 6, 1).unwrap(),
        map_name: Arc::from(map),
        round_num: 1,
        tick_rate: 128,
        tick: 0,
        ticks_since_start: 0,
        ct_equip_value: ct_equip,
        t_equip_value: t_equip,
        ct_players_alive: 5,
        t_players_alive: 5,
        ct_hp_total: 500,
        t_hp_total: 500,
        bomb_planted: false,
        bomb_site: None,
        ct_dist_a: None,
        ct_dist_b: None,
        t_dist_a: None,
        t_dist_b: None,
        outcome_label: Some(y),
    }
}

fn fit(states: &[GameState]) -> (FeatureSchema, FeatureMatrix) {
    let schema = fit_schema(states, &FitOptions::default()).unwrap();
    let m = vectorize(states, &schema).unwrap();
    (schema, m)
}

#[test]
fn baseline_is_the_map_rate() {
    let states: Vec<_> = [true, false, true, true].map(|y| toy_state("de_nuke", 4000, 4000, y)).to_vec();
    let (schema, m) = fit(&states);
    let b = train_baseline(&schema, &m).unwrap();
    assert!(predict(&b, &m).unwrap().iter().all(|&p| p == 0.75));

    let mut states = Vec::new();
    for (map, wins) in [("de_inferno", 4), ("de_train", 6)] {
        for i in 0..10 {
            states.push(toy_state(map, 4000, 4000, i < wins));
        }
    }
    let (schema, m) = fit(&states);
    let b = train_baseline(&schema, &m).unwrap();
    let ModelParams::MapAverage(params) = &b.params else { panic!() };
    assert_eq!(params.map_rates, [0.4, 0.6]);
    let unseen = b.predict_state(&toy_state("de_vertigo", 4000, 4000, true)).unwrap();
    assert_eq!(unseen, 0.5);
}

#[test]
fn balanced_baseline_matches_constant_identities() {
    let states = synthetic_states(&SyntheticConfig { seed: 2, n_matches: 30, ..Default::default() });
    let (schema, m) = fit(&states);
    let r = evaluate(&train_baseline(&schema, &m).unwrap(), &m).unwrap();
    assert!((r.metrics.log_loss - std::f64::consts::LN_2).abs() < 0.01, "{:?}", r.metrics);
    assert!((r.metrics.brier - 0.25).abs() < 0.005);
    assert!((r.metrics.auc.unwrap() - 0.5).abs() < 0.05);
}

#[test]
fn constant_half_identities() {
    let y: Vec<bool> = (0..10_000).map(|i| i % 2 == 0).collect();
    let p = vec![0.5; y.len()];
    let m = evaluate_predictions(&p, &y).unwrap();
    assert!((m.log_loss - std::f64::consts::LN_2).abs() < 1e-12);
    assert!((m.brier - 0.25).abs() < 1e-12);
    assert_eq!(m.auc, Some(0.5));
    assert_eq!(calibration_table(&p, &y, 100).unwrap().len(), 1);
}

#[test]
fn auc_pairwise_example_and_perfect_predictions() {
    assert_eq!(auc(&[0.9, 0.8, 0.3], &[true, false, false]), Some(1.0));
    let y = [true, false, true, false];
    let m = evaluate_predictions(&[1.0, 0.0, 1.0, 0.0], &y).unwrap();
    assert!(m.log_loss < 2e-6 && m.brier < 1e-11);
    assert_eq!(m.auc, Some(1.0));
}

#[test]
fn calibration_needs_two_bins() {
    assert!(matches!(calibration_table(&[0.5], &[true], 1), Err(WinProbError::InvalidConfig(_))));
    let p = [0.05, 0.05, 0.95, 0.95];
    let y = [false, false, true, true];
    let bins = calibration_table(&p, &y, 10).unwrap();
    assert_eq!(bins.iter().map(|b| (b.bin, b.count)).collect::<Vec<_>>(), [(0, 2), (9, 2)]);
}

fn separable(rng: &mut ChaCha8Rng, n: usize) -> Vec<GameState> {
    (0..n)
        .map(|_| {
            let ct: u32 = rng.gen_range(1000..30_000);
            let t: u32 = rng.gen_range(1000..30_000);
            toy_state("de_nuke", ct, t, ct + 500 > t)
        })
        .collect()
}

#[test]
fn logistic_separates_linear_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let train = separable(&mut rng, 2000);
    let test = separable(&mut rng, 2000);
    let (schema, m) = fit(&train);
    let model = train_logistic(&schema, &m, &LogisticConfig::default()).unwrap();
    let r = evaluate(&model, &vectorize(&test, &schema).unwrap()).unwrap();
    assert!(r.metrics.auc.unwrap() > 0.99, "{:?}", r.metrics);
}

#[test]
fn degenerate_labels_are_rejected() {
    let states: Vec<_> = (0..10).map(|i| toy_state("de_nuke", 1000 * i, 4000, true)).collect();
    let (schema, m) = fit(&states);
    assert!(matches!(train_logistic(&schema, &m, &LogisticConfig::default()), Err(WinProbError::DegenerateLabels)));
    assert!(matches!(train_gbt(&schema, &m, &GbtConfig::default()), Err(WinProbError::DegenerateLabels)));
}

#[test]
fn zero_coefficients_predict_half() {
    let states = synthetic_states(&SyntheticConfig { n_matches: 1, ..Default::default() });
    let model = raw_logistic(&states, &[]);
    let (_, m) = fit(&states);
    assert!(predict(&model, &m).unwrap().iter().all(|&p| p == 0.5));
}

#[test]
fn xor_needs_trees() {
    // CT wins when exactly one of (ct rich, t rich) holds
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut draw = |n: usize| -> Vec<GameState> {
        (0..n)
            .map(|_| {
                let ct: u32 = rng.gen_range(0..20_000);
                let t: u32 = rng.gen_range(0..20_000);
                toy_state("de_nuke", ct, t, (ct > 10_000) != (t > 10_000))
            })
            .collect()
    };
    let (train, test) = (draw(4000), draw(4000));
    let (schema, m) = fit(&train);
    let mt = vectorize(&test, &schema).unwrap();
    let gbt = train_gbt(&schema, &m, &GbtConfig { n_trees: 30, max_depth: 3, ..Default::default() }).unwrap();
    let logistic = train_logistic(&schema, &m, &LogisticConfig::default()).unwrap();
    let g = evaluate(&gbt, &mt).unwrap().metrics.auc.unwrap();
    let l = evaluate(&logistic, &mt).unwrap().metrics.auc.unwrap();
    assert!(g > 0.95 && l < 0.6, "gbt {g} logistic {l}");
}

#[test]
fn training_losses_never_rise() {
    let states = synthetic_states(&SyntheticConfig { seed: 13, n_matches: 20, ..Default::default() });
    let (schema, m) = fit(&states);
    let logistic = train_logistic(&schema, &m, &LogisticConfig::default()).unwrap();
    let ModelParams::Logistic(p) = &logistic.params else { panic!() };
    assert_eq!(p.loss_history.len(), 501);
    for w in p.loss_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-9);
    }

    let gbt = train_gbt(&schema, &m, &GbtConfig { n_trees: 20, max_depth: 4, ..Default::default() }).unwrap();
    let ModelParams::Gbt(g) = &gbt.params else { panic!() };
    let y = m.labels.as_ref().unwrap();
    let mut raw = vec![g.base_score; m.n_rows()];
    let loss = |raw: &[f64]| evaluate_predictions(&raw.iter().map(|r| 1.0 / (1.0 + (-r).exp())).collect::<Vec<_>>(), y).unwrap().log_loss;
    let mut prev = loss(&raw);
    for tree in &g.trees {
        for (r, row) in raw.iter_mut().zip(m.rows()) {
            *r += tree.predict(row);
        }
        let next = loss(&raw);
        assert!(next <= prev + 1e-9, "{next} > {prev}");
        prev = next;
    }
}

#[test]
fn gbt_beats_logistic_with_interaction() {
    let cfg = SyntheticConfig { seed: 11, n_matches: 150, planted_alive_interaction: 3.0, ..Default::default() };
    let train = synthetic_states(&cfg);
    let test = synthetic_states(&SyntheticConfig { seed: 12, n_matches: 100, ..cfg });
    let (schema, m) = fit(&train);
    let mt = vectorize(&test, &schema).unwrap();
    let gcfg = GbtConfig { min_child_weight: 200.0, ..Default::default() };
    assert_eq!((gcfg.n_trees, gcfg.max_depth), (100, 8));
    let gbt = train_gbt(&schema, &m, &gcfg).unwrap();
    let logistic = train_logistic(&schema, &m, &LogisticConfig::default()).unwrap();
    let g = evaluate(&gbt, &mt).unwrap().metrics.auc.unwrap();
    let l = evaluate(&logistic, &mt).unwrap().metrics.auc.unwrap();
    assert!(g > l, "gbt {g} logistic {l}");
}

#[test]
fn gbt_is_deterministic() {
    let states = synthetic_states(&SyntheticConfig { seed: 19, n_matches: 10, ..Default::default() });
    let (schema, m) = fit(&states);
    let cfg = GbtConfig { n_trees: 10, ..Default::default() };
    assert_eq!(train_gbt(&schema, &m, &cfg).unwrap(), train_gbt(&schema, &m, &cfg).unwrap());
}

#[test]
fn batch_prediction_equals_per_row_and_stays_in_bounds() {
    let states = synthetic_states(&SyntheticConfig { seed: 17, n_matches: 5, ..Default::default() });
    let (schema, m) = fit(&states);
    for model in [
        train_baseline(&schema, &m).unwrap(),
        train_logistic(&schema, &m, &LogisticConfig::default()).unwrap(),
        train_gbt(&schema, &m, &GbtConfig { n_trees: 10, ..Default::default() }).unwrap(),
    ] {
        let batch = predict(&model, &m).unwrap();
        for (i, p) in batch.iter().enumerate() {
            assert_eq!(*p, model.predict_row(m.row(i)));
            assert!((PROB_EPS..=1.0 - PROB_EPS).contains(p));
        }
        assert_eq!(model.predict_state(&states[3]).unwrap(), batch[3]);
    }
}

#[test]
fn single_time_bin_equals_evaluate() {
    let states = synthetic_states(&SyntheticConfig { seed: 23, n_matches: 3, ..Default::default() });
    let (schema, m) = fit(&states);
    let model = train_logistic(&schema, &m, &LogisticConfig::default()).unwrap();
    let rows = evaluate_by_time(&model, &m, 10_000.0).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].metrics, evaluate(&model, &m).unwrap().metrics);
    // bins 5 s wide: only occupied bins are reported, in order
    let rows = evaluate_by_time(&model, &m, 5.0).unwrap();
    assert!(rows.windows(2).all(|w| w[0].bin < w[1].bin));
    assert_eq!(rows.iter().map(|r| r.metrics.n).sum::<usize>(), m.n_rows());
    assert!(evaluate_by_time(&model, &m, 0.0).is_err());
}

#[test]
fn truth_beats_perturbed_truth() {
    let data = generate_synthetic(&SyntheticConfig { seed: 41, n_matches: 80, ..Default::default() });
    let states: Vec<_> = data.matches.iter().flat_map(|m| replay_match(m, None).unwrap().into_iter().flatten()).collect();
    let y: Vec<bool> = states.iter().map(|s| s.outcome_label.unwrap()).collect();
    let score = |truth: &csgo_wpa::ingest::GroundTruth| {
        let p: Vec<f64> = states.iter().map(|s| truth.predict(s)).collect();
        let m = evaluate_predictions(&p, &y).unwrap();
        (m.log_loss, m.brier)
    };
    let (ll, brier) = score(&data.truth);
    let perturbations = [
        |t: &mut csgo_wpa::ingest::GroundTruth| t.alive *= 1.6,
        |t: &mut csgo_wpa::ingest::GroundTruth| t.intercept += 0.4,
        |t: &mut csgo_wpa::ingest::GroundTruth| t.hp_per_100 = 0.0,
    ];
    for f in perturbations {
        let mut t = data.truth.clone();
        f(&mut t);
        let (pl, pb) = score(&t);
        assert!(ll < pl && brier < pb, "truth {ll}/{brier} perturbed {pl}/{pb}");
    }
}

#[test]
fn importance_sums_to_hundred_and_finds_the_dominant_feature() {
    let maps = vec![
        MapSpec { name: "de_nuke".into(), weight: 1.0, offset: 2.5 },
        MapSpec { name: "de_train".into(), weight: 1.0, offset: -2.5 },
    ];
    let cfg = SyntheticConfig {
        seed: 3,
        n_matches: 30,
        maps,
        equip_per_1000: 0.0,
        alive: 0.05,
        hp_per_100: 0.05,
        planted: 0.0,
        site_b: 0.0,
        ..Default::default()
    };
    let states = synthetic_states(&cfg);
    let (schema, m) = fit(&states);
    let model = train_gbt(&schema, &m, &GbtConfig { n_trees: 20, max_depth: 3, ..Default::default() }).unwrap();
    let imp = feature_importance(&model).unwrap();
    assert_eq!(imp[0].feature, MAP);
    assert!((imp.iter().map(|i| i.importance).sum::<f64>() - 100.0).abs() < 1e-6);
    let logistic = train_logistic(&schema, &m, &LogisticConfig { epochs: 5, ..Default::default() }).unwrap();
    assert!(matches!(feature_importance(&logistic), Err(WinProbError::NotATreeModel(_))));
}

#[test]
fn model_files_round_trip_bit_exactly() {
    let states = synthetic_states(&SyntheticConfig { seed: 29, n_matches: 3, ..Default::default() });
    let (schema, m) = fit(&states);
    let dir = tempfile::tempdir().unwrap();
    for model in [
        train_baseline(&schema, &m).unwrap(),
        train_logistic(&schema, &m, &LogisticConfig { epochs: 50, ..Default::default() }).unwrap(),
        train_gbt(&schema, &m, &GbtConfig { n_trees: 10, ..Default::default() }).unwrap(),
    ] {
        let path = dir.path().join(format!("{}.wpm", model.kind()));
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        let (a, b) = (predict(&model, &m).unwrap(), predict(&back, &m).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

        let mut bytes = Vec::new();
        write_model(&model, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 7);
        assert!(read_model(&mut bytes.as_slice()).is_err());
    }
}

#[test]
fn distance_features_are_refused_without_schema_support() {
    let states = synthetic_states(&SyntheticConfig { n_matches: 1, ..Default::default() });
    let (schema, m) = fit(&states);
    let model: WinProbModel = train_baseline(&schema, &m).unwrap();
    let mut s = states[0].clone();
    s.ct_dist_a = Some(3.0);
    s.ct_dist_b = Some(4.0);
    s.t_dist_a = Some(5.0);
    s.t_dist_b = Some(6.0);
    let err = model.predict_state(&s).unwrap_err();
    assert!(err.to_string().contains("schema mismatch"), "{err}");
}

#[test]
fn calibration_curve_of_a_model() {
    let states: Vec<_> = (0..200).map(|i| toy_state("de_nuke", 4000, 4000, i % 4 == 0)).collect();
    let (schema, m) = fit(&states);
    let b = train_baseline(&schema, &m).unwrap();
    let curve = calibration_curve(&b, &m, 100).unwrap();
    assert_eq!(curve.len(), 1);
    assert_eq!((curve[0].bin, curve[0].count), (25, 200));
    assert_eq!(curve[0].mean_predicted, curve[0].mean_observed);
}

proptest! {
    #[test]
    fn auc_ignores_monotone_transforms(p in prop::collection::vec(0.0f64..1.0, 2..60), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<bool> = p.iter().map(|_| rng.gen_bool(0.5)).collect();
        let transformed: Vec<f64> = p.iter().map(|v| (3.0 * v).exp() + 1.0).collect();
        prop_assert_eq!(auc(&p, &y), auc(&transformed, &y));
    }
}
