mod common;

use common::{load_match, synthetic_states};
use csgo_wpa::features::{fit_schema, vectorize, FeatureKind, FitOptions, BOMB_PLANTED};
use csgo_wpa::ingest::SyntheticConfig;
use csgo_wpa::model::{replay_round, BombSite, GameState};
use proptest::prelude::*;

#[test]
fn fixture_round_hand_vectorized() {
    let m = load_match("match_small.json");
    let states = replay_round(&m, &m.rounds[0], None).unwrap();
    let schema = fit_schema(&states, &FitOptions::default()).unwrap();
    let x = vectorize(&states, &schema).unwrap();
    assert_eq!(
        x.names,
        [
            "map",
            "ticks_since_start",
            "ct_equip_value",
            "t_equip_value",
            "ct_players_alive",
            "t_players_alive",
            "ct_hp_total",
            "t_hp_total",
            "bomb_planted",
            "bomb_site",
        ]
    );
    #[rustfmt::skip]
    let expected: [[f64; 10]; 13] = [
        [0.0,    0.0, 4000.0, 4000.0, 5.0, 5.0, 500.0, 500.0, 0.0, 0.0],
        [0.0,  640.0, 4000.0, 4000.0, 5.0, 5.0, 500.0, 500.0, 0.0, 0.0],
        [0.0, 1280.0, 4000.0, 4000.0, 5.0, 5.0, 500.0, 440.0, 0.0, 0.0],
        [0.0, 1300.0, 4000.0, 4000.0, 4.0, 5.0, 400.0, 440.0, 0.0, 0.0],
        [0.0, 1500.0, 4000.0, 4000.0, 4.0, 4.0, 400.0, 340.0, 0.0, 0.0],
        [0.0, 2000.0, 4000.0, 4000.0, 4.0, 3.0, 400.0, 300.0, 0.0, 0.0],
        [0.0, 3000.0, 4000.0, 4000.0, 4.0, 3.0, 400.0, 300.0, 0.0, 0.0],
        [0.0, 3500.0, 4000.0, 4000.0, 4.0, 3.0, 400.0, 300.0, 1.0, 1.0],
        [0.0, 4000.0, 4000.0, 4000.0, 4.0, 3.0, 370.0, 300.0, 1.0, 1.0],
        [0.0, 4200.0, 4000.0, 4000.0, 4.0, 3.0, 370.0, 300.0, 1.0, 1.0],
        [0.0, 5000.0, 4000.0, 4000.0, 4.0, 3.0, 370.0, 250.0, 1.0, 1.0],
        [0.0, 5100.0, 4000.0, 4000.0, 4.0, 3.0, 350.0, 250.0, 1.0, 1.0],
        [0.0, 7000.0, 4000.0, 4000.0, 4.0, 3.0, 350.0, 250.0, 1.0, 1.0],
    ];
    assert_eq!(x.n_rows(), 13);
    for (i, row) in expected.iter().enumerate() {
        assert_eq!(x.row(i), row, "row {i}");
        assert_eq!(x.meta[i].ticks_since_start, row[1] as i64);
        assert_eq!(x.meta[i].seconds, row[1] / 128.0);
    }
    assert_eq!(x.labels.as_deref(), Some(&[false; 13][..]));
    assert_eq!(schema.map_vocab, ["de_dust2"]);
    // equipment is constant within the round and passes through unscaled
    let equip = schema.index_of("ct_equip_value").unwrap();
    assert_eq!(schema.stds[equip], 0.0);
}

#[test]
fn statistics_match_two_pass_oracle() {
    let mut states = synthetic_states(&SyntheticConfig { seed: 9, n_matches: 20, ..Default::default() });
    states.truncate(10_000);
    assert_eq!(states.len(), 10_000);
    let schema = fit_schema(&states, &FitOptions::default()).unwrap();
    let x = vectorize(&states, &schema).unwrap();
    let n = x.n_rows() as f64;
    for (j, f) in schema.features.iter().enumerate() {
        if f.kind == FeatureKind::Categorical {
            continue;
        }
        let col: Vec<f64> = x.rows().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((schema.means[j] - mean).abs() <= 1e-9 * mean.abs().max(1.0), "{}", f.name);
        assert!((schema.stds[j] - var.sqrt()).abs() <= 1e-9 * var.sqrt().max(1.0), "{}", f.name);
    }

    // standardized design columns have mean 0 and unit spread on the fit set
    let names = schema.design_names();
    let d = schema.design_width();
    let mut design = vec![0.0; d];
    let mut sums = vec![0.0; d];
    let mut squares = vec![0.0; d];
    for row in x.rows() {
        schema.design_row(row, &mut design);
        for k in 0..d {
            sums[k] += design[k];
            squares[k] += design[k] * design[k];
        }
    }
    for (j, f) in schema.features.iter().enumerate() {
        if f.kind == FeatureKind::Categorical || f.name == BOMB_PLANTED || schema.stds[j] == 0.0 {
            continue;
        }
        let k = names.iter().position(|n| n == &f.name).unwrap();
        let mean = sums[k] / n;
        let sd = (squares[k] / n - mean * mean).sqrt();
        assert!(mean.abs() < 1e-9, "{}: mean {mean}", f.name);
        assert!((sd - 1.0).abs() < 1e-9, "{}: sd {sd}", f.name);
    }
}

#[test]
fn rows_follow_state_order() {
    let states = synthetic_states(&SyntheticConfig { seed: 4, n_matches: 1, ..Default::default() });
    let schema = fit_schema(&states, &FitOptions::default()).unwrap();
    let x = vectorize(&states, &schema).unwrap();
    for (s, meta) in states.iter().zip(&x.meta) {
        assert_eq!((&*s.match_id, s.round_num, s.tick), (&*meta.match_id, meta.round_num, meta.tick));
    }
}

fn state_from(t: (i64, u32, u32, u8, u8, u32, u32, u8, bool)) -> GameState {
    let (ticks, ce, te, ca, ta, ch, th, site, inferno) = t;
    let bomb_site = match site {
        1 => Some(BombSite::A),
        2 => Some(BombSite::B),
        _ => None,
    };
    GameState {
        match_id: "m".into(),
        match_date: chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        map_name: if inferno { "de_inferno" } else { "de_nuke" }.into(),
        round_num: 1,
        tick_rate: 128,
        tick: ticks,
        ticks_since_start: ticks,
        ct_equip_value: ce,
        t_equip_value: te,
        ct_players_alive: ca,
        t_players_alive: ta,
        ct_hp_total: ch,
        t_hp_total: th,
        bomb_planted: bomb_site.is_some(),
        bomb_site,
        ct_dist_a: None,
        ct_dist_b: None,
        t_dist_a: None,
        t_dist_b: None,
        outcome_label: None,
    }
}

fn attrs() -> impl Strategy<Value = (i64, u32, u32, u8, u8, u32, u32, u8, bool)> {
    (0i64..20_000, 0u32..40_000, 0u32..40_000, 0u8..=5, 0u8..=5, 0u32..=500, 0u32..=500, 0u8..3, any::<bool>())
}

proptest! {
    #[test]
    fn distinct_states_give_distinct_rows(a in attrs(), b in attrs()) {
        prop_assume!(a != b);
        let states = [state_from(a), state_from(b), state_from((0, 0, 0, 0, 0, 0, 0, 0, true)), state_from((0, 0, 0, 0, 0, 0, 0, 0, false))];
        let schema = fit_schema(&states, &FitOptions::default()).unwrap();
        let x = vectorize(&states, &schema).unwrap();
        prop_assert_ne!(x.row(0), x.row(1));
        prop_assert!(x.data.iter().all(|v| v.is_finite()));
    }
}
