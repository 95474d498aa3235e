mod common;

use common::{fixture, load_match};
use csgo_wpa::ingest::{
    generate_synthetic, parse_match, read_states, to_json, to_json_pretty, write_states, SyntheticConfig,
};
use csgo_wpa::model::{replay_match, validate_match, Side, WinReason};
use csgo_wpa::winprob::calibration_table;
use proptest::prelude::*;

#[test]
fn fixture_round_trips_byte_for_byte() {
    let m = load_match("match_small.json");
    assert_eq!(m.rounds.len(), 2);
    let text = to_json(&m);
    let again = parse_match(text.as_bytes()).unwrap();
    assert_eq!(again, m);
    assert_eq!(to_json(&again), text);
    assert_eq!(parse_match(to_json_pretty(&m).as_bytes()).unwrap(), m);
}

#[test]
fn fixture_state_table_round_trips() {
    let m = load_match("match_full.json");
    let states: Vec<_> = replay_match(&m, None).unwrap().into_iter().flatten().collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("states.wpas");
    write_states(&states, &path).unwrap();
    assert_eq!(read_states(&path).unwrap(), states);
}

#[test]
fn tick_rate_defaults_when_absent() {
    let text = std::fs::read_to_string(fixture("comeback_1v2.json")).unwrap();
    let stripped = text.replace("\"tick_rate\": 128,", "");
    assert_ne!(stripped, text);
    assert_eq!(parse_match(stripped.as_bytes()).unwrap().tick_rate, 128);
}

#[test]
fn same_seed_same_matches() {
    let cfg = SyntheticConfig { seed: 7, n_matches: 1, ..Default::default() };
    let a = generate_synthetic(&cfg);
    let b = generate_synthetic(&cfg);
    assert_eq!(a.matches, b.matches);
    assert_eq!(a.truth, b.truth);
}

#[test]
fn balanced_generator_splits_rounds_evenly() {
    let data = generate_synthetic(&SyntheticConfig { seed: 21, n_matches: 420, ..Default::default() });
    let rounds: Vec<_> = data.matches.iter().flat_map(|m| &m.rounds).collect();
    assert!(rounds.len() >= 10_000, "{} rounds", rounds.len());
    let ct = rounds.iter().filter(|r| r.winner_side == Side::Ct).count() as f64 / rounds.len() as f64;
    assert!((0.49..=0.51).contains(&ct), "CT win rate {ct}");
}

#[test]
fn favored_ct_dominates() {
    let data = generate_synthetic(&SyntheticConfig {
        seed: 3,
        n_matches: 60,
        skill_gap: 1.0,
        favored: Some(Side::Ct),
        ..Default::default()
    });
    let rounds: Vec<_> = data.matches.iter().flat_map(|m| &m.rounds).collect();
    assert!(rounds.len() >= 1000);
    let ct = rounds.iter().filter(|r| r.winner_side == Side::Ct).count() as f64 / rounds.len() as f64;
    assert!(ct > 0.9, "CT win rate {ct}");
}

// States whose outcome is already decided (a side eliminated, or the
// defuse/elimination that ends the round) are outside what the truth model
// describes; every other state is calibrated.
#[test]
fn ground_truth_is_calibrated_on_live_states() {
    let data = generate_synthetic(&SyntheticConfig { seed: 5, n_matches: 200, ..Default::default() });
    let (mut p, mut y) = (Vec::new(), Vec::new());
    for m in &data.matches {
        for (round, states) in m.rounds.iter().zip(replay_match(m, None).unwrap()) {
            let last = states.len() - 1;
            for (i, s) in states.iter().enumerate() {
                let decided = (i == last && matches!(round.win_reason, WinReason::Elimination | WinReason::BombDefused))
                    || s.ct_players_alive == 0
                    || (s.t_players_alive == 0 && !s.bomb_planted);
                if !decided {
                    p.push(data.truth.predict(s));
                    y.push(s.outcome_label.unwrap());
                }
            }
        }
    }
    assert!(p.len() >= 100_000, "{} states", p.len());
    for b in calibration_table(&p, &y, 10).unwrap().iter().filter(|b| b.count >= 100) {
        let dev = (b.mean_predicted - b.mean_observed).abs();
        assert!(dev < 0.02, "bin {} (n {}): predicted {:.4} observed {:.4}", b.bin, b.count, b.mean_predicted, b.mean_observed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn synthetic_matches_round_trip(seed in 0u64..100_000) {
        let data = generate_synthetic(&SyntheticConfig { seed, n_matches: 1, ..Default::default() });
        let m = &data.matches[0];
        prop_assert!(validate_match(m).is_empty());
        let back = parse_match(to_json(m).as_bytes()).unwrap();
        prop_assert_eq!(&back, m);
    }
}
