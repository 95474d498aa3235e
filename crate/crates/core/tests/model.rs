mod common;

use common::load_match;
use csgo_wpa::ingest::{generate_synthetic, SyntheticConfig};
use csgo_wpa::model::{
    replay_match, replay_round, validate_match, BombSite, Damage, EventKind, GameEvent, MatchRecord, Side, Vec3, GAME,
};
use proptest::prelude::*;

// tick, ct_alive, t_alive, ct_hp, t_hp, bomb site
type Row = (i64, u8, u8, u32, u32, Option<BombSite>);

#[test]
fn fixture_round_matches_hand_replay() {
    let m = load_match("match_small.json");
    let states = replay_round(&m, &m.rounds[0], None).unwrap();
    let expected: [Row; 13] = [
        (1000, 5, 5, 500, 500, None),
        (1640, 5, 5, 500, 500, None),
        (2280, 5, 5, 500, 440, None),
        (2300, 4, 5, 400, 440, None),
        (2500, 4, 4, 400, 340, None),
        (3000, 4, 3, 400, 300, None),
        (4000, 4, 3, 400, 300, None),
        (4500, 4, 3, 400, 300, Some(BombSite::A)),
        (5000, 4, 3, 370, 300, Some(BombSite::A)),
        (5200, 4, 3, 370, 300, Some(BombSite::A)),
        (6000, 4, 3, 370, 250, Some(BombSite::A)),
        (6100, 4, 3, 350, 250, Some(BombSite::A)),
        (8000, 4, 3, 350, 250, Some(BombSite::A)),
    ];
    assert_eq!(m.rounds[0].events.len(), 12);
    let got: Vec<Row> = states
        .iter()
        .map(|s| (s.tick, s.ct_players_alive, s.t_players_alive, s.ct_hp_total, s.t_hp_total, s.bomb_site))
        .collect();
    assert_eq!(got, expected);
    for s in &states {
        assert_eq!(s.ticks_since_start, s.tick - 1000);
        assert_eq!(s.bomb_planted, s.bomb_site.is_some());
        assert_eq!((s.ct_equip_value, s.t_equip_value), (4000, 4000));
        assert_eq!(s.outcome_label, Some(false));
        assert!(s.ct_dist_a.is_none() && s.t_dist_b.is_none());
    }
}

#[test]
fn empty_round_yields_single_initial_state() {
    let mut m = load_match("match_small.json");
    m.rounds[0].events.clear();
    let states = replay_round(&m, &m.rounds[0], None).unwrap();
    assert_eq!(states.len(), 1);
    let s = &states[0];
    assert_eq!((s.ct_players_alive, s.t_players_alive), (5, 5));
    assert_eq!((s.ct_hp_total, s.t_hp_total), (500, 500));
    assert!(!s.bomb_planted);
}

fn damage(attacker: &str, a_side: Side, victim: &str, hp: u32, kill: bool) -> EventKind {
    EventKind::Damage(Damage {
        attacker_id: attacker.into(),
        attacker_side: a_side,
        victim_id: victim.into(),
        victim_side: a_side.opponent(),
        hp_damage: hp,
        is_kill: kill,
        assister_id: None,
        attacker_position: Vec3::default(),
        victim_position: Vec3::default(),
    })
}

#[test]
fn single_damage_event() {
    let mut m = load_match("match_small.json");
    m.rounds[0].events = vec![GameEvent {
        tick: 1200,
        kind: damage("b1", Side::T, "a1", 30, false),
    }];
    let states = replay_round(&m, &m.rounds[0], None).unwrap();
    assert_eq!(states.len(), 2);
    assert_eq!(states[1].ct_hp_total, 470);
    assert_eq!(states[1].ct_players_alive, 5);
}

#[test]
fn replay_errors_name_the_tick() {
    let mut m = load_match("match_small.json");
    m.rounds[0].events.push(GameEvent {
        tick: 8500,
        kind: damage("a2", Side::Ct, "b1", 10, false),
    });
    let err = replay_round(&m, &m.rounds[0], None).unwrap_err();
    assert_eq!(err.tick, 8500);
    assert!(err.to_string().contains("tick 8500"), "{err}");

    let mut m = load_match("match_small.json");
    m.rounds[0].events.push(GameEvent {
        tick: 9999,
        kind: damage("a2", Side::Ct, "b3", 10, false),
    });
    let err = replay_round(&m, &m.rounds[0], None).unwrap_err();
    assert_eq!(err.tick, 9999);
}

fn rules(m: &MatchRecord) -> Vec<&'static str> {
    validate_match(m).into_iter().map(|v| v.rule).collect()
}

#[test]
fn fixtures_are_valid() {
    for name in ["match_small.json", "match_full.json", "comeback_1v2.json"] {
        assert!(validate_match(&load_match(name)).is_empty(), "{name}");
    }
    for m in generate_synthetic(&SyntheticConfig { n_matches: 3, ..Default::default() }).matches {
        assert!(validate_match(&m).is_empty());
    }
}

#[test]
fn side_swap_rule() {
    let mut m = load_match("match_full.json");
    let r = &mut m.rounds[15];
    std::mem::swap(&mut r.ct_team, &mut r.t_team);
    let v = validate_match(&m);
    assert!(v.iter().any(|v| v.rule == "side-swap" && v.round_num == Some(16)), "{v:?}");
}

#[test]
fn hp_overflow_rule() {
    let mut m = load_match("match_small.json");
    // 80 then 40 against b1: 120 total
    let EventKind::Damage(d) = &mut m.rounds[0].events[1].kind else { panic!() };
    d.hp_damage = 80;
    let v = validate_match(&m);
    let hit = v.iter().find(|v| v.rule == "hp-overflow").expect("hp-overflow reported");
    assert_eq!((hit.round_num, hit.tick), (Some(1), Some(3000)));
}

#[test]
fn other_rules() {
    let base = load_match("match_small.json");

    let mut m = base.clone();
    m.rounds[0].events.swap(1, 2);
    assert!(rules(&m).contains(&"event-order"));

    let mut m = base.clone();
    m.rounds[1].round_num = 3;
    assert!(rules(&m).contains(&"round-numbering"));

    let mut m = base.clone();
    let EventKind::Damage(d) = &mut m.rounds[0].events[1].kind else { panic!() };
    d.victim_id = "a2".into();
    d.victim_side = Side::Ct;
    assert!(rules(&m).contains(&"team-damage"));

    let mut m = base.clone();
    m.rounds[0].players.ct.pop();
    assert!(rules(&m).contains(&"roster"));

    let mut m = base.clone();
    m.rounds[0].win_reason = csgo_wpa::model::WinReason::BombDefused;
    assert!(rules(&m).contains(&"win-reason"));

    let mut m = base.clone();
    m.map_name = "de_nowhere".into();
    assert!(rules(&m).contains(&"map-pool"));

    let mut m = base.clone();
    // a1 dies at 2300; attacking afterwards is a dead actor
    m.rounds[0].events[7].kind = damage("a1", Side::Ct, "b4", 30, false);
    assert!(rules(&m).contains(&"dead-actor"));

    let mut m = base;
    let EventKind::Damage(d) = &mut m.rounds[0].events[3].kind else { panic!() };
    d.is_kill = false;
    assert!(rules(&m).contains(&"kill-flag"));
}

#[test]
fn bomb_window_constant() {
    assert_eq!(GAME.bomb_window_ticks(128), 35 * 128);
    assert_eq!(GAME.max_regulation_rounds(), 30);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn replay_invariants(seed in 0u64..10_000) {
        let data = generate_synthetic(&SyntheticConfig { seed, n_matches: 1, ..Default::default() });
        let m = &data.matches[0];
        let replayed = replay_match(m, None).unwrap();
        prop_assert_eq!(&replayed, &replay_match(m, None).unwrap());
        for (round, states) in m.rounds.iter().zip(&replayed) {
            prop_assert_eq!(states.len(), round.events.len() + 1);
            for side in [Side::Ct, Side::T] {
                let dealt: u32 = round
                    .events
                    .iter()
                    .filter_map(|e| e.damage())
                    .filter(|d| d.victim_side == side)
                    .map(|d| d.hp_damage)
                    .sum();
                let kills = round.events.iter().filter_map(|e| e.damage()).filter(|d| d.victim_side == side && d.is_kill).count();
                let last = states.last().unwrap();
                prop_assert_eq!(dealt, 500 - last.hp_total(side));
                prop_assert_eq!(kills, 5 - last.alive(side) as usize);
            }
            for w in states.windows(2) {
                prop_assert!(w[1].ticks_since_start >= w[0].ticks_since_start);
                prop_assert!(w[1].ct_players_alive <= w[0].ct_players_alive);
                prop_assert!(w[1].t_players_alive <= w[0].t_players_alive);
                prop_assert!(w[1].ct_hp_total <= w[0].ct_hp_total);
                prop_assert!(w[1].t_hp_total <= w[0].t_hp_total);
            }
            for s in states {
                prop_assert!(s.ticks_since_start >= 0);
                prop_assert_eq!(s.ct_hp_total == 0, s.ct_players_alive == 0);
                prop_assert_eq!(s.t_hp_total == 0, s.t_players_alive == 0);
                prop_assert_eq!(s.bomb_site.is_some(), s.bomb_planted);
            }
        }
    }
}
