//! Deterministic synthetic matches with a known win-probability model.
//!
//! Every round first draws its outcome `Y` from the ground-truth logistic
//! model evaluated at the round-start state. The event stream is then drawn
//! from a kernel that depends on `Y`: under `Y = 0` each candidate damage or
//! plant event `e` has base probability `q(e)`, under `Y = 1` it has
//! `q(e) * exp(Δf(e))` where `Δf(e)` is the change of the ground-truth logit
//! caused by the event. Base masses are balanced per step so that both
//! kernels are normalized with the same footstep mass, which makes the
//! likelihood ratio of every observed event exactly `exp(Δf(e))`. By Bayes'
//! rule the posterior log-odds after any event prefix is then the
//! ground-truth logit of the replayed state, i.e. the ground-truth model is
//! calibrated on every state except the terminal bookkeeping events.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    BombDefuse, BombPlant, BombSite, Damage, EventKind, Footstep, GameEvent, GameState, MatchRecord, Rosters,
    RoundRecord, Side, Vec3, WinReason, GAME,
};

/// Ground-truth logistic model over the game-state features.
///
/// `logit = intercept + map_offset[map]
///        + equip_per_1000 * (ct_equip - t_equip) / 1000
///        + alive * (ct_alive - t_alive)
///        + hp_per_100 * (ct_hp - t_hp) / 100
///        + planted * [bomb planted] + site_b * [planted at B]
///        + planted_alive_interaction * [bomb planted] * (ct_alive - t_alive)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub intercept: f64,
    pub map_offsets: BTreeMap<String, f64>,
    pub equip_per_1000: f64,
    pub alive: f64,
    pub hp_per_100: f64,
    pub planted: f64,
    pub site_b: f64,
    pub planted_alive_interaction: f64,
}

impl GroundTruth {
    fn logit_parts(
        &self,
        map: &str,
        equip_diff: f64,
        ct_alive: u8,
        t_alive: u8,
        ct_hp: u32,
        t_hp: u32,
        site: Option<BombSite>,
    ) -> f64 {
        let alive_diff = ct_alive as f64 - t_alive as f64;
        let mut f = self.intercept
            + self.map_offsets.get(map).copied().unwrap_or(0.0)
            + self.equip_per_1000 * equip_diff / 1000.0
            + self.alive * alive_diff
            + self.hp_per_100 * (ct_hp as f64 - t_hp as f64) / 100.0;
        if let Some(site) = site {
            f += self.planted + self.planted_alive_interaction * alive_diff;
            if site == BombSite::B {
                f += self.site_b;
            }
        }
        f
    }

    pub fn logit(&self, s: &GameState) -> f64 {
        self.logit_parts(
            &s.map_name,
            s.ct_equip_value as f64 - s.t_equip_value as f64,
            s.ct_players_alive,
            s.t_players_alive,
            s.ct_hp_total,
            s.t_hp_total,
            s.bomb_site,
        )
    }

    /// True CT win probability of a state.
    pub fn predict(&self, s: &GameState) -> f64 {
        sigmoid(self.logit(s))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_matches: usize,
    /// Maps with sampling weights and their ground-truth logit offsets.
    pub maps: Vec<MapSpec>,
    /// 0 = no side advantage, 1 = strong advantage for `favored`.
    pub skill_gap: f64,
    pub favored: Option<Side>,
    /// Probability that a step produces a damage or plant event instead of a
    /// footstep.
    pub action_rate: f64,
    /// Per-step probability mass of a bomb plant while one is possible.
    pub plant_rate: f64,
    pub mean_step_seconds: f64,
    pub round_seconds: f64,
    pub tick_rate: u32,
    pub n_teams: usize,
    pub start_date: NaiveDate,
    pub equip_per_1000: f64,
    pub alive: f64,
    pub hp_per_100: f64,
    pub planted: f64,
    pub site_b: f64,
    pub planted_alive_interaction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub name: String,
    pub weight: f64,
    pub offset: f64,
}

/// Logit shift applied to the favored side at `skill_gap = 1`.
pub const SKILL_GAP_LOGIT: f64 = 3.0;

impl Default for SyntheticConfig {
    fn default() -> Self {
        let maps = [
            ("de_dust2", 0.15),
            ("de_inferno", -0.15),
            ("de_mirage", 0.3),
            ("de_nuke", -0.3),
            ("de_overpass", 0.05),
            ("de_train", -0.05),
        ]
        .into_iter()
        .map(|(name, offset)| MapSpec {
            name: name.into(),
            weight: 1.0,
            offset,
        })
        .collect();
        Self {
            seed: 7,
            n_matches: 10,
            maps,
            skill_gap: 0.0,
            favored: None,
            action_rate: 0.6,
            plant_rate: 0.04,
            mean_step_seconds: 2.0,
            round_seconds: 115.0,
            tick_rate: GAME.default_tick_rate,
            n_teams: 16,
            start_date: NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date"),
            equip_per_1000: 0.06,
            alive: 0.45,
            hp_per_100: 0.6,
            planted: -0.5,
            site_b: 0.2,
            planted_alive_interaction: 0.0,
        }
    }
}

impl SyntheticConfig {
    pub fn ground_truth(&self) -> GroundTruth {
        let sign = match self.favored {
            Some(Side::Ct) => 1.0,
            Some(Side::T) => -1.0,
            None => 0.0,
        };
        GroundTruth {
            intercept: sign * SKILL_GAP_LOGIT * self.skill_gap,
            map_offsets: self.maps.iter().map(|m| (m.name.clone(), m.offset)).collect(),
            equip_per_1000: self.equip_per_1000,
            alive: self.alive,
            hp_per_100: self.hp_per_100,
            planted: self.planted,
            site_b: self.site_b,
            planted_alive_interaction: self.planted_alive_interaction,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub matches: Vec<MatchRecord>,
    pub truth: GroundTruth,
}

pub fn generate_synthetic(config: &SyntheticConfig) -> SyntheticData {
    let truth = config.ground_truth();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let map_dist = WeightedIndex::new(config.maps.iter().map(|m| m.weight)).expect("map weights must be positive");
    let n_teams = config.n_teams.max(2);
    let mut matches = Vec::with_capacity(config.n_matches);
    let mut date = config.start_date;
    for m in 0..config.n_matches {
        let map = &config.maps[map_dist.sample(&mut rng)].name;
        let a = rng.gen_range(0..n_teams);
        let mut b = rng.gen_range(0..n_teams - 1);
        if b >= a {
            b += 1;
        }
        let record = generate_match(config, &truth, &mut rng, format!("syn-{:05}", m), map, date, a, b);
        matches.push(record);
        date += Duration::days(rng.gen_range(0..=2));
    }
    SyntheticData { matches, truth }
}

fn team_name(t: usize) -> String {
    format!("team{t:02}")
}

fn roster(t: usize) -> Vec<String> {
    (1..=GAME.players_per_side).map(|p| format!("t{t:02}p{p}")).collect()
}

#[allow(clippy::too_many_arguments)]
fn generate_match(
    config: &SyntheticConfig,
    truth: &GroundTruth,
    rng: &mut ChaCha8Rng,
    match_id: String,
    map: &str,
    date: NaiveDate,
    team_a: usize,
    team_b: usize,
) -> MatchRecord {
    let tick_rate = config.tick_rate;
    let mut rounds = Vec::new();
    let mut wins = [0u32; 2];
    let mut tick: i64 = 0;
    for round_num in 1..=GAME.max_regulation_rounds() {
        if wins.iter().any(|&w| w >= GAME.rounds_to_win) {
            break;
        }
        // team_a plays CT in the first half
        let a_is_ct = round_num <= GAME.half_length;
        let (ct, t) = if a_is_ct { (team_a, team_b) } else { (team_b, team_a) };
        let pistol = round_num == 1 || round_num == GAME.half_length + 1;
        let equip = |rng: &mut ChaCha8Rng| -> u32 {
            if pistol {
                rng.gen_range(3500..=4500)
            } else if rng.gen_bool(0.25) {
                rng.gen_range(2000..=9000)
            } else {
                rng.gen_range(15000..=30000)
            }
        };
        let ct_equip = equip(rng);
        let t_equip = equip(rng);
        let start_tick = tick + 15 * tick_rate as i64;
        let setup = RoundSetup {
            round_num,
            start_tick,
            map,
            ct_team: team_name(ct),
            t_team: team_name(t),
            ct_equip,
            t_equip,
            players: Rosters {
                ct: roster(ct),
                t: roster(t),
            },
        };
        let round = generate_round(config, truth, rng, &setup);
        tick = round.end_tick;
        let ct_won = round.winner_side == Side::Ct;
        let a_won = ct_won == a_is_ct;
        wins[if a_won { 0 } else { 1 }] += 1;
        rounds.push(round);
    }
    MatchRecord {
        match_id,
        map_name: map.to_string(),
        tick_rate,
        date,
        rounds,
    }
}

struct RoundSetup<'a> {
    round_num: u32,
    start_tick: i64,
    map: &'a str,
    ct_team: String,
    t_team: String,
    ct_equip: u32,
    t_equip: u32,
    players: Rosters,
}

#[derive(Clone)]
struct SimPlayer {
    side: Side,
    hp: u32,
    pos: Vec3,
}

#[derive(Clone, Copy)]
enum Action {
    Hit { victim: usize, amount: u32 },
    Plant(BombSite),
}

const HIT_OPTIONS: [(u32, f64); 3] = [(100, 0.4), (45, 0.3), (20, 0.3)];
const MAX_ATTEMPTS: usize = 1000;

struct Sim<'a> {
    truth: &'a GroundTruth,
    setup: &'a RoundSetup<'a>,
    players: Vec<SimPlayer>,
    site: Option<BombSite>,
}

impl<'a> Sim<'a> {
    fn alive(&self, side: Side) -> u8 {
        self.players.iter().filter(|p| p.side == side && p.hp > 0).count() as u8
    }

    fn hp(&self, side: Side) -> u32 {
        self.players.iter().filter(|p| p.side == side).map(|p| p.hp).sum()
    }

    fn logit_with(&self, hit: Option<(usize, u32)>, site: Option<BombSite>) -> f64 {
        let (mut ct_alive, mut t_alive) = (self.alive(Side::Ct), self.alive(Side::T));
        let (mut ct_hp, mut t_hp) = (self.hp(Side::Ct), self.hp(Side::T));
        if let Some((v, amount)) = hit {
            let p = &self.players[v];
            let lethal = amount >= p.hp;
            match p.side {
                Side::Ct => {
                    ct_hp -= amount.min(p.hp);
                    ct_alive -= lethal as u8;
                }
                Side::T => {
                    t_hp -= amount.min(p.hp);
                    t_alive -= lethal as u8;
                }
            }
        }
        self.truth.logit_parts(
            self.setup.map,
            self.setup.ct_equip as f64 - self.setup.t_equip as f64,
            ct_alive,
            t_alive,
            ct_hp,
            t_hp,
            site,
        )
    }

    /// Per-step event distributions under both outcomes. Returns the actions
    /// with their probabilities under `Y = 0` and `Y = 1`; the remaining mass
    /// (identical under both) is a footstep.
    ///
    /// Non-terminal events have likelihood ratio `exp(Δf)`. A round-ending
    /// kill is only possible under the outcome it produces: killing the last
    /// CT has probability 0 under `Y = 1`, killing the last T before a plant
    /// has probability 0 under `Y = 0`.
    fn kernel(&self, action_rate: f64, plant_mass: f64) -> (Vec<Action>, Vec<f64>, Vec<f64>) {
        let base = self.logit_with(None, self.site);
        // per group: (action, weight under Y=0, weight under Y=1)
        let mut groups: [Vec<(Action, f64, f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let alive = [self.alive(Side::Ct), self.alive(Side::T)];
        for (v, p) in self.players.iter().enumerate() {
            if p.hp == 0 || alive.contains(&0) {
                continue;
            }
            let (g, last) = match p.side {
                Side::Ct => (0, alive[0] == 1),
                Side::T => (1, alive[1] == 1),
            };
            for &(amount, w) in &HIT_OPTIONS {
                let amount = amount.min(p.hp);
                let lethal = amount == p.hp;
                let tilt = (self.logit_with(Some((v, amount)), self.site) - base).exp();
                let (a, b) = match (p.side, lethal && last) {
                    (Side::Ct, true) => (w, 0.0),
                    (Side::T, true) if self.site.is_none() => (0.0, w * tilt),
                    _ => (w, w * tilt),
                };
                groups[g].push((Action::Hit { victim: v, amount }, a, b));
            }
        }
        if groups[0].is_empty() {
            return (Vec::new(), Vec::new(), Vec::new());
        }
        if plant_mass > 0.0 && self.site.is_none() {
            for site in [BombSite::A, BombSite::B] {
                let tilt = (self.logit_with(None, Some(site)) - base).exp();
                groups[2].push((Action::Plant(site), 1.0, tilt));
            }
        }
        // group scale cancels out of the mass equations, so raw sums suffice
        let sums = |g: &[(Action, f64, f64)]| (g.iter().map(|e| e.1).sum::<f64>(), g.iter().map(|e| e.2).sum::<f64>());
        let (a_ct, b_ct) = sums(&groups[0]);
        let (a_t, b_t) = sums(&groups[1]);
        let (a_p, b_p) = sums(&groups[2]);
        let mut m_plant = if groups[2].is_empty() { 0.0 } else { plant_mass };
        // Both kernels put total mass λ on actions:
        //   m_ct a_ct + m_t a_t = λ - m_p a_p
        //   m_ct b_ct + m_t b_t = λ - m_p b_p
        let det = a_ct * b_t - a_t * b_ct;
        debug_assert!(det > 0.0, "CT hits must lower and T hits raise the CT logit");
        let (m_ct, m_t) = loop {
            let (r0, r1) = (action_rate - m_plant * a_p, action_rate - m_plant * b_p);
            let m_ct = (r0 * b_t - r1 * a_t) / det;
            let m_t = (a_ct * r1 - b_ct * r0) / det;
            if (m_t >= 0.0 && m_ct >= 0.0) || m_plant == 0.0 {
                break (m_ct.max(0.0), m_t.max(0.0));
            }
            m_plant *= 0.5;
            if m_plant < 1e-6 {
                m_plant = 0.0;
            }
        };
        let mut actions = Vec::new();
        let (mut q0, mut q1) = (Vec::new(), Vec::new());
        for (g, mass) in groups.iter().zip([m_ct, m_t, m_plant]) {
            for &(action, a, b) in g {
                actions.push(action);
                q0.push(mass * a);
                q1.push(mass * b);
            }
        }
        (actions, q0, q1)
    }
}

fn random_position(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.gen_range(-2000.0..2000.0), rng.gen_range(-2000.0..2000.0), 0.0)
}

fn generate_round(config: &SyntheticConfig, truth: &GroundTruth, rng: &mut ChaCha8Rng, setup: &RoundSetup) -> RoundRecord {
    let equip_diff = setup.ct_equip as f64 - setup.t_equip as f64;
    let f0 = truth.logit_parts(setup.map, equip_diff, 5, 5, GAME.side_hp_total(), GAME.side_hp_total(), None);
    let ct_wins = rng.gen_bool(sigmoid(f0));
    for attempt in 0..MAX_ATTEMPTS {
        if let Some(round) = simulate_round(config, truth, rng, setup, ct_wins, attempt + 1 == MAX_ATTEMPTS) {
            return round;
        }
    }
    unreachable!("the final attempt always resolves the round")
}

/// Simulates one trajectory conditioned on the outcome. Returns `None` when
/// the round clock runs out before a plant under a T outcome (the caller
/// redraws; rare at default rates); with `force` the round goes to CT
/// instead.
fn simulate_round(
    config: &SyntheticConfig,
    truth: &GroundTruth,
    rng: &mut ChaCha8Rng,
    setup: &RoundSetup,
    ct_wins: bool,
    force: bool,
) -> Option<RoundRecord> {
    let tick_rate = config.tick_rate as f64;
    let ids: Vec<&String> = setup.players.all().collect();
    let mut sim = Sim {
        truth,
        setup,
        players: setup
            .players
            .ct
            .iter()
            .map(|_| Side::Ct)
            .chain(setup.players.t.iter().map(|_| Side::T))
            .map(|side| SimPlayer {
                side,
                hp: GAME.start_hp,
                pos: random_position(rng),
            })
            .collect(),
        site: None,
    };
    let mut events = Vec::new();
    let round_ticks = (config.round_seconds * tick_rate) as i64;
    let bomb_ticks = GAME.bomb_window_ticks(config.tick_rate);
    let mut now = setup.start_tick;
    let mut plant_tick: Option<i64> = None;
    let mut damage_from: Vec<[u32; 10]> = vec![[0; 10]; ids.len()];

    let (winner, reason, end_tick) = loop {
        let step = (rng.gen_range(0.2..1.8) * config.mean_step_seconds * tick_rate).max(1.0) as i64;
        let next = now + step;
        if let Some(pt) = plant_tick {
            if next >= pt + bomb_ticks {
                if ct_wins {
                    let defuser = sim
                        .players
                        .iter()
                        .position(|p| p.side == Side::Ct && p.hp > 0)
                        .expect("CT alive while bomb is ticking");
                    let at = (pt + bomb_ticks - 1).max(now);
                    events.push(GameEvent {
                        tick: at,
                        kind: EventKind::BombDefuse(BombDefuse {
                            player_id: ids[defuser].clone(),
                        }),
                    });
                    break (Side::Ct, WinReason::BombDefused, at + tick_rate as i64);
                }
                break (Side::T, WinReason::BombExploded, pt + bomb_ticks);
            }
        } else if next - setup.start_tick >= round_ticks {
            if ct_wins || force {
                break (Side::Ct, WinReason::TimeExpired, setup.start_tick + round_ticks);
            }
            log::debug!("round {}: clock expired under a T outcome, redrawing", setup.round_num);
            return None;
        }
        now = next;

        let plant_ok = sim.alive(Side::T) > 0 && now - setup.start_tick > (15.0 * tick_rate) as i64;
        let (actions, q0, q1) = sim.kernel(config.action_rate, if plant_ok { config.plant_rate } else { 0.0 });
        let q = if ct_wins { &q1 } else { &q0 };
        let total: f64 = q.iter().sum();
        let u: f64 = rng.gen();
        let chosen = if u < total {
            let mut acc = 0.0;
            let mut pick = actions.len() - 1;
            for (i, p) in q.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            Some(actions[pick])
        } else {
            None
        };

        match chosen {
            None => {
                let alive: Vec<usize> = (0..sim.players.len()).filter(|&i| sim.players[i].hp > 0).collect();
                let mover = alive[rng.gen_range(0..alive.len())];
                let p = &mut sim.players[mover];
                p.pos.x += rng.gen_range(-150.0..150.0);
                p.pos.y += rng.gen_range(-150.0..150.0);
                events.push(GameEvent {
                    tick: now,
                    kind: EventKind::Footstep(Footstep {
                        player_id: ids[mover].clone(),
                        side: p.side,
                        position: p.pos,
                        area_id: None,
                    }),
                });
            }
            Some(Action::Plant(site)) => {
                let planters: Vec<usize> = (0..sim.players.len())
                    .filter(|&i| sim.players[i].side == Side::T && sim.players[i].hp > 0)
                    .collect();
                let planter = planters[rng.gen_range(0..planters.len())];
                sim.site = Some(site);
                plant_tick = Some(now);
                events.push(GameEvent {
                    tick: now,
                    kind: EventKind::BombPlant(BombPlant {
                        player_id: ids[planter].clone(),
                        site,
                    }),
                });
            }
            Some(Action::Hit { victim, amount }) => {
                let victim_side = sim.players[victim].side;
                let attackers: Vec<usize> = (0..sim.players.len())
                    .filter(|&i| sim.players[i].side != victim_side && sim.players[i].hp > 0)
                    .collect();
                let attacker = attackers[rng.gen_range(0..attackers.len())];
                let before = sim.players[victim].hp;
                let is_kill = amount >= before;
                sim.players[victim].hp = before - amount;
                damage_from[victim][attacker] += amount;
                let assister_id = if is_kill {
                    (0..sim.players.len())
                        .filter(|&i| i != attacker && sim.players[i].side != victim_side)
                        .filter(|&i| damage_from[victim][i] >= 40)
                        .max_by_key(|&i| (damage_from[victim][i], std::cmp::Reverse(i)))
                        .map(|i| ids[i].clone())
                } else {
                    None
                };
                events.push(GameEvent {
                    tick: now,
                    kind: EventKind::Damage(Damage {
                        attacker_id: ids[attacker].clone(),
                        attacker_side: victim_side.opponent(),
                        victim_id: ids[victim].clone(),
                        victim_side,
                        hp_damage: amount,
                        is_kill,
                        assister_id,
                        attacker_position: sim.players[attacker].pos,
                        victim_position: sim.players[victim].pos,
                    }),
                });
                // after a plant the CT side still has to defuse
                if sim.alive(victim_side) == 0 && (victim_side == Side::Ct || plant_tick.is_none()) {
                    let winner = victim_side.opponent();
                    debug_assert!(force || (winner == Side::Ct) == ct_wins, "kernel allows only consistent eliminations");
                    break (winner, WinReason::Elimination, now + tick_rate as i64);
                }
            }
        }
    };

    Some(RoundRecord {
        round_num: setup.round_num,
        start_tick: setup.start_tick,
        end_tick,
        ct_team: setup.ct_team.clone(),
        t_team: setup.t_team.clone(),
        ct_equip_value: setup.ct_equip,
        t_equip_value: setup.t_equip,
        winner_side: winner,
        win_reason: reason,
        players: setup.players.clone(),
        events,
    })
}
