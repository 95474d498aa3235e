use super::{ImpactPlay, PlayerValuation};

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Rating table, one row per player in the given order. `rank` is the
/// 1-based row position; `hltv_rank` is an external ranking and is left
/// blank.
pub fn ratings_csv(rows: &[PlayerValuation]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "player",
        "rounds",
        "wpa_per_round",
        "kdr",
        "kdr_zero_deaths",
        "adr",
        "kast_pct",
        "rating_1_0",
        "kills",
        "deaths",
        "assists",
        "bootstrap_mean",
        "bootstrap_stddev",
        "bootstrap_p5",
        "bootstrap_p95",
        "hltv_rank",
    ])
    .expect("in-memory write");
    for (i, r) in rows.iter().enumerate() {
        let c = &r.classic;
        let b = r.bootstrap.as_ref();
        w.write_record([
            (i + 1).to_string(),
            r.player_id.clone(),
            r.rounds_played.to_string(),
            r.wpa_per_round.to_string(),
            c.kdr.to_string(),
            c.kdr_zero_deaths.to_string(),
            c.adr.to_string(),
            c.kast_pct.to_string(),
            c.rating_1_0.to_string(),
            c.kills.to_string(),
            c.deaths.to_string(),
            c.assists.to_string(),
            opt(b.map(|b| b.mean)),
            opt(b.map(|b| b.stddev)),
            opt(b.map(|b| b.p5)),
            opt(b.map(|b| b.p95)),
            String::new(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn ratings_json(rows: &[PlayerValuation]) -> String {
    serde_json::to_string_pretty(rows).expect("ratings serialize")
}

/// Long-format bootstrap draws: `player, draw, wpa_per_round`.
pub fn bootstrap_samples_csv(rows: &[PlayerValuation]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["player", "draw", "wpa_per_round"]).expect("in-memory write");
    for r in rows {
        for (i, v) in r.bootstrap.iter().flat_map(|b| b.draws.iter().enumerate()) {
            w.write_record([r.player_id.clone(), i.to_string(), v.to_string()]).expect("in-memory write");
        }
    }
    finish(w)
}

pub fn impact_csv(plays: &[ImpactPlay]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "match_id",
        "round",
        "tick",
        "seconds",
        "actor",
        "actor_side",
        "victim",
        "hp_damage",
        "is_kill",
        "p_pre",
        "p_post",
        "actor_win_prob_pre",
        "actor_credit",
        "context",
    ])
    .expect("in-memory write");
    for p in plays {
        let a = &p.action;
        w.write_record([
            p.rank.to_string(),
            a.match_id.clone(),
            a.round_num.to_string(),
            a.tick.to_string(),
            a.seconds.to_string(),
            a.actor_id.clone(),
            a.actor_side.to_string(),
            a.victim_id.clone(),
            a.hp_damage.to_string(),
            a.is_kill.to_string(),
            a.p_pre.to_string(),
            a.p_post.to_string(),
            p.actor_win_prob_pre.to_string(),
            a.actor_credit.to_string(),
            p.context.clone(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}
