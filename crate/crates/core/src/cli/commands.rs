use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{parse_error, CliError, Command, Common, FileConfig, Format, MeshArgs, ModelChoice, SplitArgs};
use crate::features::{fit_schema, vectorize, FitOptions};
use crate::ingest::{generate_synthetic, parse_match, read_states, to_json_pretty, write_states};
use crate::model::{replay_match, GameState, MatchRecord};
use crate::navmesh::{build_graph, NavGraph, NavMesh};
use crate::valuation::{
    bootstrap_samples_csv, impact_csv, impact_plays, monthly_metrics, rate_players, ratings_csv, ratings_json,
    stability_analysis, value_matches, ImpactQuery, RateOptions, ScenarioFilter, ValuationError,
};
use crate::winprob::{
    by_time_csv, calibration_csv, calibration_curve, evaluate, evaluate_by_time, load_model, save_model,
    train_baseline, train_gbt, train_logistic, WinProbModel,
};

pub fn run(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ingest { inputs, mesh, common } => ingest(&inputs, &mesh, &common, stdout),
        Command::Train {
            states,
            model,
            split,
            drop_distances,
            trees,
            max_depth,
            min_child_weight,
            learning_rate,
            epochs,
            common,
        } => {
            let mut cfg = FileConfig::load(common.config.as_deref())?;
            if let Some(v) = trees {
                cfg.gbt.n_trees = v;
            }
            if let Some(v) = max_depth {
                cfg.gbt.max_depth = v;
            }
            if let Some(v) = min_child_weight {
                cfg.gbt.min_child_weight = v;
            }
            if let Some(v) = learning_rate {
                cfg.gbt.learning_rate = v;
                cfg.logistic.learning_rate = v;
            }
            if let Some(v) = epochs {
                cfg.logistic.epochs = v;
            }
            train(&states, model, &split, drop_distances, &cfg, &common, stdout)
        }
        Command::Eval {
            model,
            states,
            split,
            all,
            by_time,
            bin_seconds,
            common,
        } => eval(&model, &states, &split, all, by_time.then_some(bin_seconds), &common, stdout),
        Command::Calibrate {
            model,
            states,
            split,
            all,
            bins,
            common,
        } => {
            let model = open_model(&model)?;
            let matrix = vectorize(&holdout_states(&states, &split, all)?, &model.schema)?;
            let table = calibration_curve(&model, &matrix, bins)?;
            emit(common.out.as_deref(), &calibration_csv(&table), stdout)
        }
        Command::Rate {
            model,
            inputs,
            mesh,
            pistol_only,
            filter,
            bootstrap,
            exclude_received,
            stability,
            format,
            common,
        } => {
            let mut f = match filter {
                Some(s) => s.parse::<ScenarioFilter>()?,
                None => ScenarioFilter::default(),
            };
            if pistol_only {
                f = f.and(ScenarioFilter::pistol());
            }
            let opts = RateArgs {
                filter: f,
                bootstrap,
                include_received: !exclude_received,
                stability,
                format,
            };
            rate(&model, &inputs, &mesh, &opts, &common, stdout)
        }
        Command::Impact {
            model,
            inputs,
            mesh,
            top_k,
            threshold,
            win_prob,
            format,
            common,
        } => {
            let win_prob = win_prob.map(|s| parse_range(&s)).transpose()?;
            let query = ImpactQuery {
                threshold,
                top_k,
                win_prob,
            };
            let model = open_model(&model)?;
            let records = load_matches(&inputs)?;
            let graph = load_graph(&mesh)?;
            let actions = value_matches(&records, &model, graph.as_ref())?;
            let plays = impact_plays(&actions, &query);
            let text = match format {
                Format::Csv => impact_csv(&plays),
                Format::Json => serde_json::to_string_pretty(&plays).expect("impact plays serialize"),
            };
            emit(common.out.as_deref(), &text, stdout)
        }
        Command::Dist {
            mesh,
            from,
            to,
            weighting,
            common,
        } => {
            let graph = build_graph(&NavMesh::load(&mesh)?, weighting.into())?;
            let (a, b) = (graph.resolve(&from)?, graph.resolve(&to)?);
            let mut text = String::new();
            for (x, y, xs, ys) in [(a, b, &from, &to), (b, a, &to, &from)] {
                let p = graph.graph_distance(x, y)?;
                let path: Vec<String> = p.path.iter().map(u32::to_string).collect();
                let d = if p.is_reachable() { p.distance.to_string() } else { "unreachable".into() };
                text.push_str(&format!("d({xs}, {ys}) = {d}\tpath: {}\n", path.join(" -> ")));
            }
            emit(common.out.as_deref(), &text, stdout)
        }
        Command::Simulate {
            matches,
            interaction,
            common,
        } => simulate(matches, interaction, &common, stdout),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes to `out` when given, else to stdout.
fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => stdout.write_all(text.as_bytes()).map_err(CliError::from),
    }
}

fn open_model(path: &Path) -> Result<WinProbModel, CliError> {
    load_model(path).map_err(|e| match e {
        crate::winprob::WinProbError::Io(io) => io_err(path, io),
        other => match CliError::from(other) {
            CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
            c => c,
        },
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Files as given; directories are searched recursively for `*.json`.
pub(crate) fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = walkdir::WalkDir::new(input)
                .into_iter()
                .filter_map(|e| e.ok())
                .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "json"))
                .map(|e| e.into_path())
                .collect();
            found.sort();
            out.extend(found);
        } else if input.exists() {
            out.push(input.clone());
        } else {
            return Err(io_err(input, "no such file or directory"));
        }
    }
    Ok(out)
}

fn load_paths(inputs: &[PathBuf]) -> Result<Vec<(PathBuf, MatchRecord)>, CliError> {
    collect_inputs(inputs)?
        .into_par_iter()
        .map(|path| {
            let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
            let record = parse_match(&bytes).map_err(|e| parse_error(&path, e))?;
            Ok((path, record))
        })
        .collect()
}

fn load_matches(inputs: &[PathBuf]) -> Result<Vec<MatchRecord>, CliError> {
    Ok(load_paths(inputs)?.into_iter().map(|(_, m)| m).collect())
}

fn load_graph(mesh: &MeshArgs) -> Result<Option<NavGraph>, CliError> {
    mesh.mesh
        .as_ref()
        .map(|p| Ok(build_graph(&NavMesh::load(p)?, mesh.weighting.into())?))
        .transpose()
}

fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("expected a range like 0..0.05, got {s:?}"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Chronological match split: the latest `frac` of matches by
/// `(date, match_id)` form the held-out set. Returns (train, test) row
/// indices and a description for the model metadata.
pub fn holdout_split(states: &[GameState], frac: f64) -> Result<(Vec<usize>, Vec<usize>, String), CliError> {
    if !(0.0..1.0).contains(&frac) {
        return Err(CliError::Usage(format!("--holdout-frac must be in [0, 1), got {frac}")));
    }
    let matches: BTreeSet<(chrono::NaiveDate, &str)> = states.iter().map(|s| (s.match_date, &*s.match_id)).collect();
    let n_test = (frac * matches.len() as f64).round() as usize;
    let test: BTreeSet<&str> = matches.iter().rev().take(n_test).map(|(_, id)| *id).collect();
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for (i, s) in states.iter().enumerate() {
        if test.contains(&*s.match_id) {
            te.push(i);
        } else {
            tr.push(i);
        }
    }
    let desc = format!(
        "chronological by (date, match_id): {} train / {} held-out matches (holdout_frac {frac})",
        matches.len() - n_test,
        n_test
    );
    Ok((tr, te, desc))
}

fn read_state_file(path: &Path) -> Result<Vec<GameState>, CliError> {
    read_states(path).map_err(|e| match e {
        crate::ingest::StateFileError::Io(io) => io_err(path, io),
        other => CliError::Schema(format!("{}: {other}", path.display())),
    })
}

fn holdout_states(path: &Path, split: &SplitArgs, all: bool) -> Result<Vec<GameState>, CliError> {
    let states = read_state_file(path)?;
    if all {
        return Ok(states);
    }
    let (_, test, _) = holdout_split(&states, split.holdout_frac)?;
    if test.is_empty() {
        return Err(CliError::Usage("the held-out split is empty; raise --holdout-frac or pass --all".into()));
    }
    Ok(test.into_iter().map(|i| states[i].clone()).collect())
}

fn ingest(inputs: &[PathBuf], mesh: &MeshArgs, common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let records = load_paths(inputs)?;
    let graph = load_graph(mesh)?;
    let mut all = Vec::new();
    for (path, record) in &records {
        let rounds = replay_match(record, graph.as_ref())
            .map_err(|e| CliError::Validation(format!("{}: match {}: {e}", path.display(), record.match_id)))?;
        let events: usize = record.rounds.iter().map(|r| r.events.len()).sum();
        let n_states: usize = rounds.iter().map(Vec::len).sum();
        writeln!(stdout, "{}\t{}\t{events} events\t{n_states} states", record.match_id, path.display())?;
        all.extend(rounds.into_iter().flatten());
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("states.wpas"));
    write_states(&all, &out).map_err(|e| io_err(&out, e))?;
    writeln!(stdout, "total\t{} matches\t{} states\t-> {}", records.len(), all.len(), out.display())?;
    Ok(())
}

fn train(
    states_path: &Path,
    choice: ModelChoice,
    split: &SplitArgs,
    drop_distances: bool,
    cfg: &FileConfig,
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let states = read_state_file(states_path)?;
    let (train_idx, _, desc) = holdout_split(&states, split.holdout_frac)?;
    let train: Vec<GameState> = train_idx.into_iter().map(|i| states[i].clone()).collect();
    let schema = fit_schema(
        &train,
        &FitOptions {
            drop_distances,
            ..FitOptions::default()
        },
    )?;
    let matrix = vectorize(&train, &schema)?;
    let mut model = match choice {
        ModelChoice::MapAverage => train_baseline(&schema, &matrix)?,
        ModelChoice::Logreg => train_logistic(
            &schema,
            &matrix,
            &crate::winprob::LogisticConfig {
                seed: common.seed,
                ..cfg.logistic
            },
        )?,
        ModelChoice::Gbt => train_gbt(
            &schema,
            &matrix,
            &crate::winprob::GbtConfig {
                seed: common.seed,
                ..cfg.gbt
            },
        )?,
    };
    model.meta.seed = common.seed;
    model.meta.split = Some(desc.clone());
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("model.wpm"));
    save_model(&model, &out)?;
    writeln!(stdout, "trained {} on {} rows; {desc}; -> {}", model.kind(), matrix.n_rows(), out.display())?;
    Ok(())
}

fn eval(
    model_path: &Path,
    states_path: &Path,
    split: &SplitArgs,
    all: bool,
    bin_seconds: Option<f64>,
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let model: WinProbModel = open_model(model_path)?;
    let matrix = vectorize(&holdout_states(states_path, split, all)?, &model.schema)?;
    let mut report = evaluate(&model, &matrix)?;
    if let Some(w) = bin_seconds {
        report.by_time = evaluate_by_time(&model, &matrix, w)?;
    }
    let m = &report.metrics;
    writeln!(
        stdout,
        "{}\tn {}\tlog_loss {:.6}\tbrier {:.6}\tauc {}\taccuracy {:.6}",
        report.model_kind,
        m.n,
        m.log_loss,
        m.brier,
        m.auc.map(|a| format!("{a:.6}")).unwrap_or_else(|| "n/a".into()),
        m.accuracy
    )?;
    if let Some(dir) = &common.out {
        create_dir(dir)?;
        write_file(&dir.join("report.json"), &report.to_json())?;
        write_file(&dir.join("metrics.csv"), &report.metrics_csv())?;
        write_file(&dir.join("calibration.csv"), &report.calibration_csv())?;
        if bin_seconds.is_some() {
            write_file(&dir.join("by_time.csv"), &by_time_csv(&report.by_time))?;
        }
    } else if bin_seconds.is_some() {
        stdout.write_all(by_time_csv(&report.by_time).as_bytes())?;
    }
    Ok(())
}

struct RateArgs {
    filter: ScenarioFilter,
    bootstrap: Option<usize>,
    include_received: bool,
    stability: bool,
    format: Format,
}

fn rate(
    model_path: &Path,
    inputs: &[PathBuf],
    mesh: &MeshArgs,
    args: &RateArgs,
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = FileConfig::load(common.config.as_deref())?;
    let model = open_model(model_path)?;
    let records = load_matches(inputs)?;
    let graph = load_graph(mesh)?;
    let actions = value_matches(&records, &model, graph.as_ref())?;
    let options = RateOptions {
        classic: cfg.classic.clone(),
        include_received: args.include_received,
        bootstrap: args.bootstrap,
        seed: common.seed,
    };
    let rows = match rate_players(&records, &actions, &args.filter, &options) {
        Ok(rows) => rows,
        Err(ValuationError::NoData) => {
            writeln!(stdout, "no data")?;
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let table = match args.format {
        Format::Csv => ratings_csv(&rows),
        Format::Json => ratings_json(&rows),
    };
    let stability = if args.stability {
        let monthly = monthly_metrics(&records, &actions, &cfg.classic, args.include_received)?;
        let metrics = ["wpa", "kdr", "adr", "kast", "rating_1_0"];
        let report = stability_analysis(&monthly, &metrics, &cfg.stability)?;
        Some(serde_json::to_string_pretty(&report).expect("reports serialize"))
    } else {
        None
    };
    match &common.out {
        Some(dir) => {
            create_dir(dir)?;
            let name = match args.format {
                Format::Csv => "ratings.csv",
                Format::Json => "ratings.json",
            };
            write_file(&dir.join(name), &table)?;
            if args.bootstrap.is_some() {
                write_file(&dir.join("bootstrap_samples.csv"), &bootstrap_samples_csv(&rows))?;
            }
            if let Some(s) = &stability {
                write_file(&dir.join("stability.json"), s)?;
            }
            writeln!(stdout, "rated {} players -> {}", rows.len(), dir.display())?;
        }
        None => {
            stdout.write_all(table.as_bytes())?;
            if let Some(s) = &stability {
                writeln!(stdout, "{s}")?;
            }
        }
    }
    Ok(())
}

fn simulate(matches: usize, interaction: Option<f64>, common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = FileConfig::load(common.config.as_deref())?;
    let mut syn = cfg.synthetic;
    syn.seed = common.seed;
    syn.n_matches = matches;
    if let Some(x) = interaction {
        syn.planted_alive_interaction = x;
    }
    if syn.maps.is_empty() || syn.maps.iter().any(|m| !(m.weight > 0.0 && m.weight.is_finite())) {
        return Err(CliError::Usage("synthetic maps need positive, finite weights".into()));
    }
    let data = generate_synthetic(&syn);
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("synthetic"));
    let match_dir = dir.join("matches");
    create_dir(&match_dir)?;
    for m in &data.matches {
        write_file(&match_dir.join(format!("{}.json", m.match_id)), &to_json_pretty(m))?;
    }
    write_file(
        &dir.join("ground_truth.json"),
        &serde_json::to_string_pretty(&data.truth).expect("ground truth serializes"),
    )?;
    writeln!(stdout, "wrote {} matches to {}", data.matches.len(), match_dir.display())?;
    Ok(())
}
