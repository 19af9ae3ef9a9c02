//! Offline subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use affloop_core::affect::{build_template, extract_epoch, write_templates, EpochChannel, EpochGrid, ReactionTemplate};
use affloop_core::catalog::{effective_set, load_catalog, recommend, ArousalEffect, Catalog};
use affloop_core::engine::{
    calibrate, correlate_events, eda_features, estimate_session, heart_rate, ClosedLoop,
};
use affloop_core::signal::{parse_session, write_session, Channel, EventKind, Phase, SessionRecording, UniformSeries};
use affloop_core::sim::{build_protocol_schedule, default_gain, generate_session, PhaseSchedule, PlayerModel};
use affloop_core::Error;

use crate::config::{load_catalog_arg, read_baseline, write_baseline, RunConfig};
use crate::error::{out_path, read, write, CliError, CliResult};
use crate::plot;

pub fn read_session(path: &Path) -> CliResult<SessionRecording> {
    Ok(parse_session(&read(path)?)?)
}

/// The configured player, with default gains for catalog patterns it lacks.
fn player_for(cfg: &RunConfig, catalog: &Catalog) -> PlayerModel {
    let mut m = cfg.player.clone();
    for p in catalog.patterns.values() {
        m.pattern_gains.entry(p.id.clone()).or_insert_with(|| default_gain(p.affect.arousal_effect));
    }
    m
}

/// Per-phase event counts, one `phase <name> <start> <events>` line each.
pub fn phase_summary(schedule: &PhaseSchedule) -> String {
    let markers: Vec<(f64, Phase)> = schedule.events.iter().filter_map(|e| e.phase_marker().map(|p| (e.t, p))).collect();
    let mut out = String::new();
    for (i, (start, phase)) in markers.iter().enumerate() {
        let end = markers.get(i + 1).map_or(f64::INFINITY, |m| m.0);
        let n = schedule
            .events
            .iter()
            .filter(|e| e.kind != EventKind::PhaseMarker && e.t >= *start && e.t < end)
            .count();
        let _ = writeln!(out, "phase {phase} {start:.3} {n}");
    }
    out
}

pub struct SimulateArgs {
    pub out: PathBuf,
    pub phases: Option<Vec<Phase>>,
    pub duration: Option<f64>,
    pub subject: String,
    pub catalog: Option<PathBuf>,
}

pub fn simulate(cfg: &RunConfig, args: SimulateArgs) -> CliResult<String> {
    let catalog = load_catalog_arg(args.catalog.as_deref())?;
    let mut phases = cfg.phases.clone();
    if let Some(p) = args.phases {
        phases.phases = p;
    }
    let schedule = build_protocol_schedule(&phases, &catalog)?;
    let duration = args.duration.unwrap_or_else(|| phases.duration());
    let mut rec = generate_session(&player_for(cfg, &catalog), &schedule, &cfg.rates, duration)?;
    rec.meta.subject_id = args.subject;
    write(&args.out, write_session(&rec)?)?;
    let mut summary = phase_summary(&schedule);
    let _ = writeln!(summary, "events {} duration {duration:.3}", schedule.events.len());
    Ok(summary)
}

pub fn calibrate_cmd(cfg: &RunConfig, session: &Path, out: &Path) -> CliResult<String> {
    let rec = read_session(session)?;
    let b = calibrate(&rec, cfg.estimator.grid_hz)?;
    let text = write_baseline(&b);
    write(out, &text)?;
    Ok(text)
}

pub struct AnalyzeArgs {
    pub session: PathBuf,
    pub baseline: PathBuf,
    pub catalog: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub plot: bool,
    pub templates: bool,
}

fn marker_times(rec: &SessionRecording) -> Vec<f64> {
    rec.events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::PatternEvent | EventKind::StimulusOnset))
        .map(|e| e.t)
        .collect()
}

/// Templates per pattern id and stimulus class, for the phasic and heart-rate
/// channels. Events whose epoch leaves the recording are skipped.
fn session_templates(rec: &SessionRecording, phasic: &UniformSeries, hr: Option<&UniformSeries>) -> CliResult<Vec<ReactionTemplate>> {
    let mut classes: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in rec.events.iter().filter(|e| matches!(e.kind, EventKind::PatternEvent | EventKind::StimulusOnset)) {
        for id in &e.pattern_ids {
            classes.entry(id).or_default().push(e.t);
        }
    }
    let grid = EpochGrid::default();
    let mut out = Vec::new();
    for (class, times) in classes {
        for (channel, series) in [(EpochChannel::Phasic, Some(phasic)), (EpochChannel::Hr, hr)] {
            let Some(series) = series else { continue };
            let mut epochs = Vec::new();
            for &t in &times {
                match extract_epoch(series, channel, t, grid) {
                    Ok(e) => epochs.push(e),
                    Err(Error::InsufficientData(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            if !epochs.is_empty() {
                out.push(build_template(class, &epochs)?);
            }
        }
    }
    Ok(out)
}

/// Returns the correlation report; writes the report, the affect trace and
/// optional templates and plots into `out_dir`.
pub fn analyze(cfg: &RunConfig, args: AnalyzeArgs) -> CliResult<String> {
    let rec = read_session(&args.session)?;
    let baseline = read_baseline(&args.baseline)?;
    let catalog = load_catalog_arg(args.catalog.as_deref())?;

    let states = estimate_session(&rec, cfg.estimator, baseline)?;
    let (_, eda) = rec
        .first_stream(Channel::Eda)
        .ok_or_else(|| Error::InsufficientData("session has no eda stream".into()))?;
    let (_, phasic, _) = eda_features(eda)?;
    let report = correlate_events(&rec, &phasic, &catalog, &cfg.correlation)?;

    let trace: String = states.iter().map(|s| s.to_line() + "\n").collect();
    write(&out_path(&args.out_dir, "affect.txt")?, &trace)?;
    let lines = report.to_lines();
    write(&out_path(&args.out_dir, "report.txt")?, &lines)?;

    let heart = rec
        .first_stream(Channel::Pulse)
        .map(|(_, s)| (s, Channel::Pulse))
        .or_else(|| rec.first_stream(Channel::Hr).map(|(_, s)| (s, Channel::Hr)));
    let hr = match heart {
        Some((s, ch)) => Some(heart_rate(s, ch, cfg.estimator.grid_hz)?.series),
        None => None,
    };
    if args.templates {
        let templates = session_templates(&rec, &phasic, hr.as_ref())?;
        write(&out_path(&args.out_dir, "templates.txt")?, write_templates(&templates))?;
    }
    if args.plot {
        let markers = marker_times(&rec);
        for channel in [Channel::Pulse, Channel::Eda, Channel::Hr] {
            if let Some((key, s)) = rec.first_stream(channel) {
                let pts: Vec<(f64, f64)> = s.iter().map(|p| (p.t, p.value)).collect();
                let unit = match channel {
                    Channel::Pulse => "mV",
                    Channel::Eda => "µS",
                    Channel::Hr => "bpm",
                };
                let path = out_path(&args.out_dir, &format!("{channel}.svg"))?;
                plot::time_series(&path, &key.to_string(), unit, &pts, &markers)?;
            }
        }
        let pts: Vec<(f64, f64)> = states.iter().map(|s| (s.t, s.arousal)).collect();
        plot::time_series(&out_path(&args.out_dir, "arousal.svg")?, "arousal", "arousal", &pts, &markers)?;
    }
    Ok(lines)
}

pub struct LoopArgs {
    pub duration: f64,
    pub out_dir: PathBuf,
    pub catalog: Option<PathBuf>,
    pub no_inject: bool,
}

/// Seconds at the end of a loop run over which the summary reports
/// time-in-band separately.
const LOOP_TAIL_S: f64 = 120.0;

pub fn run_loop(cfg: &RunConfig, args: LoopArgs) -> CliResult<String> {
    let catalog = load_catalog_arg(args.catalog.as_deref())?;
    let mut cl = ClosedLoop::new(player_for(cfg, &catalog), cfg.controller, args.duration);
    cl.estimator = cfg.estimator;
    cl.rates = cfg.rates;
    cl.inject = !args.no_inject;
    let trace = cl.run(&catalog)?;

    write(&out_path(&args.out_dir, "loop_trace.txt")?, trace.to_columns())?;
    write(&out_path(&args.out_dir, "loop_states.txt")?, trace.to_lines())?;
    write(&out_path(&args.out_dir, "loop_session.txt")?, write_session(&trace.recording)?)?;
    write(&out_path(&args.out_dir, "loop_baseline.toml")?, write_baseline(&trace.baseline))?;

    let band = cfg.controller.band;
    let tail_from = (args.duration - LOOP_TAIL_S).max(0.0);
    let mut out = String::new();
    let _ = writeln!(out, "states {}", trace.states.len());
    let _ = writeln!(out, "directives {}", trace.directives.len());
    let _ = writeln!(out, "time_in_band {:.1}%", 100.0 * trace.time_in_band(band, 0.0));
    let _ = writeln!(out, "time_in_band_from {tail_from:.0} {:.1}%", 100.0 * trace.time_in_band(band, tail_from));
    Ok(out)
}

fn id_set(ids: &[String]) -> BTreeSet<String> {
    ids.iter().cloned().collect()
}

/// `ok <n>` for a valid catalog; otherwise the violations, one per line, and
/// a data error.
pub fn catalog_validate(path: Option<&Path>) -> CliResult<String> {
    let result = match path {
        Some(p) => load_catalog(&read(p)?),
        None => Ok(affloop_core::catalog::seed_catalog()),
    };
    match result {
        Ok(cat) => Ok(format!("ok {}\n", cat.patterns.len())),
        Err(Error::Catalog(violations)) => {
            for v in &violations {
                println!("{v}");
            }
            Err(CliError::Data(Error::Catalog(violations)))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn catalog_recommend(path: Option<&Path>, selected: &[String], goal: ArousalEffect, k: usize) -> CliResult<String> {
    let cat = load_catalog_arg(path)?;
    Ok(recommend(&cat, &id_set(selected), goal, k)?.into_iter().map(|id| id + "\n").collect())
}

/// `active <id>` lines for the closure, then `conflict <a> <b>` lines.
pub fn catalog_effective(path: Option<&Path>, selected: &[String]) -> CliResult<String> {
    let cat = load_catalog_arg(path)?;
    let (active, pairs) = effective_set(&cat, &id_set(selected))?;
    let mut out = String::new();
    for id in active {
        let _ = writeln!(out, "active {id}");
    }
    for (a, b) in pairs {
        let _ = writeln!(out, "conflict {a} {b}");
    }
    Ok(out)
}
