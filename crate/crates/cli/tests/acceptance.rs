//! End-to-end acceptance run. Prints one `PASS`/`FAIL` line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use affloop_core::affect::{build_template, extract_epoch, match_template, Epoch, EpochChannel, EpochGrid, DEFAULT_MATCH_R};
use affloop_core::catalog::{effective_set, recommend, seed_catalog, ArousalEffect, Catalog, RelationKind};
use affloop_core::engine::{correlate_events, eda_features, run_closed_loop, ControllerConfig, CorrelationConfig};
use affloop_core::features::{detect_beats, detect_scrs, eda_decompose, ibi_to_hr};
use affloop_core::signal::*;
use affloop_core::sim::{
    build_protocol_schedule, generate_session, pulse_train, spaced_schedule, PhaseConfig, PlayerModel, Rates,
};
use affloop_core::stats::{pearson, std_dev};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const BIN: &str = env!("CARGO_BIN_EXE_affloop");

// 1
const SCR_SEEDS: u64 = 10;
const SCR_MIN_GAIN: f64 = 0.1;
const SCR_RECALL: f64 = 0.90;
const SCR_ONSET_TOL_S: f64 = 1.0;
// 2
const HR_RATES: [f64; 5] = [40.0, 60.0, 90.0, 120.0, 180.0];
const HR_TOL_BPM: f64 = 1.0;
const HR_SPURIOUS: f64 = 0.05;
const HR_TRIALS: u64 = 20;
// 3
const EDA_AMPLITUDES: [f64; 3] = [0.05, 0.1, 0.5];
const EDA_SIGMA: f64 = 0.005;
const EDA_AMP_TOL: f64 = 0.10;
const EDA_SEEDS: u64 = 20;
// 4
const NULL_RUNS: u64 = 200;
const NULL_KS_MAX: f64 = 0.1;
const NULL_EVENTS: usize = 30;
const NULL_SPACING_S: f64 = 60.0;
const TUNED_GAIN: f64 = 0.004;
const TUNED_D: (f64, f64) = (0.75, 1.25);
const TUNED_P_MAX: f64 = 0.01;
const PERMUTATIONS: usize = 1000;
// 5
const TEMPLATE_EPOCHS: usize = 20;
const TEMPLATE_R_MIN: f64 = 0.9;
const MATCH_SNR: f64 = 3.0;
const MATCH_TRIALS: u64 = 1000;
const MATCH_RATE_MIN: f64 = 0.95;
// 6
const LOOP_SEEDS: u64 = 10;
const LOOP_DURATION_S: f64 = 300.0;
const LOOP_TAIL_FROM_S: f64 = 180.0;
const LOOP_IN_BAND_MIN: f64 = 0.70;
const LOOP_START_AROUSAL: [f64; 2] = [0.0, 0.2];
// 8
const SERVE_SEEDS: [u64; 3] = [1, 2, 3];
// 9
const ROUND_TRIPS: u64 = 1000;
const OFFSET_STEPS: i32 = 40;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Maps `f` over `items` on all cores, keeping order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn gaming_session(seed: u64) -> (PlayerModel, SessionRecording) {
    let cat = seed_catalog();
    let model = PlayerModel { seed, ..PlayerModel::default() };
    let cfg = PhaseConfig { phases: vec![Phase::Gaming], seed, ..PhaseConfig::default() };
    let schedule = build_protocol_schedule(&cfg, &cat).unwrap();
    let rec = generate_session(&model, &schedule, &Rates::default(), cfg.duration()).unwrap();
    (model, rec)
}

/// Recall pooled over seeds. Events whose response would peak after the
/// recording ends are not counted.
fn scr_recovery() -> Outcome {
    let seeds: Vec<u64> = (0..SCR_SEEDS).collect();
    let per_seed = par_map(&seeds, |&seed| {
        let (model, rec) = gaming_session(seed);
        let (_, eda) = rec.first_stream(Channel::Eda).unwrap();
        let end = eda[eda.len() - 1].t;
        let (_, _, scrs) = eda_features(eda).unwrap();
        let mut truth = 0;
        let mut found = 0;
        for e in rec.events.iter().filter(|e| e.kind == EventKind::PatternEvent) {
            let onset = e.t + model.scr_latency_s;
            if model.event_gain(e).unwrap() < SCR_MIN_GAIN || onset + model.scr_rise_time() > end {
                continue;
            }
            truth += 1;
            if scrs.iter().any(|s| (s.onset_t - onset).abs() <= SCR_ONSET_TOL_S) {
                found += 1;
            }
        }
        (found, truth)
    });
    let worst = per_seed.iter().map(|&(f, t)| f as f64 / t as f64).fold(1.0, f64::min);
    let (found, truth) = per_seed.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let recall = found as f64 / truth as f64;
    outcome(
        recall >= SCR_RECALL,
        format!("{found}/{truth} events recovered ({:.1}%), worst seed {:.1}%", 100.0 * recall, 100.0 * worst),
    )
}

fn constant_beats(bpm: f64, duration: f64) -> Vec<f64> {
    let ibi = 60.0 / bpm;
    (0..).map(|k| 0.37 + k as f64 * ibi).take_while(|t| *t < duration - 0.2).collect()
}

/// Spurious beats go into the detected beat list, i.e. they stand for
/// detector false positives between the two stages.
fn hr_fidelity() -> Outcome {
    let duration = 120.0;
    let mut worst_clean: f64 = 0.0;
    let mut worst_dirty: f64 = 0.0;
    let deviation = |beats: &[f64], bpm: f64| match ibi_to_hr(beats, 4.0) {
        Ok(hr) => hr.series.values.iter().map(|v| (v - bpm).abs()).fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    for bpm in HR_RATES {
        let found = detect_beats(&pulse_train(&constant_beats(bpm, duration), 100.0, duration)).unwrap();
        worst_clean = worst_clean.max(deviation(&found, bpm));
        for trial in 0..HR_TRIALS {
            let mut rng = ChaCha8Rng::seed_from_u64(trial * 1000 + bpm as u64);
            let mut dirty = found.clone();
            let n = (found.len() as f64 * HR_SPURIOUS).round() as usize;
            for _ in 0..n {
                dirty.push(rng.gen_range(found[0]..found[found.len() - 1]));
            }
            dirty.sort_by(f64::total_cmp);
            worst_dirty = worst_dirty.max(deviation(&dirty, bpm));
        }
    }
    outcome(
        worst_clean <= HR_TOL_BPM && worst_dirty <= HR_TOL_BPM,
        format!("max deviation {worst_clean:.3} bpm clean, {worst_dirty:.3} bpm with {:.0}% spurious beats", 100.0 * HR_SPURIOUS),
    )
}

fn eda_decomposition() -> Outcome {
    let model = PlayerModel::default();
    let mut exact = true;
    let mut checked = 0usize;
    // Exactness on simulated recordings.
    for seed in 0..5 {
        let (_, rec) = gaming_session(seed);
        let (_, eda) = rec.first_stream(Channel::Eda).unwrap();
        let series = UniformSeries::new(eda[0].t, 32.0, eda.iter().map(|p| p.value).collect());
        let (tonic, phasic) = eda_decompose(&series).unwrap();
        for i in 0..series.len() {
            exact &= tonic.values[i] + phasic.values[i] == series.values[i];
        }
        checked += series.len();
    }
    let mut worst_err: f64 = 0.0;
    let mut missing = 0;
    for amp in EDA_AMPLITUDES {
        for seed in 0..EDA_SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, EDA_SIGMA).unwrap();
            let onset = 100.0;
            let values =
                (0..32 * 200).map(|i| 2.0 + amp * model.kernel(i as f64 / 32.0 - onset) + noise.sample(&mut rng)).collect();
            let series = UniformSeries::new(0.0, 32.0, values);
            let (tonic, phasic) = eda_decompose(&series).unwrap();
            for i in 0..series.len() {
                exact &= tonic.values[i] + phasic.values[i] == series.values[i];
            }
            checked += series.len();
            match detect_scrs(&phasic).iter().find(|s| (s.onset_t - onset).abs() <= 1.0) {
                Some(s) => worst_err = worst_err.max((s.amplitude - amp).abs() / amp),
                None => missing += 1,
            }
        }
    }
    outcome(
        exact && missing == 0 && worst_err <= EDA_AMP_TOL,
        format!(
            "{checked} samples {}, worst amplitude error {:.1}%, {missing} missed",
            if exact { "exact" } else { "NOT exact" },
            100.0 * worst_err
        ),
    )
}

/// Phasic signal and session for `NULL_EVENTS` events of `id` spaced
/// `NULL_SPACING_S` apart.
fn spaced_session(id: &str, gain: f64, seed: u64) -> (SessionRecording, UniformSeries) {
    let mut m = PlayerModel { seed, ..PlayerModel::default() };
    m.pattern_gains.insert(id.to_string(), gain);
    let schedule = spaced_schedule(&[id], NULL_EVENTS, 30.0, NULL_SPACING_S, 5.0, seed).unwrap();
    let duration = 30.0 + NULL_SPACING_S * NULL_EVENTS as f64 + 20.0;
    let rec = generate_session(&m, &schedule, &Rates::default(), duration).unwrap();
    let (_, eda) = rec.first_stream(Channel::Eda).unwrap();
    let (_, phasic, _) = eda_features(eda).unwrap();
    (rec, phasic)
}

/// Kolmogorov–Smirnov distance between a sample and U(0, 1).
fn ks_uniform(mut ps: Vec<f64>) -> f64 {
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    ps.iter()
        .enumerate()
        .map(|(i, &p)| ((i as f64 + 1.0) / n - p).max(p - i as f64 / n))
        .fold(0.0, f64::max)
}

fn statistical_validity() -> Outcome {
    let cat = seed_catalog();
    let seeds: Vec<u64> = (0..NULL_RUNS).collect();
    let ps = par_map(&seeds, |&seed| {
        let (rec, phasic) = spaced_session("pick_ups", 0.0, 1000 + seed);
        let cfg = CorrelationConfig { n_permutations: PERMUTATIONS, seed, ..CorrelationConfig::default() };
        correlate_events(&rec, &phasic, &cat, &cfg).unwrap().patterns["pick_ups"].p_value
    });
    let ks = ks_uniform(ps.clone());
    let quiet = ps[..20].iter().filter(|p| **p > 0.05).count();

    let (rec, phasic) = spaced_session("enemies", TUNED_GAIN, 42);
    let cfg = CorrelationConfig { n_permutations: PERMUTATIONS, seed: 42, ..CorrelationConfig::default() };
    let tuned = correlate_events(&rec, &phasic, &cat, &cfg).unwrap().patterns["enemies"].clone();
    let d_ok = (TUNED_D.0..=TUNED_D.1).contains(&tuned.effect_size_d);
    outcome(
        ks <= NULL_KS_MAX && quiet >= 18 && d_ok && tuned.p_value < TUNED_P_MAX,
        format!(
            "null KS {ks:.3} over {NULL_RUNS} runs, {quiet}/20 with p > 0.05; tuned d {:.2} p {:.4}",
            tuned.effect_size_d, tuned.p_value
        ),
    )
}

fn template_identification() -> Outcome {
    let model = PlayerModel::default();
    let grid = EpochGrid::default();
    let spacing = 30.0;
    let mut m = PlayerModel { seed: 5, ..model.clone() };
    m.pattern_gains.insert("enemies".into(), 0.15);
    let schedule = spaced_schedule(&["enemies"], TEMPLATE_EPOCHS, 30.0, spacing, 5.0, 5).unwrap();
    let rec = generate_session(&m, &schedule, &Rates::default(), 30.0 + spacing * TEMPLATE_EPOCHS as f64 + 20.0).unwrap();
    let (_, eda) = rec.first_stream(Channel::Eda).unwrap();
    let (_, phasic, _) = eda_features(eda).unwrap();
    let epochs: Vec<Epoch> = schedule
        .events
        .iter()
        .map(|e| extract_epoch(&phasic, EpochChannel::Phasic, e.t, grid).unwrap())
        .collect();
    let template = build_template("enemies", &epochs).unwrap();
    let analytic: Vec<f64> = (0..grid.len()).map(|i| model.kernel(grid.offset(i) - model.scr_latency_s)).collect();
    let r_kernel = pearson(&template.mean_curve, &analytic).unwrap_or(0.0);

    let k = grid.pre_len();
    let signal_sd = std_dev(&template.mean_curve[k..]);
    let noise = Normal::new(0.0, signal_sd / MATCH_SNR).unwrap();
    let mut matched = 0;
    for trial in 0..MATCH_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let values = template.mean_curve.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let e = Epoch { event_t: 0.0, channel: EpochChannel::Phasic, grid, values };
        if match_template(&e, &template, DEFAULT_MATCH_R).unwrap().1 {
            matched += 1;
        }
    }
    let rate = matched as f64 / MATCH_TRIALS as f64;
    outcome(
        epochs.len() == TEMPLATE_EPOCHS && r_kernel >= TEMPLATE_R_MIN && rate >= MATCH_RATE_MIN,
        format!("template vs kernel r {r_kernel:.3}; {matched}/{MATCH_TRIALS} matched at SNR {MATCH_SNR}"),
    )
}

fn closed_loop() -> Outcome {
    let cat = seed_catalog();
    let cfg = ControllerConfig::default();
    // Both the default start and a player starting low in arousal.
    let cases: Vec<(f64, u64)> = LOOP_START_AROUSAL.iter().flat_map(|&a| (0..LOOP_SEEDS).map(move |s| (a, s))).collect();
    let runs = par_map(&cases, |&(start, seed)| {
        let player = PlayerModel { initial_arousal: start, ..PlayerModel::default() };
        let a = run_closed_loop(&player, &cfg, &cat, LOOP_DURATION_S, seed).unwrap();
        let b = run_closed_loop(&player, &cfg, &cat, LOOP_DURATION_S, seed).unwrap();
        let min_gap = a.directives.windows(2).map(|w| w[1].t - w[0].t).fold(f64::INFINITY, f64::min);
        (a.time_in_band(cfg.band, LOOP_TAIL_FROM_S), min_gap, a == b)
    });
    let worst = runs.iter().map(|r| r.0).fold(1.0, f64::min);
    let best = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_gap = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let exact = runs.iter().all(|r| r.2);
    outcome(
        worst >= LOOP_IN_BAND_MIN && min_gap >= cfg.cooldown_s - 1e-9 && exact,
        format!(
            "{} runs, time in band {:.1}-{:.1}%, min directive gap {min_gap:.1} s, {}",
            runs.len(),
            100.0 * worst,
            100.0 * best,
            if exact { "bit-exact" } else { "NOT reproducible" }
        ),
    )
}

fn subsets(cat: &Catalog) -> Vec<BTreeSet<String>> {
    let ids: Vec<&String> = cat.patterns.keys().collect();
    (0u32..1 << ids.len())
        .map(|mask| ids.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, id)| (*id).clone()).collect())
        .collect()
}

fn catalog_brute_force() -> Outcome {
    let cat = seed_catalog();
    let conflicts = |a: &str, b: &str| {
        cat.patterns[a].targets(RelationKind::Conflicts).any(|t| t == b)
            || cat.patterns[b].targets(RelationKind::Conflicts).any(|t| t == a)
    };
    let all = subsets(&cat);
    let closed: Vec<BTreeSet<String>> = all.iter().map(|s| effective_set(&cat, s).unwrap().0).collect();
    let mut bad_rec = 0;
    let mut bad_closure = 0;
    for (s, active) in all.iter().zip(&closed) {
        for goal in [ArousalEffect::Raise, ArousalEffect::Lower, ArousalEffect::Neutral] {
            for r in recommend(&cat, s, goal, cat.patterns.len()).unwrap() {
                if active.contains(&r) || active.iter().any(|a| conflicts(a, &r)) {
                    bad_rec += 1;
                }
            }
        }
        if !s.is_subset(active) || &effective_set(&cat, active).unwrap().0 != active {
            bad_closure += 1;
        }
    }
    let mut bad_monotone = 0;
    for (i, s) in all.iter().enumerate() {
        for (j, t) in all.iter().enumerate() {
            if s.is_subset(t) && !closed[i].is_subset(&closed[j]) {
                bad_monotone += 1;
            }
        }
    }
    outcome(
        all.len() == 512 && bad_rec + bad_closure + bad_monotone == 0,
        format!("{} subsets: {bad_rec} bad recommendations, {bad_closure} closure and {bad_monotone} monotonicity failures", all.len()),
    )
}

fn run_ok(args: &[&str]) -> Result<String, String> {
    let o = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn serve_and_replay(session: &Path, baseline: &Path) -> Result<String, String> {
    let mut server = Command::new(BIN)
        .args(["serve", "--port", "0", "--baseline", baseline.to_str().unwrap()])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(server.stderr.take().unwrap()).read_line(&mut line).map_err(|e| e.to_string())?;
    let addr = line.trim().strip_prefix("listening ").ok_or(format!("server said {line:?}"))?.to_string();
    let replayed = run_ok(&["replay", session.to_str().unwrap(), "--addr", &addr, "--speed", "0"]);
    Command::new("kill").args(["-INT", &server.id().to_string()]).status().map_err(|e| e.to_string())?;
    let mut out = String::new();
    server.stdout.take().unwrap().read_to_string(&mut out).map_err(|e| e.to_string())?;
    server.wait().map_err(|e| e.to_string())?;
    replayed?;
    Ok(out)
}

fn offline_online() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for seed in SERVE_SEEDS {
        let session = dir.path().join(format!("s{seed}.txt"));
        let baseline = dir.path().join(format!("b{seed}.toml"));
        let out = dir.path().join(format!("o{seed}"));
        let (s, b, o) = (session.to_str().unwrap(), baseline.to_str().unwrap(), out.to_str().unwrap());
        let prepared = run_ok(&["--seed", &seed.to_string(), "simulate", "--out", s])
            .and_then(|_| run_ok(&["calibrate", s, "--out", b]))
            .and_then(|_| run_ok(&["analyze", s, "--baseline", b, "--out-dir", o]))
            .and_then(|_| serve_and_replay(&session, &baseline));
        let served = match prepared {
            Ok(text) => text,
            Err(e) => {
                pass = false;
                details.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let offline = std::fs::read_to_string(out.join("affect.txt")).unwrap();
        let off: Vec<&str> = offline.lines().collect();
        let on: Vec<&str> = served.lines().filter(|l| l.starts_with("S ")).collect();
        let same = on.len() >= off.len() && on.len() <= off.len() + 1 && on[..off.len()] == off[..];
        pass &= same && !off.is_empty();
        details.push(format!("seed {seed}: {}/{} states", off.len(), on.len()));
    }
    outcome(pass, details.join(", "))
}

fn micros(k: i64) -> f64 {
    k as f64 / 1e6
}

fn random_session(seed: u64) -> SessionRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut meta = SessionMeta::new(format!("p{}", rng.gen_range(0..100)), "2018-03-20T10:00:00Z");
    for dev in &["chest", "wrist", "band"][..rng.gen_range(1..=3)] {
        for ch in [Channel::Pulse, Channel::Eda, Channel::Hr] {
            if rng.gen_bool(0.6) {
                let rate = [1.0, 4.0, 32.0, 100.0][rng.gen_range(0..4)];
                meta.streams.push(StreamDecl { key: StreamKey::new(*dev, ch), rate_hz: rate });
            }
        }
    }
    let mut rec = SessionRecording::new(meta);
    for (key, samples) in rec.streams.iter_mut() {
        let mut t = rng.gen_range(0..1_000_000i64);
        for _ in 0..rng.gen_range(0..60) {
            let value = match key.channel {
                Channel::Pulse => rng.gen_range(-2_000_000..2_000_000),
                Channel::Eda => rng.gen_range(0..25_000_000),
                Channel::Hr => rng.gen_range(30_000_000..220_000_000),
            };
            samples.push(TimedValue::new(micros(t), micros(value)));
            t += rng.gen_range(1..400_000);
        }
    }
    let mut t = 0i64;
    for _ in 0..rng.gen_range(0..15) {
        t += rng.gen_range(0..2_000_000);
        rec.events.push(match rng.gen_range(0..4) {
            0 => GameEvent::pattern(micros(t), ["enemies", "cooperation", "time_limit"][rng.gen_range(0..3)]),
            1 => GameEvent::stimulus(micros(t), ["neutral", "high", "strong"][rng.gen_range(0..3)]),
            2 => GameEvent::phase(micros(t), [Phase::Calibration, Phase::Gaming, Phase::StrongStimulus][rng.gen_range(0..3)]),
            _ => GameEvent::rating(micros(t), rng.gen_range(1..=9) as f64),
        });
    }
    rec
}

fn round_trips() -> Outcome {
    let mut failures = 0;
    for seed in 0..ROUND_TRIPS {
        let rec = random_session(seed);
        let bytes = write_session(&rec).unwrap();
        let back = parse_session(&bytes).unwrap();
        if back != rec || write_session(&back).unwrap() != bytes {
            failures += 1;
        }
    }

    // Clock offsets: the wrist EDA of a simulated session against a copy
    // stamped by a clock running `delta` seconds behind.
    let (_, rec) = gaming_session(7);
    let (_, eda) = rec.first_stream(Channel::Eda).unwrap();
    let reference: Vec<TimedValue> = eda.iter().map(|p| TimedValue::new(p.t + 10.0, p.value)).collect();
    let period = 1.0 / Rates::default().eda_hz;
    let mut worst: f64 = 0.0;
    for step in -OFFSET_STEPS..=OFFSET_STEPS {
        let delta = 10.0 * step as f64 / OFFSET_STEPS as f64 + 0.0137 * (step % 3) as f64;
        let delta = delta.clamp(-10.0, 10.0);
        let other: Vec<TimedValue> = reference.iter().map(|p| TimedValue::new(p.t - delta, p.value)).collect();
        let err = match estimate_offset(&reference, &other, "other", 12.0) {
            Ok(off) => (off.offset_s - delta).abs(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    outcome(
        failures == 0 && worst <= period + 1e-9,
        format!(
            "{}/{ROUND_TRIPS} sessions round-trip; worst offset error {:.4} s (period {period:.4} s)",
            ROUND_TRIPS - failures,
            worst
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("pipeline recovery", scr_recovery),
        ("heart rate fidelity", hr_fidelity),
        ("eda decomposition", eda_decomposition),
        ("statistical validity", statistical_validity),
        ("template identification", template_identification),
        ("closed-loop control", closed_loop),
        ("catalog brute force", catalog_brute_force),
        ("offline/online equivalence", offline_online),
        ("format round trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} {} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
