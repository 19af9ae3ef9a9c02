//! Generator properties: quiescence, superposition, end-to-end SCR counts,
//! determinism and protocol schedules.

use affloop_core::catalog::seed_catalog;
use affloop_core::engine::calibrate;
use affloop_core::features::{detect_beats, detect_scrs, eda_decompose};
use affloop_core::signal::*;
use affloop_core::sim::*;
use proptest::prelude::*;

fn eda_of(rec: &SessionRecording) -> Vec<TimedValue> {
    rec.first_stream(Channel::Eda).unwrap().1.to_vec()
}

fn quiet(initial_arousal: f64) -> PlayerModel {
    PlayerModel { noise_sigma_eda: 0.0, initial_arousal, ..PlayerModel::default() }
}

#[test]
fn quiescent_streams_are_constant() {
    let rec = generate_session(&quiet(0.0), &PhaseSchedule::default(), &Rates::default(), 60.0).unwrap();
    assert!(eda_of(&rec).iter().all(|s| s.value == 2.0));
    let (_, pulse) = rec.first_stream(Channel::Pulse).unwrap();
    let beats = detect_beats(&resample(pulse, 100.0).unwrap()).unwrap();
    assert!(beats.len() >= 58);
    for w in beats.windows(2) {
        assert!((w[1] - w[0] - 1.0).abs() < 2e-3, "interval {}", w[1] - w[0]);
    }
}

#[test]
fn arousal_decays_monotonically_to_zero() {
    let m = quiet(0.8);
    let mut s = PlayerState::new(&m);
    let mut prev = s.arousal;
    for _ in 0..30_000 {
        step(&m, &mut s, 0.01, &[]).unwrap();
        assert!(s.arousal < prev && s.arousal >= 0.0);
        prev = s.arousal;
    }
    assert!(s.arousal < 0.8 * (-14.0f64).exp() * 1.01);
}

#[test]
fn distant_responses_superpose() {
    let m = PlayerModel::default();
    let rates = Rates::default();
    let session = |events: Vec<GameEvent>| {
        generate_session(&m, &PhaseSchedule { events }, &rates, 200.0).unwrap()
    };
    let both = eda_of(&session(vec![GameEvent::pattern(30.0, "enemies"), GameEvent::pattern(130.0, "time_limit")]));
    let first = eda_of(&session(vec![GameEvent::pattern(30.0, "enemies")]));
    let second = eda_of(&session(vec![GameEvent::pattern(130.0, "time_limit")]));
    let none = eda_of(&session(Vec::new()));
    // The noise sequence is shared, so each response adds to the other exactly
    // up to the negligible tail of the first kernel and six-decimal rounding.
    for (((b, f), s), z) in both.iter().zip(&first).zip(&second).zip(&none) {
        let expected = f.value + s.value - z.value;
        assert!((b.value - expected).abs() < 1e-5, "t={} {} vs {}", b.t, b.value, expected);
    }
}

#[test]
fn ten_events_give_ten_scrs() {
    for seed in 0..5 {
        let m = PlayerModel { seed, ..PlayerModel::default() };
        let schedule = spaced_schedule(&["enemies", "time_limit"], 10, 20.0, 20.0, 5.0, seed).unwrap();
        let rec = generate_session(&m, &schedule, &Rates::default(), 240.0).unwrap();
        let (_, phasic) = eda_decompose(&resample(&eda_of(&rec), 32.0).unwrap()).unwrap();
        let n = detect_scrs(&phasic).len();
        assert!((9..=11).contains(&n), "seed {seed}: {n} SCRs");
    }
}

#[test]
fn same_seed_same_bytes() {
    let cat = seed_catalog();
    let cfg = PhaseConfig { seed: 4, ..PhaseConfig::default() };
    let schedule = build_protocol_schedule(&cfg, &cat).unwrap();
    let m = PlayerModel { seed: 4, ..PlayerModel::default() };
    let a = write_session(&generate_session(&m, &schedule, &Rates::default(), cfg.duration()).unwrap()).unwrap();
    let b = write_session(&generate_session(&m, &schedule, &Rates::default(), cfg.duration()).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = PlayerModel { seed: 5, ..m };
    assert_ne!(a, write_session(&generate_session(&other, &schedule, &Rates::default(), cfg.duration()).unwrap()).unwrap());
}

#[test]
fn default_protocol_baseline() {
    let cat = seed_catalog();
    let cfg = PhaseConfig { seed: 1, ..PhaseConfig::default() };
    let schedule = build_protocol_schedule(&cfg, &cat).unwrap();
    let m = PlayerModel { seed: 1, ..PlayerModel::default() };
    let rec = generate_session(&m, &schedule, &Rates::default(), cfg.duration()).unwrap();
    let b = calibrate(&rec, 4.0).unwrap();
    assert!((58.0..=75.0).contains(&b.hr_mean), "{}", b.hr_mean);
}

#[test]
fn quiescent_protocol_baseline() {
    let mut m = quiet(0.0);
    m.stimulus_gains.values_mut().for_each(|g| *g = 0.0);
    let cfg = PhaseConfig { phases: vec![Phase::Calibration], ..PhaseConfig::default() };
    let schedule = build_protocol_schedule(&cfg, &seed_catalog()).unwrap();
    let rec = generate_session(&m, &schedule, &Rates::default(), cfg.duration()).unwrap();
    let b = calibrate(&rec, 4.0).unwrap();
    assert!((b.hr_mean - 60.0).abs() <= 0.5, "{}", b.hr_mean);
    assert_eq!(b.scr_rate, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn protocol_schedules_are_well_formed(
        seed in any::<u64>(),
        mask in 1usize..8,
        stimuli in 1usize..12,
        gaming in 10.0f64..200.0,
        rate in 0.0f64..20.0,
    ) {
        let phases: Vec<Phase> = Phase::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| *p).collect();
        let cfg = PhaseConfig { phases: phases.clone(), calibration_stimuli: stimuli, gaming_s: gaming, gaming_rate_per_min: rate, seed, ..PhaseConfig::default() };
        let s = build_protocol_schedule(&cfg, &seed_catalog()).unwrap();
        prop_assert_eq!(s.phases(), phases.clone());
        prop_assert!(s.end_time() <= cfg.duration());
        let markers: Vec<f64> = s.events.iter().filter(|e| e.kind == EventKind::PhaseMarker).map(|e| e.t).collect();
        // Each phase's events fall between its marker and the next one.
        for e in &s.events {
            let idx = markers.partition_point(|&m| m <= e.t);
            prop_assert!(idx >= 1);
        }
        if phases.contains(&Phase::Calibration) {
            prop_assert_eq!(s.count(EventKind::Rating), stimuli);
            for r in s.events.iter().filter(|e| e.kind == EventKind::Rating) {
                prop_assert!((1.0..=9.0).contains(&r.payload.unwrap()));
            }
        }
    }

    #[test]
    fn stream_lengths_follow_rates(duration in 1.0f64..30.0, eda_hz in 1.0f64..64.0) {
        let rates = Rates { pulse_hz: 100.0, eda_hz };
        let rec = generate_session(&PlayerModel::default(), &PhaseSchedule::default(), &rates, duration).unwrap();
        let (_, pulse) = rec.first_stream(Channel::Pulse).unwrap();
        let eda = eda_of(&rec);
        prop_assert!((pulse.len() as f64 - 100.0 * duration).abs() <= 1.0);
        prop_assert!((eda.len() as f64 - eda_hz * duration).abs() <= 1.0);
        prop_assert!(rec.validate().is_ok());
    }
}
