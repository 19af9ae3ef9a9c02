//! Synthetic player physiology.
//!
//! A latent arousal `a` decays exponentially and jumps on every game event by
//! the event's gain, attenuated geometrically with repetition. Each positive
//! jump schedules a skin conductance response; heart rate follows `a`
//! linearly and drives a stylized pulse train.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::catalog::{seed_catalog, ArousalEffect, Catalog};
use crate::signal::{
    Channel, EventKind, GameEvent, Phase, SessionMeta, SessionRecording, StreamDecl, StreamKey, TimedValue,
};
use crate::stats::quantize6;
use crate::{Error, Result};

pub const PULSE_DEVICE: &str = "chest";
pub const EDA_DEVICE: &str = "wrist";
pub const SESSION_EPOCH: &str = "2018-03-20T10:00:00Z";

pub const STIMULUS_NEUTRAL: &str = "neutral";
pub const STIMULUS_HIGH: &str = "high";
pub const STIMULUS_STRONG: &str = "strong";

/// Width (standard deviation) of one pulse wave, seconds.
const PULSE_WIDTH_S: f64 = 0.025;
const PULSE_AMPLITUDE_MV: f64 = 1.0;

/// Default gain for each annotation class.
pub fn default_gain(effect: ArousalEffect) -> f64 {
    match effect {
        ArousalEffect::Raise => 0.15,
        ArousalEffect::Lower => -0.10,
        ArousalEffect::Neutral => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlayerModel {
    /// Arousal decay time constant, seconds.
    pub tau_a: f64,
    /// Arousal jump per pattern event, by pattern id.
    pub pattern_gains: BTreeMap<String, f64>,
    /// Arousal jump per stimulus onset, by stimulus class.
    pub stimulus_gains: BTreeMap<String, f64>,
    /// Gain multiplier per previous repetition of the same pattern or class.
    pub habituation_gamma: f64,
    /// Time constant with which the repetition count decays back to zero.
    /// `None` means habituation never wears off.
    pub habituation_recovery_s: Option<f64>,
    pub scr_tau1: f64,
    pub scr_tau2: f64,
    /// SCR peak amplitude per unit of positive arousal jump, µS.
    pub scr_coupling: f64,
    pub scr_latency_s: f64,
    pub scl_base: f64,
    pub hr_floor: f64,
    /// bpm per unit latent arousal.
    pub hr_coupling: f64,
    pub noise_sigma_eda: f64,
    pub initial_arousal: f64,
    pub seed: u64,
}

impl Default for PlayerModel {
    fn default() -> Self {
        PlayerModel::from_catalog(&seed_catalog())
    }
}

impl PlayerModel {
    /// Default model with gains taken from the catalog's arousal annotations.
    pub fn from_catalog(cat: &Catalog) -> Self {
        let pattern_gains = cat.patterns.values().map(|p| (p.id.clone(), default_gain(p.affect.arousal_effect))).collect();
        let stimulus_gains = [(STIMULUS_NEUTRAL, 0.0), (STIMULUS_HIGH, 0.15), (STIMULUS_STRONG, 0.45)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        PlayerModel {
            tau_a: 20.0,
            pattern_gains,
            stimulus_gains,
            habituation_gamma: 0.9,
            habituation_recovery_s: Some(120.0),
            scr_tau1: 2.0,
            scr_tau2: 0.75,
            scr_coupling: 0.6,
            scr_latency_s: 1.5,
            scl_base: 2.0,
            hr_floor: 60.0,
            hr_coupling: 30.0,
            noise_sigma_eda: 0.003,
            initial_arousal: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.tau_a > 0.0) {
            return bad(format!("tau_a {} must be > 0", self.tau_a));
        }
        if !(self.scr_tau1 > self.scr_tau2 && self.scr_tau2 > 0.0) {
            return bad(format!("need scr_tau1 > scr_tau2 > 0, got {} and {}", self.scr_tau1, self.scr_tau2));
        }
        if let Some((id, g)) = self.pattern_gains.iter().chain(&self.stimulus_gains).find(|(_, g)| !(-1.0..=1.0).contains(*g)) {
            return bad(format!("gain {g} for `{id}` outside [-1, 1]"));
        }
        if !(self.habituation_gamma > 0.0 && self.habituation_gamma <= 1.0) {
            return bad(format!("habituation_gamma {} outside (0, 1]", self.habituation_gamma));
        }
        if matches!(self.habituation_recovery_s, Some(r) if !(r > 0.0)) {
            return bad("habituation_recovery_s must be > 0".into());
        }
        let nonneg = [
            ("scr_coupling", self.scr_coupling),
            ("scr_latency_s", self.scr_latency_s),
            ("scl_base", self.scl_base),
            ("hr_coupling", self.hr_coupling),
            ("noise_sigma_eda", self.noise_sigma_eda),
        ];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("{name} {v} must be finite and >= 0"));
        }
        if !(self.hr_floor > 25.0 && self.hr_floor < 250.0) || !self.initial_arousal.is_finite() {
            return bad("hr_floor must lie in (25, 250) and initial_arousal must be finite".into());
        }
        Ok(())
    }

    /// Base arousal gain of an event (before habituation and intensity).
    pub fn event_gain(&self, e: &GameEvent) -> Result<f64> {
        let table = match e.kind {
            EventKind::PatternEvent => &self.pattern_gains,
            EventKind::StimulusOnset => &self.stimulus_gains,
            EventKind::PhaseMarker | EventKind::Rating => return Ok(0.0),
        };
        e.pattern_ids
            .iter()
            .map(|id| table.get(id).copied().ok_or_else(|| Error::UnknownPattern(id.clone())))
            .sum()
    }

    fn kernel_peak(&self) -> f64 {
        let (t1, t2) = (self.scr_tau1, self.scr_tau2);
        let tp = (t1 / t2).ln() * t1 * t2 / (t1 - t2);
        (-tp / t1).exp() - (-tp / t2).exp()
    }

    /// Time from SCR onset to its peak, seconds.
    pub fn scr_rise_time(&self) -> f64 {
        let (t1, t2) = (self.scr_tau1, self.scr_tau2);
        (t1 / t2).ln() * t1 * t2 / (t1 - t2)
    }

    /// Unit-peak SCR kernel `s` seconds after onset.
    pub fn kernel(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        ((-s / self.scr_tau1).exp() - (-s / self.scr_tau2).exp()) / self.kernel_peak()
    }

    pub fn bpm(&self, arousal: f64) -> f64 {
        (self.hr_floor + self.hr_coupling * arousal).clamp(30.0, 220.0)
    }
}

/// An SCR scheduled by an event: onset time and peak amplitude (µS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledScr {
    pub onset_t: f64,
    pub amplitude: f64,
}

/// Explicit simulation state.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    pub t: f64,
    pub arousal: f64,
    /// Effective repetition count per pattern id or stimulus class.
    pub repetitions: BTreeMap<String, f64>,
    pub scrs: Vec<ScheduledScr>,
    /// Pulse phase in cycles; a beat occurs at every integer.
    pub pulse_phase: f64,
}

impl PlayerState {
    pub fn new(model: &PlayerModel) -> Self {
        PlayerState {
            t: 0.0,
            arousal: model.initial_arousal,
            repetitions: BTreeMap::new(),
            scrs: Vec::new(),
            pulse_phase: 0.5,
        }
    }
}

/// Arousal jump applied for one event, with its habituation bookkeeping.
/// The payload of a pattern event scales the jump; a negative payload eases
/// the pattern off and does not count as a repetition.
fn apply_event(model: &PlayerModel, state: &mut PlayerState, e: &GameEvent) -> Result<f64> {
    let gain = model.event_gain(e)?;
    if gain == 0.0 {
        return Ok(0.0);
    }
    let key = e.pattern_ids.join(",");
    let rep = state.repetitions.get(&key).copied().unwrap_or(0.0);
    let intensity = match e.kind {
        EventKind::PatternEvent => e.payload.unwrap_or(1.0),
        _ => 1.0,
    };
    let jump = gain * intensity * model.habituation_gamma.powf(rep);
    if intensity > 0.0 {
        state.repetitions.insert(key, rep + 1.0);
    }
    state.arousal += jump;
    if jump > 0.0 && model.scr_coupling > 0.0 {
        state.scrs.push(ScheduledScr { onset_t: e.t + model.scr_latency_s, amplitude: model.scr_coupling * jump });
    }
    Ok(jump)
}

/// Advances the state by `dt`: arousal decays, habituation recovers, the pulse
/// phase advances at the current rate, then `events_now` apply. Returns the
/// arousal jumps, one per event.
pub fn step(model: &PlayerModel, state: &mut PlayerState, dt: f64, events_now: &[GameEvent]) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::InvalidParameter(format!("step dt {dt} outside (0, 0.1]")));
    }
    state.pulse_phase += model.bpm(state.arousal) / 60.0 * dt;
    state.t += dt;
    state.arousal *= (-dt / model.tau_a).exp();
    if let Some(r) = model.habituation_recovery_s {
        let k = (-dt / r).exp();
        for v in state.repetitions.values_mut() {
            *v *= k;
        }
    }
    events_now.iter().map(|e| apply_event(model, state, e)).collect()
}

/// Noise-free skin conductance at time `t`.
pub fn eda_mean(model: &PlayerModel, state: &PlayerState, t: f64) -> f64 {
    model.scl_base + state.scrs.iter().map(|s| s.amplitude * model.kernel(t - s.onset_t)).sum::<f64>()
}

/// Pulse waveform at the current phase: a Gaussian wave centered on each beat.
pub fn pulse_value(model: &PlayerModel, state: &PlayerState) -> f64 {
    let frac = state.pulse_phase - state.pulse_phase.round();
    let d_s = frac * 60.0 / model.bpm(state.arousal);
    PULSE_AMPLITUDE_MV * (-0.5 * (d_s / PULSE_WIDTH_S).powi(2)).exp()
}

/// A pulse train with beats at exactly the given times.
pub fn pulse_train(beats: &[f64], rate_hz: f64, duration_s: f64) -> crate::signal::UniformSeries {
    let n = (duration_s * rate_hz).round() as usize;
    let mut values = vec![0.0; n];
    let reach = (5.0 * PULSE_WIDTH_S * rate_hz).ceil() as isize;
    for &b in beats {
        let c = (b * rate_hz).round() as isize;
        for i in (c - reach).max(0)..(c + reach + 1).min(n as isize) {
            let d = i as f64 / rate_hz - b;
            values[i as usize] += PULSE_AMPLITUDE_MV * (-0.5 * (d / PULSE_WIDTH_S).powi(2)).exp();
        }
    }
    crate::signal::UniformSeries::new(0.0, rate_hz, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub pulse_hz: f64,
    pub eda_hz: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates { pulse_hz: 100.0, eda_hz: 32.0 }
    }
}

impl Rates {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_hz >= 10.0 && self.pulse_hz <= 10_000.0) || !(self.eda_hz > 0.0 && self.eda_hz <= self.pulse_hz) {
            return Err(Error::InvalidParameter(format!(
                "rates {self:?}: need 10 <= pulse_hz <= 10000 and 0 < eda_hz <= pulse_hz"
            )));
        }
        Ok(())
    }
}

/// Empty recording with the simulator's two devices declared.
pub fn session_shell(subject_id: &str, rates: &Rates) -> SessionRecording {
    let mut meta = SessionMeta::new(subject_id, SESSION_EPOCH);
    meta.streams.push(StreamDecl { key: StreamKey::new(PULSE_DEVICE, Channel::Pulse), rate_hz: rates.pulse_hz });
    meta.streams.push(StreamDecl { key: StreamKey::new(EDA_DEVICE, Channel::Eda), rate_hz: rates.eda_hz });
    SessionRecording::new(meta)
}

/// Stepping driver that records streams. Events may be queued while running,
/// which is how the closed loop feeds directives back.
pub struct Simulator {
    pub model: PlayerModel,
    pub state: PlayerState,
    rates: Rates,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
    queue: Vec<GameEvent>,
    next_eda: usize,
    steps: usize,
    pub recording: SessionRecording,
    pulse_key: StreamKey,
    eda_key: StreamKey,
}

impl Simulator {
    pub fn new(model: PlayerModel, rates: Rates) -> Result<Self> {
        model.validate()?;
        rates.validate()?;
        let noise = Normal::new(0.0, model.noise_sigma_eda).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut sim = Simulator {
            state: PlayerState::new(&model),
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            noise,
            rates,
            queue: Vec::new(),
            next_eda: 0,
            steps: 0,
            recording: session_shell("sim", &rates),
            pulse_key: StreamKey::new(PULSE_DEVICE, Channel::Pulse),
            eda_key: StreamKey::new(EDA_DEVICE, Channel::Eda),
            model,
        };
        sim.observe()?;
        Ok(sim)
    }

    /// Time of the most recent sample.
    pub fn now(&self) -> f64 {
        self.state.t
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rates.pulse_hz
    }

    /// Queues an event; it applies on the first step reaching its time.
    pub fn push_event(&mut self, e: GameEvent) -> Result<()> {
        e.validate()?;
        self.model.event_gain(&e)?;
        let pos = self.queue.partition_point(|q| q.t <= e.t);
        self.queue.insert(pos, e);
        Ok(())
    }

    fn pulse_time(&self, i: usize) -> f64 {
        quantize6(i as f64 / self.rates.pulse_hz)
    }

    fn observe(&mut self) -> Result<()> {
        let t = self.pulse_time(self.steps);
        let due: Vec<GameEvent> = {
            let n = self.queue.partition_point(|e| e.t <= t + 1e-9);
            self.queue.drain(..n).collect()
        };
        if self.steps == 0 {
            for e in &due {
                apply_event(&self.model, &mut self.state, e)?;
            }
        } else {
            let dt = self.dt();
            step(&self.model, &mut self.state, dt, &due)?;
            self.state.t = t;
        }
        self.recording.events.extend(due);
        let pulse = quantize6(pulse_value(&self.model, &self.state));
        self.recording.streams.get_mut(&self.pulse_key).expect("declared").push(TimedValue::new(t, pulse));
        loop {
            let te = quantize6(self.next_eda as f64 / self.rates.eda_hz);
            if te > t + 1e-9 {
                break;
            }
            let v = eda_mean(&self.model, &self.state, te) + self.noise.sample(&mut self.rng);
            let v = quantize6(v.max(0.0));
            self.recording.streams.get_mut(&self.eda_key).expect("declared").push(TimedValue::new(te, v));
            self.next_eda += 1;
        }
        Ok(())
    }

    /// Advances one pulse sample.
    pub fn advance(&mut self) -> Result<()> {
        self.steps += 1;
        self.observe()
    }

    /// Advances while the next sample time is below `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        while self.pulse_time(self.steps + 1) < t_end - 1e-9 {
            self.advance()?;
        }
        Ok(())
    }

    pub fn finish(self) -> SessionRecording {
        self.recording
    }
}

/// Events of a protocol run: phase markers plus stimuli, ratings and patterns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseSchedule {
    pub events: Vec<GameEvent>,
}

impl PhaseSchedule {
    pub fn end_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t)
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.events.iter().filter_map(GameEvent::phase_marker).collect()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for e in &self.events {
            e.validate()?;
            if e.t < prev {
                return Err(Error::Invariant(format!("schedule out of order at t={}", e.t)));
            }
            prev = e.t;
        }
        let phases = self.phases();
        if !phases.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invariant(format!("phases out of order: {phases:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub phases: Vec<Phase>,
    pub calibration_stimuli: usize,
    /// Seconds each calibration picture is shown; the rating follows.
    pub stimulus_display_s: f64,
    /// Seconds between a rating and the next picture.
    pub rating_s: f64,
    /// Quiet lead-in at the start of the calibration phase.
    pub lead_in_s: f64,
    pub gaming_s: f64,
    /// Mean pattern events per minute during gaming.
    pub gaming_rate_per_min: f64,
    /// Patterns drawn from during gaming; empty means all of the catalog's.
    pub gaming_patterns: Vec<String>,
    pub neutral_s: f64,
    /// Time after the strong stimulus until the end of the schedule.
    pub tail_s: f64,
    pub seed: u64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            phases: Phase::ALL.to_vec(),
            calibration_stimuli: 10,
            stimulus_display_s: 6.0,
            rating_s: 4.0,
            lead_in_s: 5.0,
            gaming_s: 180.0,
            gaming_rate_per_min: 6.0,
            gaming_patterns: Vec::new(),
            neutral_s: 30.0,
            tail_s: 15.0,
            seed: 0,
        }
    }
}

impl PhaseConfig {
    /// Duration of the schedule built from this configuration.
    pub fn duration(&self) -> f64 {
        self.phases
            .iter()
            .map(|p| match p {
                Phase::Calibration => {
                    self.lead_in_s + self.calibration_stimuli as f64 * (self.stimulus_display_s + self.rating_s)
                }
                Phase::Gaming => self.gaming_s,
                Phase::StrongStimulus => self.neutral_s + self.tail_s,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.phases.is_empty() || !self.phases.windows(2).all(|w| w[0] < w[1]) {
            return bad("phases must be a non-empty subsequence of calibration, gaming, strong_stimulus");
        }
        let durations = [self.stimulus_display_s, self.rating_s, self.lead_in_s, self.gaming_s, self.neutral_s, self.tail_s];
        if durations.iter().any(|d| !(d.is_finite() && *d >= 0.0)) || !(self.stimulus_display_s > 0.0) {
            return bad("phase durations must be finite and >= 0, display > 0");
        }
        if self.phases.contains(&Phase::Calibration) && self.calibration_stimuli == 0 {
            return bad("calibration needs at least one stimulus");
        }
        if !(self.gaming_rate_per_min.is_finite() && self.gaming_rate_per_min >= 0.0) {
            return bad("gaming_rate_per_min must be >= 0");
        }
        Ok(())
    }
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Builds the three-phase protocol.
///
/// Calibration shows `calibration_stimuli` pictures, half high-arousal and half
/// neutral in seeded order, each followed by a rating (7–9 for high, 4–6 for
/// neutral). Gaming places Poisson pattern events drawn uniformly from the
/// catalog. The final phase shows a neutral picture, then the strong stimulus.
pub fn build_protocol_schedule(cfg: &PhaseConfig, catalog: &Catalog) -> Result<PhaseSchedule> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut events = Vec::new();
    let mut t0 = 0.0;
    for &phase in &cfg.phases {
        events.push(GameEvent::phase(round_ms(t0), phase));
        match phase {
            Phase::Calibration => {
                let n = cfg.calibration_stimuli;
                let mut classes: Vec<&str> = (0..n).map(|i| if i < n.div_ceil(2) { STIMULUS_HIGH } else { STIMULUS_NEUTRAL }).collect();
                classes.shuffle(&mut rng);
                for (i, class) in classes.into_iter().enumerate() {
                    let onset = t0 + cfg.lead_in_s + i as f64 * (cfg.stimulus_display_s + cfg.rating_s);
                    events.push(GameEvent::stimulus(round_ms(onset), class));
                    let rating = if class == STIMULUS_HIGH { rng.gen_range(7..=9) } else { rng.gen_range(4..=6) };
                    events.push(GameEvent::rating(round_ms(onset + cfg.stimulus_display_s), rating as f64));
                }
            }
            Phase::Gaming => {
                let ids: Vec<String> = if cfg.gaming_patterns.is_empty() {
                    catalog.patterns.keys().cloned().collect()
                } else {
                    for id in &cfg.gaming_patterns {
                        if !catalog.patterns.contains_key(id) {
                            return Err(Error::UnknownPattern(id.clone()));
                        }
                    }
                    cfg.gaming_patterns.clone()
                };
                if cfg.gaming_rate_per_min > 0.0 && !ids.is_empty() {
                    let gap = Exp::new(cfg.gaming_rate_per_min / 60.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    let mut t = t0 + gap.sample(&mut rng);
                    while t < t0 + cfg.gaming_s {
                        let id = ids.choose(&mut rng).expect("non-empty");
                        events.push(GameEvent::pattern(round_ms(t), id.clone()));
                        t += gap.sample(&mut rng);
                    }
                }
            }
            Phase::StrongStimulus => {
                events.push(GameEvent::stimulus(round_ms(t0), STIMULUS_NEUTRAL));
                events.push(GameEvent::stimulus(round_ms(t0 + cfg.neutral_s), STIMULUS_STRONG));
            }
        }
        t0 += match phase {
            Phase::Calibration => {
                cfg.lead_in_s + cfg.calibration_stimuli as f64 * (cfg.stimulus_display_s + cfg.rating_s)
            }
            Phase::Gaming => cfg.gaming_s,
            Phase::StrongStimulus => cfg.neutral_s + cfg.tail_s,
        };
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let schedule = PhaseSchedule { events };
    schedule.validate()?;
    Ok(schedule)
}

/// `n` pattern events cycling through `ids`, the i-th at
/// `lead_s + i * spacing_s` plus a seeded uniform jitter in `[0, jitter_s)`.
/// Useful where responses must not overlap.
pub fn spaced_schedule(ids: &[&str], n: usize, lead_s: f64, spacing_s: f64, jitter_s: f64, seed: u64) -> Result<PhaseSchedule> {
    if ids.is_empty() || !(spacing_s > jitter_s && jitter_s >= 0.0 && lead_s >= 0.0) {
        return Err(Error::InvalidParameter("need ids, lead >= 0 and spacing > jitter >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = (0..n)
        .map(|i| {
            let j = if jitter_s > 0.0 { rng.gen_range(0.0..jitter_s) } else { 0.0 };
            GameEvent::pattern(round_ms(lead_s + i as f64 * spacing_s + j), ids[i % ids.len()])
        })
        .collect();
    let schedule = PhaseSchedule { events };
    schedule.validate()?;
    Ok(schedule)
}

/// Simulates a session following `schedule` for `duration_s` seconds.
pub fn generate_session(
    model: &PlayerModel,
    schedule: &PhaseSchedule,
    rates: &Rates,
    duration_s: f64,
) -> Result<SessionRecording> {
    schedule.validate()?;
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParameter(format!("duration {duration_s} s")));
    }
    if schedule.end_time() > duration_s {
        return Err(Error::InvalidParameter(format!(
            "schedule ends at {} s, after the {duration_s} s session",
            schedule.end_time()
        )));
    }
    let mut sim = Simulator::new(model.clone(), *rates)?;
    for e in &schedule.events {
        sim.push_event(e.clone())?;
    }
    sim.run_until(duration_s)?;
    Ok(sim.finish())
}
