//! Closed-loop run of the synthetic player, estimator and controller.

use std::fmt::Write as _;

use crate::affect::AffectState;
use crate::catalog::Catalog;
use crate::features::Baseline;
use crate::signal::{GameEvent, Phase, Sample, SessionRecording, StreamKey, TimedValue};
use crate::sim::{build_protocol_schedule, generate_session, PhaseConfig, PhaseSchedule, PlayerModel, Rates, Simulator};
use crate::{Error, Result};

use super::control::{control_step, AdaptationDirective, ControllerConfig, CtlState};
use super::estimator::{calibrate, Estimator, EstimatorConfig};

pub const MIN_LOOP_DURATION_S: f64 = 60.0;

/// Everything a closed-loop run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopTrace {
    pub states: Vec<AffectState>,
    /// Latent arousal of the player at each state time.
    pub latent: Vec<TimedValue>,
    pub directives: Vec<AdaptationDirective>,
    /// Schedule events plus the events produced by directives.
    pub events: Vec<GameEvent>,
    pub recording: SessionRecording,
    pub baseline: Baseline,
}

impl LoopTrace {
    /// Fraction of states at or after `from_t` whose arousal lies in `band`.
    pub fn time_in_band(&self, band: (f64, f64), from_t: f64) -> f64 {
        let tail: Vec<&AffectState> = self.states.iter().filter(|s| s.t >= from_t - 1e-9).collect();
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|s| s.arousal >= band.0 && s.arousal <= band.1).count() as f64 / tail.len() as f64
    }

    /// State lines followed by directive lines, each group in time order.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            let _ = writeln!(out, "{}", s.to_line());
        }
        for d in &self.directives {
            let _ = writeln!(out, "{}", d.to_line());
        }
        out
    }

    /// Columns `t arousal level latent` for plotting.
    pub fn to_columns(&self) -> String {
        let mut out = String::from("t arousal level latent\n");
        for (s, l) in self.states.iter().zip(&self.latent) {
            let _ = writeln!(out, "{:.6} {:.6} {} {:.6}", s.t, s.arousal, s.level, l.value);
        }
        out
    }
}

/// Baseline of `model` from a simulated calibration phase at rest.
pub fn simulated_baseline(model: &PlayerModel, rates: &Rates, catalog: &Catalog, est: &EstimatorConfig) -> Result<Baseline> {
    let cfg = PhaseConfig { phases: vec![Phase::Calibration], seed: model.seed, ..PhaseConfig::default() };
    let schedule = build_protocol_schedule(&cfg, catalog)?;
    let rest = PlayerModel { initial_arousal: 0.0, ..model.clone() };
    let rec = generate_session(&rest, &schedule, rates, cfg.duration())?;
    calibrate(&rec, est.grid_hz)
}

/// Closed-loop setup. `baseline` defaults to [`simulated_baseline`].
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub player: PlayerModel,
    pub controller: ControllerConfig,
    pub estimator: EstimatorConfig,
    pub rates: Rates,
    pub schedule: PhaseSchedule,
    pub baseline: Option<Baseline>,
    pub duration_s: f64,
    /// When false, directives are logged but never reach the player.
    pub inject: bool,
}

impl ClosedLoop {
    pub fn new(player: PlayerModel, controller: ControllerConfig, duration_s: f64) -> Self {
        ClosedLoop {
            player,
            controller,
            estimator: EstimatorConfig { period_s: controller.period_s, ..EstimatorConfig::default() },
            rates: Rates::default(),
            schedule: PhaseSchedule::default(),
            baseline: None,
            duration_s,
            inject: true,
        }
    }

    pub fn run(&self, catalog: &Catalog) -> Result<LoopTrace> {
        self.controller.validate()?;
        if !(self.duration_s >= MIN_LOOP_DURATION_S) {
            return Err(Error::Config(format!("loop duration {} s, need >= {MIN_LOOP_DURATION_S}", self.duration_s)));
        }
        if (self.estimator.period_s - self.controller.period_s).abs() > 1e-12 {
            return Err(Error::Config("estimator and controller periods differ".into()));
        }
        self.schedule.validate()?;
        let baseline = match self.baseline {
            Some(b) => b,
            None => simulated_baseline(&self.player, &self.rates, catalog, &self.estimator)?,
        };
        let mut sim = Simulator::new(self.player.clone(), self.rates)?;
        for e in &self.schedule.events {
            sim.push_event(e.clone())?;
        }
        let mut est = Estimator::new(self.estimator, baseline)?;
        let keys: Vec<StreamKey> = sim.recording.streams.keys().cloned().collect();
        let mut fed = vec![0usize; keys.len()];
        let mut ctl = CtlState::default();
        let mut trace = LoopTrace {
            states: Vec::new(),
            latent: Vec::new(),
            directives: Vec::new(),
            events: Vec::new(),
            recording: SessionRecording::new(sim.recording.meta.clone()),
            baseline,
        };

        loop {
            for (key, n) in keys.iter().zip(fed.iter_mut()) {
                let stream = &sim.recording.streams[key];
                for p in &stream[*n..] {
                    est.push(&Sample { t: p.t, device_id: key.device_id.clone(), channel: key.channel, value: p.value })?;
                }
                *n = stream.len();
            }
            for state in est.poll()? {
                trace.latent.push(TimedValue::new(state.t, sim.state.arousal));
                let (directives, next) = control_step(state.t, &state, &self.controller, catalog, &ctl)?;
                ctl = next;
                for d in directives {
                    if self.inject {
                        sim.push_event(d.to_event())?;
                    }
                    trace.directives.push(d);
                }
                trace.states.push(state);
            }
            if sim.now() + sim.dt() >= self.duration_s - 1e-9 {
                break;
            }
            sim.advance()?;
        }
        trace.recording = sim.finish();
        trace.events = trace.recording.events.clone();
        Ok(trace)
    }
}

/// Closed loop with default estimator and rates, no schedule, and the
/// player's noise seeded by `seed`.
pub fn run_closed_loop(
    player: &PlayerModel,
    cfg: &ControllerConfig,
    catalog: &Catalog,
    duration_s: f64,
    seed: u64,
) -> Result<LoopTrace> {
    let player = PlayerModel { seed, ..player.clone() };
    ClosedLoop::new(player, *cfg, duration_s).run(catalog)
}
