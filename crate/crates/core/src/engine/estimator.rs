//! Causal arousal estimation.
//!
//! The [`Estimator`] consumes samples in per-stream time order and, once every
//! required stream has reached an evaluation time `T`, computes the affect
//! state at `T` from samples with `t <= T` only. Offline analysis and the live
//! service drive the same estimator, so both produce the same trace.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::affect::{arousal_index, AffectState, ArousalWeights, Classifier, ClassifierConfig, MIN_WINDOW_S};
use crate::features::{
    compute_baseline, detect_beats, detect_scrs, eda_decompose, ibi_to_hr, Baseline, HrSeries, Scr,
};
use crate::signal::{interpolate_at, resample, Channel, Phase, Sample, SessionRecording, StreamKey, TimedValue, UniformSeries};
use crate::stats::median;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Seconds between affect states.
    pub period_s: f64,
    /// Feature window ending at each evaluation time.
    pub window_s: f64,
    /// Pulse history used for beat detection.
    pub pulse_lookback_s: f64,
    /// EDA history used for decomposition; at least 30 s.
    pub eda_lookback_s: f64,
    /// Grid rate of the heart-rate and tonic windows.
    pub grid_hz: f64,
    pub weights: ArousalWeights,
    pub classifier: ClassifierConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            period_s: 1.0,
            window_s: MIN_WINDOW_S,
            pulse_lookback_s: 10.0,
            eda_lookback_s: 40.0,
            grid_hz: 4.0,
            weights: ArousalWeights::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return bad(format!("period_s {} must be > 0", self.period_s));
        }
        if !(self.window_s >= MIN_WINDOW_S && self.window_s.is_finite()) {
            return bad(format!("window_s {} must be >= {MIN_WINDOW_S}", self.window_s));
        }
        if !(self.pulse_lookback_s >= self.window_s.max(5.0)) {
            return bad("pulse_lookback_s must cover the window and at least 5 s".into());
        }
        if !(self.eda_lookback_s >= self.window_s.max(30.0) && self.eda_lookback_s.is_finite()) {
            return bad("eda_lookback_s must cover the window and at least 30 s".into());
        }
        if !(self.grid_hz >= 1.0 && self.grid_hz <= 100.0) {
            return bad(format!("grid_hz {} outside [1, 100]", self.grid_hz));
        }
        self.weights.validate()?;
        self.classifier.validate()
    }

    fn lookback(&self) -> f64 {
        self.pulse_lookback_s.max(self.eda_lookback_s)
    }
}

/// Heart-rate source of a session or stream set: pulse when any pulse stream
/// exists, device-reported heart rate otherwise.
fn heart_channel(has_pulse: bool) -> Channel {
    if has_pulse {
        Channel::Pulse
    } else {
        Channel::Hr
    }
}

fn inferred_rate(samples: &[TimedValue]) -> Result<f64> {
    let dts: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    if dts.is_empty() {
        return Err(Error::InsufficientData("need >= 2 samples to infer a rate".into()));
    }
    Ok(1.0 / median(&dts))
}

/// Values of `series` at `times`, holding the end values outside its span.
fn sample_held(series: &[TimedValue], times: &[f64]) -> Vec<f64> {
    let (first, last) = (series[0], series[series.len() - 1]);
    interpolate_at(series, times)
        .into_iter()
        .zip(times)
        .map(|(v, &t)| v.unwrap_or(if t < first.t { first.value } else { last.value }))
        .collect()
}

/// Heart rate from a pulse waveform or device heart-rate samples.
pub fn heart_rate(samples: &[TimedValue], channel: Channel, out_rate_hz: f64) -> Result<HrSeries> {
    match channel {
        Channel::Pulse => {
            let pulse = resample(samples, inferred_rate(samples)?.min(10_000.0))?;
            ibi_to_hr(&detect_beats(&pulse)?, out_rate_hz)
        }
        Channel::Hr => HrSeries::from_device(samples, out_rate_hz),
        other => Err(Error::InvalidParameter(format!("no heart rate from {other}"))),
    }
}

/// Tonic and phasic EDA plus the SCRs found in the phasic part.
pub fn eda_features(samples: &[TimedValue]) -> Result<(UniformSeries, UniformSeries, Vec<Scr>)> {
    let eda = resample(samples, inferred_rate(samples)?)?;
    let (tonic, phasic) = eda_decompose(&eda)?;
    let scrs = detect_scrs(&phasic);
    Ok((tonic, phasic, scrs))
}

fn slice(samples: &[TimedValue], lo: f64, hi: f64) -> &[TimedValue] {
    let a = samples.partition_point(|s| s.t < lo);
    let b = samples.partition_point(|s| s.t <= hi);
    &samples[a..b.max(a)]
}

/// Baseline over the calibration phase of a session.
pub fn calibrate(rec: &SessionRecording, hr_rate_hz: f64) -> Result<Baseline> {
    let (lo, hi) = rec
        .phase_span(Phase::Calibration)
        .ok_or_else(|| Error::InsufficientData("session has no calibration phase".into()))?;
    let hi = hi.unwrap_or_else(|| rec.end_time());
    let has_pulse = rec.first_stream(Channel::Pulse).is_some();
    let (_, heart) = rec
        .first_stream(heart_channel(has_pulse))
        .ok_or_else(|| Error::InsufficientData("session has no pulse or heart-rate stream".into()))?;
    let (_, eda) = rec
        .first_stream(Channel::Eda)
        .ok_or_else(|| Error::InsufficientData("session has no eda stream".into()))?;
    let hr = heart_rate(slice(heart, lo, hi), heart_channel(has_pulse), hr_rate_hz)?;
    let (tonic, _, scrs) = eda_features(slice(eda, lo, hi))?;
    compute_baseline(&hr, &tonic, &scrs)
}

/// Streaming estimator for one subject.
#[derive(Debug, Clone)]
pub struct Estimator {
    cfg: EstimatorConfig,
    baseline: Baseline,
    buffers: BTreeMap<StreamKey, VecDeque<TimedValue>>,
    classifier: Classifier,
    next_k: u64,
}

impl Estimator {
    pub fn new(cfg: EstimatorConfig, baseline: Baseline) -> Result<Self> {
        cfg.validate()?;
        baseline.validate()?;
        Ok(Estimator { classifier: Classifier::new(cfg.classifier), cfg, baseline, buffers: BTreeMap::new(), next_k: 1 })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    /// Next time a state will be produced.
    pub fn next_eval(&self) -> f64 {
        self.next_k as f64 * self.cfg.period_s
    }

    /// Adds a sample. Samples of one stream must arrive in increasing time.
    pub fn push(&mut self, s: &Sample) -> Result<()> {
        if !matches!(s.channel, Channel::Pulse | Channel::Hr | Channel::Eda) {
            return Ok(());
        }
        let buf = self.buffers.entry(s.key()).or_default();
        if let Some(last) = buf.back() {
            if s.t <= last.t {
                return Err(Error::Invariant(format!("stream {} not increasing at t = {}", s.key(), s.t)));
            }
        }
        buf.push_back(TimedValue::new(s.t, s.value));
        Ok(())
    }

    fn stream(&self, channel: Channel) -> Option<&VecDeque<TimedValue>> {
        self.buffers.iter().find(|(k, _)| k.channel == channel).map(|(_, v)| v)
    }

    /// Time up to which every required stream is complete, if both a heart
    /// and an EDA stream have been seen.
    pub fn watermark(&self) -> Option<f64> {
        let heart = self.stream(heart_channel(self.stream(Channel::Pulse).is_some()))?;
        let eda = self.stream(Channel::Eda)?;
        Some(heart.back()?.t.min(eda.back()?.t))
    }

    /// Affect state at `t` from samples up to `t`, or `None` while the
    /// history is too short.
    pub fn state_at(&mut self, t: f64) -> Result<Option<AffectState>> {
        let has_pulse = self.stream(Channel::Pulse).is_some();
        let (Some(heart), Some(eda)) = (self.stream(heart_channel(has_pulse)), self.stream(Channel::Eda)) else {
            return Ok(None);
        };
        let cfg = self.cfg;
        let window_lo = t - cfg.window_s;
        let heart: Vec<TimedValue> = heart.iter().copied().filter(|s| s.t >= t - cfg.pulse_lookback_s && s.t <= t).collect();
        let eda: Vec<TimedValue> = eda.iter().copied().filter(|s| s.t >= t - cfg.eda_lookback_s && s.t <= t).collect();
        let n = (cfg.window_s * cfg.grid_hz).round() as usize;
        let grid: Vec<f64> = (0..n).map(|k| window_lo + k as f64 / cfg.grid_hz).collect();

        let hr = match heart_rate(&heart, heart_channel(has_pulse), cfg.grid_hz) {
            Ok(hr) => hr,
            Err(Error::InsufficientData(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (tonic, _, scrs) = match eda_features(&eda) {
            Ok(f) => f,
            Err(Error::InsufficientData(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if tonic.start > window_lo + 1e-9 || hr.series.start > window_lo + 1e-9 {
            return Ok(None);
        }
        let hr_window = UniformSeries::new(window_lo, cfg.grid_hz, sample_held(&hr.series.to_timed(), &grid));
        let tonic_window = UniformSeries::new(window_lo, cfg.grid_hz, sample_held(&tonic.to_timed(), &grid));
        let recent: Vec<Scr> = scrs.into_iter().filter(|s| s.onset_t >= window_lo && s.onset_t < t).collect();
        let a = arousal_index(&hr_window, &tonic_window, &recent, &self.baseline, &cfg.weights)?;
        let level = self.classifier.update(t, a);
        Ok(Some(AffectState::new(t, a, level)))
    }

    /// Produces every state whose evaluation time is at or before the
    /// watermark, then drops history no later evaluation needs.
    pub fn poll(&mut self) -> Result<Vec<AffectState>> {
        let Some(mark) = self.watermark() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        while self.next_eval() <= mark + 1e-9 {
            let t = self.next_eval();
            self.next_k += 1;
            if let Some(s) = self.state_at(t)? {
                out.push(s);
            }
        }
        let keep_from = self.next_eval() - self.cfg.lookback() - 1.0;
        for buf in self.buffers.values_mut() {
            while buf.len() > 2 && buf[1].t < keep_from {
                buf.pop_front();
            }
        }
        Ok(out)
    }

    /// Final state at the current watermark when it falls between
    /// evaluation times; used on shutdown.
    pub fn flush(&mut self) -> Result<Option<AffectState>> {
        let Some(mark) = self.watermark() else {
            return Ok(None);
        };
        if mark <= self.next_eval() - self.cfg.period_s + 1e-9 {
            return Ok(None);
        }
        self.state_at(mark)
    }
}

/// Offline run over a whole session: samples are replayed in time order and
/// the estimator is polled after each one.
pub fn estimate_session(rec: &SessionRecording, cfg: EstimatorConfig, baseline: Baseline) -> Result<Vec<AffectState>> {
    let mut est = Estimator::new(cfg, baseline)?;
    let mut out = Vec::new();
    for s in merged_samples(rec) {
        est.push(&s)?;
        out.extend(est.poll()?);
    }
    Ok(out)
}

/// All samples of a session in time order; ties go by stream key.
pub fn merged_samples(rec: &SessionRecording) -> Vec<Sample> {
    let mut all: Vec<Sample> = rec
        .streams
        .iter()
        .flat_map(|(k, v)| {
            v.iter().map(move |p| Sample { t: p.t, device_id: k.device_id.clone(), channel: k.channel, value: p.value })
        })
        .collect();
    all.sort_by(|a, b| a.t.total_cmp(&b.t).then_with(|| a.key().cmp(&b.key())));
    all
}
