//! Arousal estimation, level classification and reaction templates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::{Baseline, Scr};
use crate::signal::UniformSeries;
use crate::stats::{mean, pearson};
use crate::{Error, Result};

/// Shortest window accepted by [`arousal_index`].
pub const MIN_WINDOW_S: f64 = 5.0;
/// z-score magnitude that spans half of the arousal range.
const Z_SPAN: f64 = 6.0;

pub const DEFAULT_PRE_S: f64 = 2.0;
pub const DEFAULT_POST_S: f64 = 8.0;
pub const DEFAULT_GRID_HZ: f64 = 4.0;
pub const DEFAULT_MATCH_R: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Low,
    Medium,
    High,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "low" => Ok(Level::Low),
            "medium" => Ok(Level::Medium),
            "high" => Ok(Level::High),
            other => Err(format!("unknown level `{other}`")),
        }
    }
}

/// Arousal estimate at one instant. Valence is only present when supplied by
/// annotations; physiology alone does not provide it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffectState {
    pub t: f64,
    pub arousal: f64,
    pub valence: Option<f64>,
    pub valence_confidence: f64,
    pub level: Level,
}

impl AffectState {
    pub fn new(t: f64, arousal: f64, level: Level) -> Self {
        AffectState { t, arousal, valence: None, valence_confidence: 0.0, level }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.arousal) {
            return Err(Error::Invariant(format!("arousal {} outside [0, 1]", self.arousal)));
        }
        match self.valence {
            None if self.valence_confidence != 0.0 => {
                Err(Error::Invariant("valence confidence without valence".into()))
            }
            Some(v) if !(-1.0..=1.0).contains(&v) => Err(Error::Invariant(format!("valence {v} outside [-1, 1]"))),
            _ if !(0.0..=1.0).contains(&self.valence_confidence) => {
                Err(Error::Invariant("valence confidence outside [0, 1]".into()))
            }
            _ => Ok(()),
        }
    }

    /// `S <t> <arousal> <level> <valence|-> <valence_confidence>`
    pub fn to_line(&self) -> String {
        let valence = self.valence.map_or("-".to_string(), |v| format!("{v:.6}"));
        format!("S {:.6} {:.6} {} {} {:.6}", self.t, self.arousal, self.level, valence, self.valence_confidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArousalWeights {
    pub hr: f64,
    pub scl: f64,
    pub scr: f64,
}

impl Default for ArousalWeights {
    fn default() -> Self {
        ArousalWeights { hr: 1.0, scl: 1.0, scr: 1.0 }
    }
}

impl ArousalWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.hr, self.scl, self.scr];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("arousal weights must be >= 0 with a positive sum".into()));
        }
        Ok(())
    }
}

/// Window summaries that enter the arousal index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArousalFeatures {
    pub mean_hr: f64,
    pub mean_scl: f64,
    /// SCRs per minute within the window.
    pub scr_rate: f64,
}

impl ArousalFeatures {
    pub fn at_baseline(b: &Baseline) -> Self {
        ArousalFeatures { mean_hr: b.hr_mean, mean_scl: b.scl_mean, scr_rate: b.scr_rate }
    }

    /// `(z_hr, z_scl, z_scr)` against a baseline.
    pub fn z_scores(&self, b: &Baseline) -> (f64, f64, f64) {
        (
            (self.mean_hr - b.hr_mean) / b.hr_sd,
            (self.mean_scl - b.scl_mean) / b.scl_sd,
            (self.scr_rate - b.scr_rate) / b.scr_rate.max(1.0),
        )
    }
}

/// Maps z-scores to `[0, 1]`: `0.5 + Σ wᵢ zᵢ / (6 Σ wᵢ)`, clamped. With equal
/// weights ±3σ on every component spans the whole range.
pub fn arousal_from_z(z: (f64, f64, f64), w: &ArousalWeights) -> f64 {
    let total = w.hr + w.scl + w.scr;
    let a = 0.5 + (w.hr * z.0 + w.scl * z.1 + w.scr * z.2) / (Z_SPAN * total);
    a.clamp(0.0, 1.0)
}

pub fn arousal_from_features(f: &ArousalFeatures, b: &Baseline, w: &ArousalWeights) -> f64 {
    arousal_from_z(f.z_scores(b), w)
}

/// Arousal over one window. `tonic_window` is the skin conductance level over
/// the same interval as `hr_window`; `scrs_in_window` are the SCRs whose onset
/// falls inside it.
pub fn arousal_index(
    hr_window: &UniformSeries,
    tonic_window: &UniformSeries,
    scrs_in_window: &[Scr],
    baseline: &Baseline,
    weights: &ArousalWeights,
) -> Result<f64> {
    baseline.validate()?;
    weights.validate()?;
    if hr_window.is_empty() || tonic_window.is_empty() {
        return Err(Error::InsufficientData("empty feature window".into()));
    }
    let span = |s: &UniformSeries| s.len() as f64 / s.rate_hz;
    let (hr_span, eda_span) = (span(hr_window), span(tonic_window));
    let slack = hr_window.dt().max(tonic_window.dt()) + 1e-9;
    if hr_span < MIN_WINDOW_S - slack || eda_span < MIN_WINDOW_S - slack {
        return Err(Error::InsufficientData(format!("window shorter than {MIN_WINDOW_S} s")));
    }
    if (hr_window.start - tonic_window.start).abs() > slack || (hr_span - eda_span).abs() > slack {
        return Err(Error::InvalidParameter(format!(
            "hr window [{:.3}, +{hr_span:.3}] and eda window [{:.3}, +{eda_span:.3}] differ",
            hr_window.start, tonic_window.start
        )));
    }
    let f = ArousalFeatures {
        mean_hr: mean(&hr_window.values),
        mean_scl: mean(&tonic_window.values),
        scr_rate: scrs_in_window.len() as f64 / eda_span * 60.0,
    };
    Ok(arousal_from_features(&f, baseline, weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Boundary between low and medium.
    pub low_medium: f64,
    /// Boundary between medium and high.
    pub medium_high: f64,
    pub margin: f64,
    pub dwell_s: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { low_medium: 0.33, medium_high: 0.66, margin: 0.03, dwell_s: 3.0 }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.margin
            && self.low_medium + self.margin < self.medium_high - self.margin
            && self.low_medium > 0.0
            && self.medium_high < 1.0
            && self.dwell_s >= 0.0;
        if !ok {
            return Err(Error::InvalidParameter(format!("classifier thresholds {self:?}")));
        }
        Ok(())
    }

    fn level_without_hysteresis(&self, a: f64) -> Level {
        if a >= self.medium_high {
            Level::High
        } else if a >= self.low_medium {
            Level::Medium
        } else {
            Level::Low
        }
    }

    /// The level arousal points to from `current`, with the margin applied in
    /// the direction of travel.
    fn candidate(&self, a: f64, current: Level) -> Level {
        let up = self.level_without_hysteresis(a - self.margin);
        if up > current {
            return up;
        }
        let down = self.level_without_hysteresis(a + self.margin);
        if down < current {
            return down;
        }
        current
    }
}

/// Pending level change: the candidate level and when it was first seen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DwellState {
    pub pending: Option<(Level, f64)>,
}

/// One step of the hysteretic level classifier.
///
/// A cold start (`prior = None`) takes the plain threshold level. Afterwards
/// the level changes only once arousal has pointed past a threshold (by the
/// margin) at a single other level for `dwell_s`.
pub fn classify(
    t: f64,
    arousal: f64,
    prior: Option<Level>,
    dwell: DwellState,
    cfg: &ClassifierConfig,
) -> (Level, DwellState) {
    let Some(current) = prior else {
        return (cfg.level_without_hysteresis(arousal), DwellState::default());
    };
    let candidate = cfg.candidate(arousal, current);
    if candidate == current {
        return (current, DwellState::default());
    }
    let since = match dwell.pending {
        Some((level, since)) if level == candidate => since,
        _ => t,
    };
    if t - since >= cfg.dwell_s - 1e-9 {
        (candidate, DwellState::default())
    } else {
        (current, DwellState { pending: Some((candidate, since)) })
    }
}

/// Stateful wrapper around [`classify`] for one subject stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub cfg: ClassifierConfig,
    level: Option<Level>,
    dwell: DwellState,
}

impl Classifier {
    pub fn new(cfg: ClassifierConfig) -> Self {
        Classifier { cfg, level: None, dwell: DwellState::default() }
    }

    pub fn level(&self) -> Option<Level> {
        self.level
    }

    pub fn update(&mut self, t: f64, arousal: f64) -> Level {
        let (level, dwell) = classify(t, arousal, self.level, self.dwell, &self.cfg);
        self.level = Some(level);
        self.dwell = dwell;
        level
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpochChannel {
    Hr,
    Phasic,
}

impl EpochChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            EpochChannel::Hr => "hr",
            EpochChannel::Phasic => "phasic",
        }
    }
}

impl fmt::Display for EpochChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EpochChannel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hr" => Ok(EpochChannel::Hr),
            "phasic" => Ok(EpochChannel::Phasic),
            other => Err(format!("unknown epoch channel `{other}`")),
        }
    }
}

/// Grid shared by epochs and templates: `round((pre + post) * rate)` points
/// starting `pre_s` before the event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochGrid {
    pub pre_s: f64,
    pub post_s: f64,
    pub rate_hz: f64,
}

impl Default for EpochGrid {
    fn default() -> Self {
        EpochGrid { pre_s: DEFAULT_PRE_S, post_s: DEFAULT_POST_S, rate_hz: DEFAULT_GRID_HZ }
    }
}

impl EpochGrid {
    pub fn len(&self) -> usize {
        ((self.pre_s + self.post_s) * self.rate_hz).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of grid points before the event.
    pub fn pre_len(&self) -> usize {
        (self.pre_s * self.rate_hz).round() as usize
    }

    /// Offset of grid point `i` from the event time.
    pub fn offset(&self, i: usize) -> f64 {
        i as f64 / self.rate_hz - self.pre_s
    }

    fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0 && self.pre_s >= 0.0 && self.post_s > 0.0) || self.pre_len() == 0 {
            return Err(Error::InvalidParameter(format!("epoch grid {self:?} needs a pre-onset segment")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub event_t: f64,
    pub channel: EpochChannel,
    pub grid: EpochGrid,
    pub values: Vec<f64>,
}

fn value_at(series: &UniformSeries, t: f64) -> Option<f64> {
    let x = (t - series.start) * series.rate_hz;
    let last = series.len().checked_sub(1)? as f64;
    if x < -1e-9 || x > last + 1e-9 {
        return None;
    }
    let x = x.clamp(0.0, last);
    let i = x.floor() as usize;
    let w = x - i as f64;
    if w == 0.0 || i + 1 >= series.len() {
        Some(series.values[i])
    } else {
        Some(series.values[i] + w * (series.values[i + 1] - series.values[i]))
    }
}

/// Cuts the window `[event_t - pre_s, event_t + post_s)` out of `series`,
/// resamples it to the grid and subtracts the pre-onset mean.
pub fn extract_epoch(series: &UniformSeries, channel: EpochChannel, event_t: f64, grid: EpochGrid) -> Result<Epoch> {
    grid.validate()?;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let t = event_t + grid.offset(i);
        match value_at(series, t) {
            Some(v) => values.push(v),
            None => {
                return Err(Error::InsufficientData(format!(
                    "series [{:.3}, {:.3}] does not cover epoch around {event_t:.3}",
                    series.start,
                    series.end()
                )))
            }
        }
    }
    let base = mean(&values[..grid.pre_len()]);
    for v in &mut values {
        *v -= base;
    }
    Ok(Epoch { event_t, channel, grid, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionTemplate {
    pub class_id: String,
    pub channel: EpochChannel,
    pub grid: EpochGrid,
    pub mean_curve: Vec<f64>,
    pub n: usize,
}

/// Pointwise mean of epochs. Each point sums its values in sorted order, so the
/// result does not depend on the order of `epochs`.
pub fn build_template(class_id: &str, epochs: &[Epoch]) -> Result<ReactionTemplate> {
    let Some(first) = epochs.first() else {
        return Err(Error::InsufficientData("template needs at least one epoch".into()));
    };
    if let Some(e) = epochs.iter().find(|e| e.grid != first.grid || e.channel != first.channel) {
        return Err(Error::InvalidParameter(format!(
            "epoch at {:.3} has a different grid or channel than the first",
            e.event_t
        )));
    }
    let n = epochs.len();
    let mut column = Vec::with_capacity(n);
    let mean_curve = (0..first.values.len())
        .map(|i| {
            column.clear();
            column.extend(epochs.iter().map(|e| e.values[i]));
            column.sort_unstable_by(f64::total_cmp);
            column.iter().sum::<f64>() / n as f64
        })
        .collect();
    Ok(ReactionTemplate { class_id: class_id.to_string(), channel: first.channel, grid: first.grid, mean_curve, n })
}

/// Pearson correlation between epoch and template over the post-onset segment.
/// A constant epoch correlates with nothing and yields `r = 0`.
pub fn match_template(epoch: &Epoch, template: &ReactionTemplate, r_threshold: f64) -> Result<(f64, bool)> {
    if epoch.grid != template.grid || epoch.channel != template.channel {
        return Err(Error::InvalidParameter("epoch and template grids differ".into()));
    }
    let k = template.grid.pre_len();
    let post = &template.mean_curve[k..];
    if post.iter().all(|v| *v == post[0]) {
        return Err(Error::InvalidParameter(format!("template `{}` is constant after onset", template.class_id)));
    }
    let r = pearson(&epoch.values[k..], post).unwrap_or(0.0);
    Ok((r, r >= r_threshold))
}

/// `T <class_id> <channel> <pre_s> <post_s> <grid_rate_hz> <n> <v,v,...>`
pub fn write_templates(templates: &[ReactionTemplate]) -> String {
    let mut out = String::new();
    for t in templates {
        let curve: Vec<String> = t.mean_curve.iter().map(|v| format!("{:.6}", v + 0.0)).collect();
        out.push_str(&format!(
            "T {} {} {} {} {} {} {}\n",
            t.class_id,
            t.channel,
            t.grid.pre_s,
            t.grid.post_s,
            t.grid.rate_hz,
            t.n,
            curve.join(",")
        ));
    }
    out
}

pub fn parse_templates(text: &str) -> Result<Vec<ReactionTemplate>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let ["T", class_id, channel, pre, post, rate, n, curve] = f[..] else {
            return Err(Error::parse(line_no, "expected `T <class> <channel> <pre> <post> <rate> <n> <curve>`"));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(line_no, format!("`{s}`: {e}")));
        let grid = EpochGrid { pre_s: num(pre)?, post_s: num(post)?, rate_hz: num(rate)? };
        let mean_curve = curve.split(',').map(num).collect::<Result<Vec<f64>>>()?;
        let n: usize = n.parse().map_err(|e| Error::parse(line_no, format!("count `{n}`: {e}")))?;
        if n == 0 || mean_curve.len() != grid.len() {
            return Err(Error::parse(line_no, "template count or curve length does not match its grid"));
        }
        out.push(ReactionTemplate {
            class_id: class_id.to_string(),
            channel: channel.parse().map_err(|e: String| Error::parse(line_no, e))?,
            grid,
            mean_curve,
            n,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> Baseline {
        Baseline { hr_mean: 65.0, hr_sd: 2.0, scl_mean: 3.0, scl_sd: 0.1, scr_rate: 2.0, duration_s: 120.0 }
    }

    #[test]
    fn arousal_examples() {
        let w = ArousalWeights::default();
        assert_eq!(arousal_from_z((0.0, 0.0, 0.0), &w), 0.5);
        assert_eq!(arousal_from_z((3.0, 3.0, 3.0), &w), 1.0);
        assert!((arousal_from_z((3.0, 0.0, 0.0), &w) - (0.5 + 3.0 / 18.0)).abs() < 1e-12);
        let b = baseline();
        assert_eq!(arousal_from_features(&ArousalFeatures::at_baseline(&b), &b, &w), 0.5);
    }

    #[test]
    fn arousal_index_windows() {
        let b = baseline();
        let w = ArousalWeights::default();
        let hr = UniformSeries::new(10.0, 4.0, vec![65.0; 20]);
        let tonic = UniformSeries::new(10.0, 8.0, vec![3.0; 40]);
        let scr = Scr { onset_t: 11.0, peak_t: 12.0, amplitude: 0.1, rise_time: 1.0 };
        // No SCRs against a baseline of 2/min: z_scr = -1.
        let a = arousal_index(&hr, &tonic, &[], &b, &w).unwrap();
        assert!((a - (0.5 - 1.0 / 18.0)).abs() < 1e-12);
        // One SCR in 10 s = 6/min: z_scr = +2.
        let hr10 = UniformSeries::new(10.0, 4.0, vec![65.0; 40]);
        let tonic10 = UniformSeries::new(10.0, 8.0, vec![3.0; 80]);
        let a = arousal_index(&hr10, &tonic10, &[scr], &b, &w).unwrap();
        assert!((a - (0.5 + 2.0 / 18.0)).abs() < 1e-12, "{a}");
        assert!(arousal_index(&UniformSeries::new(20.0, 4.0, vec![65.0; 20]), &tonic, &[], &b, &w).is_err());
        assert!(arousal_index(&UniformSeries::new(10.0, 4.0, vec![65.0; 8]), &tonic, &[], &b, &w).is_err());
    }

    #[test]
    fn cold_start_medium() {
        let cfg = ClassifierConfig::default();
        let (level, _) = classify(0.0, 0.5, None, DwellState::default(), &cfg);
        assert_eq!(level, Level::Medium);
    }

    #[test]
    fn step_switches_after_dwell() {
        let mut c = Classifier::new(ClassifierConfig::default());
        assert_eq!(c.update(0.0, 0.5), Level::Medium);
        assert_eq!(c.update(1.0, 0.5), Level::Medium);
        // Step at t = 2.
        assert_eq!(c.update(2.0, 0.9), Level::Medium);
        assert_eq!(c.update(3.0, 0.9), Level::Medium);
        assert_eq!(c.update(4.0, 0.9), Level::Medium);
        assert_eq!(c.update(5.0, 0.9), Level::High);
        assert_eq!(c.update(6.0, 0.9), Level::High);
    }

    #[test]
    fn oscillation_inside_margin_never_switches() {
        let mut c = Classifier::new(ClassifierConfig::default());
        c.update(0.0, 0.5);
        for i in 1..100 {
            let a = if i % 2 == 0 { 0.65 } else { 0.67 };
            assert_eq!(c.update(i as f64, a), Level::Medium);
        }
    }

    #[test]
    fn interrupted_dwell_restarts() {
        let mut c = Classifier::new(ClassifierConfig::default());
        c.update(0.0, 0.5);
        c.update(1.0, 0.9);
        c.update(2.0, 0.9);
        c.update(3.0, 0.5);
        assert_eq!(c.update(4.0, 0.9), Level::Medium);
        assert_eq!(c.update(6.0, 0.9), Level::Medium);
        assert_eq!(c.update(7.0, 0.9), Level::High);
    }

    fn series_fn(f: impl Fn(f64) -> f64) -> UniformSeries {
        let rate = 16.0;
        UniformSeries::new(0.0, rate, (0..(60.0 * rate) as usize).map(|i| f(i as f64 / rate)).collect())
    }

    #[test]
    fn epoch_constant_and_step() {
        let grid = EpochGrid::default();
        let e = extract_epoch(&series_fn(|_| 4.2), EpochChannel::Phasic, 20.0, grid).unwrap();
        assert_eq!(e.values.len(), 40);
        assert!(e.values.iter().all(|v| *v == 0.0));
        let e = extract_epoch(&series_fn(|t| if t >= 20.0 { 1.0 } else { 0.0 }), EpochChannel::Phasic, 20.0, grid)
            .unwrap();
        assert!(e.values[..8].iter().all(|v| *v == 0.0));
        assert!(e.values[8..].iter().all(|v| *v == 1.0));
        assert!(extract_epoch(&series_fn(|_| 0.0), EpochChannel::Phasic, 55.0, grid).is_err());
        assert!(extract_epoch(&series_fn(|_| 0.0), EpochChannel::Phasic, 1.0, grid).is_err());
    }

    fn epoch(values: Vec<f64>) -> Epoch {
        Epoch { event_t: 0.0, channel: EpochChannel::Phasic, grid: EpochGrid::default(), values }
    }

    fn bump() -> Vec<f64> {
        (0..40).map(|i| if i < 8 { 0.0 } else { ((i - 8) as f64 * 0.3).sin().max(0.0) }).collect()
    }

    #[test]
    fn template_identity_and_symmetry() {
        let v = bump();
        let t = build_template("x", &[epoch(v.clone())]).unwrap();
        assert_eq!(t.mean_curve, v);
        assert_eq!(t.n, 1);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let t = build_template("x", &[epoch(v.clone()), epoch(neg)]).unwrap();
        assert!(t.mean_curve.iter().all(|x| *x == 0.0));
        assert!(build_template("x", &[]).is_err());
        let mut other = epoch(v);
        other.grid.rate_hz = 8.0;
        assert!(build_template("x", &[epoch(bump()), other]).is_err());
    }

    #[test]
    fn match_identity_and_negation() {
        let t = build_template("x", &[epoch(bump())]).unwrap();
        let (r, m) = match_template(&epoch(bump()), &t, DEFAULT_MATCH_R).unwrap();
        assert!((r - 1.0).abs() < 1e-12 && m);
        let (r, m) = match_template(&epoch(bump().iter().map(|x| -x).collect()), &t, DEFAULT_MATCH_R).unwrap();
        assert!((r + 1.0).abs() < 1e-12 && !m);
        let flat = build_template("x", &[epoch(vec![0.0; 40])]).unwrap();
        assert!(match_template(&epoch(bump()), &flat, 0.6).is_err());
    }

    #[test]
    fn template_lines_round_trip() {
        let t = build_template("enemies", &[epoch(bump()), epoch(vec![0.5; 40])]).unwrap();
        let text = write_templates(std::slice::from_ref(&t));
        let back = parse_templates(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].class_id, "enemies");
        assert_eq!(back[0].grid, t.grid);
        for (a, b) in back[0].mean_curve.iter().zip(&t.mean_curve) {
            assert!((a - b).abs() <= 5e-7);
        }
        assert_eq!(write_templates(&back), text);
        assert!(matches!(parse_templates("T a phasic 2 8 4 1 0,1\n"), Err(Error::Parse { line: 1, .. })));
    }
}
