//! Multi-device clock alignment.
//!
//! Offsets are additive: a device with offset `δ` has its timestamps mapped
//! onto the reference clock as `t + δ`. Equivalently, if `other(t) ≈ ref(t + δ)`
//! then [`estimate_offset`] returns `δ`, and [`merge_streams`] with that offset
//! brings the two signals into register.

use std::collections::{BTreeMap, HashMap};

use super::{GameEvent, SessionRecording, StreamKey, TimedValue};
use crate::stats::{median, pearson, quantize6};
use crate::{Error, Result};

/// Offsets at or beyond this magnitude are treated as misconfiguration.
pub const MAX_CLOCK_OFFSET_S: f64 = 60.0;

const MIN_PEAK_CORRELATION: f64 = 0.5;
const MIN_SPAN_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClockOffset {
    pub device_id: String,
    pub offset_s: f64,
}

impl ClockOffset {
    pub fn new(device_id: impl Into<String>, offset_s: f64) -> Result<Self> {
        if !(offset_s.is_finite() && offset_s.abs() < MAX_CLOCK_OFFSET_S) {
            return Err(Error::InvalidParameter(format!(
                "clock offset {offset_s} s outside the ±{MAX_CLOCK_OFFSET_S} s sanity bound"
            )));
        }
        Ok(ClockOffset { device_id: device_id.into(), offset_s })
    }
}

fn median_spacing(s: &[TimedValue]) -> f64 {
    let d: Vec<f64> = s.windows(2).map(|w| w[1].t - w[0].t).collect();
    median(&d)
}

/// Values on the absolute grid `k / rate` for every `k` inside the span.
fn on_absolute_grid(s: &[TimedValue], rate: f64) -> (i64, Vec<f64>) {
    let k0 = (s[0].t * rate - 1e-9).ceil() as i64;
    let k1 = (s[s.len() - 1].t * rate + 1e-9).floor() as i64;
    let times: Vec<f64> = (k0..=k1).map(|k| k as f64 / rate).collect();
    let vals = super::interpolate_at(s, &times)
        .into_iter()
        .map(|v| v.unwrap_or(s[s.len() - 1].value))
        .collect();
    (k0, vals)
}

/// Finds the clock offset of `other` relative to `reference` by maximizing
/// normalized cross-correlation over lags within `±max_lag_s`.
///
/// Both sequences are resampled to a shared grid at the finer of their two
/// native rates (capped at 1 kHz), so the result resolves to one grid step.
pub fn estimate_offset(
    reference: &[TimedValue],
    other: &[TimedValue],
    other_device: &str,
    max_lag_s: f64,
) -> Result<ClockOffset> {
    for (name, s) in [("reference", reference), ("other", other)] {
        if s.len() < 2 || s[s.len() - 1].t - s[0].t < MIN_SPAN_S {
            return Err(Error::InsufficientData(format!("{name} sequence shorter than {MIN_SPAN_S} s")));
        }
    }
    if !(max_lag_s > 0.0 && max_lag_s < MAX_CLOCK_OFFSET_S) {
        return Err(Error::InvalidParameter(format!("max lag {max_lag_s} s out of range")));
    }
    let rate = (1.0 / median_spacing(reference).min(median_spacing(other))).clamp(1.0, 1000.0);
    let (r0, rv) = on_absolute_grid(reference, rate);
    let (o0, ov) = on_absolute_grid(other, rate);
    let max_lag = (max_lag_s * rate).floor() as i64;
    let shortest = rv.len().min(ov.len()) as i64;
    let min_overlap = ((MIN_SPAN_S * rate) as i64).max(shortest / 2).max(2);

    let mut best: Option<(f64, i64)> = None;
    // Lag j pairs reference grid point k with other grid point k - j,
    // i.e. compares ref(s) against other(s - j / rate).
    for j in -max_lag..=max_lag {
        let lo = r0.max(o0 + j);
        let hi = (r0 + rv.len() as i64).min(o0 + j + ov.len() as i64);
        if hi - lo < min_overlap {
            continue;
        }
        let a = &rv[(lo - r0) as usize..(hi - r0) as usize];
        let b = &ov[(lo - j - o0) as usize..(hi - j - o0) as usize];
        if let Some(r) = pearson(a, b) {
            if best.is_none_or(|(br, _)| r > br) {
                best = Some((r, j));
            }
        }
    }
    match best {
        Some((r, j)) if r >= MIN_PEAK_CORRELATION => ClockOffset::new(other_device, j as f64 / rate),
        Some((r, _)) => Err(Error::AmbiguousAlignment { peak: r }),
        None => Err(Error::InsufficientData("sequences never overlap within the lag range".into())),
    }
}

/// Merges recordings onto the first one's clock.
///
/// Every device of a non-reference recording needs an offset. A stream present
/// in more than one input is accepted only if the shifted copies agree
/// sample-for-sample. Events are unioned and re-sorted.
pub fn merge_streams(recordings: &[SessionRecording], offsets: &[ClockOffset]) -> Result<SessionRecording> {
    let Some(reference) = recordings.first() else {
        return Err(Error::EmptyInput);
    };
    let offset_of: HashMap<&str, f64> = offsets.iter().map(|o| (o.device_id.as_str(), o.offset_s)).collect();

    let mut meta = reference.meta.clone();
    let mut streams: BTreeMap<StreamKey, Vec<TimedValue>> = reference.streams.clone();
    let mut events: Vec<GameEvent> = reference.events.clone();

    for rec in &recordings[1..] {
        for decl in &rec.meta.streams {
            let dev = decl.key.device_id.as_str();
            let Some(&offset) = offset_of.get(dev) else {
                return Err(Error::InvalidParameter(format!("no clock offset for device `{dev}`")));
            };
            let shifted: Vec<TimedValue> = rec
                .streams
                .get(&decl.key)
                .map(|v| v.iter().map(|s| TimedValue::new(quantize6(s.t + offset), s.value)).collect())
                .unwrap_or_default();
            match streams.get(&decl.key) {
                Some(existing) if *existing != shifted => {
                    return Err(Error::Invariant(format!("conflicting duplicate stream {}", decl.key)));
                }
                Some(_) => {}
                None => {
                    meta.streams.push(decl.clone());
                    streams.insert(decl.key.clone(), shifted);
                }
            }
        }
        for e in &rec.events {
            if !events.contains(e) {
                events.push(e.clone());
            }
        }
    }
    meta.streams.sort_by(|a, b| a.key.cmp(&b.key));
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let merged = SessionRecording { meta, streams, events };
    merged.validate()?;
    Ok(merged)
}
