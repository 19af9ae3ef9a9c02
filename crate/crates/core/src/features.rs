//! Signal conditioning and physiological features.
//!
//! Heart activity: [`detect_beats`] finds pulse peaks with an energy
//! threshold, [`ibi_to_hr`] converts them to a uniform heart-rate series with
//! artifact rejection. Electrodermal activity: [`eda_decompose`] separates the
//! slow tonic level from the phasic part, [`detect_scrs`] finds skin
//! conductance responses in the phasic part. [`compute_baseline`] summarizes a
//! calibration segment.

use serde::{Deserialize, Serialize};

use crate::signal::{TimedValue, UniformSeries};
use crate::stats::{floor_count, mean, median, median_sorted, std_dev};
use crate::{Error, Result};

/// Window of the running median that estimates the tonic level.
pub const TONIC_WINDOW_S: f64 = 20.0;
/// Minimum SCR amplitude, µS.
pub const SCR_MIN_AMPLITUDE: f64 = 0.01;
/// Phasic slope that opens an SCR, µS/s.
pub const SCR_ONSET_SLOPE: f64 = 0.02;
pub const SCR_MIN_RISE_S: f64 = 0.25;
pub const SCR_MAX_RISE_S: f64 = 10.0;
/// Moving average applied to the phasic signal before differentiation.
const SCR_SMOOTH_S: f64 = 0.5;

const BEAT_REFRACTORY_S: f64 = 0.3;
const IBI_MIN_S: f64 = 0.3;
const IBI_MAX_S: f64 = 2.0;
const IBI_MAX_JUMP: f64 = 0.25;

pub const HR_SD_FLOOR: f64 = 0.5;
pub const SCL_SD_FLOOR: f64 = 0.01;
pub const MIN_BASELINE_S: f64 = 60.0;

fn odd_width(window_s: f64, rate_hz: f64) -> usize {
    let n = floor_count(window_s * rate_hz).max(1);
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Centered moving average over `width` samples (odd). Near the ends the
/// window shrinks symmetrically so it stays centered.
fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let n = values.len();
    let half = width / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}

/// Centered moving average of width `floor(window_s * rate)` samples, rounded
/// up to odd.
pub fn smooth(series: &UniformSeries, window_s: f64) -> UniformSeries {
    let width = odd_width(window_s, series.rate_hz);
    UniformSeries::new(series.start, series.rate_hz, moving_average(&series.values, width))
}

/// Running median over a centered window of `width` samples (odd). Windows
/// are clipped at the series ends.
fn running_median(values: &[f64], width: usize) -> Vec<f64> {
    running_median_masked(values, &vec![true; values.len()], width, values)
}

/// As [`running_median`] over the samples flagged in `keep` only. Where a
/// window holds no kept sample the value comes from `fallback`.
fn running_median_masked(values: &[f64], keep: &[bool], width: usize, fallback: &[f64]) -> Vec<f64> {
    let n = values.len();
    let half = width / 2;
    let mut window: Vec<f64> = Vec::with_capacity(width + 1);
    let insert = |w: &mut Vec<f64>, v: f64| {
        let pos = w.partition_point(|x| x.total_cmp(&v).is_lt());
        w.insert(pos, v);
    };
    for j in 0..half.min(n) {
        if keep[j] {
            insert(&mut window, values[j]);
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i + half < n && keep[i + half] {
            insert(&mut window, values[i + half]);
        }
        if i > half && keep[i - half - 1] {
            let old = values[i - half - 1];
            let pos = window.partition_point(|x| x.total_cmp(&old).is_lt());
            window.remove(pos);
        }
        out.push(if window.is_empty() { fallback[i] } else { median_sorted(&window) });
    }
    out
}

/// Beat times (seconds) in a uniformly sampled pulse waveform.
///
/// The waveform is band-limited as the difference of 0.1 s and 0.6 s moving
/// averages and squared. Peaks of the positive lobe count as beats when they
/// exceed half the median of the last eight accepted peak heights; beats closer
/// than 0.3 s keep the taller one. Peak times are refined by parabolic
/// interpolation.
pub fn detect_beats(pulse: &UniformSeries) -> Result<Vec<f64>> {
    if pulse.rate_hz < 50.0 {
        return Err(Error::InvalidParameter(format!("pulse rate {} Hz below 50 Hz", pulse.rate_hz)));
    }
    if (pulse.len() as f64) / pulse.rate_hz < 5.0 {
        return Err(Error::InsufficientData("pulse shorter than 5 s".into()));
    }
    let fast = moving_average(&pulse.values, odd_width(0.1, pulse.rate_hz));
    let slow = moving_average(&pulse.values, odd_width(0.6, pulse.rate_hz));
    let band: Vec<f64> = fast.iter().zip(&slow).map(|(f, s)| f - s).collect();
    let energy: Vec<f64> = band.iter().map(|b| b * b).collect();

    // Seed the height history with the strongest peak of the first two seconds.
    let seed_len = ((2.0 * pulse.rate_hz) as usize).min(energy.len());
    let seed = energy[..seed_len].iter().cloned().fold(0.0, f64::max);
    let mut heights: Vec<f64> = if seed > 0.0 { vec![seed] } else { Vec::new() };

    let refractory = (BEAT_REFRACTORY_S * pulse.rate_hz).round() as usize;
    let mut beats: Vec<(usize, f64)> = Vec::new();
    for i in 1..energy.len().saturating_sub(1) {
        let e = energy[i];
        if !(band[i] > 0.0 && e > energy[i - 1] && e >= energy[i + 1]) {
            continue;
        }
        let threshold = if heights.is_empty() { 0.0 } else { 0.5 * median(&heights) };
        if e <= threshold || e <= f64::EPSILON {
            continue;
        }
        match beats.last_mut() {
            Some(last) if i - last.0 < refractory => {
                if e > last.1 {
                    *last = (i, e);
                    if let Some(h) = heights.last_mut() {
                        *h = e;
                    }
                }
            }
            _ => {
                beats.push((i, e));
                heights.push(e);
                if heights.len() > 8 {
                    heights.remove(0);
                }
            }
        }
    }

    Ok(beats
        .into_iter()
        .map(|(i, _)| {
            // The band signal is skewed by the slow average; time the peak on the lowpass.
            let reach = ((0.1 * pulse.rate_hz) as usize).max(1);
            let lo = i.saturating_sub(reach).max(1);
            let hi = (i + reach).min(fast.len() - 2);
            let i = (lo..=hi).fold(i, |m, j| if fast[j] > fast[m] { j } else { m });
            let (a, b, c) = (fast[i - 1], fast[i], fast[i + 1]);
            let denom = a - 2.0 * b + c;
            let frac = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            pulse.time(i) + frac / pulse.rate_hz
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HrSource {
    DerivedFromPulse,
    DeviceReported,
}

/// Uniform heart-rate series in beats per minute.
#[derive(Debug, Clone, PartialEq)]
pub struct HrSeries {
    pub series: UniformSeries,
    pub source: HrSource,
}

impl HrSeries {
    pub fn new(series: UniformSeries, source: HrSource) -> Result<Self> {
        if let Some(bad) = series.values.iter().find(|v| !(**v > 25.0 && **v < 250.0)) {
            return Err(Error::Invariant(format!("heart rate {bad} outside (25, 250) bpm")));
        }
        Ok(HrSeries { series, source })
    }

    /// Heart rate reported by a device, resampled to `out_rate_hz`.
    pub fn from_device(samples: &[TimedValue], out_rate_hz: f64) -> Result<Self> {
        HrSeries::new(crate::signal::resample(samples, out_rate_hz)?, HrSource::DeviceReported)
    }
}

fn interval_ok(ibi: f64, reference: f64) -> bool {
    (IBI_MIN_S..=IBI_MAX_S).contains(&ibi) && ((ibi - reference).abs() / reference) <= IBI_MAX_JUMP
}

/// Removes beats that split a regular interval in two.
///
/// A beat is a candidate when merging its two adjacent intervals lands closer
/// to the local median interval than either part and at least one part is off
/// by more than the relative tolerance. The best candidate is removed first
/// and the test repeats, so clustered artifacts are peeled off one at a time.
fn drop_spurious(beats: &[f64]) -> Vec<f64> {
    const HALF_WINDOW: usize = 10;
    let mut b = beats.to_vec();
    loop {
        let d: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
        let mut best: Option<(f64, usize)> = None;
        for i in 1..b.len().saturating_sub(1) {
            let lo = i.saturating_sub(HALF_WINDOW);
            let hi = (i + HALF_WINDOW).min(d.len());
            let m = median(&d[lo..hi]);
            let (left, right) = (d[i - 1], d[i]);
            let merged = (left + right - m).abs();
            let off = |x: f64| (x - m).abs();
            let spurious = merged < off(left)
                && merged < off(right)
                && off(left).max(off(right)) > IBI_MAX_JUMP * m;
            if spurious && best.is_none_or(|(e, _)| merged < e) {
                best = Some((merged, i));
            }
        }
        match best {
            Some((_, i)) => {
                b.remove(i);
            }
            None => return b,
        }
    }
}

/// Converts beat times to a uniform heart-rate series.
///
/// Beats that split a regular interval are dropped first. Intervals outside
/// 0.3–2.0 s or more than 25 % away from the median of the five preceding
/// accepted intervals are then rejected. After three consecutive rejections
/// that agree with one another the reference restarts from them, which lets
/// genuine rhythm changes through.
pub fn ibi_to_hr(beats: &[f64], out_rate_hz: f64) -> Result<HrSeries> {
    if beats.len() < 3 {
        return Err(Error::InsufficientData(format!("need >= 3 beats, got {}", beats.len())));
    }
    if !(out_rate_hz > 0.0) {
        return Err(Error::InvalidParameter(format!("output rate {out_rate_hz}")));
    }
    let beats = drop_spurious(beats);
    let raw: Vec<f64> = beats
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| (IBI_MIN_S..=IBI_MAX_S).contains(d))
        .take(5)
        .collect();
    if raw.is_empty() {
        return Err(Error::InsufficientData("no plausible inter-beat interval".into()));
    }
    // Seed reference, replaced by real history once the first interval is accepted.
    let mut history: Vec<f64> = vec![median(&raw)];
    let mut seeded = true;
    let mut rejected: Vec<f64> = Vec::new();
    let mut rates: Vec<TimedValue> = Vec::new();

    for w in beats.windows(2) {
        let ibi = w[1] - w[0];
        let reference = median(&history[history.len().saturating_sub(5)..]);
        if interval_ok(ibi, reference) {
            rates.push(TimedValue::new(w[1], 60.0 / ibi));
            if seeded {
                history.clear();
                seeded = false;
            }
            history.push(ibi);
            rejected.clear();
            continue;
        }
        if (IBI_MIN_S..=IBI_MAX_S).contains(&ibi) {
            rejected.push(ibi);
        }
        if rejected.len() >= 3 {
            let m = median(&rejected);
            if rejected.iter().all(|r| ((r - m).abs() / m) <= IBI_MAX_JUMP) {
                history = std::mem::take(&mut rejected);
                seeded = false;
            }
            rejected.clear();
        }
    }

    if rates.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} accepted inter-beat intervals", rates.len())));
    }
    let t0 = rates[0].t;
    let span = rates[rates.len() - 1].t - t0;
    let n = floor_count(span * out_rate_hz) + 1;
    let times: Vec<f64> = (0..n).map(|k| t0 + k as f64 / out_rate_hz).collect();
    let values = crate::signal::interpolate_at(&rates, &times)
        .into_iter()
        .map(|v| v.unwrap_or(rates[rates.len() - 1].value))
        .collect();
    HrSeries::new(UniformSeries::new(t0, out_rate_hz, values), HrSource::DerivedFromPulse)
}

/// Splits EDA into tonic (running median) and phasic (input − tonic) parts
/// with the default tonic window. Samples inside responses found on a first
/// pass are left out of the median on the second.
pub fn eda_decompose(eda: &UniformSeries) -> Result<(UniformSeries, UniformSeries)> {
    eda_decompose_with(eda, TONIC_WINDOW_S)
}

/// As [`eda_decompose`] with an explicit median window.
///
/// `tonic + phasic` reproduces each input sample exactly whenever the sample
/// lies within a factor of two of its tonic level, which holds for any
/// physiological conductance trace. Far outside that range the subtraction
/// itself rounds.
pub fn eda_decompose_with(eda: &UniformSeries, window_s: f64) -> Result<(UniformSeries, UniformSeries)> {
    if eda.rate_hz < 4.0 {
        return Err(Error::InvalidParameter(format!("eda rate {} Hz below 4 Hz", eda.rate_hz)));
    }
    if (eda.len() as f64) / eda.rate_hz < 30.0 {
        return Err(Error::InsufficientData("eda shorter than 30 s".into()));
    }
    let width = odd_width(window_s, eda.rate_hz);
    let first = running_median(&eda.values, width);
    let residual = UniformSeries::new(
        eda.start,
        eda.rate_hz,
        eda.values.iter().zip(&first).map(|(x, t)| x - t).collect(),
    );
    // Second pass: responses found in the first residual are kept out of the
    // median so their tails do not lift the tonic level.
    let keep = response_free(&residual);
    let tonic = running_median_masked(&eda.values, &keep, width, &first);
    let phasic: Vec<f64> = eda.values.iter().zip(&tonic).map(|(x, t)| x - t).collect();
    Ok((
        UniformSeries::new(eda.start, eda.rate_hz, tonic),
        UniformSeries::new(eda.start, eda.rate_hz, phasic),
    ))
}

/// Flags samples outside any response, where a response runs from its onset
/// until the smoothed signal has fallen back to within 10 % of its amplitude.
fn response_free(phasic: &UniformSeries) -> Vec<bool> {
    let n = phasic.len();
    let s = moving_average(&phasic.values, odd_width(SCR_SMOOTH_S, phasic.rate_hz));
    let index = |t: f64| (((t - phasic.start) * phasic.rate_hz).round().max(0.0) as usize).min(n - 1);
    let mut keep = vec![true; n];
    for scr in detect_scrs(phasic) {
        let onset = index(scr.onset_t);
        let floor = s[onset] + 0.1 * scr.amplitude;
        let mut end = index(scr.peak_t);
        while end < n && s[end] > floor {
            end += 1;
        }
        keep[onset..end].iter_mut().for_each(|k| *k = false);
    }
    keep
}

/// A skin conductance response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scr {
    pub onset_t: f64,
    pub peak_t: f64,
    /// Peak minus onset level, µS.
    pub amplitude: f64,
    pub rise_time: f64,
}

/// Finds SCRs in a phasic series.
///
/// The phasic signal is smoothed over 0.5 s and differentiated. A response
/// opens where the slope exceeds 0.02 µS/s for at least 0.25 s; its onset
/// is moved back to the preceding local minimum, so overlapping responses
/// split at the trough between them. The peak is the highest point reached before the signal
/// falls back by a small margin. Responses below 0.01 µS or with a rise time
/// outside 0.25–10 s are dropped.
pub fn detect_scrs(phasic: &UniformSeries) -> Vec<Scr> {
    let n = phasic.len();
    if n < 3 {
        return Vec::new();
    }
    let s = moving_average(&phasic.values, odd_width(SCR_SMOOTH_S, phasic.rate_hz));
    let rate = phasic.rate_hz;
    let slope = |i: usize| -> f64 {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        (s[b] - s[a]) * rate / (b - a) as f64
    };

    let mut out = Vec::new();
    let mut floor_idx = 0usize; // onsets may not reach back past the previous peak
    let mut i = 1;
    // The slope must hold for the minimum rise time so noise spikes do not open a response.
    let hold = ((SCR_MIN_RISE_S * rate).round() as usize).max(1);
    while i < n {
        if (i..(i + hold).min(n)).any(|j| slope(j) <= SCR_ONSET_SLOPE) {
            i += 1;
            continue;
        }
        let mut onset = i;
        while onset > floor_idx && s[onset - 1] < s[onset] {
            onset -= 1;
        }
        let mut peak = i;
        let mut k = i;
        while k + 1 < n {
            k += 1;
            if s[k] > s[peak] {
                peak = k;
            }
            let amp = s[peak] - s[onset];
            if s[k] < s[peak] - (0.1 * amp).max(0.5 * SCR_MIN_AMPLITUDE) {
                break;
            }
        }
        let amplitude = s[peak] - s[onset];
        let rise_time = (peak - onset) as f64 / rate;
        if amplitude >= SCR_MIN_AMPLITUDE && (SCR_MIN_RISE_S..=SCR_MAX_RISE_S).contains(&rise_time) {
            out.push(Scr { onset_t: phasic.time(onset), peak_t: phasic.time(peak), amplitude, rise_time });
        }
        floor_idx = peak;
        i = k.max(i + 1);
    }
    out
}

/// Calibration summary used to z-score later windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    pub hr_mean: f64,
    pub hr_sd: f64,
    pub scl_mean: f64,
    pub scl_sd: f64,
    /// SCRs per minute.
    pub scr_rate: f64,
    pub duration_s: f64,
}

impl Baseline {
    pub fn validate(&self) -> Result<()> {
        let all = [self.hr_mean, self.hr_sd, self.scl_mean, self.scl_sd, self.scr_rate, self.duration_s];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("baseline has non-finite fields".into()));
        }
        if self.hr_sd <= 0.0 || self.scl_sd <= 0.0 {
            return Err(Error::Invariant("baseline standard deviations must be positive".into()));
        }
        if self.duration_s < MIN_BASELINE_S - 1e-9 {
            return Err(Error::Invariant(format!("baseline covers {} s, need >= 60 s", self.duration_s)));
        }
        if self.scr_rate < 0.0 {
            return Err(Error::Invariant("negative SCR rate".into()));
        }
        Ok(())
    }
}

/// Baseline statistics over a calibration segment. `tonic` is the skin
/// conductance level (the tonic part of [`eda_decompose`]); its sample
/// coverage defines the segment duration.
pub fn compute_baseline(hr: &HrSeries, tonic: &UniformSeries, scrs: &[Scr]) -> Result<Baseline> {
    let duration_s = tonic.len() as f64 / tonic.rate_hz;
    if duration_s < MIN_BASELINE_S - 1e-9 {
        return Err(Error::InsufficientData(format!("calibration segment {duration_s:.1} s, need >= 60 s")));
    }
    if hr.series.is_empty() {
        return Err(Error::InsufficientData("empty heart-rate series".into()));
    }
    let b = Baseline {
        hr_mean: mean(&hr.series.values),
        hr_sd: std_dev(&hr.series.values).max(HR_SD_FLOOR),
        scl_mean: mean(&tonic.values),
        scl_sd: std_dev(&tonic.values).max(SCL_SD_FLOOR),
        scr_rate: scrs.len() as f64 / duration_s * 60.0,
        duration_s,
    };
    b.validate()?;
    Ok(b)
}
