use super::TimedValue;
use crate::stats::floor_count;
use crate::{Error, Result};

/// A uniformly sampled series: sample `i` sits at `start + i / rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    pub start: f64,
    pub rate_hz: f64,
    pub values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(start: f64, rate_hz: f64, values: Vec<f64>) -> Self {
        UniformSeries { start, rate_hz, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 / self.rate_hz
    }

    pub fn end(&self) -> f64 {
        if self.values.is_empty() {
            self.start
        } else {
            self.time(self.values.len() - 1)
        }
    }

    /// Time between the first and last sample.
    pub fn duration(&self) -> f64 {
        self.end() - self.start
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.time(i))
    }

    pub fn to_timed(&self) -> Vec<TimedValue> {
        self.times().zip(&self.values).map(|(t, &v)| TimedValue::new(t, v)).collect()
    }

    /// Index range of samples with `lo <= t <= hi`.
    pub fn index_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let n = self.values.len();
        if n == 0 || hi < lo {
            return 0..0;
        }
        let eps = 1e-9;
        let first = ((lo - self.start) * self.rate_hz - eps).ceil().max(0.0) as usize;
        let last = ((hi - self.start) * self.rate_hz + eps).floor();
        if last < 0.0 {
            return 0..0;
        }
        let end = (last as usize + 1).min(n);
        first.min(end)..end
    }

    /// Samples with `lo <= t <= hi` as a new series.
    pub fn slice_time(&self, lo: f64, hi: f64) -> UniformSeries {
        let r = self.index_range(lo, hi);
        UniformSeries::new(self.time(r.start), self.rate_hz, self.values[r].to_vec())
    }
}

/// Linear interpolation of an ordered series at arbitrary times. Times
/// outside the series span yield `None`.
pub fn interpolate_at(series: &[TimedValue], times: &[f64]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut j = 0usize;
    for &t in times {
        let (Some(first), Some(last)) = (series.first(), series.last()) else {
            out.push(None);
            continue;
        };
        if t < first.t || t > last.t {
            out.push(None);
            continue;
        }
        // Times are usually ascending; restart the scan when they are not.
        if j >= series.len() || series[j].t > t {
            j = 0;
        }
        while j + 1 < series.len() && series[j + 1].t <= t {
            j += 1;
        }
        let a = series[j];
        if a.t == t || j + 1 == series.len() {
            out.push(Some(a.value));
        } else {
            let b = series[j + 1];
            let w = (t - a.t) / (b.t - a.t);
            out.push(Some(a.value + w * (b.value - a.value)));
        }
    }
    out
}

/// Resamples onto a uniform grid from the first to the last timestamp by
/// linear interpolation. No extrapolation past either end.
pub fn resample(series: &[TimedValue], rate_hz: f64) -> Result<UniformSeries> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!("resample needs >= 2 samples, got {}", series.len())));
    }
    if !(1.0..=10_000.0).contains(&rate_hz) {
        return Err(Error::InvalidParameter(format!("resample rate {rate_hz} Hz outside [1, 10000]")));
    }
    let t0 = series[0].t;
    let span = series[series.len() - 1].t - t0;
    let n = floor_count(span * rate_hz) + 1;
    let times: Vec<f64> = (0..n).map(|i| t0 + i as f64 / rate_hz).collect();
    let values = interpolate_at(series, &times)
        .into_iter()
        .zip(&times)
        .map(|(v, &t)| v.unwrap_or_else(|| if t < t0 { series[0].value } else { series[series.len() - 1].value }))
        .collect();
    Ok(UniformSeries::new(t0, rate_hz, values))
}

/// A borrowed window of a uniform series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<'a> {
    pub start: f64,
    pub values: &'a [f64],
}

/// Fixed-length windows of `floor(len_s * rate)` samples, starts spaced by
/// `floor(hop_s * rate)`. A trailing partial window is dropped; a window longer
/// than the series yields no windows.
pub fn sliding_windows(series: &UniformSeries, len_s: f64, hop_s: f64) -> Result<Vec<Window<'_>>> {
    if !(hop_s > 0.0 && len_s >= hop_s) {
        return Err(Error::InvalidParameter(format!("need len_s >= hop_s > 0, got len {len_s}, hop {hop_s}")));
    }
    let len = floor_count(len_s * series.rate_hz);
    let hop = floor_count(hop_s * series.rate_hz);
    if len == 0 || hop == 0 {
        return Err(Error::InvalidParameter("window or hop shorter than one sample".into()));
    }
    let n = series.values.len();
    if len > n {
        return Ok(Vec::new());
    }
    Ok((0..=(n - len) / hop)
        .map(|k| Window { start: series.time(k * hop), values: &series.values[k * hop..k * hop + len] })
        .collect())
}
