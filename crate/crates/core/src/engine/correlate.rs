//! Pattern events against phasic responses, with a permutation test.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::signal::{EventKind, SessionRecording, UniformSeries};
use crate::stats::{mean, RangeMax};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationConfig {
    /// Response window after each event, seconds.
    pub window: (f64, f64),
    pub n_permutations: usize,
    /// Null times keep at least this distance from every event.
    pub exclusion_s: f64,
    pub seed: u64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig { window: (1.0, 6.0), n_permutations: 1000, exclusion_s: 10.0, seed: 0 }
    }
}

impl CorrelationConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(Error::InvalidParameter(format!("response window ({lo}, {hi})")));
        }
        if self.n_permutations < 100 {
            return Err(Error::InvalidParameter(format!("{} permutations, need >= 100", self.n_permutations)));
        }
        if !(self.exclusion_s >= 0.0 && self.exclusion_s.is_finite()) {
            return Err(Error::InvalidParameter(format!("exclusion {}", self.exclusion_s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternCorrelation {
    pub n_events: usize,
    /// Mean peak phasic response, µS.
    pub mean_response: f64,
    /// Mean peak phasic at null times, µS.
    pub null_mean: f64,
    pub p_value: f64,
    pub effect_size_d: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationReport {
    pub patterns: BTreeMap<String, PatternCorrelation>,
}

impl CorrelationReport {
    /// One `C <id> <n> <mean> <null_mean> <p> <d>` line per pattern.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (id, c) in &self.patterns {
            let _ = writeln!(
                out,
                "C {id} {} {:.6} {:.6} {:.6} {:.6}",
                c.n_events, c.mean_response, c.null_mean, c.p_value, c.effect_size_d
            );
        }
        out
    }

    /// Whitespace-separated table with a header row.
    pub fn to_columns(&self) -> String {
        let mut out = String::from("pattern n_events mean_response null_mean p_value effect_size_d\n");
        for (id, c) in &self.patterns {
            let _ = writeln!(
                out,
                "{id} {} {:.6} {:.6} {:.6} {:.6}",
                c.n_events, c.mean_response, c.null_mean, c.p_value, c.effect_size_d
            );
        }
        out
    }
}

/// Stable per-pattern seed so results do not depend on the other patterns.
fn pattern_seed(seed: u64, id: &str) -> u64 {
    id.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Intervals of allowed null times, sorted and disjoint.
fn null_intervals(lo: f64, hi: f64, events: &[f64], exclusion: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut cursor = lo;
    for &e in events {
        let (a, b) = (e - exclusion, e + exclusion);
        if a > cursor {
            out.push((cursor, a.min(hi)));
        }
        cursor = cursor.max(b);
        if cursor >= hi {
            break;
        }
    }
    if cursor < hi {
        out.push((cursor, hi));
    }
    out.retain(|(a, b)| b > a);
    out
}

fn pooled_sd(a: &[f64], b: &[f64]) -> f64 {
    let ss = |xs: &[f64]| {
        let m = mean(xs);
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let dof = (a.len() + b.len()) as f64 - 2.0;
    if dof <= 0.0 {
        return 0.0;
    }
    ((ss(a) + ss(b)) / dof).sqrt()
}

/// Correlates every catalog pattern that has events with the phasic signal.
///
/// The response to an event is the phasic maximum in the window after it.
/// Each permutation draws as many null times as the pattern has events,
/// uniformly over times at least `exclusion_s` from any event, and averages
/// their responses; `p = (1 + #{null mean >= observed mean}) / (1 + N)`.
/// `null_mean` pools every null response and `d` divides the difference of
/// means by the pooled standard deviation of event and null responses.
pub fn correlate_events(
    session: &SessionRecording,
    phasic: &UniformSeries,
    catalog: &Catalog,
    cfg: &CorrelationConfig,
) -> Result<CorrelationReport> {
    cfg.validate()?;
    if phasic.len() < 2 {
        return Err(Error::InsufficientData("phasic series too short".into()));
    }
    let (wlo, whi) = cfg.window;
    let peaks = RangeMax::new(&phasic.values);
    let response = |t: f64| -> Option<f64> {
        let r = phasic.index_range(t + wlo, t + whi);
        (!r.is_empty()).then(|| peaks.query(r.start, r.end - 1))
    };

    let mut by_pattern: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in session.events.iter().filter(|e| e.kind == EventKind::PatternEvent) {
        for id in &e.pattern_ids {
            if !catalog.patterns.contains_key(id) {
                return Err(Error::UnknownPattern(id.clone()));
            }
            by_pattern.entry(id.as_str()).or_default().push(e.t);
        }
    }
    if by_pattern.is_empty() {
        return Ok(CorrelationReport::default());
    }

    let mut all_events: Vec<f64> = session.events.iter().map(|e| e.t).collect();
    all_events.sort_by(f64::total_cmp);
    let free = null_intervals(phasic.start - wlo, phasic.end() - whi, &all_events, cfg.exclusion_s);
    let total: f64 = free.iter().map(|(a, b)| b - a).sum();
    if !(total > 0.0) {
        return Err(Error::InsufficientData("no null-eligible time left: events too dense".into()));
    }
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        let mut u = rng.gen_range(0.0..total);
        for &(a, b) in &free {
            if u < b - a {
                return a + u;
            }
            u -= b - a;
        }
        free[free.len() - 1].1
    };

    let mut patterns = BTreeMap::new();
    for (id, times) in by_pattern {
        let observed: Vec<f64> = times
            .iter()
            .map(|&t| response(t).ok_or_else(|| Error::InsufficientData(format!("no phasic data after `{id}` event at {t}"))))
            .collect::<Result<_>>()?;
        let obs_mean = mean(&observed);
        let mut rng = ChaCha8Rng::seed_from_u64(pattern_seed(cfg.seed, id));
        let mut nulls = Vec::with_capacity(cfg.n_permutations * observed.len());
        let mut exceed = 0usize;
        for _ in 0..cfg.n_permutations {
            let start = nulls.len();
            for _ in 0..observed.len() {
                let t = draw(&mut rng);
                nulls.push(response(t).expect("null times lie inside the phasic span"));
            }
            if mean(&nulls[start..]) >= obs_mean {
                exceed += 1;
            }
        }
        let null_mean = mean(&nulls);
        let sd = pooled_sd(&observed, &nulls);
        patterns.insert(
            id.to_string(),
            PatternCorrelation {
                n_events: observed.len(),
                mean_response: obs_mean,
                null_mean,
                p_value: (1 + exceed) as f64 / (1 + cfg.n_permutations) as f64,
                effect_size_d: if sd > 0.0 { (obs_mean - null_mean) / sd } else { 0.0 },
            },
        );
    }
    Ok(CorrelationReport { patterns })
}
