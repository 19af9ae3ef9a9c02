//! Band controller: injects arousal-raising patterns when the player is under
//! the band for long enough and eases them off above it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::affect::AffectState;
use crate::catalog::{first_eligible, ArousalEffect, Catalog};
use crate::signal::GameEvent;
use crate::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Target arousal band `[lo, hi]`.
    pub band: (f64, f64),
    /// How long arousal must stay outside the band before acting.
    pub dwell_s: f64,
    /// Minimum gap between directives.
    pub cooldown_s: f64,
    /// Seconds between controller evaluations.
    pub period_s: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { band: (0.4, 0.7), dwell_s: 3.0, cooldown_s: 5.0, period_s: 1.0 }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!("band ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")));
        }
        if !(self.dwell_s >= 0.0 && self.dwell_s.is_finite()) || !(self.cooldown_s >= 0.0 && self.cooldown_s.is_finite()) {
            return Err(Error::Config("dwell_s and cooldown_s must be finite and >= 0".into()));
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return Err(Error::Config(format!("period_s {} must be > 0", self.period_s)));
        }
        Ok(())
    }
}

token_enum!(Action { InjectEvent => "inject_event", EaseOff => "ease_off" });
token_enum!(Reason { BelowBand => "below_band", AboveBand => "above_band" });

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationDirective {
    pub t: f64,
    pub action: Action,
    pub pattern_id: String,
    pub reason: Reason,
}

impl AdaptationDirective {
    /// `A <t> <action> <pattern_id> <reason>`.
    pub fn to_line(&self) -> String {
        format!("A {:.6} {} {} {}", self.t + 0.0, self.action, self.pattern_id, self.reason)
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        let ["A", t, action, id, reason] = f.as_slice() else {
            return Err(Error::parse(0, format!("bad directive line `{line}`")));
        };
        Ok(AdaptationDirective {
            t: t.parse().map_err(|_| Error::parse(0, format!("bad time `{t}`")))?,
            action: action.parse().map_err(|e: String| Error::parse(0, e))?,
            pattern_id: id.to_string(),
            reason: reason.parse().map_err(|e: String| Error::parse(0, e))?,
        })
    }

    /// The game event that carries out this directive: the pattern at full
    /// intensity, or at intensity −1 to ease it off.
    pub fn to_event(&self) -> GameEvent {
        let mut e = GameEvent::pattern(self.t, self.pattern_id.clone());
        if self.action == Action::EaseOff {
            e.payload = Some(-1.0);
        }
        e
    }
}

/// Controller memory between evaluations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CtlState {
    /// When arousal last went below the band, while it stays there.
    pub below_since: Option<f64>,
    pub above_since: Option<f64>,
    pub last_directive: Option<f64>,
    /// Patterns injected and not yet eased off.
    pub active: BTreeSet<String>,
}

/// One controller evaluation.
///
/// Below the band for `dwell_s` with the cooldown elapsed, the first
/// arousal-raising pattern (by id) that conflicts with no active pattern is
/// injected. Above the band, the first active raising pattern is eased off,
/// or the first raising pattern in the catalog when none is active.
pub fn control_step(
    now: f64,
    state: &AffectState,
    cfg: &ControllerConfig,
    catalog: &Catalog,
    ctl: &CtlState,
) -> Result<(Vec<AdaptationDirective>, CtlState)> {
    cfg.validate()?;
    let Some(first_raise) = first_eligible(catalog, ArousalEffect::Raise, &BTreeSet::new()) else {
        return Err(Error::Config("catalog has no arousal-raising pattern".into()));
    };
    let mut next = ctl.clone();
    let (lo, hi) = cfg.band;
    let a = state.arousal;
    next.below_since = if a < lo { ctl.below_since.or(Some(now)) } else { None };
    next.above_since = if a > hi { ctl.above_since.or(Some(now)) } else { None };
    let cooled = ctl.last_directive.is_none_or(|l| now - l >= cfg.cooldown_s - EPS);
    let dwelt = |since: Option<f64>| since.is_some_and(|s| now - s >= cfg.dwell_s - EPS);

    let directive = if cooled && dwelt(next.below_since) {
        first_eligible(catalog, ArousalEffect::Raise, &ctl.active).map(|p| AdaptationDirective {
            t: now,
            action: Action::InjectEvent,
            pattern_id: p.id.clone(),
            reason: Reason::BelowBand,
        })
    } else if cooled && dwelt(next.above_since) {
        let id = ctl
            .active
            .iter()
            .find(|id| catalog.patterns.get(*id).is_some_and(|p| p.affect.arousal_effect == ArousalEffect::Raise))
            .cloned()
            .unwrap_or_else(|| first_raise.id.clone());
        Some(AdaptationDirective { t: now, action: Action::EaseOff, pattern_id: id, reason: Reason::AboveBand })
    } else {
        None
    };

    if let Some(d) = &directive {
        next.last_directive = Some(now);
        match d.action {
            Action::InjectEvent => next.active.insert(d.pattern_id.clone()),
            Action::EaseOff => next.active.remove(&d.pattern_id),
        };
    }
    Ok((directive.into_iter().collect(), next))
}
