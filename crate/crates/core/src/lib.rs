//! Affective-loop engine.
//!
//! Physiological streams (pulse, electrodermal activity, device-reported heart
//! rate) are turned into baselined arousal estimates, correlated with game
//! design pattern events, and fed to a band controller that injects or eases
//! off patterns. A synthetic player model closes the loop for testing.
//!
//! Module map:
//!
//! - [`signal`]: session data model, the line-delimited session format,
//!   resampling, windowing and multi-device clock alignment.
//! - [`features`]: beat detection, heart rate, EDA decomposition, SCR detection
//!   and calibration baselines.
//! - [`affect`]: arousal index, hysteretic level classifier, epochs and
//!   reaction templates.
//! - [`catalog`]: the annotated design pattern catalog and recommender.
//! - [`sim`]: latent-arousal player model and protocol schedules.
//! - [`engine`]: event/response correlation, the controller, the online
//!   estimator and the closed-loop runner.

// Negated comparisons are how NaN fails validation here.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// String-token enum with `as_str`, `Display` and `FromStr`.
macro_rules! token_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err(format!("unknown {} `{other}`", stringify!($name))),
                }
            }
        }
    };
}

pub mod affect;
pub mod catalog;
pub mod engine;
pub mod error;
pub mod features;
pub mod signal;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
