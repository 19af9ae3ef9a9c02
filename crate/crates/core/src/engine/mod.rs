//! Event/response correlation, the online estimator, the band controller and
//! the closed-loop runner.

pub mod closed_loop;
pub mod control;
pub mod correlate;
pub mod estimator;

pub use closed_loop::{run_closed_loop, simulated_baseline, ClosedLoop, LoopTrace};
pub use control::{control_step, Action, AdaptationDirective, ControllerConfig, CtlState, Reason};
pub use correlate::{correlate_events, CorrelationConfig, CorrelationReport, PatternCorrelation};
pub use estimator::{calibrate, eda_features, estimate_session, heart_rate, merged_samples, Estimator, EstimatorConfig};
