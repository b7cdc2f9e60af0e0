//! Two-way fiber-optic time transfer (TWFTT) simulation and defense against
//! asymmetric delay attacks.
//!
//! The crate models a pair of clocks synchronized over a symmetric fiber
//! link by exchanging one pulse per second in both directions. An adversary
//! who delays only one direction biases the measured offset by half the
//! injected delay; the detector screens each epoch's measurement against a
//! skew-based prediction and falls back to the prediction when the residual
//! exceeds a threshold.
//!
//! Modules:
//! - [`clock`]: discrete two-state clock model (offset + skew random walks)
//! - [`channel`]: the two-way exchange, noise, and attack injection
//! - [`detector`]: the attack detection / correction algorithm
//! - [`metrics`]: TDEV, MTIE, precision/recall
//! - [`harness`]: closed-loop scenario runner, presets, trace persistence
//! - [`netlab`]: UDP testbed (two nodes + adversary proxy)

pub mod channel;
pub mod clock;
pub mod detector;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod netlab;
pub mod rng;

pub use channel::{
    draw_attack, simulate_exchange, AttackDirection, AttackEvent, AttackSchedule, AttackTableRow,
    ChannelNoiseState, ChannelParams, NoiseModel, TwoWayMeasurement,
};
pub use clock::{init_clock, step_clock, ClockNoiseParams, ClockState};
pub use detector::{
    detect_step, direct_step, missing_step, CorrectionDecision, DetectorConfig, DetectorState,
};
pub use error::{Error, Result};
pub use harness::{
    preset, read_trace, round_ps, run_scenario, write_trace, ScenarioConfig, Strategy, TraceRecord,
    PRESET_NAMES,
};
pub use metrics::{
    mtie, precision_recall, stability_curve, tdev, DetectionTally, StabilityCurve, StabilityMetric,
    TimeErrorSeries,
};
pub use rng::{RandomStream, SubStream};
