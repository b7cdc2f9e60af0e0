//! Closed-loop scenario runner: clock + channel + correction strategy, with
//! pinned-seed reproducibility, JSON configuration, CSV trace persistence,
//! and named scenario presets.

pub mod trace;

use serde::{Deserialize, Serialize};

use crate::channel::{
    draw_attack, simulate_exchange, AttackDirection, AttackSchedule, AttackTableRow,
    ChannelNoiseState, ChannelParams,
};
use crate::clock::{init_clock, step_clock, ClockNoiseParams};
use crate::detector::{detect_step, direct_step, DetectorConfig, DetectorState};
use crate::error::{ensure_finite, Error, Result};
use crate::rng::{RandomStream, SubStream};
pub use trace::{read_trace, round_ps, write_trace, write_trace_to, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// u_theta = theta_M every epoch, no screening.
    Direct,
    #[default]
    Detect,
}

/// Full description of one closed-loop run. JSON configs mirror these field
/// names; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub duration_epochs: u64,
    /// Synchronization interval, seconds.
    pub tau: f64,
    pub clock_noise: ClockNoiseParams,
    pub channel: ChannelParams,
    pub schedule: AttackSchedule,
    pub strategy: Strategy,
    #[serde(default)]
    pub detector: DetectorConfig,
    pub seed: u64,
    /// True offset at epoch 0, seconds.
    #[serde(default)]
    pub initial_theta: f64,
    /// True skew at epoch 0, dimensionless.
    #[serde(default)]
    pub initial_gamma: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.duration_epochs < 1 {
            return Err(Error::Config("duration_epochs must be >= 1".into()));
        }
        ensure_finite("tau", self.tau).map_err(|e| Error::Config(e.to_string()))?;
        if self.tau <= 0.0 {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        self.clock_noise
            .validate()
            .map_err(|e| Error::Config(format!("clock_noise: {e}")))?;
        self.channel
            .validate()
            .map_err(|e| Error::Config(format!("channel: {e}")))?;
        self.schedule
            .validate()
            .map_err(|e| Error::Config(format!("schedule: {e}")))?;
        self.detector
            .validate()
            .map_err(|e| Error::Config(format!("detector: {e}")))?;
        ensure_finite("initial_theta", self.initial_theta)
            .map_err(|e| Error::Config(e.to_string()))?;
        ensure_finite("initial_gamma", self.initial_gamma)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the closed loop: per epoch, draw attack, simulate the exchange, pick
/// a correction via the configured strategy, then step the clock applying it.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<TraceRecord>> {
    config.validate()?;
    let mut clock = init_clock(config.initial_theta, config.initial_gamma, config.tau)?;
    let mut clock_rng = RandomStream::derive(config.seed, SubStream::ClockNoise);
    let mut chan_rng = RandomStream::derive(config.seed, SubStream::ChannelNoise);
    let mut attack_rng = RandomStream::derive(config.seed, SubStream::AttackDraws);
    let mut chan_noise = ChannelNoiseState::new();
    let mut det = DetectorState::new();
    let mut out = Vec::with_capacity(config.duration_epochs as usize);

    for epoch in 0..config.duration_epochs {
        let attack = draw_attack(&config.schedule, epoch, &mut attack_rng)?;
        let meas = simulate_exchange(
            &clock,
            &config.channel,
            attack.as_ref(),
            &mut chan_noise,
            &mut chan_rng,
        )?;
        let decision = match config.strategy {
            Strategy::Direct => direct_step(meas.theta_m)?,
            Strategy::Detect => {
                let (d, next) = detect_step(&det, meas.theta_m, config.tau, &config.detector)?;
                det = next;
                d
            }
        };
        clock = step_clock(clock, &config.clock_noise, decision.u_theta, &mut clock_rng)?;
        out.push(TraceRecord {
            epoch_index: epoch,
            time_ps: round_ps(epoch as f64 * config.tau),
            // post-correction true offset: the evaluation observable
            theta_true_ps: round_ps(clock.theta),
            theta_m_ps: round_ps(meas.theta_m),
            u_theta_ps: round_ps(decision.u_theta),
            offset_f_ps: round_ps(decision.offset_f),
            i_attack_ps: round_ps(decision.i_attack),
            gamma_best: det.gamma_best_prev,
            gamma_e: decision.gamma_e,
            attack_true_delay_ps: attack.map_or(0, |a| round_ps(a.delay)),
            attack_detected: decision.attack_detected,
        });
    }
    Ok(out)
}

pub const PRESET_NAMES: [&str; 10] = [
    "sim-noattack",
    "sim-attack-1ns-error",
    "sim-attack-0.5ns-error",
    "sim-attack-0.2ns-error",
    "exp-equal-0.296ns",
    "exp-equal-0.83ns",
    "exp-equal-1.25ns",
    "exp-random-0.83",
    "exp-random-0.296",
    "exp-random-mixed",
];

/// Returns a named scenario. Simulation presets run 1000 epochs; the
/// experiment-mirroring presets run 600. All use a symmetric 25 us link,
/// 1 s epochs, the detect strategy, and seed 0 (override per run).
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let base = ScenarioConfig {
        duration_epochs: 1000,
        tau: 1.0,
        clock_noise: ClockNoiseParams::table1(),
        channel: ChannelParams::table1(),
        schedule: AttackSchedule::None,
        strategy: Strategy::Detect,
        detector: DetectorConfig::default(),
        seed: 0,
        initial_theta: 0.0,
        initial_gamma: 0.0,
    };
    let equal = |delay: f64| AttackSchedule::EqualInterval {
        interval_epochs: 50,
        delay,
        direction: AttackDirection::BToA,
    };
    let row = |probability: f64, delay: f64| AttackTableRow {
        probability,
        delay,
        direction: AttackDirection::BToA,
    };
    // equal-interval simulation attacks: injected delay is twice the target
    // time error (the measured offset shifts by delay/2)
    let cfg = match name {
        "sim-noattack" => base,
        "sim-attack-1ns-error" => ScenarioConfig {
            schedule: equal(2e-9),
            ..base
        },
        "sim-attack-0.5ns-error" => ScenarioConfig {
            schedule: equal(1e-9),
            ..base
        },
        "sim-attack-0.2ns-error" => ScenarioConfig {
            schedule: equal(0.4e-9),
            ..base
        },
        "exp-equal-0.296ns" => ScenarioConfig {
            duration_epochs: 600,
            schedule: equal(0.296e-9),
            ..base
        },
        "exp-equal-0.83ns" => ScenarioConfig {
            duration_epochs: 600,
            schedule: equal(0.83e-9),
            ..base
        },
        "exp-equal-1.25ns" => ScenarioConfig {
            duration_epochs: 600,
            schedule: equal(1.25e-9),
            ..base
        },
        "exp-random-0.83" => ScenarioConfig {
            duration_epochs: 600,
            schedule: AttackSchedule::Random {
                table: vec![row(0.2, 0.83e-9)],
            },
            ..base
        },
        "exp-random-0.296" => ScenarioConfig {
            duration_epochs: 600,
            schedule: AttackSchedule::Random {
                table: vec![row(0.2, 0.296e-9)],
            },
            ..base
        },
        "exp-random-mixed" => ScenarioConfig {
            duration_epochs: 600,
            schedule: AttackSchedule::Random {
                table: vec![row(0.15, 0.83e-9), row(0.15, 0.296e-9)],
            },
            ..base
        },
        other => {
            return Err(Error::UnknownPreset(
                other.to_string(),
                PRESET_NAMES.join(", "),
            ))
        }
    };
    Ok(cfg)
}
