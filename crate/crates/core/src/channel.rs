//! Two-way exchange simulation.
//!
//! One exchange per epoch produces the two TIC readings
//!
//! ```text
//! dT_A = (T_B + dtau_BA) - T_A = theta + dtau_BA + attack(B->A) + noise
//! dT_B = (T_A + dtau_AB) - T_B = -theta + dtau_AB + attack(A->B) + noise
//! ```
//!
//! and the measured offset `theta_M = (dT_B - dT_A) / 2`. With symmetric
//! propagation delays and no attack, the delays cancel and
//! `theta_M = -theta` (sign convention: theta is local-minus-remote, B local;
//! the measured offset is T_A - T_B, so the direct correction
//! `u_theta = theta_M` cancels theta in the clock update).
//!
//! An adversary delaying one direction by `d` shifts `theta_M` by `d/2`
//! (minus for B->A, plus for A->B).

use serde::{Deserialize, Serialize};

use crate::clock::ClockState;
use crate::error::{ensure_finite, Error, Result};
use crate::rng::RandomStream;

/// How the measurement/transmission noises evolve across epochs.
///
/// `White` draws i.i.d. Gaussians per epoch (the reading that reproduces the
/// reported flat TDEV floor); `RandomWalk` integrates the draws into Wiener
/// processes, the literal wording of the source model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    White,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Nominal propagation delay A -> B, seconds, >= 0.
    pub prop_delay_ab: f64,
    /// Nominal propagation delay B -> A, seconds, >= 0.
    pub prop_delay_ba: f64,
    /// TIC measurement noise std per reading, seconds.
    pub sigma_m: f64,
    /// Transmission noise std per direction, seconds.
    pub sigma_d: f64,
    #[serde(default)]
    pub noise_model: NoiseModel,
}

impl ChannelParams {
    /// Table-1 defaults over a symmetric 25 us link.
    pub fn table1() -> Self {
        Self {
            prop_delay_ab: 25e-6,
            prop_delay_ba: 25e-6,
            sigma_m: 25e-12,
            sigma_d: 10e-12,
            noise_model: NoiseModel::White,
        }
    }

    pub fn noiseless(delay: f64) -> Self {
        Self {
            prop_delay_ab: delay,
            prop_delay_ba: delay,
            sigma_m: 0.0,
            sigma_d: 0.0,
            noise_model: NoiseModel::White,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prop_delay_ab", self.prop_delay_ab),
            ("prop_delay_ba", self.prop_delay_ba),
            ("sigma_m", self.sigma_m),
            ("sigma_d", self.sigma_d),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which one-way path the adversary delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackDirection {
    /// Delay the 1PPS travelling from B (local) to A (remote). Shifts
    /// theta_M by -delay/2.
    #[default]
    BToA,
    /// Delay the A -> B path. Shifts theta_M by +delay/2.
    AToB,
}

/// One injected asymmetric delay at a specific epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackEvent {
    pub epoch_index: u64,
    /// Injected one-way delay, seconds, >= 0. The induced measured-offset
    /// shift has magnitude delay/2.
    pub delay: f64,
    pub direction: AttackDirection,
}

/// One row of a random-interval attack table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackTableRow {
    pub probability: f64,
    pub delay: f64,
    #[serde(default)]
    pub direction: AttackDirection,
}

/// Declarative description of when and how much delay the adversary injects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSchedule {
    None,
    /// Fires at every positive multiple of `interval_epochs`.
    EqualInterval {
        interval_epochs: u64,
        delay: f64,
        #[serde(default)]
        direction: AttackDirection,
    },
    /// Per epoch, draws at most one row by its probability; the residual
    /// probability is "no attack".
    Random { table: Vec<AttackTableRow> },
}

impl AttackSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttackSchedule::None => Ok(()),
            AttackSchedule::EqualInterval {
                interval_epochs,
                delay,
                ..
            } => {
                if *interval_epochs < 1 {
                    return Err(Error::InvalidInput("interval_epochs must be >= 1".into()));
                }
                ensure_finite("delay", *delay)?;
                if *delay < 0.0 {
                    return Err(Error::InvalidInput("attack delay must be >= 0".into()));
                }
                Ok(())
            }
            AttackSchedule::Random { table } => {
                let mut sum = 0.0;
                for row in table {
                    ensure_finite("probability", row.probability)?;
                    ensure_finite("delay", row.delay)?;
                    if row.probability < 0.0 {
                        return Err(Error::InvalidInput("probability must be >= 0".into()));
                    }
                    if row.delay < 0.0 {
                        return Err(Error::InvalidInput("attack delay must be >= 0".into()));
                    }
                    sum += row.probability;
                }
                if sum > 1.0 + 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "attack probabilities sum to {sum}, must be <= 1"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// One epoch's pair of TIC readings and the derived measured offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoWayMeasurement {
    pub epoch_index: u64,
    /// dT_A, seconds (reading of the TIC at A).
    pub delta_t_a: f64,
    /// dT_B, seconds (reading of the TIC at B).
    pub delta_t_b: f64,
    /// theta_M = (dT_B - dT_A) / 2, seconds.
    pub theta_m: f64,
}

/// Accumulated Wiener levels for the `RandomWalk` noise model. Unused (but
/// still advanced) under the `White` model so draw order stays identical.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelNoiseState {
    pub trans_ba: f64,
    pub trans_ab: f64,
    pub tic_a: f64,
    pub tic_b: f64,
}

impl ChannelNoiseState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Simulates one two-way exchange.
///
/// Noise draws occur in a fixed order: B->A transmission, A->B transmission,
/// TIC-A, TIC-B.
pub fn simulate_exchange(
    clock: &ClockState,
    params: &ChannelParams,
    attack: Option<&AttackEvent>,
    noise: &mut ChannelNoiseState,
    rng: &mut RandomStream,
) -> Result<TwoWayMeasurement> {
    params.validate()?;
    ensure_finite("theta", clock.theta)?;
    let mut delay_ba = 0.0;
    let mut delay_ab = 0.0;
    if let Some(ev) = attack {
        if !ev.delay.is_finite() || ev.delay < 0.0 {
            return Err(Error::InvalidInput(format!(
                "attack delay must be finite and >= 0, got {}",
                ev.delay
            )));
        }
        if ev.epoch_index != clock.epoch_index {
            return Err(Error::InvalidInput(format!(
                "attack epoch {} does not match clock epoch {}",
                ev.epoch_index, clock.epoch_index
            )));
        }
        match ev.direction {
            AttackDirection::BToA => delay_ba = ev.delay,
            AttackDirection::AToB => delay_ab = ev.delay,
        }
    }

    let d_ba = rng.normal(params.sigma_d);
    let d_ab = rng.normal(params.sigma_d);
    let m_a = rng.normal(params.sigma_m);
    let m_b = rng.normal(params.sigma_m);
    let (n_ba, n_ab, n_a, n_b) = match params.noise_model {
        NoiseModel::White => (d_ba, d_ab, m_a, m_b),
        NoiseModel::RandomWalk => {
            noise.trans_ba += d_ba;
            noise.trans_ab += d_ab;
            noise.tic_a += m_a;
            noise.tic_b += m_b;
            (noise.trans_ba, noise.trans_ab, noise.tic_a, noise.tic_b)
        }
    };

    let delta_t_a = clock.theta + params.prop_delay_ba + delay_ba + n_ba + n_a;
    let delta_t_b = -clock.theta + params.prop_delay_ab + delay_ab + n_ab + n_b;
    Ok(TwoWayMeasurement {
        epoch_index: clock.epoch_index,
        delta_t_a,
        delta_t_b,
        theta_m: 0.5 * (delta_t_b - delta_t_a),
    })
}

/// Decides whether the schedule injects a delay at this epoch.
///
/// The `Random` variant always consumes exactly one uniform variate per call,
/// whether or not an attack fires, so attack sequences are reproducible.
pub fn draw_attack(
    schedule: &AttackSchedule,
    epoch_index: u64,
    rng: &mut RandomStream,
) -> Result<Option<AttackEvent>> {
    schedule.validate()?;
    Ok(match schedule {
        AttackSchedule::None => None,
        AttackSchedule::EqualInterval {
            interval_epochs,
            delay,
            direction,
        } => {
            if epoch_index > 0 && epoch_index.is_multiple_of(*interval_epochs) {
                Some(AttackEvent {
                    epoch_index,
                    delay: *delay,
                    direction: *direction,
                })
            } else {
                None
            }
        }
        AttackSchedule::Random { table } => {
            let u = rng.uniform();
            let mut acc = 0.0;
            let mut hit = None;
            for row in table {
                acc += row.probability;
                if u < acc {
                    hit = Some(AttackEvent {
                        epoch_index,
                        delay: row.delay,
                        direction: row.direction,
                    });
                    break;
                }
            }
            hit
        }
    })
}
