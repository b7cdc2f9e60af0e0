//! Node control loops for the software testbed.

use std::net::UdpSocket;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::channel::NoiseModel;
use crate::clock::{init_clock, step_clock};
use crate::detector::{detect_step, direct_step, missing_step, CorrectionDecision, DetectorState};
use crate::error::{Error, Result};
use crate::harness::trace::{ps_to_s, round_ps};
use crate::harness::{ScenarioConfig, Strategy, TraceRecord};
use crate::netlab::wire::{decode, encode, MsgType, PpsMessage};
use crate::rng::{RandomStream, SubStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Node A: the reference clock. Timestamps inbound PPS and reports dT_A.
    Remote,
    /// Node B: carries the simulated clock and runs the correction strategy.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub role: Role,
    /// Local bind address, e.g. "127.0.0.1:4710".
    pub bind: String,
    /// Proxy address all traffic goes through.
    pub proxy: String,
    /// Shared scenario parameters. The node uses seed, duration_epochs, tau,
    /// clock_noise, channel sigmas, strategy and detector; the schedule is
    /// the proxy's business.
    pub scenario: ScenarioConfig,
    /// Receive timeout per wait, milliseconds.
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    1000
}

/// What a node run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRun {
    /// Per-epoch records (local role only; empty for the remote role).
    pub trace: Vec<TraceRecord>,
    /// Epochs the local node had to handle by the missing-measurement rule.
    pub missing_epochs: Vec<u64>,
    /// Datagrams dropped for failing to decode.
    pub malformed: u64,
}

/// One epoch's four channel-noise draws, in the harness's fixed order.
struct NoiseTuple {
    d_ba: f64,
    d_ab: f64,
    m_a: f64,
    m_b: f64,
}

fn draw_tuple(rng: &mut RandomStream, cfg: &ScenarioConfig) -> NoiseTuple {
    NoiseTuple {
        d_ba: rng.normal(cfg.channel.sigma_d),
        d_ab: rng.normal(cfg.channel.sigma_d),
        m_a: rng.normal(cfg.channel.sigma_m),
        m_b: rng.normal(cfg.channel.sigma_m),
    }
}

pub fn run_node(config: &NodeConfig) -> Result<NodeRun> {
    config.scenario.validate()?;
    if config.scenario.channel.noise_model != NoiseModel::White {
        return Err(Error::Netlab(
            "netlab nodes support only the white noise model".into(),
        ));
    }
    let socket = UdpSocket::bind(&config.bind)?;
    socket.set_read_timeout(Some(Duration::from_millis(config.timeout_ms.max(1))))?;
    socket.connect(&config.proxy)?;
    match config.role {
        Role::Local => run_local(config, &socket),
        Role::Remote => run_remote(config, &socket),
    }
}

fn run_local(config: &NodeConfig, socket: &UdpSocket) -> Result<NodeRun> {
    let sc = &config.scenario;
    let mut clock = init_clock(sc.initial_theta, sc.initial_gamma, sc.tau)?;
    let mut clock_rng = RandomStream::derive(sc.seed, SubStream::ClockNoise);
    let mut chan_rng = RandomStream::derive(sc.seed, SubStream::ChannelNoise);
    let mut det = DetectorState::new();
    let mut trace = Vec::with_capacity(sc.duration_epochs as usize);
    let mut missing_epochs = Vec::new();
    let mut malformed = 0u64;
    let mut buf = [0u8; 64];

    for epoch in 0..sc.duration_epochs {
        let noise = draw_tuple(&mut chan_rng, sc);
        let theta = clock.theta;
        let pps = PpsMessage {
            msg_type: MsgType::Pps,
            node_id: 1,
            epoch_index: epoch as u32,
            payload_ps: round_ps(theta),
        };
        socket.send(&encode(&pps))?;

        // wait for A's PPS and REPORT for this epoch
        let mut peer_pps: Option<i64> = None;
        let mut report: Option<i64> = None;
        while peer_pps.is_none() || report.is_none() {
            let n = match socket.recv(&mut buf) {
                Ok(n) => n,
                Err(e)
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut =>
                {
                    break
                }
                Err(e) => return Err(e.into()),
            };
            let msg = match decode(&buf[..n]) {
                Ok(m) => m,
                Err(_) => {
                    malformed += 1;
                    continue;
                }
            };
            if msg.node_id != 0 || msg.epoch_index != epoch as u32 {
                continue; // stale or echoed datagram
            }
            match msg.msg_type {
                MsgType::Pps => peer_pps = Some(msg.payload_ps),
                MsgType::Report => report = Some(msg.payload_ps),
            }
        }

        let (decision, theta_m, attack_detected) = match (peer_pps, report) {
            (Some(pps_ps), Some(delta_t_a_ps)) => {
                let delta_t_b = -theta + ps_to_s(pps_ps) + noise.d_ab + noise.m_b;
                let delta_t_a = ps_to_s(delta_t_a_ps);
                let theta_m = 0.5 * (delta_t_b - delta_t_a);
                let decision = match sc.strategy {
                    Strategy::Direct => direct_step(theta_m)?,
                    Strategy::Detect => {
                        let (d, next) = detect_step(&det, theta_m, sc.tau, &sc.detector)?;
                        det = next;
                        d
                    }
                };
                let detected = decision.attack_detected;
                (decision, theta_m, detected)
            }
            _ => {
                missing_epochs.push(epoch);
                match sc.strategy {
                    Strategy::Detect => {
                        let (d, next) = missing_step(&det, sc.tau, &sc.detector)?;
                        det = next;
                        (d, 0.0, true)
                    }
                    // no measurement, no screening history: coast
                    Strategy::Direct => (
                        CorrectionDecision {
                            u_theta: 0.0,
                            attack_detected: false,
                            i_attack: 0.0,
                            offset_f: 0.0,
                            gamma_m: None,
                            gamma_e: 0.0,
                            missing: true,
                        },
                        0.0,
                        false,
                    ),
                }
            }
        };

        clock = step_clock(clock, &sc.clock_noise, decision.u_theta, &mut clock_rng)?;
        trace.push(TraceRecord {
            epoch_index: epoch,
            time_ps: round_ps(epoch as f64 * sc.tau),
            theta_true_ps: round_ps(clock.theta),
            theta_m_ps: round_ps(theta_m),
            u_theta_ps: round_ps(decision.u_theta),
            offset_f_ps: round_ps(decision.offset_f),
            i_attack_ps: round_ps(decision.i_attack),
            gamma_best: det.gamma_best_prev,
            gamma_e: decision.gamma_e,
            attack_true_delay_ps: 0, // ground truth lives in the proxy log
            attack_detected,
        });
    }

    Ok(NodeRun {
        trace,
        missing_epochs,
        malformed,
    })
}

fn run_remote(config: &NodeConfig, socket: &UdpSocket) -> Result<NodeRun> {
    let sc = &config.scenario;
    let mut chan_rng = RandomStream::derive(sc.seed, SubStream::ChannelNoise);
    let mut malformed = 0u64;
    let mut buf = [0u8; 64];
    // last epoch processed; -1 before any
    let mut last_epoch: i64 = -1;
    // cached replies for duplicate delivery of the last epoch's PPS
    let mut cached: Option<(u32, [u8; 23], [u8; 23])> = None;
    let final_epoch = sc.duration_epochs as i64 - 1;

    while last_epoch < final_epoch {
        let n = match socket.recv(&mut buf) {
            Ok(n) => n,
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                return Err(Error::Netlab(format!(
                    "remote node timed out waiting for epoch {}",
                    last_epoch + 1
                )));
            }
            Err(e) => return Err(e.into()),
        };
        let msg = match decode(&buf[..n]) {
            Ok(m) => m,
            Err(_) => {
                malformed += 1;
                continue;
            }
        };
        if msg.node_id != 1 || msg.msg_type != MsgType::Pps {
            continue;
        }
        let epoch = msg.epoch_index as i64;
        if epoch <= last_epoch {
            // duplicate: the per-epoch draws are spent, resend the cache
            if let Some((e, pps, report)) = &cached {
                if *e as i64 == epoch {
                    socket.send(pps)?;
                    socket.send(report)?;
                }
            }
            continue;
        }
        // advance the shared noise stream through any lost epochs; the last
        // tuple drawn belongs to this epoch
        let mut tuple = None;
        for _ in last_epoch + 1..=epoch {
            tuple = Some(draw_tuple(&mut chan_rng, sc));
        }
        let tuple = tuple.expect("epoch > last_epoch");
        // dT_A: inbound payload already carries theta + path delay
        let delta_t_a = ps_to_s(msg.payload_ps) + tuple.d_ba + tuple.m_a;
        let pps = encode(&PpsMessage {
            msg_type: MsgType::Pps,
            node_id: 0,
            epoch_index: msg.epoch_index,
            payload_ps: 0, // reference clock: zero offset at emission
        });
        let report = encode(&PpsMessage {
            msg_type: MsgType::Report,
            node_id: 0,
            epoch_index: msg.epoch_index,
            payload_ps: round_ps(delta_t_a),
        });
        socket.send(&pps)?;
        socket.send(&report)?;
        cached = Some((msg.epoch_index, pps, report));
        last_epoch = epoch;
    }

    Ok(NodeRun {
        trace: Vec::new(),
        missing_epochs: Vec::new(),
        malformed,
    })
}
