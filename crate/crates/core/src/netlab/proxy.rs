//! Adversary proxy: forwards datagrams between the two nodes, adding the
//! base path delay plus any scheduled per-epoch attack delay to PPS payloads
//! of the targeted direction. REPORT datagrams are data, not timing pulses,
//! and pass through untouched.

use std::net::{SocketAddr, UdpSocket};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::channel::{draw_attack, AttackDirection, AttackEvent, AttackSchedule};
use crate::error::{Error, Result};
use crate::harness::trace::round_ps;
use crate::netlab::wire::{decode, encode, MsgType};
use crate::rng::{RandomStream, SubStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyPolicy {
    pub schedule: AttackSchedule,
    /// Symmetric one-way transit delay, seconds.
    pub base_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyConfig {
    pub bind: String,
    /// Address of node A (remote).
    pub node_a: String,
    /// Address of node B (local).
    pub node_b: String,
    pub policy: ProxyPolicy,
    /// Seed of the matched scenario; the attack sub-stream is derived from it.
    pub seed: u64,
    /// The proxy exits after forwarding the REPORT of the final epoch.
    pub duration_epochs: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    5000
}

/// Ground-truth log row: what was actually injected at each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub epoch_index: u64,
    /// 0 when no attack fired.
    pub delay_ps: i64,
    /// Empty when no attack fired.
    pub direction: Option<AttackDirection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyStats {
    pub forwarded: u64,
    pub malformed: u64,
    /// One row per epoch, in order.
    pub truth: Vec<GroundTruthRecord>,
}

pub fn write_truth_log(records: &[GroundTruthRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_log(path: &Path) -> Result<Vec<GroundTruthRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<GroundTruthRecord>() {
        match row {
            Ok(r) => out.push(r),
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(Error::TraceParse {
                    path: path.to_path_buf(),
                    line,
                    msg: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

pub fn run_proxy(config: &ProxyConfig) -> Result<ProxyStats> {
    config.policy.schedule.validate()?;
    if !config.policy.base_delay.is_finite() || config.policy.base_delay < 0.0 {
        return Err(Error::Config("base_delay must be finite and >= 0".into()));
    }
    let socket = UdpSocket::bind(&config.bind)?;
    socket.set_read_timeout(Some(Duration::from_millis(config.timeout_ms.max(1))))?;
    let addr_a: SocketAddr = config
        .node_a
        .parse()
        .map_err(|e| Error::Config(format!("node_a: {e}")))?;
    let addr_b: SocketAddr = config
        .node_b
        .parse()
        .map_err(|e| Error::Config(format!("node_b: {e}")))?;

    let mut attack_rng = RandomStream::derive(config.seed, SubStream::AttackDraws);
    let mut truth: Vec<GroundTruthRecord> = Vec::with_capacity(config.duration_epochs as usize);
    // attack drawn for the epoch currently in flight
    let mut current: Option<(u64, Option<AttackEvent>)> = None;
    let mut forwarded = 0u64;
    let mut malformed = 0u64;
    let mut buf = [0u8; 64];
    let final_epoch = config.duration_epochs.saturating_sub(1);

    loop {
        let (n, from) = match socket.recv_from(&mut buf) {
            Ok(v) => v,
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                return Err(Error::Netlab("proxy timed out with traffic pending".into()));
            }
            Err(e) => return Err(e.into()),
        };
        let mut msg = match decode(&buf[..n]) {
            Ok(m) => m,
            Err(_) => {
                malformed += 1;
                continue;
            }
        };
        let from_b = from == addr_b || (from != addr_a && msg.node_id == 1);
        let dest = if from_b { addr_a } else { addr_b };

        if msg.msg_type == MsgType::Pps {
            let epoch = msg.epoch_index as u64;
            // draw attacks for every epoch up to this one, exactly once each,
            // in order (keeps the stream aligned with the matched harness run
            // even when datagrams are lost)
            let drawn_through = truth.last().map(|r| r.epoch_index as i64).unwrap_or(-1);
            for e in (drawn_through + 1) as u64..=epoch {
                let ev = draw_attack(&config.policy.schedule, e, &mut attack_rng)?;
                truth.push(GroundTruthRecord {
                    epoch_index: e,
                    delay_ps: ev.map_or(0, |a| round_ps(a.delay)),
                    direction: ev.map(|a| a.direction),
                });
                current = Some((e, ev));
            }
            let attack_here = match &current {
                Some((e, ev)) if *e == epoch => *ev,
                _ => None,
            };
            let mut delay = config.policy.base_delay;
            if let Some(ev) = attack_here {
                let hits = match ev.direction {
                    AttackDirection::BToA => from_b,
                    AttackDirection::AToB => !from_b,
                };
                if hits {
                    delay += ev.delay;
                }
            }
            msg.payload_ps += round_ps(delay);
        }

        socket.send_to(&encode(&msg), dest)?;
        forwarded += 1;

        if msg.msg_type == MsgType::Report && msg.epoch_index as u64 >= final_epoch {
            break;
        }
    }

    // epochs never seen on the wire (trailing loss) still get truth rows
    let drawn_through = truth.last().map(|r| r.epoch_index as i64).unwrap_or(-1);
    for e in (drawn_through + 1) as u64..config.duration_epochs {
        let ev = draw_attack(&config.policy.schedule, e, &mut attack_rng)?;
        truth.push(GroundTruthRecord {
            epoch_index: e,
            delay_ps: ev.map_or(0, |a| round_ps(a.delay)),
            direction: ev.map(|a| a.direction),
        });
    }

    Ok(ProxyStats {
        forwarded,
        malformed,
        truth,
    })
}
