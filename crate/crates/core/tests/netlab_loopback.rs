//! End-to-end loopback runs of the UDP testbed, checked against the
//! in-process harness.

use std::net::UdpSocket;
use std::thread;

use twftt_core::harness::{run_scenario, ScenarioConfig};
use twftt_core::netlab::{run_node, run_proxy, NodeConfig, ProxyConfig, ProxyPolicy, Role};
use twftt_core::{preset, AttackSchedule};

fn free_addr() -> String {
    let s = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = s.local_addr().unwrap().to_string();
    drop(s);
    addr
}

struct LoopbackOutcome {
    local: twftt_core::netlab::NodeRun,
    proxy: twftt_core::netlab::ProxyStats,
}

fn run_loopback(scenario: &ScenarioConfig) -> LoopbackOutcome {
    let addr_a = free_addr();
    let addr_b = free_addr();
    let addr_p = free_addr();

    let proxy_cfg = ProxyConfig {
        bind: addr_p.clone(),
        node_a: addr_a.clone(),
        node_b: addr_b.clone(),
        policy: ProxyPolicy {
            schedule: scenario.schedule.clone(),
            base_delay: scenario.channel.prop_delay_ab,
        },
        seed: scenario.seed,
        duration_epochs: scenario.duration_epochs,
        timeout_ms: 5000,
    };
    let remote_cfg = NodeConfig {
        role: Role::Remote,
        bind: addr_a,
        proxy: addr_p.clone(),
        scenario: scenario.clone(),
        timeout_ms: 5000,
    };
    let local_cfg = NodeConfig {
        role: Role::Local,
        bind: addr_b,
        proxy: addr_p,
        scenario: scenario.clone(),
        timeout_ms: 2000,
    };

    let proxy = thread::spawn(move || run_proxy(&proxy_cfg));
    let remote = thread::spawn(move || run_node(&remote_cfg));
    // give the listeners a moment to bind
    thread::sleep(std::time::Duration::from_millis(50));
    let local = run_node(&local_cfg).expect("local node");
    let proxy = proxy.join().unwrap().expect("proxy");
    remote.join().unwrap().expect("remote node");
    LoopbackOutcome { local, proxy }
}

fn equivalence_case(scenario: ScenarioConfig) {
    let harness_trace = run_scenario(&scenario).unwrap();
    let out = run_loopback(&scenario);
    assert!(out.local.missing_epochs.is_empty(), "lost epochs on loopback");
    assert_eq!(out.local.malformed, 0);
    assert_eq!(out.local.trace.len(), harness_trace.len());
    for (net, sim) in out.local.trace.iter().zip(&harness_trace) {
        assert_eq!(
            net.attack_detected, sim.attack_detected,
            "verdict mismatch at epoch {}",
            net.epoch_index
        );
        // theta_M agreement to 1 ps (the wire carries integer picoseconds)
        assert!(
            (net.theta_m_ps - sim.theta_m_ps).abs() <= 1,
            "theta_m mismatch at epoch {}: {} vs {} ps",
            net.epoch_index,
            net.theta_m_ps,
            sim.theta_m_ps
        );
    }
    // ground-truth log covers every epoch in order and matches the harness
    assert_eq!(out.proxy.truth.len(), scenario.duration_epochs as usize);
    for (e, (row, sim)) in out.proxy.truth.iter().zip(&harness_trace).enumerate() {
        assert_eq!(row.epoch_index, e as u64);
        assert_eq!(row.delay_ps, sim.attack_true_delay_ps, "epoch {e}");
    }
}

#[test]
fn noise_free_symmetric_loopback_stays_at_zero() {
    let mut cfg = preset("sim-noattack").unwrap();
    cfg.duration_epochs = 50;
    cfg.clock_noise = twftt_core::ClockNoiseParams::zero();
    cfg.channel.sigma_m = 0.0;
    cfg.channel.sigma_d = 0.0;
    let out = run_loopback(&cfg);
    for r in &out.local.trace {
        assert_eq!(r.theta_m_ps, 0);
        assert_eq!(r.theta_true_ps, 0);
        assert!(!r.attack_detected);
    }
}

#[test]
fn equal_interval_attack_equivalence() {
    let mut cfg = preset("exp-equal-0.83ns").unwrap();
    cfg.duration_epochs = 120;
    cfg.seed = 1;
    equivalence_case(cfg);
}

#[test]
fn no_attack_equivalence_with_noise() {
    let mut cfg = preset("sim-noattack").unwrap();
    cfg.duration_epochs = 120;
    cfg.seed = 3;
    equivalence_case(cfg);
}

#[test]
fn single_injection_shifts_theta_m_by_half() {
    // one 0.83 ns B->A injection at epoch 25 (past warm-up), no noise:
    // theta_M shifts by -415 ps at exactly that epoch and the detector
    // flags it
    let mut cfg = preset("sim-noattack").unwrap();
    cfg.duration_epochs = 30;
    cfg.clock_noise = twftt_core::ClockNoiseParams::zero();
    cfg.channel.sigma_m = 0.0;
    cfg.channel.sigma_d = 0.0;
    cfg.schedule = AttackSchedule::EqualInterval {
        interval_epochs: 25,
        delay: 0.83e-9,
        direction: twftt_core::AttackDirection::BToA,
    };
    let out = run_loopback(&cfg);
    let r = &out.local.trace[25];
    assert_eq!(r.theta_m_ps, -415);
    assert!(r.attack_detected);
    assert_eq!(out.local.trace[24].theta_m_ps, 0);
    assert!(!out.local.trace[26].attack_detected);
}
