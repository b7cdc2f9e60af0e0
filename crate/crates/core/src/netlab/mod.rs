//! Software testbed: two node processes exchange timestamp datagrams over
//! UDP through an adversary proxy that injects per-epoch one-way delays.
//!
//! The clocks are simulated (node B carries the clock model's state; node A
//! is the reference), the transport is real. Delay injection is logical: the
//! proxy adds the delay to the PPS payload semantics rather than sleeping,
//! keeping sub-ns delays representable. Every epoch, node B (local) emits a
//! PPS; node A (remote) timestamps it (dT_A), answers with its own PPS and a
//! REPORT carrying dT_A; B timestamps A's PPS (dT_B), computes theta_M,
//! runs the configured correction strategy, and steps its simulated clock.
//!
//! Noise equivalence with the in-process harness: both nodes derive the same
//! channel-noise stream from the scenario seed and draw the full four-noise
//! tuple per epoch in the harness's fixed order; each node uses only its own
//! two draws. The proxy draws the attack schedule from the attack stream,
//! one draw per epoch. A matched harness run therefore sees identical noise
//! and attack realizations.

pub mod node;
pub mod proxy;
pub mod wire;

pub use node::{run_node, NodeConfig, NodeRun, Role};
pub use proxy::{run_proxy, GroundTruthRecord, ProxyConfig, ProxyPolicy, ProxyStats};
