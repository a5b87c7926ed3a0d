//! Transport configuration shared by the pipeline program, control plane,
//! and host library.

use crate::time::SimTime;
use serde::{Deserialize, Serialize};

/// Receive-side reassembly fidelity: how many out-of-order intervals the
/// pipeline tracks with fixed per-connection state. `Max` is the reference
/// configuration with unlimited tracking state (not realizable on the
/// pipeline; used as the comparison baseline).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    #[serde(rename = "0")]
    Ooo0,
    #[serde(rename = "1")]
    Ooo1,
    #[serde(rename = "2")]
    Ooo2,
    Max,
}

impl Fidelity {
    /// Bounded interval slot count, or `None` for the unlimited reference.
    pub fn slots(self) -> Option<usize> {
        match self {
            Fidelity::Ooo0 => Some(0),
            Fidelity::Ooo1 => Some(1),
            Fidelity::Ooo2 => Some(2),
            Fidelity::Max => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Fidelity::Ooo0 => "0",
            Fidelity::Ooo1 => "1",
            Fidelity::Ooo2 => "2",
            Fidelity::Max => "max",
        }
    }
}

/// Sender loss-recovery mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recovery {
    /// Rewind to the cumulative ack point and retransmit everything.
    GoBackN,
    /// Retransmit only bytes outside the acknowledged island.
    Sack,
}

/// Congestion-control policy executed by the control plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcPolicy {
    Dctcp,
    Timely,
    /// NewReno-like additive-increase / multiplicative-decrease on loss.
    Aimd,
    /// No congestion control: effectively unlimited credits per SYNC.
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportConfig {
    /// Connection table width per pipeline.
    pub max_conns: usize,
    /// Link MTU; payload capacity is `mtu - 40`.
    pub mtu: u32,
    pub fidelity: Fidelity,
    pub recovery: Recovery,
    /// Acknowledge every M consecutively received in-order segments
    /// (1 = immediate).
    pub delayed_ack: u32,
    /// Receive buffer bytes per connection (power of two).
    pub recv_buffer: u32,
    /// Send buffer bytes per connection.
    pub send_buffer: u32,
    /// Trigger a replenish SYNC after the application consumes more than
    /// `recv_buffer / replenish_divisor` bytes.
    pub replenish_divisor: u32,
    /// Notify the host to reclaim transmit buffer after this fraction of
    /// the send buffer is acknowledged.
    pub reclaim_divisor: u32,
    /// Retransmission timeout (simulated).
    pub rto: SimTime,
    /// Credit SYNC cadence per connection.
    pub sync_interval: SimTime,
    /// Pause SYNCs for connections idle this many RTTs.
    pub inactivity_rtts: u32,
    /// Congestion-control policy.
    pub cc: CcPolicy,
    /// Control-plane polling period.
    pub control_period: SimTime,
    /// Latency charged for an out-of-window state restoration.
    pub oow_recovery_latency: SimTime,
    /// DCTCP alpha gain.
    pub dctcp_gain: f64,
    /// Initial congestion window in MTU payloads.
    pub init_cwnd_segments: u32,
    /// Base round-trip estimate used for rate/window conversion and
    /// inactivity pausing; scenario-supplied.
    pub base_rtt: SimTime,
    /// Mirror re-entry latency.
    pub mirror_delay: SimTime,
    /// One-way host DMA latency.
    pub host_dma_delay: SimTime,
}

impl TransportConfig {
    pub fn mtu_payload(&self) -> u32 {
        self.mtu - 40
    }

    pub fn replenish_threshold(&self) -> u32 {
        self.recv_buffer / self.replenish_divisor
    }

    pub fn reclaim_threshold(&self) -> u32 {
        self.send_buffer / self.reclaim_divisor
    }

    pub fn sack_enabled(&self) -> bool {
        matches!(self.recovery, Recovery::Sack)
    }

    pub fn initial_credits(&self) -> i32 {
        (self.init_cwnd_segments * self.mtu_payload()) as i32
    }
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            max_conns: 64,
            mtu: 1500,
            fidelity: Fidelity::Ooo1,
            recovery: Recovery::GoBackN,
            delayed_ack: 1,
            recv_buffer: 64 * 1024,
            send_buffer: 128 * 1024,
            replenish_divisor: 4,
            reclaim_divisor: 4,
            rto: SimTime::from_ms(10),
            sync_interval: SimTime::from_us(100),
            inactivity_rtts: 4,
            cc: CcPolicy::Dctcp,
            control_period: SimTime::from_us(500),
            oow_recovery_latency: SimTime::from_us(100),
            dctcp_gain: 1.0 / 16.0,
            init_cwnd_segments: 10,
            base_rtt: SimTime::from_us(20),
            mirror_delay: SimTime(100),
            host_dma_delay: SimTime(1_000),
        }
    }
}
