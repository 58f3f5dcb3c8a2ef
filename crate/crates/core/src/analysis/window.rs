use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::alerts::{detect_alerts, AlertEvent};
use super::config::{AnalysisConfig, AvgMode};
use super::features::{Direction, PacketFeatures};
use crate::capture::Protocol;

/// Floor applied to the running average in `rate_ratio`.
pub const RATE_RATIO_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProtocolCounts {
    pub tcp: u64,
    pub udp: u64,
    pub icmp: u64,
    pub other: u64,
}

impl ProtocolCounts {
    pub fn add(&mut self, p: Protocol) {
        match p {
            Protocol::Tcp => self.tcp += 1,
            Protocol::Udp => self.udp += 1,
            Protocol::Icmp => self.icmp += 1,
            Protocol::Other(_) => self.other += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tcp + self.udp + self.icmp + self.other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DirectionCounts {
    #[serde(rename = "in")]
    pub inbound: u64,
    #[serde(rename = "out")]
    pub outbound: u64,
    pub internal: u64,
    pub external: u64,
}

impl DirectionCounts {
    pub fn add(&mut self, d: Direction) {
        match d {
            Direction::Inbound => self.inbound += 1,
            Direction::Outbound => self.outbound += 1,
            Direction::Internal => self.internal += 1,
            Direction::External => self.external += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.inbound + self.outbound + self.internal + self.external
    }
}

/// Statistics of one closed tumbling window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrafficAggregates {
    pub window_index: u64,
    pub window_start: f64,
    pub window_len: f64,
    pub packet_count: u64,
    pub byte_count: u64,
    pub pkt_rate: f64,
    pub byte_rate: f64,
    pub avg_pkt_rate: f64,
    pub rate_ratio: f64,
    pub by_protocol: ProtocolCounts,
    pub by_direction: DirectionCounts,
    /// Mean inter-arrival time of the window's packets that have one; 0 when none do.
    pub mean_inter_arrival: f64,
    /// Distinct destination ports among the window's TCP and UDP packets.
    pub unique_dst_ports: u64,
    pub alerts: Vec<AlertEvent>,
}

impl TrafficAggregates {
    pub fn window_end(&self) -> f64 {
        self.window_start + self.window_len
    }
}

/// Running average of per-window packet rates.
#[derive(Debug, Clone, PartialEq)]
pub enum RunningAverage {
    Cumulative { sum: f64, windows: u64 },
    Exponential { alpha: f64, value: Option<f64> },
}

impl RunningAverage {
    pub fn from_config(cfg: &AnalysisConfig) -> Self {
        match cfg.avg_mode {
            AvgMode::Cumulative => RunningAverage::Cumulative { sum: 0.0, windows: 0 },
            AvgMode::Exponential => RunningAverage::Exponential {
                alpha: cfg.ewma_alpha(),
                value: None,
            },
        }
    }

    /// Fold in the next window rate and return the updated average.
    pub fn update(&mut self, rate: f64) -> f64 {
        match self {
            RunningAverage::Cumulative { sum, windows } => {
                *sum += rate;
                *windows += 1;
                *sum / *windows as f64
            }
            RunningAverage::Exponential { alpha, value } => {
                let next = match *value {
                    None => rate,
                    Some(prev) => {
                        let v = prev + *alpha * (rate - prev);
                        // mathematically a no-op; keeps rounding inside the convex hull
                        v.clamp(prev.min(rate), prev.max(rate))
                    }
                };
                *value = Some(next);
                next
            }
        }
    }
}

/// Apply [`RunningAverage`] to a sequence of rates.
pub fn running_average<I: IntoIterator<Item = f64>>(rates: I, cfg: &AnalysisConfig) -> Vec<f64> {
    let mut avg = RunningAverage::from_config(cfg);
    rates.into_iter().map(|r| avg.update(r)).collect()
}

#[derive(Debug, Default, Clone)]
struct Accumulator {
    packets: u64,
    bytes: u64,
    by_protocol: ProtocolCounts,
    by_direction: DirectionCounts,
    iat_sum: f64,
    iat_count: u64,
    dst_ports: HashSet<u16>,
}

impl Accumulator {
    fn add(&mut self, f: &PacketFeatures) {
        self.packets += 1;
        self.bytes += u64::from(f.record.wire_len);
        self.by_protocol.add(f.record.protocol);
        self.by_direction.add(f.direction);
        if let Some(iat) = f.inter_arrival {
            self.iat_sum += iat;
            self.iat_count += 1;
        }
        if f.record.protocol.has_ports() {
            self.dst_ports.insert(f.record.dst_port);
        }
    }
}

/// Tumbling-window aggregation anchored at the first packet's timestamp.
///
/// Windows are `[t0 + k·W, t0 + (k+1)·W)`. Every window up to the last
/// packet is emitted, empty ones included.
#[derive(Debug, Clone)]
pub struct WindowAggregator {
    cfg: AnalysisConfig,
    origin: Option<f64>,
    current: u64,
    acc: Accumulator,
    avg: RunningAverage,
}

impl WindowAggregator {
    pub fn new(cfg: AnalysisConfig) -> Self {
        WindowAggregator {
            avg: RunningAverage::from_config(&cfg),
            cfg,
            origin: None,
            current: 0,
            acc: Accumulator::default(),
        }
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.cfg
    }

    /// Anchor timestamp, once the first packet has been seen.
    pub fn origin(&self) -> Option<f64> {
        self.origin
    }

    /// Index of the window containing `ts`.
    pub fn window_of(&self, ts: f64) -> Option<u64> {
        self.origin
            .map(|t0| window_index(ts, t0, self.cfg.window_len))
    }

    /// Add one packet; returns every window that closed before it.
    pub fn push(&mut self, f: &PacketFeatures) -> Vec<TrafficAggregates> {
        let t0 = *self.origin.get_or_insert(f.record.ts);
        let idx = window_index(f.record.ts, t0, self.cfg.window_len).max(self.current);
        let mut closed = Vec::new();
        while self.current < idx {
            closed.push(self.close_current());
        }
        self.acc.add(f);
        closed
    }

    /// Close the open window (if any packet was seen) at end of stream.
    pub fn finish(&mut self) -> Option<TrafficAggregates> {
        self.origin?;
        let last = self.close_current();
        self.origin = None;
        self.current = 0;
        Some(last)
    }

    fn close_current(&mut self) -> TrafficAggregates {
        let acc = std::mem::take(&mut self.acc);
        let w = self.cfg.window_len;
        let pkt_rate = acc.packets as f64 / w;
        let avg = self.avg.update(pkt_rate);
        let mut agg = TrafficAggregates {
            window_index: self.current,
            window_start: self.origin.unwrap_or(0.0) + self.current as f64 * w,
            window_len: w,
            packet_count: acc.packets,
            byte_count: acc.bytes,
            pkt_rate,
            byte_rate: acc.bytes as f64 / w,
            avg_pkt_rate: avg,
            rate_ratio: pkt_rate / avg.max(RATE_RATIO_EPSILON),
            by_protocol: acc.by_protocol,
            by_direction: acc.by_direction,
            mean_inter_arrival: if acc.iat_count > 0 {
                acc.iat_sum / acc.iat_count as f64
            } else {
                0.0
            },
            unique_dst_ports: acc.dst_ports.len() as u64,
            alerts: Vec::new(),
        };
        agg.alerts = detect_alerts(&agg, &self.cfg);
        self.current += 1;
        agg
    }
}

/// `floor((ts - t0) / W)`, saturating at zero.
pub fn window_index(ts: f64, t0: f64, window_len: f64) -> u64 {
    let k = ((ts - t0) / window_len).floor();
    if k > 0.0 {
        k as u64
    } else {
        0
    }
}

/// Aggregate a whole feature stream.
pub fn aggregate<I>(features: I, cfg: &AnalysisConfig) -> Vec<TrafficAggregates>
where
    I: IntoIterator<Item = PacketFeatures>,
{
    let mut agg = WindowAggregator::new(cfg.clone());
    let mut out = Vec::new();
    for f in features {
        out.extend(agg.push(&f));
    }
    out.extend(agg.finish());
    out
}
