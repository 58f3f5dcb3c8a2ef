use serde::{Deserialize, Serialize};

use super::config::AnalysisConfig;
use super::window::TrafficAggregates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    RateSpike,
    PortScan,
}

impl AlertKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlertKind::RateSpike => "rate_spike",
            AlertKind::PortScan => "port_scan",
        }
    }
}

/// An exceptional condition observed in one window.
///
/// `ts` is the start of the window in which the condition was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub ts: f64,
    pub kind: AlertKind,
    /// `rate_ratio` for rate spikes, `unique_dst_ports / threshold` for scans.
    pub magnitude: f64,
    pub variable: String,
}

pub fn detect_alerts(agg: &TrafficAggregates, cfg: &AnalysisConfig) -> Vec<AlertEvent> {
    let mut alerts = Vec::new();
    if agg.window_index < cfg.warmup_windows {
        return alerts;
    }
    if agg.pkt_rate > cfg.spike_factor * agg.avg_pkt_rate && agg.pkt_rate > cfg.spike_min_rate {
        alerts.push(AlertEvent {
            ts: agg.window_start,
            kind: AlertKind::RateSpike,
            magnitude: agg.rate_ratio,
            variable: "rate_ratio".into(),
        });
    }
    if agg.unique_dst_ports as f64 > cfg.scan_port_threshold {
        alerts.push(AlertEvent {
            ts: agg.window_start,
            kind: AlertKind::PortScan,
            magnitude: agg.unique_dst_ports as f64 / cfg.scan_port_threshold,
            variable: "unique_dst_ports".into(),
        });
    }
    alerts
}
