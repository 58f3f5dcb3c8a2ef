use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::analysis::{AlertEvent, AlertKind, DirectionCounts, ProtocolCounts, TrafficAggregates};
use crate::audio::MixerState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    Running,
    Paused,
}

/// What the console plots: one closed window plus the engine's state.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryFrame {
    pub aggregates: TrafficAggregates,
    pub mixer: MixerState,
    pub theme: String,
    pub transport: Transport,
    /// Seconds since the service started.
    pub uptime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WireAlert {
    kind: AlertKind,
    magnitude: f64,
    t: f64,
    variable: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireTelemetry {
    #[serde(rename = "type")]
    kind: String,
    window: u64,
    t: f64,
    t_start: f64,
    window_s: f64,
    packets: u64,
    bytes: u64,
    pkt_rate: f64,
    byte_rate: f64,
    avg_pkt_rate: f64,
    rate_ratio: f64,
    by_proto: ProtocolCounts,
    by_dir: DirectionCounts,
    unique_dst_ports: u64,
    mean_iat: f64,
    alerts: Vec<WireAlert>,
    mixer: MixerState,
    theme: String,
    transport: Transport,
    uptime: f64,
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

/// Encode as a single-line JSON text message. Non-finite numbers are sent as 0.
pub fn encode_telemetry(frame: &TelemetryFrame) -> String {
    let a = &frame.aggregates;
    let mut mixer = frame.mixer.clone();
    mixer.master_gain_db = finite(mixer.master_gain_db);
    for s in mixer.voices.values_mut() {
        s.gain_db = finite(s.gain_db);
        s.pan = s.pan.map(finite);
    }
    let wire = WireTelemetry {
        kind: "telemetry".into(),
        window: a.window_index,
        t: finite(a.window_end()),
        t_start: finite(a.window_start),
        window_s: finite(a.window_len),
        packets: a.packet_count,
        bytes: a.byte_count,
        pkt_rate: finite(a.pkt_rate),
        byte_rate: finite(a.byte_rate),
        avg_pkt_rate: finite(a.avg_pkt_rate),
        rate_ratio: finite(a.rate_ratio),
        by_proto: a.by_protocol,
        by_dir: a.by_direction,
        unique_dst_ports: a.unique_dst_ports,
        mean_iat: finite(a.mean_inter_arrival),
        alerts: a
            .alerts
            .iter()
            .map(|e| WireAlert {
                kind: e.kind,
                magnitude: finite(e.magnitude),
                t: finite(e.ts),
                variable: e.variable.clone(),
            })
            .collect(),
        mixer,
        theme: frame.theme.clone(),
        transport: frame.transport,
        uptime: finite(frame.uptime),
    };
    serde_json::to_string(&wire).expect("telemetry serializes")
}

pub fn decode_telemetry(text: &str) -> Result<TelemetryFrame, ServiceError> {
    let w: WireTelemetry =
        serde_json::from_str(text).map_err(|e| ServiceError::Protocol(format!("telemetry: {e}")))?;
    if w.kind != "telemetry" {
        return Err(ServiceError::Protocol(format!("expected telemetry, got {:?}", w.kind)));
    }
    Ok(TelemetryFrame {
        aggregates: TrafficAggregates {
            window_index: w.window,
            window_start: w.t_start,
            window_len: w.window_s,
            packet_count: w.packets,
            byte_count: w.bytes,
            pkt_rate: w.pkt_rate,
            byte_rate: w.byte_rate,
            avg_pkt_rate: w.avg_pkt_rate,
            rate_ratio: w.rate_ratio,
            by_protocol: w.by_proto,
            by_direction: w.by_dir,
            mean_inter_arrival: w.mean_iat,
            unique_dst_ports: w.unique_dst_ports,
            alerts: w
                .alerts
                .into_iter()
                .map(|a| AlertEvent {
                    ts: a.t,
                    kind: a.kind,
                    magnitude: a.magnitude,
                    variable: a.variable,
                })
                .collect(),
        },
        mixer: w.mixer,
        theme: w.theme,
        transport: w.transport,
        uptime: w.uptime,
    })
}
