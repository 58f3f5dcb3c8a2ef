use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::TrafficAggregates;

/// A traffic statistic that can drive a voice parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableId {
    PktRate,
    ByteRate,
    AvgPktRate,
    RateRatio,
    TcpRate,
    UdpRate,
    IcmpRate,
    OtherRate,
    InRate,
    OutRate,
    /// `(out - in) / (out + in)`, zero when both are zero.
    DirBalance,
    MeanInterArrival,
    UniqueDstPorts,
}

impl VariableId {
    pub const ALL: [VariableId; 13] = [
        VariableId::PktRate,
        VariableId::ByteRate,
        VariableId::AvgPktRate,
        VariableId::RateRatio,
        VariableId::TcpRate,
        VariableId::UdpRate,
        VariableId::IcmpRate,
        VariableId::OtherRate,
        VariableId::InRate,
        VariableId::OutRate,
        VariableId::DirBalance,
        VariableId::MeanInterArrival,
        VariableId::UniqueDstPorts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariableId::PktRate => "pkt_rate",
            VariableId::ByteRate => "byte_rate",
            VariableId::AvgPktRate => "avg_pkt_rate",
            VariableId::RateRatio => "rate_ratio",
            VariableId::TcpRate => "tcp_rate",
            VariableId::UdpRate => "udp_rate",
            VariableId::IcmpRate => "icmp_rate",
            VariableId::OtherRate => "other_rate",
            VariableId::InRate => "in_rate",
            VariableId::OutRate => "out_rate",
            VariableId::DirBalance => "dir_balance",
            VariableId::MeanInterArrival => "mean_inter_arrival",
            VariableId::UniqueDstPorts => "unique_dst_ports",
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn per_second(count: u64, window_len: f64) -> f64 {
    if window_len > 0.0 {
        count as f64 / window_len
    } else {
        0.0
    }
}

pub fn dir_balance(inbound: u64, outbound: u64) -> f64 {
    let total = inbound + outbound;
    if total == 0 {
        0.0
    } else {
        (outbound as f64 - inbound as f64) / total as f64
    }
}

pub fn variable_value(agg: &TrafficAggregates, v: VariableId) -> f64 {
    let w = agg.window_len;
    match v {
        VariableId::PktRate => agg.pkt_rate,
        VariableId::ByteRate => agg.byte_rate,
        VariableId::AvgPktRate => agg.avg_pkt_rate,
        VariableId::RateRatio => agg.rate_ratio,
        VariableId::TcpRate => per_second(agg.by_protocol.tcp, w),
        VariableId::UdpRate => per_second(agg.by_protocol.udp, w),
        VariableId::IcmpRate => per_second(agg.by_protocol.icmp, w),
        VariableId::OtherRate => per_second(agg.by_protocol.other, w),
        VariableId::InRate => per_second(agg.by_direction.inbound, w),
        VariableId::OutRate => per_second(agg.by_direction.outbound, w),
        VariableId::DirBalance => dir_balance(agg.by_direction.inbound, agg.by_direction.outbound),
        VariableId::MeanInterArrival => agg.mean_inter_arrival,
        VariableId::UniqueDstPorts => agg.unique_dst_ports as f64,
    }
}
