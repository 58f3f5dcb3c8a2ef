use std::fmt;
use std::net::{IpAddr, Ipv4Addr};

use serde::{Deserialize, Serialize};

/// Transport protocol carried by a decoded packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
    Other(u8),
}

impl Protocol {
    pub fn from_ip_number(n: u8) -> Self {
        match n {
            6 => Protocol::Tcp,
            17 => Protocol::Udp,
            1 | 58 => Protocol::Icmp,
            other => Protocol::Other(other),
        }
    }

    /// IP protocol number for the given address family (ICMP differs between v4 and v6).
    pub fn ip_number(self, v6: bool) -> u8 {
        match self {
            Protocol::Tcp => 6,
            Protocol::Udp => 17,
            Protocol::Icmp if v6 => 58,
            Protocol::Icmp => 1,
            Protocol::Other(n) => n,
        }
    }

    pub fn has_ports(self) -> bool {
        matches!(self, Protocol::Tcp | Protocol::Udp)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Tcp => f.write_str("tcp"),
            Protocol::Udp => f.write_str("udp"),
            Protocol::Icmp => f.write_str("icmp"),
            Protocol::Other(n) => write!(f, "ip-proto-{n}"),
        }
    }
}

/// One decoded packet.
///
/// `ts` is seconds since the capture epoch. Ports are zero whenever the
/// protocol carries none (or the transport header is absent, as in
/// non-initial IP fragments).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub ts: f64,
    pub src_addr: IpAddr,
    pub dst_addr: IpAddr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: Protocol,
    pub wire_len: u32,
    pub captured_len: u32,
}

impl PacketRecord {
    /// Same packet travelling the other way.
    pub fn swapped(&self) -> Self {
        PacketRecord {
            src_addr: self.dst_addr,
            dst_addr: self.src_addr,
            src_port: self.dst_port,
            dst_port: self.src_port,
            ..*self
        }
    }
}

impl Default for PacketRecord {
    fn default() -> Self {
        PacketRecord {
            ts: 0.0,
            src_addr: IpAddr::V4(Ipv4Addr::UNSPECIFIED),
            dst_addr: IpAddr::V4(Ipv4Addr::UNSPECIFIED),
            src_port: 0,
            dst_port: 0,
            protocol: Protocol::Other(0),
            wire_len: 0,
            captured_len: 0,
        }
    }
}

/// Timestamp granularity of a capture file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TsResolution {
    Micro,
    Nano,
}

impl TsResolution {
    /// Seconds per fractional tick.
    pub fn unit(self) -> f64 {
        match self {
            TsResolution::Micro => 1e-6,
            TsResolution::Nano => 1e-9,
        }
    }

    pub fn ticks_per_second(self) -> u32 {
        match self {
            TsResolution::Micro => 1_000_000,
            TsResolution::Nano => 1_000_000_000,
        }
    }
}

/// Combine whole seconds and fractional ticks into a timestamp.
///
/// Every producer of timestamps in this crate (file parsing and the scenario
/// generator) goes through this function, so quantized generator output and
/// re-parsed pcap output are bit-identical.
pub fn timestamp_from_parts(secs: u32, frac: u32, res: TsResolution) -> f64 {
    secs as f64 + frac as f64 * res.unit()
}

/// Inverse of [`timestamp_from_parts`] for non-negative timestamps.
pub fn timestamp_to_parts(ts: f64, res: TsResolution) -> (u32, u32) {
    let ts = ts.max(0.0);
    let mut secs = ts.floor();
    let mut frac = ((ts - secs) / res.unit()).round();
    if frac >= res.ticks_per_second() as f64 {
        secs += 1.0;
        frac = 0.0;
    }
    (secs as u32, frac as u32)
}

/// Round a timestamp to the nearest tick of `res`.
pub fn quantize_timestamp(ts: f64, res: TsResolution) -> f64 {
    let (s, f) = timestamp_to_parts(ts, res);
    timestamp_from_parts(s, f, res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts_round_trip() {
        for &(s, f) in &[(0u32, 0u32), (10, 500_000), (1_700_000_000, 999_999), (3, 1)] {
            let ts = timestamp_from_parts(s, f, TsResolution::Micro);
            assert_eq!(timestamp_to_parts(ts, TsResolution::Micro), (s, f));
        }
        assert_eq!(timestamp_from_parts(10, 500_000, TsResolution::Micro), 10.5);
    }

    #[test]
    fn quantize_is_idempotent() {
        for i in 0..10_000 {
            let t = i as f64 * 0.013_731_7;
            let q = quantize_timestamp(t, TsResolution::Micro);
            assert_eq!(q, quantize_timestamp(q, TsResolution::Micro));
            assert!((q - t).abs() <= 0.5e-6 + 1e-12);
        }
    }

    #[test]
    fn icmp_number_depends_on_family() {
        assert_eq!(Protocol::Icmp.ip_number(false), 1);
        assert_eq!(Protocol::Icmp.ip_number(true), 58);
        assert_eq!(Protocol::from_ip_number(58), Protocol::Icmp);
        assert_eq!(Protocol::from_ip_number(47), Protocol::Other(47));
    }
}
