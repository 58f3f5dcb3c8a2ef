//! Frame synthesis for writing `PacketRecord`s back into pcap files.

use std::net::IpAddr;

use super::pcap::LinkType;
use super::record::{PacketRecord, Protocol};

const SRC_MAC: [u8; 6] = [0x02, 0x00, 0x00, 0x00, 0x77, 0x01];
const DST_MAC: [u8; 6] = [0x02, 0x00, 0x00, 0x00, 0x77, 0xfe];

fn transport_len(protocol: Protocol) -> usize {
    match protocol {
        Protocol::Tcp => 20,
        Protocol::Udp | Protocol::Icmp => 8,
        Protocol::Other(_) => 0,
    }
}

/// Bytes of headers [`encode_frame`] emits for this record.
pub fn header_len(link: LinkType, record: &PacketRecord) -> usize {
    let link_len = match link {
        LinkType::Ethernet => 14,
        LinkType::RawIp => 0,
    };
    let ip_len = match record.dst_addr {
        IpAddr::V4(_) if record.src_addr.is_ipv4() => 20,
        _ => 40,
    };
    link_len + ip_len + transport_len(record.protocol)
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header
        .chunks(2)
        .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
        .sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// Build a full frame of `max(wire_len, header_len)` bytes for the record.
///
/// Mixed address families are written as IPv6 using IPv4-mapped addresses.
pub fn encode_frame(link: LinkType, record: &PacketRecord) -> Vec<u8> {
    let total = (record.wire_len as usize).max(header_len(link, record));
    let mut f = Vec::with_capacity(total);
    let v4 = match (record.src_addr, record.dst_addr) {
        (IpAddr::V4(s), IpAddr::V4(d)) => Some((s, d)),
        _ => None,
    };
    if link == LinkType::Ethernet {
        f.extend_from_slice(&DST_MAC);
        f.extend_from_slice(&SRC_MAC);
        f.extend_from_slice(&(if v4.is_some() { 0x0800u16 } else { 0x86DDu16 }).to_be_bytes());
    }
    let ip_start = f.len();
    let proto_num = record.protocol.ip_number(v4.is_none());
    match v4 {
        Some((src, dst)) => {
            let ip_total = (total - ip_start).min(u16::MAX as usize) as u16;
            f.extend_from_slice(&[0x45, 0x00]);
            f.extend_from_slice(&ip_total.to_be_bytes());
            f.extend_from_slice(&[0x00, 0x00, 0x40, 0x00, 64, proto_num, 0, 0]);
            f.extend_from_slice(&src.octets());
            f.extend_from_slice(&dst.octets());
            let csum = ipv4_checksum(&f[ip_start..ip_start + 20]);
            f[ip_start + 10..ip_start + 12].copy_from_slice(&csum.to_be_bytes());
        }
        None => {
            let to_v6 = |a: IpAddr| match a {
                IpAddr::V4(v) => v.to_ipv6_mapped(),
                IpAddr::V6(v) => v,
            };
            let payload = (total - ip_start - 40).min(u16::MAX as usize) as u16;
            f.extend_from_slice(&[0x60, 0, 0, 0]);
            f.extend_from_slice(&payload.to_be_bytes());
            f.extend_from_slice(&[proto_num, 64]);
            f.extend_from_slice(&to_v6(record.src_addr).octets());
            f.extend_from_slice(&to_v6(record.dst_addr).octets());
        }
    }
    let transport_start = f.len();
    match record.protocol {
        Protocol::Tcp => {
            f.extend_from_slice(&record.src_port.to_be_bytes());
            f.extend_from_slice(&record.dst_port.to_be_bytes());
            f.extend_from_slice(&[0, 0, 0, 1, 0, 0, 0, 0, 0x50, 0x12, 0xff, 0xff, 0, 0, 0, 0]);
        }
        Protocol::Udp => {
            let udp_len = (total - transport_start).min(u16::MAX as usize) as u16;
            f.extend_from_slice(&record.src_port.to_be_bytes());
            f.extend_from_slice(&record.dst_port.to_be_bytes());
            f.extend_from_slice(&udp_len.to_be_bytes());
            f.extend_from_slice(&[0, 0]);
        }
        Protocol::Icmp => {
            let echo_type = if v4.is_some() { 8 } else { 128 };
            f.extend_from_slice(&[echo_type, 0, 0, 0, 0, 1, 0, 1]);
        }
        Protocol::Other(_) => {}
    }
    f.resize(total, 0);
    f
}
