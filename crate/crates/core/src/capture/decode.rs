//! Link, network and transport header decoding.
//!
//! Only the fields the analysis needs are extracted: addresses, ports and the
//! transport protocol. Payloads are never inspected.

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use thiserror::Error;

use super::pcap::LinkType;
use super::record::Protocol;

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_IPV6: u16 = 0x86DD;
pub const ETHERTYPE_VLAN: u16 = 0x8100;
pub const ETHERTYPE_QINQ: u16 = 0x88A8;

const ETHERNET_HEADER_LEN: usize = 14;
const IPV4_MIN_HEADER_LEN: usize = 20;
const IPV6_HEADER_LEN: usize = 40;
const MAX_IPV6_EXTENSIONS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("empty frame")]
    Empty,
    #[error("truncated {layer} header: need {needed} bytes, have {available}")]
    Truncated {
        layer: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("non-IP ethertype 0x{0:04x}")]
    NonIpEthertype(u16),
    #[error("unknown IP version {0}")]
    UnknownIpVersion(u8),
    #[error("invalid IPv4 header length {0}")]
    BadHeaderLength(usize),
}

/// Address, port and protocol fields of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameInfo {
    pub src_addr: IpAddr,
    pub dst_addr: IpAddr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: Protocol,
}

fn need(layer: &'static str, bytes: &[u8], needed: usize) -> Result<(), DecodeError> {
    if bytes.len() < needed {
        Err(DecodeError::Truncated {
            layer,
            needed,
            available: bytes.len(),
        })
    } else {
        Ok(())
    }
}

fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

pub fn decode_frame(link: LinkType, payload: &[u8]) -> Result<FrameInfo, DecodeError> {
    if payload.is_empty() {
        return Err(DecodeError::Empty);
    }
    match link {
        LinkType::Ethernet => decode_ethernet(payload),
        LinkType::RawIp => decode_ip(payload),
    }
}

fn decode_ethernet(frame: &[u8]) -> Result<FrameInfo, DecodeError> {
    need("ethernet", frame, ETHERNET_HEADER_LEN)?;
    let mut type_at = 12;
    let mut ethertype = be16(frame, type_at);
    while ethertype == ETHERTYPE_VLAN || ethertype == ETHERTYPE_QINQ {
        type_at += 4;
        need("vlan", frame, type_at + 2)?;
        ethertype = be16(frame, type_at);
    }
    let ip = &frame[type_at + 2..];
    match ethertype {
        ETHERTYPE_IPV4 => decode_ipv4(ip),
        ETHERTYPE_IPV6 => decode_ipv6(ip),
        other => Err(DecodeError::NonIpEthertype(other)),
    }
}

fn decode_ip(packet: &[u8]) -> Result<FrameInfo, DecodeError> {
    match packet[0] >> 4 {
        4 => decode_ipv4(packet),
        6 => decode_ipv6(packet),
        v => Err(DecodeError::UnknownIpVersion(v)),
    }
}

fn decode_ipv4(ip: &[u8]) -> Result<FrameInfo, DecodeError> {
    need("ipv4", ip, IPV4_MIN_HEADER_LEN)?;
    let version = ip[0] >> 4;
    if version != 4 {
        return Err(DecodeError::UnknownIpVersion(version));
    }
    let ihl = usize::from(ip[0] & 0x0f) * 4;
    if ihl < IPV4_MIN_HEADER_LEN {
        return Err(DecodeError::BadHeaderLength(ihl));
    }
    need("ipv4", ip, ihl)?;
    let frag_offset = be16(ip, 6) & 0x1fff;
    let protocol = Protocol::from_ip_number(ip[9]);
    let src = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let (src_port, dst_port) = if frag_offset == 0 {
        transport_ports(protocol, &ip[ihl..])?
    } else {
        (0, 0)
    };
    Ok(FrameInfo {
        src_addr: IpAddr::V4(src),
        dst_addr: IpAddr::V4(dst),
        src_port,
        dst_port,
        protocol,
    })
}

fn decode_ipv6(ip: &[u8]) -> Result<FrameInfo, DecodeError> {
    need("ipv6", ip, IPV6_HEADER_LEN)?;
    let version = ip[0] >> 4;
    if version != 6 {
        return Err(DecodeError::UnknownIpVersion(version));
    }
    let mut src = [0u8; 16];
    let mut dst = [0u8; 16];
    src.copy_from_slice(&ip[8..24]);
    dst.copy_from_slice(&ip[24..40]);

    let mut next = ip[6];
    let mut rest = &ip[IPV6_HEADER_LEN..];
    let mut later_fragment = false;
    for _ in 0..MAX_IPV6_EXTENSIONS {
        let skip = match next {
            // hop-by-hop, routing, destination options
            0 | 43 | 60 => {
                need("ipv6 extension", rest, 2)?;
                (usize::from(rest[1]) + 1) * 8
            }
            44 => {
                need("ipv6 fragment", rest, 8)?;
                later_fragment = (be16(rest, 2) >> 3) != 0;
                8
            }
            // authentication header
            51 => {
                need("ipv6 extension", rest, 2)?;
                (usize::from(rest[1]) + 2) * 4
            }
            _ => break,
        };
        need("ipv6 extension", rest, skip)?;
        next = rest[0];
        rest = &rest[skip..];
    }
    let protocol = Protocol::from_ip_number(next);
    let (src_port, dst_port) = if later_fragment {
        (0, 0)
    } else {
        transport_ports(protocol, rest)?
    };
    Ok(FrameInfo {
        src_addr: IpAddr::V6(Ipv6Addr::from(src)),
        dst_addr: IpAddr::V6(Ipv6Addr::from(dst)),
        src_port,
        dst_port,
        protocol,
    })
}

fn transport_ports(protocol: Protocol, transport: &[u8]) -> Result<(u16, u16), DecodeError> {
    if !protocol.has_ports() {
        return Ok((0, 0));
    }
    let layer = if protocol == Protocol::Tcp { "tcp" } else { "udp" };
    need(layer, transport, 4)?;
    Ok((be16(transport, 0), be16(transport, 2)))
}
