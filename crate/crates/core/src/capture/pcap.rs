//! Classic libpcap container: 24-byte global header followed by records with
//! 16-byte headers. Both byte orders and both timestamp resolutions.
//!
//! `ByteOrder::Native` is a file whose magic reads `a1 b2 c3 d4` (or
//! `a1 b2 3c 4d`) in file order, i.e. fields stored most significant byte
//! first. `ByteOrder::Swapped` is the reverse, which is what little-endian
//! capture hosts write.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::decode::{decode_frame, DecodeError};
use super::record::{timestamp_from_parts, timestamp_to_parts, PacketRecord, TsResolution};

pub const GLOBAL_HEADER_LEN: usize = 24;
pub const RECORD_HEADER_LEN: usize = 16;

const MAGIC_MICRO: u32 = 0xa1b2_c3d4;
const MAGIC_NANO: u32 = 0xa1b2_3c4d;
const MAGIC_MICRO_SWAPPED: u32 = 0xd4c3_b2a1;
const MAGIC_NANO_SWAPPED: u32 = 0x4d3c_b2a1;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("not a pcap file (magic 0x{0:08x})")]
    UnknownMagic(u32),
    #[error("unsupported link type {0}")]
    UnsupportedLinkType(u32),
    #[error("pcap header truncated: {0} of 24 bytes")]
    TruncatedHeader(usize),
    #[error("pcap header has zero snap length")]
    ZeroSnapLength,
    #[error("truncated record: need {needed} bytes, have {available}")]
    TruncatedRecord { needed: usize, available: usize },
    #[error("decode error: {0}")]
    Decode(#[from] DecodeError),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("unknown live adapter {0:?}")]
    UnknownAdapter(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ByteOrder {
    Native,
    Swapped,
}

impl ByteOrder {
    fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            ByteOrder::Native => u32::from_be_bytes(a),
            ByteOrder::Swapped => u32::from_le_bytes(a),
        }
    }

    fn put_u16(self, v: u16) -> [u8; 2] {
        match self {
            ByteOrder::Native => v.to_be_bytes(),
            ByteOrder::Swapped => v.to_le_bytes(),
        }
    }

    fn put_u32(self, v: u32) -> [u8; 4] {
        match self {
            ByteOrder::Native => v.to_be_bytes(),
            ByteOrder::Swapped => v.to_le_bytes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkType {
    Ethernet,
    RawIp,
}

impl LinkType {
    pub fn from_code(code: u32) -> Result<Self, CaptureError> {
        match code {
            1 => Ok(LinkType::Ethernet),
            101 => Ok(LinkType::RawIp),
            other => Err(CaptureError::UnsupportedLinkType(other)),
        }
    }

    pub fn code(self) -> u32 {
        match self {
            LinkType::Ethernet => 1,
            LinkType::RawIp => 101,
        }
    }
}

/// Global header fields that matter for decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureMeta {
    pub timestamp_resolution: TsResolution,
    pub byte_order: ByteOrder,
    pub link_type: LinkType,
    pub snap_length: u32,
}

pub fn parse_pcap_header(bytes: &[u8]) -> Result<CaptureMeta, CaptureError> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(CaptureError::TruncatedHeader(bytes.len()));
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let (timestamp_resolution, byte_order) = match magic {
        MAGIC_MICRO => (TsResolution::Micro, ByteOrder::Native),
        MAGIC_NANO => (TsResolution::Nano, ByteOrder::Native),
        MAGIC_MICRO_SWAPPED => (TsResolution::Micro, ByteOrder::Swapped),
        MAGIC_NANO_SWAPPED => (TsResolution::Nano, ByteOrder::Swapped),
        other => return Err(CaptureError::UnknownMagic(other)),
    };
    let snap_length = byte_order.u32(&bytes[16..20]);
    let link_type = LinkType::from_code(byte_order.u32(&bytes[20..24]))?;
    if snap_length == 0 {
        return Err(CaptureError::ZeroSnapLength);
    }
    Ok(CaptureMeta {
        timestamp_resolution,
        byte_order,
        link_type,
        snap_length,
    })
}

/// A record split out of the byte stream but not yet decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawRecord<'a> {
    pub ts_sec: u32,
    pub ts_frac: u32,
    pub incl_len: u32,
    pub orig_len: u32,
    pub data: &'a [u8],
}

impl RawRecord<'_> {
    pub fn timestamp(&self, meta: &CaptureMeta) -> f64 {
        timestamp_from_parts(self.ts_sec, self.ts_frac, meta.timestamp_resolution)
    }
}

/// Parsed record header fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordHeader {
    pub ts_sec: u32,
    pub ts_frac: u32,
    pub incl_len: u32,
    pub orig_len: u32,
}

pub fn parse_record_header(bytes: &[u8], meta: &CaptureMeta) -> Result<RecordHeader, CaptureError> {
    if bytes.len() < RECORD_HEADER_LEN {
        return Err(CaptureError::TruncatedRecord {
            needed: RECORD_HEADER_LEN,
            available: bytes.len(),
        });
    }
    let o = meta.byte_order;
    Ok(RecordHeader {
        ts_sec: o.u32(&bytes[0..4]),
        ts_frac: o.u32(&bytes[4..8]),
        incl_len: o.u32(&bytes[8..12]),
        orig_len: o.u32(&bytes[12..16]),
    })
}

/// Split one record off the front of `bytes`; returns it and the bytes consumed.
pub fn split_record<'a>(
    bytes: &'a [u8],
    meta: &CaptureMeta,
) -> Result<(RawRecord<'a>, usize), CaptureError> {
    let hdr = parse_record_header(bytes, meta)?;
    let total = RECORD_HEADER_LEN + hdr.incl_len as usize;
    if bytes.len() < total {
        return Err(CaptureError::TruncatedRecord {
            needed: hdr.incl_len as usize,
            available: bytes.len() - RECORD_HEADER_LEN,
        });
    }
    Ok((
        RawRecord {
            ts_sec: hdr.ts_sec,
            ts_frac: hdr.ts_frac,
            incl_len: hdr.incl_len,
            orig_len: hdr.orig_len,
            data: &bytes[RECORD_HEADER_LEN..total],
        },
        total,
    ))
}

/// Decode an already split record into a `PacketRecord`.
pub fn decode_record(raw: &RawRecord<'_>, meta: &CaptureMeta) -> Result<PacketRecord, DecodeError> {
    let info = decode_frame(meta.link_type, raw.data)?;
    Ok(PacketRecord {
        ts: raw.timestamp(meta),
        src_addr: info.src_addr,
        dst_addr: info.dst_addr,
        src_port: info.src_port,
        dst_port: info.dst_port,
        protocol: info.protocol,
        wire_len: raw.orig_len.max(raw.incl_len),
        captured_len: raw.incl_len,
    })
}

pub fn parse_pcap_record(
    bytes: &[u8],
    meta: &CaptureMeta,
) -> Result<(PacketRecord, usize), CaptureError> {
    let (raw, consumed) = split_record(bytes, meta)?;
    let record = decode_record(&raw, meta)?;
    Ok((record, consumed))
}

/// Build a global header.
pub fn encode_pcap_header(meta: &CaptureMeta) -> [u8; GLOBAL_HEADER_LEN] {
    let o = meta.byte_order;
    let magic = match meta.timestamp_resolution {
        TsResolution::Micro => MAGIC_MICRO,
        TsResolution::Nano => MAGIC_NANO,
    };
    let mut h = [0u8; GLOBAL_HEADER_LEN];
    h[0..4].copy_from_slice(&o.put_u32(magic));
    h[4..6].copy_from_slice(&o.put_u16(2));
    h[6..8].copy_from_slice(&o.put_u16(4));
    // thiszone and sigfigs stay zero
    h[16..20].copy_from_slice(&o.put_u32(meta.snap_length));
    h[20..24].copy_from_slice(&o.put_u32(meta.link_type.code()));
    h
}

pub fn encode_record_header(hdr: &RecordHeader, order: ByteOrder) -> [u8; RECORD_HEADER_LEN] {
    let mut h = [0u8; RECORD_HEADER_LEN];
    h[0..4].copy_from_slice(&order.put_u32(hdr.ts_sec));
    h[4..8].copy_from_slice(&order.put_u32(hdr.ts_frac));
    h[8..12].copy_from_slice(&order.put_u32(hdr.incl_len));
    h[12..16].copy_from_slice(&order.put_u32(hdr.orig_len));
    h
}

/// Streaming pcap writer.
pub struct PcapWriter<W: Write> {
    out: W,
    meta: CaptureMeta,
    records: u64,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut out: W, meta: CaptureMeta) -> Result<Self, CaptureError> {
        if meta.snap_length == 0 {
            return Err(CaptureError::ZeroSnapLength);
        }
        out.write_all(&encode_pcap_header(&meta))?;
        Ok(PcapWriter {
            out,
            meta,
            records: 0,
        })
    }

    /// Little-endian, microsecond, 65535-byte snap length.
    pub fn with_link(out: W, link_type: LinkType) -> Result<Self, CaptureError> {
        Self::new(
            out,
            CaptureMeta {
                timestamp_resolution: TsResolution::Micro,
                byte_order: ByteOrder::Swapped,
                link_type,
                snap_length: 65_535,
            },
        )
    }

    pub fn meta(&self) -> &CaptureMeta {
        &self.meta
    }

    pub fn records_written(&self) -> u64 {
        self.records
    }

    /// Write a record with explicit timestamp parts and frame bytes.
    pub fn write_raw(
        &mut self,
        ts_sec: u32,
        ts_frac: u32,
        orig_len: u32,
        data: &[u8],
    ) -> io::Result<()> {
        let hdr = RecordHeader {
            ts_sec,
            ts_frac,
            incl_len: data.len() as u32,
            orig_len,
        };
        self.out
            .write_all(&encode_record_header(&hdr, self.meta.byte_order))?;
        self.out.write_all(data)?;
        self.records += 1;
        Ok(())
    }

    /// Synthesize a frame for `record` and write it.
    pub fn write_packet(&mut self, record: &PacketRecord) -> io::Result<()> {
        let frame = super::frame::encode_frame(self.meta.link_type, record);
        let keep = (record.captured_len as usize)
            .max(super::frame::header_len(self.meta.link_type, record))
            .min(frame.len())
            .min(self.meta.snap_length as usize);
        let (secs, frac) = timestamp_to_parts(record.ts, self.meta.timestamp_resolution);
        let orig = record.wire_len.max(keep as u32);
        self.write_raw(secs, frac, orig, &frame[..keep])
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
