//! Packet sources: pcap files, seeded synthetic scenarios and live adapters.

mod decode;
mod frame;
mod live;
mod pcap;
mod record;
mod replay;
mod scenario;

pub use decode::{decode_frame, DecodeError, FrameInfo};
pub use frame::{encode_frame, header_len};
pub use live::{open_adapter, LiveAdapter, PcapStreamAdapter, BUILTIN_ADAPTERS};
pub use pcap::{
    decode_record, encode_pcap_header, encode_record_header, parse_pcap_header, parse_pcap_record,
    parse_record_header, split_record, ByteOrder, CaptureError, CaptureMeta, LinkType, PcapWriter,
    RawRecord, RecordHeader, GLOBAL_HEADER_LEN, RECORD_HEADER_LEN,
};
pub use record::{
    quantize_timestamp, timestamp_from_parts, timestamp_to_parts, PacketRecord, Protocol,
    TsResolution,
};
pub use replay::{replay, Pacer, PcapReader, RecordEvent, ReplaySummary, Speed, TimestampGuard};
pub use scenario::{generate_scenario, ScenarioKind, ScenarioSpec, ScenarioStream, SCENARIO_HOME_NET};
