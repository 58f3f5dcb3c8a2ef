//! Shared fixtures for the pipeline benchmarks.

use netsound_core::analysis::{AnalysisConfig, Analyzer, HomeNetConfig, TrafficAggregates};
use netsound_core::capture::{generate_scenario, LinkType, PacketRecord, PcapWriter, ScenarioSpec, SCENARIO_HOME_NET};

/// Packets from a 60 s burst scenario (about 8k packets).
pub fn burst_packets() -> Vec<PacketRecord> {
    let spec = ScenarioSpec::burst(60.0, 50.0, 500.0, [30.0, 40.0], 7);
    generate_scenario(&spec).expect("valid scenario").collect()
}

pub fn pcap_bytes(recs: &[PacketRecord]) -> Vec<u8> {
    let mut w = PcapWriter::with_link(Vec::new(), LinkType::Ethernet).expect("header");
    for r in recs {
        w.write_packet(r).expect("in-memory write");
    }
    w.into_inner()
}

pub fn aggregate(recs: &[PacketRecord]) -> Vec<TrafficAggregates> {
    let home = HomeNetConfig::parse(&[SCENARIO_HOME_NET]).expect("home net");
    let mut a = Analyzer::new(home, AnalysisConfig::default()).expect("default config");
    let mut out = Vec::new();
    for r in recs {
        out.extend(a.push(*r));
    }
    out.extend(a.finish());
    out
}
