//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::net::{IpAddr, Ipv4Addr};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use netsound_core::analysis::{
    classify_direction, running_average, AlertKind, AnalysisConfig, Analyzer, AvgMode, Direction,
    HomeNetConfig, TrafficAggregates,
};
use netsound_core::audio::{render_offline, render_voice, write_wav, RenderConfig, SourceData, VoiceState};
use netsound_core::capture::{
    generate_scenario, CaptureError, DecodeError, LinkType, PacketRecord, PcapReader, PcapWriter, Protocol,
    RecordEvent, ScenarioSpec, SCENARIO_HOME_NET,
};
use netsound_core::service::{self, OutputConfig, ServiceConfig};
use netsound_core::soundscape::{builtin_theme, CurveKind, MappingCurve, SoundSource, Synth, Theme, VoiceDefinition, VoiceKind};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn analyze(spec: &ScenarioSpec) -> (Vec<PacketRecord>, Vec<TrafficAggregates>) {
    let recs: Vec<PacketRecord> = generate_scenario(spec).unwrap().collect();
    let home = HomeNetConfig::parse(&[SCENARIO_HOME_NET]).unwrap();
    let mut a = Analyzer::new(home, AnalysisConfig::default()).unwrap();
    let mut out = Vec::new();
    for r in &recs {
        out.extend(a.push(*r));
    }
    out.extend(a.finish());
    (recs, out)
}

// ---------------------------------------------------------------- oracle

fn in_scenario_home(addr: &IpAddr) -> bool {
    match addr {
        IpAddr::V4(v4) => u32::from(*v4) & 0xffff_ff00 == u32::from(Ipv4Addr::new(10, 0, 77, 0)),
        IpAddr::V6(_) => false,
    }
}

#[derive(Default, PartialEq, Debug)]
struct Bucket {
    packets: u64,
    bytes: u64,
    proto: [u64; 4],
    dir: [u64; 4],
    ports: HashSet<u16>,
}

fn brute_force(recs: &[PacketRecord], w: f64) -> Vec<Bucket> {
    let t0 = recs[0].ts;
    let mut buckets: BTreeMap<u64, Bucket> = BTreeMap::new();
    for r in recs {
        let k = ((r.ts - t0) / w).floor() as u64;
        let b = buckets.entry(k).or_default();
        b.packets += 1;
        b.bytes += u64::from(r.wire_len);
        let p = match r.protocol {
            Protocol::Tcp => 0,
            Protocol::Udp => 1,
            Protocol::Icmp => 2,
            Protocol::Other(_) => 3,
        };
        b.proto[p] += 1;
        let d = match (in_scenario_home(&r.src_addr), in_scenario_home(&r.dst_addr)) {
            (false, true) => 0,
            (true, false) => 1,
            (true, true) => 2,
            (false, false) => 3,
        };
        b.dir[d] += 1;
        if matches!(r.protocol, Protocol::Tcp | Protocol::Udp) {
            b.ports.insert(r.dst_port);
        }
    }
    let last = *buckets.keys().last().unwrap();
    (0..=last).map(|k| buckets.remove(&k).unwrap_or_default()).collect()
}

fn aggregation_oracle() -> Outcome {
    let started = Instant::now();
    let specs = [
        ScenarioSpec::steady(60.0, 100.0, 1),
        ScenarioSpec::steady(30.0, 300.0, 2),
        ScenarioSpec::quiet(120.0, 40.0, 3),
        ScenarioSpec::burst(60.0, 50.0, 500.0, [30.0, 40.0], 4),
        ScenarioSpec::burst(20.0, 20.0, 800.0, [5.0, 12.0], 5),
        ScenarioSpec::port_scan(40.0, 250.0, 200, Some([20.0, 40.0]), 6),
        ScenarioSpec::port_scan(30.0, 120.0, 1000, None, 7),
        ScenarioSpec { packets: Some(1000), ..ScenarioSpec::steady(20.0, 50.0, 8) },
        ScenarioSpec::steady(5.0, 2.0, 9),
        ScenarioSpec::burst(90.0, 10.0, 300.0, [10.0, 20.0], 10),
    ];
    let mut total = 0;
    for spec in &specs {
        let (recs, aggs) = analyze(spec);
        check(!recs.is_empty() && recs.len() <= 10_000, || format!("{:?}: {} packets", spec.kind, recs.len()))?;
        total += recs.len();
        let oracle = brute_force(&recs, 1.0);
        check(oracle.len() == aggs.len(), || format!("seed {}: {} windows vs oracle {}", spec.seed, aggs.len(), oracle.len()))?;
        for (k, (a, o)) in aggs.iter().zip(&oracle).enumerate() {
            let got = (
                a.packet_count,
                a.byte_count,
                [a.by_protocol.tcp, a.by_protocol.udp, a.by_protocol.icmp, a.by_protocol.other],
                [a.by_direction.inbound, a.by_direction.outbound, a.by_direction.internal, a.by_direction.external],
                a.unique_dst_ports,
            );
            let want = (o.packets, o.bytes, o.proto, o.dir, o.ports.len() as u64);
            check(got == want, || format!("seed {} window {k}: {got:?} != {want:?}", spec.seed))?;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("10 scenarios, {total} packets, exact match, {secs:.2} s"))
}

// ---------------------------------------------------------------- pcap

#[derive(Clone, Copy)]
struct Fmt {
    big: bool,
    nano: bool,
    link: u32,
}

fn u16b(f: Fmt, v: u16) -> [u8; 2] {
    if f.big { v.to_be_bytes() } else { v.to_le_bytes() }
}

fn u32b(f: Fmt, v: u32) -> [u8; 4] {
    if f.big { v.to_be_bytes() } else { v.to_le_bytes() }
}

fn global_header(f: Fmt) -> Vec<u8> {
    let magic = if f.nano { 0xa1b2_3c4d } else { 0xa1b2_c3d4 };
    let mut h = Vec::new();
    h.extend(u32b(f, magic));
    h.extend(u16b(f, 2));
    h.extend(u16b(f, 4));
    h.extend(u32b(f, 0));
    h.extend(u32b(f, 0));
    h.extend(u32b(f, 65535));
    h.extend(u32b(f, f.link));
    h
}

fn record(f: Fmt, secs: u32, frac: u32, orig: u32, data: &[u8]) -> Vec<u8> {
    let mut r = Vec::new();
    r.extend(u32b(f, secs));
    r.extend(u32b(f, frac));
    r.extend(u32b(f, data.len() as u32));
    r.extend(u32b(f, orig));
    r.extend_from_slice(data);
    r
}

fn ether(ethertype: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut e = vec![0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0x02, 0, 0, 0, 0, 1];
    e.extend_from_slice(ethertype);
    e.extend_from_slice(payload);
    e
}

fn ipv4(proto: u8, src: [u8; 4], dst: [u8; 4], l4: &[u8]) -> Vec<u8> {
    let total = (20 + l4.len()) as u16;
    let mut p = vec![0x45, 0x00];
    p.extend(total.to_be_bytes());
    p.extend([0x12, 0x34, 0x40, 0x00, 64, proto, 0, 0]);
    p.extend(src);
    p.extend(dst);
    p.extend_from_slice(l4);
    p
}

fn ipv6(next: u8, src_last: u8, dst_last: u8, l4: &[u8]) -> Vec<u8> {
    let mut p = vec![0x60, 0, 0, 0];
    p.extend((l4.len() as u16).to_be_bytes());
    p.extend([next, 64]);
    for last in [src_last, dst_last] {
        p.extend([0x20, 0x01, 0x0d, 0xb8]);
        p.extend([0u8; 11]);
        p.push(last);
    }
    p.extend_from_slice(l4);
    p
}

fn udp(sp: u16, dp: u16, payload: &[u8]) -> Vec<u8> {
    let mut u = Vec::new();
    u.extend(sp.to_be_bytes());
    u.extend(dp.to_be_bytes());
    u.extend(((8 + payload.len()) as u16).to_be_bytes());
    u.extend([0, 0]);
    u.extend_from_slice(payload);
    u
}

fn tcp(sp: u16, dp: u16) -> Vec<u8> {
    let mut t = Vec::new();
    t.extend(sp.to_be_bytes());
    t.extend(dp.to_be_bytes());
    t.extend([0, 0, 0, 1, 0, 0, 0, 0, 0x50, 0x02, 0xff, 0xff, 0, 0, 0, 0]);
    t
}

fn rec(ts: f64, src: &str, dst: &str, sp: u16, dp: u16, protocol: Protocol, wire: u32, cap: u32) -> PacketRecord {
    PacketRecord {
        ts,
        src_addr: src.parse().unwrap(),
        dst_addr: dst.parse().unwrap(),
        src_port: sp,
        dst_port: dp,
        protocol,
        wire_len: wire,
        captured_len: cap,
    }
}

#[derive(Debug, PartialEq)]
enum Ev {
    Pkt(PacketRecord),
    Bad(DecodeError),
    Truncated { needed: usize, available: usize },
}

fn read_all(bytes: &[u8]) -> Result<Vec<Ev>, CaptureError> {
    let mut r = PcapReader::new(bytes)?;
    let mut out = Vec::new();
    while let Some(ev) = r.next_event() {
        out.push(match ev {
            Ok(RecordEvent::Packet(p)) => Ev::Pkt(p),
            Ok(RecordEvent::Malformed { error, .. }) => Ev::Bad(error),
            Err(CaptureError::TruncatedRecord { needed, available }) => Ev::Truncated { needed, available },
            Err(e) => return Err(e),
        });
    }
    Ok(out)
}

fn pcap_decode() -> Outcome {
    let mut cases = 0;
    let mut expect = |name: &str, bytes: Vec<u8>, want: Vec<Ev>| -> Result<(), String> {
        cases += 1;
        let got = read_all(&bytes).map_err(|e| format!("{name}: {e}"))?;
        check(got == want, || format!("{name}: got {got:?}, want {want:?}"))
    };

    // little-endian, microseconds, Ethernet: UDP, VLAN-tagged TCP, ARP
    let f = Fmt { big: false, nano: false, link: 1 };
    let udp_frame = ether(&[0x08, 0x00], &ipv4(17, [10, 0, 0, 2], [8, 8, 8, 8], &udp(5353, 53, b"ping")));
    let vlan_frame = ether(
        &[0x81, 0x00, 0x00, 0x2a, 0x08, 0x00],
        &ipv4(6, [10, 0, 77, 5], [93, 184, 216, 34], &tcp(40000, 443)),
    );
    let arp = ether(&[0x08, 0x06], &[0u8; 28]);
    let mut b = global_header(f);
    b.extend(record(f, 1_700_000_000, 250_000, udp_frame.len() as u32, &udp_frame));
    b.extend(record(f, 1_700_000_001, 0, vlan_frame.len() as u32, &vlan_frame));
    b.extend(record(f, 1_700_000_002, 0, arp.len() as u32, &arp));
    expect(
        "le-micro-ethernet",
        b,
        vec![
            Ev::Pkt(rec(1_700_000_000.25, "10.0.0.2", "8.8.8.8", 5353, 53, Protocol::Udp, 46, 46)),
            Ev::Pkt(rec(1_700_000_001.0, "10.0.77.5", "93.184.216.34", 40000, 443, Protocol::Tcp, 58, 58)),
            Ev::Bad(DecodeError::NonIpEthertype(0x0806)),
        ],
    )?;

    // big-endian, nanoseconds, raw IP: IPv6 TCP and IPv4 ICMP
    let f = Fmt { big: true, nano: true, link: 101 };
    let v6 = ipv6(6, 1, 2, &tcp(1234, 80));
    let icmp = ipv4(1, [192, 168, 1, 9], [10, 0, 77, 1], &[8, 0, 0, 0, 0, 1, 0, 1]);
    let mut b = global_header(f);
    b.extend(record(f, 1_600_000_000, 500_000_000, v6.len() as u32, &v6));
    b.extend(record(f, 1_600_000_003, 0, icmp.len() as u32, &icmp));
    expect(
        "be-nano-raw",
        b,
        vec![
            Ev::Pkt(rec(1_600_000_000.5, "2001:db8::1", "2001:db8::2", 1234, 80, Protocol::Tcp, 60, 60)),
            Ev::Pkt(rec(1_600_000_003.0, "192.168.1.9", "10.0.77.1", 0, 0, Protocol::Icmp, 28, 28)),
        ],
    )?;

    // big-endian micro raw IP with a snapped record, then a truncated one
    let f = Fmt { big: true, nano: false, link: 101 };
    let full = ipv4(17, [10, 0, 77, 3], [1, 1, 1, 1], &udp(40001, 53, &[0u8; 100]));
    let snapped = &full[..40];
    let mut b = global_header(f);
    b.extend(record(f, 1_500_000_000, 0, full.len() as u32, snapped));
    let mut cut = record(f, 1_500_000_001, 0, full.len() as u32, &full);
    cut.truncate(16 + 20);
    b.extend(cut);
    expect(
        "be-micro-raw-truncated",
        b,
        vec![
            Ev::Pkt(rec(1_500_000_000.0, "10.0.77.3", "1.1.1.1", 40001, 53, Protocol::Udp, 128, 40)),
            Ev::Truncated { needed: 128, available: 20 },
        ],
    )?;

    // little-endian nano Ethernet, IPv6 UDP
    let f = Fmt { big: false, nano: true, link: 1 };
    let v6u = ether(&[0x86, 0xdd], &ipv6(17, 9, 10, &udp(5000, 5001, &[1, 2])));
    let mut b = global_header(f);
    b.extend(record(f, 7, 125_000_000, v6u.len() as u32, &v6u));
    expect(
        "le-nano-ethernet-v6",
        b,
        vec![Ev::Pkt(rec(7.125, "2001:db8::9", "2001:db8::a", 5000, 5001, Protocol::Udp, 64, 64))],
    )?;

    let unsupported = global_header(Fmt { big: false, nano: false, link: 105 });
    let r = read_all(&unsupported);
    check(matches!(r, Err(CaptureError::UnsupportedLinkType(105))), || format!("link 105: {r:?}"))?;
    let r = read_all(&[0xde, 0xad, 0xbe, 0xef, 0, 0, 0, 0]);
    check(matches!(r, Err(CaptureError::UnknownMagic(_))), || format!("bad magic: {r:?}"))?;
    Ok(format!("{} fixture files plus 2 header rejections decode exactly", cases))
}

// ---------------------------------------------------------------- direction

fn direction_table() -> Outcome {
    let home = HomeNetConfig::parse(&[SCENARIO_HOME_NET]).unwrap();
    let inside = "10.0.77.40";
    let outside = "203.0.113.7";
    let table = [
        (inside, inside, Direction::Internal),
        (inside, outside, Direction::Outbound),
        (outside, inside, Direction::Inbound),
        (outside, outside, Direction::External),
    ];
    for (s, d, want) in table {
        let r = rec(0.0, s, d, 1, 2, Protocol::Tcp, 60, 60);
        let got = classify_direction(&r, &home);
        check(got == want, || format!("{s} -> {d}: {got:?}, want {want:?}"))?;
    }
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let addr = prop_oneof![
        any::<u8>().prop_map(|x| IpAddr::from([10, 0, 77, x])),
        any::<u32>().prop_map(|x| IpAddr::from(Ipv4Addr::from(x))),
    ];
    runner
        .run(&(addr.clone(), addr, any::<u16>(), any::<u16>()), |(s, d, sp, dp)| {
            let r = PacketRecord { src_addr: s, dst_addr: d, src_port: sp, dst_port: dp, ..Default::default() };
            prop_assert_eq!(classify_direction(&r.swapped(), &home), classify_direction(&r, &home).reversed());
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("4-row truth table; swap symmetry on 1000 random packets".into())
}

// ---------------------------------------------------------------- averages

fn running_averages() -> Outcome {
    let cumulative = AnalysisConfig { avg_mode: AvgMode::Cumulative, ..Default::default() };
    let exponential = AnalysisConfig::default();
    let mut runner = TestRunner::new(Config { cases: 500, failure_persistence: None, ..Config::default() });
    runner
        .run(&prop::collection::vec(0.0f64..5e4, 1..400), |rates| {
            let avg = running_average(rates.iter().copied(), &cumulative);
            let mut sum = 0.0;
            for (i, (r, a)) in rates.iter().zip(&avg).enumerate() {
                sum += r;
                let mean = sum / (i + 1) as f64;
                prop_assert!((a - mean).abs() <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE), "{a} vs {mean}");
            }
            for cfg in [&cumulative, &exponential] {
                let avg = running_average(rates.iter().copied(), cfg);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for (r, a) in rates.iter().zip(&avg) {
                    lo = lo.min(*r);
                    hi = hi.max(*r);
                    prop_assert!(*a >= lo && *a <= hi);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    for r in [0.0, 1.0, 57.3, 1e5] {
        let avg = running_average(std::iter::repeat_n(r, 1000), &exponential);
        for a in &avg {
            check((a - r).abs() <= 1e-9 * r.max(1.0), || format!("constant {r}: avg {a}"))?;
        }
    }
    Ok("cumulative = mean to 1e-12 rel; EWMA fixed point to 1e-9; bounds on 500 random streams".into())
}

// ---------------------------------------------------------------- alerts

fn first_alert(aggs: &[TrafficAggregates], kind: AlertKind) -> Option<usize> {
    aggs.iter().position(|a| a.alerts.iter().any(|e| e.kind == kind))
}

fn alert_latency() -> Outcome {
    let burst = ScenarioSpec::burst(60.0, 50.0, 500.0, [30.0, 40.0], 7);
    let (_, aggs) = analyze(&burst);
    let spike = first_alert(&aggs, AlertKind::RateSpike).ok_or("no rate_spike")?;
    check((30..=31).contains(&spike), || format!("first rate_spike at window {spike}"))?;
    check(analyze(&burst).1 == aggs, || "burst run not deterministic".into())?;

    let scan = ScenarioSpec::port_scan(40.0, 250.0, 200, Some([20.0, 40.0]), 7);
    let (_, aggs) = analyze(&scan);
    let hit = first_alert(&aggs, AlertKind::PortScan).ok_or("no port_scan")?;
    check((20..=22).contains(&hit), || format!("first port_scan at window {hit}, onset 20"))?;
    check(analyze(&scan).1 == aggs, || "scan run not deterministic".into())?;
    Ok(format!("rate_spike at window {spike}; port_scan at window {hit} (onset 20)"))
}

// ---------------------------------------------------------------- mapping

fn mapping_properties() -> Outcome {
    let curve = (any::<bool>(), 1e-3f64..1e3, 1e-3f64..1e4, -100.0f64..100.0, -100.0f64..100.0).prop_map(
        |(log, lo, span, a, b)| {
            let kind = if log { CurveKind::Log } else { CurveKind::Linear };
            let lo = if log { lo } else { lo - 500.0 };
            MappingCurve::new(kind, [lo, lo + span], [a, b]).unwrap()
        },
    );
    let value = prop_oneof![-1e6f64..1e6, -5.0f64..5.0, 0.0f64..2e4];
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    runner
        .run(&(curve, value.clone(), value), |(c, x, y)| {
            let [i_lo, i_hi] = c.in_domain();
            let [o_lo, o_hi] = c.out_range();
            prop_assert_eq!(c.apply(i_lo), o_lo);
            prop_assert_eq!(c.apply(i_hi), o_hi);
            let cx = c.clamp_input(x);
            prop_assert_eq!(c.clamp_input(cx), cx);
            prop_assert_eq!(c.apply(cx), c.apply(x));
            let (x, y) = if x <= y { (x, y) } else { (y, x) };
            let (fx, fy) = (c.apply(x), c.apply(y));
            prop_assert!(if o_hi >= o_lo { fx <= fy } else { fx >= fy }, "{fx} {fy}");
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("endpoints, clamp idempotence, monotonicity over 10000 (curve, value pair) cases".into())
}

// ---------------------------------------------------------------- render

fn render_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (_, aggs) = analyze(&ScenarioSpec::burst(60.0, 50.0, 500.0, [30.0, 40.0], 7));
    let span = &aggs[25..35];
    let theme = builtin_theme("abstract").unwrap();
    let cfg = RenderConfig { seed: 7, ..Default::default() };
    let mut files = Vec::new();
    for (i, workers) in [1usize, 1, 4].into_iter().enumerate() {
        let c = RenderConfig { workers, ..cfg };
        let audio = render_offline(span, &theme, &theme.mixer, &c).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("r{i}.wav"));
        write_wav(&audio, &path, &c).map_err(|e| e.to_string())?;
        files.push(fs::read(&path).map_err(|e| e.to_string())?);
    }
    check(files[0] == files[1], || "repeat render differs".into())?;
    check(files[0] == files[2], || "4-worker render differs".into())?;
    let secs = (files[0].len() - 44) as f64 / (4.0 * 48_000.0);
    check((secs - 10.0).abs() <= 512.0 / 48_000.0, || format!("rendered {secs} s"))?;
    Ok(format!("{:.3} s burst render, {} bytes, identical x3 (workers 1,1,4)", secs, files[0].len()))
}

fn without(theme: &Theme, voice: &str) -> Theme {
    let mut t = theme.clone();
    t.voices.retain(|v| v.id != voice);
    t.mixer.voices.remove(voice);
    t
}

fn rms(s: &[f32]) -> f64 {
    (s.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
}

fn mixer_algebra() -> Outcome {
    let (_, aggs) = analyze(&ScenarioSpec::steady(5.0, 80.0, 7));
    let theme = without(&builtin_theme("abstract").unwrap(), "alert");
    check(theme.voices.len() == 3, || "expected 3 voices".into())?;
    let cfg = RenderConfig { seed: 7, ..Default::default() };
    let render = |t: &Theme, m| render_offline(&aggs, t, m, &cfg).unwrap();

    let mut muted = theme.mixer.clone();
    muted.strip_mut("grains").mute = true;
    let excluded = without(&theme, "grains");
    check(render(&theme, &muted) == render(&excluded, &excluded.mixer), || "mute != exclusion".into())?;

    let mut solo = theme.mixer.clone();
    solo.strip_mut("tone").solo = true;
    let mut others = theme.mixer.clone();
    others.strip_mut("bed").mute = true;
    others.strip_mut("grains").mute = true;
    check(render(&theme, &solo) == render(&theme, &others), || "solo != others muted".into())?;

    let mut bed = theme.mixer.clone();
    bed.strip_mut("bed").solo = true;
    let mut louder = bed.clone();
    louder.strip_mut("bed").gain_db += 6.0;
    let (a, b) = (render(&theme, &bed), render(&theme, &louder));
    check(b.iter().all(|x| x.abs() < 1.0), || "+6 dB render clipped".into())?;
    let ratio = rms(&b) / rms(&a);
    check((ratio / 1.995_262_314_968_88 - 1.0).abs() <= 1e-3, || format!("RMS ratio {ratio}"))?;

    let full = builtin_theme("abstract").unwrap();
    let mut hot = full.mixer.clone();
    hot.master_gain_db = 40.0;
    for id in full.voice_ids() {
        hot.strip_mut(id).gain_db = 40.0;
    }
    let (_, burst) = analyze(&ScenarioSpec::burst(60.0, 50.0, 500.0, [30.0, 40.0], 7));
    let loud = render_offline(&burst[28..34], &full, &hot, &cfg).unwrap();
    let peak = loud.iter().fold(0.0f32, |m, x| m.max(x.abs()));
    check(peak <= 1.0, || format!("peak {peak}"))?;
    Ok(format!("mute/solo sample-exact; +6 dB RMS ratio {ratio:.5}; peak {peak} under +40 dB"))
}

fn zero_crossings(prev: f32, s: &[f32]) -> usize {
    let mut last = prev;
    let mut n = 0;
    for &x in s {
        if (last < 0.0) != (x < 0.0) {
            n += 1;
        }
        last = x;
    }
    n
}

fn tone_frequency() -> Outcome {
    let mut v = VoiceDefinition::new("tone", VoiceKind::Tone, SoundSource::Builtin(Synth::Sine));
    v.static_params.freq_hz = 440.0;
    let mut state = VoiceState::new(&v, SourceData::from_synth(Synth::Sine, &v, 48_000), 48_000, 0.1, 7);
    let target = v.static_voice_params();
    let mut prev = 0.0;
    let mut cycles = Vec::new();
    for _ in 0..5 {
        let (s, _) = render_voice(&mut state, &target, 48_000);
        cycles.push(zero_crossings(prev, &s) as f64 / 2.0);
        prev = *s.last().unwrap();
    }
    for c in &cycles {
        check((c - 440.0).abs() <= 1.0, || format!("cycles per second {cycles:?}"))?;
    }
    Ok(format!("cycles per second over 5 s: {cycles:?}"))
}

// ---------------------------------------------------------------- end to end

fn fixture(path: &Path) {
    let spec = ScenarioSpec { packets: Some(1000), ..ScenarioSpec::steady(20.0, 50.0, 2024) };
    let mut w = PcapWriter::with_link(Vec::new(), LinkType::Ethernet).unwrap();
    for r in generate_scenario(&spec).unwrap() {
        w.write_packet(&r).unwrap();
    }
    fs::write(path, w.into_inner()).unwrap();
}

fn wav_consistent(bytes: &[u8]) -> Result<usize, String> {
    let le32 = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let le16 = |i: usize| u16::from_le_bytes(bytes[i..i + 2].try_into().unwrap());
    check(&bytes[0..4] == b"RIFF" && &bytes[8..12] == b"WAVE", || "not RIFF/WAVE".into())?;
    check(le32(4) == bytes.len() - 8, || format!("RIFF size {} for {} bytes", le32(4), bytes.len()))?;
    let mut i = 12;
    let mut fmt_ok = false;
    while i + 8 <= bytes.len() {
        let size = le32(i + 4);
        match &bytes[i..i + 4] {
            b"fmt " => {
                fmt_ok = le16(i + 8) == 1 && le16(i + 10) == 2 && le32(i + 12) == 48_000 && le16(i + 22) == 16;
            }
            b"data" => {
                check(fmt_ok, || "bad or missing fmt chunk".into())?;
                check(i + 8 + size == bytes.len(), || format!("data size {size} at {i}, file {}", bytes.len()))?;
                check(size % 4 == 0, || "partial frame".into())?;
                return Ok(size / 4);
            }
            _ => {}
        }
        i += 8 + size + (size & 1);
    }
    Err("no data chunk".into())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pcap = dir.path().join("fixture.pcap");
    let wav = dir.path().join("out.wav");
    let log = dir.path().join("telemetry.jsonl");
    fixture(&pcap);
    let out = Command::new(env!("CARGO_BIN_EXE_netsound"))
        .arg("replay")
        .arg("--pcap")
        .arg(&pcap)
        .arg("--offline")
        .arg("--wav")
        .arg(&wav)
        .arg("--telemetry-log")
        .arg(&log)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    check(out.status.code() == Some(0), || format!("exit {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr)))?;
    check(stdout.contains("packets=1000") && stdout.contains("windows=20"), || format!("summary {stdout:?}"))?;
    let frames: Vec<serde_json::Value> = fs::read_to_string(&log)
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    check(frames.len() == 20, || format!("{} telemetry frames", frames.len()))?;
    for (k, f) in frames.iter().enumerate() {
        check(f["type"] == "telemetry" && f["window"] == k as u64, || format!("frame {k}: {f}"))?;
    }
    let audio_frames = wav_consistent(&fs::read(&wav).map_err(|e| e.to_string())?)?;
    check(hound::WavReader::open(&wav).is_ok(), || "hound rejects output".into())?;

    // malformed control over the console socket during a paced replay
    let cfg = ServiceConfig {
        pcap: Some(pcap.clone()),
        speed: 10.0,
        outputs: OutputConfig {
            listen: Some("127.0.0.1:0".into()),
            wav: Some(dir.path().join("live.wav")),
            ..Default::default()
        },
        ..Default::default()
    };
    let handle = service::start(cfg, Vec::new()).map_err(|e| e.to_string())?;
    let url = format!("ws://{}", handle.local_addr().unwrap());
    let (mut ws, _) = tungstenite::connect(&url).map_err(|e| e.to_string())?;
    ws.send(tungstenite::Message::text("{\"type\": \"set_gain\", oops")).map_err(|e| e.to_string())?;
    let reply = loop {
        let msg = ws.read().map_err(|e| e.to_string())?;
        if let tungstenite::Message::Text(t) = msg {
            let v: serde_json::Value = serde_json::from_str(&t).map_err(|e| e.to_string())?;
            if v["type"] == "reply" {
                break v;
            }
        }
    };
    check(reply["ok"] == false && reply["error"].is_string(), || format!("reply {reply}"))?;
    let mut telemetry = 0;
    while let Ok(m) = ws.read() {
        if m.is_text() {
            telemetry += 1;
        }
    }
    let summary = handle.wait().map_err(|e| e.to_string())?;
    check(summary.windows == 20 && summary.packets == 1000, || format!("paced run {summary}"))?;
    Ok(format!(
        "20 frames in order, WAV {audio_frames} frames consistent, exit 0; malformed control -> error reply, paced run completed ({telemetry} frames after reply)"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("aggregation oracle equivalence", aggregation_oracle),
        ("pcap byte-level decode", pcap_decode),
        ("direction truth table", direction_table),
        ("running average", running_averages),
        ("alert latency", alert_latency),
        ("mapping properties", mapping_properties),
        ("render determinism", render_determinism),
        ("mixer algebra", mixer_algebra),
        ("tone frequency", tone_frequency),
        ("end-to-end service", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let ms = started.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{ms} ms]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{ms} ms]");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    let _ = std::io::stdout().flush();
    if failed > 0 {
        std::process::exit(1);
    }
}
