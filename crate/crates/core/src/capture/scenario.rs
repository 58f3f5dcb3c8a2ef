//! Seeded synthetic traffic.
//!
//! Arrivals are a Poisson process with a piecewise-constant rate. Packet
//! attributes come from a fixed address plan: internal hosts live in
//! `10.0.77.0/24`, remote peers in a fixed external set.

use std::net::{IpAddr, Ipv4Addr};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::pcap::CaptureError;
use super::record::{quantize_timestamp, PacketRecord, Protocol, TsResolution};

/// Internal network of every generated scenario.
pub const SCENARIO_HOME_NET: &str = "10.0.77.0/24";

const INTERNAL_HOSTS: u8 = 16;
const CLIENT_PORTS_PER_HOST: u16 = 4;
const EXTERNAL_HOSTS: [[u8; 4]; 8] = [
    [93, 184, 216, 34],
    [8, 8, 8, 8],
    [1, 1, 1, 1],
    [151, 101, 1, 69],
    [140, 82, 112, 3],
    [172, 217, 16, 142],
    [104, 16, 132, 229],
    [198, 51, 100, 20],
];
const SERVICE_PORTS: [u16; 8] = [443, 80, 53, 22, 25, 123, 993, 8080];
const SCANNER: [u8; 4] = [203, 0, 113, 66];
const SCANNER_PORT: u16 = 51_515;
const SCAN_TARGET: [u8; 4] = [10, 0, 77, 10];

const STREAM_ARRIVALS: u64 = 1;
const STREAM_ATTRIBUTES: u64 = 2;
const STREAM_SCAN_ARRIVALS: u64 = 3;
const STREAM_SCAN_PORTS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Steady,
    Burst,
    PortScan,
    Quiet,
}

/// Parameters of a synthetic traffic run.
///
/// * `steady`: Poisson arrivals at `base_rate`.
/// * `burst`: `burst_rate` inside `burst_window`, `base_rate` elsewhere.
/// * `port_scan`: background at `base_rate / 10`, plus probes at `base_rate`
///   from one remote host during `burst_window` (default: the whole run),
///   with destination ports drawn without replacement from ports
///   `1..=scan_ports`.
/// * `quiet`: Poisson arrivals at `base_rate / 10`.
///
/// `packets`, if set (steady and quiet only), conditions the process on that
/// many arrivals: timestamps are sorted uniform draws over the duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub duration: f64,
    pub base_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_ports: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packets: Option<u64>,
}

impl ScenarioSpec {
    pub fn steady(duration: f64, base_rate: f64, seed: u64) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::Steady,
            duration,
            base_rate,
            burst_rate: None,
            burst_window: None,
            scan_ports: None,
            seed,
            packets: None,
        }
    }

    pub fn quiet(duration: f64, base_rate: f64, seed: u64) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::Quiet,
            ..Self::steady(duration, base_rate, seed)
        }
    }

    pub fn burst(
        duration: f64,
        base_rate: f64,
        burst_rate: f64,
        window: [f64; 2],
        seed: u64,
    ) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::Burst,
            burst_rate: Some(burst_rate),
            burst_window: Some(window),
            ..Self::steady(duration, base_rate, seed)
        }
    }

    pub fn port_scan(
        duration: f64,
        base_rate: f64,
        scan_ports: u32,
        window: Option<[f64; 2]>,
        seed: u64,
    ) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::PortScan,
            scan_ports: Some(scan_ports),
            burst_window: window,
            ..Self::steady(duration, base_rate, seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CaptureError> {
        let spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| CaptureError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CaptureError> {
        let bad = |m: String| Err(CaptureError::InvalidSpec(m));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.base_rate.is_finite() && self.base_rate >= 0.0) {
            return bad(format!("base_rate must be non-negative, got {}", self.base_rate));
        }
        if let Some([start, end]) = self.burst_window {
            if !(start.is_finite() && end.is_finite() && 0.0 <= start && start < end) {
                return bad(format!("window must satisfy 0 <= start < end, got [{start}, {end}]"));
            }
        }
        match self.kind {
            ScenarioKind::Burst => {
                let Some(rate) = self.burst_rate else {
                    return bad("burst scenario needs burst_rate".into());
                };
                if !(rate.is_finite() && rate > self.base_rate) {
                    return bad(format!("burst_rate {rate} must exceed base_rate {}", self.base_rate));
                }
                if self.burst_window.is_none() {
                    return bad("burst scenario needs burst_window".into());
                }
            }
            ScenarioKind::PortScan => match self.scan_ports {
                Some(n) if (1..=65_535).contains(&n) => {}
                Some(n) => return bad(format!("scan_ports must be in 1..=65535, got {n}")),
                None => return bad("port_scan scenario needs scan_ports".into()),
            },
            ScenarioKind::Steady | ScenarioKind::Quiet => {}
        }
        if self.packets.is_some() && !matches!(self.kind, ScenarioKind::Steady | ScenarioKind::Quiet) {
            return bad("packets is only supported for steady and quiet scenarios".into());
        }
        Ok(())
    }

    fn background_segments(&self) -> Vec<(f64, f64)> {
        // (segment end, rate)
        match self.kind {
            ScenarioKind::Steady => vec![(self.duration, self.base_rate)],
            ScenarioKind::Quiet | ScenarioKind::PortScan => {
                vec![(self.duration, self.base_rate / 10.0)]
            }
            ScenarioKind::Burst => {
                let [start, end] = self.burst_window.unwrap_or([0.0, 0.0]);
                let burst = self.burst_rate.unwrap_or(self.base_rate);
                vec![
                    (start.min(self.duration), self.base_rate),
                    (end.min(self.duration), burst),
                    (self.duration, self.base_rate),
                ]
            }
        }
    }

    fn scan_segments(&self) -> Vec<(f64, f64)> {
        if self.kind != ScenarioKind::PortScan {
            return Vec::new();
        }
        let [start, end] = self.burst_window.unwrap_or([0.0, self.duration]);
        vec![
            (start.min(self.duration), 0.0),
            (end.min(self.duration), self.base_rate),
        ]
    }
}

/// Inhomogeneous Poisson arrivals over piecewise-constant rate segments.
struct Arrivals {
    rng: ChaCha8Rng,
    segments: Vec<(f64, f64)>,
    seg: usize,
    t: f64,
}

impl Arrivals {
    fn new(seed: u64, stream: u64, segments: Vec<(f64, f64)>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Arrivals {
            rng,
            segments,
            seg: 0,
            t: 0.0,
        }
    }

    fn next_time(&mut self) -> Option<f64> {
        let mut budget: f64 = Exp1.sample(&mut self.rng);
        while let Some(&(end, rate)) = self.segments.get(self.seg) {
            if rate > 0.0 {
                let candidate = self.t + budget / rate;
                if candidate < end {
                    self.t = candidate;
                    return Some(candidate);
                }
                budget -= rate * (end - self.t);
            }
            self.t = self.t.max(end);
            self.seg += 1;
        }
        None
    }
}

enum Timing {
    Poisson(Arrivals),
    /// Pre-drawn sorted arrival times, consumed from the back.
    Conditioned(Vec<f64>),
}

impl Timing {
    fn next_time(&mut self) -> Option<f64> {
        match self {
            Timing::Poisson(a) => a.next_time(),
            Timing::Conditioned(times) => times.pop(),
        }
    }
}

struct PortPermutation {
    rng: ChaCha8Rng,
    ports: Vec<u16>,
    next: usize,
}

impl PortPermutation {
    fn draw(&mut self) -> u16 {
        if self.next == 0 {
            self.ports.shuffle(&mut self.rng);
        }
        let p = self.ports[self.next];
        self.next = (self.next + 1) % self.ports.len();
        p
    }
}

/// Ordered packet stream for a [`ScenarioSpec`].
pub struct ScenarioStream {
    background: Timing,
    scan: Option<(Arrivals, PortPermutation)>,
    attrs: ChaCha8Rng,
    pending_bg: Option<f64>,
    pending_scan: Option<f64>,
    primed: bool,
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<ScenarioStream, CaptureError> {
    spec.validate()?;
    let background = match spec.packets {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(STREAM_ARRIVALS);
            let mut times: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * spec.duration).collect();
            times.sort_by(|a, b| b.total_cmp(a));
            Timing::Conditioned(times)
        }
        None => Timing::Poisson(Arrivals::new(spec.seed, STREAM_ARRIVALS, spec.background_segments())),
    };
    let scan = (spec.kind == ScenarioKind::PortScan).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(STREAM_SCAN_PORTS);
        let count = spec.scan_ports.unwrap_or(1).min(65_535) as u16;
        (
            Arrivals::new(spec.seed, STREAM_SCAN_ARRIVALS, spec.scan_segments()),
            PortPermutation {
                rng,
                ports: (1..=count).collect(),
                next: 0,
            },
        )
    });
    let mut attrs = ChaCha8Rng::seed_from_u64(spec.seed);
    attrs.set_stream(STREAM_ATTRIBUTES);
    Ok(ScenarioStream {
        background,
        scan,
        attrs,
        pending_bg: None,
        pending_scan: None,
        primed: false,
    })
}

fn internal_host(i: u8) -> Ipv4Addr {
    Ipv4Addr::new(10, 0, 77, 10 + i)
}

fn client_port(host: u8, slot: u16) -> u16 {
    49_152 + u16::from(host) * 16 + slot
}

impl ScenarioStream {
    fn background_packet(&mut self, ts: f64) -> PacketRecord {
        let r = &mut self.attrs;
        let host = r.gen_range(0..INTERNAL_HOSTS);
        let client = client_port(host, r.gen_range(0..CLIENT_PORTS_PER_HOST));
        let remote = Ipv4Addr::from(EXTERNAL_HOSTS[r.gen_range(0..EXTERNAL_HOSTS.len())]);
        let service = SERVICE_PORTS[r.gen_range(0..SERVICE_PORTS.len())];
        let roll: f64 = r.gen();
        let protocol = if roll < 0.70 {
            Protocol::Tcp
        } else if roll < 0.95 {
            Protocol::Udp
        } else {
            Protocol::Icmp
        };
        let wire_len = match protocol {
            Protocol::Tcp => r.gen_range(64..=1514),
            Protocol::Udp => r.gen_range(80..=512),
            _ => 98,
        };
        let dir: f64 = r.gen();
        let (src, dst, sport, dport) = if dir < 0.45 {
            (internal_host(host), remote, client, service)
        } else if dir < 0.90 {
            (remote, internal_host(host), service, client)
        } else if dir < 0.96 {
            let peer = internal_host((host + 1 + r.gen_range(0..INTERNAL_HOSTS - 1)) % INTERNAL_HOSTS);
            (internal_host(host), peer, client, service)
        } else {
            let other = Ipv4Addr::from(EXTERNAL_HOSTS[r.gen_range(0..EXTERNAL_HOSTS.len())]);
            (remote, other, service, service)
        };
        let (sport, dport) = if protocol.has_ports() { (sport, dport) } else { (0, 0) };
        PacketRecord {
            ts,
            src_addr: IpAddr::V4(src),
            dst_addr: IpAddr::V4(dst),
            src_port: sport,
            dst_port: dport,
            protocol,
            wire_len,
            captured_len: wire_len,
        }
    }

    fn scan_packet(&mut self, ts: f64) -> PacketRecord {
        let port = self.scan.as_mut().map_or(0, |(_, perm)| perm.draw());
        PacketRecord {
            ts,
            src_addr: IpAddr::V4(Ipv4Addr::from(SCANNER)),
            dst_addr: IpAddr::V4(Ipv4Addr::from(SCAN_TARGET)),
            src_port: SCANNER_PORT,
            dst_port: port,
            protocol: Protocol::Tcp,
            wire_len: 60,
            captured_len: 60,
        }
    }
}

impl Iterator for ScenarioStream {
    type Item = PacketRecord;

    fn next(&mut self) -> Option<PacketRecord> {
        if !self.primed {
            self.primed = true;
            self.pending_bg = self.background.next_time();
            self.pending_scan = self.scan.as_mut().and_then(|(a, _)| a.next_time());
        }
        let take_scan = match (self.pending_bg, self.pending_scan) {
            (None, None) => return None,
            (Some(_), None) => false,
            (None, Some(_)) => true,
            (Some(b), Some(s)) => s < b,
        };
        if take_scan {
            let t = self.pending_scan.take()?;
            self.pending_scan = self.scan.as_mut().and_then(|(a, _)| a.next_time());
            Some(self.scan_packet(quantize_timestamp(t, TsResolution::Micro)))
        } else {
            let t = self.pending_bg.take()?;
            self.pending_bg = self.background.next_time();
            Some(self.background_packet(quantize_timestamp(t, TsResolution::Micro)))
        }
    }
}
