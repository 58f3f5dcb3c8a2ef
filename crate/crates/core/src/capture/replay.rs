use std::io::{self, BufReader, Read};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::decode::DecodeError;
use super::pcap::{
    decode_record, parse_pcap_header, parse_record_header, CaptureError, CaptureMeta, RawRecord,
    GLOBAL_HEADER_LEN, RECORD_HEADER_LEN,
};
use super::record::PacketRecord;

/// Records larger than this are treated as corruption rather than allocated.
const MAX_RECORD_LEN: u32 = 16 * 1024 * 1024;

/// One entry read from a capture: either a decoded packet or a record the
/// decoder could not handle.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordEvent {
    Packet(PacketRecord),
    Malformed { ts: f64, error: DecodeError },
}

/// Sequential reader over a pcap byte stream.
pub struct PcapReader<R: Read> {
    input: BufReader<R>,
    meta: CaptureMeta,
    buf: Vec<u8>,
    done: bool,
}

impl<R: Read> PcapReader<R> {
    pub fn new(input: R) -> Result<Self, CaptureError> {
        let mut input = BufReader::new(input);
        let mut header = [0u8; GLOBAL_HEADER_LEN];
        let got = read_full(&mut input, &mut header)?;
        if got < GLOBAL_HEADER_LEN {
            // a short file that is not pcap at all is reported by its magic
            if got >= 4 {
                if let Err(e @ CaptureError::UnknownMagic(_)) = parse_pcap_header(&header) {
                    return Err(e);
                }
            }
            return Err(CaptureError::TruncatedHeader(got));
        }
        let meta = parse_pcap_header(&header)?;
        Ok(PcapReader {
            input,
            meta,
            buf: Vec::new(),
            done: false,
        })
    }

    pub fn meta(&self) -> &CaptureMeta {
        &self.meta
    }

    /// Next record; `None` at a clean end of file.
    ///
    /// A record cut short by the end of the file yields
    /// `Err(TruncatedRecord)` once and then `None`.
    pub fn next_event(&mut self) -> Option<Result<RecordEvent, CaptureError>> {
        if self.done {
            return None;
        }
        let mut hdr_bytes = [0u8; RECORD_HEADER_LEN];
        let got = match read_full(&mut self.input, &mut hdr_bytes) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        };
        if got == 0 {
            self.done = true;
            return None;
        }
        if got < RECORD_HEADER_LEN {
            self.done = true;
            return Some(Err(CaptureError::TruncatedRecord {
                needed: RECORD_HEADER_LEN,
                available: got,
            }));
        }
        let hdr = match parse_record_header(&hdr_bytes, &self.meta) {
            Ok(h) => h,
            Err(e) => return Some(Err(e)),
        };
        if hdr.incl_len > MAX_RECORD_LEN {
            self.done = true;
            return Some(Err(CaptureError::TruncatedRecord {
                needed: hdr.incl_len as usize,
                available: 0,
            }));
        }
        self.buf.clear();
        self.buf.resize(hdr.incl_len as usize, 0);
        match read_full(&mut self.input, &mut self.buf) {
            Ok(n) if n == self.buf.len() => {}
            Ok(n) => {
                self.done = true;
                return Some(Err(CaptureError::TruncatedRecord {
                    needed: hdr.incl_len as usize,
                    available: n,
                }));
            }
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        }
        let raw = RawRecord {
            ts_sec: hdr.ts_sec,
            ts_frac: hdr.ts_frac,
            incl_len: hdr.incl_len,
            orig_len: hdr.orig_len,
            data: &self.buf,
        };
        Some(Ok(match decode_record(&raw, &self.meta) {
            Ok(rec) => RecordEvent::Packet(rec),
            Err(error) => RecordEvent::Malformed {
                ts: raw.timestamp(&self.meta),
                error,
            },
        }))
    }
}

fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Replay pacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speed {
    /// As fast as possible.
    Offline,
    /// Inter-record gaps divided by this factor.
    Factor(f64),
}

impl Speed {
    pub fn from_factor(f: f64) -> Result<Self, CaptureError> {
        if f.is_infinite() && f > 0.0 {
            Ok(Speed::Offline)
        } else if f.is_finite() && f > 0.0 {
            Ok(Speed::Factor(f))
        } else {
            Err(CaptureError::InvalidSpec(format!(
                "speed factor must be positive, got {f}"
            )))
        }
    }
}

/// Maps capture timestamps onto wall-clock deadlines.
#[derive(Debug)]
pub struct Pacer {
    speed: Speed,
    origin: Option<(Instant, f64)>,
    paused_at: Option<Instant>,
}

impl Pacer {
    pub fn new(speed: Speed) -> Self {
        Pacer {
            speed,
            origin: None,
            paused_at: None,
        }
    }

    /// How long to wait before delivering a packet stamped `ts`.
    pub fn delay_for(&mut self, ts: f64) -> Duration {
        let factor = match self.speed {
            Speed::Offline => return Duration::ZERO,
            Speed::Factor(f) => f,
        };
        let now = Instant::now();
        let &mut (start, ts0) = self.origin.get_or_insert((now, ts));
        let due = start + Duration::from_secs_f64(((ts - ts0) / factor).max(0.0));
        due.saturating_duration_since(now)
    }

    pub fn wait_for(&mut self, ts: f64) {
        let d = self.delay_for(ts);
        if !d.is_zero() {
            thread::sleep(d);
        }
    }

    pub fn pause(&mut self) {
        self.paused_at.get_or_insert_with(Instant::now);
    }

    /// Resume; time spent paused is excluded from the schedule.
    pub fn resume(&mut self) {
        if let Some(at) = self.paused_at.take() {
            if let Some((start, _)) = self.origin.as_mut() {
                *start += at.elapsed();
            }
        }
    }
}

/// Enforces non-decreasing timestamps by clamping and counts violations.
#[derive(Debug, Default, Clone)]
pub struct TimestampGuard {
    last: Option<f64>,
    violations: u64,
}

impl TimestampGuard {
    pub fn admit(&mut self, ts: f64) -> f64 {
        let ts = match self.last {
            Some(prev) if ts < prev => {
                self.violations += 1;
                prev
            }
            _ => ts,
        };
        self.last = Some(ts);
        ts
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub packets: u64,
    pub malformed: u64,
    /// Span between first and last record timestamps.
    pub duration: f64,
    /// Records whose timestamp went backwards (clamped before delivery).
    pub non_monotonic: u64,
    /// The file ended partway through a record (counted as malformed).
    pub truncated: bool,
}

/// Read every record of `source` and hand decoded packets to `sink`, in
/// file order.
pub fn replay<R, F>(source: R, speed: Speed, mut sink: F) -> Result<ReplaySummary, CaptureError>
where
    R: Read,
    F: FnMut(PacketRecord),
{
    let mut reader = PcapReader::new(source)?;
    let mut pacer = Pacer::new(speed);
    let mut guard = TimestampGuard::default();
    let mut summary = ReplaySummary::default();
    let mut first_ts = None;
    let mut last_ts = 0.0;
    while let Some(event) = reader.next_event() {
        let event = match event {
            Ok(ev) => ev,
            Err(CaptureError::TruncatedRecord { .. }) => {
                summary.malformed += 1;
                summary.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let raw_ts = match &event {
            RecordEvent::Packet(p) => p.ts,
            RecordEvent::Malformed { ts, .. } => *ts,
        };
        let ts = guard.admit(raw_ts);
        first_ts.get_or_insert(ts);
        last_ts = ts;
        pacer.wait_for(ts);
        match event {
            RecordEvent::Packet(mut p) => {
                p.ts = ts;
                summary.packets += 1;
                sink(p);
            }
            RecordEvent::Malformed { .. } => summary.malformed += 1,
        }
    }
    summary.duration = first_ts.map_or(0.0, |t0| last_ts - t0);
    summary.non_monotonic = guard.violations();
    Ok(summary)
}
