//! Live capture adapters.
//!
//! An adapter is anything that yields packets as they happen. The only
//! built-in adapter reads a pcap stream from standard input, so any capture
//! tool that can write pcap to a pipe (`tcpdump -w - -U`) can feed the
//! engine without OS-specific code in this crate.

use std::io::{self, Read};

use super::pcap::CaptureError;
use super::replay::{PcapReader, RecordEvent};

pub trait LiveAdapter: Send {
    fn name(&self) -> &str;

    /// Block until the next record is available; `None` when the source closes.
    fn next_event(&mut self) -> Option<Result<RecordEvent, CaptureError>>;
}

/// Reads a pcap stream from any byte source, typically a pipe.
pub struct PcapStreamAdapter<R: Read + Send> {
    name: String,
    reader: PcapReader<R>,
}

impl<R: Read + Send> PcapStreamAdapter<R> {
    pub fn new(name: impl Into<String>, input: R) -> Result<Self, CaptureError> {
        Ok(PcapStreamAdapter {
            name: name.into(),
            reader: PcapReader::new(input)?,
        })
    }
}

impl<R: Read + Send> LiveAdapter for PcapStreamAdapter<R> {
    fn name(&self) -> &str {
        &self.name
    }

    fn next_event(&mut self) -> Option<Result<RecordEvent, CaptureError>> {
        self.reader.next_event()
    }
}

pub const BUILTIN_ADAPTERS: &[&str] = &["pcap-stdin"];

pub fn open_adapter(name: &str) -> Result<Box<dyn LiveAdapter>, CaptureError> {
    match name {
        "pcap-stdin" => Ok(Box::new(PcapStreamAdapter::new(name, io::stdin())?)),
        other => Err(CaptureError::UnknownAdapter(other.to_string())),
    }
}
