//! The long-running engine: source → analysis → soundscape → audio, with
//! a WebSocket endpoint streaming telemetry to consoles and accepting
//! operator control.
//!
//! [`Pipeline`] is the deterministic single-threaded core; [`start`] runs
//! it against a real source with pacing, outputs and listeners.

mod config;
mod control;
mod hub;
mod pipeline;
mod run;
mod telemetry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;
use crate::capture::CaptureError;
use crate::soundscape::ThemeError;

pub use config::{OutputConfig, ServiceConfig, SourceSpec, DEFAULT_HISTORY_LEN, DEFAULT_HOME_NETWORKS};
pub use control::{
    apply_control, parse_control, ControlMessage, ControlState, Effect, ErrorCode, Reply, TransportAction,
};
pub use hub::Hub;
pub use pipeline::Pipeline;
pub use run::{start, ControlClient, ServiceHandle};
pub use telemetry::{decode_telemetry, encode_telemetry, TelemetryFrame, Transport};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Theme(#[from] ThemeError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("source error: {0}")]
    Source(#[from] CaptureError),
    #[error("audio output: {0}")]
    Audio(#[from] AudioError),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    /// Process exit status: 2 for configuration problems, 3 for source
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Config(_) | ServiceError::Theme(_) | ServiceError::Bind { .. } => 2,
            ServiceError::Source(_) => 3,
            _ => 1,
        }
    }
}

/// Totals reported when a run ends.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub packets: u64,
    pub malformed: u64,
    pub windows: u64,
    pub alerts: u64,
    /// Packets whose timestamp went backwards (clamped).
    pub non_monotonic: u64,
    /// Stereo frames written to audio outputs.
    pub frames: u64,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "packets={} malformed={} windows={} alerts={} frames={}",
            self.packets, self.malformed, self.windows, self.alerts, self.frames
        )?;
        if self.non_monotonic > 0 {
            write!(f, " non_monotonic={}", self.non_monotonic)?;
        }
        Ok(())
    }
}
