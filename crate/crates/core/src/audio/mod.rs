//! Voice rendering, mixing and WAV output.
//!
//! Offline rendering is deterministic: the same aggregates, theme, mixer,
//! config and seed produce bit-identical output at any worker count.

mod gain;
mod mixer;
mod render;
mod sink;
mod source;
mod voice;
mod wav;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gain::{db_to_linear, linear_to_db, pan_gains};
pub use mixer::{mix, mix_into, ChannelStrip, MixerState, VoiceBlock, DEFAULT_MASTER_DB};
pub use render::{render_offline, Renderer};
pub use sink::{AudioSink, MemorySink, WavSink};
pub use source::{load_sample, prepare_source, resample_linear};
pub use voice::{render_voice, Smoothed, SourceData, VoiceState, MAX_GRAINS};
pub use wav::{to_pcm16, wav_spec, write_wav, WavWriter};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("voice buffer length mismatch: expected {expected} frames, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid render config: {0}")]
    InvalidConfig(String),
    #[error("cannot load sample {}: {reason}", path.display())]
    Sample { path: PathBuf, reason: String },
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub sample_rate: u32,
    pub block_size: usize,
    /// Output channels; only stereo is supported.
    pub channels: u16,
    /// Parameter ramp length in seconds.
    pub smoothing_time: f64,
    pub seed: u64,
    /// Render threads. Output does not depend on this.
    pub workers: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            sample_rate: 48_000,
            block_size: 512,
            channels: 2,
            smoothing_time: 0.1,
            seed: 0,
            workers: 1,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        let bad = |m: &str| Err(AudioError::InvalidConfig(m.into()));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive");
        }
        if self.block_size == 0 {
            return bad("block_size must be positive");
        }
        if self.channels != 2 {
            return bad("only 2 output channels are supported");
        }
        if !(self.smoothing_time.is_finite() && self.smoothing_time >= 0.0) {
            return bad("smoothing_time must be non-negative");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    /// Duration of one block in seconds.
    pub fn block_secs(&self) -> f64 {
        self.block_size as f64 / f64::from(self.sample_rate)
    }
}
