use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::wav::WavWriter;
use super::{AudioError, RenderConfig};

/// Destination for rendered interleaved stereo audio.
///
/// Device backends implement this outside the core crate.
pub trait AudioSink: Send {
    fn write(&mut self, interleaved: &[f32]) -> Result<(), AudioError>;

    /// Flush and close; called exactly once at the end of a run.
    fn finish(self: Box<Self>) -> Result<(), AudioError>;

    /// Real-time sinks consume audio at the sample rate.
    fn is_realtime(&self) -> bool {
        false
    }
}

pub struct WavSink {
    path: PathBuf,
    writer: WavWriter<BufWriter<File>>,
}

impl WavSink {
    pub fn create(path: &Path, cfg: &RenderConfig) -> Result<Self, AudioError> {
        Ok(WavSink {
            path: path.to_path_buf(),
            writer: WavWriter::create(path, cfg)?,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl AudioSink for WavSink {
    fn write(&mut self, interleaved: &[f32]) -> Result<(), AudioError> {
        self.writer.write_frames(interleaved)
    }

    fn finish(self: Box<Self>) -> Result<(), AudioError> {
        log::info!("wrote {} frames to {}", self.writer.frames_written(), self.path.display());
        self.writer.finalize()
    }
}

/// Collects samples in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub samples: Vec<f32>,
}

impl AudioSink for MemorySink {
    fn write(&mut self, interleaved: &[f32]) -> Result<(), AudioError> {
        self.samples.extend_from_slice(interleaved);
        Ok(())
    }

    fn finish(self: Box<Self>) -> Result<(), AudioError> {
        Ok(())
    }
}
