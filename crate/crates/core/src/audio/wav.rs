use std::fs::File;
use std::io::{BufWriter, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::{AudioError, RenderConfig};

/// Convert a float sample to 16-bit PCM: clamp, scale by 32767, round.
pub fn to_pcm16(x: f32) -> i16 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
    (x * 32767.0).round() as i16
}

pub fn wav_spec(cfg: &RenderConfig) -> WavSpec {
    WavSpec {
        channels: cfg.channels,
        sample_rate: cfg.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

/// Streaming 16-bit PCM WAV writer. Sizes are patched on [`finalize`](Self::finalize).
pub struct WavWriter<W: Write + Seek> {
    inner: hound::WavWriter<W>,
    frames: u64,
    channels: u16,
}

impl WavWriter<BufWriter<File>> {
    pub fn create(path: &Path, cfg: &RenderConfig) -> Result<Self, AudioError> {
        let inner = hound::WavWriter::create(path, wav_spec(cfg))?;
        Ok(WavWriter {
            inner,
            frames: 0,
            channels: cfg.channels,
        })
    }
}

impl<W: Write + Seek> WavWriter<W> {
    pub fn new(writer: W, cfg: &RenderConfig) -> Result<Self, AudioError> {
        let inner = hound::WavWriter::new(writer, wav_spec(cfg))?;
        Ok(WavWriter {
            inner,
            frames: 0,
            channels: cfg.channels,
        })
    }

    /// Append interleaved samples.
    pub fn write_frames(&mut self, interleaved: &[f32]) -> Result<(), AudioError> {
        let mut w = self.inner.get_i16_writer(interleaved.len() as u32);
        for &s in interleaved {
            w.write_sample(to_pcm16(s));
        }
        w.flush()?;
        self.frames += (interleaved.len() / usize::from(self.channels.max(1))) as u64;
        Ok(())
    }

    pub fn frames_written(&self) -> u64 {
        self.frames
    }

    pub fn finalize(self) -> Result<(), AudioError> {
        self.inner.finalize()?;
        Ok(())
    }
}

pub fn write_wav(interleaved: &[f32], path: &Path, cfg: &RenderConfig) -> Result<(), AudioError> {
    let mut w = WavWriter::create(path, cfg)?;
    w.write_frames(interleaved)?;
    w.finalize()
}
