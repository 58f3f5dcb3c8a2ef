//! Sample loading for voices with a WAV source.

use std::path::Path;
use std::sync::Arc;

use hound::{SampleFormat, WavReader};

use super::voice::SourceData;
use super::AudioError;
use crate::soundscape::{SoundSource, VoiceDefinition};

/// Decode a WAV file to mono `f32` at `sample_rate` (linear resampling).
pub fn load_sample(path: &Path, sample_rate: u32) -> Result<Arc<[f32]>, AudioError> {
    let sample_err = |reason: String| AudioError::Sample {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = WavReader::open(path).map_err(|e| sample_err(e.to_string()))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels.max(1));
    let interleaved: Vec<f32> = match spec.sample_format {
        SampleFormat::Float => reader
            .samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| sample_err(e.to_string()))?,
        SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample.clamp(1, 32) - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()
                .map_err(|e| sample_err(e.to_string()))?
        }
    };
    let mono: Vec<f32> = interleaved
        .chunks(channels)
        .map(|f| f.iter().sum::<f32>() / f.len() as f32)
        .collect();
    if mono.is_empty() {
        return Err(sample_err("no audio frames".into()));
    }
    Ok(resample_linear(&mono, spec.sample_rate, sample_rate).into())
}

pub fn resample_linear(input: &[f32], from: u32, to: u32) -> Vec<f32> {
    if from == to || input.len() < 2 || from == 0 {
        return input.to_vec();
    }
    let ratio = f64::from(from) / f64::from(to);
    let out_len = ((input.len() as f64) / ratio).floor().max(1.0) as usize;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let j = pos.floor() as usize;
            let frac = (pos - j as f64) as f32;
            let a = input[j.min(input.len() - 1)];
            let b = input[(j + 1).min(input.len() - 1)];
            a + (b - a) * frac
        })
        .collect()
}

/// Resolve a voice's sound material, falling back to its kind's synth when
/// the sample cannot be decoded.
pub fn prepare_source(voice: &VoiceDefinition, sample_rate: u32) -> SourceData {
    match &voice.source {
        SoundSource::Builtin(synth) => SourceData::from_synth(*synth, voice, sample_rate),
        SoundSource::Sample(path) => match load_sample(path, sample_rate) {
            Ok(data) => SourceData::Sample(data),
            Err(e) => {
                log::warn!("voice {:?}: {e}; using synthesized fallback", voice.id);
                SourceData::from_synth(voice.kind.fallback_synth(), voice, sample_rate)
            }
        },
    }
}
