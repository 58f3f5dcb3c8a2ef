use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gain::{db_to_linear, pan_gains};
use super::AudioError;

/// Operator settings for one voice.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelStrip {
    pub gain_db: f64,
    pub mute: bool,
    pub solo: bool,
    /// Replaces the voice's own (possibly driven) pan when set.
    pub pan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixerState {
    pub master_gain_db: f64,
    pub voices: BTreeMap<String, ChannelStrip>,
}

/// Master level shipped with themes that do not set one.
pub const DEFAULT_MASTER_DB: f64 = -6.0;

impl Default for MixerState {
    fn default() -> Self {
        MixerState {
            master_gain_db: DEFAULT_MASTER_DB,
            voices: BTreeMap::new(),
        }
    }
}

impl MixerState {
    pub fn strip(&self, voice: &str) -> ChannelStrip {
        self.voices.get(voice).copied().unwrap_or_default()
    }

    pub fn strip_mut(&mut self, voice: &str) -> &mut ChannelStrip {
        self.voices.entry(voice.to_string()).or_default()
    }

    pub fn any_solo(&self) -> bool {
        self.voices.values().any(|s| s.solo)
    }

    /// Whether the voice contributes to the mix under mute/solo rules.
    pub fn is_audible(&self, voice: &str) -> bool {
        let s = self.strip(voice);
        !s.mute && (s.solo || !self.any_solo())
    }
}

/// One voice's rendered block: mono samples plus per-frame pan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VoiceBlock {
    pub voice: String,
    pub samples: Vec<f32>,
    pub pan: Vec<f32>,
}

impl VoiceBlock {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Sum voices into interleaved stereo, apply master gain and hard-clip.
pub fn mix(voices: &[VoiceBlock], mixer: &MixerState) -> Result<Vec<f32>, AudioError> {
    let frames = voices.first().map_or(0, |v| v.len());
    let mut out = vec![0.0f32; frames * 2];
    mix_into(voices, mixer, &mut out)?;
    Ok(out)
}

/// As [`mix`], writing into a caller-provided interleaved buffer.
pub fn mix_into(voices: &[VoiceBlock], mixer: &MixerState, out: &mut [f32]) -> Result<(), AudioError> {
    let frames = out.len() / 2;
    for v in voices {
        if v.samples.len() != frames || v.pan.len() != frames {
            return Err(AudioError::LengthMismatch {
                expected: frames,
                got: v.samples.len().min(v.pan.len()),
            });
        }
    }
    out.fill(0.0);
    for v in voices {
        if !mixer.is_audible(&v.voice) {
            continue;
        }
        let strip = mixer.strip(&v.voice);
        let gain = db_to_linear(strip.gain_db);
        match strip.pan {
            Some(p) => {
                let (l, r) = pan_gains(p);
                let (gl, gr) = ((gain * l) as f32, (gain * r) as f32);
                for (frame, &s) in out.chunks_exact_mut(2).zip(&v.samples) {
                    frame[0] += s * gl;
                    frame[1] += s * gr;
                }
            }
            None => {
                for ((frame, &s), &p) in out.chunks_exact_mut(2).zip(&v.samples).zip(&v.pan) {
                    let (l, r) = pan_gains(f64::from(p));
                    frame[0] += s * (gain * l) as f32;
                    frame[1] += s * (gain * r) as f32;
                }
            }
        }
    }
    let master = db_to_linear(mixer.master_gain_db) as f32;
    for s in out.iter_mut() {
        *s = (*s * master).clamp(-1.0, 1.0);
    }
    Ok(())
}
