//! Per-voice synthesis state.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::gain::db_to_linear;
use crate::soundscape::{Synth, VoiceDefinition, VoiceKind, VoiceParams};

/// Concurrent grains per voice; further onsets are dropped.
pub const MAX_GRAINS: usize = 64;

const ALERT_ATTACK_SECS: f64 = 0.002;

/// A parameter ramping linearly toward its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothed {
    current: f64,
    target: f64,
    step: f64,
}

impl Smoothed {
    pub fn new(value: f64) -> Self {
        Smoothed {
            current: value,
            target: value,
            step: 0.0,
        }
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// Start a ramp reaching `target` after `frames` frames.
    pub fn set_target(&mut self, target: f64, frames: f64) {
        self.target = target;
        if frames <= 1.0 {
            self.current = target;
            self.step = 0.0;
        } else {
            self.step = (target - self.current) / frames;
        }
    }

    pub fn next_value(&mut self) -> f64 {
        if self.current != self.target {
            let next = self.current + self.step;
            let overshoot = (self.step > 0.0 && next >= self.target)
                || (self.step < 0.0 && next <= self.target)
                || self.step == 0.0;
            self.current = if overshoot { self.target } else { next };
        }
        self.current
    }
}

/// Decoded sound material of a voice.
#[derive(Debug, Clone)]
pub enum SourceData {
    Sine { freq_hz: f64 },
    Noise { lowpass: Option<f32> },
    Sample(Arc<[f32]>),
}

impl SourceData {
    pub fn from_synth(synth: Synth, voice: &VoiceDefinition, sample_rate: u32) -> Self {
        match synth {
            Synth::Sine => SourceData::Sine {
                freq_hz: voice.static_params.freq_hz,
            },
            Synth::Noise => SourceData::Noise {
                lowpass: voice
                    .static_params
                    .lowpass_hz
                    .map(|fc| (-(-TAU * fc / f64::from(sample_rate)).exp_m1()) as f32),
            },
        }
    }
}

/// Read position inside one sound: oscillator phase, sample position and
/// filter memory.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Cursor {
    phase: f64,
    pos: f64,
    lp: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Grain {
    age: usize,
    cursor: Cursor,
}

/// Everything needed to continue rendering one voice.
///
/// Rendering `n` frames is a pure function of this state and the targets;
/// randomness comes only from the voice's own seeded generator.
#[derive(Debug, Clone)]
pub struct VoiceState {
    id: String,
    kind: VoiceKind,
    source: SourceData,
    sample_rate: f64,
    smoothing_frames: f64,
    envelope_frames: usize,
    gain_db: Smoothed,
    trigger_rate: Smoothed,
    pitch: Smoothed,
    pan: Smoothed,
    targets: VoiceParams,
    cursor: Cursor,
    rng: ChaCha8Rng,
    hazard: f64,
    grains: Vec<Grain>,
    oneshot: Option<Grain>,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

impl VoiceState {
    pub fn new(
        voice: &VoiceDefinition,
        source: SourceData,
        sample_rate: u32,
        smoothing_time: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&voice.id));
        let hazard: f64 = Exp1.sample(&mut rng);
        let p = voice.static_voice_params();
        let sr = f64::from(sample_rate);
        VoiceState {
            id: voice.id.clone(),
            kind: voice.kind,
            source,
            sample_rate: sr,
            smoothing_frames: (smoothing_time * sr).max(0.0),
            envelope_frames: ((voice.envelope_secs() * sr).round() as usize).max(1),
            gain_db: Smoothed::new(p.gain_db),
            trigger_rate: Smoothed::new(p.trigger_rate_hz),
            pitch: Smoothed::new(p.pitch_ratio),
            pan: Smoothed::new(p.pan),
            targets: p,
            cursor: Cursor::default(),
            rng,
            hazard,
            grains: Vec::new(),
            oneshot: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> VoiceKind {
        self.kind
    }

    pub fn targets(&self) -> &VoiceParams {
        &self.targets
    }

    /// Current smoothed values.
    pub fn current(&self) -> VoiceParams {
        VoiceParams {
            gain_db: self.gain_db.current(),
            trigger_rate_hz: self.trigger_rate.current(),
            pitch_ratio: self.pitch.current(),
            pan: self.pan.current(),
        }
    }

    pub fn active_grains(&self) -> usize {
        self.grains.len() + usize::from(self.oneshot.is_some())
    }

    /// Retarget the ramps; unchanged values keep their ramp in progress.
    pub fn set_targets(&mut self, t: &VoiceParams) {
        let n = self.smoothing_frames;
        for (param, old, new) in [
            (&mut self.gain_db, self.targets.gain_db, t.gain_db),
            (&mut self.trigger_rate, self.targets.trigger_rate_hz, t.trigger_rate_hz),
            (&mut self.pitch, self.targets.pitch_ratio, t.pitch_ratio),
            (&mut self.pan, self.targets.pan, t.pan),
        ] {
            if old != new {
                param.set_target(new, n);
            }
        }
        self.targets = *t;
    }

    /// Start the one-shot (alert voices only).
    pub fn trigger(&mut self) {
        if self.kind == VoiceKind::Alert {
            self.oneshot = Some(Grain {
                age: 0,
                cursor: Cursor::default(),
            });
        }
    }

    /// Render `samples.len()` frames of mono audio and per-frame pan.
    pub fn render(&mut self, samples: &mut [f32], pan: &mut [f32]) {
        debug_assert_eq!(samples.len(), pan.len());
        let mut last_db = f64::NAN;
        let mut gain = 0.0;
        for (out, pan_out) in samples.iter_mut().zip(pan.iter_mut()) {
            let db = self.gain_db.next_value();
            if db != last_db {
                gain = db_to_linear(db);
                last_db = db;
            }
            let rate = self.trigger_rate.next_value();
            let pitch = self.pitch.next_value();
            *pan_out = self.pan.next_value() as f32;
            let raw = match self.kind {
                VoiceKind::Bed | VoiceKind::Tone => {
                    let mut c = self.cursor;
                    let s = self.source_next(&mut c, pitch, true);
                    self.cursor = c;
                    s
                }
                VoiceKind::Grain => self.grain_frame(rate, pitch),
                VoiceKind::Alert => self.oneshot_frame(pitch),
            };
            *out = (raw * gain) as f32;
        }
    }

    fn source_next(&mut self, c: &mut Cursor, pitch: f64, looped: bool) -> f64 {
        match &self.source {
            SourceData::Sine { freq_hz } => {
                let s = (TAU * c.phase).sin();
                c.phase += freq_hz * pitch / self.sample_rate;
                c.phase -= c.phase.floor();
                s
            }
            SourceData::Noise { lowpass } => {
                let white: f32 = self.rng.gen_range(-1.0f32..1.0);
                match *lowpass {
                    Some(a) => {
                        c.lp += a * (white - c.lp);
                        // restore the variance lost to the filter
                        f64::from(c.lp) * ((2.0 - f64::from(a)) / f64::from(a)).sqrt()
                    }
                    None => f64::from(white),
                }
            }
            SourceData::Sample(data) => {
                if data.is_empty() {
                    return 0.0;
                }
                let len = data.len() as f64;
                if c.pos >= len {
                    if !looped {
                        return 0.0;
                    }
                    c.pos %= len;
                }
                let i = c.pos.floor() as usize;
                let frac = (c.pos - i as f64) as f32;
                let a = data[i];
                let b = if i + 1 < data.len() {
                    data[i + 1]
                } else if looped {
                    data[0]
                } else {
                    0.0
                };
                c.pos += pitch;
                f64::from(a + (b - a) * frac)
            }
        }
    }

    fn grain_frame(&mut self, rate: f64, pitch: f64) -> f64 {
        self.hazard -= rate / self.sample_rate;
        if self.hazard <= 0.0 {
            self.hazard += Distribution::<f64>::sample(&Exp1, &mut self.rng);
            if self.grains.len() < MAX_GRAINS {
                self.grains.push(Grain {
                    age: 0,
                    cursor: Cursor::default(),
                });
            }
        }
        let len = self.envelope_frames;
        let mut grains = std::mem::take(&mut self.grains);
        let mut sum = 0.0;
        for g in grains.iter_mut() {
            let env = 0.5 * (1.0 - (TAU * g.age as f64 / len as f64).cos());
            let mut c = g.cursor;
            sum += env * self.source_next(&mut c, pitch, false);
            g.cursor = c;
            g.age += 1;
        }
        grains.retain(|g| g.age < len);
        self.grains = grains;
        sum
    }

    fn oneshot_frame(&mut self, pitch: f64) -> f64 {
        let Some(mut g) = self.oneshot.take() else {
            return 0.0;
        };
        let len = match &self.source {
            SourceData::Sample(data) => ((data.len() as f64 / pitch.max(1e-6)) as usize).max(1),
            _ => self.envelope_frames,
        };
        let t = g.age as f64;
        let attack = (ALERT_ATTACK_SECS * self.sample_rate).max(1.0);
        let decay = 1.0 - t / len as f64;
        let env = (t / attack).min(1.0) * decay * decay;
        let mut c = g.cursor;
        let s = env * self.source_next(&mut c, pitch, false);
        g.cursor = c;
        g.age += 1;
        if g.age < len {
            self.oneshot = Some(g);
        }
        s
    }
}

/// Render `nframes` frames toward `target`; returns mono samples and pan.
pub fn render_voice(state: &mut VoiceState, target: &VoiceParams, nframes: usize) -> (Vec<f32>, Vec<f32>) {
    state.set_targets(target);
    let mut samples = vec![0.0; nframes];
    let mut pan = vec![0.0; nframes];
    state.render(&mut samples, &mut pan);
    (samples, pan)
}
