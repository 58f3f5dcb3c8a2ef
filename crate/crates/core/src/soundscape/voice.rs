use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::curve::MappingCurve;
use super::variable::{variable_value, VariableId};
use super::ThemeError;
use crate::analysis::TrafficAggregates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiceKind {
    /// Continuous ambient layer.
    Bed,
    /// Short enveloped events scheduled at a trigger rate.
    Grain,
    /// Continuous pitched layer.
    Tone,
    /// One-shot played when an alert fires.
    Alert,
}

impl VoiceKind {
    /// Synth used when a voice's sample cannot be loaded.
    pub fn fallback_synth(self) -> Synth {
        match self {
            VoiceKind::Bed | VoiceKind::Alert => Synth::Noise,
            VoiceKind::Grain | VoiceKind::Tone => Synth::Sine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synth {
    Sine,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoundSource {
    Builtin(Synth),
    /// WAV file; relative paths resolve against the theme file's directory.
    Sample(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamTarget {
    GainDb,
    TriggerRateHz,
    PitchRatio,
    Pan,
}

impl fmt::Display for ParamTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamTarget::GainDb => "gain_db",
            ParamTarget::TriggerRateHz => "trigger_rate_hz",
            ParamTarget::PitchRatio => "pitch_ratio",
            ParamTarget::Pan => "pan",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivenParam {
    pub target: ParamTarget,
    pub variable: VariableId,
    pub curve: MappingCurve,
}

fn default_pitch() -> f64 {
    1.0
}

fn default_freq() -> f64 {
    440.0
}

/// Undriven parameter values plus synthesis details.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticParams {
    #[serde(default)]
    pub gain_db: f64,
    #[serde(default)]
    pub pan: f64,
    #[serde(default = "default_pitch")]
    pub pitch: f64,
    #[serde(default)]
    pub trigger_rate_hz: f64,
    /// Base frequency of sine sources.
    #[serde(default = "default_freq")]
    pub freq_hz: f64,
    /// Grain length for grain voices, one-shot length for alert voices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_ms: Option<f64>,
    /// One-pole low-pass cutoff applied to noise sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowpass_hz: Option<f64>,
}

impl Default for StaticParams {
    fn default() -> Self {
        StaticParams {
            gain_db: 0.0,
            pan: 0.0,
            pitch: 1.0,
            trigger_rate_hz: 0.0,
            freq_hz: 440.0,
            envelope_ms: None,
            lowpass_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiceDefinition {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: VoiceKind,
    pub source: SoundSource,
    #[serde(rename = "static", default)]
    pub static_params: StaticParams,
    #[serde(default)]
    pub driven: Vec<DrivenParam>,
}

impl VoiceDefinition {
    pub fn new(id: impl Into<String>, kind: VoiceKind, source: SoundSource) -> Self {
        VoiceDefinition {
            id: id.into(),
            label: None,
            kind,
            source,
            static_params: StaticParams::default(),
            driven: Vec::new(),
        }
    }

    pub fn driven_param(&self, target: ParamTarget) -> Option<&DrivenParam> {
        self.driven.iter().find(|d| d.target == target)
    }

    /// Envelope length in seconds with the kind-specific default.
    pub fn envelope_secs(&self) -> f64 {
        let default_ms = match self.kind {
            VoiceKind::Alert => 400.0,
            _ => 40.0,
        };
        self.static_params.envelope_ms.unwrap_or(default_ms) / 1000.0
    }

    pub fn static_voice_params(&self) -> VoiceParams {
        let s = &self.static_params;
        VoiceParams {
            gain_db: s.gain_db,
            trigger_rate_hz: s.trigger_rate_hz,
            pitch_ratio: s.pitch,
            pan: s.pan,
        }
    }

    /// Add or replace the mapping for `target`, checking voice invariants.
    pub fn set_mapping(&mut self, mapping: DrivenParam) -> Result<(), ThemeError> {
        let mut next = self.clone();
        next.driven.retain(|d| d.target != mapping.target);
        next.driven.push(mapping);
        next.validate()?;
        *self = next;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ThemeError> {
        let fail = |m: String| Err(ThemeError::Validation(format!("voice {:?}: {m}", self.id)));
        if self.id.trim().is_empty() {
            return Err(ThemeError::Validation("voice id must not be empty".into()));
        }
        let s = &self.static_params;
        if !s.gain_db.is_finite() {
            return fail("gain_db must be finite".into());
        }
        if !(-1.0..=1.0).contains(&s.pan) {
            return fail(format!("pan {} outside [-1, 1]", s.pan));
        }
        if !(s.pitch.is_finite() && s.pitch > 0.0) {
            return fail(format!("pitch {} must be positive", s.pitch));
        }
        if !(s.freq_hz.is_finite() && s.freq_hz > 0.0) {
            return fail(format!("freq_hz {} must be positive", s.freq_hz));
        }
        if !(s.trigger_rate_hz.is_finite() && s.trigger_rate_hz >= 0.0) {
            return fail("trigger_rate_hz must be non-negative".into());
        }
        if s.envelope_ms.is_some_and(|e| !(e.is_finite() && e > 0.0)) {
            return fail("envelope_ms must be positive".into());
        }
        if s.lowpass_hz.is_some_and(|f| !(f.is_finite() && f > 0.0)) {
            return fail("lowpass_hz must be positive".into());
        }
        if self.kind == VoiceKind::Alert && !self.driven.is_empty() {
            return fail("alert voices are event-triggered and take no driven parameters".into());
        }
        let mut seen = HashSet::new();
        for d in &self.driven {
            if !seen.insert(d.target) {
                return fail(format!("target {} mapped more than once", d.target));
            }
            let [lo, hi] = d.curve.out_range();
            match d.target {
                ParamTarget::TriggerRateHz if self.kind != VoiceKind::Grain => {
                    return fail("trigger_rate_hz can only drive grain voices".into());
                }
                ParamTarget::TriggerRateHz if lo < 0.0 || hi < 0.0 => {
                    return fail("trigger_rate_hz range must be non-negative".into());
                }
                ParamTarget::PitchRatio if lo <= 0.0 || hi <= 0.0 => {
                    return fail("pitch_ratio range must be positive".into());
                }
                ParamTarget::Pan if lo.abs() > 1.0 || hi.abs() > 1.0 => {
                    return fail("pan range must lie within [-1, 1]".into());
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Per-window target values for one voice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoiceParams {
    pub gain_db: f64,
    pub trigger_rate_hz: f64,
    pub pitch_ratio: f64,
    pub pan: f64,
}

impl VoiceParams {
    pub fn get(&self, target: ParamTarget) -> f64 {
        match target {
            ParamTarget::GainDb => self.gain_db,
            ParamTarget::TriggerRateHz => self.trigger_rate_hz,
            ParamTarget::PitchRatio => self.pitch_ratio,
            ParamTarget::Pan => self.pan,
        }
    }

    pub fn set(&mut self, target: ParamTarget, value: f64) {
        match target {
            ParamTarget::GainDb => self.gain_db = value,
            ParamTarget::TriggerRateHz => self.trigger_rate_hz = value,
            ParamTarget::PitchRatio => self.pitch_ratio = value,
            ParamTarget::Pan => self.pan = value,
        }
    }
}

pub fn update_voice_params(agg: &TrafficAggregates, voice: &VoiceDefinition) -> VoiceParams {
    let mut p = voice.static_voice_params();
    if voice.kind == VoiceKind::Alert {
        return p;
    }
    for d in &voice.driven {
        p.set(d.target, d.curve.apply(variable_value(agg, d.variable)));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grain() -> VoiceDefinition {
        VoiceDefinition::new("grains", VoiceKind::Grain, SoundSource::Builtin(Synth::Sine))
    }

    #[test]
    fn bed_gain_endpoint() {
        let mut bed = VoiceDefinition::new("bed", VoiceKind::Bed, SoundSource::Builtin(Synth::Noise));
        bed.driven.push(DrivenParam {
            target: ParamTarget::GainDb,
            variable: VariableId::PktRate,
            curve: MappingCurve::log([1.0, 1000.0], [-40.0, 0.0]).unwrap(),
        });
        let agg = TrafficAggregates { pkt_rate: 1000.0, ..Default::default() };
        assert_eq!(update_voice_params(&agg, &bed).gain_db, 0.0);
    }

    #[test]
    fn grain_trigger_midpoint() {
        let mut g = grain();
        g.set_mapping(DrivenParam {
            target: ParamTarget::TriggerRateHz,
            variable: VariableId::PktRate,
            curve: MappingCurve::linear([0.0, 200.0], [0.0, 40.0]).unwrap(),
        })
        .unwrap();
        let agg = TrafficAggregates { pkt_rate: 100.0, ..Default::default() };
        assert_eq!(update_voice_params(&agg, &g).trigger_rate_hz, 20.0);
    }

    #[test]
    fn undriven_voice_keeps_static() {
        let mut g = grain();
        g.static_params.gain_db = -6.0;
        g.static_params.pan = 0.25;
        let agg = TrafficAggregates { pkt_rate: 77.0, ..Default::default() };
        assert_eq!(update_voice_params(&agg, &g), g.static_voice_params());
    }

    #[test]
    fn invariants() {
        let mut bed = VoiceDefinition::new("bed", VoiceKind::Bed, SoundSource::Builtin(Synth::Noise));
        let trig = DrivenParam {
            target: ParamTarget::TriggerRateHz,
            variable: VariableId::PktRate,
            curve: MappingCurve::linear([0.0, 1.0], [0.0, 1.0]).unwrap(),
        };
        assert!(matches!(bed.set_mapping(trig), Err(ThemeError::Validation(_))));
        assert!(bed.driven.is_empty());

        let mut alert = VoiceDefinition::new("alert", VoiceKind::Alert, SoundSource::Builtin(Synth::Sine));
        let gain = DrivenParam { target: ParamTarget::GainDb, ..trig };
        assert!(alert.set_mapping(gain).is_err());

        let mut g = grain();
        g.driven = vec![gain, gain];
        assert!(g.validate().is_err());

        let mut p = grain();
        let pitch = DrivenParam {
            target: ParamTarget::PitchRatio,
            curve: MappingCurve::linear([0.0, 1.0], [0.0, 2.0]).unwrap(),
            ..trig
        };
        assert!(p.set_mapping(pitch).is_err());
    }
}
