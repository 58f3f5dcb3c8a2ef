use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::voice::{SoundSource, VoiceDefinition, VoiceKind};
use super::ThemeError;
use crate::audio::MixerState;

pub const BUILTIN_THEMES: [&str; 3] = ["abstract", "forest", "city"];

const ABSTRACT_JSON: &str = include_str!("../../themes/abstract.json");
const FOREST_JSON: &str = include_str!("../../themes/forest.json");
const CITY_JSON: &str = include_str!("../../themes/city.json");

/// A named soundscape: voices plus their default mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theme {
    pub name: String,
    pub voices: Vec<VoiceDefinition>,
    #[serde(default)]
    pub mixer: MixerState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThemeWarning {
    /// The sample could not be found; the voice uses its fallback synth.
    MissingSample { voice: String, path: PathBuf },
}

impl std::fmt::Display for ThemeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThemeWarning::MissingSample { voice, path } => write!(
                f,
                "voice {voice:?}: sample {} not found, using synthesized fallback",
                path.display()
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTheme {
    pub theme: Theme,
    pub warnings: Vec<ThemeWarning>,
}

impl Theme {
    pub fn voice(&self, id: &str) -> Option<&VoiceDefinition> {
        self.voices.iter().find(|v| v.id == id)
    }

    pub fn voice_mut(&mut self, id: &str) -> Option<&mut VoiceDefinition> {
        self.voices.iter_mut().find(|v| v.id == id)
    }

    pub fn voice_ids(&self) -> impl Iterator<Item = &str> {
        self.voices.iter().map(|v| v.id.as_str())
    }

    pub fn validate(&self) -> Result<(), ThemeError> {
        if self.name.trim().is_empty() {
            return Err(ThemeError::Validation("theme name must not be empty".into()));
        }
        let mut ids = HashSet::new();
        for v in &self.voices {
            v.validate()?;
            if !ids.insert(v.id.as_str()) {
                return Err(ThemeError::Validation(format!("duplicate voice id {:?}", v.id)));
            }
        }
        for kind in [VoiceKind::Bed, VoiceKind::Alert] {
            if !self.voices.iter().any(|v| v.kind == kind) {
                return Err(ThemeError::Validation(format!(
                    "theme {:?} needs at least one {kind:?} voice",
                    self.name
                )));
            }
        }
        for (id, strip) in &self.mixer.voices {
            if !ids.contains(id.as_str()) {
                return Err(ThemeError::Validation(format!("mixer names unknown voice {id:?}")));
            }
            if strip.pan.is_some_and(|p| !(-1.0..=1.0).contains(&p)) {
                return Err(ThemeError::Validation(format!("mixer pan for {id:?} outside [-1, 1]")));
            }
            if !strip.gain_db.is_finite() {
                return Err(ThemeError::Validation(format!("mixer gain for {id:?} must be finite")));
            }
        }
        if !self.mixer.master_gain_db.is_finite() {
            return Err(ThemeError::Validation("master gain must be finite".into()));
        }
        Ok(())
    }

    /// Give every voice an explicit channel strip.
    fn fill_mixer(&mut self) {
        for v in &self.voices {
            self.mixer.voices.entry(v.id.clone()).or_default();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("theme serializes")
    }
}

/// Parse and validate a theme document.
///
/// Relative sample paths resolve against `base_dir`. Unresolvable samples
/// are replaced by the voice kind's fallback synth and reported as warnings.
pub fn load_theme(document: &str, base_dir: Option<&Path>) -> Result<LoadedTheme, ThemeError> {
    let mut theme: Theme =
        serde_json::from_str(document).map_err(classify_parse_error)?;
    theme.validate()?;
    let mut warnings = Vec::new();
    for v in &mut theme.voices {
        if let SoundSource::Sample(path) = &v.source {
            let resolved = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            if resolved.is_file() {
                v.source = SoundSource::Sample(resolved);
            } else {
                log::warn!("voice {:?}: sample {} not found, using synth", v.id, resolved.display());
                warnings.push(ThemeWarning::MissingSample {
                    voice: v.id.clone(),
                    path: resolved,
                });
                v.source = SoundSource::Builtin(v.kind.fallback_synth());
            }
        }
    }
    theme.fill_mixer();
    Ok(LoadedTheme { theme, warnings })
}

fn classify_parse_error(e: serde_json::Error) -> ThemeError {
    // curve construction errors surface through serde as custom messages
    let msg = e.to_string();
    if msg.starts_with("invalid mapping curve") {
        ThemeError::InvalidCurve(msg)
    } else {
        ThemeError::Schema(msg)
    }
}

pub fn builtin_theme(name: &str) -> Option<Theme> {
    let doc = match name {
        "abstract" => ABSTRACT_JSON,
        "forest" => FOREST_JSON,
        "city" => CITY_JSON,
        _ => return None,
    };
    Some(load_theme(doc, None).expect("built-in themes are valid").theme)
}

/// Built-in theme by name, or a theme file by path.
pub fn resolve_theme(name_or_path: &str) -> Result<LoadedTheme, ThemeError> {
    if let Some(theme) = builtin_theme(name_or_path) {
        return Ok(LoadedTheme {
            theme,
            warnings: Vec::new(),
        });
    }
    let path = Path::new(name_or_path);
    if path.is_file() {
        let doc = fs::read_to_string(path)?;
        return load_theme(&doc, path.parent());
    }
    Err(ThemeError::UnknownTheme(name_or_path.to_string()))
}
