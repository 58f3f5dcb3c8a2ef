//! Voice definitions and the mapping from traffic variables to sonic
//! parameters. Everything here is pure; smoothing of parameter changes
//! happens in the audio engine.

mod curve;
mod theme;
mod variable;
mod voice;

use thiserror::Error;

pub use curve::{apply_mapping, CurveKind, MappingCurve};
pub use theme::{
    builtin_theme, load_theme, resolve_theme, LoadedTheme, Theme, ThemeWarning, BUILTIN_THEMES,
};
pub use variable::{dir_balance, variable_value, VariableId};
pub use voice::{
    update_voice_params, DrivenParam, ParamTarget, SoundSource, StaticParams, Synth,
    VoiceDefinition, VoiceKind, VoiceParams,
};

#[derive(Debug, Error)]
pub enum ThemeError {
    #[error("theme schema error: {0}")]
    Schema(String),
    #[error("theme validation error: {0}")]
    Validation(String),
    #[error("invalid mapping curve: {0}")]
    InvalidCurve(String),
    #[error("unknown theme {0:?}")]
    UnknownTheme(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
