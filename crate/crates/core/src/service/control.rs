use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::telemetry::Transport;
use crate::audio::MixerState;
use crate::soundscape::{resolve_theme, DrivenParam, MappingCurve, ParamTarget, Theme, VariableId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportAction {
    Pause,
    Resume,
}

/// Operator command sent by a console.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMessage {
    SetGain {
        voice: String,
        db: f64,
    },
    Mute {
        voice: String,
        on: bool,
    },
    Solo {
        voice: String,
        on: bool,
    },
    /// `null` clears the override and restores the voice's own pan.
    SetPan {
        voice: String,
        pan: Option<f64>,
    },
    SetMaster {
        db: f64,
    },
    SetTheme {
        name: String,
    },
    /// `variable` defaults to the one the target is currently mapped from.
    SetMapping {
        voice: String,
        target: ParamTarget,
        #[serde(default)]
        variable: Option<VariableId>,
        curve: MappingCurve,
    },
    Transport {
        action: TransportAction,
    },
    SnapshotRequest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    UnknownVoice,
    UnknownTheme,
    InvalidCurve,
    InvalidValue,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    #[serde(rename = "type")]
    pub kind: String,
    pub ok: bool,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<ErrorCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<Value>,
}

impl Reply {
    pub fn ok() -> Self {
        Reply {
            kind: "reply".into(),
            ok: true,
            error: None,
            code: None,
            snapshot: None,
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Reply {
            kind: "reply".into(),
            ok: false,
            error: Some(message.into()),
            code: Some(code),
            snapshot: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reply serializes")
    }
}

/// Parse a client text message. Failures come back as the error reply to send.
pub fn parse_control(text: &str) -> Result<ControlMessage, Reply> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if msg.starts_with("invalid mapping curve") {
            Reply::error(ErrorCode::InvalidCurve, msg)
        } else {
            Reply::error(ErrorCode::BadMessage, format!("malformed control message: {msg}"))
        }
    })
}

/// Operator-controlled engine state.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlState {
    pub theme: Theme,
    pub mixer: MixerState,
    pub transport: Transport,
}

/// What the engine must do after a successful control message.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    None,
    Mixer,
    Theme,
    Mapping { voice: String, mapping: DrivenParam },
    Transport(Transport),
}

impl ControlState {
    pub fn new(theme: Theme) -> Self {
        let mixer = theme.mixer.clone();
        ControlState {
            theme,
            mixer,
            transport: Transport::Running,
        }
    }

    pub fn snapshot(&self) -> Value {
        json!({
            "theme": self.theme.name,
            "voices": self.theme.voices,
            "mixer": self.mixer,
            "transport": self.transport,
        })
    }

    fn known_voice(&self, voice: &str) -> Result<(), Reply> {
        if self.theme.voice(voice).is_some() {
            Ok(())
        } else {
            Err(Reply::error(
                ErrorCode::UnknownVoice,
                format!("unknown voice {voice:?} in theme {:?}", self.theme.name),
            ))
        }
    }
}

fn finite_db(db: f64) -> Result<(), Reply> {
    if db.is_finite() {
        Ok(())
    } else {
        Err(Reply::error(ErrorCode::InvalidValue, "gain must be a finite dB value"))
    }
}

/// Apply one message. On error the state is left untouched.
pub fn apply_control(msg: &ControlMessage, state: &mut ControlState) -> (Reply, Effect) {
    match try_apply(msg, state) {
        Ok((reply, effect)) => (reply, effect),
        Err(reply) => (reply, Effect::None),
    }
}

fn try_apply(msg: &ControlMessage, state: &mut ControlState) -> Result<(Reply, Effect), Reply> {
    let effect = match msg {
        ControlMessage::SetGain { voice, db } => {
            state.known_voice(voice)?;
            finite_db(*db)?;
            state.mixer.strip_mut(voice).gain_db = *db;
            Effect::Mixer
        }
        ControlMessage::Mute { voice, on } => {
            state.known_voice(voice)?;
            state.mixer.strip_mut(voice).mute = *on;
            Effect::Mixer
        }
        ControlMessage::Solo { voice, on } => {
            state.known_voice(voice)?;
            state.mixer.strip_mut(voice).solo = *on;
            Effect::Mixer
        }
        ControlMessage::SetPan { voice, pan } => {
            state.known_voice(voice)?;
            if pan.is_some_and(|p| !(-1.0..=1.0).contains(&p)) {
                return Err(Reply::error(ErrorCode::InvalidValue, "pan must lie in [-1, 1]"));
            }
            state.mixer.strip_mut(voice).pan = *pan;
            Effect::Mixer
        }
        ControlMessage::SetMaster { db } => {
            finite_db(*db)?;
            state.mixer.master_gain_db = *db;
            Effect::Mixer
        }
        ControlMessage::SetTheme { name } => {
            let loaded = resolve_theme(name).map_err(|e| Reply::error(ErrorCode::UnknownTheme, e.to_string()))?;
            for w in &loaded.warnings {
                log::warn!("{w}");
            }
            let master = state.mixer.master_gain_db;
            state.theme = loaded.theme;
            state.mixer = state.theme.mixer.clone();
            state.mixer.master_gain_db = master;
            Effect::Theme
        }
        ControlMessage::SetMapping {
            voice,
            target,
            variable,
            curve,
        } => {
            state.known_voice(voice)?;
            let def = state.theme.voice_mut(voice).expect("checked above");
            let variable = variable
                .or_else(|| def.driven_param(*target).map(|d| d.variable))
                .ok_or_else(|| {
                    Reply::error(
                        ErrorCode::InvalidValue,
                        format!("{target} of {voice:?} is not mapped yet; give a variable"),
                    )
                })?;
            let mapping = DrivenParam {
                target: *target,
                variable,
                curve: *curve,
            };
            def.set_mapping(mapping)
                .map_err(|e| Reply::error(ErrorCode::InvalidValue, e.to_string()))?;
            Effect::Mapping {
                voice: voice.clone(),
                mapping,
            }
        }
        ControlMessage::Transport { action } => {
            state.transport = match action {
                TransportAction::Pause => Transport::Paused,
                TransportAction::Resume => Transport::Running,
            };
            Effect::Transport(state.transport)
        }
        ControlMessage::SnapshotRequest => {
            let mut reply = Reply::ok();
            reply.snapshot = Some(state.snapshot());
            return Ok((reply, Effect::None));
        }
    };
    Ok((Reply::ok(), effect))
}
