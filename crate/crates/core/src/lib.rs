//! Network traffic sonification.
//!
//! Packets flow through four stages: [`capture`] produces ordered
//! [`PacketRecord`]s, [`analysis`] derives per-packet features and tumbling
//! window aggregates, [`soundscape`] maps traffic variables onto voice
//! parameters, and [`audio`] renders and mixes the voices into a stereo
//! feed. [`service`] wires the stages into a long-running process with a
//! WebSocket telemetry and control endpoint.

pub mod analysis;
pub mod audio;
pub mod capture;
pub mod service;
pub mod soundscape;

pub use analysis::{AlertEvent, AlertKind, AnalysisConfig, Direction, HomeNetConfig, TrafficAggregates};
pub use capture::{CaptureError, PacketRecord, Protocol, ScenarioSpec};
pub use audio::{MixerState, RenderConfig};
pub use soundscape::{MappingCurve, Theme, VariableId, VoiceDefinition, VoiceParams};
pub use service::{RunSummary, ServiceConfig, ServiceError, TelemetryFrame};
