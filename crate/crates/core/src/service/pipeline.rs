use std::time::Instant;

use super::control::{apply_control, ControlMessage, ControlState, Effect, Reply};
use super::telemetry::{TelemetryFrame, Transport};
use super::{RunSummary, ServiceError};
use crate::analysis::{AnalysisConfig, Analyzer, HomeNetConfig, TrafficAggregates};
use crate::audio::{AudioSink, RenderConfig, Renderer};
use crate::capture::{PacketRecord, TimestampGuard};
use crate::soundscape::Theme;

/// Analysis, rendering and telemetry for one packet stream.
///
/// Everything happens on the caller's thread, in call order, so a given
/// sequence of packets and control messages always yields the same audio
/// and telemetry.
pub struct Pipeline {
    analyzer: Analyzer,
    renderer: Renderer,
    state: ControlState,
    sinks: Vec<Box<dyn AudioSink>>,
    guard: TimestampGuard,
    started: Instant,
    summary: RunSummary,
}

impl Pipeline {
    pub fn new(
        home: HomeNetConfig,
        analysis: AnalysisConfig,
        theme: Theme,
        render: RenderConfig,
        sinks: Vec<Box<dyn AudioSink>>,
    ) -> Result<Self, ServiceError> {
        let analyzer = Analyzer::new(home, analysis).map_err(|e| ServiceError::Config(e.to_string()))?;
        let state = ControlState::new(theme);
        let renderer = Renderer::new(state.theme.clone(), state.mixer.clone(), render)
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        Ok(Pipeline {
            analyzer,
            renderer,
            state,
            sinks,
            guard: TimestampGuard::default(),
            started: Instant::now(),
            summary: RunSummary::default(),
        })
    }

    pub fn state(&self) -> &ControlState {
        &self.state
    }

    pub fn render_config(&self) -> &RenderConfig {
        self.renderer.config()
    }

    pub fn summary(&self) -> RunSummary {
        self.summary
    }

    pub fn note_malformed(&mut self) {
        self.summary.malformed += 1;
    }

    /// Feed one packet; returns telemetry for every window it closed.
    pub fn push(&mut self, mut record: PacketRecord) -> Result<Vec<TelemetryFrame>, ServiceError> {
        record.ts = self.guard.admit(record.ts);
        self.summary.packets += 1;
        self.summary.non_monotonic = self.guard.violations();
        let closed = self.analyzer.push(record);
        closed.into_iter().map(|w| self.close_window(w)).collect()
    }

    fn close_window(&mut self, agg: TrafficAggregates) -> Result<TelemetryFrame, ServiceError> {
        let audio = self.renderer.render_window(&agg);
        self.write_audio(&audio)?;
        self.summary.windows += 1;
        self.summary.alerts += agg.alerts.len() as u64;
        Ok(TelemetryFrame {
            aggregates: agg,
            mixer: self.state.mixer.clone(),
            theme: self.state.theme.name.clone(),
            transport: self.state.transport,
            uptime: self.started.elapsed().as_secs_f64(),
        })
    }

    fn write_audio(&mut self, interleaved: &[f32]) -> Result<(), ServiceError> {
        if interleaved.is_empty() {
            return Ok(());
        }
        for sink in &mut self.sinks {
            sink.write(interleaved)?;
        }
        self.summary.frames += (interleaved.len() / 2) as u64;
        Ok(())
    }

    /// Keep the soundscape running at its last targets for `nblocks` blocks.
    pub fn hold(&mut self, nblocks: usize) -> Result<(), ServiceError> {
        let audio = self.renderer.render_hold(nblocks);
        self.write_audio(&audio)
    }

    /// Apply an operator command. Audio picks it up from the next block.
    pub fn control(&mut self, msg: &ControlMessage) -> Reply {
        let (reply, effect) = apply_control(msg, &mut self.state);
        match effect {
            Effect::None | Effect::Transport(_) => {}
            Effect::Mixer => self.renderer.set_mixer(self.state.mixer.clone()),
            Effect::Theme => {
                log::info!("theme switched to {:?}", self.state.theme.name);
                self.renderer.set_theme(self.state.theme.clone(), self.state.mixer.clone());
            }
            Effect::Mapping { voice, mapping } => {
                self.renderer
                    .set_mapping(&voice, mapping)
                    .expect("mapping already validated against the same theme");
            }
        }
        reply
    }

    pub fn transport(&self) -> Transport {
        self.state.transport
    }

    /// Close the last partial window and finalize every sink.
    pub fn finish(mut self) -> Result<(Vec<TelemetryFrame>, RunSummary), ServiceError> {
        let mut frames = Vec::new();
        if let Some(last) = self.analyzer.finish() {
            frames.push(self.close_window(last)?);
        }
        for sink in self.sinks.drain(..) {
            sink.finish()?;
        }
        Ok((frames, self.summary))
    }
}
