use rayon::prelude::*;

use super::mixer::{mix, MixerState, VoiceBlock};
use super::source::prepare_source;
use super::voice::VoiceState;
use super::{AudioError, RenderConfig};
use crate::analysis::TrafficAggregates;
use crate::soundscape::{update_voice_params, DrivenParam, Theme, ThemeError, VoiceKind};

/// Stateful soundscape renderer driven one window at a time.
///
/// The audio timeline starts at the first window's start. Window `k` is
/// rendered in whole blocks up to the block containing its end, so the
/// total length tracks elapsed window time to within one block.
pub struct Renderer {
    cfg: RenderConfig,
    theme: Theme,
    mixer: MixerState,
    voices: Vec<VoiceState>,
    origin: Option<f64>,
    cursor: u64,
    /// Frames rendered outside the window timeline (while paused).
    held: u64,
    pool: Option<rayon::ThreadPool>,
}

impl Renderer {
    pub fn new(theme: Theme, mixer: MixerState, cfg: RenderConfig) -> Result<Self, AudioError> {
        cfg.validate()?;
        let pool = if cfg.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers)
                    .build()
                    .map_err(|e| AudioError::InvalidConfig(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        let voices = build_voices(&theme, &cfg);
        Ok(Renderer {
            cfg,
            theme,
            mixer,
            voices,
            origin: None,
            cursor: 0,
            held: 0,
            pool,
        })
    }

    pub fn config(&self) -> &RenderConfig {
        &self.cfg
    }

    pub fn theme(&self) -> &Theme {
        &self.theme
    }

    pub fn mixer(&self) -> &MixerState {
        &self.mixer
    }

    pub fn set_mixer(&mut self, mixer: MixerState) {
        self.mixer = mixer;
    }

    /// Swap themes; voice state restarts from the new theme's static params.
    pub fn set_theme(&mut self, theme: Theme, mixer: MixerState) {
        self.voices = build_voices(&theme, &self.cfg);
        self.theme = theme;
        self.mixer = mixer;
    }

    /// Replace one mapping without disturbing voice state.
    pub fn set_mapping(&mut self, voice: &str, mapping: DrivenParam) -> Result<(), ThemeError> {
        self.theme
            .voice_mut(voice)
            .ok_or_else(|| ThemeError::Validation(format!("unknown voice {voice:?}")))?
            .set_mapping(mapping)
    }

    pub fn voice_states(&self) -> &[VoiceState] {
        &self.voices
    }

    /// Frames rendered so far.
    pub fn frames_rendered(&self) -> u64 {
        self.cursor
    }

    fn secs_to_frame(&self, t: f64) -> u64 {
        let origin = self.origin.unwrap_or(t);
        ((t - origin).max(0.0) * f64::from(self.cfg.sample_rate)).round() as u64 + self.held
    }

    /// Render audio for one window; returns interleaved stereo.
    pub fn render_window(&mut self, agg: &TrafficAggregates) -> Vec<f32> {
        self.origin.get_or_insert(agg.window_start);
        for (state, def) in self.voices.iter_mut().zip(&self.theme.voices) {
            state.set_targets(&update_voice_params(agg, def));
        }
        let block = self.cfg.block_size as u64;
        let end = self.secs_to_frame(agg.window_end());
        let nblocks = end.saturating_sub(self.cursor).div_ceil(block);
        let mut triggers: Vec<usize> = agg
            .alerts
            .iter()
            .map(|a| {
                let at = self.secs_to_frame(a.ts).div_ceil(block) * block;
                (at.max(self.cursor) - self.cursor) as usize / block as usize
            })
            .filter(|&b| (b as u64) < nblocks)
            .collect();
        triggers.sort_unstable();
        triggers.dedup();
        self.render_blocks(nblocks as usize, &triggers)
    }

    /// Render `nblocks` blocks at the current targets (used while paused).
    /// The window timeline shifts back by the held duration.
    pub fn render_hold(&mut self, nblocks: usize) -> Vec<f32> {
        self.held += (nblocks * self.cfg.block_size) as u64;
        self.render_blocks(nblocks, &[])
    }

    fn render_blocks(&mut self, nblocks: usize, triggers: &[usize]) -> Vec<f32> {
        let block = self.cfg.block_size;
        let frames = nblocks * block;
        self.cursor += frames as u64;
        if frames == 0 {
            return Vec::new();
        }
        let render_one = |state: &mut VoiceState| {
            let mut out = VoiceBlock {
                voice: state.id().to_string(),
                samples: vec![0.0; frames],
                pan: vec![0.0; frames],
            };
            let alert = state.kind() == VoiceKind::Alert;
            for (b, (s, p)) in out
                .samples
                .chunks_exact_mut(block)
                .zip(out.pan.chunks_exact_mut(block))
                .enumerate()
            {
                if alert && triggers.binary_search(&b).is_ok() {
                    state.trigger();
                }
                state.render(s, p);
            }
            out
        };
        let stems: Vec<VoiceBlock> = match &self.pool {
            Some(pool) => pool.install(|| self.voices.par_iter_mut().map(render_one).collect()),
            None => self.voices.iter_mut().map(render_one).collect(),
        };
        mix(&stems, &self.mixer).expect("stems share one length")
    }
}

fn build_voices(theme: &Theme, cfg: &RenderConfig) -> Vec<VoiceState> {
    theme
        .voices
        .iter()
        .map(|v| {
            VoiceState::new(
                v,
                prepare_source(v, cfg.sample_rate),
                cfg.sample_rate,
                cfg.smoothing_time,
                cfg.seed,
            )
        })
        .collect()
}

/// Render a whole aggregate stream to interleaved stereo.
pub fn render_offline<'a, I>(
    aggregates: I,
    theme: &Theme,
    mixer: &MixerState,
    cfg: &RenderConfig,
) -> Result<Vec<f32>, AudioError>
where
    I: IntoIterator<Item = &'a TrafficAggregates>,
{
    let mut r = Renderer::new(theme.clone(), mixer.clone(), *cfg)?;
    let mut out = Vec::new();
    for agg in aggregates {
        out.extend(r.render_window(agg));
    }
    Ok(out)
}
