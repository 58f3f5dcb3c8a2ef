//! Per-packet features and windowed traffic statistics.
//!
//! Three views of the traffic: raw [`PacketRecord`]s, per-packet
//! [`PacketFeatures`] (direction and inter-arrival time), and per-window
//! [`TrafficAggregates`] with a running average and salience alerts.

mod alerts;
mod config;
mod features;
mod window;

pub use alerts::{detect_alerts, AlertEvent, AlertKind};
pub use config::{AnalysisConfig, AnalysisConfigError, AvgMode, HomeNetConfig};
pub use features::{attach_features, classify_direction, Direction, FeatureExtractor, PacketFeatures};
pub use window::{
    aggregate, running_average, window_index, DirectionCounts, ProtocolCounts, RunningAverage,
    TrafficAggregates, WindowAggregator, RATE_RATIO_EPSILON,
};

use crate::capture::PacketRecord;

/// Feature extraction and window aggregation for one packet stream.
#[derive(Debug, Clone)]
pub struct Analyzer {
    features: FeatureExtractor,
    windows: WindowAggregator,
}

impl Analyzer {
    pub fn new(home: HomeNetConfig, cfg: AnalysisConfig) -> Result<Self, AnalysisConfigError> {
        home.validate()?;
        cfg.validate()?;
        Ok(Analyzer {
            features: FeatureExtractor::new(home),
            windows: WindowAggregator::new(cfg),
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        self.windows.config()
    }

    pub fn origin(&self) -> Option<f64> {
        self.windows.origin()
    }

    /// Feed one packet; returns the windows it closed.
    pub fn push(&mut self, record: PacketRecord) -> Vec<TrafficAggregates> {
        let f = self.features.attach(record);
        self.windows.push(&f)
    }

    pub fn finish(&mut self) -> Option<TrafficAggregates> {
        self.windows.finish()
    }
}
