use std::fs;
use std::path::{Path, PathBuf};

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::analysis::{AnalysisConfig, HomeNetConfig};
use crate::audio::RenderConfig;
use crate::capture::{ScenarioSpec, Speed, SCENARIO_HOME_NET};

pub const DEFAULT_HISTORY_LEN: usize = 600;

/// Home networks assumed for pcap and live sources when none are given.
pub const DEFAULT_HOME_NETWORKS: [&str; 4] = ["10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16", "fc00::/7"];

fn default_theme() -> String {
    "abstract".into()
}

fn default_speed() -> f64 {
    1.0
}

fn default_history() -> usize {
    DEFAULT_HISTORY_LEN
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub wav: Option<PathBuf>,
    /// Audio device name; needs a device sink supplied by the embedding program.
    pub device: Option<String>,
    /// `HOST:PORT` for the console WebSocket endpoint.
    pub listen: Option<String>,
    /// Newline-delimited telemetry JSON, one line per window.
    pub telemetry_log: Option<PathBuf>,
}

impl OutputConfig {
    pub fn is_empty(&self) -> bool {
        self.wav.is_none() && self.device.is_none() && self.listen.is_none() && self.telemetry_log.is_none()
    }
}

/// Complete service configuration, usually read from one JSON file.
///
/// Exactly one of `pcap`, `scenario` and `live` selects the packet source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default)]
    pub pcap: Option<PathBuf>,
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default)]
    pub live: Option<String>,
    /// Replay speed factor for pcap and scenario sources.
    #[serde(default = "default_speed")]
    pub speed: f64,
    /// Process as fast as possible; overrides `speed`.
    #[serde(default)]
    pub offline: bool,
    #[serde(default)]
    pub home_networks: Vec<IpNet>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_theme")]
    pub theme: String,
    #[serde(default)]
    pub render: RenderConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default = "default_history")]
    pub history_len: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            pcap: None,
            scenario: None,
            live: None,
            speed: default_speed(),
            offline: false,
            home_networks: Vec::new(),
            analysis: AnalysisConfig::default(),
            theme: default_theme(),
            render: RenderConfig::default(),
            outputs: OutputConfig::default(),
            history_len: DEFAULT_HISTORY_LEN,
        }
    }
}

/// The resolved packet source.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Pcap { path: PathBuf, speed: Speed },
    Scenario { spec: ScenarioSpec, speed: Speed },
    Live { adapter: String },
}

impl ServiceConfig {
    pub fn from_json(text: &str) -> Result<Self, ServiceError> {
        serde_json::from_str(text).map_err(|e| ServiceError::Config(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, ServiceError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn speed(&self) -> Result<Speed, ServiceError> {
        if self.offline {
            return Ok(Speed::Offline);
        }
        Speed::from_factor(self.speed).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn source(&self) -> Result<SourceSpec, ServiceError> {
        let given = [self.pcap.is_some(), self.scenario.is_some(), self.live.is_some()];
        match given.iter().filter(|&&g| g).count() {
            0 => return Err(ServiceError::Config("no packet source: give one of pcap, scenario, live".into())),
            1 => {}
            _ => return Err(ServiceError::Config("more than one packet source given".into())),
        }
        let speed = self.speed()?;
        if let Some(path) = &self.pcap {
            return Ok(SourceSpec::Pcap { path: path.clone(), speed });
        }
        if let Some(spec) = &self.scenario {
            spec.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
            return Ok(SourceSpec::Scenario { spec: spec.clone(), speed });
        }
        Ok(SourceSpec::Live {
            adapter: self.live.clone().unwrap_or_default(),
        })
    }

    /// Configured home networks, or a source-appropriate default.
    pub fn home(&self) -> Result<HomeNetConfig, ServiceError> {
        let nets = if !self.home_networks.is_empty() {
            self.home_networks.clone()
        } else if self.scenario.is_some() {
            vec![SCENARIO_HOME_NET.parse().expect("valid prefix")]
        } else {
            DEFAULT_HOME_NETWORKS.iter().map(|p| p.parse().expect("valid prefix")).collect()
        };
        HomeNetConfig::new(nets).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        self.source()?;
        self.home()?;
        self.analysis.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        self.render.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        if self.outputs.is_empty() {
            return Err(ServiceError::Config(
                "no output: give at least one of wav, device, listen, telemetry_log".into(),
            ));
        }
        if self.history_len == 0 {
            return Err(ServiceError::Config("history_len must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_wav() -> ServiceConfig {
        ServiceConfig {
            outputs: OutputConfig {
                wav: Some("out.wav".into()),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn exactly_one_source() {
        let mut c = with_wav();
        assert!(matches!(c.validate(), Err(ServiceError::Config(_))));
        c.pcap = Some("f.pcap".into());
        c.validate().unwrap();
        c.scenario = Some(ScenarioSpec::steady(10.0, 5.0, 1));
        let err = c.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn needs_an_output() {
        let c = ServiceConfig {
            pcap: Some("f.pcap".into()),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_defaults() {
        let c = ServiceConfig::from_json(r#"{"pcap":"x.pcap","outputs":{"listen":"127.0.0.1:9000"}}"#).unwrap();
        assert_eq!(c.history_len, 600);
        assert_eq!(c.theme, "abstract");
        assert_eq!(c.render.block_size, 512);
        assert_eq!(c.speed().unwrap(), Speed::Factor(1.0));
        assert!(c.home().unwrap().contains(&"192.168.1.4".parse().unwrap()));
        assert!(ServiceConfig::from_json(r#"{"pcap":"x","bogus":1}"#).is_err());
    }

    #[test]
    fn scenario_home_default() {
        let c = ServiceConfig {
            scenario: Some(ScenarioSpec::steady(10.0, 5.0, 1)),
            ..with_wav()
        };
        let home = c.home().unwrap();
        assert!(home.contains(&"10.0.77.20".parse().unwrap()));
        assert!(!home.contains(&"10.1.0.1".parse().unwrap()));
    }
}
