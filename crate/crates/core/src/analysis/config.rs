use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisConfigError {
    #[error("home_networks must not be empty")]
    NoHomeNetworks,
    #[error("invalid CIDR prefix {0:?}")]
    BadPrefix(String),
    #[error("window_len must be positive, got {0}")]
    WindowLen(f64),
    #[error("ewma_tau must be positive, got {0}")]
    EwmaTau(f64),
    #[error("spike_factor must exceed 1, got {0}")]
    SpikeFactor(f64),
    #[error("{0} must be finite and non-negative")]
    Threshold(&'static str),
}

/// Networks on the inside of the gateway.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomeNetConfig {
    pub home_networks: Vec<IpNet>,
}

impl HomeNetConfig {
    pub fn new(home_networks: Vec<IpNet>) -> Result<Self, AnalysisConfigError> {
        let cfg = HomeNetConfig { home_networks };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse<S: AsRef<str>>(prefixes: &[S]) -> Result<Self, AnalysisConfigError> {
        let nets = prefixes
            .iter()
            .map(|p| {
                p.as_ref()
                    .trim()
                    .parse::<IpNet>()
                    .map_err(|_| AnalysisConfigError::BadPrefix(p.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(nets)
    }

    pub fn validate(&self) -> Result<(), AnalysisConfigError> {
        if self.home_networks.is_empty() {
            return Err(AnalysisConfigError::NoHomeNetworks);
        }
        Ok(())
    }

    /// True when the address falls inside any home prefix. IPv4-mapped IPv6
    /// addresses are matched against IPv4 prefixes as well.
    pub fn contains(&self, addr: &IpAddr) -> bool {
        let mapped = match addr {
            IpAddr::V6(v6) => v6.to_ipv4_mapped().map(IpAddr::V4),
            IpAddr::V4(_) => None,
        };
        self.home_networks
            .iter()
            .any(|net| net.contains(addr) || mapped.is_some_and(|m| net.contains(&m)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvgMode {
    Cumulative,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Tumbling window length in seconds.
    pub window_len: f64,
    pub avg_mode: AvgMode,
    /// Time constant of the exponential running average, seconds.
    pub ewma_tau: f64,
    /// Rate spike threshold as a multiple of the running average.
    pub spike_factor: f64,
    /// Absolute floor (packets/s) below which no rate spike is reported.
    pub spike_min_rate: f64,
    /// Unique destination ports per window above which a scan is reported.
    pub scan_port_threshold: f64,
    /// Leading windows during which no alerts are emitted.
    pub warmup_windows: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window_len: 1.0,
            avg_mode: AvgMode::Exponential,
            ewma_tau: 60.0,
            spike_factor: 3.0,
            spike_min_rate: 10.0,
            scan_port_threshold: 100.0,
            warmup_windows: 5,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), AnalysisConfigError> {
        if !(self.window_len.is_finite() && self.window_len > 0.0) {
            return Err(AnalysisConfigError::WindowLen(self.window_len));
        }
        if !(self.ewma_tau.is_finite() && self.ewma_tau > 0.0) {
            return Err(AnalysisConfigError::EwmaTau(self.ewma_tau));
        }
        if !(self.spike_factor.is_finite() && self.spike_factor > 1.0) {
            return Err(AnalysisConfigError::SpikeFactor(self.spike_factor));
        }
        if !(self.spike_min_rate.is_finite() && self.spike_min_rate >= 0.0) {
            return Err(AnalysisConfigError::Threshold("spike_min_rate"));
        }
        if !(self.scan_port_threshold.is_finite() && self.scan_port_threshold > 0.0) {
            return Err(AnalysisConfigError::Threshold("scan_port_threshold"));
        }
        Ok(())
    }

    /// Smoothing factor of the exponential running average for one window.
    pub fn ewma_alpha(&self) -> f64 {
        -(-self.window_len / self.ewma_tau).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        AnalysisConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            AnalysisConfig { window_len: 0.0, ..Default::default() },
            AnalysisConfig { ewma_tau: -1.0, ..Default::default() },
            AnalysisConfig { spike_factor: 1.0, ..Default::default() },
            AnalysisConfig { spike_min_rate: f64::NAN, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn home_networks_parse_and_match() {
        assert!(matches!(
            HomeNetConfig::parse::<&str>(&[]),
            Err(AnalysisConfigError::NoHomeNetworks)
        ));
        assert!(matches!(
            HomeNetConfig::parse(&["10.0.77.0/33"]),
            Err(AnalysisConfigError::BadPrefix(_))
        ));
        let home = HomeNetConfig::parse(&["10.0.77.0/24", "2001:db8::/32"]).unwrap();
        assert!(home.contains(&"10.0.77.200".parse().unwrap()));
        assert!(!home.contains(&"10.0.78.1".parse().unwrap()));
        assert!(home.contains(&"2001:db8:1::5".parse().unwrap()));
        assert!(home.contains(&"::ffff:10.0.77.9".parse().unwrap()));
    }

    #[test]
    fn config_json_uses_defaults() {
        let cfg: AnalysisConfig = serde_json::from_str(r#"{"window_len":2.0,"avg_mode":"cumulative"}"#).unwrap();
        assert_eq!(cfg.window_len, 2.0);
        assert_eq!(cfg.avg_mode, AvgMode::Cumulative);
        assert_eq!(cfg.warmup_windows, 5);
    }
}
