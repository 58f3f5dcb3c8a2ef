use serde::{Deserialize, Serialize};

use super::config::HomeNetConfig;
use crate::capture::PacketRecord;

/// Gateway-relative direction of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Inbound,
    Outbound,
    Internal,
    External,
}

impl Direction {
    pub fn from_membership(src_home: bool, dst_home: bool) -> Self {
        match (src_home, dst_home) {
            (false, true) => Direction::Inbound,
            (true, false) => Direction::Outbound,
            (true, true) => Direction::Internal,
            (false, false) => Direction::External,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Inbound => Direction::Outbound,
            Direction::Outbound => Direction::Inbound,
            d => d,
        }
    }
}

pub fn classify_direction(record: &PacketRecord, home: &HomeNetConfig) -> Direction {
    Direction::from_membership(home.contains(&record.src_addr), home.contains(&record.dst_addr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketFeatures {
    pub record: PacketRecord,
    pub direction: Direction,
    /// Seconds since the previous packet of the stream; `None` for the first.
    pub inter_arrival: Option<f64>,
}

/// Stateful per-packet feature extraction over one stream.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    home: HomeNetConfig,
    prev_ts: Option<f64>,
}

impl FeatureExtractor {
    pub fn new(home: HomeNetConfig) -> Self {
        FeatureExtractor { home, prev_ts: None }
    }

    pub fn home(&self) -> &HomeNetConfig {
        &self.home
    }

    pub fn attach(&mut self, record: PacketRecord) -> PacketFeatures {
        let inter_arrival = self.prev_ts.map(|prev| (record.ts - prev).max(0.0));
        self.prev_ts = Some(record.ts);
        PacketFeatures {
            direction: classify_direction(&record, &self.home),
            record,
            inter_arrival,
        }
    }
}

pub fn attach_features<I>(records: I, home: &HomeNetConfig) -> impl Iterator<Item = PacketFeatures>
where
    I: IntoIterator<Item = PacketRecord>,
{
    let mut fx = FeatureExtractor::new(home.clone());
    records.into_iter().map(move |r| fx.attach(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn home() -> HomeNetConfig {
        HomeNetConfig::parse(&["10.0.77.0/24"]).unwrap()
    }

    fn rec(src: &str, dst: &str, ts: f64) -> PacketRecord {
        PacketRecord {
            ts,
            src_addr: src.parse().unwrap(),
            dst_addr: dst.parse().unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn truth_table() {
        let h = home();
        let out = rec("10.0.77.5", "93.184.216.34", 0.0);
        assert_eq!(classify_direction(&out, &h), Direction::Outbound);
        assert_eq!(classify_direction(&out.swapped(), &h), Direction::Inbound);
        assert_eq!(classify_direction(&rec("10.0.77.5", "10.0.77.9", 0.0), &h), Direction::Internal);
        assert_eq!(classify_direction(&rec("1.1.1.1", "8.8.8.8", 0.0), &h), Direction::External);
    }

    #[test]
    fn inter_arrivals() {
        let recs = [0.0, 0.1, 0.4].map(|t| rec("1.1.1.1", "8.8.8.8", t));
        let iat: Vec<_> = attach_features(recs, &home()).map(|f| f.inter_arrival).collect();
        assert_eq!(iat[0], None);
        assert!((iat[1].unwrap() - 0.1).abs() < 1e-15);
        assert!((iat[2].unwrap() - 0.3).abs() < 1e-15);

        let single: Vec<_> = attach_features([rec("1.1.1.1", "8.8.8.8", 5.0)], &home()).collect();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].inter_arrival, None);

        let equal: Vec<_> =
            attach_features([2.0, 2.0].map(|t| rec("1.1.1.1", "8.8.8.8", t)), &home()).collect();
        assert_eq!(equal[1].inter_arrival, Some(0.0));
    }
}
