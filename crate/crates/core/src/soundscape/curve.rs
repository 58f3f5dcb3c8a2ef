use serde::{Deserialize, Serialize};

use super::ThemeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Linear,
    Log,
}

/// Maps a traffic value onto a sonic parameter range.
///
/// Input is clamped to the domain first, so the output always lies within
/// the output range and the endpoints map exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveDoc", into = "CurveDoc")]
pub struct MappingCurve {
    kind: CurveKind,
    in_lo: f64,
    in_hi: f64,
    out_lo: f64,
    out_hi: f64,
}

#[derive(Serialize, Deserialize)]
struct CurveDoc {
    #[serde(rename = "type")]
    kind: CurveKind,
    #[serde(rename = "in")]
    in_domain: [f64; 2],
    #[serde(rename = "out")]
    out_range: [f64; 2],
}

impl TryFrom<CurveDoc> for MappingCurve {
    type Error = ThemeError;

    fn try_from(d: CurveDoc) -> Result<Self, ThemeError> {
        MappingCurve::new(d.kind, d.in_domain, d.out_range)
    }
}

impl From<MappingCurve> for CurveDoc {
    fn from(c: MappingCurve) -> Self {
        CurveDoc {
            kind: c.kind,
            in_domain: [c.in_lo, c.in_hi],
            out_range: [c.out_lo, c.out_hi],
        }
    }
}

impl MappingCurve {
    pub fn new(kind: CurveKind, in_domain: [f64; 2], out_range: [f64; 2]) -> Result<Self, ThemeError> {
        let [in_lo, in_hi] = in_domain;
        let [out_lo, out_hi] = out_range;
        if ![in_lo, in_hi, out_lo, out_hi].iter().all(|v| v.is_finite()) {
            return Err(ThemeError::InvalidCurve("curve bounds must be finite".into()));
        }
        if in_lo >= in_hi {
            return Err(ThemeError::InvalidCurve(format!(
                "input domain [{in_lo}, {in_hi}] must be increasing"
            )));
        }
        if kind == CurveKind::Log && in_lo <= 0.0 {
            return Err(ThemeError::InvalidCurve(format!(
                "log curve needs a positive domain, got lower bound {in_lo}"
            )));
        }
        Ok(MappingCurve {
            kind,
            in_lo,
            in_hi,
            out_lo,
            out_hi,
        })
    }

    pub fn linear(in_domain: [f64; 2], out_range: [f64; 2]) -> Result<Self, ThemeError> {
        Self::new(CurveKind::Linear, in_domain, out_range)
    }

    pub fn log(in_domain: [f64; 2], out_range: [f64; 2]) -> Result<Self, ThemeError> {
        Self::new(CurveKind::Log, in_domain, out_range)
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn in_domain(&self) -> [f64; 2] {
        [self.in_lo, self.in_hi]
    }

    pub fn out_range(&self) -> [f64; 2] {
        [self.out_lo, self.out_hi]
    }

    pub fn clamp_input(&self, value: f64) -> f64 {
        if value.is_nan() {
            self.in_lo
        } else {
            value.clamp(self.in_lo, self.in_hi)
        }
    }

    pub fn apply(&self, value: f64) -> f64 {
        let v = self.clamp_input(value);
        if v >= self.in_hi {
            return self.out_hi;
        }
        let t = match self.kind {
            CurveKind::Linear => (v - self.in_lo) / (self.in_hi - self.in_lo),
            CurveKind::Log => (v / self.in_lo).ln() / (self.in_hi / self.in_lo).ln(),
        }
        .clamp(0.0, 1.0);
        let out = self.out_lo + t * (self.out_hi - self.out_lo);
        out.clamp(self.out_lo.min(self.out_hi), self.out_lo.max(self.out_hi))
    }
}

pub fn apply_mapping(value: f64, curve: &MappingCurve) -> f64 {
    curve.apply(value)
}
