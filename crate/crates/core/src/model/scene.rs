use serde::{Deserialize, Serialize};

use super::geometry::{distance, ArrayGeometry, Point3};
use crate::error::{arg, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathKind {
    /// Tx -> tag -> rx.
    Direct,
    /// Tx -> tag -> reflector -> rx.
    Reflector { position_m: Point3 },
    /// Direct length plus a fixed extra length, identical at every antenna.
    Excess { extra_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    #[serde(flatten)]
    pub kind: PathKind,
    pub gain: f64,
}

impl Path {
    pub fn direct(gain: f64) -> Self {
        Self { kind: PathKind::Direct, gain }
    }

    pub fn reflector(position_m: Point3, gain: f64) -> Self {
        Self { kind: PathKind::Reflector { position_m }, gain }
    }

    pub fn excess(extra_m: f64, gain: f64) -> Self {
        Self { kind: PathKind::Excess { extra_m }, gain }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.kind, PathKind::Direct)
    }

    /// Total propagation length from the wideband Tx via `tag` to antenna `k`.
    pub fn length_m(&self, tag: &Point3, geom: &ArrayGeometry, k: usize) -> f64 {
        let tx = &geom.tx_wideband_position_m;
        let rx = &geom.rx_positions_m[k];
        let up = distance(tx, tag);
        match &self.kind {
            PathKind::Direct => up + distance(tag, rx),
            PathKind::Reflector { position_m } => {
                up + distance(tag, position_m) + distance(position_m, rx)
            }
            PathKind::Excess { extra_m } => up + distance(tag, rx) + extra_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTag {
    /// EPC bits, most significant first.
    pub epc: Vec<bool>,
    pub position_m: Point3,
    pub paths: Vec<Path>,
}

impl SceneTag {
    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return arg("tag has an empty path set");
        }
        let direct = self.paths.iter().filter(|p| p.is_direct()).count();
        if direct != 1 {
            return arg(format!("tag has {direct} direct paths, expected exactly one"));
        }
        for p in &self.paths {
            if !(p.gain > 0.0 && p.gain <= 1.0) {
                return arg(format!("path gain {} outside (0, 1]", p.gain));
            }
            if let PathKind::Excess { extra_m } = p.kind {
                if !(extra_m >= 0.0 && extra_m.is_finite()) {
                    return arg("excess length must be finite and non-negative");
                }
            }
        }
        if self.position_m.iter().any(|v| !v.is_finite()) {
            return arg("tag position is not finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub tags: Vec<SceneTag>,
    pub ambient_noise_dbm_per_hz: f64,
    pub seed: u64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        for t in &self.tags {
            t.validate()?;
        }
        Ok(())
    }
}
