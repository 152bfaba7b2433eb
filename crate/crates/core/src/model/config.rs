use serde::{Deserialize, Serialize};
use std::path::Path;

use super::geometry::ArrayGeometry;
use super::plan::CarrierPlan;
use crate::error::Result;

/// Array geometry plus carrier plan, the static part of a deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub geometry: ArrayGeometry,
    pub plan: CarrierPlan,
}

impl ModelConfig {
    pub fn paper_default() -> Self {
        Self { geometry: ArrayGeometry::paper_default(), plan: CarrierPlan::paper_default() }
    }

    pub fn desk_default() -> Self {
        Self { geometry: ArrayGeometry::paper_default(), plan: CarrierPlan::desk_default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.plan.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        for c in [ModelConfig::paper_default(), ModelConfig::desk_default()] {
            let s = c.to_json().unwrap();
            let back = ModelConfig::from_json(&s).unwrap();
            assert_eq!(c, back);
            for (a, b) in c.plan.tone_phases_rad.iter().zip(&back.plan.tone_phases_rad) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            assert_eq!(back.to_json().unwrap(), s);
        }
    }
}
