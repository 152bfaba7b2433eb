use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::BasebandWave;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    rate_hz: f64,
    start_s: f64,
    samples: usize,
    format: String,
    #[serde(default)]
    metadata: serde_json::Value,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write interleaved little-endian f32 I/Q to `path` and a JSON sidecar to
/// `path` + ".json".
pub fn write_wave(path: impl AsRef<Path>, wave: &BasebandWave, metadata: serde_json::Value) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(wave.samples.len() * 8);
    for s in &wave.samples {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    let side = Sidecar {
        rate_hz: wave.rate_hz,
        start_s: wave.start_s,
        samples: wave.samples.len(),
        format: "cf32le".into(),
        metadata,
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_wave(path: impl AsRef<Path>) -> Result<(BasebandWave, serde_json::Value)> {
    let path = path.as_ref();
    let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let bytes = std::fs::read(path)?;
    if bytes.len() != side.samples * 8 {
        return Err(Error::Argument(format!(
            "{} holds {} bytes, sidecar expects {} samples",
            path.display(),
            bytes.len(),
            side.samples
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok((BasebandWave { samples, rate_hz: side.rate_hz, start_s: side.start_s }, side.metadata))
}
