use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::geometry::ArrayGeometry;
use crate::error::{arg, Result};

/// Ceiling on reported per-entry SNR, dB.
pub const MAX_QUALITY_DB: f64 = 200.0;

/// Wrap an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let mut r = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    if r <= -PI {
        r += 2.0 * PI;
    }
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Complex channel estimates indexed `[antenna][carrier]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    pub h: Vec<Vec<Complex64>>,
    pub carriers_hz: Vec<f64>,
    pub geometry: ArrayGeometry,
    /// Per-entry SNR estimate in dB.
    pub quality_db: Vec<Vec<f64>>,
    /// False marks an entry with no usable measurement.
    pub valid: Vec<Vec<bool>>,
}

impl ChannelMatrix {
    pub fn new(h: Vec<Vec<Complex64>>, carriers_hz: Vec<f64>, geometry: ArrayGeometry) -> Result<Self> {
        let k = h.len();
        let l = carriers_hz.len();
        let m = Self {
            quality_db: vec![vec![MAX_QUALITY_DB; l]; k],
            valid: vec![vec![true; l]; k],
            h,
            carriers_hz,
            geometry,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn num_antennas(&self) -> usize {
        self.h.len()
    }

    pub fn num_carriers(&self) -> usize {
        self.carriers_hz.len()
    }

    pub fn phase(&self, k: usize, l: usize) -> f64 {
        wrap_phase(self.h[k][l].arg())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.h.len();
        let l = self.carriers_hz.len();
        if k != self.geometry.num_antennas() {
            return arg(format!(
                "channel has {k} antenna rows, geometry has {}",
                self.geometry.num_antennas()
            ));
        }
        if self.quality_db.len() != k || self.valid.len() != k {
            return arg("quality/valid rows differ from antenna count");
        }
        for r in 0..k {
            if self.h[r].len() != l || self.quality_db[r].len() != l || self.valid[r].len() != l {
                return arg("channel row length differs from carrier count");
            }
            for c in 0..l {
                if self.valid[r][c] && !(self.h[r][c].re.is_finite() && self.h[r][c].im.is_finite()) {
                    return arg(format!("non-finite channel entry at ({r}, {c})"));
                }
            }
        }
        Ok(())
    }

    pub fn subset(&self, antennas: &[usize], carriers: &[usize]) -> Result<Self> {
        let geometry = self.geometry.subset(antennas)?;
        let mut out = Self {
            h: Vec::new(),
            carriers_hz: Vec::new(),
            geometry,
            quality_db: Vec::new(),
            valid: Vec::new(),
        };
        for &l in carriers {
            match self.carriers_hz.get(l) {
                Some(f) => out.carriers_hz.push(*f),
                None => return arg(format!("carrier {l} out of range")),
            }
        }
        for &k in antennas {
            out.h.push(carriers.iter().map(|&l| self.h[k][l]).collect());
            out.quality_db.push(carriers.iter().map(|&l| self.quality_db[k][l]).collect());
            out.valid.push(carriers.iter().map(|&l| self.valid[k][l]).collect());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5 + 8.0 * PI) - 0.5).abs() < 1e-12);
        for i in -1000..1000 {
            let w = wrap_phase(i as f64 * 0.137);
            assert!(w > -PI && w <= PI);
        }
    }

    #[test]
    fn subset_keeps_entries() {
        let g = ArrayGeometry::paper_default();
        let h: Vec<Vec<Complex64>> = (0..8)
            .map(|k| (0..3).map(|l| Complex64::new(k as f64, l as f64)).collect())
            .collect();
        let m = ChannelMatrix::new(h, vec![1.0, 2.0, 3.0], g).unwrap();
        let s = m.subset(&[5, 2], &[2]).unwrap();
        assert_eq!(s.h, vec![vec![Complex64::new(5.0, 2.0)], vec![Complex64::new(2.0, 2.0)]]);
        assert_eq!(s.geometry.num_antennas(), 2);
        assert!(m.subset(&[9], &[0]).is_err());
    }
}
