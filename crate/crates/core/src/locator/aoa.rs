use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::hologram::measured_phase;
use crate::error::{arg, Result};
use crate::model::{ChannelMatrix, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoaSpectrum {
    pub angles_deg: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl AoaSpectrum {
    pub fn argmax_deg(&self) -> f64 {
        let mut best = 0;
        for (i, v) in self.magnitude.iter().enumerate() {
            if *v > self.magnitude[best] {
                best = i;
            }
        }
        self.angles_deg[best]
    }

    /// Strict interior local maxima at or above `fraction` of the maximum.
    pub fn peaks_deg(&self, fraction: f64) -> Vec<f64> {
        let m = &self.magnitude;
        let top = m.iter().cloned().fold(0.0, f64::max);
        (1..m.len().saturating_sub(1))
            .filter(|&i| m[i] > m[i - 1] && m[i] > m[i + 1] && m[i] >= fraction * top)
            .map(|i| self.angles_deg[i])
            .collect()
    }
}

/// `S(psi) = |sum_k exp(-j (phi_k - theta_k(psi)))|` with
/// `theta_k = -2 pi f x_k sin(psi) / c` and `x_k` the element offsets along
/// the array axis. Angles run from -90 to 90 degrees.
pub fn aoa_from_phases(phases_rad: &[f64], offsets_m: &[f64], carrier_hz: f64, step_deg: f64) -> Result<AoaSpectrum> {
    let samples: Vec<Complex64> = phases_rad.iter().map(|phi| Complex64::from_polar(1.0, -phi)).collect();
    aoa_from_samples(&samples, offsets_m, carrier_hz, step_deg)
}

/// As [`aoa_from_phases`] with `exp(-j phi_k)` replaced by arbitrary
/// per-element samples, e.g. amplitude-weighted channel entries.
pub fn aoa_from_samples(samples: &[Complex64], offsets_m: &[f64], carrier_hz: f64, step_deg: f64) -> Result<AoaSpectrum> {
    if samples.len() != offsets_m.len() {
        return arg("sample and element counts differ");
    }
    if samples.len() < 2 {
        return arg("angle estimation needs at least two antennas");
    }
    if !(step_deg > 0.0 && step_deg <= 0.5) {
        return arg("angle step must lie in (0, 0.5] degrees");
    }
    let n = (180.0 / step_deg).ceil() as usize + 1;
    let kw = 2.0 * PI * carrier_hz / SPEED_OF_LIGHT;
    let angles_deg: Vec<f64> = (0..n).map(|i| -90.0 + 180.0 * i as f64 / (n - 1) as f64).collect();
    let magnitude = angles_deg
        .iter()
        .map(|a| {
            let s = a.to_radians().sin();
            samples
                .iter()
                .zip(offsets_m)
                .map(|(v, x)| v * Complex64::from_polar(1.0, -kw * x * s))
                .sum::<Complex64>()
                .norm()
        })
        .collect();
    Ok(AoaSpectrum { angles_deg, magnitude })
}

/// Angle spectrum on carrier `l` using each valid antenna's x coordinate.
pub fn aoa_spectrum(ch: &ChannelMatrix, l: usize, step_deg: f64) -> Result<AoaSpectrum> {
    if l >= ch.num_carriers() {
        return arg(format!("carrier {l} out of range"));
    }
    let (phases, xs): (Vec<f64>, Vec<f64>) = (0..ch.num_antennas())
        .filter(|&k| ch.valid[k][l])
        .map(|k| (measured_phase(ch, k, l), ch.geometry.rx_positions_m[k][0]))
        .unzip();
    aoa_from_phases(&phases, &xs, ch.carriers_hz[l], step_deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArrayGeometry;

    const F: f64 = 900e6;

    fn half_wave() -> Vec<f64> {
        let lambda = SPEED_OF_LIGHT / F;
        (0..8).map(|k| (k as f64 - 3.5) * lambda / 2.0).collect()
    }

    /// Far-field propagation phases for plane waves from `sources` (deg).
    fn far_field(xs: &[f64], sources: &[f64]) -> Vec<f64> {
        let kw = 2.0 * PI * F / SPEED_OF_LIGHT;
        xs.iter()
            .map(|x| {
                let h: Complex64 =
                    sources.iter().map(|a: &f64| Complex64::from_polar(1.0, kw * x * a.to_radians().sin())).sum();
                -h.arg()
            })
            .collect()
    }

    #[test]
    fn broadside_and_oblique() {
        let xs = half_wave();
        let s = aoa_from_phases(&far_field(&xs, &[0.0]), &xs, F, 0.5).unwrap();
        assert!(s.argmax_deg().abs() <= 0.5);
        let s = aoa_from_phases(&far_field(&xs, &[30.0]), &xs, F, 0.5).unwrap();
        assert!((s.argmax_deg() - 30.0).abs() <= 1.0, "{}", s.argmax_deg());
    }

    #[test]
    fn two_sources() {
        let xs = half_wave();
        let kw = 2.0 * PI * F / SPEED_OF_LIGHT;
        let h: Vec<Complex64> = xs
            .iter()
            .map(|x| [0.0f64, 40.0].iter().map(|a| Complex64::from_polar(1.0, kw * x * a.to_radians().sin())).sum())
            .collect();
        let peaks = aoa_from_samples(&h, &xs, F, 0.5).unwrap().peaks_deg(0.5);
        assert_eq!(peaks.len(), 2, "{peaks:?}");
        assert!(peaks[0].abs() <= 2.0 && (peaks[1] - 40.0).abs() <= 2.0, "{peaks:?}");
    }

    #[test]
    fn single_antenna_rejected() {
        assert!(aoa_from_phases(&[0.0], &[0.0], F, 0.5).is_err());
        let g = ArrayGeometry::paper_default().subset(&[0]).unwrap();
        let ch = ChannelMatrix::new(vec![vec![Complex64::new(1.0, 0.0)]], vec![F], g).unwrap();
        assert!(aoa_spectrum(&ch, 0, 0.5).is_err());
    }
}
