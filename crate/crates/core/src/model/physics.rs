use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::channel::{wrap_phase, ChannelMatrix};
use super::geometry::{distance, ArrayGeometry, Point3};
use super::plan::CarrierPlan;
use super::scene::Scene;
use crate::error::{arg, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Tx -> g -> rx_k distance using the wideband transmitter.
pub fn path_length(g: &Point3, k: usize, geom: &ArrayGeometry) -> f64 {
    distance(&geom.tx_wideband_position_m, g) + distance(g, &geom.rx_positions_m[k])
}

/// Propagation phase for a hypothesised tag position, wrapped to (-pi, pi].
pub fn theoretical_phase(
    g: &Point3,
    k: usize,
    l: usize,
    geom: &ArrayGeometry,
    plan: &CarrierPlan,
) -> Result<f64> {
    if k >= geom.num_antennas() {
        return arg(format!("antenna index {k} out of range"));
    }
    if l >= plan.num_carriers() {
        return arg(format!("carrier index {l} out of range"));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return arg("position is not finite");
    }
    let d = path_length(g, k, geom);
    Ok(wrap_phase(2.0 * PI * plan.carriers_hz[l] * d / SPEED_OF_LIGHT))
}

/// Noise-free multipath channel for one tag.
pub fn synth_channel(
    scene: &Scene,
    geom: &ArrayGeometry,
    plan: &CarrierPlan,
    tag: usize,
) -> Result<ChannelMatrix> {
    let Some(t) = scene.tags.get(tag) else {
        return arg(format!("tag index {tag} out of range"));
    };
    if t.paths.is_empty() {
        return arg("tag has an empty path set");
    }
    geom.validate()?;
    let h = (0..geom.num_antennas())
        .map(|k| {
            let lengths: Vec<f64> = t.paths.iter().map(|p| p.length_m(&t.position_m, geom, k)).collect();
            plan.carriers_hz
                .iter()
                .map(|f| {
                    t.paths
                        .iter()
                        .zip(&lengths)
                        .map(|(p, d)| Complex64::from_polar(p.gain, -2.0 * PI * f * d / SPEED_OF_LIGHT))
                        .sum()
                })
                .collect()
        })
        .collect();
    ChannelMatrix::new(h, plan.carriers_hz.clone(), geom.clone())
}

pub fn thermal_noise_dbm(bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return arg("bandwidth must be positive");
    }
    Ok(-174.0 + 10.0 * bandwidth_hz.log10())
}

pub fn distance_resolution(bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return arg("bandwidth must be positive");
    }
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth_hz))
}

pub fn fraunhofer_distance(aperture_m: f64, wavelength_m: f64) -> Result<f64> {
    if !(aperture_m > 0.0 && wavelength_m > 0.0) {
        return arg("aperture and wavelength must be positive");
    }
    Ok(2.0 * aperture_m * aperture_m / wavelength_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionLimits {
    pub max_tone_dbm: f64,
    pub exclusion_band_hz: Option<(f64, f64)>,
}

impl Default for EmissionLimits {
    fn default() -> Self {
        Self { max_tone_dbm: -15.0, exclusion_band_hz: Some((902e6, 928e6)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneCheck {
    pub carrier_hz: f64,
    pub power_dbm: f64,
    pub power_ok: bool,
    pub outside_exclusion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionReport {
    pub tones: Vec<ToneCheck>,
    pub pass: bool,
}

impl EmissionReport {
    pub fn failing_tones(&self) -> Vec<usize> {
        self.tones
            .iter()
            .enumerate()
            .filter(|(_, t)| !(t.power_ok && t.outside_exclusion))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn validate_emission(plan: &CarrierPlan, limits: &EmissionLimits) -> EmissionReport {
    let tones: Vec<ToneCheck> = plan
        .carriers_hz
        .iter()
        .enumerate()
        .map(|(l, &f)| {
            let power_dbm = plan.tone_power_dbm(l);
            let outside_exclusion = match limits.exclusion_band_hz {
                Some((lo, hi)) => !(f >= lo && f <= hi),
                None => true,
            };
            ToneCheck {
                carrier_hz: f,
                power_dbm,
                power_ok: power_dbm <= limits.max_tone_dbm + 1e-12,
                outside_exclusion,
            }
        })
        .collect();
    let pass = tones.iter().all(|t| t.power_ok && t.outside_exclusion);
    EmissionReport { tones, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Path, SceneTag};

    fn point_plan(f: f64) -> CarrierPlan {
        let mut p = CarrierPlan::paper_default();
        p.carriers_hz = vec![f];
        p.tone_phases_rad = vec![0.0];
        p
    }

    fn colocated() -> ArrayGeometry {
        ArrayGeometry {
            rx_positions_m: vec![[0.0; 3]],
            tx_wideband_position_m: [0.0; 3],
            tx_ism_position_m: [0.0; 3],
        }
    }

    #[test]
    fn whole_wavelengths_give_zero_phase() {
        // lambda = c / f exactly, so a 5 lambda round trip is zero phase.
        let f = SPEED_OF_LIGHT / 0.4;
        let p = theoretical_phase(&[0.0, 1.0, 0.0], 0, 0, &colocated(), &point_plan(f)).unwrap();
        assert!(p.abs() < 1e-9);
    }

    #[test]
    fn quarter_wave() {
        let f = SPEED_OF_LIGHT / 0.4;
        let p = theoretical_phase(&[0.0, 0.05, 0.0], 0, 0, &colocated(), &point_plan(f)).unwrap();
        assert!((p - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn index_errors() {
        let g = ArrayGeometry::paper_default();
        let p = CarrierPlan::paper_default();
        assert!(theoretical_phase(&[0.0, 1.0, 0.0], 8, 0, &g, &p).is_err());
        assert!(theoretical_phase(&[0.0, 1.0, 0.0], 0, 16, &g, &p).is_err());
    }

    #[test]
    fn noise_and_resolution() {
        assert!((thermal_noise_dbm(250e3).unwrap() + 120.0).abs() < 0.1);
        assert!((thermal_noise_dbm(200e6).unwrap() + 91.0).abs() < 0.1);
        assert_eq!(thermal_noise_dbm(1.0).unwrap(), -174.0);
        assert!(thermal_noise_dbm(0.0).is_err());
        let gap = thermal_noise_dbm(200e6).unwrap() - thermal_noise_dbm(250e3).unwrap();
        assert!((gap - 10.0 * 800f64.log10()).abs() < 1e-9);
        assert!((gap - 29.03).abs() < 0.005);
        assert!((distance_resolution(200e6).unwrap() - 0.75).abs() < 0.001);
        assert!((distance_resolution(50e6).unwrap() - 3.0).abs() < 0.01);
        assert!((distance_resolution(150e6).unwrap() - 1.0).abs() < 0.001);
        assert!(distance_resolution(-1.0).is_err());
        assert!((fraunhofer_distance(1.0, 0.3).unwrap() - 6.7).abs() < 0.05);
        assert!(fraunhofer_distance(0.0, 0.3).is_err());
    }

    #[test]
    fn emission_checks() {
        let p = CarrierPlan::paper_default();
        assert!(validate_emission(&p, &EmissionLimits::default()).pass);
        let mut hot = p.clone();
        hot.power_trim_db = vec![0.0; 16];
        hot.power_trim_db[3] = 5.0;
        let r = validate_emission(&hot, &EmissionLimits::default());
        assert!(!r.pass);
        assert_eq!(r.failing_tones(), vec![3]);
        let mut ism = p.clone();
        ism.carriers_hz[10] = 915e6;
        let r = validate_emission(&ism, &EmissionLimits::default());
        assert!(!r.pass);
        assert_eq!(r.failing_tones(), vec![10]);
        assert!(!r.tones[10].outside_exclusion);
    }

    #[test]
    fn single_path_is_pure_rotation() {
        let g = ArrayGeometry::paper_default();
        let p = CarrierPlan::paper_default();
        let pos = [0.4, 3.0, 0.2];
        let scene = Scene {
            tags: vec![SceneTag { epc: vec![], position_m: pos, paths: vec![Path::direct(1.0)] }],
            ambient_noise_dbm_per_hz: -174.0,
            seed: 0,
        };
        let ch = synth_channel(&scene, &g, &p, 0).unwrap();
        for k in 0..8 {
            for l in 0..16 {
                assert!((ch.h[k][l].norm() - 1.0).abs() < 1e-12);
                let th = theoretical_phase(&pos, k, l, &g, &p).unwrap();
                assert!(wrap_phase(ch.phase(k, l) + th).abs() < 1e-9);
            }
        }
        assert!(synth_channel(&scene, &g, &p, 1).is_err());
    }
}
