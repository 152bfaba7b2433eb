use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::hologram::measured_phase;
use crate::error::{arg, Result};
use crate::model::{ChannelMatrix, SPEED_OF_LIGHT};

/// Uniform distance axis `[0, max_m]`, one-way metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TofAxis {
    pub step_m: f64,
    pub max_m: f64,
}

impl Default for TofAxis {
    fn default() -> Self {
        Self { step_m: 0.01, max_m: 12.0 }
    }
}

impl TofAxis {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_m > 0.0 && self.step_m <= 0.1) {
            return arg("ToF axis step must lie in (0, 0.1] m");
        }
        if !(self.max_m > self.step_m) || !self.max_m.is_finite() {
            return arg("ToF axis must span more than one step");
        }
        Ok(())
    }

    pub fn samples(&self) -> Vec<f64> {
        let n = (self.max_m / self.step_m + 1e-9).floor() as usize + 1;
        (0..n).map(|i| i as f64 * self.step_m).collect()
    }
}

/// How axis values map onto the propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceUnits {
    /// Half the Tx -> tag -> Rx path.
    OneWay,
    /// The whole Tx -> tag -> Rx path.
    RoundTrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TofProfile {
    pub distances_m: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub complex_values: Vec<Complex64>,
}

impl TofProfile {
    pub fn len(&self) -> usize {
        self.distances_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_m.is_empty()
    }

    /// Index of the largest magnitude; first on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.magnitude.iter().enumerate() {
            if *v > self.magnitude[best] {
                best = i;
            }
        }
        best
    }

    /// Strict interior local maxima at or above `threshold`, by index.
    pub fn local_maxima(&self, threshold: f64) -> Vec<usize> {
        let m = &self.magnitude;
        (1..m.len().saturating_sub(1)).filter(|&i| m[i] > m[i - 1] && m[i] > m[i + 1] && m[i] >= threshold).collect()
    }

    pub fn nearest_index(&self, d: f64) -> usize {
        match self.distances_m.binary_search_by(|v| v.total_cmp(&d)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.len() => self.len() - 1,
            Err(i) => {
                if d - self.distances_m[i - 1] <= self.distances_m[i] - d {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Per-carrier taper applied before the ToF sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TofWindow {
    #[default]
    Rectangular,
    /// Hamming taper over carrier frequency across the occupied band.
    Hamming,
}

impl TofWindow {
    pub fn weights(&self, carriers_hz: &[f64]) -> Vec<f64> {
        let lo = carriers_hz.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = carriers_hz.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        carriers_hz
            .iter()
            .map(|f| match self {
                Self::Rectangular => 1.0,
                Self::Hamming if hi > lo => 0.54 - 0.46 * (2.0 * PI * (f - lo) / (hi - lo)).cos(),
                Self::Hamming => 1.0,
            })
            .collect()
    }
}

/// `S(tau) = sum_l exp(-j (phi_l - 2 pi f_l tau))` with propagation phases
/// `phi_l`, evaluated at the path delays implied by `distances_m`.
pub fn tof_spectrum(
    phases_rad: &[f64],
    carriers_hz: &[f64],
    distances_m: &[f64],
    units: DistanceUnits,
) -> Result<TofProfile> {
    tof_spectrum_weighted(phases_rad, carriers_hz, &vec![1.0; carriers_hz.len()], distances_m, units)
}

/// [`tof_spectrum`] with each carrier's term scaled by `weights`.
pub fn tof_spectrum_weighted(
    phases_rad: &[f64],
    carriers_hz: &[f64],
    weights: &[f64],
    distances_m: &[f64],
    units: DistanceUnits,
) -> Result<TofProfile> {
    if phases_rad.len() != carriers_hz.len() || weights.len() != carriers_hz.len() {
        return arg("phase, weight and carrier counts differ");
    }
    if carriers_hz.len() < 2 {
        return arg("at least two carriers are needed for time resolution");
    }
    if distances_m.windows(2).any(|w| !(w[1] > w[0])) {
        return arg("distance axis must be strictly increasing");
    }
    let wavenumbers: Vec<f64> = carriers_hz.iter().map(|f| 2.0 * PI * f / SPEED_OF_LIGHT).collect();
    let complex_values: Vec<Complex64> = distances_m
        .iter()
        .map(|&d| {
            let path = match units {
                DistanceUnits::OneWay => 2.0 * d,
                DistanceUnits::RoundTrip => d,
            };
            phases_rad
                .iter()
                .zip(&wavenumbers)
                .zip(weights)
                .map(|((phi, kw), w)| {
                    let (s, c) = (kw * path - phi).sin_cos();
                    Complex64::new(w * c, w * s)
                })
                .sum()
        })
        .collect();
    Ok(TofProfile {
        distances_m: distances_m.to_vec(),
        magnitude: complex_values.iter().map(|v| v.norm()).collect(),
        complex_values,
    })
}

/// ToF layer on one-way distances.
pub fn tof_profile(phases_rad: &[f64], carriers_hz: &[f64], axis: &TofAxis) -> Result<TofProfile> {
    axis.validate()?;
    tof_spectrum(phases_rad, carriers_hz, &axis.samples(), DistanceUnits::OneWay)
}

/// Propagation phases and carriers of the valid entries of antenna `k`.
pub fn antenna_row(ch: &ChannelMatrix, k: usize) -> (Vec<f64>, Vec<f64>) {
    (0..ch.num_carriers())
        .filter(|&l| ch.valid[k][l])
        .map(|l| (measured_phase(ch, k, l), ch.carriers_hz[l]))
        .unzip()
}

/// Per-antenna profiles (None where fewer than two carriers are valid)
/// and their SNR-weighted magnitude sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedTof {
    pub per_antenna: Vec<Option<TofProfile>>,
    pub combined: TofProfile,
    /// Same combination over CLEAN-restored profiles, when requested.
    pub deconvolved: Option<TofProfile>,
}

pub fn combined_tof_profile(
    ch: &ChannelMatrix,
    axis: &TofAxis,
    window: TofWindow,
    deconvolution: &TofDeconvolution,
) -> Result<CombinedTof> {
    axis.validate()?;
    let d = axis.samples();
    let mut per_antenna = Vec::with_capacity(ch.num_antennas());
    let mut restored = Vec::new();
    let mut weights = Vec::with_capacity(ch.num_antennas());
    for k in 0..ch.num_antennas() {
        let (phases, carriers) = antenna_row(ch, k);
        if carriers.len() < 2 {
            per_antenna.push(None);
            restored.push(None);
            weights.push(0.0);
            continue;
        }
        let snr: Vec<f64> = (0..ch.num_carriers())
            .filter(|&l| ch.valid[k][l])
            .map(|l| 10f64.powf(ch.quality_db[k][l] / 10.0))
            .collect();
        weights.push(snr.iter().sum::<f64>() / snr.len() as f64);
        let w = window.weights(&ch.carriers_hz);
        let w: Vec<f64> = (0..ch.num_carriers()).filter(|&l| ch.valid[k][l]).map(|l| w[l]).collect();
        if let TofDeconvolution::Clean(cfg) = deconvolution {
            let h: Vec<Complex64> = (0..ch.num_carriers()).filter(|&l| ch.valid[k][l]).map(|l| ch.h[k][l]).collect();
            restored.push(Some(clean_tof(&h, &carriers, &w, axis, cfg)?.restored));
        }
        per_antenna.push(Some(tof_spectrum_weighted(&phases, &carriers, &w, &d, DistanceUnits::OneWay)?));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return arg("no antenna has two valid carriers");
    }
    let combine = |profiles: &[Option<TofProfile>]| {
        let mut magnitude = vec![0.0; d.len()];
        let mut complex_values = vec![Complex64::new(0.0, 0.0); d.len()];
        for (p, w) in profiles.iter().zip(&weights) {
            if let Some(p) = p {
                let w = w / total;
                for i in 0..d.len() {
                    magnitude[i] += w * p.magnitude[i];
                    complex_values[i] += p.complex_values[i] * w;
                }
            }
        }
        TofProfile { distances_m: d.clone(), magnitude, complex_values }
    };
    let combined = combine(&per_antenna);
    let deconvolved = (!restored.is_empty()).then(|| combine(&restored));
    Ok(CombinedTof { per_antenna, combined, deconvolved })
}

/// Greedy deconvolution of a ToF profile into point paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// Fraction of the strongest residual peak removed per iteration.
    pub loop_gain: f64,
    pub max_iterations: usize,
    /// Stop once the residual maximum falls below this fraction of the
    /// initial maximum.
    pub floor: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self { loop_gain: 0.3, max_iterations: 300, floor: 0.05 }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.loop_gain > 0.0 && self.loop_gain <= 1.0) {
            return arg("CLEAN loop gain must lie in (0, 1]");
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return arg("CLEAN floor must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Which profile the direct path is searched on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TofDeconvolution {
    /// The phase-only profile as measured.
    None,
    /// Raw peaks count only where the CLEAN-restored profile (Gaussian
    /// beam of the main-lobe width plus residual) also clears the threshold.
    Clean(CleanConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanComponent {
    pub distance_m: f64,
    /// Complex path gain in channel convention.
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanResult {
    pub components: Vec<CleanComponent>,
    pub restored: TofProfile,
    pub residual: TofProfile,
}

/// CLEAN over `sum_l w_l h_l exp(j 2 pi f_l 2d / c)` on a uniform one-way
/// axis, where `h_l` are channel values.
pub fn clean_tof(
    values: &[Complex64],
    carriers_hz: &[f64],
    weights: &[f64],
    axis: &TofAxis,
    cfg: &CleanConfig,
) -> Result<CleanResult> {
    axis.validate()?;
    cfg.validate()?;
    if values.len() != carriers_hz.len() {
        return arg("value and carrier counts differ");
    }
    let phases: Vec<f64> = values.iter().map(|h| -h.arg()).collect();
    let d = axis.samples();
    let n = d.len();
    let scaled: Vec<f64> = weights.iter().zip(values).map(|(w, h)| w * h.norm()).collect();
    let mut residual = tof_spectrum_weighted(&phases, carriers_hz, &scaled, &d, DistanceUnits::OneWay)?.complex_values;
    let offsets: Vec<f64> = (0..2 * n - 1).map(|i| (i as f64 - (n - 1) as f64) * axis.step_m).collect();
    let psf = tof_spectrum_weighted(&vec![0.0; carriers_hz.len()], carriers_hz, weights, &offsets, DistanceUnits::OneWay)?
        .complex_values;
    let w_sum: f64 = weights.iter().sum();
    if !(w_sum > 0.0) {
        return arg("CLEAN needs a positive weight sum");
    }
    let argmax = |r: &[Complex64]| {
        let mut best = 0;
        for (i, v) in r.iter().enumerate() {
            if v.norm_sqr() > r[best].norm_sqr() {
                best = i;
            }
        }
        best
    };
    let start = residual[argmax(&residual)].norm();
    let mut amps = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..cfg.max_iterations {
        let i = argmax(&residual);
        if !(residual[i].norm() > cfg.floor * start) {
            break;
        }
        let a = residual[i] * (cfg.loop_gain / w_sum);
        amps[i] += a;
        for (j, r) in residual.iter_mut().enumerate() {
            *r -= a * psf[j + n - 1 - i];
        }
    }
    let half = (0..n).find(|&j| psf[n - 1 + j].norm() < 0.5 * w_sum).unwrap_or(n) as f64 * axis.step_m;
    let sigma = half.max(axis.step_m) / (2.0 * 2f64.ln()).sqrt();
    let reach = (4.0 * sigma / axis.step_m).ceil() as usize;
    let mut restored = residual.clone();
    let components: Vec<CleanComponent> = amps
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(i, a)| CleanComponent { distance_m: d[i], amplitude: *a })
        .collect();
    for (i, a) in amps.iter().enumerate().filter(|(_, a)| a.norm() > 0.0) {
        for j in i.saturating_sub(reach)..(i + reach + 1).min(n) {
            let x = (j as f64 - i as f64) * axis.step_m / sigma;
            restored[j] += a * (w_sum * (-0.5 * x * x).exp());
        }
    }
    let profile = |v: Vec<Complex64>| TofProfile {
        distances_m: d.clone(),
        magnitude: v.iter().map(|c| c.norm()).collect(),
        complex_values: v,
    };
    Ok(CleanResult { components, restored: profile(restored), residual: profile(residual) })
}

/// Relative reference for the direct-path threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdScale {
    /// Fraction of the whole profile's maximum.
    #[default]
    Global,
    /// Fraction of the maximum inside `[a, b]`.
    Crop,
}

/// First local maximum in `[a_m, b_m]` whose magnitude exceeds
/// `p` times the reference maximum; None if none qualifies.
pub fn identify_direct_path(
    profile: &TofProfile,
    range_m: [f64; 2],
    p: f64,
    scale: ThresholdScale,
) -> Result<Option<f64>> {
    identify_direct_path_supported(profile, None, range_m, p, scale)
}

/// [`identify_direct_path`] where a candidate must also exceed `p` times
/// the reference maximum of `support` at the same index.
pub fn identify_direct_path_supported(
    profile: &TofProfile,
    support: Option<&TofProfile>,
    range_m: [f64; 2],
    p: f64,
    scale: ThresholdScale,
) -> Result<Option<f64>> {
    if support.is_some_and(|s| s.distances_m != profile.distances_m) {
        return arg("support profile axis differs");
    }
    let [a, b] = range_m;
    if !(a >= 0.0 && b > a) {
        return arg("scan range must satisfy 0 <= a < b");
    }
    if !(p > 0.0 && p < 1.0) {
        return arg("peak threshold must lie in (0, 1)");
    }
    if profile.len() < 3 || a > *profile.distances_m.last().unwrap() || b < profile.distances_m[0] {
        return arg("scan range lies outside the profile axis");
    }
    let lo = profile.nearest_index(a);
    let hi = profile.nearest_index(b);
    let m = &profile.magnitude;
    let reference = |m: &[f64]| match scale {
        ThresholdScale::Global => m.iter().cloned().fold(0.0, f64::max),
        ThresholdScale::Crop => m[lo..=hi].iter().cloned().fold(0.0, f64::max),
    };
    let limit = p * reference(m);
    let supported = |i: usize| support.is_none_or(|s| s.magnitude[i] > p * reference(&s.magnitude));
    let first = lo.max(1);
    let last = hi.min(m.len() - 2);
    for i in first..=last.max(first) {
        if i > last {
            break;
        }
        if m[i] > m[i - 1] && m[i] > m[i + 1] && m[i] > limit && supported(i) {
            return Ok(Some(profile.distances_m[i]));
        }
    }
    Ok(None)
}

/// `phi~_l = -angle(sum_i exp(-j phi_i) exp(j 2 pi (f_i - f_l) 2 d0 / c))`
/// over propagation phases, with `d0` one-way.
pub fn enhance_direct_path(phases_rad: &[f64], carriers_hz: &[f64], d0_m: f64) -> Result<Vec<f64>> {
    if phases_rad.len() != carriers_hz.len() {
        return arg("phase and carrier counts differ");
    }
    if !d0_m.is_finite() {
        return arg("direct-path distance is not finite");
    }
    let path = 2.0 * d0_m;
    let rotated: Vec<Complex64> = phases_rad
        .iter()
        .zip(carriers_hz)
        .map(|(phi, f)| Complex64::from_polar(1.0, 2.0 * PI * f * path / SPEED_OF_LIGHT - phi))
        .collect();
    let total: Complex64 = rotated.iter().sum();
    Ok(carriers_hz.iter().map(|f| 2.0 * PI * f * path / SPEED_OF_LIGHT - total.arg()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{wrap_phase, CarrierPlan};

    fn plan_hz() -> Vec<f64> {
        CarrierPlan::paper_default().carriers_hz
    }

    fn uniform_hz(bw: f64) -> Vec<f64> {
        (0..16).map(|l| 800e6 + bw * l as f64 / 15.0).collect()
    }

    /// Propagation phases of a sum of one-way path lengths and gains.
    fn phases(carriers: &[f64], paths: &[(f64, f64)]) -> Vec<f64> {
        carriers
            .iter()
            .map(|f| {
                let h: Complex64 = paths
                    .iter()
                    .map(|(d, a)| Complex64::from_polar(*a, -2.0 * PI * f * 2.0 * d / SPEED_OF_LIGHT))
                    .sum();
                -h.arg()
            })
            .collect()
    }

    #[test]
    fn single_path_peak() {
        let f = plan_hz();
        let p = tof_profile(&phases(&f, &[(3.0, 1.0)]), &f, &TofAxis::default()).unwrap();
        assert!((p.distances_m[p.argmax()] - 3.0).abs() <= 0.005 + 1e-9);
        assert!((p.magnitude[p.argmax()] - 16.0).abs() < 1e-9);
    }

    #[test]
    fn resolves_and_merges() {
        let f = uniform_hz(200e6);
        let p = tof_profile(&phases(&f, &[(3.0, 1.0), (4.2, 1.0)]), &f, &TofAxis::default()).unwrap();
        let top = p.magnitude[p.argmax()];
        let peaks: Vec<f64> = p.local_maxima(0.5 * top).iter().map(|&i| p.distances_m[i]).collect();
        assert_eq!(peaks.len(), 2, "{peaks:?}");
        assert!((peaks[0] - 3.0).abs() <= 0.15 && (peaks[1] - 4.2).abs() <= 0.15, "{peaks:?}");
        let p = tof_profile(&phases(&f, &[(3.0, 1.0), (3.3, 1.0)]), &f, &TofAxis::default()).unwrap();
        let top = p.magnitude[p.argmax()];
        assert_eq!(p.local_maxima(0.5 * top).len(), 1);
    }

    #[test]
    fn single_carrier_rejected() {
        assert!(tof_profile(&[0.1], &[900e6], &TofAxis::default()).is_err());
    }

    #[test]
    fn round_trip_matches_one_way() {
        let f = plan_hz();
        let ph = phases(&f, &[(2.4, 1.0), (3.9, 0.5)]);
        let axis = TofAxis::default();
        let one = tof_profile(&ph, &f, &axis).unwrap();
        let rt: Vec<f64> = axis.samples().iter().map(|d| 2.0 * d).collect();
        let two = tof_spectrum(&ph, &f, &rt, DistanceUnits::RoundTrip).unwrap();
        assert_eq!(one.complex_values, two.complex_values);
        assert_eq!(one.magnitude, two.magnitude);
        let single = tof_spectrum(&phases(&f, &[(2.4, 1.0)]), &f, &rt, DistanceUnits::RoundTrip).unwrap();
        assert!((single.distances_m[single.argmax()] - 4.8).abs() <= 0.01 + 1e-9);
    }

    #[test]
    fn unambiguous_range_exceeds_grid() {
        let f = plan_hz();
        let spacing = f.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        assert!(SPEED_OF_LIGHT / spacing > 25.0);
    }

    #[test]
    fn direct_path_before_multipath() {
        let f = uniform_hz(200e6);
        let p = tof_profile(&phases(&f, &[(3.0, 1.0), (5.5, 0.7)]), &f, &TofAxis::default()).unwrap();
        let d = identify_direct_path(&p, [2.0, 4.0], 0.3, ThresholdScale::Global).unwrap().unwrap();
        assert!((d - 3.0).abs() < 0.05, "{d}");
    }

    #[test]
    fn side_lobe_is_skipped() {
        let f = uniform_hz(200e6);
        let p = tof_profile(&phases(&f, &[(3.0, 1.0)]), &f, &TofAxis::default()).unwrap();
        let lobes: Vec<usize> = p.local_maxima(0.0).into_iter().filter(|&i| p.distances_m[i] < 2.9).collect();
        let near = *lobes.last().unwrap();
        assert!(p.distances_m[near] > 1.5 && p.magnitude[near] < 0.3 * 16.0);
        let d = identify_direct_path(&p, [1.5, 4.0], 0.3, ThresholdScale::Global).unwrap().unwrap();
        assert!((d - 3.0).abs() < 0.01);
    }

    #[test]
    fn flat_profile_has_no_peak() {
        let p = TofProfile {
            distances_m: TofAxis::default().samples(),
            magnitude: vec![1.0; 1201],
            complex_values: vec![Complex64::new(1.0, 0.0); 1201],
        };
        assert_eq!(identify_direct_path(&p, [1.0, 5.0], 0.3, ThresholdScale::Crop).unwrap(), None);
        assert!(identify_direct_path(&p, [20.0, 30.0], 0.3, ThresholdScale::Global).is_err());
        assert!(identify_direct_path(&p, [3.0, 2.0], 0.3, ThresholdScale::Global).is_err());
    }

    fn channel(carriers: &[f64], paths: &[(f64, f64)]) -> Vec<Complex64> {
        carriers
            .iter()
            .map(|f| {
                paths.iter().map(|(d, a)| Complex64::from_polar(*a, -2.0 * PI * f * 2.0 * d / SPEED_OF_LIGHT)).sum()
            })
            .collect()
    }

    #[test]
    fn clean_recovers_resolved_paths() {
        let f = uniform_hz(200e6);
        let h = channel(&f, &[(3.0, 1.0), (5.0, 0.5)]);
        let r = clean_tof(&h, &f, &[1.0; 16], &TofAxis::default(), &CleanConfig::default()).unwrap();
        let weight = |lo: f64, hi: f64| {
            r.components.iter().filter(|c| c.distance_m >= lo && c.distance_m <= hi).map(|c| c.amplitude.norm()).sum::<f64>()
        };
        let total = weight(0.0, 12.0);
        assert!(weight(2.9, 3.1) + weight(4.9, 5.1) >= 0.95 * total, "{total}");
        assert!(weight(2.9, 3.1) > weight(4.9, 5.1));
        let model: Vec<Complex64> = f
            .iter()
            .map(|fl| {
                r.components
                    .iter()
                    .map(|c| c.amplitude * Complex64::from_polar(1.0, -2.0 * PI * fl * 2.0 * c.distance_m / SPEED_OF_LIGHT))
                    .sum()
            })
            .collect();
        let err: f64 = model.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).sum();
        let energy: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        assert!(err < 0.01 * energy, "{err} {energy}");
        let m = r.residual.magnitude.iter().cloned().fold(0.0, f64::max);
        assert!(m <= 0.05 * 16.0 + 1e-9);
    }

    #[test]
    fn clean_support_rejects_gap_side_lobe() {
        let f = plan_hz();
        let h = channel(&f, &[(3.0, 1.0)]);
        let raw = tof_profile(&phases(&f, &[(3.0, 1.0)]), &f, &TofAxis::default()).unwrap();
        let lobe = identify_direct_path(&raw, [1.5, 4.0], 0.3, ThresholdScale::Global).unwrap().unwrap();
        assert!((lobe - 2.03).abs() < 0.05, "{lobe}");
        let r = clean_tof(&h, &f, &[1.0; 16], &TofAxis::default(), &CleanConfig::default()).unwrap();
        let d = identify_direct_path_supported(&raw, Some(&r.restored), [1.5, 4.0], 0.3, ThresholdScale::Global)
            .unwrap()
            .unwrap();
        assert!((d - 3.0).abs() < 0.01, "{d}");
    }

    #[test]
    fn clean_argument_checks() {
        let f = plan_hz();
        let h = channel(&f, &[(3.0, 1.0)]);
        let bad = CleanConfig { loop_gain: 0.0, ..CleanConfig::default() };
        assert!(clean_tof(&h, &f, &[1.0; 16], &TofAxis::default(), &bad).is_err());
        assert!(clean_tof(&h[..3], &f, &[1.0; 16], &TofAxis::default(), &CleanConfig::default()).is_err());
    }

    #[test]
    fn enhancement_fixed_point() {
        let f = plan_hz();
        let ph = phases(&f, &[(3.37, 1.0)]);
        let e = enhance_direct_path(&ph, &f, 3.37).unwrap();
        for (a, b) in ph.iter().zip(&e) {
            assert!(wrap_phase(a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn enhancement_suppresses_second_path() {
        let f = uniform_hz(200e6);
        let direct = phases(&f, &[(3.0, 1.0)]);
        let raw = phases(&f, &[(3.0, 1.0), (5.0, 0.6)]);
        let e = enhance_direct_path(&raw, &f, 3.0).unwrap();
        let err = |x: &[f64]| x.iter().zip(&direct).map(|(a, b)| wrap_phase(a - b).abs()).sum::<f64>() / 16.0;
        assert!(err(&e) < err(&raw), "{} {}", err(&e), err(&raw));
    }
}
