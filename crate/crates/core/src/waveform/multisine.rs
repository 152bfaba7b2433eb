use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::BasebandWave;
use crate::error::{arg, Result};
use crate::model::CarrierPlan;

#[derive(Debug, Clone, Copy)]
pub struct MultisineSpec<'a> {
    pub plan: &'a CarrierPlan,
    pub duration_s: f64,
    /// Linear amplitude of each tone before the plan's per-tone trim.
    pub amplitude: f64,
}

/// Instantaneous baseband phase of tone `l` at absolute time `t`.
pub fn tone_phase(plan: &CarrierPlan, l: usize, t: f64) -> f64 {
    2.0 * PI * plan.baseband_offset_hz(l) * t + plan.tone_phases_rad[l]
}

pub fn synth_multisine(spec: &MultisineSpec) -> Result<BasebandWave> {
    let plan = spec.plan;
    if !(spec.duration_s > 0.0) {
        return arg("duration must be positive");
    }
    if plan.num_carriers() == 0 || plan.tone_phases_rad.len() != plan.num_carriers() {
        return arg("plan needs at least one tone with a phase each");
    }
    let rate = plan.capture_rate_hz;
    for l in 0..plan.num_carriers() {
        if plan.baseband_offset_hz(l).abs() >= rate / 2.0 {
            return arg(format!("tone {l} lies beyond the Nyquist limit"));
        }
    }
    let n = (spec.duration_s * rate).round() as usize;
    let amps: Vec<f64> = (0..plan.num_carriers())
        .map(|l| spec.amplitude * 10f64.powf(plan.power_trim_db.get(l).copied().unwrap_or(0.0) / 20.0))
        .collect();
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            (0..plan.num_carriers())
                .map(|l| Complex64::from_polar(amps[l], tone_phase(plan, l, t)))
                .sum()
        })
        .collect();
    Ok(BasebandWave { samples, rate_hz: rate, start_s: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrestFactor {
    /// Peak over RMS of the complex envelope.
    pub ratio: f64,
    pub papr_db: f64,
    /// Crest factor of the real passband rendering, sqrt(2) times the
    /// envelope value.
    pub passband_ratio: f64,
}

impl CrestFactor {
    fn from_ratio(ratio: f64) -> Self {
        Self { ratio, papr_db: 20.0 * ratio.log10(), passband_ratio: ratio * 2f64.sqrt() }
    }
}

pub fn crest_factor(wave: &BasebandWave) -> Result<CrestFactor> {
    if wave.samples.is_empty() {
        return arg("empty wave");
    }
    let (peak, ms) = wave
        .samples
        .iter()
        .fold((0.0f64, 0.0f64), |(p, s), x| (p.max(x.norm()), s + x.norm_sqr()));
    if peak == 0.0 {
        return arg("all-zero wave");
    }
    let rms = (ms / wave.samples.len() as f64).sqrt();
    Ok(CrestFactor::from_ratio(peak / rms))
}

/// Newman phases for tones 1..=n: pi (i - 1)^2 / n.
pub fn newman_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| PI * (i * i) as f64 / n as f64).collect()
}

struct PeriodGrid {
    bins: Vec<usize>,
    size: usize,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl PeriodGrid {
    fn new(bins: &[i64]) -> Self {
        let lo = bins.iter().copied().min().unwrap_or(0);
        let span = bins.iter().copied().max().unwrap_or(0) - lo + 1;
        let size = (16 * span as usize).next_power_of_two().max(64);
        let mut planner = FftPlanner::new();
        Self {
            bins: bins.iter().map(|b| (b - lo) as usize).collect(),
            size,
            ifft: planner.plan_fft_inverse(size),
            fft: planner.plan_fft_forward(size),
        }
    }

    fn render(&self, phases: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (b, p) in self.bins.iter().zip(phases) {
            buf[*b] += Complex64::from_polar(1.0, *p);
        }
        self.ifft.process(&mut buf);
        buf
    }

    fn crest(x: &[Complex64]) -> f64 {
        let (peak, ms) = x.iter().fold((0.0f64, 0.0f64), |(p, s), v| (p.max(v.norm()), s + v.norm_sqr()));
        peak / (ms / x.len() as f64).sqrt()
    }
}

/// Envelope crest factor of unit tones at integer `bins` with `phases`,
/// evaluated over one period on a 16x oversampled grid.
pub fn periodic_crest_factor(bins: &[i64], phases: &[f64]) -> f64 {
    let g = PeriodGrid::new(bins);
    PeriodGrid::crest(&g.render(phases))
}

/// Low crest-factor phases for unit tones at integer frequency `bins`.
/// Starts from Newman phases and runs clip-and-restore iterations, keeping
/// the best set seen.
pub fn optimize_crest_phases_for_bins(bins: &[i64], iterations: usize) -> Vec<f64> {
    let n = bins.len();
    let mut phases = newman_phases(n);
    if n < 2 {
        return phases;
    }
    let g = PeriodGrid::new(bins);
    let mut x = g.render(&phases);
    let mut best = (PeriodGrid::crest(&x), phases.clone());
    for _ in 0..iterations {
        let rms = (x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64).sqrt();
        for v in x.iter_mut() {
            let m = v.norm();
            if m > rms {
                *v *= rms / m;
            }
        }
        g.fft.process(&mut x);
        for (p, b) in phases.iter_mut().zip(&g.bins) {
            let c = x[*b];
            if c.norm() > 0.0 {
                *p = c.arg();
            }
        }
        x = g.render(&phases);
        let cf = PeriodGrid::crest(&x);
        if cf < best.0 {
            best = (cf, phases.clone());
        }
    }
    best.1
}

/// Optimized phases for `n_tones` contiguous tones.
pub fn optimize_crest_phases(n_tones: usize, iterations: usize) -> Result<Vec<f64>> {
    if n_tones < 2 {
        return arg("need at least two tones");
    }
    let bins: Vec<i64> = (0..n_tones as i64).collect();
    Ok(optimize_crest_phases_for_bins(&bins, iterations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimizer_beats_newman_on_gapped_plan() {
        let plan = CarrierPlan::paper_default();
        let bins = plan.tone_grid().unwrap();
        let newman = periodic_crest_factor(&bins, &newman_phases(16));
        let opt = periodic_crest_factor(&bins, &plan.tone_phases_rad);
        assert!(opt <= newman);
        assert!(opt <= 1.5, "optimized crest {opt}");
        let aligned = periodic_crest_factor(&bins, &[0.0; 16]);
        assert!((aligned - 4.0).abs() < 1e-9);
    }

    #[test]
    fn contiguous_sixteen() {
        let p = optimize_crest_phases(16, 200).unwrap();
        let bins: Vec<i64> = (0..16).collect();
        let cf = periodic_crest_factor(&bins, &p);
        assert!(cf <= 1.5, "{cf}");
        assert!(cf <= periodic_crest_factor(&bins, &newman_phases(16)));
        assert!(optimize_crest_phases(1, 10).is_err());
    }
}
