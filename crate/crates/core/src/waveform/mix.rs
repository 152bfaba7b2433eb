use num_complex::Complex64;
use rustfft::FftPlanner;

use super::multisine::{tone_phase, MultisineSpec};
use super::BasebandWave;
use crate::error::{arg, Result};
use crate::model::ChannelMatrix;

/// Received baseband at antenna `k`: every excitation tone, weighted by its
/// channel entry, modulated by the tag signal. Tones are evaluated on the
/// tag wave's timeline.
pub fn backscatter_mix(
    excitation: &MultisineSpec,
    tag: &BasebandWave,
    channel: &ChannelMatrix,
    k: usize,
) -> Result<BasebandWave> {
    let plan = excitation.plan;
    if (plan.capture_rate_hz - tag.rate_hz).abs() > 1e-9 * tag.rate_hz {
        return arg("excitation and tag rates differ");
    }
    if k >= channel.num_antennas() {
        return arg(format!("antenna {k} out of range"));
    }
    if channel.num_carriers() != plan.num_carriers() {
        return arg("channel and plan carrier counts differ");
    }
    let weights: Vec<Complex64> = (0..plan.num_carriers())
        .map(|l| {
            let trim = plan.power_trim_db.get(l).copied().unwrap_or(0.0);
            channel.h[k][l] * excitation.amplitude * 10f64.powf(trim / 20.0)
        })
        .collect();
    let samples = tag
        .samples
        .iter()
        .enumerate()
        .map(|(n, b)| {
            if *b == Complex64::new(0.0, 0.0) {
                return *b;
            }
            let t = tag.time_of(n);
            let s: Complex64 = weights
                .iter()
                .enumerate()
                .map(|(l, w)| w * Complex64::from_polar(1.0, tone_phase(plan, l, t)))
                .sum();
            s * b
        })
        .collect();
    Ok(BasebandWave { samples, rate_hz: tag.rate_hz, start_s: tag.start_s })
}

/// Ideal low-pass: zero every DFT bin above `cutoff_hz` in magnitude.
pub fn band_limit(wave: &BasebandWave, cutoff_hz: f64) -> Result<BasebandWave> {
    if !(cutoff_hz > 0.0) {
        return arg("cutoff must be positive");
    }
    let n = wave.samples.len();
    if n == 0 {
        return Ok(wave.clone());
    }
    let mut planner = FftPlanner::new();
    let mut buf = wave.samples.clone();
    planner.plan_fft_forward(n).process(&mut buf);
    for (i, v) in buf.iter_mut().enumerate() {
        let f = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 } * wave.rate_hz / n as f64;
        if f.abs() > cutoff_hz {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(BasebandWave {
        samples: buf.into_iter().map(|v| v * scale).collect(),
        rate_hz: wave.rate_hz,
        start_s: wave.start_s,
    })
}
