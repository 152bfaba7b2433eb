use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::filter::{design_lowpass, LowpassDesign};
use crate::error::{arg, Error, Result};
use crate::model::CarrierPlan;
use crate::waveform::{read_wave, tone_phase, write_wave, BasebandWave};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidebandCapture {
    pub samples: Vec<Complex64>,
    pub rate_hz: f64,
    pub center_hz: f64,
    pub start_s: f64,
    pub antenna_id: usize,
}

/// Per-carrier baseband streams of one antenna. Sample `m` of every stream
/// corresponds to time `start_s + m / rate_hz`; the filter delay has already
/// been removed and is recorded in `group_delay_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBank {
    pub streams: Vec<Vec<Complex64>>,
    pub carriers_hz: Vec<f64>,
    pub rate_hz: f64,
    pub start_s: f64,
    pub antenna_id: usize,
    pub group_delay_s: f64,
    /// Samples outside `[valid_start, valid_end)` carry filter transients.
    pub valid_start: usize,
    pub valid_end: usize,
    /// Output sample rate summed over channels, over the capture rate.
    pub compression_ratio: f64,
}

impl ChannelBank {
    pub fn len(&self) -> usize {
        self.streams.first().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.streams.len() != self.carriers_hz.len() {
            return arg("stream count differs from carrier count");
        }
        let n = self.len();
        if self.streams.iter().any(|s| s.len() != n) {
            return arg("streams differ in length");
        }
        if self.valid_start > self.valid_end || self.valid_end > n {
            return arg("invalid valid range");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelizerConfig {
    /// Passband edge; the tag signal must fit inside it.
    pub pass_hz: f64,
    pub stop_atten_db: f64,
}

impl Default for ChannelizerConfig {
    fn default() -> Self {
        Self { pass_hz: 300e3, stop_atten_db: 80.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    /// Summed channel output rate over capture rate.
    pub rate_ratio: f64,
    /// Summed tag information bandwidth over the spanned RF bandwidth.
    pub information_ratio: f64,
}

pub fn compression_report(plan: &CarrierPlan, tag_bandwidth_hz: f64) -> CompressionReport {
    let l = plan.num_carriers() as f64;
    CompressionReport {
        rate_ratio: l * plan.channel_out_rate_hz / plan.capture_rate_hz,
        information_ratio: l * tag_bandwidth_hz / plan.bandwidth_hz().max(f64::MIN_POSITIVE),
    }
}

fn plan_filter(plan: &CarrierPlan, cfg: &ChannelizerConfig, decim: usize) -> Result<LowpassDesign> {
    let spacing = plan
        .carriers_hz
        .windows(2)
        .map(|w| (w[1] - w[0]) * plan.frequency_scale)
        .fold(f64::INFINITY, f64::min);
    let stop = (spacing - cfg.pass_hz).min(plan.channel_out_rate_hz - cfg.pass_hz);
    if !(stop > cfg.pass_hz) {
        return arg("carriers too close for the channel passband");
    }
    design_lowpass(cfg.pass_hz, stop, cfg.stop_atten_db, plan.capture_rate_hz, decim)
}

pub fn channelize(capture: &WidebandCapture, plan: &CarrierPlan) -> Result<ChannelBank> {
    channelize_with(capture, plan, &ChannelizerConfig::default())
}

pub fn channelize_with(
    capture: &WidebandCapture,
    plan: &CarrierPlan,
    cfg: &ChannelizerConfig,
) -> Result<ChannelBank> {
    if (capture.rate_hz - plan.capture_rate_hz).abs() > 1e-9 * plan.capture_rate_hz {
        return arg("capture rate differs from plan");
    }
    if capture.samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return arg("capture holds non-finite samples");
    }
    let decim = plan.decimation()?;
    let filter = plan_filter(plan, cfg, decim)?;
    for l in 0..plan.num_carriers() {
        if plan.baseband_offset_hz(l).abs() + filter.stop_hz > plan.capture_rate_hz / 2.0 {
            return arg(format!("carrier {l} too close to the Nyquist edge"));
        }
    }
    let fs = capture.rate_hz;
    let n_in = capture.samples.len();
    let n_out = n_in.div_ceil(decim);
    let g = filter.group_delay();
    let streams: Vec<Vec<Complex64>> = (0..plan.num_carriers())
        .into_par_iter()
        .map(|l| {
            let mixed: Vec<Complex64> = capture
                .samples
                .iter()
                .enumerate()
                .map(|(n, x)| {
                    let t = capture.start_s + n as f64 / fs;
                    x * Complex64::from_polar(1.0, -tone_phase(plan, l, t))
                })
                .collect();
            (0..n_out)
                .map(|m| {
                    let c = (m * decim + g) as isize;
                    let lo = (c - n_in as isize + 1).max(0) as usize;
                    let hi = (c as usize).min(filter.taps.len() - 1);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in lo..=hi {
                        acc += mixed[c as usize - j] * filter.taps[j];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let edge = (g / decim).min(n_out / 2);
    Ok(ChannelBank {
        streams,
        carriers_hz: plan.carriers_hz.clone(),
        rate_hz: fs / decim as f64,
        start_s: capture.start_s,
        antenna_id: capture.antenna_id,
        group_delay_s: g as f64 / fs,
        valid_start: edge,
        valid_end: n_out - edge,
        compression_ratio: compression_report(plan, cfg.pass_hz).rate_ratio,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct BankManifest {
    carriers_hz: Vec<f64>,
    rate_hz: f64,
    start_s: f64,
    antenna_id: usize,
    group_delay_s: f64,
    valid_start: usize,
    valid_end: usize,
    compression_ratio: f64,
    files: Vec<String>,
}

/// One `ch<NN>.cf32` file per carrier plus `manifest.json` in `dir`.
pub fn write_bank(dir: impl AsRef<Path>, bank: &ChannelBank) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (l, s) in bank.streams.iter().enumerate() {
        let name = format!("ch{l:02}.cf32");
        let w = BasebandWave { samples: s.clone(), rate_hz: bank.rate_hz, start_s: bank.start_s };
        write_wave(dir.join(&name), &w, serde_json::json!({ "carrier_hz": bank.carriers_hz[l] }))?;
        files.push(name);
    }
    let m = BankManifest {
        carriers_hz: bank.carriers_hz.clone(),
        rate_hz: bank.rate_hz,
        start_s: bank.start_s,
        antenna_id: bank.antenna_id,
        group_delay_s: bank.group_delay_s,
        valid_start: bank.valid_start,
        valid_end: bank.valid_end,
        compression_ratio: bank.compression_ratio,
        files,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

pub fn read_bank(dir: impl AsRef<Path>) -> Result<ChannelBank> {
    let dir = dir.as_ref();
    let m: BankManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut streams = Vec::new();
    for f in &m.files {
        let (w, _) = read_wave(dir.join(f))?;
        streams.push(w.samples);
    }
    let bank = ChannelBank {
        streams,
        carriers_hz: m.carriers_hz,
        rate_hz: m.rate_hz,
        start_s: m.start_s,
        antenna_id: m.antenna_id,
        group_delay_s: m.group_delay_s,
        valid_start: m.valid_start,
        valid_end: m.valid_end,
        compression_ratio: m.compression_ratio,
    };
    bank.validate().map_err(|e| Error::Argument(format!("{}: {e}", dir.display())))?;
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone_capture(plan: &CarrierPlan, l: usize, df: f64, n: usize) -> WidebandCapture {
        let fs = plan.capture_rate_hz;
        WidebandCapture {
            samples: (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    Complex64::from_polar(1.0, tone_phase(plan, l, t) + 2.0 * PI * df * t)
                })
                .collect(),
            rate_hz: fs,
            center_hz: plan.capture_center_hz,
            start_s: 0.0,
            antenna_id: 0,
        }
    }

    #[test]
    fn single_tone_steering() {
        let plan = CarrierPlan::desk_default();
        let cap = tone_capture(&plan, 5, 50e3, 20_000);
        let bank = channelize(&cap, &plan).unwrap();
        bank.validate().unwrap();
        let (a, b) = (bank.valid_start, bank.valid_end);
        for (l, s) in bank.streams.iter().enumerate() {
            let p: f64 = s[a..b].iter().map(|v| v.norm_sqr()).sum::<f64>() / (b - a) as f64;
            if l == 5 {
                assert!((p - 1.0).abs() < 1e-3);
                for m in a..b {
                    let t = bank.start_s + m as f64 / bank.rate_hz;
                    let expect = Complex64::from_polar(1.0, 2.0 * PI * 50e3 * t);
                    assert!((s[m] - expect).norm() < 2e-3);
                }
            } else {
                assert!(10.0 * p.log10() < -60.0, "channel {l}: {}", 10.0 * p.log10());
            }
        }
    }

    #[test]
    fn compression_numbers() {
        let r = compression_report(&CarrierPlan::paper_default(), 250e3);
        assert!((r.rate_ratio - 0.125).abs() < 1e-12);
        assert!((r.information_ratio - 1.0 / 50.0).abs() < 1e-3);
    }

    #[test]
    fn linear() {
        let plan = CarrierPlan::desk_default();
        let x = tone_capture(&plan, 2, 10e3, 4000);
        let y = tone_capture(&plan, 9, -70e3, 4000);
        let (a, b) = (Complex64::new(0.3, -1.1), Complex64::new(2.0, 0.5));
        let mut z = x.clone();
        for i in 0..z.samples.len() {
            z.samples[i] = a * x.samples[i] + b * y.samples[i];
        }
        let bx = channelize(&x, &plan).unwrap();
        let by = channelize(&y, &plan).unwrap();
        let bz = channelize(&z, &plan).unwrap();
        for l in 0..16 {
            for m in 0..bz.len() {
                let e = a * bx.streams[l][m] + b * by.streams[l][m];
                assert!((bz.streams[l][m] - e).norm() <= 1e-9 * e.norm().max(1.0));
            }
        }
    }

    #[test]
    fn bank_round_trip() {
        let plan = CarrierPlan::desk_default();
        let bank = channelize(&tone_capture(&plan, 0, 0.0, 800), &plan).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bank(dir.path(), &bank).unwrap();
        let back = read_bank(dir.path()).unwrap();
        assert_eq!(back.carriers_hz, bank.carriers_hz);
        for (s, t) in back.streams.iter().zip(&bank.streams) {
            for (u, v) in s.iter().zip(t) {
                assert!((u - v).norm() < 1e-6);
            }
        }
    }
}
