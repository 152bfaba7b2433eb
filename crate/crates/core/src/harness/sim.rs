use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channelizer::{channelize, ChannelBank, WidebandCapture};
use crate::error::{arg, Result};
use crate::model::{synth_channel, ArrayGeometry, CarrierPlan, ChannelMatrix, Scene};
use crate::waveform::{
    backscatter_mix, band_limit, render_packet, ClockDrift, MillerPreamble, MultisineSpec,
    TagPacket,
};

/// A scene plus capture conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene: Scene,
    /// Per-channel SNR for a unit-gain channel, over the channel output
    /// bandwidth. `None` means noiseless.
    pub snr_db: Option<f64>,
    /// Carrier leak power relative to a unit-gain tag signal, dB.
    #[serde(default)]
    pub leak_db: Option<f64>,
    #[serde(default)]
    pub active_antennas: Option<Vec<usize>>,
    #[serde(default)]
    pub active_carriers: Option<Vec<usize>>,
}

impl SceneSpec {
    pub fn validate(&self, plan: &CarrierPlan, geom: &ArrayGeometry) -> Result<()> {
        self.scene.validate()?;
        plan.validate()?;
        geom.validate()?;
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return arg("SNR must be finite");
            }
        }
        if let Some(a) = &self.active_antennas {
            if a.iter().any(|k| *k >= geom.num_antennas()) {
                return arg("active antenna out of range");
            }
        }
        if let Some(c) = &self.active_carriers {
            if c.iter().any(|l| *l >= plan.num_carriers()) {
                return arg("active carrier out of range");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Two-sided brickwall applied to the tag baseband.
    pub tag_bandwidth_hz: f64,
    pub pre_sof_s: f64,
    pub post_s: f64,
    pub blf_hz: f64,
    pub miller_m: usize,
    pub gap_s: f64,
    pub preamble: MillerPreamble,
    pub epc_len_bits: usize,
    /// Fixed alpha0 as a fraction of BLF; when `None` it is drawn uniformly
    /// from +/- `alpha0_range`.
    pub alpha0_frac: Option<f64>,
    pub alpha0_range: f64,
    /// Drift amplitude as a fraction of BLF.
    pub drift_frac: f64,
    /// Random-walk step standard deviation per knot, as a fraction of the
    /// drift amplitude.
    pub drift_step_frac: f64,
    /// Symbols between drift knots.
    pub drift_knot_symbols: usize,
    /// Emit channel banks directly instead of wideband captures.
    pub fast_path: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tag_bandwidth_hz: 300e3,
            pre_sof_s: 1.0e-3,
            post_s: 0.2e-3,
            blf_hz: 250e3,
            miller_m: 4,
            gap_s: 200e-6,
            preamble: MillerPreamble::default(),
            epc_len_bits: 96,
            alpha0_frac: None,
            alpha0_range: 0.05,
            drift_frac: 0.025,
            drift_step_frac: 0.125,
            drift_knot_symbols: 16,
            fast_path: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CaptureData {
    Wideband(Vec<WidebandCapture>),
    Channels(Vec<ChannelBank>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedCapture {
    pub data: CaptureData,
    pub packet: TagPacket,
    /// Noise-free channel of the active antennas and carriers.
    pub channel: ChannelMatrix,
    pub plan: CarrierPlan,
}

impl SimulatedCapture {
    /// Channel banks, channelizing wideband captures if needed.
    pub fn banks(&self) -> Result<Vec<ChannelBank>> {
        match &self.data {
            CaptureData::Channels(b) => Ok(b.clone()),
            CaptureData::Wideband(c) => c.par_iter().map(|w| channelize(w, &self.plan)).collect(),
        }
    }
}

/// Smallest 5-smooth length not below `n`.
fn smooth_len(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .unwrap()
}

/// Deterministic per-(scene, tag, run) seed.
pub fn tag_seed(scene_seed: u64, tag: usize, seed: u64) -> u64 {
    let mut z = scene_seed ^ seed.rotate_left(21) ^ (tag as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn complex_noise(rng: &mut ChaCha8Rng, var: f64, n: usize) -> Vec<Complex64> {
    let normal = Normal::new(0.0, (var / 2.0).sqrt()).unwrap();
    (0..n).map(|_| Complex64::new(normal.sample(rng), normal.sample(rng))).collect()
}

/// Simulate the uplink of tag `tag` of the scene: a packet with random
/// RN16 and clock impairments, seen through the scene's multipath channel.
pub fn simulate_capture(
    spec: &SceneSpec,
    plan: &CarrierPlan,
    geom: &ArrayGeometry,
    tag: usize,
    seed: u64,
    cfg: &SimConfig,
) -> Result<SimulatedCapture> {
    spec.validate(plan, geom)?;
    if tag >= spec.scene.tags.len() {
        return arg(format!("tag index {tag} out of range"));
    }
    let antennas: Vec<usize> = spec.active_antennas.clone().unwrap_or_else(|| (0..geom.num_antennas()).collect());
    let carriers: Vec<usize> = spec.active_carriers.clone().unwrap_or_else(|| (0..plan.num_carriers()).collect());
    let geom_a = geom.subset(&antennas)?;
    let plan_a = plan.subset(&carriers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tag_seed(spec.scene.seed, tag, seed));

    let st = &spec.scene.tags[tag];
    let epc = if st.epc.is_empty() {
        (0..cfg.epc_len_bits).map(|_| rng.random()).collect()
    } else {
        st.epc.clone()
    };
    let mut pkt = TagPacket::new((0..16).map(|_| rng.random()).collect(), epc);
    pkt.blf_hz = cfg.blf_hz;
    pkt.miller_m = cfg.miller_m;
    pkt.gap_s = cfg.gap_s;
    pkt.preamble = cfg.preamble;
    pkt.alpha0_hz = match cfg.alpha0_frac {
        Some(a) => a * cfg.blf_hz,
        None => (rng.random::<f64>() * 2.0 - 1.0) * cfg.alpha0_range * cfg.blf_hz,
    };
    pkt.t0_s = cfg.pre_sof_s + rng.random::<f64>() / cfg.blf_hz;
    let nominal_len = pkt.layout()?.total_cycles() / (cfg.blf_hz * 0.85);
    if cfg.drift_frac > 0.0 {
        let amp = cfg.drift_frac * cfg.blf_hz;
        let knot = (cfg.drift_knot_symbols * cfg.miller_m) as f64 / cfg.blf_hz;
        pkt.drift = ClockDrift::random_walk(amp, amp * cfg.drift_step_frac, knot, nominal_len, &mut rng)?;
    }
    pkt.validate()?;

    let channel = synth_channel(&spec.scene, &geom_a, &plan_a, tag)?;
    let layout = pkt.layout()?;
    let end = pkt.time_at_cycles(layout.total_cycles()) + cfg.post_s;
    let fs = plan.capture_rate_hz;
    let decim = plan.decimation()?;
    let n_out = smooth_len((end * plan.channel_out_rate_hz).ceil() as usize);
    let n_cap = n_out * decim;
    let tag_wave = band_limit(&render_packet(&pkt, fs, 0.0, n_cap)?, cfg.tag_bandwidth_hz)?;
    let noise_var = spec.snr_db.map(|s| 10f64.powf(-s / 10.0));
    let leak_amp = spec.leak_db.map(|d| 10f64.powf(d / 20.0));
    let nk = antennas.len();
    let nl = carriers.len();
    let leak_phases: Vec<Vec<f64>> = (0..nk)
        .map(|_| (0..nl).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect())
        .collect();

    let data = if cfg.fast_path {
        let b: Vec<Complex64> = (0..n_out).map(|m| tag_wave.samples[m * decim]).collect();
        let banks = (0..nk)
            .map(|k| {
                let streams = (0..nl)
                    .map(|l| {
                        let h = channel.h[k][l];
                        let mut s: Vec<Complex64> = b.iter().map(|v| h * v).collect();
                        if let Some(a) = leak_amp {
                            let c = Complex64::from_polar(a, leak_phases[k][l]);
                            s.iter_mut().for_each(|v| *v += c);
                        }
                        if let Some(var) = noise_var {
                            for (v, e) in s.iter_mut().zip(complex_noise(&mut rng, var, n_out)) {
                                *v += e;
                            }
                        }
                        s
                    })
                    .collect();
                ChannelBank {
                    streams,
                    carriers_hz: plan_a.carriers_hz.clone(),
                    rate_hz: plan.channel_out_rate_hz,
                    start_s: 0.0,
                    antenna_id: k,
                    group_delay_s: 0.0,
                    valid_start: 0,
                    valid_end: n_out,
                    compression_ratio: nl as f64 * plan.channel_out_rate_hz / fs,
                }
            })
            .collect();
        CaptureData::Channels(banks)
    } else {
        let spec_ms = MultisineSpec { plan: &plan_a, duration_s: end, amplitude: 1.0 };
        let wide_var = noise_var.map(|v| v * fs / plan.channel_out_rate_hz);
        let mut caps = Vec::with_capacity(nk);
        for k in 0..nk {
            let mut r = backscatter_mix(&spec_ms, &tag_wave, &channel, k)?;
            if let Some(a) = leak_amp {
                for (n, v) in r.samples.iter_mut().enumerate() {
                    let t = n as f64 / fs;
                    for l in 0..nl {
                        let ph = crate::waveform::tone_phase(&plan_a, l, t) + leak_phases[k][l];
                        *v += Complex64::from_polar(a, ph);
                    }
                }
            }
            if let Some(var) = wide_var {
                for (v, e) in r.samples.iter_mut().zip(complex_noise(&mut rng, var, n_cap)) {
                    *v += e;
                }
            }
            caps.push(WidebandCapture {
                samples: r.samples,
                rate_hz: fs,
                center_hz: plan.capture_center_hz,
                start_s: 0.0,
                antenna_id: k,
            });
        }
        CaptureData::Wideband(caps)
    };
    Ok(SimulatedCapture { data, packet: pkt, channel, plan: plan_a })
}
