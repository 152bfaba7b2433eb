use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::DecoderConfig;
use crate::error::{arg, Error, Result};
use crate::waveform::PacketLayout;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncEstimate {
    pub t0_hat_s: f64,
    pub alpha0_hat_hz: f64,
    /// Normalized correlation magnitude in [0, 1].
    pub correlation_peak: f64,
}

/// Range of candidate start-of-frame times, absolute seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub start_s: f64,
    pub end_s: f64,
}

/// Box-filtered rendering of a half-cycle template: each sample is the mean
/// of the template over the sample's footprint on the cycle axis.
pub(crate) struct TemplateRenderer<'a> {
    layout: &'a PacketLayout,
    prefix: Vec<f64>,
}

impl<'a> TemplateRenderer<'a> {
    pub fn new(layout: &'a PacketLayout) -> Self {
        let mut prefix = Vec::with_capacity(layout.halves.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for h in &layout.halves {
            acc += 0.5 * h;
            prefix.push(acc);
        }
        Self { layout, prefix }
    }

    fn integral(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let x = 2.0 * u;
        let j = x.floor() as usize;
        if j >= self.layout.halves.len() {
            return *self.prefix.last().unwrap();
        }
        self.prefix[j] + 0.5 * (x - j as f64) * self.layout.halves[j]
    }

    /// Integral of the template over cycles `[u0, u1]`.
    pub fn area(&self, u0: f64, u1: f64) -> f64 {
        self.integral(u1) - self.integral(u0)
    }

    /// Mean template value over cycles `[u0, u1]`.
    pub fn mean(&self, u0: f64, u1: f64) -> f64 {
        if u1 <= u0 {
            return self.layout.value_at(u0);
        }
        (self.integral(u1) - self.integral(u0)) / (u1 - u0)
    }

    /// Template at sample centred on cycle `u` with per-sample cycle step `du`.
    pub fn sample(&self, u: f64, du: f64) -> f64 {
        self.mean(u - 0.5 * du, u + 0.5 * du)
    }
}

/// Half-open index runs where `t` is nonzero.
fn nonzero_runs(t: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut open = None;
    for (i, v) in t.iter().enumerate() {
        match (open, *v != 0.0) {
            (None, true) => open = Some(i),
            (Some(a), false) => {
                runs.push((a, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(a) = open {
        runs.push((a, t.len()));
    }
    runs
}

/// Overlap-save cross-correlation of a fixed stream against templates of
/// at most `support` samples, for lags `lo..=hi`.
struct BlockCorrelator {
    size: usize,
    step: usize,
    lo: usize,
    hi: usize,
    spectra: Vec<Vec<Complex64>>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl BlockCorrelator {
    fn new(stream: &[Complex64], lo: usize, hi: usize, support: usize) -> Self {
        let size = (2 * support).next_power_of_two().max(1024);
        let step = size - support + 1;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut spectra = Vec::new();
        let mut start = lo;
        while start <= hi {
            let mut block = vec![Complex64::new(0.0, 0.0); size];
            let end = (start + size).min(stream.len());
            block[..end - start].copy_from_slice(&stream[start..end]);
            fwd.process(&mut block);
            spectra.push(block);
            start += step;
        }
        Self { size, step, lo, hi, spectra, fwd, inv }
    }

    /// `sum_i y[tau + i] * t[i]` for `tau` in `lo..=hi`.
    fn correlate(&self, t: &[f64]) -> Vec<Complex64> {
        let mut tf = vec![Complex64::new(0.0, 0.0); self.size];
        for (d, v) in tf.iter_mut().zip(t) {
            *d = Complex64::new(*v, 0.0);
        }
        self.fwd.process(&mut tf);
        let scale = 1.0 / self.size as f64;
        let mut out = Vec::with_capacity(self.hi - self.lo + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (b, spec) in self.spectra.iter().enumerate() {
            for ((o, y), t) in buf.iter_mut().zip(spec).zip(&tf) {
                *o = y * t.conj();
            }
            self.inv.process(&mut buf);
            let take = self.step.min(self.hi + 1 - self.lo - b * self.step);
            out.extend(buf[..take].iter().map(|v| v * scale));
        }
        out
    }
}

fn render(r: &TemplateRenderer, len: usize, cps: f64, offset: f64) -> Vec<f64> {
    (0..len).map(|n| r.sample((n as f64 - offset) * cps, cps)).collect()
}

/// Normalized correlation between `stream` and the template started at
/// fractional sample `tau` with clock `blf - alpha`.
fn corr_at(stream: &[Complex64], r: &TemplateRenderer, cps: f64, tau: f64, len: usize) -> f64 {
    let first = tau.floor().max(0.0) as usize;
    let last = ((tau + len as f64).ceil() as usize + 1).min(stream.len());
    let (mut c, mut e, mut t2) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for (n, y) in stream.iter().enumerate().take(last).skip(first) {
        let v = r.sample((n as f64 - tau) * cps, cps);
        if v != 0.0 {
            c += y * v;
            e += y.norm_sqr();
            t2 += v * v;
        }
    }
    if e <= 0.0 || t2 <= 0.0 {
        0.0
    } else {
        c.norm() / (e * t2).sqrt()
    }
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// Joint search over start time and clock offset maximizing the normalized
/// correlation with the known parts of `template`.
pub fn preamble_search(
    stream: &[Complex64],
    rate_hz: f64,
    start_s: f64,
    template: &PacketLayout,
    window: Option<SearchWindow>,
    cfg: &DecoderConfig,
) -> Result<SyncEstimate> {
    preamble_search_around(stream, rate_hz, start_s, template, window, 0.0, cfg.alpha_range, cfg)
}

/// As [`preamble_search`], with the clock-offset grid centred on
/// `alpha_center_hz` and spanning +/- `alpha_range` of BLF.
#[allow(clippy::too_many_arguments)]
pub fn preamble_search_around(
    stream: &[Complex64],
    rate_hz: f64,
    start_s: f64,
    template: &PacketLayout,
    window: Option<SearchWindow>,
    alpha_center_hz: f64,
    alpha_range: f64,
    cfg: &DecoderConfig,
) -> Result<SyncEstimate> {
    let blf = cfg.blf_hz;
    if !(alpha_range >= 0.0 && alpha_center_hz.abs() + alpha_range * blf < blf) {
        return arg("clock-offset search range out of bounds");
    }
    if rate_hz < 4.0 * blf {
        return arg("channel rate must be at least 4x the BLF");
    }
    let n = stream.len();
    let slow = blf - alpha_center_hz - alpha_range * blf;
    let fast = blf - alpha_center_hz + alpha_range * blf;
    let support = (template.total_cycles() / slow * rate_hz).ceil() as usize + 2;
    let shortest = (template.total_cycles() / fast * rate_hz).ceil() as usize + 2;
    if n < shortest + 2 {
        return arg("stream shorter than the packet template");
    }
    let (lo_t, hi_t) = match window {
        Some(w) => (w.start_s, w.end_s),
        None => (start_s, start_s + (n - shortest) as f64 / rate_hz),
    };
    let lo = ((lo_t - start_s) * rate_hz).floor().max(0.0) as usize;
    let hi = (((hi_t - start_s) * rate_hz).ceil().max(0.0) as usize).min(n - shortest);
    if lo > hi {
        return arg("search window outside the stream");
    }

    let renderer = TemplateRenderer::new(template);
    let steps = (alpha_range / cfg.alpha_step).round() as i64;
    let alphas: Vec<f64> = (-steps..=steps).map(|i| alpha_center_hz + i as f64 * cfg.alpha_step * blf).collect();
    let mut energy_prefix = Vec::with_capacity(n + 1);
    energy_prefix.push(0.0);
    for y in stream {
        let last = *energy_prefix.last().unwrap();
        energy_prefix.push(last + y.norm_sqr());
    }
    let blocks = BlockCorrelator::new(stream, lo, hi, support);

    let grid: Vec<(f64, usize, Vec<f64>)> = alphas
        .par_iter()
        .map(|&alpha| {
            let cps = (blf - alpha) / rate_hz;
            let t = render(&renderer, support, cps, 0.0);
            let t2: f64 = t.iter().map(|v| v * v).sum();
            let runs = nonzero_runs(&t);
            let c = blocks.correlate(&t);
            let rho: Vec<f64> = (0..=hi)
                .map(|tau| {
                    if tau < lo {
                        return 0.0;
                    }
                    let energy: f64 = runs
                        .iter()
                        .map(|&(a, b)| {
                            let (a, b) = ((tau + a).min(n), (tau + b).min(n));
                            energy_prefix[b] - energy_prefix[a]
                        })
                        .sum();
                    if energy <= 1e-300 {
                        0.0
                    } else {
                        (c[tau - lo].norm() / (energy * t2).sqrt()).min(1.0)
                    }
                })
                .collect();
            let mut best = (f64::MIN, lo);
            for (tau, r) in rho.iter().enumerate().skip(lo) {
                if *r > best.0 {
                    best = (*r, tau);
                }
            }
            (best.0, best.1, rho)
        })
        .collect();

    let mut bi = 0;
    for (i, g) in grid.iter().enumerate() {
        if g.0 > grid[bi].0 {
            bi = i;
        }
    }
    let (peak, tau, rho) = (&grid[bi].0, grid[bi].1, &grid[bi].2);
    if !(*peak >= cfg.detection_threshold) {
        return Err(Error::NoPacket { stage: "preamble_search" });
    }
    let mut tau_f = tau as f64;
    if tau > lo && tau < hi {
        let (a, b, c) = (rho[tau - 1], rho[tau], rho[tau + 1]);
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            tau_f += (0.5 * (a - c) / den).clamp(-0.5, 0.5);
        }
    }
    let mut alpha = alphas[bi];
    let step = cfg.alpha_step * blf;
    let limit = alpha_range * blf;
    let len = support;
    for _ in 0..2 {
        let t = tau_f;
        alpha = golden(
            |a| corr_at(stream, &renderer, (blf - a) / rate_hz, t, len),
            (alpha - step).max(alpha_center_hz - limit),
            (alpha + step).min(alpha_center_hz + limit),
            30,
        );
        let cps = (blf - alpha) / rate_hz;
        tau_f = golden(|x| corr_at(stream, &renderer, cps, x, len), tau_f - 1.0, tau_f + 1.0, 30);
    }
    let peak = corr_at(stream, &renderer, (blf - alpha) / rate_hz, tau_f, len).max(*peak);
    Ok(SyncEstimate {
        t0_hat_s: start_s + tau_f / rate_hz,
        alpha0_hat_hz: alpha,
        correlation_peak: peak.clamp(0.0, 1.0),
    })
}
