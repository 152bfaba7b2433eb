use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BasebandWave, TagPacket};
use crate::error::{arg, Result};

/// Clock fluctuation alpha(t), piecewise linear between knots spaced
/// `knot_interval_s` apart, measured from the start of frame. Held at the
/// last knot value afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockDrift {
    pub knot_interval_s: f64,
    pub knots_hz: Vec<f64>,
}

impl ClockDrift {
    pub fn none() -> Self {
        Self { knot_interval_s: 1.0, knots_hz: vec![0.0] }
    }

    pub fn constant(alpha_hz: f64) -> Self {
        Self { knot_interval_s: 1.0, knots_hz: vec![alpha_hz] }
    }

    /// Random walk starting at zero, reflected at +/- `amplitude_hz`.
    pub fn random_walk<R: Rng + ?Sized>(
        amplitude_hz: f64,
        step_std_hz: f64,
        knot_interval_s: f64,
        duration_s: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(knot_interval_s > 0.0 && duration_s >= 0.0 && amplitude_hz >= 0.0) {
            return arg("invalid random-walk parameters");
        }
        let normal = Normal::new(0.0, step_std_hz.max(0.0))
            .map_err(|e| crate::Error::Argument(e.to_string()))?;
        let n = (duration_s / knot_interval_s).ceil() as usize + 2;
        let mut knots = Vec::with_capacity(n);
        let mut x = 0.0f64;
        knots.push(x);
        for _ in 1..n {
            x += normal.sample(rng);
            for _ in 0..64 {
                if x > amplitude_hz {
                    x = 2.0 * amplitude_hz - x;
                } else if x < -amplitude_hz {
                    x = -2.0 * amplitude_hz - x;
                } else {
                    break;
                }
            }
            knots.push(x.clamp(-amplitude_hz, amplitude_hz));
        }
        Ok(Self { knot_interval_s, knots_hz: knots })
    }

    pub fn max_abs_hz(&self) -> f64 {
        self.knots_hz.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn alpha_at(&self, tau: f64) -> f64 {
        let k = &self.knots_hz;
        if tau <= 0.0 || k.len() == 1 {
            return k[0];
        }
        let x = tau / self.knot_interval_s;
        let i = x.floor() as usize;
        if i + 1 >= k.len() {
            return k[k.len() - 1];
        }
        let f = x - i as f64;
        k[i] + (k[i + 1] - k[i]) * f
    }

    /// Closed-form integral of alpha over `[0, tau]`.
    pub fn integral(&self, tau: f64) -> f64 {
        let k = &self.knots_hz;
        if tau <= 0.0 {
            return k[0] * tau;
        }
        let dt = self.knot_interval_s;
        let mut acc = 0.0;
        let mut i = 0usize;
        while i + 1 < k.len() && (i + 1) as f64 * dt <= tau {
            acc += 0.5 * (k[i] + k[i + 1]) * dt;
            i += 1;
        }
        let t_i = i as f64 * dt;
        let rem = tau - t_i;
        if i + 1 < k.len() {
            let slope = (k[i + 1] - k[i]) / dt;
            acc += k[i] * rem + 0.5 * slope * rem * rem;
        } else {
            acc += k[i] * rem;
        }
        acc
    }
}

/// Warp a nominally clocked tag waveform (first sample at start of frame)
/// onto the packet's impaired clock, delayed by `t0`.
pub fn apply_clock_offset(wave: &BasebandWave, pkt: &TagPacket) -> Result<BasebandWave> {
    pkt.validate()?;
    let rate = wave.rate_hz;
    let total_cycles = wave.samples.len() as f64 / rate * pkt.blf_hz;
    let end = pkt.time_at_cycles(total_cycles);
    let n_out = (end * rate).round() as usize;
    let zero = Complex64::new(0.0, 0.0);
    let samples = (0..n_out)
        .map(|n| {
            let t = n as f64 / rate;
            if t < pkt.t0_s {
                return zero;
            }
            let idx = (pkt.cycles_at(t) / pkt.blf_hz * rate).round();
            if idx < 0.0 {
                return zero;
            }
            wave.samples.get(idx as usize).copied().unwrap_or(zero)
        })
        .collect();
    Ok(BasebandWave { samples, rate_hz: rate, start_s: wave.start_s })
}
