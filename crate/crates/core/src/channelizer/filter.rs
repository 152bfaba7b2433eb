use std::f64::consts::PI;

use crate::error::{arg, Result};

/// Linear-phase lowpass FIR with an odd tap count.
#[derive(Debug, Clone, PartialEq)]
pub struct LowpassDesign {
    pub taps: Vec<f64>,
    pub pass_hz: f64,
    pub stop_hz: f64,
    pub rate_hz: f64,
}

impl LowpassDesign {
    /// Delay in input samples.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    pub fn response(&self, f_hz: f64) -> f64 {
        let g = self.group_delay() as f64;
        self.taps
            .iter()
            .enumerate()
            .map(|(n, h)| h * (2.0 * PI * f_hz / self.rate_hz * (n as f64 - g)).cos())
            .sum()
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

pub fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Kaiser-windowed sinc lowpass. The tap count is rounded up so that
/// `(len - 1) / 2` is a multiple of `delay_multiple`, keeping the group
/// delay an integer number of decimated samples. DC gain is one.
pub fn design_lowpass(
    pass_hz: f64,
    stop_hz: f64,
    atten_db: f64,
    rate_hz: f64,
    delay_multiple: usize,
) -> Result<LowpassDesign> {
    if !(pass_hz > 0.0 && stop_hz > pass_hz && stop_hz < rate_hz / 2.0) {
        return arg("need 0 < pass < stop < rate / 2");
    }
    let dw = 2.0 * PI * (stop_hz - pass_hz) / rate_hz;
    let n_min = ((atten_db - 7.95) / (2.285 * dw)).ceil() as usize + 1;
    let m = delay_multiple.max(1);
    let half = n_min.div_ceil(2).div_ceil(m) * m;
    let len = 2 * half + 1;
    let beta = kaiser_beta(atten_db);
    let fc = 0.5 * (pass_hz + stop_hz) / rate_hz;
    let i0b = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let x = n as f64 - half as f64;
            let sinc = if x == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * x).sin() / (PI * x) };
            let r = x / half as f64;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
            sinc * w
        })
        .collect();
    let s: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= s;
    }
    Ok(LowpassDesign { taps, pass_hz, stop_hz, rate_hz })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i0_reference_values() {
        // Abramowitz & Stegun table values.
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008).abs() < 1e-13);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_44).abs() < 1e-10);
    }

    #[test]
    fn meets_band_specs() {
        let d = design_lowpass(300e3, 394e3, 80.0, 15.36e6, 8).unwrap();
        assert_eq!(d.group_delay() % 8, 0);
        let mut f = 0.0;
        while f <= 300e3 {
            let g = d.response(f);
            assert!((20.0 * g.abs().log10()).abs() < 0.01, "pass {f}");
            f += 5e3;
        }
        let mut f = 394e3;
        while f < 7.68e6 {
            let g = d.response(f);
            assert!(20.0 * g.abs().log10() < -79.0, "stop {f}: {}", 20.0 * g.abs().log10());
            f += 3e3;
        }
        assert!(design_lowpass(300e3, 200e3, 80.0, 15.36e6, 8).is_err());
    }
}
