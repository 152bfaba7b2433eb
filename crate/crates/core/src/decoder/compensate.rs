use num_complex::Complex64;

use super::pll::ClockTrack;
use crate::error::{arg, Result};

fn catmull_rom(s: &[Complex64], x: f64) -> Complex64 {
    let n = s.len() as isize;
    let i = x.floor() as isize;
    let f = x - i as f64;
    let at = |k: isize| s[k.clamp(0, n - 1) as usize];
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let f2 = f * f;
    let f3 = f2 * f;
    (p1 * 2.0 + (p2 - p0) * f + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * f2 + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * f3)
        * 0.5
}

/// Resample `stream` so that output sample `j` sits at tracked cycle
/// `j * blf / rate`, i.e. on the nominal clock starting at the detected
/// start of frame. Produces `round(total_cycles / blf * rate)` samples.
pub fn compensate_clock(
    stream: &[Complex64],
    track: &ClockTrack,
    rate_hz: f64,
    blf_hz: f64,
    total_cycles: f64,
) -> Result<Vec<Complex64>> {
    if stream.len() != track.cycles.len() || stream.len() < 4 {
        return arg("stream and track lengths differ");
    }
    let c = &track.cycles;
    let n_out = (total_cycles / blf_hz * rate_hz).round() as usize;
    let mut out = Vec::with_capacity(n_out);
    let mut i = 0usize;
    for j in 0..n_out {
        let u = j as f64 * blf_hz / rate_hz;
        while i + 2 < c.len() && c[i + 1] <= u {
            i += 1;
        }
        let span = c[i + 1] - c[i];
        let x = if span > 0.0 { i as f64 + (u - c[i]) / span } else { i as f64 };
        out.push(catmull_rom(stream, x.max(0.0)));
    }
    Ok(out)
}
