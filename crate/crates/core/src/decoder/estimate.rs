use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pll::ClockTrack;
use super::sync::TemplateRenderer;
use crate::error::{arg, Result};
use crate::model::{ArrayGeometry, ChannelMatrix, MAX_QUALITY_DB};
use crate::waveform::{band_limit, BasebandWave, PacketLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateSegment {
    /// RN16 reply only.
    Rn16Only,
    /// Both replies.
    Full,
}

const OVERSAMPLE: usize = 8;

/// Clock-true template on the stream's sample grid, restricted to
/// `segment` and optionally band-limited. Returns the template and the
/// sample range it covers.
pub(crate) fn packet_template(
    layout: &PacketLayout,
    track: &ClockTrack,
    rate_hz: f64,
    segment: EstimateSegment,
    bandwidth_hz: Option<f64>,
) -> Result<(Vec<f64>, std::ops::Range<usize>)> {
    let c = &track.cycles;
    if c.len() < 2 {
        return arg("track too short");
    }
    let end_cycle = match segment {
        EstimateSegment::Full => layout.total_cycles(),
        EstimateSegment::Rn16Only => layout.rn16_end as f64 / 2.0,
    };
    let r = TemplateRenderer::new(layout);
    let over = if bandwidth_hz.is_some() { OVERSAMPLE } else { 1 };
    let mut fine = Vec::with_capacity(c.len() * over);
    for n in 0..c.len() {
        let du = if n + 1 < c.len() { c[n + 1] - c[n] } else { c[n] - c[n - 1] };
        let step = du / over as f64;
        for p in 0..over {
            let u = c[n] + p as f64 * step;
            let lo = (u - 0.5 * step).max(0.0);
            let hi = (u + 0.5 * step).min(end_cycle);
            fine.push(if hi <= lo { 0.0 } else { r.area(lo, hi) / step });
        }
    }
    let first = c.iter().position(|u| *u >= -1.0).unwrap_or(c.len());
    let last = c.iter().rposition(|u| *u <= end_cycle + 1.0).map_or(0, |i| i + 1);
    if first >= last {
        return arg("packet not inside the stream");
    }
    let t = match bandwidth_hz {
        Some(bw) => {
            let w = BasebandWave {
                samples: fine.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
                rate_hz: rate_hz * over as f64,
                start_s: 0.0,
            };
            band_limit(&w, bw)?.samples.iter().step_by(over).map(|v| v.re).collect()
        }
        None => fine,
    };
    Ok((t, first..last))
}

/// Matched-filter gain of `stream` against `template` over `range`, with
/// the residual-based SNR in dB.
pub(crate) fn matched_gain(stream: &[Complex64], template: &[f64], range: std::ops::Range<usize>) -> (Complex64, f64) {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for n in range.clone() {
        num += stream[n] * template[n];
        den += template[n] * template[n];
    }
    if den <= 0.0 {
        return (Complex64::new(0.0, 0.0), f64::NEG_INFINITY);
    }
    let h = num / den;
    let mut resid = 0.0;
    for n in range.clone() {
        resid += (stream[n] - h * template[n]).norm_sqr();
    }
    let sig = h.norm_sqr() * den;
    let snr = if resid > 0.0 { (10.0 * (sig / resid).log10()).min(MAX_QUALITY_DB) } else { MAX_QUALITY_DB };
    (h, snr)
}

/// Per-(antenna, carrier) estimate against a template built from an
/// arbitrary segment of the decoded packet.
pub fn segment_channel_estimate(
    streams: &[Vec<Vec<Complex64>>],
    carriers_hz: &[f64],
    geometry: &ArrayGeometry,
    layout: &PacketLayout,
    track: &ClockTrack,
    rate_hz: f64,
    segment: EstimateSegment,
    bandwidth_hz: Option<f64>,
) -> Result<ChannelMatrix> {
    let (template, range) = packet_template(layout, track, rate_hz, segment, bandwidth_hz)?;
    for ant in streams {
        if ant.len() != carriers_hz.len() || ant.iter().any(|s| s.len() != template.len()) {
            return arg("template and stream lengths differ");
        }
    }
    let rows: Vec<Vec<(Complex64, f64)>> = streams
        .par_iter()
        .map(|ant| ant.iter().map(|s| matched_gain(s, &template, range.clone())).collect())
        .collect();
    let mut ch = ChannelMatrix::new(
        rows.iter().map(|r| r.iter().map(|e| e.0).collect()).collect(),
        carriers_hz.to_vec(),
        geometry.clone(),
    )?;
    ch.quality_db = rows.iter().map(|r| r.iter().map(|e| e.1).collect()).collect();
    Ok(ch)
}

/// Full-packet matched-filter channel estimates: `streams[k][l]` on the
/// track's sample grid.
pub fn full_packet_channel_estimate(
    streams: &[Vec<Vec<Complex64>>],
    carriers_hz: &[f64],
    geometry: &ArrayGeometry,
    layout: &PacketLayout,
    track: &ClockTrack,
    rate_hz: f64,
    bandwidth_hz: Option<f64>,
) -> Result<ChannelMatrix> {
    segment_channel_estimate(streams, carriers_hz, geometry, layout, track, rate_hz, EstimateSegment::Full, bandwidth_hz)
}
