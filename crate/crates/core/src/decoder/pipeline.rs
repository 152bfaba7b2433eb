use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::combine::{mrc_combine, msnr_combine};
use super::compensate::compensate_clock;
use super::estimate::{full_packet_channel_estimate, matched_gain};
use super::pll::{pll_track, ClockTrack};
use super::sync::{preamble_search, preamble_search_around, SearchWindow, SyncEstimate, TemplateRenderer};
use super::viterbi::viterbi_decode;
use super::DecoderConfig;
use crate::channelizer::{notch_dc, ChannelBank};
use crate::error::{arg, Error, Result};
use crate::model::{ArrayGeometry, CarrierPlan, ChannelMatrix};
use crate::waveform::{crc16_gen2, PacketLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedPacket {
    pub rn16_bits: Vec<bool>,
    pub epc_bits: Vec<bool>,
    pub crc_ok: bool,
    pub channel: ChannelMatrix,
    pub sync: SyncEstimate,
    pub track: ClockTrack,
    /// Per-(antenna, carrier) SNR in dB, same as `channel.quality_db`.
    pub snr_db: Vec<Vec<f64>>,
    pub viterbi_metric: [f64; 2],
    /// Carriers whose noise covariance needed diagonal loading.
    pub loaded_carriers: Vec<usize>,
}

pub fn bits_to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|c| {
            let v = c.iter().fold(0u8, |a, b| (a << 1) | u8::from(*b)) << (4 - c.len());
            char::from_digit(v as u32, 16).unwrap()
        })
        .collect()
}

pub fn hex_to_bits(hex: &str) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(hex.len() * 4);
    for ch in hex.chars() {
        let v = ch.to_digit(16).ok_or_else(|| Error::Argument(format!("bad hex digit {ch:?}")))?;
        out.extend((0..4).rev().map(|i| (v >> i) & 1 == 1));
    }
    Ok(out)
}

impl DecodedPacket {
    pub fn epc_hex(&self) -> String {
        bits_to_hex(&self.epc_bits)
    }
}

fn check_banks(banks: &[ChannelBank], plan: &CarrierPlan) -> Result<()> {
    let first = banks.first().ok_or_else(|| Error::Argument("no channel banks".into()))?;
    for b in banks {
        b.validate()?;
        if b.len() != first.len() || b.rate_hz != first.rate_hz || b.start_s != first.start_s {
            return arg("channel banks are not time-aligned");
        }
        if b.carriers_hz != plan.carriers_hz {
            return arg("bank carriers differ from plan");
        }
    }
    Ok(())
}

const EPC_SEARCH_CYCLES: f64 = 16.0;
const EARLIER_PEAK_RATIO: f64 = 0.6;

/// Re-acquire the EPC reply preamble near where the RN16 track predicts it
/// and track the EPC reply from there, stitching both tracks.
#[allow(clippy::too_many_arguments)]
fn reanchor_epc(
    steered: &[Complex64],
    real: &[f64],
    rate: f64,
    start_s: f64,
    track: ClockTrack,
    blank: &PacketLayout,
    pre_layout: &PacketLayout,
    cfg: &DecoderConfig,
) -> Result<ClockTrack> {
    let epc_cycle = blank.epc_start as f64 / 2.0;
    let Some(i) = track.cycles.iter().position(|u| *u >= epc_cycle) else {
        return Ok(track);
    };
    let predicted = start_s + i as f64 / rate;
    let tol = EPC_SEARCH_CYCLES / cfg.blf_hz;
    let w = SearchWindow { start_s: predicted - tol, end_s: predicted + tol };
    let center = track.alpha_at(epc_cycle / cfg.blf_hz);
    let Ok(sync2) =
        preamble_search_around(steered, rate, start_s, pre_layout, Some(w), center, cfg.reacquire_range, cfg)
    else {
        return Ok(track);
    };
    let epc_layout = PacketLayout {
        halves: blank.halves[blank.epc_start..].to_vec(),
        rn16_end: 0,
        epc_start: 0,
        miller_m: blank.miller_m,
        preamble_symbols: blank.preamble_symbols,
    };
    let t2 = pll_track(real, rate, start_s, &sync2, &epc_layout, cfg.blf_hz, &cfg.pll)?;
    let cycles: Vec<f64> = track
        .cycles
        .iter()
        .zip(&t2.cycles)
        .map(|(a, b)| if *b >= 0.0 { epc_cycle + b } else { a.min(epc_cycle) })
        .collect();
    let split = epc_cycle / cfg.blf_hz;
    let mut alpha_t: Vec<(f64, f64)> = track.alpha_t.iter().copied().filter(|(t, _)| *t < split).collect();
    alpha_t.extend(t2.alpha_t.iter().map(|(t, a)| (t + split, *a)));
    let rms: Vec<f64> = track.rms_error_cycles.iter().take(1).chain(t2.rms_error_cycles.last()).copied().collect();
    let lock_flag = rms.len() == 2 && rms.iter().all(|r| *r < cfg.pll.lock_rms_cycles);
    Ok(ClockTrack { cycles, alpha_t, loop_bandwidth_hz: track.loop_bandwidth_hz, lock_flag, rms_error_cycles: rms })
}

/// Sync, combine, track, decode and estimate one packet from per-antenna
/// channel banks sharing a capture clock.
pub fn decode_pipeline(
    banks: &[ChannelBank],
    plan: &CarrierPlan,
    geom: &ArrayGeometry,
    cfg: &DecoderConfig,
) -> Result<DecodedPacket> {
    check_banks(banks, plan)?;
    let notched: Vec<ChannelBank>;
    let banks = match &cfg.notch {
        Some(n) => {
            notched = banks.iter().map(|b| notch_dc(b, n)).collect::<Result<_>>()?;
            &notched[..]
        }
        None => banks,
    };
    let ids: Vec<usize> = banks.iter().map(|b| b.antenna_id).collect();
    let geometry = geom.subset(&ids)?;
    let rate = banks[0].rate_hz;
    let vs = banks.iter().map(|b| b.valid_start).max().unwrap();
    let ve = banks.iter().map(|b| b.valid_end).min().unwrap();
    if ve <= vs + 16 {
        return arg("no valid samples");
    }
    let start_s = banks[0].start_s + vs as f64 / rate;
    let streams: Vec<Vec<Vec<Complex64>>> =
        banks.iter().map(|b| b.streams.iter().map(|s| s[vs..ve].to_vec()).collect()).collect();
    let n = ve - vs;
    let (nk, nl) = (streams.len(), plan.num_carriers());

    let mut seed = (0, 0, -1.0);
    for (k, ant) in streams.iter().enumerate() {
        for (l, s) in ant.iter().enumerate() {
            let p: f64 = s.iter().map(|v| v.norm_sqr()).sum();
            if p > seed.2 {
                seed = (k, l, p);
            }
        }
    }
    let blank = cfg.layout(None, None)?;
    let pre_layout = cfg.preamble_layout()?;
    let seed_stream = &streams[seed.0][seed.1];
    let mut sync = preamble_search(seed_stream, rate, start_s, &pre_layout, None, cfg)?;
    // A comparable peak one reply-plus-gap earlier is the RN16 preamble.
    let back = blank.epc_start as f64 / 2.0 / (cfg.blf_hz - sync.alpha0_hat_hz);
    let tol = EPC_SEARCH_CYCLES / cfg.blf_hz;
    if sync.t0_hat_s - back - tol > start_s {
        let w = SearchWindow { start_s: sync.t0_hat_s - back - tol, end_s: sync.t0_hat_s - back + tol };
        let early = preamble_search_around(
            seed_stream,
            rate,
            start_s,
            &pre_layout,
            Some(w),
            sync.alpha0_hat_hz,
            cfg.reacquire_range,
            cfg,
        );
        if let Ok(early) = early {
            if early.correlation_peak >= EARLIER_PEAK_RATIO * sync.correlation_peak {
                sync = early;
            }
        }
    }

    let blf = cfg.blf_hz;
    let cps = (blf - sync.alpha0_hat_hz) / rate;
    let renderer = TemplateRenderer::new(&blank);
    let tau = (sync.t0_hat_s - start_s) * rate;
    let pre_template: Vec<f64> = (0..n).map(|i| renderer.sample((i as f64 - tau) * cps, cps)).collect();
    let t0_idx = tau.floor().max(0.0) as usize;
    let pkt_len = (blank.total_cycles() / cps).ceil() as usize;
    let active = t0_idx..(t0_idx + pkt_len).min(n);
    let guard = 4usize;
    let want = (cfg.noise_window_s * rate) as usize;
    let noise = if t0_idx > guard + 16 {
        t0_idx.saturating_sub(guard + want)..t0_idx - guard
    } else if n > active.end + guard + 16 {
        active.end + guard..(active.end + guard + want).min(n)
    } else {
        return Err(Error::DecodeFailure { stage: "noise_estimate", reason: "no signal-free samples".into() });
    };

    let per_carrier: Vec<(Vec<Complex64>, Complex64, f64, bool)> = (0..nl)
        .into_par_iter()
        .map(|l| {
            let rows: Vec<Vec<Complex64>> = (0..nk).map(|k| streams[k][l].clone()).collect();
            let r = msnr_combine(&rows, noise.clone(), active.clone())?;
            let (g, _) = matched_gain(&r.stream, &pre_template, active.clone());
            let var = r.stream[noise.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>() / noise.len() as f64;
            Ok((r.stream, g, var.max(1e-300), r.loaded))
        })
        .collect::<Result<_>>()?;
    let loaded_carriers: Vec<usize> = per_carrier.iter().enumerate().filter(|(_, c)| c.3).map(|(l, _)| l).collect();
    let z: Vec<Vec<Complex64>> = per_carrier.iter().map(|c| c.0.clone()).collect();
    let gains: Vec<Complex64> = per_carrier.iter().map(|c| c.1).collect();
    let vars: Vec<f64> = per_carrier.iter().map(|c| c.2).collect();
    let combined = mrc_combine(&z, &gains, &vars)?;
    let scale: f64 = if nl == 1 {
        1.0 / gains[0].norm().max(1e-300)
    } else {
        1.0 / gains.iter().zip(&vars).map(|(g, v)| g.norm_sqr() / v).sum::<f64>().max(1e-300)
    };
    let rot = if nl == 1 { gains[0].conj() / gains[0].norm().max(1e-300) } else { Complex64::new(1.0, 0.0) };
    let steered: Vec<Complex64> = combined.iter().map(|v| v * rot * scale).collect();
    let real: Vec<f64> = steered.iter().map(|v| v.re).collect();

    let track = pll_track(&real, rate, start_s, &sync, &blank, blf, &cfg.pll)?;
    let track = reanchor_epc(&steered, &real, rate, start_s, track, &blank, &pre_layout, cfg)?;
    let comp = compensate_clock(&steered, &track, rate, blf, blank.total_cycles())?;
    let x: Vec<f64> = comp.iter().map(|v| v.re).collect();
    let m = cfg.miller_m;
    let rn = viterbi_decode(&x, rate, blf, m, 0.0, 16, &cfg.preamble, cfg.viterbi_threshold)?;
    let ep = viterbi_decode(
        &x,
        rate,
        blf,
        m,
        blank.epc_start as f64 / 2.0,
        cfg.epc_reply_len(),
        &cfg.preamble,
        cfg.viterbi_threshold,
    )?;
    let reply = &ep.bits;
    let body = &reply[..reply.len() - 16];
    let crc = reply[reply.len() - 16..].iter().fold(0u16, |a, b| (a << 1) | u16::from(*b));
    let crc_ok = crc16_gen2(body) == crc;
    let epc_bits = body[16..].to_vec();

    let layout = cfg.layout(Some(&rn.bits), Some(reply))?;
    let channel = full_packet_channel_estimate(
        &streams,
        &plan.carriers_hz,
        &geometry,
        &layout,
        &track,
        rate,
        cfg.template_bandwidth_hz,
    )?;
    Ok(DecodedPacket {
        rn16_bits: rn.bits,
        epc_bits,
        crc_ok,
        snr_db: channel.quality_db.clone(),
        channel,
        sync,
        track,
        viterbi_metric: [rn.metric, ep.metric],
        loaded_carriers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let bits = hex_to_bits("3000e2801160").unwrap();
        assert_eq!(bits.len(), 48);
        assert_eq!(bits_to_hex(&bits), "3000e2801160");
        assert!(hex_to_bits("zz").is_err());
    }
}
