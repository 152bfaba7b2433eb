//! Acceptance run: one PASS/FAIL line per criterion, exit status nonzero
//! when a gated criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use chordsim::channelizer::dynamic_range_required;
use chordsim::decoder::{
    decode_pipeline, msnr_combine, mrc_combine, reply_metric, segment_channel_estimate, viterbi_decode, ClockTrack,
    DecoderConfig, EstimateSegment,
};
use chordsim::harness::{
    ablation_sweep, decode_corpus, gate_corpus, generate_corpus, report_from_decoded, run_batch, simulate_capture,
    CorpusConfig, GateConfig, PipelineConfig, SceneSpec, SimConfig, SweepAxis,
};
use chordsim::locator::{
    classify_roi, enhance_direct_path, tof_profile, tof_spectrum_weighted, DistanceUnits, LocationEstimate, PriorROI,
    RoiClass, TofAxis, TofProfile,
};
use chordsim::model::{
    distance_resolution, fraunhofer_distance, thermal_noise_dbm, wrap_phase, ArrayGeometry, CarrierPlan, Path, Scene,
    SceneTag, SPEED_OF_LIGHT,
};
use chordsim::waveform::{crest_factor, miller_halves, synth_multisine, MillerPreamble, MultisineSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<(bool, String), String>;

fn cnoise(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let n = Normal::new(0.0, (var / 2.0).sqrt()).unwrap();
    Complex64::new(n.sample(rng), n.sample(rng))
}

fn epc() -> Vec<bool> {
    (0..96).map(|i| (i * 7 + 3) % 5 < 2).collect()
}

fn two_path_scene() -> Scene {
    Scene {
        tags: vec![SceneTag {
            epc: epc(),
            position_m: [0.3, 2.0, 0.0],
            paths: vec![Path::direct(1.0), Path::reflector([1.2, 3.0, 0.5], 0.4)],
        }],
        ambient_noise_dbm_per_hz: -174.0,
        seed: 7,
    }
}

fn e<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T, String> {
    r.map_err(|x| x.to_string())
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn analytic() -> Outcome {
    let n_tag = e(thermal_noise_dbm(250e3))?;
    let n_wide = e(thermal_noise_dbm(200e6))?;
    let gain = n_wide - n_tag;
    let res = e(distance_resolution(200e6))?;
    let fr = e(fraunhofer_distance(1.0, 0.3))?;
    let dr = dynamic_range_required(16);
    let ok = (n_tag + 120.0).abs() <= 0.05
        && (n_wide + 91.0).abs() <= 0.05
        && (gain - 29.03).abs() <= 0.005
        && (res - 0.75).abs() <= 0.005
        && (fr - 6.7).abs() <= 0.05
        && (dr - 98.08).abs() <= 0.005;
    Ok((
        ok,
        format!(
            "noise {n_tag:.2}/{n_wide:.2} dBm, gain {gain:.3} dB, resolution {res:.4} m, fraunhofer {fr:.3} m, dynamic range {dr:.2} dB"
        ),
    ))
}

fn crest() -> Outcome {
    let plan = CarrierPlan::paper_default();
    let wave = e(synth_multisine(&MultisineSpec { plan: &plan, duration_s: 20e-6, amplitude: 1.0 }))?;
    let cf = e(crest_factor(&wave))?;
    Ok((cf.ratio <= 1.5 && cf.papr_db <= 3.5, format!("crest factor {:.3}, PAPR {:.2} dB", cf.ratio, cf.papr_db)))
}

fn integration_gain() -> Outcome {
    let plan = CarrierPlan::desk_default();
    let geom = ArrayGeometry::paper_default();
    let spec = SceneSpec {
        scene: two_path_scene(),
        snr_db: None,
        leak_db: None,
        active_antennas: Some(vec![0]),
        active_carriers: Some(vec![0]),
    };
    let sim = SimConfig { alpha0_frac: Some(0.0), drift_frac: 0.0, ..SimConfig::default() };
    let cap = e(simulate_capture(&spec, &plan, &geom, 0, 1, &sim))?;
    let bank = e(cap.banks())?.remove(0);
    let clean = &bank.streams[0];
    let pkt = &cap.packet;
    let layout = e(pkt.layout())?;
    let track = ClockTrack {
        cycles: (0..clean.len()).map(|n| pkt.cycles_at(bank.start_s + n as f64 / bank.rate_hz)).collect(),
        alpha_t: Vec::new(),
        loop_bandwidth_hz: 0.0,
        lock_flag: true,
        rms_error_cycles: Vec::new(),
    };
    let g1 = e(geom.subset(&[0]))?;
    let truth = cap.channel.h[0][0].arg();
    let bw = DecoderConfig::default().template_bandwidth_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut short, mut full) = (Vec::new(), Vec::new());
    for _ in 0..500 {
        let noisy: Vec<Complex64> = clean.iter().map(|v| v + cnoise(&mut rng, 1.0)).collect();
        let streams = vec![vec![noisy]];
        for (seg, out) in [(EstimateSegment::Rn16Only, &mut short), (EstimateSegment::Full, &mut full)] {
            let ch = e(segment_channel_estimate(&streams, &bank.carriers_hz, &g1, &layout, &track, bank.rate_hz, seg, bw))?;
            out.push(wrap_phase(ch.h[0][0].arg() - truth));
        }
    }
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let ratio = db(var(&short) / var(&full));
    let energy = |h: &[f64]| h.iter().map(|v| v * v).sum::<f64>();
    let predicted = db(energy(&layout.halves) / energy(&layout.halves[..layout.rn16_end]));
    Ok((
        (ratio - 8.7).abs() <= 1.0,
        format!("variance ratio {ratio:.2} dB over 500 seeds at 0 dB per-sample SNR (template energy ratio {predicted:.2} dB)"),
    ))
}

fn channelization() -> Outcome {
    let plan = CarrierPlan::desk_default();
    let geom = ArrayGeometry::paper_default();
    let spec = SceneSpec {
        scene: two_path_scene(),
        snr_db: None,
        leak_db: None,
        active_antennas: Some(vec![0, 5]),
        active_carriers: None,
    };
    let fast = e(e(simulate_capture(&spec, &plan, &geom, 0, 3, &SimConfig::default()))?.banks())?;
    let full_cfg = SimConfig { fast_path: false, ..SimConfig::default() };
    let full = e(e(simulate_capture(&spec, &plan, &geom, 0, 3, &full_cfg))?.banks())?;
    let mut worst = f64::NEG_INFINITY;
    for (f, w) in fast.iter().zip(&full) {
        let off = ((w.start_s - f.start_s) * w.rate_hz).round() as isize;
        for (fs, ws) in f.streams.iter().zip(&w.streams) {
            let (mut num, mut den) = (0.0, 0.0);
            for n in w.valid_start..w.valid_end {
                let m = n as isize + off;
                if m < 0 || m as usize >= fs.len() {
                    continue;
                }
                num += (ws[n] - fs[m as usize]).norm_sqr();
                den += fs[m as usize].norm_sqr();
            }
            if den == 0.0 {
                return Err("empty comparison range".into());
            }
            worst = worst.max(db(num / den));
        }
    }
    Ok((worst <= -40.0, format!("worst per-channel error {worst:.1} dB over 2 antennas x 16 carriers")))
}

fn clock_robustness() -> Outcome {
    let plan = CarrierPlan::desk_default();
    let geom = ArrayGeometry::paper_default();
    let spec = SceneSpec {
        scene: two_path_scene(),
        snr_db: Some(10.0),
        leak_db: Some(20.0),
        active_antennas: None,
        active_carriers: None,
    };
    let dec = DecoderConfig::default();
    let (mut ok, mut total) = (0, 0);
    let mut bad = Vec::new();
    for a in [-0.10, -0.05, 0.0, 0.05, 0.10] {
        for drift in [0.0, 0.025] {
            let sim = SimConfig { alpha0_frac: Some(a), drift_frac: drift, ..SimConfig::default() };
            for s in 0..50u64 {
                total += 1;
                let cap = e(simulate_capture(&spec, &plan, &geom, 0, 1000 + s, &sim))?;
                let good = match decode_pipeline(&e(cap.banks())?, &plan, &geom, &dec) {
                    Ok(p) => p.crc_ok && p.epc_bits == epc() && p.rn16_bits == cap.packet.rn16_bits,
                    Err(_) => false,
                };
                if good {
                    ok += 1;
                } else if bad.len() < 5 {
                    bad.push(format!("{a}/{drift}/{s}"));
                }
            }
        }
    }
    Ok((ok == total, format!("{ok}/{total} packets bit-exact at 10 dB{}", if bad.is_empty() { String::new() } else { format!(", first failures {bad:?}") })))
}

fn viterbi_ml() -> Outcome {
    const RATE: f64 = 1.92e6;
    const BLF: f64 = 250e3;
    let m = 4;
    let pre = MillerPreamble::default();
    let noise = Normal::new(0.0, 10f64.powf(-0.3).sqrt()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10usize);
        let bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let h = e(miller_halves(&bits, m, &pre))?;
        let len = (h.len() as f64 / 2.0 / BLF * RATE).ceil() as usize + 4;
        let x: Vec<f64> = (0..len)
            .map(|j| h.get((2.0 * j as f64 * BLF / RATE).floor() as usize).copied().unwrap_or(0.0) + noise.sample(&mut rng))
            .collect();
        let v = e(viterbi_decode(&x, RATE, BLF, m, 0.0, n, &pre, f64::NEG_INFINITY))?;
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for code in 0..1u32 << n {
            let cand: Vec<bool> = (0..n).map(|i| code >> (n - 1 - i) & 1 == 1).collect();
            let metric = e(reply_metric(&x, RATE, BLF, m, 0.0, &cand, &pre))?;
            if metric > best.0 {
                best = (metric, cand);
            }
        }
        if best.1 != v.bits {
            mismatches += 1;
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches against exhaustive search over 1000 seeds at 3 dB")))
}

fn measured_snr_db(y: &[Complex64], x: &[Complex64]) -> f64 {
    let xx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let a: Complex64 = y.iter().zip(x).map(|(u, v)| u * v.conj()).sum::<Complex64>() / xx;
    let resid: f64 = y.iter().zip(x).map(|(u, v)| (u - a * v).norm_sqr()).sum();
    db(a.norm_sqr() * xx / resid)
}

fn combining() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let gamma_db = 3.0;
    let var = 10f64.powf(-gamma_db / 10.0);
    let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(if rng.random() { 1.0 } else { -1.0 }, 0.0)).collect();
    let mut mrc_ok = true;
    let mut parts = Vec::new();
    for l in [2usize, 4, 16] {
        let gains: Vec<Complex64> = (0..l).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI)).collect();
        let streams: Vec<Vec<Complex64>> =
            gains.iter().map(|g| x.iter().map(|v| g * v + cnoise(&mut rng, var)).collect()).collect();
        let y = e(mrc_combine(&streams, &gains, &vec![var; l]))?;
        let got = measured_snr_db(&y, &x);
        let want = gamma_db + db(l as f64);
        mrc_ok &= (got - want).abs() <= 0.5;
        parts.push(format!("L={l} {got:.2}/{want:.2} dB"));
    }

    let geom = ArrayGeometry::paper_default();
    let keep: Vec<usize> = geom.center_out_order().into_iter().take(4).collect();
    let xs: Vec<f64> = keep.iter().map(|&k| geom.rx_positions_m[k][0]).collect();
    let lambda = SPEED_OF_LIGHT / 915e6;
    let steer = |deg: f64| -> Vec<Complex64> {
        xs.iter().map(|x| Complex64::from_polar(1.0, -2.0 * PI * x * deg.to_radians().sin() / lambda)).collect()
    };
    let (a_s, a_j) = (steer(10.0), steer(-35.0));
    let (p_s, p_j, p_n) = (1.0, 10.0, 0.01);
    let (quiet, total) = (10_000, 40_000);
    let mut rows = vec![Vec::with_capacity(total); 4];
    for t in 0..total {
        let s = if t >= quiet { Complex64::new(if rng.random() { 1.0 } else { -1.0 }, 0.0) } else { Complex64::new(0.0, 0.0) };
        let j = cnoise(&mut rng, p_j);
        for k in 0..4 {
            rows[k].push(a_s[k] * s + a_j[k] * j + cnoise(&mut rng, p_n));
        }
    }
    let w = e(msnr_combine(&rows, 0..quiet, quiet..total))?.weights;
    let gain = |a: &[Complex64]| w.iter().zip(a).map(|(wi, ai)| wi.conj() * ai).sum::<Complex64>().norm_sqr();
    let sir_out = db(gain(&a_s) * p_s / (gain(&a_j) * p_j));
    let sir_in = db(p_s / p_j);
    let improvement = sir_out - sir_in;
    parts.push(format!("MSNR jammer suppression {improvement:.1} dB"));
    Ok((mrc_ok && improvement >= 15.0, parts.join(", ")))
}

fn phases_of(h: &[Complex64]) -> Vec<f64> {
    h.iter().map(|v| -v.arg()).collect()
}

fn peaks_near(p: &TofProfile, lo: f64, hi: f64) -> usize {
    let max = p.magnitude.iter().cloned().fold(0.0, f64::max);
    p.local_maxima(0.5 * max).into_iter().filter(|&i| p.distances_m[i] >= lo && p.distances_m[i] <= hi).count()
}

fn resolution_law() -> Outcome {
    let plan = e(CarrierPlan::uniform(16, 787e6, 200e6))?;
    let f = &plan.carriers_hz;
    let axis = TofAxis::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut resolved, mut merged, mut resolved_lin, mut merged_lin) = (0, 0, 0, 0);
    for _ in 0..20 {
        let d0 = rng.random_range(1.5..5.0);
        let a1 = rng.random_range(0.5..1.0);
        for (wide, dd) in [(true, rng.random_range(1.0..2.0)), (false, rng.random_range(0.1..0.4))] {
            let h: Vec<Complex64> = f
                .iter()
                .map(|fl| {
                    let k = 2.0 * PI * fl / SPEED_OF_LIGHT;
                    Complex64::from_polar(1.0, -k * 2.0 * d0)
                        + Complex64::from_polar(a1, -k * 2.0 * (d0 + dd))
                        + cnoise(&mut rng, 0.01)
                })
                .collect();
            let phases = phases_of(&h);
            let prof = e(tof_profile(&phases, f, &axis))?;
            let mags: Vec<f64> = h.iter().map(|v| v.norm()).collect();
            let lin = e(tof_spectrum_weighted(&phases, f, &mags, &axis.samples(), DistanceUnits::OneWay))?;
            let (lo, hi) = (d0 - 1.0, d0 + dd + 1.0);
            let (n, nl) = (peaks_near(&prof, lo, hi), peaks_near(&lin, lo, hi));
            match wide {
                true => {
                    resolved += usize::from(n == 2);
                    resolved_lin += usize::from(nl == 2);
                }
                false => {
                    merged += usize::from(n == 1);
                    merged_lin += usize::from(nl == 1);
                }
            }
        }
    }
    Ok((
        resolved == 20 && merged == 20,
        format!(
            "phase-only profile: resolved {resolved}/20 (dd in [1,2) m), merged {merged}/20 (dd in [0.1,0.4) m); magnitude-weighted profile: {resolved_lin}/20, {merged_lin}/20"
        ),
    ))
}

fn residual_weight(carriers: &[f64], path_diff_m: f64) -> f64 {
    let s: Complex64 = carriers
        .iter()
        .map(|f| Complex64::from_polar(1.0, -2.0 * PI * f * path_diff_m / SPEED_OF_LIGHT))
        .sum();
    s.norm() / carriers.len() as f64
}

fn suppression() -> Outcome {
    let plan = e(CarrierPlan::uniform(16, 787e6, 200e6))?;
    let f = &plan.carriers_hz;
    let span = f[f.len() - 1] - f[0];
    let path_diff = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut wins = 0;
    let mut weights = Vec::new();
    for _ in 0..100 {
        let d0 = rng.random_range(1.5..6.0);
        let a1 = rng.random_range(0.3..0.9);
        let direct: Vec<f64> = f.iter().map(|fl| 2.0 * PI * fl * 2.0 * d0 / SPEED_OF_LIGHT).collect();
        let h: Vec<Complex64> = f
            .iter()
            .zip(&direct)
            .map(|(fl, ph)| {
                Complex64::from_polar(1.0, -ph)
                    + Complex64::from_polar(a1, -ph - 2.0 * PI * fl * path_diff / SPEED_OF_LIGHT)
                    + cnoise(&mut rng, 1e-3)
            })
            .collect();
        let raw = phases_of(&h);
        let enh = e(enhance_direct_path(&raw, f, d0))?;
        let err = |p: &[f64]| p.iter().zip(&direct).map(|(a, b)| wrap_phase(a - b).abs()).sum::<f64>() / f.len() as f64;
        wins += usize::from(err(&enh) < err(&raw));
        let mean: Complex64 = h.iter().zip(&direct).map(|(v, ph)| v * Complex64::from_polar(1.0, *ph)).sum::<Complex64>()
            / f.len() as f64;
        weights.push((mean - 1.0).norm() / a1);
    }
    let measured = weights.iter().sum::<f64>() / weights.len() as f64;
    let x = span * path_diff / SPEED_OF_LIGHT;
    let sinc = ((PI * x).sin() / (PI * x)).abs();
    let gapped = residual_weight(&CarrierPlan::paper_default().carriers_hz, path_diff);
    Ok((
        wins >= 95 && (measured - sinc).abs() <= 0.1,
        format!(
            "enhanced better in {wins}/100, residual weight {measured:.3} vs |sinc| {sinc:.3} (16-tone uniform plan; gapped default plan gives {gapped:.3})"
        ),
    ))
}

fn monotone(v: &[Option<f64>]) -> bool {
    v.windows(2).all(|w| matches!(w, [Some(a), Some(b)] if b <= a))
}

fn fmt_p99(v: &[Option<f64>]) -> String {
    v.iter().map(|x| x.map_or("-".into(), |x| format!("{x:.3}"))).collect::<Vec<_>>().join("/")
}

fn trends(throughput: &mut Option<(usize, f64)>) -> Outcome {
    let cfg = PipelineConfig::default();
    let scenes = e(generate_corpus(&CorpusConfig::default()))?;
    let (decoded, decode_s) = e(decode_corpus(&scenes, &cfg))?;
    let (_, localize_s) = e(report_from_decoded(&decoded, None, &cfg))?;
    *throughput = Some((decoded.len(), decode_s + localize_s));
    let failures = decoded.iter().filter(|d| d.channel.is_none()).count();
    let bw = e(ablation_sweep(&decoded, &"bandwidth".parse().map_err(|x: chordsim::Error| x.to_string())?, &cfg.locator))?.p99();
    let ant = e(ablation_sweep(&decoded, &SweepAxis::Antennas(vec![2, 4, 6, 8]), &cfg.locator))?.p99();
    let alg = e(ablation_sweep(&decoded, &SweepAxis::Algorithm, &cfg.locator))?.p99();
    let alg_ok = matches!(alg[..], [Some(basic), Some(chord)] if chord <= basic);

    let clean_cfg = PipelineConfig { snr_db: None, leak_db: None, ..PipelineConfig::default() };
    let single = e(generate_corpus(&CorpusConfig::single_path(200, CorpusConfig::default().seed)))?;
    let run = e(run_batch(&single, None, &clean_cfg))?;
    let diag = cfg.locator.grid.cell_m * 2f64.sqrt();
    let single_p99 = run.report.errors.p99_m;
    let single_ok = single_p99.is_some_and(|p| p <= diag) && run.report.failures == 0;

    let ok = monotone(&bw) && monotone(&ant) && alg_ok && single_ok;
    Ok((
        ok,
        format!(
            "{} tags, {failures} decode failures; p99 m: bandwidth 50/100/150/200 MHz {} ({}), antennas 2/4/6/8 {} ({}), basic/chord {} ({}), noiseless single-path {} vs {diag:.4} ({})",
            decoded.len(),
            fmt_p99(&bw),
            if monotone(&bw) { "monotone" } else { "not monotone" },
            fmt_p99(&ant),
            if monotone(&ant) { "monotone" } else { "not monotone" },
            fmt_p99(&alg),
            if alg_ok { "ok" } else { "chord worse" },
            fmt_p99(&[single_p99]),
            if single_ok { "ok" } else { "too large" },
        ),
    ))
}

fn estimate_at(r: f64) -> LocationEstimate {
    LocationEstimate {
        position_m: [0.0, r, 0.0],
        likelihood: 1.0,
        heatmap: None,
        d0_rough_m: None,
        enhancement_applied: false,
        fallback: false,
        peak_count: 1,
        cell_m: 0.05,
    }
}

fn roi() -> Outcome {
    let gate = GateConfig::default();
    let (scenes, labels) = e(gate_corpus(&gate))?;
    let mut cfg = PipelineConfig::default();
    cfg.locator.prior.range_m = gate.roi_range_m;
    let run = e(run_batch(&scenes, Some(&labels), &cfg))?;
    let Some(rates) = run.report.roi else {
        return Err("no ROI rates in report".into());
    };
    let prior = PriorROI { range_m: gate.roi_range_m, ..PriorROI::default() };
    let [lo, hi] = gate.roi_range_m;
    let half_diag = 0.05 * std::f64::consts::FRAC_1_SQRT_2;
    let boundary = [
        (hi, RoiClass::Inside),
        (hi + 0.9 * half_diag, RoiClass::Inside),
        (lo - 0.9 * half_diag, RoiClass::Inside),
        (hi + 1.1 * half_diag, RoiClass::Outside),
        (lo - 1.1 * half_diag, RoiClass::Outside),
    ];
    let boundary_ok = boundary.iter().all(|(r, want)| classify_roi(&estimate_at(*r), &prior) == *want);
    Ok((
        rates.missed == 0 && rates.cross_rate <= 0.02 && boundary_ok,
        format!(
            "{} inside / {} outside tags, missed {}, crossed {} ({:.2}%), boundary policy {}",
            rates.inside,
            rates.outside,
            rates.missed,
            rates.crossed,
            100.0 * rates.cross_rate,
            if boundary_ok { "ok" } else { "violated" }
        ),
    ))
}

struct Criterion {
    id: usize,
    limit_s: f64,
    gated: bool,
}

fn report(c: &Criterion, outcome: Outcome, secs: f64) -> bool {
    let (ok, detail) = match outcome {
        Ok(x) => x,
        Err(msg) => (false, format!("error: {msg}")),
    };
    let in_time = secs <= c.limit_s;
    let pass = ok && in_time;
    let note = if c.gated { "" } else { " [informational]" };
    println!(
        "criterion {:>2}: {} - {detail}; {secs:.1} s (limit {:.0} s){}{note}",
        c.id,
        if pass { "PASS" } else { "FAIL" },
        c.limit_s,
        if in_time { "" } else { ", over time" }
    );
    pass || !c.gated
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut all = true;
    let mut throughput = None;
    let runs: Vec<(Criterion, Box<dyn FnMut() -> Outcome + '_>)> = vec![
        (Criterion { id: 1, limit_s: 1.0, gated: true }, Box::new(analytic)),
        (Criterion { id: 2, limit_s: 5.0, gated: true }, Box::new(crest)),
        (Criterion { id: 3, limit_s: 60.0, gated: true }, Box::new(integration_gain)),
        (Criterion { id: 4, limit_s: 30.0, gated: true }, Box::new(channelization)),
        (Criterion { id: 5, limit_s: 300.0, gated: true }, Box::new(clock_robustness)),
        (Criterion { id: 6, limit_s: 60.0, gated: true }, Box::new(viterbi_ml)),
        (Criterion { id: 7, limit_s: 60.0, gated: true }, Box::new(combining)),
        (Criterion { id: 8, limit_s: 60.0, gated: true }, Box::new(resolution_law)),
        (Criterion { id: 9, limit_s: 60.0, gated: true }, Box::new(suppression)),
        (Criterion { id: 10, limit_s: 600.0, gated: true }, Box::new(|| trends(&mut throughput))),
        (Criterion { id: 11, limit_s: 120.0, gated: true }, Box::new(roi)),
    ];
    for (c, mut f) in runs {
        let t = Instant::now();
        let out = f();
        all &= report(&c, out, t.elapsed().as_secs_f64());
    }
    let c12 = Criterion { id: 12, limit_s: f64::INFINITY, gated: false };
    let out = match throughput {
        Some((n, busy)) if busy > 0.0 => {
            let pps = n as f64 / busy;
            Ok((pps >= 100.0, format!("{pps:.1} packets/s decode+localize over {n} packets on this machine")))
        }
        _ => Err("no corpus timing available".into()),
    };
    all &= report(&c12, out, 0.0);
    if !all {
        std::process::exit(1);
    }
}
