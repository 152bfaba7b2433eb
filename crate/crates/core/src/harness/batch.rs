use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use std::time::Instant;

use super::sim::{simulate_capture, SceneSpec, SimConfig};
use crate::decoder::{bits_to_hex, decode_pipeline, DecoderConfig};
use crate::error::{arg, Error, Result};
use crate::locator::{classify_roi, localize, Algorithm, LocationEstimate, LocatorConfig, RoiClass};
use crate::model::{distance, ArrayGeometry, ChannelMatrix, ModelConfig, Point3, Scene};

/// Everything that determines a batch result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub model: ModelConfig,
    pub sim: SimConfig,
    pub decoder: DecoderConfig,
    pub locator: LocatorConfig,
    pub snr_db: Option<f64>,
    pub leak_db: Option<f64>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::desk_default(),
            sim: SimConfig::default(),
            decoder: DecoderConfig::default(),
            locator: LocatorConfig::default(),
            snr_db: Some(20.0),
            leak_db: Some(20.0),
            seed: 1,
        }
    }
}

/// 64-bit FNV-1a of the JSON form, as hex.
pub fn config_digest<T: Serialize>(cfg: &T) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}

/// Nearest-rank percentile of ascending `sorted`; `q` in (0, 1].
pub fn percentile_nearest_rank(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(q > 0.0 && q <= 1.0) {
        return None;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub p50_m: Option<f64>,
    pub p90_m: Option<f64>,
    pub p99_m: Option<f64>,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Self {
        let mut v = errors.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            count: v.len(),
            p50_m: percentile_nearest_rank(&v, 0.5),
            p90_m: percentile_nearest_rank(&v, 0.9),
            p99_m: percentile_nearest_rank(&v, 0.99),
        }
    }
}

/// One tag's decode result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedTag {
    pub scene: usize,
    pub tag: usize,
    pub truth_m: Point3,
    pub epc: String,
    /// Present when the CRC passed and the EPC matched the tag.
    pub channel: Option<ChannelMatrix>,
    pub failure: Option<String>,
}

/// Simulate and decode every tag of every scene. Returns results in scene
/// and tag order, plus the summed decode time in seconds.
pub fn decode_corpus(scenes: &[Scene], cfg: &PipelineConfig) -> Result<(Vec<DecodedTag>, f64)> {
    if scenes.is_empty() {
        return arg("no scenes to run");
    }
    cfg.model.validate()?;
    let jobs: Vec<(usize, usize)> =
        scenes.iter().enumerate().flat_map(|(s, sc)| (0..sc.tags.len()).map(move |t| (s, t))).collect();
    let results: Vec<(DecodedTag, f64)> = jobs
        .par_iter()
        .map(|&(s, t)| {
            let tag = &scenes[s].tags[t];
            let mut out = DecodedTag {
                scene: s,
                tag: t,
                truth_m: tag.position_m,
                epc: bits_to_hex(&tag.epc),
                channel: None,
                failure: None,
            };
            let spec = SceneSpec {
                scene: scenes[s].clone(),
                snr_db: cfg.snr_db,
                leak_db: cfg.leak_db,
                active_antennas: None,
                active_carriers: None,
            };
            let banks = simulate_capture(&spec, &cfg.model.plan, &cfg.model.geometry, t, cfg.seed, &cfg.sim)
                .and_then(|c| c.banks());
            let banks = match banks {
                Ok(b) => b,
                Err(e) => {
                    out.failure = Some(format!("simulation: {e}"));
                    return (out, 0.0);
                }
            };
            let start = Instant::now();
            let decoded = decode_pipeline(&banks, &cfg.model.plan, &cfg.model.geometry, &cfg.decoder);
            let elapsed = start.elapsed().as_secs_f64();
            match decoded {
                Ok(p) if !p.crc_ok => out.failure = Some("crc mismatch".into()),
                Ok(p) if p.epc_bits != tag.epc => out.failure = Some("epc mismatch".into()),
                Ok(p) => out.channel = Some(p.channel),
                Err(e) => out.failure = Some(e.to_string()),
            }
            (out, elapsed)
        })
        .collect();
    let total = results.iter().map(|r| r.1).sum();
    Ok((results.into_iter().map(|r| r.0).collect(), total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagOutcome {
    pub scene: usize,
    pub tag: usize,
    pub epc: String,
    pub truth_m: Point3,
    pub estimate: Option<LocationEstimate>,
    pub error_m: Option<f64>,
    pub roi: Option<RoiClass>,
    pub label: Option<RoiClass>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiRates {
    pub inside: usize,
    pub outside: usize,
    pub missed: usize,
    pub crossed: usize,
    pub miss_rate: f64,
    pub cross_rate: f64,
}

/// Miss: inside tags classified outside or not located. Cross: outside
/// tags classified inside.
pub fn evaluate_roi(classes: &[Option<RoiClass>], labels: &[RoiClass]) -> Result<RoiRates> {
    if classes.len() != labels.len() {
        return arg(format!("{} results but {} labels", classes.len(), labels.len()));
    }
    let mut r = RoiRates { inside: 0, outside: 0, missed: 0, crossed: 0, miss_rate: 0.0, cross_rate: 0.0 };
    for (c, l) in classes.iter().zip(labels) {
        match l {
            RoiClass::Inside => {
                r.inside += 1;
                if *c != Some(RoiClass::Inside) {
                    r.missed += 1;
                }
            }
            RoiClass::Outside => {
                r.outside += 1;
                if *c == Some(RoiClass::Inside) {
                    r.crossed += 1;
                }
            }
        }
    }
    if r.inside > 0 {
        r.miss_rate = r.missed as f64 / r.inside as f64;
    }
    if r.outside > 0 {
        r.cross_rate = r.crossed as f64 / r.outside as f64;
    }
    Ok(r)
}

/// Deterministic batch summary; timing lives in [`RunTiming`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub outcomes: Vec<TagOutcome>,
    pub tags: usize,
    pub located: usize,
    pub failures: usize,
    pub errors: ErrorStats,
    pub roi: Option<RoiRates>,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub packets: usize,
    pub decode_s: f64,
    pub localize_s: f64,
    /// Packets per second of summed decode and localize time.
    pub throughput_pps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRun {
    pub report: RunReport,
    pub timing: RunTiming,
}

fn locate_all(decoded: &[DecodedTag], cfg: &LocatorConfig) -> (Vec<Result<LocationEstimate>>, f64) {
    let cfg = LocatorConfig { keep_heatmap: false, ..cfg.clone() };
    let r: Vec<(Result<LocationEstimate>, f64)> = decoded
        .par_iter()
        .map(|d| match &d.channel {
            Some(ch) => {
                let start = Instant::now();
                let e = localize(ch, &cfg);
                (e, start.elapsed().as_secs_f64())
            }
            None => (Err(Error::NoPacket { stage: "decode" }), 0.0),
        })
        .collect();
    let t = r.iter().map(|x| x.1).sum();
    (r.into_iter().map(|x| x.0).collect(), t)
}

/// Localize already decoded tags and aggregate against ground truth.
pub fn report_from_decoded(
    decoded: &[DecodedTag],
    labels: Option<&[Vec<RoiClass>]>,
    cfg: &PipelineConfig,
) -> Result<(RunReport, f64)> {
    if let Some(l) = labels {
        let n = decoded.iter().map(|d| d.scene).max().map_or(0, |m| m + 1);
        if l.len() != n || decoded.iter().any(|d| d.tag >= l[d.scene].len()) {
            return arg("labels do not cover every tag");
        }
    }
    let (estimates, localize_s) = locate_all(decoded, &cfg.locator);
    let mut outcomes = Vec::with_capacity(decoded.len());
    for (d, e) in decoded.iter().zip(estimates) {
        let label = labels.map(|l| l[d.scene][d.tag]);
        let (estimate, failure) = match e {
            Ok(e) => (Some(e), None),
            Err(err) => (None, Some(d.failure.clone().unwrap_or_else(|| err.to_string()))),
        };
        outcomes.push(TagOutcome {
            scene: d.scene,
            tag: d.tag,
            epc: d.epc.clone(),
            truth_m: d.truth_m,
            error_m: estimate.as_ref().map(|e| distance(&e.position_m, &d.truth_m)),
            roi: estimate.as_ref().map(|e| classify_roi(e, &cfg.locator.prior)),
            estimate,
            label,
            failure,
        });
    }
    let errors: Vec<f64> = outcomes.iter().filter_map(|o| o.error_m).collect();
    let roi = match labels {
        Some(_) => {
            let classes: Vec<Option<RoiClass>> = outcomes.iter().map(|o| o.roi).collect();
            let labs: Vec<RoiClass> = outcomes.iter().map(|o| o.label.unwrap()).collect();
            Some(evaluate_roi(&classes, &labs)?)
        }
        None => None,
    };
    let report = RunReport {
        tags: outcomes.len(),
        located: errors.len(),
        failures: outcomes.len() - errors.len(),
        errors: ErrorStats::from_errors(&errors),
        roi,
        config_digest: config_digest(cfg)?,
        outcomes,
    };
    Ok((report, localize_s))
}

/// Simulate, decode and localize every tag; failures are recorded per tag.
pub fn run_batch(scenes: &[Scene], labels: Option<&[Vec<RoiClass>]>, cfg: &PipelineConfig) -> Result<BatchRun> {
    let (decoded, decode_s) = decode_corpus(scenes, cfg)?;
    let (report, localize_s) = report_from_decoded(&decoded, labels, cfg)?;
    let busy = decode_s + localize_s;
    let timing = RunTiming {
        packets: decoded.len(),
        decode_s,
        localize_s,
        throughput_pps: if busy > 0.0 { decoded.len() as f64 / busy } else { 0.0 },
    };
    Ok(BatchRun { report, timing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Carrier spans in Hz, kept contiguous from the lowest carrier.
    Bandwidth(Vec<f64>),
    /// Antenna counts, innermost elements first.
    Antennas(Vec<usize>),
    Algorithm,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bandwidth" => Ok(Self::Bandwidth(vec![50e6, 100e6, 150e6, 200e6])),
            "antennas" => Ok(Self::Antennas(vec![2, 4, 6, 8])),
            "algorithm" => Ok(Self::Algorithm),
            other => arg(format!("unknown sweep axis '{other}'")),
        }
    }
}

/// Carriers within `bandwidth_hz` of the lowest one.
pub fn bandwidth_subset(carriers_hz: &[f64], bandwidth_hz: f64) -> Vec<usize> {
    let lo = carriers_hz.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..carriers_hz.len()).filter(|&l| carriers_hz[l] - lo <= bandwidth_hz + 0.5e6).collect()
}

/// The `k` elements closest to the array centre, in ascending index order.
pub fn antenna_subset(geom: &ArrayGeometry, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > geom.num_antennas() {
        return arg(format!("cannot keep {k} of {} antennas", geom.num_antennas()));
    }
    let mut keep: Vec<usize> = geom.center_out_order().into_iter().take(k).collect();
    keep.sort_unstable();
    Ok(keep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: String,
    pub failures: usize,
    pub errors: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("setting,p50_m,p90_m,p99_m\n");
        let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.4}"));
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.setting, f(r.errors.p50_m), f(r.errors.p90_m), f(r.errors.p99_m)));
        }
        s
    }

    pub fn p99(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.errors.p99_m).collect()
    }
}

/// Localization error percentiles for each setting of one axis, on the
/// same decoded corpus.
pub fn ablation_sweep(decoded: &[DecodedTag], axis: &SweepAxis, locator: &LocatorConfig) -> Result<SweepTable> {
    let Some(first) = decoded.iter().find_map(|d| d.channel.as_ref()) else {
        return arg("no decoded channels to sweep");
    };
    let settings: Vec<(String, Vec<usize>, Vec<usize>, LocatorConfig)> = {
        let all_k: Vec<usize> = (0..first.num_antennas()).collect();
        let all_l: Vec<usize> = (0..first.num_carriers()).collect();
        match axis {
            SweepAxis::Bandwidth(bws) => bws
                .iter()
                .map(|b| {
                    let l = bandwidth_subset(&first.carriers_hz, *b);
                    (format!("{:.0}MHz", b / 1e6), all_k.clone(), l, locator.clone())
                })
                .collect(),
            SweepAxis::Antennas(ks) => ks
                .iter()
                .map(|k| Ok((format!("{k}ant"), antenna_subset(&first.geometry, *k)?, all_l.clone(), locator.clone())))
                .collect::<Result<_>>()?,
            SweepAxis::Algorithm => [Algorithm::Basic, Algorithm::Chord]
                .into_iter()
                .map(|a| {
                    let name = match a {
                        Algorithm::Basic => "basic",
                        Algorithm::Chord => "chord",
                    };
                    (name.to_string(), all_k.clone(), all_l.clone(), LocatorConfig { algorithm: a, ..locator.clone() })
                })
                .collect(),
        }
    };
    let axis_name = match axis {
        SweepAxis::Bandwidth(_) => "bandwidth",
        SweepAxis::Antennas(_) => "antennas",
        SweepAxis::Algorithm => "algorithm",
    };
    let mut rows = Vec::with_capacity(settings.len());
    for (name, ks, ls, cfg) in settings {
        let subset: Vec<DecodedTag> = decoded
            .iter()
            .map(|d| {
                let channel = d.channel.as_ref().map(|c| c.subset(&ks, &ls)).transpose()?;
                Ok(DecodedTag { channel, ..d.clone() })
            })
            .collect::<Result<_>>()?;
        let (est, _) = locate_all(&subset, &cfg);
        let errors: Vec<f64> = subset
            .iter()
            .zip(&est)
            .filter_map(|(d, e)| e.as_ref().ok().map(|e| distance(&e.position_m, &d.truth_m)))
            .collect();
        rows.push(SweepRow { setting: name, failures: subset.len() - errors.len(), errors: ErrorStats::from_errors(&errors) });
    }
    Ok(SweepTable { axis: axis_name.into(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CarrierPlan;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 0.5), Some(5.0));
        assert_eq!(percentile_nearest_rank(&v, 0.9), Some(9.0));
        assert_eq!(percentile_nearest_rank(&v, 0.99), Some(10.0));
        assert_eq!(percentile_nearest_rank(&[], 0.5), None);
        let s = ErrorStats::from_errors(&[3.0, 1.0, 2.0]);
        assert!(s.p50_m <= s.p90_m && s.p90_m <= s.p99_m);
    }

    #[test]
    fn roi_rates() {
        let labels = vec![RoiClass::Inside; 3].into_iter().chain(vec![RoiClass::Outside; 100]).collect::<Vec<_>>();
        let mut classes: Vec<Option<RoiClass>> = labels.iter().map(|l| Some(*l)).collect();
        let r = evaluate_roi(&classes, &labels).unwrap();
        assert_eq!((r.miss_rate, r.cross_rate), (0.0, 0.0));
        classes[10] = Some(RoiClass::Inside);
        classes[0] = None;
        let r = evaluate_roi(&classes, &labels).unwrap();
        assert!((r.cross_rate - 0.01).abs() < 1e-12);
        assert!((r.miss_rate - 1.0 / 3.0).abs() < 1e-12);
        assert!(evaluate_roi(&classes[1..], &labels).is_err());
    }

    #[test]
    fn subsets() {
        let p = CarrierPlan::paper_default();
        assert_eq!(bandwidth_subset(&p.carriers_hz, 50e6).len(), 5);
        assert_eq!(bandwidth_subset(&p.carriers_hz, 100e6).len(), 10);
        assert_eq!(bandwidth_subset(&p.carriers_hz, 200e6).len(), 16);
        let g = ArrayGeometry::paper_default();
        assert_eq!(antenna_subset(&g, 2).unwrap(), vec![3, 4]);
        assert_eq!(antenna_subset(&g, 8).unwrap(), (0..8).collect::<Vec<_>>());
        assert!(antenna_subset(&g, 9).is_err());
        assert!("range".parse::<SweepAxis>().is_err());
        assert_eq!("antennas".parse::<SweepAxis>().unwrap(), SweepAxis::Antennas(vec![2, 4, 6, 8]));
    }

    #[test]
    fn digest_is_stable() {
        let a = config_digest(&PipelineConfig::default()).unwrap();
        assert_eq!(a, config_digest(&PipelineConfig::default()).unwrap());
        let b = config_digest(&PipelineConfig { seed: 2, ..PipelineConfig::default() }).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(run_batch(&[], None, &PipelineConfig::default()).is_err());
    }
}
