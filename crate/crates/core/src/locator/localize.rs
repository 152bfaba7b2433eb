use serde::{Deserialize, Serialize};

use super::grid::{peak_find_2d, GridSpec, Heatmap};
use super::hologram::{basic_hologram, summation_layer};
use super::tof::{
    antenna_row, combined_tof_profile, enhance_direct_path, identify_direct_path_supported, CleanConfig, ThresholdScale,
    TofAxis, TofDeconvolution, TofWindow,
};
use crate::error::{arg, Result};
use crate::model::{distance_resolution, ChannelMatrix, Point3};
use num_complex::Complex64;

/// Prior knowledge of where tags of interest may be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorROI {
    /// Direct-path scan bounds `[a, b]`, one-way metres.
    pub range_m: [f64; 2],
    /// Scanning area in the x/y plane; falls back to the range band about
    /// the array origin when absent.
    pub polygon: Option<Vec<[f64; 2]>>,
    pub peak_threshold: f64,
    pub threshold_scale: ThresholdScale,
}

impl Default for PriorROI {
    fn default() -> Self {
        Self { range_m: [0.5, 7.0], polygon: None, peak_threshold: 0.3, threshold_scale: ThresholdScale::Global }
    }
}

impl PriorROI {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.range_m;
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return arg("prior range must satisfy 0 <= a < b");
        }
        if !(self.peak_threshold > 0.0 && self.peak_threshold < 1.0) {
            return arg("peak threshold must lie in (0, 1)");
        }
        if let Some(poly) = &self.polygon {
            if poly.len() < 3 || poly.iter().flatten().any(|v| !v.is_finite()) {
                return arg("polygon needs at least three finite vertices");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnhancementPolicy {
    /// Enhance only when the basic hologram has two or more peaks.
    #[default]
    Conditional,
    Always,
}

/// Which direct-path distance each antenna is enhanced about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectPathMode {
    /// The combined estimate for every antenna.
    #[default]
    Shared,
    /// Each antenna's own profile maximum within half a resolution cell of
    /// the combined estimate.
    PerAntenna,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Basic hologram argmax.
    Basic,
    /// Basic hologram plus direct-path identification and enhancement.
    #[default]
    Chord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocatorConfig {
    pub grid: GridSpec,
    pub prior: PriorROI,
    pub policy: EnhancementPolicy,
    pub algorithm: Algorithm,
    /// Relative threshold of the 2-D peak count that drives the policy.
    pub peak_threshold_2d: f64,
    pub tof_axis: TofAxis,
    /// Taper of the profile used for direct-path identification.
    pub tof_window: TofWindow,
    pub tof_deconvolution: TofDeconvolution,
    pub direct_path_mode: DirectPathMode,
    pub keep_heatmap: bool,
}

impl Default for LocatorConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            prior: PriorROI::default(),
            policy: EnhancementPolicy::Conditional,
            algorithm: Algorithm::Chord,
            peak_threshold_2d: 0.4,
            tof_axis: TofAxis::default(),
            tof_window: TofWindow::Rectangular,
            tof_deconvolution: TofDeconvolution::Clean(CleanConfig::default()),
            direct_path_mode: DirectPathMode::Shared,
            keep_heatmap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationEstimate {
    pub position_m: Point3,
    pub likelihood: f64,
    pub heatmap: Option<Heatmap>,
    pub d0_rough_m: Option<f64>,
    pub enhancement_applied: bool,
    /// Direct-path identification found nothing; basic result returned.
    pub fallback: bool,
    /// Peaks of the basic hologram above the 2-D threshold.
    pub peak_count: usize,
    pub cell_m: f64,
}

fn estimate_from(map: Heatmap, keep: bool) -> LocationEstimate {
    LocationEstimate {
        position_m: map.argmax_position(),
        likelihood: map.max(),
        cell_m: map.grid.cell_m,
        heatmap: None,
        d0_rough_m: None,
        enhancement_applied: false,
        fallback: false,
        peak_count: 0,
    }
    .with_map(map, keep)
}

impl LocationEstimate {
    fn with_map(mut self, map: Heatmap, keep: bool) -> Self {
        if keep {
            self.heatmap = Some(map);
        }
        self
    }
}

/// Channel with each antenna's phases replaced by their direct-path
/// enhanced version about `d0_m[k]` (None leaves the row unchanged).
pub fn enhance_channel(ch: &ChannelMatrix, d0_m: &[Option<f64>]) -> Result<ChannelMatrix> {
    if d0_m.len() != ch.num_antennas() {
        return arg("one direct-path distance per antenna is required");
    }
    let mut out = ch.clone();
    for (k, d0) in d0_m.iter().enumerate() {
        let Some(d0) = d0 else { continue };
        let (phases, carriers) = antenna_row(ch, k);
        let enhanced = enhance_direct_path(&phases, &carriers, *d0)?;
        let valid: Vec<usize> = (0..ch.num_carriers()).filter(|&l| ch.valid[k][l]).collect();
        for (l, phi) in valid.into_iter().zip(enhanced) {
            out.h[k][l] = Complex64::from_polar(ch.h[k][l].norm(), -phi);
        }
    }
    Ok(out)
}

fn valid_bandwidth(ch: &ChannelMatrix) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..ch.num_antennas() {
        for l in 0..ch.num_carriers() {
            if ch.valid[k][l] {
                lo = lo.min(ch.carriers_hz[l]);
                hi = hi.max(ch.carriers_hz[l]);
            }
        }
    }
    hi - lo
}

/// Full localization pipeline for one tag.
pub fn localize(ch: &ChannelMatrix, cfg: &LocatorConfig) -> Result<LocationEstimate> {
    ch.validate()?;
    cfg.prior.validate()?;
    if !(cfg.peak_threshold_2d > 0.0 && cfg.peak_threshold_2d <= 1.0) {
        return arg("2-D peak threshold must lie in (0, 1]");
    }
    let basic = basic_hologram(ch, &cfg.grid)?;
    if cfg.algorithm == Algorithm::Basic {
        return Ok(estimate_from(basic, cfg.keep_heatmap));
    }
    let peak_count = peak_find_2d(&basic, cfg.peak_threshold_2d).len();
    if cfg.policy == EnhancementPolicy::Conditional && peak_count < 2 {
        let mut e = estimate_from(basic, cfg.keep_heatmap);
        e.peak_count = peak_count;
        return Ok(e);
    }
    let tof = combined_tof_profile(ch, &cfg.tof_axis, cfg.tof_window, &cfg.tof_deconvolution)?;
    let prior = &cfg.prior;
    let Some(d0) = identify_direct_path_supported(
        &tof.combined,
        tof.deconvolved.as_ref(),
        prior.range_m,
        prior.peak_threshold,
        prior.threshold_scale,
    )?
    else {
        let mut e = estimate_from(basic, cfg.keep_heatmap);
        e.peak_count = peak_count;
        e.fallback = true;
        return Ok(e);
    };
    let half = 0.5 * distance_resolution(valid_bandwidth(ch))?;
    let per_antenna: Vec<Option<f64>> = tof
        .per_antenna
        .iter()
        .map(|p| {
            p.as_ref().map(|p| {
                if cfg.direct_path_mode == DirectPathMode::Shared {
                    return d0;
                }
                let lo = p.nearest_index(d0 - half);
                let hi = p.nearest_index(d0 + half);
                let mut best = lo;
                for i in lo..=hi {
                    if p.magnitude[i] > p.magnitude[best] {
                        best = i;
                    }
                }
                p.distances_m[best]
            })
        })
        .collect();
    let enhanced = enhance_channel(ch, &per_antenna)?;
    let map = summation_layer(&enhanced, &cfg.grid)?;
    let mut e = estimate_from(map, cfg.keep_heatmap);
    e.peak_count = peak_count;
    e.d0_rough_m = Some(d0);
    e.enhancement_applied = true;
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiClass {
    Inside,
    Outside,
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Inside/outside decision for a located tag. Any estimate whose grid cell
/// touches the boundary counts as inside.
pub fn classify_roi(estimate: &LocationEstimate, prior: &PriorROI) -> RoiClass {
    let p = [estimate.position_m[0], estimate.position_m[1]];
    let tol = estimate.cell_m.max(0.0) * std::f64::consts::FRAC_1_SQRT_2;
    let inside = match &prior.polygon {
        Some(poly) if poly.len() >= 3 => {
            point_in_polygon(p, poly)
                || (0..poly.len()).any(|i| segment_distance(p, poly[i], poly[(i + 1) % poly.len()]) <= tol + 1e-12)
        }
        _ => {
            let r = p[0].hypot(p[1]);
            r >= prior.range_m[0] - tol - 1e-12 && r <= prior.range_m[1] + tol + 1e-12
        }
    };
    if inside {
        RoiClass::Inside
    } else {
        RoiClass::Outside
    }
}
