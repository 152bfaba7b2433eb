use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{arg, Result};
use crate::locator::RoiClass;
use crate::model::{Path, Point3, Scene, SceneTag};

/// Random multi-tag multipath scenes in front of the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub scenes: usize,
    pub tags_per_scene: [usize; 2],
    pub x_range_m: [f64; 2],
    pub y_range_m: [f64; 2],
    pub z_m: f64,
    /// Inclusive bounds on reflectors per tag; `[0, 0]` gives single-path
    /// scenes.
    pub reflectors_per_tag: [usize; 2],
    /// Reflectors are drawn uniformly over a disc of this radius about the
    /// tag.
    pub reflector_radius_m: f64,
    pub gain_range: [f64; 2],
    pub epc_bits: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            scenes: 200,
            tags_per_scene: [1, 5],
            x_range_m: [-1.4, 1.4],
            y_range_m: [1.0, 6.0],
            z_m: 0.0,
            reflectors_per_tag: [1, 2],
            reflector_radius_m: 2.0,
            gain_range: [0.2, 0.8],
            epc_bits: 96,
            seed: 2024,
        }
    }
}

impl CorpusConfig {
    pub fn single_path(scenes: usize, seed: u64) -> Self {
        Self { scenes, reflectors_per_tag: [0, 0], seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if self.scenes == 0 {
            return arg("corpus needs at least one scene");
        }
        if self.tags_per_scene[0] == 0 || self.tags_per_scene[0] > self.tags_per_scene[1] {
            return arg("tags per scene must satisfy 1 <= min <= max");
        }
        if self.reflectors_per_tag[0] > self.reflectors_per_tag[1] {
            return arg("reflector bounds are reversed");
        }
        if !ordered(self.x_range_m) || !ordered(self.y_range_m) || !ordered(self.gain_range) {
            return arg("ranges must be finite and ordered");
        }
        if !(self.gain_range[0] > 0.0 && self.gain_range[1] < 1.0) {
            return arg("reflector gains must lie in (0, 1)");
        }
        if !(self.reflector_radius_m > 0.0) || self.epc_bits == 0 || self.epc_bits % 16 != 0 {
            return arg("reflector radius must be positive and EPC a whole number of words");
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn random_tag(rng: &mut ChaCha8Rng, position_m: Point3, cfg: &CorpusConfig) -> SceneTag {
    let epc: Vec<bool> = (0..cfg.epc_bits).map(|_| rng.random()).collect();
    let mut paths = vec![Path::direct(1.0)];
    let n = rng.random_range(cfg.reflectors_per_tag[0]..=cfg.reflectors_per_tag[1]);
    for _ in 0..n {
        let r = cfg.reflector_radius_m * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..TAU);
        let pos = [position_m[0] + r * a.cos(), position_m[1] + r * a.sin(), position_m[2]];
        paths.push(Path::reflector(pos, uniform(rng, cfg.gain_range)));
    }
    SceneTag { epc, position_m, paths }
}

pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Vec<Scene>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.scenes)
        .map(|s| {
            let n = rng.random_range(cfg.tags_per_scene[0]..=cfg.tags_per_scene[1]);
            let tags = (0..n)
                .map(|_| {
                    let pos = [uniform(&mut rng, cfg.x_range_m), uniform(&mut rng, cfg.y_range_m), cfg.z_m];
                    random_tag(&mut rng, pos, cfg)
                })
                .collect();
            Scene { tags, ambient_noise_dbm_per_hz: -174.0, seed: cfg.seed.wrapping_add(s as u64) }
        })
        .collect())
}

/// Portal scenario: tags of interest close to the array, others beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub scenes: usize,
    pub inside_per_scene: usize,
    pub outside_per_scene: usize,
    /// Horizontal distance from the array origin, metres.
    pub inside_range_m: [f64; 2],
    pub outside_range_m: [f64; 2],
    /// Bearing limit either side of broadside, degrees.
    pub max_bearing_deg: f64,
    /// Range band the reader treats as its region of interest.
    pub roi_range_m: [f64; 2],
    pub multipath: CorpusConfig,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            scenes: 50,
            inside_per_scene: 2,
            outside_per_scene: 2,
            inside_range_m: [0.5, 2.0],
            outside_range_m: [3.0, 6.0],
            max_bearing_deg: 45.0,
            roi_range_m: [0.25, 2.5],
            multipath: CorpusConfig { seed: 77, ..CorpusConfig::default() },
        }
    }
}

/// Scenes plus per-tag inside/outside labels, in scene tag order.
pub fn gate_corpus(cfg: &GateConfig) -> Result<(Vec<Scene>, Vec<Vec<RoiClass>>)> {
    cfg.multipath.validate()?;
    if cfg.scenes == 0 || cfg.inside_per_scene + cfg.outside_per_scene == 0 {
        return arg("gate corpus needs scenes and tags");
    }
    let [lo, hi] = cfg.roi_range_m;
    if !(lo <= cfg.inside_range_m[0] && cfg.inside_range_m[1] <= hi && hi < cfg.outside_range_m[0]) {
        return arg("inside range must lie in the ROI band and the outside range beyond it");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.multipath.seed);
    let b = cfg.max_bearing_deg.to_radians();
    let mut scenes = Vec::with_capacity(cfg.scenes);
    let mut labels = Vec::with_capacity(cfg.scenes);
    for s in 0..cfg.scenes {
        let mut tags = Vec::new();
        let mut lab = Vec::new();
        for (count, range, class) in [
            (cfg.inside_per_scene, cfg.inside_range_m, RoiClass::Inside),
            (cfg.outside_per_scene, cfg.outside_range_m, RoiClass::Outside),
        ] {
            for _ in 0..count {
                let r = uniform(&mut rng, range);
                let a = rng.random_range(-b..=b);
                let pos = [r * a.sin(), r * a.cos(), cfg.multipath.z_m];
                tags.push(random_tag(&mut rng, pos, &cfg.multipath));
                lab.push(class);
            }
        }
        scenes.push(Scene { tags, ambient_noise_dbm_per_hz: -174.0, seed: cfg.multipath.seed.wrapping_add(s as u64) });
        labels.push(lab);
    }
    Ok((scenes, labels))
}
