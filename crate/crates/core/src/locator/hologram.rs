use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::grid::{GridSpec, Heatmap};
use crate::error::{arg, Result};
use crate::model::{distance, ChannelMatrix, SPEED_OF_LIGHT};

/// Similarity between a measured and a theoretical propagation phase.
pub trait Kernel: Sync {
    fn similarity(&self, measured_rad: f64, theoretical_rad: f64) -> Complex64;
}

/// `exp(-j (phi - theta))`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpKernel;

impl Kernel for ExpKernel {
    fn similarity(&self, measured_rad: f64, theoretical_rad: f64) -> Complex64 {
        let (s, c) = (theoretical_rad - measured_rad).sin_cos();
        Complex64::new(c, s)
    }
}

/// Measured propagation phase of entry (k, l): the negated channel angle.
pub fn measured_phase(ch: &ChannelMatrix, k: usize, l: usize) -> f64 {
    -ch.h[k][l].arg()
}

/// Summation layer: `P(g) = |sum_l sum_k kernel(phi_kl, theta(g, k, l))|`
/// over valid entries of `ch`.
pub fn hologram_with<K: Kernel>(ch: &ChannelMatrix, grid: &GridSpec, kernel: &K) -> Result<Heatmap> {
    grid.validate()?;
    if grid.is_empty() {
        return arg("empty grid");
    }
    let (nk, nl) = (ch.num_antennas(), ch.num_carriers());
    if nk == 0 || nl == 0 {
        return arg("channel matrix is empty");
    }
    let geom = &ch.geometry;
    let phases: Vec<Vec<f64>> = (0..nk).map(|k| (0..nl).map(|l| measured_phase(ch, k, l)).collect()).collect();
    let wavenumbers: Vec<f64> = ch.carriers_hz.iter().map(|f| 2.0 * PI * f / SPEED_OF_LIGHT).collect();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let g = grid.center(idx);
            let tx = distance(&geom.tx_wideband_position_m, &g);
            let paths: Vec<f64> = geom.rx_positions_m.iter().map(|rx| tx + distance(&g, rx)).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..nl {
                for k in 0..nk {
                    if ch.valid[k][l] {
                        acc += kernel.similarity(phases[k][l], wavenumbers[l] * paths[k]);
                    }
                }
            }
            acc.norm()
        })
        .collect();
    Heatmap::new(grid.clone(), values)
}

/// Carriers as `f0 + m * step` with small integer `m`, if they fit.
fn carrier_lattice(carriers_hz: &[f64]) -> Option<(f64, f64, Vec<usize>)> {
    let f0 = carriers_hz.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut offsets: Vec<f64> = carriers_hz.iter().map(|f| f - f0).filter(|d| *d > 0.0).collect();
    if offsets.is_empty() {
        return Some((f0, 0.0, vec![0; carriers_hz.len()]));
    }
    offsets.sort_by(f64::total_cmp);
    let step = offsets[0];
    let m: Vec<usize> = carriers_hz.iter().map(|f| ((f - f0) / step).round() as usize).collect();
    let fits = carriers_hz.iter().zip(&m).all(|(f, m)| (f0 + *m as f64 * step - f).abs() <= 1e-6 * step);
    (fits && m.iter().all(|m| *m <= 64)).then_some((f0, step, m))
}

/// Exponential-kernel hologram. Terms are `exp(j theta) * exp(-j phi)`;
/// on a carrier lattice `exp(j theta)` is stepped by recurrence.
fn exp_hologram(ch: &ChannelMatrix, grid: &GridSpec) -> Result<Heatmap> {
    grid.validate()?;
    if grid.is_empty() {
        return arg("empty grid");
    }
    let (nk, nl) = (ch.num_antennas(), ch.num_carriers());
    if nk == 0 || nl == 0 {
        return arg("channel matrix is empty");
    }
    let zero = Complex64::new(0.0, 0.0);
    let coef: Vec<Vec<Complex64>> = (0..nk)
        .map(|k| {
            (0..nl)
                .map(|l| if ch.valid[k][l] { Complex64::from_polar(1.0, -measured_phase(ch, k, l)) } else { zero })
                .collect()
        })
        .collect();
    let lattice = carrier_lattice(&ch.carriers_hz);
    let span = lattice.as_ref().map_or(0, |(_, _, m)| m.iter().copied().max().unwrap_or(0) + 1);
    let mut by_m = vec![vec![zero; span]; nk];
    if let Some((_, _, m)) = &lattice {
        for k in 0..nk {
            for l in 0..nl {
                by_m[k][m[l]] += coef[k][l];
            }
        }
    }
    let geom = &ch.geometry;
    let scale = 2.0 * PI / SPEED_OF_LIGHT;
    let wavenumbers: Vec<f64> = ch.carriers_hz.iter().map(|f| scale * f).collect();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let g = grid.center(idx);
            let tx = distance(&geom.tx_wideband_position_m, &g);
            let mut acc = zero;
            for k in 0..nk {
                let path = tx + distance(&g, &geom.rx_positions_m[k]);
                match &lattice {
                    Some((f0, step, _)) => {
                        let mut e = Complex64::from_polar(1.0, scale * f0 * path);
                        let rot = Complex64::from_polar(1.0, scale * step * path);
                        for c in &by_m[k] {
                            acc += e * c;
                            e *= rot;
                        }
                    }
                    None => {
                        for l in 0..nl {
                            acc += Complex64::from_polar(1.0, wavenumbers[l] * path) * coef[k][l];
                        }
                    }
                }
            }
            acc.norm()
        })
        .collect();
    Heatmap::new(grid.clone(), values)
}

/// Hologram with the exponential kernel.
pub fn basic_hologram(ch: &ChannelMatrix, grid: &GridSpec) -> Result<Heatmap> {
    exp_hologram(ch, grid)
}

/// Summation layer over an enhanced channel; same form as the basic
/// hologram.
pub fn summation_layer(enhanced: &ChannelMatrix, grid: &GridSpec) -> Result<Heatmap> {
    exp_hologram(enhanced, grid)
}
