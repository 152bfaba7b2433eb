use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::model::Point3;

/// Planar search grid at fixed height. Cell centres sit on the lattice
/// `x_min + i * cell_m`, `y_min + j * cell_m`, endpoints included; cells are
/// indexed row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub cell_m: f64,
    pub z_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { x_min_m: -1.6, x_max_m: 1.6, y_min_m: 0.5, y_max_m: 6.5, cell_m: 0.05, z_m: 0.0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min_m, self.x_max_m, self.y_min_m, self.y_max_m, self.cell_m, self.z_m]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.cell_m > 0.0) {
            return arg("grid cell size must be positive and extents finite");
        }
        if !(self.x_max_m >= self.x_min_m && self.y_max_m >= self.y_min_m) {
            return arg("grid extents are degenerate");
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        ((self.x_max_m - self.x_min_m) / self.cell_m + 1e-9).floor() as usize + 1
    }

    pub fn ny(&self) -> usize {
        ((self.y_max_m - self.y_min_m) / self.cell_m + 1e-9).floor() as usize + 1
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, idx: usize) -> Point3 {
        let nx = self.nx();
        let (i, j) = (idx % nx, idx / nx);
        [self.x_min_m + i as f64 * self.cell_m, self.y_min_m + j as f64 * self.cell_m, self.z_m]
    }

    /// Half the cell diagonal.
    pub fn half_diagonal(&self) -> f64 {
        self.cell_m * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Same extents at `cell_m / factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self { cell_m: self.cell_m / factor.max(1) as f64, ..self.clone() }
    }
}

/// Likelihood over a grid with its maximizing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// First row-major index attaining the maximum.
    pub argmax: usize,
}

impl Heatmap {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != grid.len() {
            return arg("heatmap size does not match the grid");
        }
        let mut argmax = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[argmax] {
                argmax = i;
            }
        }
        Ok(Self { grid, values, argmax })
    }

    pub fn max(&self) -> f64 {
        self.values[self.argmax]
    }

    pub fn argmax_position(&self) -> Point3 {
        self.grid.center(self.argmax)
    }

    /// Dense little-endian f32 grid plus a JSON header at `path.json`.
    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        let bytes: Vec<u8> = self.values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect();
        std::fs::write(path, bytes)?;
        let header = serde_json::json!({
            "format": "f32le",
            "nx": self.grid.nx(),
            "ny": self.grid.ny(),
            "row_major": true,
            "grid": self.grid,
            "argmax": self.argmax,
        });
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(side, serde_json::to_vec_pretty(&header)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
}

/// Local maxima over 8-neighbourhoods at or above `threshold` times the
/// global maximum, strongest first. Plateaus report their first cell.
pub fn peak_find_2d(map: &Heatmap, threshold: f64) -> Vec<Peak> {
    let (nx, ny) = (map.grid.nx(), map.grid.ny());
    let v = &map.values;
    let floor = threshold * map.max();
    let mut peaks = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let idx = j * nx + i;
            let x = v[idx];
            if x < floor {
                continue;
            }
            let mut is_peak = true;
            'n: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    let n = jj as usize * nx + ii as usize;
                    if v[n] > x || (v[n] == x && n < idx) {
                        is_peak = false;
                        break 'n;
                    }
                }
            }
            if is_peak {
                peaks.push(Peak { index: idx, value: x });
            }
        }
    }
    peaks.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bumps(centres: &[(f64, f64, f64)]) -> Heatmap {
        let grid = GridSpec { x_min_m: -1.0, x_max_m: 1.0, y_min_m: 0.0, y_max_m: 2.0, cell_m: 0.05, z_m: 0.0 };
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.center(i);
                centres
                    .iter()
                    .map(|(x, y, a)| a * (-((p[0] - x).powi(2) + (p[1] - y).powi(2)) / 0.02).exp())
                    .sum()
            })
            .collect();
        Heatmap::new(grid, values).unwrap()
    }

    #[test]
    fn grid_counts_and_centres() {
        let g = GridSpec::default();
        assert_eq!((g.nx(), g.ny()), (65, 121));
        let c = g.center(g.nx() + 32);
        assert!((c[0] - 0.0).abs() < 1e-12 && (c[1] - 0.55).abs() < 1e-12);
        assert!(GridSpec { cell_m: 0.0, ..g.clone() }.validate().is_err());
        assert!(GridSpec { x_max_m: -2.0, ..g }.validate().is_err());
    }

    #[test]
    fn single_bump_has_one_peak_at_centre() {
        let m = bumps(&[(0.2, 1.0, 1.0)]);
        let p = peak_find_2d(&m, 0.1);
        assert_eq!(p.len(), 1);
        let c = m.grid.center(p[0].index);
        assert!((c[0] - 0.2).abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_bumps_sorted() {
        let m = bumps(&[(-0.5, 1.0, 0.9), (0.5, 1.0, 1.0)]);
        let p = peak_find_2d(&m, 0.5);
        assert_eq!(p.len(), 2);
        assert!(p[0].value > p[1].value);
        assert!(m.grid.center(p[0].index)[0] > 0.0);
    }

    #[test]
    fn plateau_reports_first_cell() {
        let grid = GridSpec { x_min_m: 0.0, x_max_m: 0.2, y_min_m: 0.0, y_max_m: 0.2, cell_m: 0.1, z_m: 0.0 };
        let m = Heatmap::new(grid, vec![1.0; 9]).unwrap();
        assert_eq!(m.argmax, 0);
        let p = peak_find_2d(&m, 0.5);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].index, 0);
    }
}
