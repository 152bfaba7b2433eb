use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

pub type Point3 = [f64; 3];

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Receive array plus transmitter placement. The array lies on the x axis,
/// boresight is +y and z is height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rx_positions_m: Vec<Point3>,
    pub tx_wideband_position_m: Point3,
    pub tx_ism_position_m: Point3,
}

impl ArrayGeometry {
    /// 1x8 line: 21 cm element spacing, 31.5 cm gap at the centre, wideband
    /// Tx 0.4 m below the bisector.
    pub fn paper_default() -> Self {
        let spacing = 0.21;
        let half_gap = 0.315 / 2.0;
        let mut xs: Vec<f64> = (0..4)
            .map(|i| -(half_gap + spacing * (3 - i) as f64))
            .collect();
        xs.extend((0..4).map(|i| half_gap + spacing * i as f64));
        Self {
            rx_positions_m: xs.into_iter().map(|x| [x, 0.0, 0.0]).collect(),
            tx_wideband_position_m: [0.0, 0.0, -0.4],
            tx_ism_position_m: [-0.2, 0.0, -0.4],
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.rx_positions_m.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rx_positions_m.is_empty() {
            return arg("geometry needs at least one rx antenna");
        }
        let all = self
            .rx_positions_m
            .iter()
            .chain([&self.tx_wideband_position_m, &self.tx_ism_position_m]);
        for p in all {
            if p.iter().any(|v| !v.is_finite()) {
                return arg("non-finite coordinate in geometry");
            }
        }
        Ok(())
    }

    /// Largest distance between two receive elements.
    pub fn aperture_m(&self) -> f64 {
        let mut best = 0.0f64;
        for a in &self.rx_positions_m {
            for b in &self.rx_positions_m {
                best = best.max(distance(a, b));
            }
        }
        best
    }

    pub fn subset(&self, antennas: &[usize]) -> Result<Self> {
        let mut rx = Vec::with_capacity(antennas.len());
        for &k in antennas {
            match self.rx_positions_m.get(k) {
                Some(p) => rx.push(*p),
                None => return arg(format!("antenna {k} out of range")),
            }
        }
        let g = Self {
            rx_positions_m: rx,
            ..self.clone()
        };
        g.validate()?;
        Ok(g)
    }

    /// Antenna indices ordered from the array centre outwards, pairing the
    /// two elements at equal distance from the bisector.
    pub fn center_out_order(&self) -> Vec<usize> {
        let cx = self.rx_positions_m.iter().map(|p| p[0]).sum::<f64>()
            / self.rx_positions_m.len() as f64;
        let mut idx: Vec<usize> = (0..self.rx_positions_m.len()).collect();
        idx.sort_by(|&a, &b| {
            let da = (self.rx_positions_m[a][0] - cx).abs();
            let db = (self.rx_positions_m[b][0] - cx).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_line_layout() {
        let g = ArrayGeometry::paper_default();
        assert_eq!(g.num_antennas(), 8);
        let xs: Vec<f64> = g.rx_positions_m.iter().map(|p| p[0]).collect();
        for w in xs.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!((xs[4] - xs[3] - 0.315).abs() < 1e-12);
        assert!((xs[1] - xs[0] - 0.21).abs() < 1e-12);
        assert!((xs[7] - xs[6] - 0.21).abs() < 1e-12);
        assert!((xs[0] + xs[7]).abs() < 1e-12);
        assert_eq!(g.tx_wideband_position_m, [0.0, 0.0, -0.4]);
        assert!((g.aperture_m() - (0.315 + 6.0 * 0.21)).abs() < 1e-12);
    }

    #[test]
    fn center_out_pairs() {
        let g = ArrayGeometry::paper_default();
        let o = g.center_out_order();
        assert_eq!(&o[..2], &[3, 4]);
        assert_eq!(&o[6..], &[0, 7]);
    }

    #[test]
    fn rejects_empty_and_nan() {
        let mut g = ArrayGeometry::paper_default();
        g.rx_positions_m[2][1] = f64::NAN;
        assert!(g.validate().is_err());
        g.rx_positions_m.clear();
        assert!(g.validate().is_err());
    }
}
