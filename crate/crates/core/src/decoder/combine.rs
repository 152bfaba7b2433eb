use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::Range;

use crate::error::{arg, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MsnrResult {
    pub stream: Vec<Complex64>,
    /// Output sample is `w^H y`.
    pub weights: Vec<Complex64>,
    /// True when the noise covariance needed diagonal loading.
    pub loaded: bool,
}

fn covariance(rows: &[Vec<Complex64>], range: Range<usize>) -> DMatrix<Complex64> {
    let k = rows.len();
    let n = range.len().max(1) as f64;
    let mut r = DMatrix::<Complex64>::zeros(k, k);
    for t in range {
        for a in 0..k {
            let ya = rows[a][t];
            for b in a..k {
                r[(a, b)] += ya * rows[b][t].conj();
            }
        }
    }
    for a in 0..k {
        for b in a..k {
            r[(a, b)] /= n;
            r[(b, a)] = r[(a, b)].conj();
        }
    }
    r
}

/// Maximum-SNR beamformer across antennas for one carrier. The weight is
/// the dominant generalized eigenvector of the active-region covariance
/// against the noise covariance.
pub fn msnr_combine(rows: &[Vec<Complex64>], noise: Range<usize>, active: Range<usize>) -> Result<MsnrResult> {
    let k = rows.len();
    if k == 0 {
        return arg("no antenna streams");
    }
    let len = rows[0].len();
    if rows.iter().any(|r| r.len() != len) || noise.end > len || active.end > len {
        return arg("stream lengths or ranges inconsistent");
    }
    if noise.is_empty() || active.is_empty() {
        return arg("empty noise or active range");
    }
    if k == 1 {
        return Ok(MsnrResult { stream: rows[0].clone(), weights: vec![Complex64::new(1.0, 0.0)], loaded: false });
    }
    let mut rn = covariance(rows, noise);
    let ry = covariance(rows, active);
    let mut loaded = false;
    let chol = match rn.clone().cholesky() {
        Some(c) if rn.diagonal().iter().all(|d| d.re > 0.0) => c,
        _ => {
            loaded = true;
            let tr: f64 = rn.diagonal().iter().map(|d| d.re).sum::<f64>().max(1e-300);
            let load = 1e-3 * tr / k as f64;
            for i in 0..k {
                rn[(i, i)] += Complex64::new(load, 0.0);
            }
            match rn.clone().cholesky() {
                Some(c) => c,
                None => return arg("noise covariance is not positive definite"),
            }
        }
    };
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| crate::Error::Argument("singular factor".into()))?;
    let c = &linv * &ry * linv.adjoint();
    let c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = c.symmetric_eigen();
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let v: DVector<Complex64> = eig.eigenvectors.column(best).into_owned();
    let mut w = linv.adjoint() * v;
    let norm = w.norm();
    if norm > 0.0 {
        w /= Complex64::new(norm, 0.0);
    }
    let weights: Vec<Complex64> = w.iter().copied().collect();
    let stream = (0..len)
        .map(|t| weights.iter().zip(rows).map(|(wi, r)| wi.conj() * r[t]).sum())
        .collect();
    Ok(MsnrResult { stream, weights, loaded })
}

/// Maximum-ratio combination with weights `conj(g_l) / sigma_l^2`.
pub fn mrc_combine(streams: &[Vec<Complex64>], gains: &[Complex64], noise_var: &[f64]) -> Result<Vec<Complex64>> {
    if streams.is_empty() || streams.len() != gains.len() || gains.len() != noise_var.len() {
        return arg("stream, gain and noise counts differ");
    }
    let len = streams[0].len();
    if streams.iter().any(|s| s.len() != len) {
        return arg("streams differ in length");
    }
    if noise_var.iter().any(|v| !(*v > 0.0)) {
        return arg("noise variances must be positive");
    }
    if streams.len() == 1 {
        return Ok(streams[0].clone());
    }
    let w: Vec<Complex64> = gains.iter().zip(noise_var).map(|(g, v)| g.conj() / *v).collect();
    Ok((0..len).map(|t| w.iter().zip(streams).map(|(wi, s)| wi * s[t]).sum()).collect())
}
