use std::f64::consts::PI;

use super::su2::{cplx, Mat2c};
use crate::error::{Error, Result};

/// Storage slot of signed frequency `k` in a length-`n` wrap-around array.
pub fn wrap_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Signed frequency stored at slot `p` of a length-`n` array.
pub fn signed_frequency(p: usize, n: usize) -> i64 {
    if p <= n / 2 {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

/// Midpoint angles (2j+1)π/Ñ, j = 0..Ñ−1.
pub fn midpoint_grid(n_tilde: usize) -> Vec<f64> {
    (0..n_tilde).map(|j| (2 * j + 1) as f64 * PI / n_tilde as f64).collect()
}

/// Inverse transform of samples taken on the full-circle midpoint grid.
///
/// Returns all Ñ coefficients in wrap-around order with the half-cell phase
/// already stripped, so `out[wrap_index(k, Ñ)]` is C_k in
/// W(θ) = Σ_k C_k e^{ikθ}.
pub fn midpoint_idft(samples: &[Mat2c], degree: usize) -> Result<Vec<Mat2c>> {
    let n_tilde = samples.len();
    if n_tilde == 0 || !n_tilde.is_multiple_of(4) {
        return Err(Error::GridMismatch(format!(
            "full-circle sample count {n_tilde} is not a positive multiple of 4"
        )));
    }
    let n = n_tilde / 4;
    if n <= degree {
        return Err(Error::AliasingRisk { samples: n, degree });
    }
    let twiddle: Vec<_> = (0..n_tilde)
        .map(|m| cplx(0.0, -2.0 * PI * m as f64 / n_tilde as f64).exp())
        .collect();
    let scale = 1.0 / n_tilde as f64;
    let out = (0..n_tilde)
        .map(|p| {
            let mut acc = Mat2c::zeros();
            for (j, a) in samples.iter().enumerate() {
                acc += a * twiddle[(j * p) % n_tilde];
            }
            let k = signed_frequency(p, n_tilde);
            let phase = cplx(0.0, -(k as f64) * PI / n_tilde as f64).exp();
            acc * (phase * scale)
        })
        .collect();
    Ok(out)
}

/// Σ_{k=−L}^{L} C_k e^{ikθ} for coefficients stored symmetrically (index k+L).
pub fn eval_symmetric(coeffs: &[Mat2c], theta: f64) -> Mat2c {
    let degree = (coeffs.len() - 1) / 2;
    coeffs.iter().enumerate().fold(Mat2c::zeros(), |acc, (i, c)| {
        let k = i as f64 - degree as f64;
        acc + c * cplx(0.0, k * theta).exp()
    })
}
