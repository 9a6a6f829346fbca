//! Fisher information of the surrogate model under Gaussian entry noise,
//! its Toeplitz structure for constant phases, and the derived bounds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{cplx, pauli_z, Mat2c};
use crate::qsp::qsp_factor;

pub const DFI_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct FiMatrix {
    pub m: DMatrix<f64>,
    pub shots: f64,
    pub samples: usize,
    /// Largest θ in the sample grid.
    pub nu: f64,
}

impl FiMatrix {
    pub fn degree(&self) -> usize {
        self.m.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// ∂W/∂ψ_j for every j at one θ, using prefix and suffix products.
fn phase_derivatives(theta: f64, psis: &[f64]) -> Vec<Mat2c> {
    let l = psis.len();
    let factors: Vec<Mat2c> = psis.iter().map(|&p| qsp_factor(theta, p)).collect();
    // right[j] = V_j ⋯ V_1 (product of the first j factors), left[j] = V_L ⋯ V_{j+1}.
    let mut right = vec![Mat2c::identity(); l + 1];
    for j in 0..l {
        right[j + 1] = factors[j] * right[j];
    }
    let mut left = vec![Mat2c::identity(); l + 1];
    for j in (0..l).rev() {
        left[j] = left[j + 1] * factors[j];
    }
    let z = pauli_z();
    let half_i = cplx(0.0, -0.5);
    (0..l)
        .map(|j| {
            let v = factors[j];
            let dv = (z * v - v * z) * half_i;
            left[j + 1] * dv * right[j]
        })
        .collect()
}

/// F_ij = M Σ_θ Re⟨0|∂_i W ∂_j W†|0⟩ with analytic derivatives.
pub fn fim_numeric(psis: &[f64], thetas: &[f64], shots: f64) -> FiMatrix {
    let l = psis.len();
    let m = thetas
        .par_iter()
        .map(|&theta| {
            let d = phase_derivatives(theta, psis);
            DMatrix::from_fn(l, l, |i, j| {
                (d[i][(0, 0)] * d[j][(0, 0)].conj() + d[i][(0, 1)] * d[j][(0, 1)].conj()).re
            })
        })
        .reduce(|| DMatrix::zeros(l, l), |a, b| a + b);
    FiMatrix { m: m * shots, shots, samples: thetas.len(), nu: thetas.iter().copied().fold(0.0, f64::max) }
}

/// The equidistant grid θ_n = νn/N, n = 1..N.
pub fn equidistant_grid(n: usize, nu: f64) -> Vec<f64> {
    (1..=n).map(|k| nu * k as f64 / n as f64).collect()
}

/// Midpoint grid (2n+1)ν/(2N), n = 0..N−1.
pub fn midpoint_grid_to(n: usize, nu: f64) -> Vec<f64> {
    (0..n).map(|k| (2 * k + 1) as f64 * nu / (2 * n) as f64).collect()
}

/// Σ_n cos(2dθ_n) over the equidistant grid.
pub fn cosine_kernel(d: i64, n: usize, nu: f64) -> f64 {
    let d = d.unsigned_abs() as f64;
    let nf = n as f64;
    let denom = (d * nu / nf).sin();
    if denom.abs() < 1e-8 {
        return equidistant_grid(n, nu).iter().map(|t| (2.0 * d * t).cos()).sum();
    }
    ((nf + 1.0) * d * nu / nf).cos() * (d * nu).sin() / denom
}

/// First row (s_0, …, s_{L−1}) of the constant-phase FIM.
pub fn toeplitz_row(l: usize, n: usize, nu: f64, shots: f64) -> Vec<f64> {
    (0..l as i64)
        .map(|d| {
            0.25 * shots * (2.0 * cosine_kernel(d, n, nu) - cosine_kernel(d + 1, n, nu) - cosine_kernel(d - 1, n, nu))
        })
        .collect()
}

fn toeplitz(row: &[f64]) -> DMatrix<f64> {
    let l = row.len();
    DMatrix::from_fn(l, l, |i, j| row[i.abs_diff(j)])
}

pub fn fim_toeplitz_constant(l: usize, n: usize, nu: f64, shots: f64) -> FiMatrix {
    FiMatrix { m: toeplitz(&toeplitz_row(l, n, nu, shots)), shots, samples: n, nu }
}

/// Closed forms at ν = rπ/2 on the midpoint grid: tridiagonal FIM with
/// MN/2 on the diagonal and −MN/4 beside it, and its explicit inverse.
pub fn fim_exact_solvable(l: usize, n: usize, shots: f64, r: usize) -> (FiMatrix, DMatrix<f64>) {
    let mn = shots * n as f64;
    let f = DMatrix::from_fn(l, l, |i, j| match i.abs_diff(j) {
        0 => mn / 2.0,
        1 => -mn / 4.0,
        _ => 0.0,
    });
    let lp1 = (l + 1) as f64;
    let inv = DMatrix::from_fn(l, l, |i, j| {
        let (a, b) = ((i + 1) as f64, (j + 1) as f64);
        4.0 / mn * (a.min(b) - a * b / lp1)
    });
    let nu = r as f64 * PI / 2.0;
    (FiMatrix { m: f, shots, samples: n, nu }, inv)
}

/// Sample count making the midpoint grid exactly solvable: r·⌈L + ½⌉.
pub fn exact_solvable_samples(l: usize, r: usize) -> usize {
    r * (l + 1)
}

/// Eigenvalues Λ_k of the (2L−2)-point circulant embedding of the row.
pub fn circulant_eigenvalues(row: &[f64]) -> Vec<f64> {
    let l = row.len();
    if l == 1 {
        return vec![row[0]];
    }
    let size = 2 * l - 2;
    (0..size)
        .map(|k| {
            let w = 2.0 * PI * k as f64 / size as f64;
            let middle: f64 = (1..l - 1).map(|d| row[d] * (d as f64 * w).cos()).sum();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            row[0] + 2.0 * middle + row[l - 1] * sign
        })
        .collect()
}

pub fn small_nu_bound(l: usize, n: usize, nu: f64, shots: f64) -> f64 {
    2.0 / 3.0 * shots * n as f64 * l as f64 * nu * nu
}

/// Valid for ν ≤ π/2; above that the continuum supremum is πMN/(2ν).
pub fn large_nu_bound(n: usize, nu: f64, shots: f64) -> f64 {
    PI / (2.0 * nu) * nu.sin().powi(2) * shots * n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfiPoint {
    pub nu: f64,
    pub degree: usize,
    pub dfi: f64,
    pub max_eig: f64,
    pub circulant_bound: f64,
    pub small_nu_bound: f64,
    pub large_nu_bound: f64,
}

/// Normalized determinant (det F)^{1/L}/(MN) of the constant-phase FIM.
pub fn normalized_dfi(eigs: &[f64], mn: f64) -> f64 {
    if eigs.iter().any(|&e| e <= 0.0) {
        return DFI_FLOOR;
    }
    let log_mean = eigs.iter().map(|e| e.ln()).sum::<f64>() / eigs.len() as f64;
    (log_mean.exp() / mn).max(DFI_FLOOR)
}

pub fn dfi_sweep(l: usize, shots: f64, n: usize, nus: &[f64]) -> Vec<DfiPoint> {
    nus.par_iter()
        .map(|&nu| {
            let row = toeplitz_row(l, n, nu, shots);
            let fim = FiMatrix { m: toeplitz(&row), shots, samples: n, nu };
            let eigs = fim.eigenvalues();
            DfiPoint {
                nu,
                degree: l,
                dfi: normalized_dfi(&eigs, shots * n as f64),
                max_eig: *eigs.last().unwrap(),
                circulant_bound: circulant_eigenvalues(&row).into_iter().fold(f64::MIN, f64::max),
                small_nu_bound: small_nu_bound(l, n, nu, shots),
                large_nu_bound: large_nu_bound(n, nu, shots),
            }
        })
        .collect()
}

/// The second-difference matrix tridiag(−1, 2, −1).
pub fn second_difference(l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(l, l, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    })
}

/// Constant-phase FIM with the θ sum replaced by (N/ν)∫₀^ν.
pub fn fim_continuum(l: usize, n: usize, nu: f64, shots: f64) -> DMatrix<f64> {
    let cos_int = |k: i64| if k == 0 { nu } else { (2.0 * k as f64 * nu).sin() / (2.0 * k as f64) };
    let scale = shots * n as f64 / nu;
    DMatrix::from_fn(l, l, |i, j| {
        let d = i.abs_diff(j) as i64;
        scale * (0.5 * cos_int(d) - 0.25 * cos_int(d + 1) - 0.25 * cos_int(d - 1))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoewnerMargins {
    /// Smallest eigenvalue of F − (πMN/8ν)𝔇.
    pub lower: f64,
    /// Smallest eigenvalue of (πMN/4ν)𝔇 − F.
    pub upper: f64,
}

pub fn loewner_check(l: usize, shots: f64, n: usize, nu: f64) -> LoewnerMargins {
    let f = fim_continuum(l, n, nu, shots);
    let d = second_difference(l);
    let mn = shots * n as f64;
    let min_eig = |m: DMatrix<f64>| SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    LoewnerMargins {
        lower: min_eig(&f - &d * (PI * mn / (8.0 * nu))),
        upper: min_eig(&d * (PI * mn / (4.0 * nu)) - &f),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbReport {
    /// Diagonal of F⁻¹.
    pub variance_floor: Vec<f64>,
    /// Σ_{i≠j} C_ij / Σ_{i≠j} σ_iσ_j for C = F⁻¹; 0 when there are no pairs.
    pub avg_correlation: f64,
    pub correlation_defined: bool,
}

pub fn crlb_report(fim: &FiMatrix) -> Result<CrlbReport> {
    let inv = fim.m.clone().cholesky().ok_or(Error::SingularFim)?.inverse();
    let l = inv.nrows();
    let variance_floor: Vec<f64> = (0..l).map(|i| inv[(i, i)]).collect();
    if l < 2 {
        return Ok(CrlbReport { variance_floor, avg_correlation: 0.0, correlation_defined: false });
    }
    let sigma: Vec<f64> = variance_floor.iter().map(|v| v.sqrt()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..l {
        for j in 0..l {
            if i != j {
                num += inv[(i, j)];
                den += sigma[i] * sigma[j];
            }
        }
    }
    Ok(CrlbReport { variance_floor, avg_correlation: num / den, correlation_defined: true })
}
