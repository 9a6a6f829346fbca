use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::su2::{cplx, paulis, Mat2c};
use crate::error::{Error, Result};

pub type Mat3r = Matrix3<f64>;

const POLAR_SINGULAR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Nearest rotation in Frobenius norm, via SVD. If the orthogonal factor
/// is a reflection, the singular direction with the smallest singular value
/// is flipped.
pub fn polar3(b: &Mat3r) -> Result<Mat3r> {
    let svd = b.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::PolarSingular("SVD did not converge".into())),
    };
    let (imin, smin) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
    if smin <= POLAR_SINGULAR {
        return Err(Error::Singular(smin));
    }
    let mut u = u;
    if (u * vt).determinant() < 0.0 {
        let mut col = u.column_mut(imin);
        col.neg_mut();
    }
    Ok(u * vt)
}

/// Symmetric inverse square root through an eigendecomposition; returns the
/// smallest eigenvalue alongside for conditioning checks.
pub fn sym_inv_sqrt(k: &Mat3r) -> (Mat3r, f64) {
    let eig = SymmetricEigen::new(*k);
    let lmin = eig.eigenvalues.min();
    let d = eig.eigenvalues.map(|l| if l > 0.0 { 1.0 / l.sqrt() } else { f64::NAN });
    let m = eig.eigenvectors * Mat3r::from_diagonal(&d) * eig.eigenvectors.transpose();
    (m, lmin)
}

/// Unit quaternion of a rotation, w ≥ 0 branch. Near w = 0 the largest
/// diagonal entry picks the pivot component.
pub fn quat_from_rotation(r: &Mat3r) -> Quaternion {
    let tr = r.trace();
    let mut q = if tr > -0.5 {
        let w = 0.5 * (1.0 + tr).max(0.0).sqrt();
        Quaternion {
            w,
            x: (r[(2, 1)] - r[(1, 2)]) / (4.0 * w),
            y: (r[(0, 2)] - r[(2, 0)]) / (4.0 * w),
            z: (r[(1, 0)] - r[(0, 1)]) / (4.0 * w),
        }
    } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
        let x = 0.5 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).max(0.0).sqrt();
        Quaternion {
            w: (r[(2, 1)] - r[(1, 2)]) / (4.0 * x),
            x,
            y: (r[(0, 1)] + r[(1, 0)]) / (4.0 * x),
            z: (r[(0, 2)] + r[(2, 0)]) / (4.0 * x),
        }
    } else if r[(1, 1)] >= r[(2, 2)] {
        let y = 0.5 * (1.0 - r[(0, 0)] + r[(1, 1)] - r[(2, 2)]).max(0.0).sqrt();
        Quaternion {
            w: (r[(0, 2)] - r[(2, 0)]) / (4.0 * y),
            x: (r[(0, 1)] + r[(1, 0)]) / (4.0 * y),
            y,
            z: (r[(1, 2)] + r[(2, 1)]) / (4.0 * y),
        }
    } else {
        let z = 0.5 * (1.0 - r[(0, 0)] - r[(1, 1)] + r[(2, 2)]).max(0.0).sqrt();
        Quaternion {
            w: (r[(1, 0)] - r[(0, 1)]) / (4.0 * z),
            x: (r[(0, 2)] + r[(2, 0)]) / (4.0 * z),
            y: (r[(1, 2)] + r[(2, 1)]) / (4.0 * z),
            z,
        }
    };
    if q.w < 0.0 {
        q = Quaternion { w: -q.w, x: -q.x, y: -q.y, z: -q.z };
    }
    let n = q.norm();
    Quaternion { w: q.w / n, x: q.x / n, y: q.y / n, z: q.z / n }
}

/// U = wI − i(xX + yY + zZ).
pub fn su2_from_quat(q: &Quaternion) -> Mat2c {
    Mat2c::new(
        cplx(q.w, -q.z),
        cplx(-q.y, -q.x),
        cplx(q.y, -q.x),
        cplx(q.w, q.z),
    )
}

/// Adjoint action of U on the Pauli vector: R_ij = ½ Tr(σ_i U σ_j U†).
pub fn rotation_of(u: &Mat2c) -> Mat3r {
    let p = paulis();
    let ud = u.adjoint();
    Mat3r::from_fn(|i, j| 0.5 * (p[i] * u * p[j] * ud).trace().re)
}
