use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2c = Matrix2<C64>;

/// Unitarity tolerance applied to every matrix handed to `su2_log`.
pub const UNITARY_TOL: f64 = 1e-10;

const SERIES_CUTOFF: f64 = 1e-6;
const ANTIPODAL_TOL: f64 = 1e-8;

#[inline]
pub fn cplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity() -> Mat2c {
    Mat2c::identity()
}

pub fn pauli_x() -> Mat2c {
    Mat2c::new(cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(1.0, 0.0), cplx(0.0, 0.0))
}

pub fn pauli_y() -> Mat2c {
    Mat2c::new(cplx(0.0, 0.0), cplx(0.0, -1.0), cplx(0.0, 1.0), cplx(0.0, 0.0))
}

pub fn pauli_z() -> Mat2c {
    Mat2c::new(cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(-1.0, 0.0))
}

pub fn paulis() -> [Mat2c; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Frobenius inner product Tr(A†B).
pub fn frob_inner(a: &Mat2c, b: &Mat2c) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frob_norm_sq(a: &Mat2c) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Largest singular value of a 2×2 complex matrix, from the closed-form
/// eigenvalues of A†A.
pub fn spectral_norm(a: &Mat2c) -> f64 {
    let f = frob_norm_sq(a);
    let d = a.determinant().norm_sqr();
    let disc = (f * f - 4.0 * d).max(0.0).sqrt();
    (0.5 * (f + disc)).sqrt()
}

pub fn unitarity_defect(u: &Mat2c) -> f64 {
    (u.adjoint() * u - Mat2c::identity()).norm()
}

/// exp(−i(aX + bY + cZ)).
pub fn su2_exp(g: [f64; 3]) -> Mat2c {
    let theta = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    let sinc = if theta < SERIES_CUTOFF {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    };
    let (c, s) = (theta.cos(), sinc);
    // cos ϑ I − i sinc ϑ (aX + bY + cZ)
    Mat2c::new(
        cplx(c, -s * g[2]),
        cplx(-s * g[1], -s * g[0]),
        cplx(s * g[1], -s * g[0]),
        cplx(c, s * g[2]),
    )
}

/// Principal su(2) logarithm: returns (a, b, c) with exp(−i(aX+bY+cZ)) = U
/// and ϑ = ‖(a,b,c)‖ ∈ [0, π).
pub fn su2_log(u: &Mat2c) -> Result<[f64; 3]> {
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    if (u + Mat2c::identity()).norm() < ANTIPODAL_TOL {
        return Err(Error::AntipodalSingularity);
    }
    let cos_t = 0.5 * u.trace().re;
    // Tr(Uσ) = −2i sinϑ n_σ, so sinϑ n_σ = −½ Im Tr(Uσ).
    let s: Vec<f64> = paulis().iter().map(|p| -0.5 * (u * p).trace().im).collect();
    let sin_t = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    let theta = sin_t.atan2(cos_t);
    let scale = if theta < SERIES_CUTOFF {
        1.0 + theta * theta / 6.0
    } else {
        theta / sin_t
    };
    Ok([scale * s[0], scale * s[1], scale * s[2]])
}

/// Nearest unitary via Newton iteration X ← ½(X + X^{-†}); converges
/// quadratically from anything close to unitary.
pub fn reunitarize(u: &Mat2c) -> Mat2c {
    let mut x = *u;
    for _ in 0..8 {
        let inv = match x.try_inverse() {
            Some(inv) => inv,
            None => return x,
        };
        let next = (x + inv.adjoint()) * cplx(0.5, 0.0);
        let step = (next - x).norm();
        x = next;
        if step < 1e-15 {
            break;
        }
    }
    x
}

/// Project an arbitrary 2×2 matrix onto SU(2) by keeping the
/// quaternion-structured part and normalizing it.
pub fn project_su2(m: &Mat2c) -> Mat2c {
    let a = (m[(0, 0)] + m[(1, 1)].conj()) * 0.5;
    let c = (m[(0, 1)] - m[(1, 0)].conj()) * 0.5;
    let n = (a.norm_sqr() + c.norm_sqr()).sqrt();
    let (a, c) = if n > 0.0 { (a / n, c / n) } else { (cplx(1.0, 0.0), cplx(0.0, 0.0)) };
    Mat2c::new(a, c, -c.conj(), a.conj())
}

/// Angle wrapped to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}
