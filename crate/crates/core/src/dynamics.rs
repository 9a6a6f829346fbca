//! Ground-truth propagation of H(t) = ω(cos φ(t) X + sin φ(t) Y).

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkit::{cplx, gauss_legendre, integrate, reunitarize, su2_exp, su2_log, Mat2c};
use crate::pulse::Pulse;

pub const DEFAULT_RTOL: f64 = 1e-10;
const MAX_SUBSTEPS: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGenerator {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t1: f64,
    pub t2: f64,
    pub omega: f64,
}

/// First Magnus term (X/Y components) and the Z coefficient of the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnusTerms {
    pub a1: f64,
    pub b1: f64,
    pub c2: f64,
}

/// −iH(t)U with H = ω [[0, e^{−iφ}], [e^{iφ}, 0]].
#[inline]
fn rhs(omega: f64, phi: f64, u: &Mat2c) -> Mat2c {
    let e = cplx(0.0, -phi).exp() * omega;
    let mi = cplx(0.0, -1.0);
    let ec = e.conj();
    Mat2c::new(
        mi * e * u[(1, 0)],
        mi * e * u[(1, 1)],
        mi * ec * u[(0, 0)],
        mi * ec * u[(0, 1)],
    )
}

fn rk4(p: &Pulse, omega: f64, t1: f64, t2: f64, steps: usize) -> Mat2c {
    let h = (t2 - t1) / steps as f64;
    let mut u = Mat2c::identity();
    let mut phi_start = p.value(t1);
    for k in 0..steps {
        let t = t1 + k as f64 * h;
        let phi_mid = p.value(t + 0.5 * h);
        let phi_end = p.value(if k + 1 == steps { t2 } else { t + h });
        let k1 = rhs(omega, phi_start, &u);
        let k2 = rhs(omega, phi_mid, &(u + k1 * cplx(0.5 * h, 0.0)));
        let k3 = rhs(omega, phi_mid, &(u + k2 * cplx(0.5 * h, 0.0)));
        let k4 = rhs(omega, phi_end, &(u + k3 * cplx(h, 0.0)));
        u += (k1 + k2 * cplx(2.0, 0.0) + k3 * cplx(2.0, 0.0) + k4) * cplx(h / 6.0, 0.0);
        phi_start = phi_end;
    }
    u
}

/// Time-ordered propagator from t1 to t2 by classic RK4. The substep count
/// starts at max(64, ⌈64ωτ⌉) and doubles until the Richardson estimate
/// ‖U_{2n} − U_n‖/15 drops below `rtol`.
pub fn propagate(p: &Pulse, omega: f64, t1: f64, t2: f64, rtol: f64) -> Mat2c {
    let tau = t2 - t1;
    if tau <= 0.0 || omega == 0.0 {
        return Mat2c::identity();
    }
    let mut n = 64.max((omega.abs() * tau * 64.0).ceil() as usize);
    let mut coarse = rk4(p, omega, t1, t2, n);
    loop {
        let fine = rk4(p, omega, t1, t2, 2 * n);
        let err = (fine - coarse).norm() / 15.0;
        if err < rtol || 2 * n >= MAX_SUBSTEPS {
            return reunitarize(&fine);
        }
        coarse = fine;
        n *= 2;
    }
}

/// Closed-form propagator for φ(t) = αt: U = R(t2) V(t2 − t1) R(−t1) with
/// R(t) = e^{−iαtZ/2} and V(Δ) = e^{−iΔ(ωX − αZ/2)}.
pub fn linear_pulse_propagator(alpha: f64, omega: f64, t1: f64, t2: f64) -> Mat2c {
    let r = |t: f64| su2_exp([0.0, 0.0, 0.5 * alpha * t]);
    let dt = t2 - t1;
    r(t2) * su2_exp([omega * dt, 0.0, -0.5 * alpha * dt]) * r(-t1)
}

pub fn extract_generator(u: &Mat2c, t1: f64, t2: f64, omega: f64) -> Result<SegmentGenerator> {
    let [a, b, c] = su2_log(u)?;
    Ok(SegmentGenerator { a, b, c, t1, t2, omega })
}

/// Per-segment phase estimates atan2(b_j, a_j) from the exact segment
/// propagators of an L-segment split of [0, T].
pub fn digitize(p: &Pulse, omega: f64, segments: usize) -> Result<Vec<f64>> {
    digitize_with(p, omega, segments, DEFAULT_RTOL)
}

pub fn digitize_with(p: &Pulse, omega: f64, segments: usize, rtol: f64) -> Result<Vec<f64>> {
    let tau = p.duration / segments as f64;
    let theta = omega.abs() * tau;
    if theta >= PI {
        return Err(Error::MagnusRangeViolation(theta));
    }
    (0..segments)
        .into_par_iter()
        .map(|j| {
            let (t1, t2) = (j as f64 * tau, (j + 1) as f64 * tau);
            let g = extract_generator(&propagate(p, omega, t1, t2, rtol), t1, t2, omega)?;
            Ok(g.b.atan2(g.a))
        })
        .collect()
}

fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

/// Ω₁ by adaptive quadrature and the Z coefficient of Ω₂,
/// c₂ = −ω² ∬_{s₂<s₁} sin(φ(s₁) − φ(s₂)), by a 32×32 Gauss–Legendre rule
/// collapsed onto the triangle.
pub fn magnus_terms(p: &Pulse, omega: f64, t1: f64, t2: f64) -> MagnusTerms {
    let a1 = omega * integrate(&|t| p.value(t).cos(), t1, t2, 1e-13);
    let b1 = omega * integrate(&|t| p.value(t).sin(), t1, t2, 1e-13);
    let (x, w) = gl32();
    let h = t2 - t1;
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let s1 = t1 + 0.5 * h * (1.0 + xi);
        let inner = s1 - t1;
        let phi1 = p.value(s1);
        let mut row = 0.0;
        for (yj, wj) in x.iter().zip(w) {
            let s2 = t1 + 0.5 * inner * (1.0 + yj);
            row += wj * (phi1 - p.value(s2)).sin();
        }
        acc += wi * 0.5 * inner * row;
    }
    MagnusTerms { a1, b1, c2: -omega * omega * 0.5 * h * acc }
}
