use super::reduction::reduce;
use super::{projector, FourierStack, PhaseVector};
use crate::error::{Error, Result};
use crate::numkit::{cplx, frob_inner, frob_norm_sq, pauli_x, pauli_y, pauli_z, Mat2c};

/// First-order noise-propagation terms of one reduction step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTerms {
    /// Gain of the previous phase error into the next one.
    pub g: f64,
    pub a_r: f64,
    pub a_l: f64,
    pub a_p: f64,
    pub a_q: f64,
    /// Cross-covariance coefficient between the phase channel and fresh noise.
    pub b: f64,
}

impl StepTerms {
    pub fn rho(&self) -> f64 {
        self.g * self.g
    }

    pub fn alpha(&self) -> f64 {
        self.b + 0.5 * (self.a_r + self.a_l + self.a_p + self.a_q)
    }
}

/// Terms for the steps at degree L, L−1, …, 2 (each reads out a further
/// phase), plus the formal final step at degree 1.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    pub g: Vec<f64>,
    pub a_r: Vec<f64>,
    pub a_l: Vec<f64>,
    pub a_p: Vec<f64>,
    pub a_q: Vec<f64>,
    pub b: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub terminal: Option<StepTerms>,
}

fn riesz_projector_term(proj: &Mat2c, g: &Mat2c, scale: f64) -> Mat2c {
    let im_tr = (proj * g).trace().im;
    (proj * (g - g.adjoint()) - proj * cplx(0.0, 2.0 * im_tr)) * cplx(scale, 0.0)
}

fn step_terms(c: &[Mat2c], phi: f64) -> Result<StepTerms> {
    let deg = (c.len() - 1) / 2;
    let p = projector(phi);
    let q = Mat2c::identity() - p;
    let reduced = reduce(c, &p);
    let lead_next = reduced[reduced.len() - 1];
    let s_next = frob_norm_sq(&lead_next);
    if !(s_next > super::reduction::TRACE_FLOOR) {
        return Err(Error::DegenerateCoefficient { degree: deg - 1, trace: s_next });
    }
    let z = pauli_z();
    let readout = lead_next * z;
    let c_j = c[2 * deg];
    let c_jm2 = c[2 * deg - 2];
    let dp = (pauli_x() * cplx(phi.sin(), 0.0) - pauli_y() * cplx(phi.cos(), 0.0)) * cplx(0.5, 0.0);
    let k = 2.0 / s_next;
    let g = k * frob_inner(&((c_j - c_jm2) * dp), &readout).im;
    let a_r = readout * p * cplx(k, 0.0);
    let a_l = readout * q * cplx(k, 0.0);
    let a_p = riesz_projector_term(&p, &(c_j.adjoint() * readout), k);
    let a_q = riesz_projector_term(&q, &(c_jm2.adjoint() * readout), k);
    let total = a_r + a_l + a_p + a_q;
    let s_j = frob_norm_sq(&c_j);
    let b = 2.0 * g / s_j * frob_inner(&total, &(readout * p)).re;
    Ok(StepTerms {
        g,
        a_r: frob_norm_sq(&a_r),
        a_l: frob_norm_sq(&a_l),
        a_p: frob_norm_sq(&a_p),
        a_q: frob_norm_sq(&a_q),
        b,
    })
}

/// Linearized noise-propagation coefficients along a clean reduction of
/// the given coefficients, using the known phases for the projectors.
pub fn variance_profile(stack: &FourierStack, psis: &PhaseVector) -> Result<VarianceProfile> {
    let l = stack.degree;
    if psis.len() != l {
        return Err(Error::MismatchedConfig(format!("{} phases for degree {}", psis.len(), l)));
    }
    let mut prof = VarianceProfile {
        g: vec![],
        a_r: vec![],
        a_l: vec![],
        a_p: vec![],
        a_q: vec![],
        b: vec![],
        rho: vec![],
        alpha: vec![],
        terminal: None,
    };
    let mut c = stack.coeffs.clone();
    for (step, deg) in (1..=l).rev().enumerate() {
        let phi = psis.0[step];
        let t = step_terms(&c, phi)?;
        if deg == 1 {
            prof.terminal = Some(t);
        } else {
            prof.g.push(t.g);
            prof.a_r.push(t.a_r);
            prof.a_l.push(t.a_l);
            prof.a_p.push(t.a_p);
            prof.a_q.push(t.a_q);
            prof.b.push(t.b);
            prof.rho.push(t.rho());
            prof.alpha.push(t.alpha());
        }
        c = reduce(&c, &projector(phi));
    }
    Ok(prof)
}
