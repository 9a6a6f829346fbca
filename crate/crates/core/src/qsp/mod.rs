//! The QSP surrogate W(θ, Ψ) = V(θ,ψ_L)···V(θ,ψ₁) and its learner.

mod reduction;
mod variance;

pub use reduction::{estimate_phases, Direction};
pub use variance::{variance_profile, StepTerms, VarianceProfile};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numkit::{cplx, midpoint_idft, wrap_index, Mat2c};

const GRID_TOL: f64 = 1e-9;

/// Phase factors ψ₁..ψ_L; ψ₁ acts first in time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Unitary samples of a degree-L surrogate on a θ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub thetas: Vec<f64>,
    pub unitaries: Vec<Mat2c>,
    pub degree: usize,
    /// Standard deviation of the noise on each real component of the
    /// independent entries W₀₀, W₀₁ (0 for exact data).
    pub noise_sigma: f64,
}

/// Coefficients C_k, k = −L..L, stored at index k + L.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierStack {
    pub degree: usize,
    pub coeffs: Vec<Mat2c>,
}

impl FourierStack {
    pub fn get(&self, k: i64) -> Mat2c {
        if k.unsigned_abs() as usize > self.degree {
            Mat2c::zeros()
        } else {
            self.coeffs[(k + self.degree as i64) as usize]
        }
    }

    pub fn eval(&self, theta: f64) -> Mat2c {
        crate::numkit::eval_symmetric(&self.coeffs, theta)
    }
}

/// V(θ, ψ) = e^{−iψZ/2} e^{−iθX} e^{iψZ/2}.
pub fn qsp_factor(theta: f64, psi: f64) -> Mat2c {
    let (c, s) = (theta.cos(), theta.sin());
    let m = cplx(0.0, -1.0);
    Mat2c::new(
        cplx(c, 0.0),
        m * cplx(0.0, -psi).exp() * s,
        m * cplx(0.0, psi).exp() * s,
        cplx(c, 0.0),
    )
}

pub fn build_w(theta: f64, psis: &[f64]) -> Mat2c {
    psis.iter().fold(Mat2c::identity(), |acc, &psi| qsp_factor(theta, psi) * acc)
}

/// P_φ = ½(I − cos φ X − sin φ Y).
pub fn projector(phi: f64) -> Mat2c {
    let e = cplx(0.0, -phi).exp();
    Mat2c::new(cplx(0.5, 0.0), -0.5 * e, -0.5 * e.conj(), cplx(0.5, 0.0))
}

/// First-quadrant midpoints (2j+1)π/(4N), j = 0..N−1.
pub fn quadrant_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| (2 * j + 1) as f64 * PI / (4 * n) as f64).collect()
}

impl SampleSet {
    /// Exact surrogate samples on the first-quadrant grid with N points.
    pub fn exact(psis: &[f64], n: usize) -> Self {
        let thetas = quadrant_grid(n);
        let unitaries = thetas.iter().map(|&t| build_w(t, psis)).collect();
        Self { thetas, unitaries, degree: psis.len(), noise_sigma: 0.0 }
    }

    /// Add i.i.d. N(0, σ²) to the real and imaginary parts of W₀₀ and W₀₁;
    /// the second row follows from the SU(2) structure.
    pub fn add_entry_noise<R: Rng>(&mut self, sigma: f64, rng: &mut R) {
        for u in &mut self.unitaries {
            let mut draw = || -> f64 { rng.sample::<f64, _>(StandardNormal) * sigma };
            let a = u[(0, 0)] + cplx(draw(), draw());
            let c = u[(0, 1)] + cplx(draw(), draw());
            *u = Mat2c::new(a, c, -c.conj(), a.conj());
        }
        self.noise_sigma = sigma;
    }

    fn check_quadrant_grid(&self) -> Result<()> {
        let n = self.thetas.len();
        if n == 0 || self.unitaries.len() != n {
            return Err(Error::GridMismatch(format!(
                "{} angles for {} unitaries",
                n,
                self.unitaries.len()
            )));
        }
        for (j, (t, e)) in self.thetas.iter().zip(quadrant_grid(n)).enumerate() {
            if (t - e).abs() > GRID_TOL {
                return Err(Error::GridMismatch(format!("theta[{j}] = {t}, expected {e}")));
            }
        }
        Ok(())
    }
}

fn z_conj(a: &Mat2c) -> Mat2c {
    Mat2c::new(a[(0, 0)], -a[(0, 1)], -a[(1, 0)], a[(1, 1)])
}

/// Extend first-quadrant samples to the 4N-point midpoint grid of [0, 2π)
/// using U(π − θ) = (−1)^L Z U(θ) Z and U(2π − θ) = Z U(θ) Z.
pub fn augment_full_circle(samples: &SampleSet) -> Result<SampleSet> {
    samples.check_quadrant_grid()?;
    let n = samples.thetas.len();
    let sign = if samples.degree.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut b: Vec<Mat2c> = Vec::with_capacity(4 * n);
    b.extend_from_slice(&samples.unitaries);
    for j in 0..n {
        b.push(z_conj(&samples.unitaries[n - 1 - j]) * cplx(sign, 0.0));
    }
    for j in 0..2 * n {
        let src = z_conj(&b[2 * n - 1 - j]);
        b.push(src);
    }
    let thetas = (0..4 * n).map(|j| (2 * j + 1) as f64 * PI / (4 * n) as f64).collect();
    Ok(SampleSet { thetas, unitaries: b, degree: samples.degree, noise_sigma: samples.noise_sigma })
}

/// Fourier coefficients C_{−L..L} of full-circle samples.
pub fn fourier_coeffs(full: &SampleSet, degree: usize) -> Result<FourierStack> {
    let n_tilde = full.unitaries.len();
    let all = midpoint_idft(&full.unitaries, degree)?;
    let coeffs = (-(degree as i64)..=degree as i64).map(|k| all[wrap_index(k, n_tilde)]).collect();
    Ok(FourierStack { degree, coeffs })
}

/// Augment and transform in one go.
pub fn coefficients_from_quadrant(samples: &SampleSet) -> Result<FourierStack> {
    let full = augment_full_circle(samples)?;
    fourier_coeffs(&full, samples.degree)
}
