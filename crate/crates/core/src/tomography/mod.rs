//! Simulated process tomography with SPAM, depolarizing and shot noise,
//! robust unitary recovery, and global-sign alignment.

mod align;
mod noise;
mod suite;

pub use align::{align_signs, align_signs_predictive};
pub use noise::{NoiseModel, ShotNoise};
pub use suite::{drive_grid, exact_propagators, run_experiment_suite, tomograph_suite, SuiteRecord};

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::{polar3, quat_from_rotation, rotation_of, su2_from_quat, sym_inv_sqrt, Mat2c, Mat3r};

pub(crate) const ASYMMETRY_WARN: f64 = 1e-3;
const REFERENCE_FLOOR: f64 = 1e-6;

/// Pauli-transfer-matrix data: translation block and the 3×3 block.
#[derive(Debug, Clone, PartialEq)]
pub struct Ptm {
    pub t_vec: Vector3<f64>,
    pub a: Mat3r,
    /// Set when an exact expectation fell outside [−1, 1] and its Born
    /// probability had to be clamped before sampling.
    pub clamped: bool,
}

/// Bloch vectors of the four input states |0⟩, |1⟩, |+⟩, |+i⟩.
fn input_states() -> [Vector3<f64>; 4] {
    [Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, -1.0), Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)]
}

fn measure<R: Rng>(exact: f64, noise: &NoiseModel, rng: &mut R, clamped: &mut bool) -> f64 {
    let Some(m) = noise.shots else { return exact };
    match noise.kind {
        ShotNoise::BernoulliCounts => {
            let mut p = 0.5 * (1.0 + exact);
            if !(0.0..=1.0).contains(&p) {
                *clamped = true;
                p = p.clamp(0.0, 1.0);
            }
            let k = Binomial::new(m, p).expect("valid binomial parameters").sample(rng);
            2.0 * k as f64 / m as f64 - 1.0
        }
        ShotNoise::GaussianEntries => exact + rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt(),
    }
}

/// Expectation values of X, Y, Z after sending each input state through
/// T_meas · T_dplz · T_U · T_init, assembled into a PTM.
pub fn simulate_expectations<R: Rng>(u: &Mat2c, noise: &NoiseModel, rng: &mut R) -> Ptm {
    let chain = noise.measurement() * rotation_of(u) * noise.preparation() * noise.alpha;
    let mut clamped = false;
    let r: Vec<Vector3<f64>> = input_states()
        .iter()
        .map(|b| {
            let exact = chain * b;
            Vector3::from_fn(|i, _| measure(exact[i], noise, rng, &mut clamped))
        })
        .collect();
    let t_vec = (r[0] + r[1]) * 0.5;
    let a = Mat3r::from_columns(&[r[2] - t_vec, r[3] - t_vec, (r[0] - r[1]) * 0.5]);
    Ptm { t_vec, a, clamped }
}

/// Frobenius norm of the antisymmetric part of the reference block, which
/// the sandwich discards.
pub fn reference_asymmetry(reference: &Ptm) -> f64 {
    0.5 * (reference.a - reference.a.transpose()).norm()
}

/// Sandwich the target block with the reference (identity-gate) block,
/// B = K^{−1/2} Ã K^{−1/2}, project onto SO(3), and lift to SU(2).
pub fn robust_reconstruct(target: &Ptm, reference: &Ptm) -> Result<Mat2c> {
    let k = reference.a;
    let asym = reference_asymmetry(reference);
    if asym > ASYMMETRY_WARN {
        log::debug!("reference PTM block has antisymmetric residue {asym:.3e}; discarded");
    }
    let (k_inv_sqrt, lmin) = sym_inv_sqrt(&(0.5 * (k + k.transpose())));
    if !(lmin > REFERENCE_FLOOR) {
        return Err(Error::ReferenceIllConditioned(lmin));
    }
    let b = k_inv_sqrt * target.a * k_inv_sqrt;
    let r = polar3(&b).map_err(|e| Error::PolarSingular(e.to_string()))?;
    Ok(su2_from_quat(&quat_from_rotation(&r)))
}

/// min over the global sign of ‖±Û − U‖₂.
pub fn sign_free_distance(estimate: &Mat2c, truth: &Mat2c) -> f64 {
    use crate::numkit::spectral_norm;
    spectral_norm(&(estimate - truth)).min(spectral_norm(&(estimate + truth)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::su2_exp;
    use crate::seeds;

    fn random_unitary(seed: u64) -> Mat2c {
        let mut rng = seeds::rng(seed, &[99]);
        su2_exp([rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)])
    }

    #[test]
    fn identity_without_noise() {
        let ptm = simulate_expectations(&Mat2c::identity(), &NoiseModel::ideal(), &mut seeds::rng(0, &[]));
        assert!(ptm.t_vec.norm() < 1e-15);
        assert!((ptm.a - Mat3r::identity()).norm() < 1e-15);
    }

    #[test]
    fn quarter_x_rotation() {
        let u = su2_exp([std::f64::consts::FRAC_PI_4, 0.0, 0.0]);
        let ptm = simulate_expectations(&u, &NoiseModel::ideal(), &mut seeds::rng(0, &[]));
        let expected = Mat3r::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert!((ptm.a - expected).norm() < 1e-14);
    }

    #[test]
    fn depolarizing_scales_the_block() {
        let u = random_unitary(1);
        let noise = NoiseModel { alpha: 0.9, ..NoiseModel::ideal() };
        let ptm = simulate_expectations(&u, &noise, &mut seeds::rng(0, &[]));
        assert!((ptm.a - rotation_of(&u) * 0.9).norm() < 1e-14);
    }

    #[test]
    fn noiseless_reconstruction_is_exact_up_to_sign() {
        let reference = simulate_expectations(&Mat2c::identity(), &NoiseModel::ideal(), &mut seeds::rng(0, &[]));
        for s in 0..20 {
            let u = random_unitary(s);
            let ptm = simulate_expectations(&u, &NoiseModel::ideal(), &mut seeds::rng(0, &[]));
            let est = robust_reconstruct(&ptm, &reference).unwrap();
            assert!(sign_free_distance(&est, &u) < 1e-9);
        }
    }

    fn spam_error(delta: f64, symmetric: bool, seed: u64) -> f64 {
        let mut rng = seeds::rng(seed, &[1]);
        let noise = NoiseModel::with_random_spam(1.0, delta, symmetric, None, ShotNoise::BernoulliCounts, &mut rng);
        let u = random_unitary(seed);
        let reference = simulate_expectations(&Mat2c::identity(), &noise, &mut rng);
        let target = simulate_expectations(&u, &noise, &mut rng);
        sign_free_distance(&robust_reconstruct(&target, &reference).unwrap(), &u)
    }

    #[test]
    fn symmetric_spam_error_is_quadratic() {
        let (e2, e3): (f64, f64) = (0..10).map(|s| (spam_error(1e-2, true, s), spam_error(1e-3, true, s))).fold(
            (0.0, 0.0),
            |acc, (a, b)| (acc.0 + a, acc.1 + b),
        );
        let ratio = e2 / e3;
        assert!((100.0 / 3.0..=300.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn generic_spam_error_is_linear() {
        let (e2, e3): (f64, f64) = (0..10).map(|s| (spam_error(1e-2, false, s), spam_error(1e-3, false, s))).fold(
            (0.0, 0.0),
            |acc, (a, b)| (acc.0 + a, acc.1 + b),
        );
        let ratio = e2 / e3;
        assert!((10.0 / 3.0..=30.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn sandwich_first_order_identity() {
        // K^{−1/2} Ã K^{−1/2} = R + ½[g_M − g_S, R] + O(δ²) holds when the
        // reference block is symmetric to first order, i.e. g_M + g_S is
        // symmetric; otherwise the antisymmetric part a of g_M + g_S adds
        // ½(aR + Ra) at first order.
        let r = rotation_of(&random_unitary(5));
        let err = |delta: f64| {
            let mut rng = seeds::rng(5, &[2]);
            let g_s = NoiseModel::with_random_spam(1.0, delta, false, None, ShotNoise::BernoulliCounts, &mut rng).g_s;
            let sym = NoiseModel::with_random_spam(1.0, delta, true, None, ShotNoise::BernoulliCounts, &mut rng).g_m;
            let g_m = sym - g_s;
            let (m, s) = (g_m.exp(), g_s.exp());
            let k = m * s;
            let (kis, _) = sym_inv_sqrt(&(0.5 * (k + k.transpose())));
            let d = g_m - g_s;
            (kis * (m * r * s) * kis - r - 0.5 * (d * r - r * d)).norm()
        };
        let ratio = err(1e-2) / err(1e-3);
        assert!(ratio > 60.0 && ratio < 160.0, "{ratio}");
    }

    #[test]
    fn bernoulli_expectations_are_unbiased() {
        let u = random_unitary(3);
        let noise = NoiseModel { shots: Some(100), ..NoiseModel::ideal() };
        let exact = simulate_expectations(&u, &NoiseModel::ideal(), &mut seeds::rng(0, &[]));
        let mut rng = seeds::rng(11, &[]);
        let reps = 10_000;
        let mut mean = Mat3r::zeros();
        for _ in 0..reps {
            mean += simulate_expectations(&u, &noise, &mut rng).a;
        }
        mean /= reps as f64;
        // Each block entry is an average of at most two ±1 estimates with
        // variance ≤ 1/100; four standard errors.
        let tol = 4.0 * (2.0f64 / 100.0 / reps as f64).sqrt();
        for (m, e) in mean.iter().zip(exact.a.iter()) {
            assert!((m - e).abs() < tol, "{m} vs {e}");
        }
    }

    #[test]
    fn ill_conditioned_reference_is_rejected() {
        let bad = Ptm { t_vec: Vector3::zeros(), a: Mat3r::from_diagonal(&Vector3::new(1.0, 1.0, 1e-9)), clamped: false };
        let target = Ptm { t_vec: Vector3::zeros(), a: Mat3r::identity(), clamped: false };
        assert!(matches!(robust_reconstruct(&target, &bad), Err(Error::ReferenceIllConditioned(_))));
    }

    #[test]
    fn clamping_is_flagged() {
        let noise = NoiseModel { alpha: 1.05, shots: Some(10), ..NoiseModel::ideal() };
        let ptm = simulate_expectations(&Mat2c::identity(), &noise, &mut seeds::rng(0, &[]));
        assert!(ptm.clamped);
    }
}
