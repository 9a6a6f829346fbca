use serde::{Deserialize, Serialize};

use super::{FourierStack, PhaseVector};
use crate::error::{Error, Result};
use crate::numkit::{wrap_angle, Mat2c};

pub(crate) const TRACE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    RightToLeft,
    LeftToRight,
    Stitched,
}

/// Projector estimate from a leading coefficient, P = C†C / Tr(C†C).
pub(crate) fn leading_projector(lead: &Mat2c, degree: usize) -> Result<Mat2c> {
    let g = lead.adjoint() * lead;
    let tr = g.trace().re;
    if !(tr > TRACE_FLOOR) {
        return Err(Error::DegenerateCoefficient { degree, trace: tr });
    }
    Ok(g.unscale(tr))
}

pub(crate) fn projector_phase(p: &Mat2c) -> f64 {
    let d = p[(0, 1)] - p[(1, 0)];
    let s = p[(0, 1)] + p[(1, 0)];
    d.im.atan2(-s.re)
}

/// One degree reduction: C′_k = C_{k−1}Q + C_{k+1}P for |k| ≤ deg − 1.
/// `c` holds C_{−deg..deg}; the result holds C′_{−(deg−1)..deg−1}.
pub(crate) fn reduce(c: &[Mat2c], p: &Mat2c) -> Vec<Mat2c> {
    let deg = (c.len() - 1) / 2;
    let q = Mat2c::identity() - p;
    (0..2 * deg - 1)
        .map(|i| {
            // i indexes C′_{i−(deg−1)}; C_{k∓1} sit at i and i + 2 in `c`.
            c[i] * q + c[i + 2] * p
        })
        .collect()
}

/// Peel phases from the rightmost factor inward: returns ψ₁, ψ₂, … in order.
fn sweep(coeffs: &[Mat2c]) -> Result<Vec<f64>> {
    let mut c = coeffs.to_vec();
    let degree = (c.len() - 1) / 2;
    let mut out = Vec::with_capacity(degree);
    for deg in (1..=degree).rev() {
        let p = leading_projector(&c[2 * deg], deg)?;
        out.push(projector_phase(&p));
        c = reduce(&c, &p);
    }
    Ok(out)
}

/// Recover Ψ from its Fourier coefficients.
///
/// The left-to-right sweep runs the same reduction on the transposed
/// coefficients: V(θ,ψ)ᵀ = V(θ,−ψ), so Wᵀ is the surrogate with the phase
/// order reversed and negated.
pub fn estimate_phases(stack: &FourierStack, direction: Direction) -> Result<PhaseVector> {
    let l = stack.degree;
    let right = || sweep(&stack.coeffs);
    let left = || -> Result<Vec<f64>> {
        let transposed: Vec<Mat2c> = stack.coeffs.iter().map(|c| c.transpose()).collect();
        let mut v: Vec<f64> = sweep(&transposed)?.into_iter().map(|x| -x).collect();
        v.reverse();
        Ok(v)
    };
    let psis = match direction {
        Direction::RightToLeft => right()?,
        Direction::LeftToRight => left()?,
        Direction::Stitched => {
            let (r, lft) = (right()?, left()?);
            let split = l.div_ceil(2);
            r[..split].iter().chain(&lft[split..]).copied().collect()
        }
    };
    Ok(PhaseVector(psis.into_iter().map(wrap_angle).collect()))
}

#[cfg(test)]
mod tests {
    use super::super::{build_w, coefficients_from_quadrant, projector, SampleSet};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psis(l: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..l).map(|_| rng.gen_range(-0.7..0.7)).collect()
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn noiseless_roundtrip_all_directions() {
        let psis = random_psis(40, 17);
        let stack = coefficients_from_quadrant(&SampleSet::exact(&psis, 41)).unwrap();
        for dir in [Direction::RightToLeft, Direction::LeftToRight, Direction::Stitched] {
            let est = estimate_phases(&stack, dir).unwrap();
            assert!(max_err(est.as_slice(), &psis) < 1e-8, "{dir:?}");
        }
    }

    #[test]
    fn constant_phases_give_exact_projector() {
        let phi = -0.45;
        let stack = coefficients_from_quadrant(&SampleSet::exact(&[phi; 8], 9)).unwrap();
        let p = leading_projector(&stack.get(8), 8).unwrap();
        assert!((p - projector(phi)).norm() < 1e-12);
        let est = estimate_phases(&stack, Direction::Stitched).unwrap();
        assert!(est.as_slice().iter().all(|v| (v - phi).abs() < 1e-10));
    }

    #[test]
    fn one_reduction_step_matches_truncated_surrogate() {
        let psis = random_psis(7, 5);
        let stack = coefficients_from_quadrant(&SampleSet::exact(&psis, 8)).unwrap();
        let p = projector(psis[0]);
        let reduced = reduce(&stack.coeffs, &p);
        for theta in [0.2, 0.9, 2.5] {
            let w = crate::numkit::eval_symmetric(&reduced, theta);
            assert!((w - build_w(theta, &psis[1..])).norm() < 1e-9);
        }
    }

    #[test]
    fn odd_and_even_degrees() {
        for l in [1usize, 2, 3] {
            let psis = random_psis(l, 100 + l as u64);
            let stack = coefficients_from_quadrant(&SampleSet::exact(&psis, l + 1)).unwrap();
            let est = estimate_phases(&stack, Direction::Stitched).unwrap();
            assert!(max_err(est.as_slice(), &psis) < 1e-10, "L = {l}");
        }
    }

    #[test]
    fn zero_leading_coefficient_is_degenerate() {
        let mut stack = coefficients_from_quadrant(&SampleSet::exact(&[0.1, 0.2, 0.3], 4)).unwrap();
        stack.coeffs[6] = Mat2c::zeros();
        assert!(matches!(
            estimate_phases(&stack, Direction::RightToLeft),
            Err(Error::DegenerateCoefficient { degree: 3, .. })
        ));
    }

    #[test]
    fn outputs_are_wrapped() {
        let psis = [3.0, -3.1, 2.9];
        let stack = coefficients_from_quadrant(&SampleSet::exact(&psis, 4)).unwrap();
        let est = estimate_phases(&stack, Direction::Stitched).unwrap();
        assert!(max_err(est.as_slice(), &psis) < 1e-10);
    }
}
