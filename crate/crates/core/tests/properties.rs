use std::f64::consts::PI;

use proptest::prelude::*;

use qsp_pulse::dynamics::{propagate, DEFAULT_RTOL};
use qsp_pulse::fisher::{circulant_eigenvalues, fim_numeric, midpoint_grid_to, toeplitz_row, FiMatrix};
use qsp_pulse::numkit::{
    eval_symmetric, midpoint_grid, midpoint_idft, polar3, quat_from_rotation, rotation_of, su2_exp, su2_from_quat,
    su2_log, unitarity_defect, wrap_index, Mat2c, Mat3r,
};
use qsp_pulse::pulse::{PerturbationTable, Pulse};
use qsp_pulse::qsp::{build_w, coefficients_from_quadrant, estimate_phases, Direction, SampleSet};
use qsp_pulse::reconstruct::{de_average, reconstruct, DeAveraging, Method};

fn generator() -> impl Strategy<Value = [f64; 3]> {
    // Direction on the sphere and an angle in (0, π − 0.1).
    (0.0..PI, 0.0..2.0 * PI, 1e-3..PI - 0.1).prop_map(|(pol, az, th)| {
        [th * pol.sin() * az.cos(), th * pol.sin() * az.sin(), th * pol.cos()]
    })
}

fn phases(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.7..0.7f64, 2..=max_len)
}

fn mat3() -> impl Strategy<Value = Mat3r> {
    prop::array::uniform9(-2.0..2.0f64).prop_map(|a| Mat3r::from_row_slice(&a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn su2_exp_log_roundtrip(g in generator()) {
        let back = su2_log(&su2_exp(g)).unwrap();
        for i in 0..3 {
            prop_assert!((back[i] - g[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn polar_lands_in_so3(m in mat3()) {
        prop_assume!(m.determinant().abs() > 1e-3);
        let r = polar3(&m).unwrap();
        prop_assert!((r.transpose() * r - Mat3r::identity()).norm() < 1e-10);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lift_reproduces_rotation(g in generator()) {
        let r = rotation_of(&su2_exp(g));
        let u = su2_from_quat(&quat_from_rotation(&r));
        prop_assert!(unitarity_defect(&u) < 1e-10);
        prop_assert!((rotation_of(&u) - r).norm() < 1e-10);
    }

    #[test]
    fn idft_then_evaluate_reproduces_samples(psis in phases(10), extra in 1usize..4) {
        let degree = psis.len();
        let n_tilde = 4 * (degree + extra);
        let grid = midpoint_grid(n_tilde);
        let samples: Vec<Mat2c> = grid.iter().map(|&t| build_w(t, &psis)).collect();
        let all = midpoint_idft(&samples, degree).unwrap();
        let coeffs: Vec<Mat2c> = (-(degree as i64)..=degree as i64).map(|k| all[wrap_index(k, n_tilde)]).collect();
        for (t, s) in grid.iter().zip(&samples) {
            prop_assert!((eval_symmetric(&coeffs, *t) - s).norm() < 1e-10);
        }
    }

    #[test]
    fn fourier_stack_degree_parity_and_sum_rule(psis in phases(12), theta in 0.0..2.0 * PI) {
        let l = psis.len();
        let stack = coefficients_from_quadrant(&SampleSet::exact(&psis, l + 1)).unwrap();
        for k in -(l as i64)..=l as i64 {
            if (k - l as i64).rem_euclid(2) == 1 {
                prop_assert!(stack.get(k).norm() < 1e-10, "C_{k} should vanish by parity");
            }
        }
        prop_assert!((stack.eval(theta) - build_w(theta, &psis)).norm() < 1e-10);
    }

    #[test]
    fn noiseless_phase_roundtrip(psis in phases(24)) {
        let stack = coefficients_from_quadrant(&SampleSet::exact(&psis, psis.len() + 1)).unwrap();
        for dir in [Direction::RightToLeft, Direction::LeftToRight, Direction::Stitched] {
            let est = estimate_phases(&stack, dir).unwrap();
            for (a, b) in est.0.iter().zip(&psis) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn de_averaging_is_linear_and_stable(
        x in prop::collection::vec(-1.0..1.0f64, 4..40),
        y in prop::collection::vec(-1.0..1.0f64, 40),
        a in -2.0..2.0f64,
    ) {
        let y = &y[..x.len()];
        let combo: Vec<f64> = x.iter().zip(y).map(|(p, q)| a * p + q).collect();
        let (dx, dy) = (de_average(&x, DeAveraging::Fourth).unwrap(), de_average(y, DeAveraging::Fourth).unwrap());
        let dc = de_average(&combo, DeAveraging::Fourth).unwrap();
        for i in 0..x.len() {
            prop_assert!((dc[i] - (a * dx[i] + dy[i])).abs() < 1e-12);
        }
        let sup_in = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sup_interior = dx[1..x.len() - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(sup_interior <= 7.0 / 6.0 * sup_in + 1e-12);
    }

    #[test]
    fn smoothing_is_a_sup_norm_contraction(seed in any::<u64>(), segs in 1usize..20, eta in 0.0..1.0f64, w in 0.005..0.2f64) {
        let table = PerturbationTable::new(1.0, seed, segs, eta, w);
        prop_assert!(table.sup_norm() <= eta + 1e-12);
    }

    #[test]
    fn propagator_is_unitary(omega in 0.1..20.0f64, t1 in 0.0..0.5f64, dt in 0.01..0.5f64) {
        let u = propagate(&Pulse::biharmonic(1.0), omega, t1, t1 + dt, DEFAULT_RTOL);
        prop_assert!(unitarity_defect(&u) < 1e-10);
    }

    #[test]
    fn fim_is_symmetric_psd(psis in phases(10), nu in 0.1..PI) {
        let thetas = midpoint_grid_to(psis.len() + 3, nu);
        let fim = fim_numeric(&psis, &thetas, 100.0);
        prop_assert!((&fim.m - fim.m.transpose()).norm() < 1e-9 * fim.m.norm());
        let lmin = fim.eigenvalues()[0];
        prop_assert!(lmin > -1e-9 * fim.m.norm());
    }

    #[test]
    fn circulant_embedding_bounds_toeplitz_spectrum(l in 3usize..40, nu in 0.05..PI, ratio in 1usize..9) {
        let n = ratio * l;
        let row = toeplitz_row(l, n, nu, 1.0);
        let m = nalgebra::DMatrix::from_fn(l, l, |i, j| row[i.abs_diff(j)]);
        let fim = FiMatrix { m, shots: 1.0, samples: n, nu };
        let max_eig = *fim.eigenvalues().last().unwrap();
        let bound = circulant_eigenvalues(&row).into_iter().fold(f64::MIN, f64::max);
        prop_assert!(max_eig <= bound * (1.0 + 1e-10) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn spline_influence_decays(values in prop::collection::vec(-1.0..1.0f64, 40), i in 0usize..40) {
        let base = reconstruct(&values, 1.0, Method::DirectMidpoint).unwrap();
        let mut bumped = values.clone();
        let eps = 1e-3;
        bumped[i] += eps;
        let moved = reconstruct(&bumped, 1.0, Method::DirectMidpoint).unwrap();
        let h = 1.0 / 40.0;
        for j in 0..40usize {
            if j.abs_diff(i) >= 10 {
                let t = (j as f64 + 0.5) * h;
                prop_assert!((moved.eval(t) - base.eval(t)).abs() < 0.01 * eps);
            }
        }
    }
}
