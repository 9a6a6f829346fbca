//! Small numerical kernel: SU(2)/SO(3) conversions, the midpoint-grid
//! Fourier transform, natural cubic splines and quadrature.

pub mod fourier;
pub mod quad;
pub mod rotation;
pub mod slope;
pub mod spline;
pub mod su2;

pub use fourier::{eval_symmetric, midpoint_grid, midpoint_idft, signed_frequency, wrap_index};
pub use quad::{gauss_legendre, integrate};
pub use rotation::{polar3, quat_from_rotation, rotation_of, su2_from_quat, sym_inv_sqrt, Mat3r, Quaternion};
pub use slope::loglog_slope;
pub use spline::{solve_tridiagonal, NaturalCubicSpline};
pub use su2::{
    cplx, frob_inner, frob_norm_sq, identity, pauli_x, pauli_y, pauli_z, paulis, project_su2, reunitarize,
    spectral_norm, su2_exp, su2_log, unitarity_defect, wrap_angle, Mat2c, C64,
};

/// Remove 2π jumps between neighbours.
pub fn unwrap_phases(raw: &[f64]) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &v) in raw.iter().enumerate() {
        if i > 0 {
            let prev = raw[i - 1];
            let d = v - prev;
            if d > PI {
                offset -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
            } else if d < -PI {
                offset += 2.0 * PI * ((-d + PI) / (2.0 * PI)).floor();
            }
        }
        out.push(v + offset);
    }
    out
}
