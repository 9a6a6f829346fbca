use crate::numkit::{spectral_norm, su2_exp, su2_log, Mat2c};

fn nearest_sign(u: &Mat2c, target: &Mat2c) -> Mat2c {
    if spectral_norm(&(u - target)) <= spectral_norm(&(u + target)) {
        *u
    } else {
        -u
    }
}

/// Greedy sign alignment anchored at the first element: flip Û_i whenever
/// ‖Û_i − V_{i−1}‖₂ ≥ 1.
///
/// Reliable only when consecutive propagators differ by less than 1 in
/// spectral norm, i.e. the frequency step times the duration is at most ½.
pub fn align_signs(omegas: &[f64], unitaries: &[Mat2c]) -> Vec<Mat2c> {
    assert_eq!(omegas.len(), unitaries.len());
    let mut out: Vec<Mat2c> = Vec::with_capacity(unitaries.len());
    for u in unitaries {
        let v = match out.last() {
            Some(prev) if spectral_norm(&(u - prev)) >= 1.0 => -u,
            _ => *u,
        };
        out.push(v);
    }
    out
}

/// Sign alignment by continuation from the identity at θ = 0.
///
/// Each sample's sign is chosen nearest to a geodesic extrapolation of the
/// two previously aligned samples, so it tolerates steps well above the
/// greedy threshold. `thetas` must be increasing and positive.
pub fn align_signs_predictive(thetas: &[f64], unitaries: &[Mat2c]) -> Vec<Mat2c> {
    assert_eq!(thetas.len(), unitaries.len());
    let mut pts: Vec<(f64, Mat2c)> = vec![(0.0, Mat2c::identity())];
    for (&theta, u) in thetas.iter().zip(unitaries) {
        let (t1, v1) = pts[pts.len() - 1];
        let guess = if pts.len() >= 2 {
            let (t0, v0) = pts[pts.len() - 2];
            let step = v1 * v0.adjoint();
            match su2_log(&step) {
                Ok(g) => {
                    let s = (theta - t1) / (t1 - t0);
                    su2_exp([g[0] * s, g[1] * s, g[2] * s]) * v1
                }
                Err(_) => v1,
            }
        } else {
            v1
        };
        pts.push((theta, nearest_sign(u, &guess)));
    }
    pts.into_iter().skip(1).map(|(_, v)| v).collect()
}
