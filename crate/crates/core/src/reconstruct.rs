//! Digital-to-analog conversion of learned phases into a smooth pulse.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{unwrap_phases, NaturalCubicSpline};
use crate::pulse::Pulse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Spline through the raw phases placed at cell midpoints.
    #[default]
    DirectMidpoint,
    /// Spline through fourth-order de-averaged midpoint values.
    RefinedMidpoint,
    /// Derivative of a spline through the cumulative phase.
    Differentiating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeAveraging {
    Second,
    Fourth,
}

const INTERIOR: [f64; 3] = [-1.0 / 24.0, 13.0 / 12.0, -1.0 / 24.0];
const EDGE4: [f64; 4] = [11.0 / 12.0, 5.0 / 24.0, -1.0 / 6.0, 1.0 / 24.0];
// Exact for quadratics; used only when three cells are available.
const EDGE3: [f64; 3] = [23.0 / 24.0, 1.0 / 12.0, -1.0 / 24.0];

/// Turn cell averages into point values at the cell midpoints.
pub fn de_average(raw: &[f64], order: DeAveraging) -> Result<Vec<f64>> {
    if order == DeAveraging::Second {
        return Ok(raw.to_vec());
    }
    let n = raw.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let edge: &[f64] = if n >= 4 { &EDGE4 } else { &EDGE3 };
    let dot = |idx: &mut dyn Iterator<Item = usize>, w: &[f64]| -> f64 { idx.zip(w).map(|(i, w)| w * raw[i]).sum() };
    let mut out = vec![0.0; n];
    out[0] = dot(&mut (0..edge.len()), edge);
    out[n - 1] = dot(&mut (0..edge.len()).map(|k| n - 1 - k), edge);
    for i in 1..n - 1 {
        out[i] = dot(&mut (i - 1..=i + 1), &INTERIOR);
    }
    Ok(out)
}

#[derive(Clone)]
enum Repr {
    Spline(NaturalCubicSpline),
    SplineDerivative(NaturalCubicSpline),
    Extrapolated { fine: Box<ReconstructedPulse>, coarse: Box<ReconstructedPulse> },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A continuous pulse estimate on [0, T].
#[derive(Clone)]
pub struct ReconstructedPulse {
    pub method: Method,
    /// Number of segments of the (finest) underlying phase data.
    pub segments: usize,
    pub duration: f64,
    pub re_applied: bool,
    repr: Repr,
}

impl fmt::Debug for ReconstructedPulse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReconstructedPulse")
            .field("method", &self.method)
            .field("segments", &self.segments)
            .field("duration", &self.duration)
            .field("re_applied", &self.re_applied)
            .finish()
    }
}

impl ReconstructedPulse {
    /// Wrap an arbitrary function, mainly for synthetic inputs.
    pub fn from_fn(
        method: Method,
        segments: usize,
        duration: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ReconstructedPulse { method, segments, duration, re_applied: false, repr: Repr::Function(Arc::new(f)) }
    }

    /// Arguments outside [0, T] are clamped.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        match &self.repr {
            Repr::Spline(s) => s.eval(t),
            Repr::SplineDerivative(s) => s.deriv(t),
            Repr::Extrapolated { fine, coarse } => 2.0 * fine.eval(t) - coarse.eval(t),
            Repr::Function(f) => f(t),
        }
    }
}

fn check_len(raw: &[f64]) -> Result<()> {
    if raw.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: raw.len() });
    }
    Ok(())
}

/// Cubic spline through de-averaged values at the cell midpoints.
pub fn reconstruct_midpoint(raw: &[f64], duration: f64, order: DeAveraging) -> Result<ReconstructedPulse> {
    check_len(raw)?;
    let l = raw.len();
    let h = duration / l as f64;
    let values = de_average(&unwrap_phases(raw), order)?;
    let mids: Vec<f64> = (0..l).map(|i| (i as f64 + 0.5) * h).collect();
    let method = match order {
        DeAveraging::Second => Method::DirectMidpoint,
        DeAveraging::Fourth => Method::RefinedMidpoint,
    };
    Ok(ReconstructedPulse {
        method,
        segments: l,
        duration,
        re_applied: false,
        repr: Repr::Spline(NaturalCubicSpline::new(&mids, &values)?),
    })
}

/// Derivative of a spline through the running integral h·Σψ.
pub fn reconstruct_differentiating(raw: &[f64], duration: f64) -> Result<ReconstructedPulse> {
    check_len(raw)?;
    let l = raw.len();
    let h = duration / l as f64;
    let knots: Vec<f64> = (0..=l).map(|j| j as f64 * h).collect();
    let mut cumulative = Vec::with_capacity(l + 1);
    cumulative.push(0.0);
    for v in unwrap_phases(raw) {
        cumulative.push(cumulative.last().unwrap() + h * v);
    }
    Ok(ReconstructedPulse {
        method: Method::Differentiating,
        segments: l,
        duration,
        re_applied: false,
        repr: Repr::SplineDerivative(NaturalCubicSpline::new(&knots, &cumulative)?),
    })
}

pub fn reconstruct(raw: &[f64], duration: f64, method: Method) -> Result<ReconstructedPulse> {
    match method {
        Method::DirectMidpoint => reconstruct_midpoint(raw, duration, DeAveraging::Second),
        Method::RefinedMidpoint => reconstruct_midpoint(raw, duration, DeAveraging::Fourth),
        Method::Differentiating => reconstruct_differentiating(raw, duration),
    }
}

/// 2·fine − coarse, where `fine` uses twice the segments of `coarse`.
pub fn richardson(coarse: &ReconstructedPulse, fine: &ReconstructedPulse) -> Result<ReconstructedPulse> {
    if fine.segments != 2 * coarse.segments {
        return Err(Error::MismatchedConfig(format!(
            "extrapolation needs L and 2L segments, got {} and {}",
            coarse.segments, fine.segments
        )));
    }
    if fine.method != coarse.method {
        return Err(Error::MismatchedConfig(format!("methods differ: {:?} vs {:?}", coarse.method, fine.method)));
    }
    if (fine.duration - coarse.duration).abs() > 1e-12 * fine.duration.abs().max(1.0) {
        return Err(Error::MismatchedConfig(format!("durations differ: {} vs {}", coarse.duration, fine.duration)));
    }
    Ok(ReconstructedPulse {
        method: fine.method,
        segments: fine.segments,
        duration: fine.duration,
        re_applied: true,
        repr: Repr::Extrapolated { fine: Box::new(fine.clone()), coarse: Box::new(coarse.clone()) },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRow {
    pub t: f64,
    pub phi_true: f64,
    pub phi_est: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub sup_interior: f64,
    pub sup_full: f64,
    pub mean_interior: f64,
    pub table: Vec<PointwiseRow>,
}

/// Compare an estimate with the true pulse on a uniform grid of at least
/// 100 points. The interior is [T/L, T − T/L] with L the estimate's
/// (coarsest) segment count.
pub fn error_report(est: &ReconstructedPulse, truth: &Pulse, n_grid: usize) -> ErrorReport {
    let n = n_grid.max(100);
    let t_end = est.duration;
    let l = if est.re_applied { est.segments / 2 } else { est.segments };
    let margin = t_end / l.max(1) as f64;
    let table: Vec<PointwiseRow> = (0..n)
        .map(|i| {
            let t = t_end * i as f64 / (n - 1) as f64;
            let (phi_true, phi_est) = (truth.value(t), est.eval(t));
            PointwiseRow { t, phi_true, phi_est, abs_err: (phi_est - phi_true).abs() }
        })
        .collect();
    let interior: Vec<f64> = table
        .iter()
        .filter(|r| r.t >= margin - 1e-12 && r.t <= t_end - margin + 1e-12)
        .map(|r| r.abs_err)
        .collect();
    ErrorReport {
        sup_interior: interior.iter().copied().fold(0.0, f64::max),
        sup_full: table.iter().map(|r| r.abs_err).fold(0.0, f64::max),
        mean_interior: if interior.is_empty() { 0.0 } else { interior.iter().sum::<f64>() / interior.len() as f64 },
        table,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::loglog_slope;
    use std::f64::consts::PI;

    fn averages(f: impl Fn(f64) -> f64, antiderivative: impl Fn(f64) -> f64, l: usize) -> Vec<f64> {
        let h = 1.0 / l as f64;
        let _ = f;
        (0..l).map(|i| (antiderivative((i + 1) as f64 * h) - antiderivative(i as f64 * h)) / h).collect()
    }

    fn sin3_averages(l: usize) -> Vec<f64> {
        averages(|t| (3.0 * PI * t).sin(), |t| -(3.0 * PI * t).cos() / (3.0 * PI), l)
    }

    #[test]
    fn constant_unchanged() {
        let out = de_average(&[0.7; 9], DeAveraging::Fourth).unwrap();
        assert!(out.iter().all(|v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn quadratic_and_cubic_midpoints_exact() {
        let l = 11;
        let h = 1.0 / l as f64;
        let q = averages(|t| 1.0 - 2.0 * t + 3.0 * t * t, |t| t - t * t + t * t * t, l);
        let out = de_average(&q, DeAveraging::Fourth).unwrap();
        for (i, v) in out.iter().enumerate() {
            let m = (i as f64 + 0.5) * h;
            assert!((v - (1.0 - 2.0 * m + 3.0 * m * m)).abs() < 1e-12);
        }
        // The one-sided edge stencil also reproduces cubics.
        let c = averages(|t| t * t * t, |t| t.powi(4) / 4.0, l);
        let out = de_average(&c, DeAveraging::Fourth).unwrap();
        for i in [0, l - 1] {
            let m = (i as f64 + 0.5) * h;
            assert!((out[i] - m.powi(3)).abs() < 1e-12);
        }
        let three = de_average(&q[..3], DeAveraging::Fourth).unwrap();
        assert!((three[0] - (1.0 - 2.0 * h / 2.0 + 3.0 * h * h / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn de_averaging_orders() {
        // Interior cells only: the edge stencil is exact for cubics and
        // converges faster than the interior one on this pulse.
        let ls = [16usize, 32, 64, 128, 256];
        let err = |order| -> Vec<f64> {
            ls.iter()
                .map(|&l| {
                    let out = de_average(&sin3_averages(l), order).unwrap();
                    out.iter()
                        .enumerate()
                        .take(l - 1)
                        .skip(1)
                        .map(|(i, v)| (v - (3.0 * PI * (i as f64 + 0.5) / l as f64).sin()).abs())
                        .fold(0.0, f64::max)
                })
                .collect()
        };
        let lf: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
        let s4 = loglog_slope(&lf, &err(DeAveraging::Fourth));
        let s2 = loglog_slope(&lf, &err(DeAveraging::Second));
        assert!((-4.5..=-3.5).contains(&s4), "{s4}");
        assert!((-2.5..=-1.5).contains(&s2), "{s2}");
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(de_average(&[1.0, 2.0], DeAveraging::Fourth), Err(Error::TooFewPoints { .. })));
        assert!(matches!(reconstruct_midpoint(&[1.0; 3], 1.0, DeAveraging::Second), Err(Error::TooFewPoints { .. })));
        assert!(matches!(reconstruct_differentiating(&[1.0; 3], 1.0), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn interior_stencil_sup_stability() {
        let raw: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let out = de_average(&raw, DeAveraging::Fourth).unwrap();
        for v in &out[1..19] {
            assert!(v.abs() <= 7.0 / 6.0 + 1e-15);
        }
    }

    #[test]
    fn linear_pulse_is_exact() {
        let raw = Pulse::linear(1.0, 1.0).segment_averages(10).values;
        let est = reconstruct_midpoint(&raw, 1.0, DeAveraging::Second).unwrap();
        let rep = error_report(&est, &Pulse::linear(1.0, 1.0), 200);
        assert!(rep.sup_interior < 1e-10, "{}", rep.sup_interior);
    }

    #[test]
    fn unwrap_invariance() {
        let mut raw = sin3_averages(16);
        let base = reconstruct_midpoint(&raw, 1.0, DeAveraging::Second).unwrap();
        raw[5] += 2.0 * PI;
        let wrapped = reconstruct_midpoint(&raw, 1.0, DeAveraging::Second).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            assert!((base.eval(t) - wrapped.eval(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn differentiating_constant() {
        let est = reconstruct_differentiating(&[0.4; 12], 2.0).unwrap();
        for i in 0..=40 {
            let t = 2.0 / 12.0 + i as f64 * (2.0 - 4.0 / 12.0) / 40.0;
            assert!((est.eval(t) - 0.4).abs() < 1e-10);
        }
    }

    #[test]
    fn differentiating_convergence_and_agreement() {
        let truth = Pulse::sin3pi(1.0);
        // Measured on a fixed window: the natural end condition forces
        // Ψ'' = 0 while here Ψ'' = φ' ≠ 0 at the ends, leaving an O(h)
        // boundary layer a few cells wide.
        let window_err = |est: &ReconstructedPulse| {
            (0..=2000)
                .map(|k| {
                    let t = 0.25 + 0.5 * k as f64 / 2000.0;
                    (est.eval(t) - truth.value(t)).abs()
                })
                .fold(0.0, f64::max)
        };
        let ls = [16usize, 32, 64, 128];
        let errs: Vec<f64> =
            ls.iter().map(|&l| window_err(&reconstruct_differentiating(&sin3_averages(l), 1.0).unwrap())).collect();
        let lf: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
        let slope = loglog_slope(&lf, &errs);
        assert!((-3.5..=-2.5).contains(&slope), "{slope}");
        let raw = sin3_averages(64);
        let a = reconstruct_differentiating(&raw, 1.0).unwrap();
        let b = reconstruct_midpoint(&raw, 1.0, DeAveraging::Fourth).unwrap();
        for i in 0..=100 {
            let t = 0.25 + 0.5 * i as f64 / 100.0;
            assert!((a.eval(t) - b.eval(t)).abs() < 1e-3);
        }
    }

    #[test]
    fn richardson_cancels_linear_bias() {
        let f = |t: f64| (2.0 * t).cos();
        let b = |t: f64| 1.0 + t * t;
        let coarse = ReconstructedPulse::from_fn(Method::DirectMidpoint, 10, 1.0, move |t| f(t) + b(t) / 10.0);
        let fine = ReconstructedPulse::from_fn(Method::DirectMidpoint, 20, 1.0, move |t| f(t) + b(t) / 20.0);
        let re = richardson(&coarse, &fine).unwrap();
        assert!(re.re_applied);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((re.eval(t) - f(t)).abs() < 1e-14);
        }
        assert!(matches!(richardson(&coarse, &coarse), Err(Error::MismatchedConfig(_))));
    }

    #[test]
    fn richardson_of_identical_inputs_is_identity() {
        let g = ReconstructedPulse::from_fn(Method::DirectMidpoint, 8, 1.0, |t| t.sin());
        let g2 = ReconstructedPulse { segments: 16, ..g.clone() };
        let re = richardson(&g, &g2).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((re.eval(t) - t.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_estimate_has_zero_error() {
        let truth = Pulse::biharmonic(1.0);
        let t2 = truth.clone();
        let est = ReconstructedPulse::from_fn(Method::DirectMidpoint, 8, 1.0, move |t| t2.value(t));
        let rep = error_report(&est, &truth, 50);
        assert_eq!(rep.table.len(), 100);
        assert_eq!(rep.sup_full, 0.0);
    }

    #[test]
    fn spline_locality() {
        let l = 40;
        let raw = sin3_averages(l);
        let base = reconstruct_midpoint(&raw, 1.0, DeAveraging::Second).unwrap();
        let mut bumped = raw.clone();
        let eps = 1e-3;
        bumped[5] += eps;
        let moved = reconstruct_midpoint(&bumped, 1.0, DeAveraging::Second).unwrap();
        for j in 15..l {
            let t = (j as f64 + 0.5) / l as f64;
            assert!((moved.eval(t) - base.eval(t)).abs() < 0.01 * eps);
        }
    }
}
