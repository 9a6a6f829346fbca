//! Control-phase functions φ(t) on [0, T].

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PulseKind {
    /// φ(t) = slope·t.
    Linear { slope: f64 },
    /// φ(t) = amplitude·Σ_k sin(f_k t), with angular frequencies f_k.
    Sinusoid { amplitude: f64, frequencies: Vec<f64> },
    /// φ(t) = ½(sin 2πt + sin 4πt).
    Biharmonic,
    /// Equal-width steps covering [0, T].
    PiecewiseConstant { values: Vec<f64> },
    Perturbed { base: Box<Pulse>, table: Arc<PerturbationTable> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub kind: PulseKind,
    pub duration: f64,
    /// Smoothness scale β; informational only.
    pub beta_hint: Option<f64>,
}

/// Smoothed random perturbation sampled on a uniform grid over [0, T].
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTable {
    pub seed: u64,
    pub segments: usize,
    pub eta: f64,
    pub width: f64,
    step: f64,
    values: Vec<f64>,
    /// Running trapezoid integral at each grid point.
    cumulative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAverages {
    pub values: Vec<f64>,
    pub h: f64,
}

impl Pulse {
    fn with_kind(kind: PulseKind, duration: f64) -> Self {
        Self { kind, duration, beta_hint: None }
    }

    pub fn linear(slope: f64, duration: f64) -> Self {
        let mut p = Self::with_kind(PulseKind::Linear { slope }, duration);
        p.beta_hint = Some(slope.abs());
        p
    }

    pub fn sinusoid(amplitude: f64, frequencies: Vec<f64>, duration: f64) -> Self {
        let beta = frequencies.iter().fold(0.0f64, |m, f| m.max(f.abs()));
        let mut p = Self::with_kind(PulseKind::Sinusoid { amplitude, frequencies }, duration);
        p.beta_hint = Some(beta);
        p
    }

    /// sin(3πt), the pulse used for the bias-scaling study.
    pub fn sin3pi(duration: f64) -> Self {
        Self::sinusoid(1.0, vec![3.0 * PI], duration)
    }

    pub fn biharmonic(duration: f64) -> Self {
        let mut p = Self::with_kind(PulseKind::Biharmonic, duration);
        p.beta_hint = Some(4.0 * PI);
        p
    }

    pub fn piecewise_constant(values: Vec<f64>, duration: f64) -> Self {
        assert!(!values.is_empty(), "piecewise-constant pulse needs at least one value");
        Self::with_kind(PulseKind::PiecewiseConstant { values }, duration)
    }

    pub fn constant(value: f64, duration: f64) -> Self {
        Self::piecewise_constant(vec![value], duration)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.duration.max(1.0);
        if !(t >= -slack && t <= self.duration + slack) {
            return Err(Error::OutOfDomain { t, duration: self.duration });
        }
        Ok(self.value(t))
    }

    /// φ(t) with t clamped into the domain.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        match &self.kind {
            PulseKind::Linear { slope } => slope * t,
            PulseKind::Sinusoid { amplitude, frequencies } => {
                amplitude * frequencies.iter().map(|f| (f * t).sin()).sum::<f64>()
            }
            PulseKind::Biharmonic => 0.5 * ((2.0 * PI * t).sin() + (4.0 * PI * t).sin()),
            PulseKind::PiecewiseConstant { values } => {
                let n = values.len();
                let idx = ((t / self.duration) * n as f64).floor() as usize;
                values[idx.min(n - 1)]
            }
            PulseKind::Perturbed { base, table } => base.value(t) + table.value(t),
        }
    }

    /// ∫_a^b φ(t) dt in closed form, a ≤ b within the domain.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            PulseKind::Linear { slope } => 0.5 * slope * (b * b - a * a),
            PulseKind::Sinusoid { amplitude, frequencies } => {
                amplitude
                    * frequencies
                        .iter()
                        .map(|&f| if f == 0.0 { 0.0 } else { ((f * a).cos() - (f * b).cos()) / f })
                        .sum::<f64>()
            }
            PulseKind::Biharmonic => {
                let anti = |t: f64| -0.5 * ((2.0 * PI * t).cos() / (2.0 * PI) + (4.0 * PI * t).cos() / (4.0 * PI));
                anti(b) - anti(a)
            }
            PulseKind::PiecewiseConstant { values } => {
                let n = values.len();
                let w = self.duration / n as f64;
                values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let lo = (i as f64 * w).max(a);
                        let hi = ((i + 1) as f64 * w).min(b);
                        if hi > lo { v * (hi - lo) } else { 0.0 }
                    })
                    .sum()
            }
            PulseKind::Perturbed { base, table } => base.integral(a, b) + table.antiderivative(b) - table.antiderivative(a),
        }
    }

    /// Per-segment means of φ over L equal cells.
    pub fn segment_averages(&self, segments: usize) -> SegmentAverages {
        let h = self.duration / segments as f64;
        let values = (0..segments)
            .map(|j| self.integral(j as f64 * h, (j + 1) as f64 * h) / h)
            .collect();
        SegmentAverages { values, h }
    }

    /// Add a smoothed piecewise-constant random perturbation: one uniform
    /// draw in [−η, η] per coarse segment, convolved with a Gaussian of
    /// standard deviation `width` truncated at ±4·width.
    pub fn perturb(&self, seed: u64, segments: usize, eta: f64, width: f64) -> Pulse {
        let table = PerturbationTable::new(self.duration, seed, segments, eta, width);
        Pulse {
            kind: PulseKind::Perturbed { base: Box::new(self.clone()), table: Arc::new(table) },
            duration: self.duration,
            beta_hint: self.beta_hint,
        }
    }
}

impl PerturbationTable {
    pub fn new(duration: f64, seed: u64, segments: usize, eta: f64, width: f64) -> Self {
        assert!(segments >= 1 && eta >= 0.0 && width > 0.0, "invalid perturbation parameters");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coarse: Vec<f64> = (0..segments)
            .map(|_| if eta > 0.0 { rng.gen_range(-eta..=eta) } else { 0.0 })
            .collect();
        let points = 1000.max(20 * segments);
        let step = duration / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|g| g as f64 * step).collect();
        let raw: Vec<f64> = grid
            .iter()
            .map(|&t| coarse[((t / duration * segments as f64).floor() as usize).min(segments - 1)])
            .collect();
        let reach = (4.0 * width / step).floor() as isize;
        let kernel: Vec<f64> = (-reach..=reach)
            .map(|o| {
                let s = o as f64 * step;
                (-0.5 * s * s / (width * width)).exp()
            })
            .collect();
        let values: Vec<f64> = (0..points as isize)
            .map(|g| {
                let (mut acc, mut norm) = (0.0, 0.0);
                for (ki, o) in (-reach..=reach).enumerate() {
                    let idx = g + o;
                    if idx >= 0 && idx < points as isize {
                        acc += kernel[ki] * raw[idx as usize];
                        norm += kernel[ki];
                    }
                }
                acc / norm
            })
            .collect();
        let mut cumulative = vec![0.0; points];
        for g in 1..points {
            cumulative[g] = cumulative[g - 1] + 0.5 * step * (values[g - 1] + values[g]);
        }
        Self { seed, segments, eta, width, step, values, cumulative }
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.values.len();
        let x = (t / self.step).max(0.0);
        let i = (x.floor() as usize).min(n - 2);
        (i, (x - i as f64).min(1.0))
    }

    pub fn value(&self, t: f64) -> f64 {
        let (i, f) = self.locate(t);
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    fn antiderivative(&self, t: f64) -> f64 {
        let (i, f) = self.locate(t);
        let v = self.values[i] * (1.0 - f) + self.values[i + 1] * f;
        self.cumulative[i] + 0.5 * f * self.step * (self.values[i] + v)
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::integrate;

    #[test]
    fn family_values() {
        assert_eq!(Pulse::linear(1.0, 1.0).eval(0.5).unwrap(), 0.5);
        assert_eq!(Pulse::biharmonic(1.0).eval(0.0).unwrap(), 0.0);
        assert!((Pulse::sin3pi(1.0).eval(1.0 / 6.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_domain() {
        let p = Pulse::linear(1.0, 2.0);
        assert!(matches!(p.eval(2.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(p.eval(-0.1), Err(Error::OutOfDomain { .. })));
        assert!(p.eval(2.0).is_ok());
    }

    #[test]
    fn constant_averages() {
        let s = Pulse::constant(0.37, 2.0).segment_averages(7);
        assert!(s.values.iter().all(|v| (v - 0.37).abs() < 1e-15));
        assert!((s.h - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn linear_averages_are_midpoints() {
        let l = 9;
        let s = Pulse::linear(1.7, 1.0).segment_averages(l);
        for (j, v) in s.values.iter().enumerate() {
            let mid = 1.7 * (j as f64 + 0.5) / l as f64;
            assert!((v - mid).abs() < 1e-14);
        }
    }

    #[test]
    fn sin3pi_first_quarter_average() {
        let s = Pulse::sin3pi(1.0).segment_averages(4);
        let expected = 4.0 / (3.0 * PI) * (1.0 - (0.75 * PI).cos());
        assert!((s.values[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let pulses = [
            Pulse::biharmonic(1.0),
            Pulse::sinusoid(0.8, vec![2.0, 5.5], 1.3),
            Pulse::piecewise_constant(vec![0.1, -0.4, 0.9], 1.0),
            Pulse::sin3pi(1.0).perturb(3, 10, 0.5, 0.02),
        ];
        for p in &pulses {
            let (a, b) = (0.13 * p.duration, 0.71 * p.duration);
            let q = integrate(&|t| p.value(t), a, b, 1e-13);
            assert!((p.integral(a, b) - q).abs() < 1e-9, "{:?}", p.kind);
        }
    }

    #[test]
    fn averages_converge_to_midpoint_values_quadratically() {
        let p = Pulse::biharmonic(1.0);
        let err = |l: usize| {
            let s = p.segment_averages(l);
            s.values
                .iter()
                .enumerate()
                .map(|(j, v)| (v - p.value((j as f64 + 0.5) * s.h)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn zero_amplitude_perturbation_is_identity() {
        let base = Pulse::sin3pi(1.0);
        let p = base.perturb(11, 20, 0.0, 0.02);
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            assert_eq!(p.value(t), base.value(t));
        }
    }

    #[test]
    fn perturbation_is_bounded_and_deterministic() {
        let base = Pulse::biharmonic(1.0);
        let a = base.perturb(42, 20, 0.5, 0.02);
        let b = base.perturb(42, 20, 0.5, 0.02);
        assert_eq!(a, b);
        if let PulseKind::Perturbed { table, .. } = &a.kind {
            assert!(table.sup_norm() <= 0.5);
            assert!(table.sup_norm() > 0.05);
            assert_eq!(table.grid_values().len(), 1000);
        } else {
            panic!("expected a perturbed pulse");
        }
        let c = base.perturb(43, 20, 0.5, 0.02);
        assert_ne!(a, c);
    }

    #[test]
    fn smoothing_reduces_jumps() {
        // Width much larger than the coarse cells averages the draws out.
        let p = Pulse::constant(0.0, 1.0).perturb(5, 50, 0.5, 0.1);
        let q = Pulse::constant(0.0, 1.0).perturb(5, 50, 0.5, 0.001);
        let sup = |p: &Pulse| (0..=400).map(|i| p.value(i as f64 / 400.0).abs()).fold(0.0, f64::max);
        assert!(sup(&p) < sup(&q));
    }
}
