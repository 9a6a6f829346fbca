//! End-to-end orchestration: simulated tomography, phase learning,
//! reconstruction with optional extrapolation, and the scaling experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::DEFAULT_RTOL;
use crate::error::{Error, Result};
use crate::fisher::{crlb_report, fim_numeric};
use crate::numkit::{loglog_slope, Mat2c};
use crate::pulse::Pulse;
use crate::qsp::{coefficients_from_quadrant, estimate_phases, Direction, PhaseVector, SampleSet};
use crate::reconstruct::{error_report, reconstruct, richardson, Method, PointwiseRow, ReconstructedPulse};
use crate::seeds;
use crate::tomography::{drive_grid, exact_propagators, tomograph_suite, NoiseModel, ShotNoise, SuiteRecord};

const SPAM_TAG: u64 = 0x5350_414d;
const PERTURB_TAG: u64 = 0x5045_5254;
const SHOT_TAG: u64 = 0x5348_4f54;

/// Error below which a bias sweep is considered exact and no slope is fitted.
pub const ERROR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PulseSpec {
    Linear { slope: f64 },
    /// amplitude · Σ sin(f t) over the angular frequencies.
    Sinusoid { amplitude: f64, frequencies: Vec<f64> },
    Sin3pi,
    Biharmonic,
    Constant { value: f64 },
    PiecewiseConstant { values: Vec<f64> },
}

impl PulseSpec {
    pub fn build(&self, duration: f64) -> Pulse {
        match self {
            PulseSpec::Linear { slope } => Pulse::linear(*slope, duration),
            PulseSpec::Sinusoid { amplitude, frequencies } => Pulse::sinusoid(*amplitude, frequencies.clone(), duration),
            PulseSpec::Sin3pi => Pulse::sin3pi(duration),
            PulseSpec::Biharmonic => Pulse::biharmonic(duration),
            PulseSpec::Constant { value } => Pulse::constant(*value, duration),
            PulseSpec::PiecewiseConstant { values } => Pulse::piecewise_constant(values.clone(), duration),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub eta: f64,
    pub width: f64,
    #[serde(default = "default_perturb_segments")]
    pub segments: usize,
    /// Defaults to a stream derived from the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_perturb_segments() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub alpha: f64,
    pub delta: f64,
    pub symmetric_spam: bool,
    /// `None` means infinitely many shots.
    pub shots: Option<u64>,
    pub kind: ShotNoise,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { alpha: 1.0, delta: 0.0, symmetric_spam: false, shots: None, kind: ShotNoise::BernoulliCounts }
    }
}

impl NoiseSpec {
    pub fn realize<R: rand::Rng>(&self, rng: &mut R) -> NoiseModel {
        NoiseModel::with_random_spam(self.alpha, self.delta, self.symmetric_spam, self.shots, self.kind, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub pulse: PulseSpec,
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default = "one")]
    pub duration: f64,
    /// Surrogate degree L.
    pub segments: usize,
    /// Experiments per run at degree L; defaults to L + 1.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "yes")]
    pub apply_re: bool,
    #[serde(default = "stitched")]
    pub direction: Direction,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub repetitions: usize,
    #[serde(default = "default_grid")]
    pub n_grid: usize,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn stitched() -> Direction {
    Direction::Stitched
}
fn default_grid() -> usize {
    1000
}

impl PipelineConfig {
    pub fn new(pulse: PulseSpec, segments: usize) -> Self {
        PipelineConfig {
            pulse,
            perturbation: None,
            duration: 1.0,
            segments,
            samples: None,
            noise: NoiseSpec::default(),
            method: Method::default(),
            apply_re: true,
            direction: Direction::Stitched,
            seed: 0,
            repetitions: 1,
            n_grid: default_grid(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.segments < 4 {
            return bad(format!("segments must be at least 4, got {}", self.segments));
        }
        if let Some(n) = self.samples {
            if n <= self.segments {
                return bad(format!("samples ({n}) must exceed segments ({})", self.segments));
            }
        }
        if !(self.noise.alpha > 0.0 && self.noise.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.noise.alpha));
        }
        if !(self.noise.delta >= 0.0) {
            return bad(format!("delta must be nonnegative, got {}", self.noise.delta));
        }
        if self.noise.shots == Some(0) {
            return bad("shots must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be positive".into());
        }
        if let Some(p) = &self.perturbation {
            if p.segments == 0 || !(p.eta >= 0.0) || !(p.width > 0.0) {
                return bad(format!("invalid perturbation {p:?}"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        crate::io::config_hash(self)
    }

    /// The pulse actually driven, including any perturbation.
    pub fn truth(&self) -> Pulse {
        let base = self.pulse.build(self.duration);
        match &self.perturbation {
            Some(p) => {
                let seed = p.seed.unwrap_or_else(|| seeds::derive(self.seed, &[PERTURB_TAG]));
                base.perturb(seed, p.segments, p.eta, p.width)
            }
            None => base,
        }
    }

    /// Experiments at degree l, scaled from the configured count.
    pub fn samples_for(&self, l: usize) -> usize {
        match self.samples {
            Some(n) => n * l / self.segments,
            None => l + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub sup_interior: f64,
    pub sup_full: f64,
    pub mean_interior: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config_hash: String,
    pub seed: u64,
    /// Learned phases at degree L, one vector per repetition.
    pub phases: Vec<PhaseVector>,
    pub phase_mean: Vec<f64>,
    /// Sample standard deviation across repetitions (zeros for one).
    pub phase_std: Vec<f64>,
    /// Segment averages of the true pulse at degree L.
    pub truth_averages: Vec<f64>,
    pub errors: Vec<ErrorSummary>,
    /// Pointwise table of the first repetition.
    pub table: Vec<PointwiseRow>,
    pub estimate: ReconstructedPulse,
    /// Some Born probability had to be clamped before sampling.
    pub clamped: bool,
}

struct Level {
    degree: usize,
    thetas: Vec<f64>,
    omegas: Vec<f64>,
    exact: Vec<Mat2c>,
}

impl Level {
    fn prepare(truth: &Pulse, degree: usize, samples: usize) -> Self {
        let (thetas, omegas) = drive_grid(degree, truth.duration, samples);
        let exact = exact_propagators(truth, &omegas, DEFAULT_RTOL);
        Level { degree, thetas, omegas, exact }
    }
}

struct RepOutcome {
    phases: PhaseVector,
    estimate: ReconstructedPulse,
    clamped: bool,
}

/// Learn the surrogate phases from quadrant samples.
pub fn learn_phases(samples: &SampleSet, direction: Direction) -> Result<PhaseVector> {
    estimate_phases(&coefficients_from_quadrant(samples)?, direction)
}

fn level_record(config: &PipelineConfig, level: &Level, noise: &NoiseModel, rep: u64) -> Result<SuiteRecord> {
    let stream = seeds::derive(config.seed, &[SHOT_TAG, rep, level.degree as u64]);
    tomograph_suite(&level.exact, &level.thetas, &level.omegas, level.degree, noise, stream)
}

/// The degree-L tomography record of the first repetition, exactly as
/// `run` produces it.
pub fn tomography_record(config: &PipelineConfig) -> Result<SuiteRecord> {
    config.validate()?;
    let level = Level::prepare(&config.truth(), config.segments, config.samples_for(config.segments));
    let noise = config.noise.realize(&mut seeds::rng(config.seed, &[SPAM_TAG, 0]));
    level_record(config, &level, &noise, 0)
}

fn one_repetition(config: &PipelineConfig, levels: &[Level], rep: u64) -> Result<RepOutcome> {
    let noise = config.noise.realize(&mut seeds::rng(config.seed, &[SPAM_TAG, rep]));
    let mut estimates = Vec::with_capacity(levels.len());
    let mut phases = None;
    let mut clamped = false;
    for level in levels {
        let rec = level_record(config, level, &noise, rep)?;
        clamped |= rec.reference.clamped || rec.ptms.iter().any(|p| p.clamped);
        let psis = learn_phases(&rec.samples, config.direction)?;
        estimates.push(reconstruct(psis.as_slice(), config.duration, config.method)?);
        phases.get_or_insert(psis);
    }
    let estimate = match estimates.as_slice() {
        [coarse, fine] => richardson(coarse, fine)?,
        [only] => only.clone(),
        _ => unreachable!("one or two levels"),
    };
    Ok(RepOutcome { phases: phases.expect("at least one level"), estimate, clamped })
}

fn mean_std(rows: &[PhaseVector]) -> (Vec<f64>, Vec<f64>) {
    let l = rows[0].len();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..l).map(|j| rows.iter().map(|r| r.0[j]).sum::<f64>() / n).collect();
    let std = (0..l)
        .map(|j| {
            if rows.len() < 2 {
                return 0.0;
            }
            let ss: f64 = rows.iter().map(|r| (r.0[j] - mean[j]).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect();
    (mean, std)
}

/// Run the full workflow. Deterministic given the config (including seed).
pub fn run(config: &PipelineConfig) -> Result<RunResult> {
    config.validate()?;
    let truth = config.truth();
    let l = config.segments;
    let degrees: Vec<usize> = if config.apply_re { vec![l, 2 * l] } else { vec![l] };
    let levels: Vec<Level> = degrees.iter().map(|&d| Level::prepare(&truth, d, config.samples_for(d))).collect();
    let outcomes = (0..config.repetitions as u64)
        .into_par_iter()
        .map(|rep| one_repetition(config, &levels, rep))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<ErrorSummary> = outcomes
        .iter()
        .map(|o| {
            let r = error_report(&o.estimate, &truth, config.n_grid);
            ErrorSummary { sup_interior: r.sup_interior, sup_full: r.sup_full, mean_interior: r.mean_interior }
        })
        .collect();
    let table = error_report(&outcomes[0].estimate, &truth, config.n_grid).table;
    let phases: Vec<PhaseVector> = outcomes.iter().map(|o| o.phases.clone()).collect();
    let (phase_mean, phase_std) = mean_std(&phases);
    if outcomes.iter().any(|o| o.clamped) {
        log::warn!("some expectation values fell outside [-1, 1] and were clamped before sampling");
    }
    Ok(RunResult {
        config_hash: config.hash(),
        seed: config.seed,
        phases,
        phase_mean,
        phase_std,
        truth_averages: truth.segment_averages(l).values,
        errors,
        table,
        estimate: outcomes[0].estimate.clone(),
        clamped: outcomes.iter().any(|o| o.clamped),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasScaling {
    pub degrees: Vec<usize>,
    pub sup_interior: Vec<f64>,
    /// None when every error is at the numerical floor.
    pub slope: Option<f64>,
}

/// Interior sup error versus L with noiseless data.
pub fn bias_scaling_experiment(
    pulse: &PulseSpec,
    duration: f64,
    degrees: &[usize],
    method: Method,
    apply_re: bool,
) -> Result<BiasScaling> {
    let errs = degrees
        .par_iter()
        .map(|&l| {
            let mut cfg = PipelineConfig::new(pulse.clone(), l);
            cfg.duration = duration;
            cfg.method = method;
            cfg.apply_re = apply_re;
            Ok(run(&cfg)?.errors[0].sup_interior)
        })
        .collect::<Result<Vec<f64>>>()?;
    let slope = if errs.iter().all(|&e| e < ERROR_FLOOR) {
        None
    } else {
        let x: Vec<f64> = degrees.iter().map(|&l| l as f64).collect();
        Some(loglog_slope(&x, &errs))
    };
    Ok(BiasScaling { degrees: degrees.to_vec(), sup_interior: errs, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceStudy {
    /// Noiseless estimate the noisy ones scatter around.
    pub center: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Diagonal of the inverse FIM at the noiseless estimate.
    pub crlb: Vec<f64>,
}

/// Per-phase spread of the learned phases under Gaussian entry noise of
/// variance 1/M on the real and imaginary parts of W₀₀ and W₀₁.
pub fn variance_experiment(
    pulse: &PulseSpec,
    duration: f64,
    l: usize,
    shots: Option<u64>,
    reps: usize,
    seed: u64,
) -> Result<VarianceStudy> {
    let truth = pulse.build(duration);
    let level = Level::prepare(&truth, l, l + 1);
    let clean = tomograph_suite(&level.exact, &level.thetas, &level.omegas, l, &NoiseModel::ideal(), seed)?.samples;
    let center = learn_phases(&clean, Direction::Stitched)?;
    let Some(m) = shots else {
        let zeros = vec![0.0; l];
        return Ok(VarianceStudy { mean: center.0.clone(), center: center.0, std: zeros.clone(), crlb: zeros });
    };
    let sigma = 1.0 / (m as f64).sqrt();
    let runs = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut noisy = clean.clone();
            noisy.add_entry_noise(sigma, &mut seeds::rng(seed, &[SHOT_TAG, r]));
            learn_phases(&noisy, Direction::Stitched)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&runs);
    let fim = fim_numeric(center.as_slice(), &clean.thetas, m as f64);
    let crlb = crlb_report(&fim)?.variance_floor;
    Ok(VarianceStudy { center: center.0, mean, std, crlb })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_linear_pulse() {
        let cfg = PipelineConfig::new(PulseSpec::Linear { slope: 1.0 }, 16);
        let res = run(&cfg).unwrap();
        // The learned phases keep an O(1/L) edge layer that extrapolation
        // does not remove; L · error stays near 0.05 for this pulse.
        assert!(res.errors[0].sup_interior * 16.0 < 0.1, "{:?}", res.errors[0]);
        assert!(res.estimate.re_applied);
        assert_eq!(res.phase_std, vec![0.0; 16]);
    }

    #[test]
    fn deterministic_and_hashed() {
        let mut cfg = PipelineConfig::new(PulseSpec::Biharmonic, 8);
        cfg.noise = NoiseSpec { alpha: 0.9, delta: 0.01, shots: Some(10_000), ..NoiseSpec::default() };
        cfg.perturbation = Some(PerturbationSpec { eta: 0.5, width: 0.02, segments: 8, seed: None });
        cfg.repetitions = 3;
        cfg.seed = 9;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.phases, b.phases);
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
        cfg.seed = 10;
        assert_ne!(cfg.hash(), a.config_hash);
        assert!(a.phase_std.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn tomography_record_matches_run() {
        let mut cfg = PipelineConfig::new(PulseSpec::Sin3pi, 8);
        cfg.noise = NoiseSpec { alpha: 0.95, delta: 0.01, shots: Some(1000), ..NoiseSpec::default() };
        cfg.apply_re = false;
        let rec = tomography_record(&cfg).unwrap();
        let psis = learn_phases(&rec.samples, cfg.direction).unwrap();
        assert_eq!(psis, run(&cfg).unwrap().phases[0]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::new(PulseSpec::Sin3pi, 3);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        cfg.segments = 8;
        cfg.noise.alpha = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn constant_pulse_skips_slope() {
        let res = bias_scaling_experiment(&PulseSpec::Constant { value: 0.3 }, 1.0, &[8, 16], Method::DirectMidpoint, true)
            .unwrap();
        assert!(res.slope.is_none(), "{res:?}");
    }

    #[test]
    fn infinite_shots_have_no_spread() {
        let v = variance_experiment(&PulseSpec::Biharmonic, 1.0, 8, None, 5, 0).unwrap();
        assert!(v.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn doubling_shots_halves_variance() {
        let a = variance_experiment(&PulseSpec::Biharmonic, 1.0, 12, Some(10_000), 100, 1).unwrap();
        let b = variance_experiment(&PulseSpec::Biharmonic, 1.0, 12, Some(20_000), 100, 2).unwrap();
        let va: f64 = a.std.iter().map(|s| s * s).sum();
        let vb: f64 = b.std.iter().map(|s| s * s).sum();
        let ratio = va / vb;
        assert!((1.6..=2.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn config_roundtrips_through_json() {
        let mut cfg = PipelineConfig::new(PulseSpec::Sinusoid { amplitude: 1.0, frequencies: vec![3.0] }, 12);
        cfg.perturbation = Some(PerturbationSpec { eta: 0.5, width: 0.02, segments: 8, seed: Some(3) });
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
