use rayon::prelude::*;

use super::{
    align_signs_predictive, reference_asymmetry, robust_reconstruct, simulate_expectations, NoiseModel, Ptm,
    ASYMMETRY_WARN,
};
use crate::dynamics::{propagate, DEFAULT_RTOL};
use crate::error::{Error, Result};
use crate::numkit::Mat2c;
use crate::pulse::Pulse;
use crate::qsp::{quadrant_grid, SampleSet};
use crate::seeds;

const REFERENCE_TAG: u64 = u64::MAX;

/// Everything produced by one simulated tomography run.
#[derive(Debug, Clone)]
pub struct SuiteRecord {
    pub omegas: Vec<f64>,
    pub reference: Ptm,
    pub ptms: Vec<Ptm>,
    /// Reconstructions before sign alignment.
    pub raw: Vec<Mat2c>,
    pub samples: SampleSet,
}

/// Drive amplitudes ω_j = θ_j L / T on the n-point quadrant grid.
pub fn drive_grid(l: usize, duration: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let thetas = quadrant_grid(n);
    let omegas = thetas.iter().map(|t| t * l as f64 / duration).collect();
    (thetas, omegas)
}

/// Noise-free propagators over the full pulse at each drive amplitude.
pub fn exact_propagators(p: &Pulse, omegas: &[f64], rtol: f64) -> Vec<Mat2c> {
    omegas.par_iter().map(|&w| propagate(p, w, 0.0, p.duration, rtol)).collect()
}

/// Corrupt, tomograph and reconstruct each supplied propagator, then align
/// signs. Each experiment draws from its own stream derived from `seed`.
pub fn tomograph_suite(
    exact: &[Mat2c],
    thetas: &[f64],
    omegas: &[f64],
    degree: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<SuiteRecord> {
    if exact.len() != thetas.len() || thetas.len() != omegas.len() {
        return Err(Error::GridMismatch(format!(
            "{} propagators, {} angles, {} amplitudes",
            exact.len(),
            thetas.len(),
            omegas.len()
        )));
    }
    let reference = simulate_expectations(&Mat2c::identity(), noise, &mut seeds::rng(seed, &[REFERENCE_TAG]));
    let ptms: Vec<Ptm> = exact
        .par_iter()
        .enumerate()
        .map(|(j, u)| simulate_expectations(u, noise, &mut seeds::rng(seed, &[j as u64])))
        .collect();
    let asym = reference_asymmetry(&reference);
    if asym > ASYMMETRY_WARN {
        log::warn!("reference PTM block has antisymmetric residue {asym:.3e}; the sandwich discards it");
    }
    let raw = ptms.iter().map(|t| robust_reconstruct(t, &reference)).collect::<Result<Vec<_>>>()?;
    let unitaries = align_signs_predictive(thetas, &raw);
    let samples = SampleSet { thetas: thetas.to_vec(), unitaries, degree, noise_sigma: noise.entry_sigma() };
    Ok(SuiteRecord { omegas: omegas.to_vec(), reference, ptms, raw, samples })
}

/// One full simulated experiment on the L+1 point grid.
pub fn run_experiment_suite(p: &Pulse, l: usize, noise: &NoiseModel, seed: u64) -> Result<SampleSet> {
    let (thetas, omegas) = drive_grid(l, p.duration, l + 1);
    let exact = exact_propagators(p, &omegas, DEFAULT_RTOL);
    Ok(tomograph_suite(&exact, &thetas, &omegas, l, noise, seed)?.samples)
}
