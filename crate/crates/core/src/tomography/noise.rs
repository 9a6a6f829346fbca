use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numkit::Mat3r;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShotNoise {
    /// Each expectation estimated from M single-shot ±1 outcomes.
    #[default]
    BernoulliCounts,
    /// Additive N(0, 1/M) on each expectation.
    GaussianEntries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Depolarizing fidelity.
    pub alpha: f64,
    /// Preparation and measurement generators in PTM space.
    pub g_s: Mat3r,
    pub g_m: Mat3r,
    pub delta: f64,
    pub symmetric_diff: bool,
    /// `None` means infinitely many shots.
    pub shots: Option<u64>,
    pub kind: ShotNoise,
}

fn spectral_norm3(m: &Mat3r) -> f64 {
    m.singular_values().max()
}

fn random_scaled<R: Rng>(delta: f64, symmetric: bool, rng: &mut R) -> Mat3r {
    let mut g: Mat3r = Matrix3::from_fn(|_, _| rng.sample(StandardNormal));
    if symmetric {
        g = 0.5 * (g + g.transpose());
    }
    let n = spectral_norm3(&g);
    if n > 0.0 {
        g * (delta / n)
    } else {
        g
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        NoiseModel {
            alpha: 1.0,
            g_s: Mat3r::zeros(),
            g_m: Mat3r::zeros(),
            delta: 0.0,
            symmetric_diff: false,
            shots: None,
            kind: ShotNoise::BernoulliCounts,
        }
    }

    /// Random SPAM of spectral magnitude δ. In the symmetric variant a single
    /// symmetric generator G is drawn and g_M = −g_S = G, so the SPAM
    /// difference ½(g_M − g_S) = G is exactly symmetric.
    pub fn with_random_spam<R: Rng>(
        alpha: f64,
        delta: f64,
        symmetric: bool,
        shots: Option<u64>,
        kind: ShotNoise,
        rng: &mut R,
    ) -> Self {
        let (g_s, g_m) = if symmetric {
            let g = random_scaled(delta, true, rng);
            (-g, g)
        } else {
            let g_s = random_scaled(delta, false, rng);
            (g_s, random_scaled(delta, false, rng))
        };
        NoiseModel { alpha, g_s, g_m, delta, symmetric_diff: symmetric, shots, kind }
    }

    pub fn preparation(&self) -> Mat3r {
        self.g_s.exp()
    }

    pub fn measurement(&self) -> Mat3r {
        self.g_m.exp()
    }

    /// Standard deviation of one noisy expectation after dividing out α.
    pub fn entry_sigma(&self) -> f64 {
        match self.shots {
            Some(m) => 1.0 / (self.alpha * (m as f64).sqrt()),
            None => 0.0,
        }
    }
}
