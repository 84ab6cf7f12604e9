#![allow(dead_code)]

use num_complex::Complex64;
use pwsplit::sim::{synthesize_measurements, ReflectionConfig, ScenarioConfig, Synthesized};
use pwsplit::{Geometry, Spectrum, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spectrum(rng: &mut ChaCha8Rng, m: usize, period: f64) -> Spectrum {
    let grid = TimeGrid::new(m, period).unwrap().frequency_grid();
    Spectrum::new(
        (0..m)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
        grid,
    )
    .unwrap()
}

/// Spectrum of a random real signal.
pub fn random_real_spectrum(rng: &mut ChaCha8Rng, m: usize, period: f64) -> Spectrum {
    random_spectrum(rng, m, period).symmetrized()
}

pub fn three_points() -> Geometry {
    Geometry::new(vec![0.0, 0.09, 0.15]).unwrap()
}

pub fn scenario(points: usize, u: f64, delta: f64, seed: u64) -> Synthesized {
    synthesize_measurements(
        &ScenarioConfig::standard(points, u, delta, seed).unwrap(),
        &ReflectionConfig::default(),
    )
    .unwrap()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
