//! Synthetic measurements: a smooth forward-wave template, a backward wave
//! built from delayed and attenuated reflections, and noise injected at an
//! exact relative level.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{apply_f, Geometry, MeasurementSet, Pwv, SplitState};
use crate::spectral::{forward_dft_real, weighted_norm_sq, Spectrum, TimeGrid};

/// `sin³(2πt) + 0.3 sin²(2πt + 1)` on the normalized cycle `t ∈ [0, 1)`.
pub fn template_value(t: f64) -> f64 {
    let a = (2.0 * std::f64::consts::PI * t).sin();
    let b = (2.0 * std::f64::consts::PI * t + 1.0).sin();
    a * a * a + 0.3 * b * b
}

/// Template sampled at `t = j/m` and shifted to zero sample mean.
pub fn forward_wave_template(grid: &TimeGrid) -> Vec<f64> {
    let m = grid.len();
    let raw: Vec<f64> = (0..m).map(|j| template_value(j as f64 / m as f64)).collect();
    let mean = raw.iter().sum::<f64>() / m as f64;
    raw.into_iter().map(|v| v - mean).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflector {
    /// Distance beyond the last measurement point, in metres.
    pub distance: f64,
    pub attenuation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionConfig {
    reflectors: Vec<Reflector>,
}

impl Default for ReflectionConfig {
    fn default() -> Self {
        Self {
            reflectors: [(0.02, 0.5), (0.05, 0.3), (0.08, 0.2)]
                .into_iter()
                .map(|(distance, attenuation)| Reflector { distance, attenuation })
                .collect(),
        }
    }
}

impl ReflectionConfig {
    /// A distance of zero places the reflector at the last measurement point.
    pub fn new(reflectors: Vec<Reflector>) -> Result<Self> {
        if reflectors.is_empty() {
            return Err(Error::Config("at least one reflector is required".into()));
        }
        for r in &reflectors {
            if !(r.distance.is_finite() && r.distance >= 0.0) {
                return Err(Error::Config(format!(
                    "reflector distance must be finite and nonnegative, got {}",
                    r.distance
                )));
            }
            if !(r.attenuation > 0.0 && r.attenuation <= 1.0) {
                return Err(Error::Config(format!(
                    "reflector attenuation must lie in (0, 1], got {}",
                    r.attenuation
                )));
            }
        }
        Ok(Self { reflectors })
    }

    pub fn reflectors(&self) -> &[Reflector] {
        &self.reflectors
    }
}

/// `Σ_j a_j e^{−iω·2d_j/u} e^{−iωL_N/u} p̂_1f(ω)`.
pub fn build_backward_wave(
    forward: &Spectrum,
    reflections: &ReflectionConfig,
    u: Pwv,
    geometry: &Geometry,
) -> Spectrum {
    let at_last = forward.delayed(geometry.total_length() / u.get());
    let mut out = Spectrum::zeros(forward.grid());
    for r in reflections.reflectors() {
        let echo = at_last.delayed(2.0 * r.distance / u.get());
        for (o, e) in out.values_mut().iter_mut().zip(echo.values()) {
            *o += r.attenuation * e;
        }
    }
    out
}

/// Interior measurement positions for the standard 0.15 m segment.
pub fn preset_distances(points: usize) -> Result<Vec<f64>> {
    match points {
        2 => Ok(vec![0.0, 0.15]),
        3 => Ok(vec![0.0, 0.09, 0.15]),
        5 => Ok(vec![0.0, 0.04, 0.09, 0.12, 0.15]),
        n => Err(Error::Config(format!(
            "no preset geometry for {n} points; give distances explicitly"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub distances: Vec<f64>,
    pub true_pwv: f64,
    pub period: f64,
    pub samples: usize,
    /// Relative noise level per channel.
    pub delta: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Preset geometry, one 0.75 s cycle sampled 500 times.
    pub fn standard(points: usize, true_pwv: f64, delta: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            distances: preset_distances(points)?,
            true_pwv,
            period: 0.75,
            samples: 500,
            delta,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        Geometry::new(self.distances.clone())?;
        Pwv::new(self.true_pwv)?;
        TimeGrid::new(self.samples, self.period)?;
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!(
                "noise level must lie in [0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub noisy: MeasurementSet,
    pub clean: MeasurementSet,
    pub truth: SplitState,
}

/// Adds conjugate-symmetric complex Gaussian noise scaled so that
/// `‖noisy − clean‖ / ‖clean‖ = delta` holds exactly.
pub fn add_relative_noise(clean: &Spectrum, delta: f64, rng: &mut ChaCha20Rng) -> Spectrum {
    if delta == 0.0 {
        return clean.clone();
    }
    let grid = clean.grid();
    let raw: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let noise = Spectrum::new(raw, grid.clone())
        .expect("noise has the grid length")
        .symmetrized();
    let noise_sq = weighted_norm_sq(&noise, 0.0);
    let clean_sq = weighted_norm_sq(clean, 0.0);
    if noise_sq == 0.0 || clean_sq == 0.0 {
        return clean.clone();
    }
    let scale = delta * (clean_sq / noise_sq).sqrt();
    let mut out = clean.clone();
    for (o, n) in out.values_mut().iter_mut().zip(noise.values()) {
        *o += scale * n;
    }
    out
}

pub fn synthesize_measurements(scenario: &ScenarioConfig, reflections: &ReflectionConfig) -> Result<Synthesized> {
    scenario.validate()?;
    let geometry = Geometry::new(scenario.distances.clone())?;
    let u = Pwv::new(scenario.true_pwv)?;
    let time = TimeGrid::new(scenario.samples, scenario.period)?;
    let forward = forward_dft_real(&forward_wave_template(&time), &time)?;
    let backward = build_backward_wave(&forward, reflections, u, &geometry);
    let truth = SplitState::new(forward, backward, u)?;
    let channels = apply_f(&truth, &geometry)?;
    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    let noisy_channels = channels
        .iter()
        .map(|c| add_relative_noise(c, scenario.delta, &mut rng))
        .collect();
    Ok(Synthesized {
        noisy: MeasurementSet::new(noisy_channels, geometry.clone(), Some(scenario.delta))?,
        clean: MeasurementSet::new(channels, geometry, Some(0.0))?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inverse_dft_real, weighted_norm};

    fn standard(points: usize, u: f64, delta: f64, seed: u64) -> Synthesized {
        synthesize_measurements(
            &ScenarioConfig::standard(points, u, delta, seed).unwrap(),
            &ReflectionConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn template_has_zero_mean_and_known_start() {
        let grid = TimeGrid::new(500, 0.75).unwrap();
        let p = forward_wave_template(&grid);
        assert!((p.iter().sum::<f64>() / 500.0).abs() < 1e-14);
        let expected = 0.3 * 1f64.sin().powi(2);
        assert!((template_value(0.0) - expected).abs() < 1e-15);
        assert!((expected - 0.212422).abs() < 1e-6);
        // wrap-around: the sample before t = 0 continues the same curve
        let m = 500.0;
        let shift = template_value(0.0) - p[0];
        assert!((p[499] + shift - template_value(-1.0 / m)).abs() < 1e-14);
    }

    #[test]
    fn reflector_validation() {
        let r = |distance, attenuation| Reflector { distance, attenuation };
        assert!(ReflectionConfig::new(vec![]).is_err());
        assert!(ReflectionConfig::new(vec![r(-0.1, 0.5)]).is_err());
        assert!(ReflectionConfig::new(vec![r(0.1, 0.0)]).is_err());
        assert!(ReflectionConfig::new(vec![r(0.1, 1.5)]).is_err());
        assert!(ReflectionConfig::new(vec![r(0.0, 1.0)]).is_ok());
    }

    #[test]
    fn degenerate_reflector_is_a_pure_delay() {
        let time = TimeGrid::new(64, 0.75).unwrap();
        let fwd = forward_dft_real(&forward_wave_template(&time), &time).unwrap();
        let geometry = Geometry::new(vec![0.0, 0.15]).unwrap();
        let u = Pwv::new(3.0).unwrap();
        let one = ReflectionConfig::new(vec![Reflector { distance: 0.0, attenuation: 1.0 }]).unwrap();
        let half = ReflectionConfig::new(vec![Reflector { distance: 0.0, attenuation: 0.5 }]).unwrap();
        let b = build_backward_wave(&fwd, &one, u, &geometry);
        let d = fwd.delayed(0.05);
        for (x, y) in b.values().iter().zip(d.values()) {
            assert!((x - y).norm() < 1e-12);
        }
        let bh = build_backward_wave(&fwd, &half, u, &geometry);
        assert!((weighted_norm(&bh, 0.0) - 0.5 * weighted_norm(&b, 0.0)).abs() < 1e-12 * weighted_norm(&b, 0.0));
    }

    #[test]
    fn reflections_superpose() {
        let time = TimeGrid::new(80, 0.75).unwrap();
        let fwd = forward_dft_real(&forward_wave_template(&time), &time).unwrap();
        let geometry = Geometry::new(vec![0.0, 0.09, 0.15]).unwrap();
        let u = Pwv::new(4.0).unwrap();
        let a = Reflector { distance: 0.03, attenuation: 0.4 };
        let b = Reflector { distance: 0.07, attenuation: 0.25 };
        let both = build_backward_wave(&fwd, &ReflectionConfig::new(vec![a, b]).unwrap(), u, &geometry);
        let sa = build_backward_wave(&fwd, &ReflectionConfig::new(vec![a]).unwrap(), u, &geometry);
        let sb = build_backward_wave(&fwd, &ReflectionConfig::new(vec![b]).unwrap(), u, &geometry);
        let sum = sa.add(&sb).unwrap();
        for (x, y) in both.values().iter().zip(sum.values()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn backward_wave_is_bounded_by_total_attenuation() {
        let total: f64 = ReflectionConfig::default().reflectors().iter().map(|r| r.attenuation).sum();
        for u in [2.0, 5.0, 8.0] {
            let s = standard(3, u, 0.0, 0);
            let ratio = weighted_norm(&s.truth.x2, 0.0) / weighted_norm(&s.truth.x1, 0.0);
            assert!(ratio > 0.5 && ratio <= total + 1e-12, "u = {u}: ratio {ratio}");
        }
    }

    #[test]
    fn zero_noise_is_bit_exact() {
        let s = standard(3, 2.0, 0.0, 11);
        assert_eq!(s.noisy.channels(), s.clean.channels());
    }

    #[test]
    fn noise_level_is_exact_and_real() {
        for delta in [0.01, 0.05, 0.2] {
            let s = standard(5, 5.0, delta, 7);
            for (n, c) in s.noisy.channels().iter().zip(s.clean.channels()) {
                let rel = weighted_norm(&n.sub(c).unwrap(), 0.0) / weighted_norm(c, 0.0);
                assert!((rel - delta).abs() < 1e-12, "{rel}");
                assert!(n.is_conjugate_symmetric(1e-13));
                assert!(inverse_dft_real(n).is_ok());
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = standard(3, 2.0, 0.05, 42);
        let b = standard(3, 2.0, 0.05, 42);
        let c = standard(3, 2.0, 0.05, 43);
        assert_eq!(a.noisy.channels(), b.noisy.channels());
        assert_ne!(a.noisy.channels(), c.noisy.channels());
    }

    #[test]
    fn first_channel_matches_time_domain_delays() {
        let s = standard(3, 2.0, 0.0, 0);
        let p1 = inverse_dft_real(&s.clean.channels()[0]).unwrap();
        let grid = TimeGrid::new(500, 0.75).unwrap();
        let mean: f64 = (0..500).map(|j| template_value(j as f64 / 500.0)).sum::<f64>() / 500.0;
        let fwd = |t: f64| template_value(t / 0.75) - mean;
        let u = 2.0;
        for (j, t) in grid.times().into_iter().enumerate() {
            // p_Nb(t) = Σ a p_1f(t − (L_N + 2d)/u), seen at point 1 after another L_N/u
            let back: f64 = ReflectionConfig::default()
                .reflectors()
                .iter()
                .map(|r| r.attenuation * fwd(t - (0.15 + 2.0 * r.distance) / u - 0.15 / u))
                .sum();
            assert!((p1[j] - fwd(t) - back).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn truth_reproduces_clean_data() {
        let s = standard(5, 8.0, 0.0, 0);
        let e = crate::metrics::relative_residual_error(&s.truth, &s.clean).unwrap();
        assert!(e < 1e-10);
    }

    #[test]
    fn scenario_validation() {
        assert!(ScenarioConfig::standard(4, 2.0, 0.0, 0).is_err());
        assert!(ScenarioConfig::standard(3, 2.0, 1.0, 0).is_err());
        assert!(ScenarioConfig::standard(3, 0.05, 0.0, 0).is_err());
        assert!(ScenarioConfig::standard(3, 2.0, -0.1, 0).is_err());
    }
}
