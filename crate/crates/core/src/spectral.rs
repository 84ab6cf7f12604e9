//! Discrete Fourier machinery on one cardiac period.
//!
//! Waves are sampled at `m` equispaced instants of a period `T` and carried
//! around as [`Spectrum`] values on a signed angular-frequency grid. The
//! weighted inner products here define the data space (exponent `s`) and the
//! solution space (exponent `r`): bin `j` carries the weight
//! `(1 + ω_j²)^exponent` and the quadrature factor `Δω = 2π/T`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Equispaced sampling `t_j = j·T/m`, `j = 0..m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    m: usize,
    period: f64,
}

impl TimeGrid {
    pub fn new(m: usize, period: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "time grid needs at least 2 samples, got {m}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        Ok(Self { m, period })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn step(&self) -> f64 {
        self.period / self.m as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.m).map(|j| j as f64 * self.step()).collect()
    }

    pub fn frequency_grid(&self) -> FrequencyGrid {
        FrequencyGrid::new(self.m, self.period)
    }
}

/// Signed DFT bin index of storage slot `j` for an `m`-point transform:
/// `0, 1, …, ⌈m/2⌉−1, −⌊m/2⌋, …, −1`.
pub fn signed_bin(j: usize, m: usize) -> i64 {
    if j < m.div_ceil(2) {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// Angular frequencies `ω_j = 2π·f_j/T` in DFT storage order.
///
/// Delays act through the physical `ω_j`. The smoothness weights
/// `(1 + ν_j²)^t` are taken in harmonic units `ν_j = f_j`, so a given `α`
/// means the same thing whatever the period.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    period: f64,
    omegas: Arc<[f64]>,
    harmonics: Arc<[f64]>,
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.omegas, &other.omegas)
            || (self.omegas.len() == other.omegas.len() && self.period == other.period)
    }
}

impl FrequencyGrid {
    fn new(m: usize, period: f64) -> Self {
        let harmonics: Arc<[f64]> = (0..m).map(|j| signed_bin(j, m) as f64).collect::<Vec<_>>().into();
        let omegas = harmonics.iter().map(|f| 2.0 * PI * f / period).collect::<Vec<_>>().into();
        Self {
            period,
            omegas,
            harmonics,
        }
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Signed bin indices `f_j`, the frequency variable of the weights.
    pub fn harmonics(&self) -> &[f64] {
        &self.harmonics
    }

    /// Quadrature factor of the discrete norms.
    pub fn d_omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid {
            m: self.len(),
            period: self.period,
        }
    }

    /// Storage slot holding frequency `−ω_j`.
    pub fn mirror(&self, j: usize) -> usize {
        let m = self.len();
        (m - j) % m
    }

    /// `(1 + f_j²)^exponent` for every bin.
    pub fn weights(&self, exponent: f64) -> Vec<f64> {
        self.harmonics
            .iter()
            .map(|w| sobolev_weight(*w, exponent))
            .collect()
    }
}

#[inline]
pub fn sobolev_weight(omega: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        (1.0 + omega * omega).powf(exponent)
    }
}

/// Smoothness exponents of the data space (`s`) and the solution space (`r`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormParams {
    pub s: f64,
    pub r: f64,
}

impl Default for WeightedNormParams {
    fn default() -> Self {
        Self { s: 0.0, r: 1.0 }
    }
}

impl WeightedNormParams {
    pub fn new(s: f64, r: f64) -> Result<Self> {
        if !(s.is_finite() && r.is_finite() && s >= 0.0 && r >= s) {
            return Err(Error::Config(format!(
                "smoothness exponents need r >= s >= 0, got s = {s}, r = {r}"
            )));
        }
        Ok(Self { s, r })
    }

    /// `true` when `r < s + 2`, i.e. the operator is used outside the range
    /// where its differentiability is established.
    pub fn is_relaxed(&self) -> bool {
        self.r < self.s + 2.0
    }
}

/// One wave in the frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex64>,
    grid: FrequencyGrid,
}

impl Spectrum {
    pub fn new(values: Vec<Complex64>, grid: FrequencyGrid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { values, grid })
    }

    pub fn zeros(grid: &FrequencyGrid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid: grid.clone(),
        }
    }

    pub(crate) fn from_parts(values: Vec<Complex64>, grid: &FrequencyGrid) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            values,
            grid: grid.clone(),
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_same_grid(&self, other: &Spectrum) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Spectrum {
        Self::from_parts(self.values.iter().map(|v| v * factor).collect(), &self.grid)
    }

    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        self.check_same_grid(other)?;
        Ok(Self::from_parts(
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            &self.grid,
        ))
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Spectrum> {
        self.check_same_grid(other)?;
        Ok(Self::from_parts(
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            &self.grid,
        ))
    }

    /// Multiplies every bin by `e^{−iω·delay}`, the spectrum of the wave
    /// delayed by `delay` seconds.
    pub fn delayed(&self, delay: f64) -> Spectrum {
        Self::from_parts(
            self.values
                .iter()
                .zip(self.grid.omegas())
                .map(|(v, w)| v * Complex64::from_polar(1.0, -w * delay))
                .collect(),
            &self.grid,
        )
    }

    /// Largest deviation `|value(−ω) − conj(value(ω))|` over all bins.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (0..self.len())
            .map(|j| (self.values[self.grid.mirror(j)] - self.values[j].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_conjugate_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.conjugate_asymmetry() <= rel_tol * scale.max(f64::MIN_POSITIVE)
    }

    /// Projects onto the conjugate-symmetric subspace,
    /// `v_j ← (v_j + conj(v_{−j}))/2`.
    pub fn symmetrized(&self) -> Spectrum {
        let values = (0..self.len())
            .map(|j| 0.5 * (self.values[j] + self.values[self.grid.mirror(j)].conj()))
            .collect();
        Self::from_parts(values, &self.grid)
    }
}

/// Unnormalized forward DFT: `X_j = Σ_t x_t e^{−2πi·j·t/m}`.
pub fn forward_dft(signal: &[Complex64], grid: &TimeGrid) -> Result<Spectrum> {
    if signal.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: signal.len(),
        });
    }
    let mut buf = signal.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    Ok(Spectrum::from_parts(buf, &grid.frequency_grid()))
}

pub fn forward_dft_real(signal: &[f64], grid: &TimeGrid) -> Result<Spectrum> {
    let complex: Vec<Complex64> = signal.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    forward_dft(&complex, grid)
}

/// Inverse of [`forward_dft`], dividing by `m`.
pub fn inverse_dft(spec: &Spectrum) -> Vec<Complex64> {
    let mut buf = spec.values().to_vec();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Inverse DFT of a spectrum that represents a real wave. The imaginary parts
/// must be at round-off level (below `1e-9` of the largest sample magnitude);
/// they are dropped.
pub fn inverse_dft_real(spec: &Spectrum) -> Result<Vec<f64>> {
    let samples = inverse_dft(spec);
    let scale = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let worst_imag = samples.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if worst_imag > 1e-9 * scale {
        return Err(Error::Numeric(format!(
            "spectrum is not conjugate-symmetric: imaginary part {worst_imag:e} vs magnitude {scale:e}"
        )));
    }
    Ok(samples.into_iter().map(|v| v.re).collect())
}

/// `Σ_j (1+f_j²)^exponent · a_j · conj(b_j) · Δω`.
pub fn weighted_inner(a: &Spectrum, b: &Spectrum, weight_exponent: f64) -> Result<Complex64> {
    a.check_same_grid(b)?;
    let grid = a.grid();
    let sum: Complex64 = a
        .values()
        .iter()
        .zip(b.values())
        .zip(grid.harmonics())
        .map(|((x, y), w)| sobolev_weight(*w, weight_exponent) * x * y.conj())
        .sum();
    Ok(sum * grid.d_omega())
}

pub fn weighted_norm_sq(a: &Spectrum, weight_exponent: f64) -> f64 {
    let grid = a.grid();
    let sum: f64 = a
        .values()
        .iter()
        .zip(grid.harmonics())
        .map(|(x, w)| sobolev_weight(*w, weight_exponent) * x.norm_sqr())
        .sum();
    sum * grid.d_omega()
}

pub fn weighted_norm(a: &Spectrum, weight_exponent: f64) -> f64 {
    weighted_norm_sq(a, weight_exponent).sqrt()
}

/// Inner product on a product space: the sum of the componentwise weighted
/// inner products.
pub fn product_inner(a: &[Spectrum], b: &[Spectrum], weight_exponent: f64) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| weighted_inner(x, y, weight_exponent))
        .sum()
}

pub fn product_norm(a: &[Spectrum], weight_exponent: f64) -> f64 {
    a.iter()
        .map(|x| weighted_norm_sq(x, weight_exponent))
        .sum::<f64>()
        .sqrt()
}
