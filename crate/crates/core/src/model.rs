//! The splitting operator `F(x₁, x₂, u) = A(u)V_N x₁ + B(u)V_N x₂` and its
//! derivatives.
//!
//! Every operator here is diagonal in frequency: at bin `ω` channel `k`
//! receives `e_k(ω,u)·x₁(ω) + ẽ_k(ω,u)·x₂(ω)` with
//! `e_k = e^{−iωL_k/u}` and `ẽ_k = e^{−iω(L_N−L_k)/u}`. Nothing ever builds a
//! global matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{sobolev_weight, FrequencyGrid, Spectrum, WeightedNormParams};

/// Default lower bound on the admissible pulse wave velocity, in m/s.
pub const DEFAULT_MIN_PWV: f64 = 0.1;

/// Distances `L_k` of the measurement points from point 1, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    distances: Vec<f64>,
}

impl Geometry {
    pub fn new(distances: Vec<f64>) -> Result<Self> {
        if distances.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "geometry needs at least 2 measurement points, got {}",
                distances.len()
            )));
        }
        if distances.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("distances must be finite".into()));
        }
        if distances[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first measurement point anchors the coordinate and must sit at 0 m, got {}",
                distances[0]
            )));
        }
        if distances.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "distances must be strictly increasing".into(),
            ));
        }
        Ok(Self { distances })
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn points(&self) -> usize {
        self.distances.len()
    }

    /// `L_N`, the length of the whole segment.
    pub fn total_length(&self) -> f64 {
        *self.distances.last().expect("geometry is never empty")
    }
}

/// Pulse wave velocity in m/s, bounded away from zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Pwv(f64);

impl Pwv {
    pub fn new(u: f64) -> Result<Self> {
        Self::with_min(u, DEFAULT_MIN_PWV)
    }

    /// Rejects `u < min`; values are never silently clamped.
    pub fn with_min(u: f64, min: f64) -> Result<Self> {
        if !(u.is_finite() && u >= min && u > 0.0) {
            return Err(Error::PwvOutOfDomain { u, min });
        }
        Ok(Self(u))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// The unknowns: forward wave at point 1, backward wave at point N, PWV.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub x1: Spectrum,
    pub x2: Spectrum,
    pub u: Pwv,
}

impl SplitState {
    pub fn new(x1: Spectrum, x2: Spectrum, u: Pwv) -> Result<Self> {
        x1.check_same_grid(&x2)?;
        Ok(Self { x1, x2, u })
    }

    pub fn zeros(grid: &FrequencyGrid, u: Pwv) -> Self {
        Self {
            x1: Spectrum::zeros(grid),
            x2: Spectrum::zeros(grid),
            u,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.x1.grid()
    }
}

/// Observed spectra `p̂_1 … p̂_N` with their geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    channels: Vec<Spectrum>,
    geometry: Geometry,
    noise_level: Option<f64>,
}

impl MeasurementSet {
    pub fn new(channels: Vec<Spectrum>, geometry: Geometry, noise_level: Option<f64>) -> Result<Self> {
        if channels.len() != geometry.points() {
            return Err(Error::LengthMismatch {
                expected: geometry.points(),
                actual: channels.len(),
            });
        }
        for ch in &channels[1..] {
            ch.check_same_grid(&channels[0])?;
        }
        if let Some(delta) = noise_level {
            if !(delta.is_finite() && delta >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "noise level must be non-negative, got {delta}"
                )));
            }
        }
        Ok(Self {
            channels,
            geometry,
            noise_level,
        })
    }

    pub fn channels(&self) -> &[Spectrum] {
        &self.channels
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.channels[0].grid()
    }

    pub fn noise_level(&self) -> Option<f64> {
        self.noise_level
    }
}

/// Per-bin phase matrix `G(ω)` with columns `(e_k)` and `(ẽ_k)`.
#[derive(Debug, Clone)]
pub struct PhaseFactors {
    /// `forward[j][k] = e_k(ω_j, u)`
    pub forward: Vec<Vec<Complex64>>,
    /// `backward[j][k] = ẽ_k(ω_j, u)`
    pub backward: Vec<Vec<Complex64>>,
}

#[inline]
fn phase(omega: f64, delay: f64) -> Complex64 {
    Complex64::from_polar(1.0, -omega * delay)
}

pub fn phase_factors(geometry: &Geometry, u: Pwv, grid: &FrequencyGrid) -> PhaseFactors {
    let u = u.get();
    let total = geometry.total_length();
    let (forward, backward) = grid
        .omegas()
        .iter()
        .map(|&w| {
            let f = geometry.distances().iter().map(|l| phase(w, l / u)).collect();
            let b = geometry
                .distances()
                .iter()
                .map(|l| phase(w, (total - l) / u))
                .collect();
            (f, b)
        })
        .unzip();
    PhaseFactors { forward, backward }
}

/// `F_u(x₁, x₂)`: the measured channels produced by a forward/backward pair
/// at velocity `u`.
pub fn apply_fu(x1: &Spectrum, x2: &Spectrum, u: Pwv, geometry: &Geometry) -> Result<Vec<Spectrum>> {
    x1.check_same_grid(x2)?;
    let grid = x1.grid();
    let u = u.get();
    let total = geometry.total_length();
    Ok(geometry
        .distances()
        .iter()
        .map(|l| {
            let values = grid
                .omegas()
                .iter()
                .zip(x1.values().iter().zip(x2.values()))
                .map(|(&w, (a, b))| phase(w, l / u) * a + phase(w, (total - l) / u) * b)
                .collect();
            Spectrum::from_parts(values, grid)
        })
        .collect())
}

pub fn apply_f(state: &SplitState, geometry: &Geometry) -> Result<Vec<Spectrum>> {
    apply_fu(&state.x1, &state.x2, state.u, geometry)
}

/// Adjoint of `F_u` from the data space `Y_s` into the solution space
/// `(L²_r)²`: `x₁ᵃ(ω) = (1+ω²)^{s−r} Σ_k conj(e_k)·y_k(ω)` and likewise for
/// `x₂ᵃ` with `ẽ_k`.
pub fn apply_fu_adjoint(
    y: &[Spectrum],
    geometry: &Geometry,
    u: Pwv,
    params: WeightedNormParams,
) -> Result<(Spectrum, Spectrum)> {
    check_channels(y, geometry)?;
    let grid = y[0].grid();
    let u = u.get();
    let total = geometry.total_length();
    let mut xa1 = Vec::with_capacity(grid.len());
    let mut xa2 = Vec::with_capacity(grid.len());
    for (j, &w) in grid.omegas().iter().enumerate() {
        let embed = sobolev_weight(grid.harmonics()[j], params.s - params.r);
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for (l, ch) in geometry.distances().iter().zip(y) {
            let v = ch.values()[j];
            a += phase(w, l / u).conj() * v;
            b += phase(w, (total - l) / u).conj() * v;
        }
        xa1.push(embed * a);
        xa2.push(embed * b);
    }
    Ok((Spectrum::from_parts(xa1, grid), Spectrum::from_parts(xa2, grid)))
}

/// `F′_x(u)h`, the derivative of `u ↦ F(x, u)` applied to a real increment.
/// Channel `k` receives `h·(iωL_k/u²)·e_k·x₁ + h·(iω(L_N−L_k)/u²)·ẽ_k·x₂`.
pub fn apply_fx_derivative(state: &SplitState, geometry: &Geometry, h: f64) -> Result<Vec<Spectrum>> {
    let grid = state.grid();
    let u = state.u.get();
    let total = geometry.total_length();
    let u2 = u * u;
    Ok(geometry
        .distances()
        .iter()
        .map(|l| {
            let (df, db) = (l / u2, (total - l) / u2);
            let values = grid
                .omegas()
                .iter()
                .zip(state.x1.values().iter().zip(state.x2.values()))
                .map(|(&w, (a, b))| {
                    let i_omega_h = Complex64::new(0.0, w * h);
                    i_omega_h * (df * phase(w, l / u) * a + db * phase(w, (total - l) / u) * b)
                })
                .collect();
            Spectrum::from_parts(values, grid)
        })
        .collect())
}

/// `F′_x(u)* y`: the real scalar `Re⟨F′_x(u)·1, y⟩_{Y_s}`, which satisfies
/// `Re⟨F′_x(u)h, y⟩ = h·F′_x(u)* y` for every real `h`.
pub fn apply_fx_gradient(
    state: &SplitState,
    geometry: &Geometry,
    residual: &[Spectrum],
    params: WeightedNormParams,
) -> Result<f64> {
    check_channels(residual, geometry)?;
    residual[0].check_same_grid(&state.x1)?;
    let direction = apply_fx_derivative(state, geometry, 1.0)?;
    Ok(crate::spectral::product_inner(&direction, residual, params.s)?.re)
}

/// `‖F′_x(u)·1‖²_{Y_s}`.
pub fn fx_derivative_norm_sq(state: &SplitState, geometry: &Geometry, params: WeightedNormParams) -> Result<f64> {
    let direction = apply_fx_derivative(state, geometry, 1.0)?;
    Ok(direction
        .iter()
        .map(|d| crate::spectral::weighted_norm_sq(d, params.s))
        .sum())
}

pub(crate) fn check_channels(y: &[Spectrum], geometry: &Geometry) -> Result<()> {
    if y.len() != geometry.points() {
        return Err(Error::LengthMismatch {
            expected: geometry.points(),
            actual: y.len(),
        });
    }
    for ch in &y[1..] {
        ch.check_same_grid(&y[0])?;
    }
    Ok(())
}
