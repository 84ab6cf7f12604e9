use num_complex::Complex64;

use super::{RegularizationConfig, SolverReport, Trace};
use crate::error::{Error, Result};
use crate::metrics::solver_residual_error;
use crate::model::{apply_fu, check_channels, Geometry, MeasurementSet, Pwv, SplitState, DEFAULT_MIN_PWV};
use crate::spectral::{product_norm, sobolev_weight, weighted_norm_sq, Spectrum, WeightedNormParams};

/// Minimizer of `‖F_u(x) − y‖²_{Y_s} + α‖x‖²_{(L²_r)²}`.
///
/// Bin by bin this is the 2×2 Hermitian system
/// `(w_s·GᴴG + α·w_r·I)·x = w_s·Gᴴy`, solved here after dividing by `w_s`.
pub fn tikhonov_split(
    data: &[Spectrum],
    geometry: &Geometry,
    u: Pwv,
    alpha: f64,
    params: WeightedNormParams,
) -> Result<(Spectrum, Spectrum)> {
    check_channels(data, geometry)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Config(format!(
            "regularization parameter must be positive, got {alpha}"
        )));
    }
    let grid = data[0].grid();
    let n = geometry.points() as f64;
    let total = geometry.total_length();
    let u = u.get();
    let mut x1 = Vec::with_capacity(grid.len());
    let mut x2 = Vec::with_capacity(grid.len());
    let mut fwd = vec![Complex64::new(0.0, 0.0); geometry.points()];
    let mut bwd = fwd.clone();
    for (j, &w) in grid.omegas().iter().enumerate() {
        for (k, l) in geometry.distances().iter().enumerate() {
            fwd[k] = Complex64::from_polar(1.0, -w * l / u);
            bwd[k] = Complex64::from_polar(1.0, -w * (total - l) / u);
        }
        let shift = alpha * sobolev_weight(grid.harmonics()[j], params.r - params.s);
        let diag = n + shift;
        let off: Complex64 = fwd.iter().zip(&bwd).map(|(a, b)| a.conj() * b).sum();
        let (mut rhs1, mut rhs2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for k in 0..fwd.len() {
            let y = data[k].values()[j];
            rhs1 += fwd[k].conj() * y;
            rhs2 += bwd[k].conj() * y;
        }
        let det = diag * diag - off.norm_sqr();
        x1.push((diag * rhs1 - off * rhs2) / det);
        x2.push((diag * rhs2 - off.conj() * rhs1) / det);
    }
    Ok((
        Spectrum::new(x1, grid.clone())?,
        Spectrum::new(x2, grid.clone())?,
    ))
}

/// `‖F_u(x) − y‖²_{Y_s} + α‖x − x_c‖²_{(L²_r)²}` with optional centre `x_c`.
pub fn tikhonov_functional(
    state: &SplitState,
    data: &[Spectrum],
    geometry: &Geometry,
    alpha: f64,
    params: WeightedNormParams,
    center: Option<(&Spectrum, &Spectrum)>,
) -> Result<f64> {
    let predicted = apply_fu(&state.x1, &state.x2, state.u, geometry)?;
    let misfit: f64 = predicted
        .iter()
        .zip(data)
        .map(|(p, d)| Ok(weighted_norm_sq(&p.sub(d)?, params.s)))
        .sum::<Result<f64>>()?;
    let penalty = match center {
        Some((c1, c2)) => {
            weighted_norm_sq(&state.x1.sub(c1)?, params.r) + weighted_norm_sq(&state.x2.sub(c2)?, params.r)
        }
        None => weighted_norm_sq(&state.x1, params.r) + weighted_norm_sq(&state.x2, params.r),
    };
    Ok(misfit + alpha * penalty)
}

/// Tikhonov splitting at a known velocity.
pub fn lin_tikh(meas: &MeasurementSet, u: Pwv, config: &RegularizationConfig) -> Result<SolverReport> {
    config.validate()?;
    let (x1, x2) = tikhonov_split(meas.channels(), meas.geometry(), u, config.alpha, config.params)?;
    let state = SplitState::new(x1, x2, u)?;
    let e_res = solver_residual_error(&state, meas)?;
    Ok(SolverReport {
        state,
        e_res,
        e_fit: None,
        residual_curve: None,
        trace: Trace::completed(1),
    })
}

/// Finite, strictly ascending set of candidate velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    values: Vec<f64>,
}

impl CandidateGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_min(values, DEFAULT_MIN_PWV)
    }

    pub fn with_min(values: Vec<f64>, min_pwv: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("candidate grid is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= min_pwv)) {
            return Err(Error::Config(format!(
                "candidate velocities must be finite and at least {min_pwv} m/s"
            )));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("candidate velocities must be strictly ascending".into()));
        }
        Ok(Self { values })
    }

    /// `lo + (hi − lo)(k − 1)/(count − 1)` for `k = 1..=count`.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let values = match count {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..count)
                .map(|k| lo + ((hi - lo) * k as f64) / (count - 1) as f64)
                .collect(),
        };
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Runs [`lin_tikh`] at every candidate and keeps the one whose relative
/// residual (in the selection norm) is smallest; ties go to the smaller `u`.
pub fn min_tikh(meas: &MeasurementSet, grid: &CandidateGrid, config: &RegularizationConfig) -> Result<SolverReport> {
    config.validate()?;
    let exponent = config.selection_exponent();
    let data_norm = product_norm(meas.channels(), exponent);
    if data_norm == 0.0 {
        return Err(Error::UndefinedMetric("data has zero norm".into()));
    }
    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, SplitState)> = None;
    for &u in grid.values() {
        let u = Pwv::with_min(u, 0.0)?;
        let (x1, x2) = tikhonov_split(meas.channels(), meas.geometry(), u, config.alpha, config.params)?;
        let predicted = apply_fu(&x1, &x2, u, meas.geometry())?;
        let residual = predicted
            .iter()
            .zip(meas.channels())
            .map(|(p, d)| p.sub(d))
            .collect::<Result<Vec<_>>>()?;
        let rel = product_norm(&residual, exponent) / data_norm;
        curve.push((u.get(), rel));
        if best.as_ref().is_none_or(|(r, _)| rel < *r) {
            best = Some((rel, SplitState::new(x1, x2, u)?));
        }
    }
    let (_, state) = best.expect("candidate grid is never empty");
    let e_res = solver_residual_error(&state, meas)?;
    Ok(SolverReport {
        state,
        e_res,
        e_fit: None,
        residual_curve: Some(curve),
        trace: Trace::completed(grid.len()),
    })
}
