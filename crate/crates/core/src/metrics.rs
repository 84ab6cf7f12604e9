//! Relative fitting and residual errors.

use crate::error::{Error, Result};
use crate::model::{apply_f, MeasurementSet, SplitState};
use crate::spectral::{weighted_norm_sq, WeightedNormParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub e_fit: Option<f64>,
    pub e_res: f64,
    /// Unweighted (`L²`) norm of each channel residual.
    pub per_channel_residuals: Vec<f64>,
}

/// `‖(x₁,x₂) − (p̂_1f,p̂_Nb)‖ / ‖(p̂_1f,p̂_Nb)‖` in `(L²_r)²`. The velocity is
/// not part of this measure.
pub fn relative_fit_error(state: &SplitState, truth: &SplitState, params: WeightedNormParams) -> Result<f64> {
    let d1 = state.x1.sub(&truth.x1)?;
    let d2 = state.x2.sub(&truth.x2)?;
    let denom = weighted_norm_sq(&truth.x1, params.r) + weighted_norm_sq(&truth.x2, params.r);
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("true split has zero norm".into()));
    }
    let num = weighted_norm_sq(&d1, params.r) + weighted_norm_sq(&d2, params.r);
    Ok((num / denom).sqrt())
}

/// Per-channel `L²` norms of `F(x₁,x₂,u) − p̂^δ`.
pub fn channel_residuals(state: &SplitState, meas: &MeasurementSet) -> Result<Vec<f64>> {
    let predicted = apply_f(state, meas.geometry())?;
    predicted
        .iter()
        .zip(meas.channels())
        .map(|(p, d)| Ok(weighted_norm_sq(&p.sub(d)?, 0.0).sqrt()))
        .collect()
}

/// `‖F(x₁,x₂,u) − p̂^δ‖_{Y₀} / ‖p̂^δ‖_{Y₀}`, independent of the smoothness
/// exponents.
pub fn relative_residual_error(state: &SplitState, meas: &MeasurementSet) -> Result<f64> {
    Ok(error_report(state, meas, None, WeightedNormParams::default())?.e_res)
}

/// [`relative_residual_error`], except that an exact fit of all-zero data
/// counts as zero error instead of an undefined quotient.
pub fn solver_residual_error(state: &SplitState, meas: &MeasurementSet) -> Result<f64> {
    let data_sq: f64 = meas.channels().iter().map(|c| weighted_norm_sq(c, 0.0)).sum();
    if data_sq == 0.0 && channel_residuals(state, meas)?.iter().all(|r| *r == 0.0) {
        return Ok(0.0);
    }
    relative_residual_error(state, meas)
}

pub fn error_report(
    state: &SplitState,
    meas: &MeasurementSet,
    truth: Option<&SplitState>,
    params: WeightedNormParams,
) -> Result<ErrorReport> {
    let data_sq: f64 = meas.channels().iter().map(|c| weighted_norm_sq(c, 0.0)).sum();
    if data_sq == 0.0 {
        return Err(Error::UndefinedMetric("data has zero norm".into()));
    }
    let per_channel_residuals = channel_residuals(state, meas)?;
    let res_sq: f64 = per_channel_residuals.iter().map(|r| r * r).sum();
    let e_fit = truth
        .map(|t| relative_fit_error(state, t, params))
        .transpose()?;
    Ok(ErrorReport {
        e_fit,
        e_res: (res_sq / data_sq).sqrt(),
        per_channel_residuals,
    })
}
