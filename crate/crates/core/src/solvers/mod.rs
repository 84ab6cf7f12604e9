//! Reconstruction methods: filtered direct inversion (two points only),
//! per-bin Tikhonov splitting at a known velocity, a grid search over
//! candidate velocities, and the alternating scheme that couples Tikhonov
//! splitting with steepest-descent updates of the velocity.

mod adm;
mod direct;
mod tikhonov;

pub use adm::{adm, AdmConfig};
pub use direct::{direct_denominator, direct_report, direct_split, FilterKind};
pub use tikhonov::{lin_tikh, min_tikh, tikhonov_split, tikhonov_functional, CandidateGrid};

use crate::error::{Error, Result};
use crate::metrics::relative_fit_error;
use crate::model::SplitState;
use crate::spectral::WeightedNormParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationConfig {
    pub alpha: f64,
    /// Denominator filter; only the direct method reads it.
    pub filter: FilterKind,
    pub params: WeightedNormParams,
    /// Weight exponent of the norm in which candidate residuals are
    /// compared during the grid search. `None` means `params.s`.
    pub selection_exponent: Option<f64>,
}

impl RegularizationConfig {
    pub fn new(alpha: f64, params: WeightedNormParams) -> Result<Self> {
        let cfg = Self {
            alpha,
            filter: FilterKind::HardThreshold,
            params,
            selection_exponent: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_filter(mut self, filter: FilterKind) -> Self {
        self.filter = filter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!(
                "regularization parameter must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn selection_exponent(&self) -> f64 {
        self.selection_exponent.unwrap_or(self.params.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Non-iterative method finished.
    Completed,
    /// Windowed stopping rule fired.
    Converged,
    IterationCap,
    /// `F′_x(u)` vanished (e.g. zero split); no descent direction exists.
    DerivativeVanished,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Completed => "completed",
            StopReason::Converged => "converged",
            StopReason::IterationCap => "iteration_cap",
            StopReason::DerivativeVanished => "derivative_vanished",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// `u^k` after each outer step (ADM only); `u^0` is not included.
    pub pwv_history: Vec<f64>,
    /// Inner steepest-descent steps taken in each outer step.
    pub inner_steps: Vec<usize>,
    pub lin_tikh_evals: usize,
    /// `‖F(xᵏ,uᵏ) − p̂‖²_{Y_s} + α‖xᵏ − x⁰‖²` after each outer step (ADM only).
    pub objective_history: Vec<f64>,
    pub stop: StopReason,
    pub events: Vec<String>,
}

impl Trace {
    pub(crate) fn completed(lin_tikh_evals: usize) -> Self {
        Self {
            pwv_history: Vec::new(),
            inner_steps: Vec::new(),
            lin_tikh_evals,
            objective_history: Vec::new(),
            stop: StopReason::Completed,
            events: Vec::new(),
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::Completed | StopReason::Converged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub state: SplitState,
    pub e_res: f64,
    pub e_fit: Option<f64>,
    /// `(u, relative residual)` for every candidate of a grid search.
    pub residual_curve: Option<Vec<(f64, f64)>>,
    pub trace: Trace,
}

impl SolverReport {
    /// Fills `e_fit` against a known true split.
    pub fn with_truth(mut self, truth: &SplitState, params: WeightedNormParams) -> Result<Self> {
        self.e_fit = Some(relative_fit_error(&self.state, truth, params)?);
        Ok(self)
    }
}

/// `Σ_{j=1}^{window} |u^{k−j+1} − u^{k−j}| < tol`, evaluated on the tail of
/// `history = [u^0, …, u^k]`; never fires before `k ≥ window`.
pub(crate) fn window_rule(history: &[f64], window: usize, tol: f64) -> bool {
    if history.len() < window + 1 {
        return false;
    }
    let tail = &history[history.len() - window - 1..];
    tail.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() < tol
}
