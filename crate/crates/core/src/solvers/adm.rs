use num_complex::Complex64;

use super::tikhonov::{tikhonov_functional, tikhonov_split};
use super::{window_rule, SolverReport, StopReason, Trace};
use crate::error::{Error, Result};
use crate::metrics::solver_residual_error;
use crate::model::{apply_fu, Geometry, MeasurementSet, Pwv, SplitState, DEFAULT_MIN_PWV};
use crate::spectral::{sobolev_weight, Spectrum, WeightedNormParams};

#[derive(Debug, Clone)]
pub struct AdmConfig {
    pub initial_pwv: f64,
    /// Centre `x⁰` of the penalty `α‖x − x⁰‖²`; zero when `None`.
    pub initial_split: Option<(Spectrum, Spectrum)>,
    pub alpha: f64,
    pub params: WeightedNormParams,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub window: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    pub min_pwv: f64,
}

impl AdmConfig {
    pub fn new(initial_pwv: f64, alpha: f64, params: WeightedNormParams) -> Result<Self> {
        let cfg = Self {
            initial_pwv,
            initial_split: None,
            alpha,
            params,
            outer_tol: 1e-3,
            inner_tol: 1e-4,
            window: 10,
            max_outer: 2000,
            max_inner: 200,
            min_pwv: DEFAULT_MIN_PWV,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("outer tolerance", self.outer_tol)?;
        positive("inner tolerance", self.inner_tol)?;
        positive("minimal velocity", self.min_pwv)?;
        if self.window == 0 || self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Config(
                "window and iteration caps must be at least 1".into(),
            ));
        }
        Pwv::with_min(self.initial_pwv, self.min_pwv).map_err(|e| Error::Config(e.to_string()))?;
        if let Some((a, b)) = &self.initial_split {
            a.check_same_grid(b)?;
        }
        Ok(())
    }
}

/// Scalar pieces of one steepest-descent step in `u`: the gradient
/// `Re⟨F′_x(u)·1, p̂ − F_x(u)⟩_{Y_s}` and `‖F′_x(u)·1‖²_{Y_s}`, both without
/// the quadrature factor.
fn descent_terms(x1: &Spectrum, x2: &Spectrum, u: f64, geometry: &Geometry, data: &[Spectrum], s: f64) -> (f64, f64) {
    let grid = x1.grid();
    let total = geometry.total_length();
    let u2 = u * u;
    let mut grad = 0.0;
    let mut dnorm = 0.0;
    for (j, &w) in grid.omegas().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let weight = sobolev_weight(grid.harmonics()[j], s);
        let (a, b) = (x1.values()[j], x2.values()[j]);
        for (l, ch) in geometry.distances().iter().zip(data) {
            let ef = Complex64::from_polar(1.0, -w * l / u);
            let eb = Complex64::from_polar(1.0, -w * (total - l) / u);
            let res = ch.values()[j] - (ef * a + eb * b);
            let d = Complex64::new(0.0, w / u2) * (*l * ef * a + (total - l) * eb * b);
            grad += weight * (d * res.conj()).re;
            dnorm += weight * d.norm_sqr();
        }
    }
    (grad, dnorm)
}

/// `ω_k·s_k` with `s_k = F′*(p̂ − F)` and `ω_k = ‖s_k‖²/‖F′ s_k‖²`;
/// `None` when `F′_x(u)` vanishes.
fn steepest_descent_increment(grad: f64, dnorm: f64, d_omega: f64) -> Option<f64> {
    if dnorm == 0.0 {
        return None;
    }
    let s = grad * d_omega;
    if s == 0.0 {
        return Some(0.0);
    }
    let omega = (s * s) / (s * s * dnorm * d_omega);
    Some(omega * s)
}

struct InnerOutcome {
    u: f64,
    steps: usize,
    vanished: bool,
}

/// `‖F_x(u) − p̂‖²_{Y_s}` without the quadrature factor.
fn misfit(x1: &Spectrum, x2: &Spectrum, u: f64, geometry: &Geometry, data: &[Spectrum], s: f64) -> f64 {
    let grid = x1.grid();
    let total = geometry.total_length();
    let mut sum = 0.0;
    for (j, &w) in grid.omegas().iter().enumerate() {
        let weight = sobolev_weight(grid.harmonics()[j], s);
        let (a, b) = (x1.values()[j], x2.values()[j]);
        for (l, ch) in geometry.distances().iter().zip(data) {
            let model = Complex64::from_polar(1.0, -w * l / u) * a + Complex64::from_polar(1.0, -w * (total - l) / u) * b;
            sum += weight * (ch.values()[j] - model).norm_sqr();
        }
    }
    sum
}

/// Halvings of a step that would increase the misfit before giving up.
const MAX_BACKTRACKS: usize = 50;

#[allow(clippy::too_many_arguments)]
fn landweber_in_u(
    x1: &Spectrum,
    x2: &Spectrum,
    start: f64,
    geometry: &Geometry,
    data: &[Spectrum],
    cfg: &AdmConfig,
    events: &mut Vec<String>,
    outer: usize,
) -> InnerOutcome {
    let d_omega = x1.grid().d_omega();
    let s = cfg.params.s;
    let mut history = vec![start];
    let mut u = start;
    let mut current = misfit(x1, x2, u, geometry, data, s);
    for step in 1..=cfg.max_inner {
        let (grad, dnorm) = descent_terms(x1, x2, u, geometry, data, s);
        let Some(mut delta) = steepest_descent_increment(grad, dnorm, d_omega) else {
            events.push(format!("outer {outer}: derivative in u vanished, stopping"));
            return InnerOutcome { u, steps: step - 1, vanished: true };
        };
        // The stepsize is exact only for the linearized residual; far from
        // the data it can overshoot, so halve it until the misfit drops.
        let mut next = u;
        for _ in 0..=MAX_BACKTRACKS {
            let mut trial = u + delta;
            if trial < cfg.min_pwv {
                events.push(format!(
                    "outer {outer} inner {step}: u = {trial} clamped to {}",
                    cfg.min_pwv
                ));
                trial = cfg.min_pwv;
            }
            let value = misfit(x1, x2, trial, geometry, data, s);
            if value <= current {
                next = trial;
                current = value;
                break;
            }
            delta *= 0.5;
        }
        u = next;
        history.push(u);
        if window_rule(&history, cfg.window, cfg.inner_tol) {
            return InnerOutcome { u, steps: step, vanished: false };
        }
    }
    InnerOutcome { u, steps: cfg.max_inner, vanished: false }
}

/// Alternating minimization: a Tikhonov split at the current velocity, then
/// steepest-descent steps in the velocity with the split held fixed.
pub fn adm(meas: &MeasurementSet, config: &AdmConfig) -> Result<SolverReport> {
    config.validate()?;
    let geometry = meas.geometry();
    let data = meas.channels();
    let grid = meas.grid();
    let (c1, c2) = match &config.initial_split {
        Some((a, b)) => {
            a.check_same_grid(&data[0])?;
            (a.clone(), b.clone())
        }
        None => (Spectrum::zeros(grid), Spectrum::zeros(grid)),
    };
    let centered = config.initial_split.is_some();

    let mut u = config.initial_pwv;
    let mut history = vec![u];
    let mut trace = Trace {
        pwv_history: Vec::new(),
        inner_steps: Vec::new(),
        lin_tikh_evals: 0,
        objective_history: Vec::new(),
        stop: StopReason::IterationCap,
        events: Vec::new(),
    };
    let mut current = SplitState::new(c1.clone(), c2.clone(), Pwv::with_min(u, config.min_pwv)?)?;

    for outer in 1..=config.max_outer {
        let pwv = Pwv::with_min(u, config.min_pwv)?;
        // Solve for the increment z = x − x⁰ against the shifted data.
        let shifted = if centered {
            apply_fu(&c1, &c2, pwv, geometry)?
                .iter()
                .zip(data)
                .map(|(f, d)| d.sub(f))
                .collect::<Result<Vec<_>>>()?
        } else {
            data.to_vec()
        };
        let (z1, z2) = tikhonov_split(&shifted, geometry, pwv, config.alpha, config.params)?;
        let (x1, x2) = if centered { (z1.add(&c1)?, z2.add(&c2)?) } else { (z1, z2) };
        trace.lin_tikh_evals += 1;

        let inner = landweber_in_u(&x1, &x2, u, geometry, data, config, &mut trace.events, outer);
        u = inner.u;
        history.push(u);
        trace.pwv_history.push(u);
        trace.inner_steps.push(inner.steps);
        current = SplitState::new(x1, x2, Pwv::with_min(u, config.min_pwv)?)?;
        trace.objective_history.push(tikhonov_functional(
            &current,
            data,
            geometry,
            config.alpha,
            config.params,
            Some((&c1, &c2)),
        )?);

        if inner.vanished {
            trace.stop = StopReason::DerivativeVanished;
            break;
        }
        if window_rule(&history, config.window, config.outer_tol) {
            trace.stop = StopReason::Converged;
            break;
        }
    }
    if trace.stop == StopReason::IterationCap {
        trace.events.push(format!(
            "outer iteration cap {} reached without meeting the stopping rule",
            config.max_outer
        ));
    }
    let e_res = solver_residual_error(&current, meas)?;
    Ok(SolverReport {
        state: current,
        e_res,
        e_fit: None,
        residual_curve: None,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::apply_fx_derivative;
    use crate::spectral::{product_inner, TimeGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn three_points() -> Geometry {
        Geometry::new(vec![0.0, 0.09, 0.15]).unwrap()
    }

    fn random_spectrum(rng: &mut ChaCha8Rng, m: usize) -> Spectrum {
        let g = TimeGrid::new(m, 0.75).unwrap().frequency_grid();
        Spectrum::new(
            (0..m)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
            g,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let p = WeightedNormParams::default();
        assert!(AdmConfig::new(0.05, 1e-3, p).is_err());
        assert!(AdmConfig::new(2.0, 0.0, p).is_err());
        let mut cfg = AdmConfig::new(2.0, 1e-3, p).unwrap();
        cfg.window = 0;
        assert!(cfg.validate().is_err());
        cfg.window = 10;
        cfg.inner_tol = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn descent_terms_match_operator_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let geometry = three_points();
        let x1 = random_spectrum(&mut rng, 24);
        let x2 = random_spectrum(&mut rng, 24);
        let data: Vec<Spectrum> = (0..3).map(|_| random_spectrum(&mut rng, 24)).collect();
        let u = 2.7;
        let state = SplitState::new(x1.clone(), x2.clone(), Pwv::new(u).unwrap()).unwrap();
        let (grad, dnorm) = descent_terms(&x1, &x2, u, &geometry, &data, 0.0);
        let predicted = apply_fu(&x1, &x2, state.u, &geometry).unwrap();
        let residual: Vec<Spectrum> = data.iter().zip(&predicted).map(|(d, p)| d.sub(p).unwrap()).collect();
        let direction = apply_fx_derivative(&state, &geometry, 1.0).unwrap();
        let d_omega = x1.grid().d_omega();
        let g_ref = product_inner(&direction, &residual, 0.0).unwrap().re / d_omega;
        let n_ref = product_inner(&direction, &direction, 0.0).unwrap().re / d_omega;
        assert!((grad - g_ref).abs() <= 1e-10 * g_ref.abs());
        assert!((dnorm - n_ref).abs() <= 1e-10 * n_ref);
    }

    #[test]
    fn stepsize_solves_linearized_problem() {
        // Surrogate residual r(h) = R₀ − h·D with D = F′_x(u)·1: after one
        // step its derivative Re⟨D, R₀ − h·D⟩ must vanish.
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let geometry = three_points();
        for _ in 0..20 {
            let x1 = random_spectrum(&mut rng, 32);
            let x2 = random_spectrum(&mut rng, 32);
            let data: Vec<Spectrum> = (0..3).map(|_| random_spectrum(&mut rng, 32)).collect();
            let u = rng.random_range(1.0..9.0);
            let (grad, dnorm) = descent_terms(&x1, &x2, u, &geometry, &data, 0.0);
            let h = steepest_descent_increment(grad, dnorm, x1.grid().d_omega()).unwrap();
            let derivative = grad - h * dnorm;
            assert!(derivative.abs() <= 1e-8 * grad.abs().max(1.0), "{derivative}");
        }
    }

    #[test]
    fn vanishing_derivative_is_reported() {
        assert_eq!(steepest_descent_increment(0.0, 0.0, 1.0), None);
        assert_eq!(steepest_descent_increment(0.0, 2.0, 1.0), Some(0.0));
    }

    #[test]
    fn zero_data_stops_immediately() {
        let g = TimeGrid::new(32, 0.75).unwrap().frequency_grid();
        let meas = MeasurementSet::new(vec![Spectrum::zeros(&g); 3], three_points(), Some(0.0)).unwrap();
        let cfg = AdmConfig::new(3.0, 1e-3, WeightedNormParams::default()).unwrap();
        let rep = adm(&meas, &cfg).unwrap();
        assert_eq!(rep.trace.stop, StopReason::DerivativeVanished);
        assert_eq!(rep.state.u.get(), 3.0);
        assert_eq!(rep.trace.lin_tikh_evals, 1);
        assert_eq!(rep.trace.pwv_history, vec![3.0]);
        assert_eq!(rep.e_res, 0.0);
        assert!(!rep.trace.converged());
    }
}
