//! Experiment runner behind the `pwsplit` binary: flat TOML run
//! configurations, waveform CSV ingestion, solver dispatch and the emitted
//! report files.
//!
//! Nothing is written until the whole run (data, solver) has succeeded, so
//! a rejected configuration never leaves partial output behind.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Geometry, MeasurementSet, Pwv, SplitState};
use crate::sim::{preset_distances, synthesize_measurements, ReflectionConfig, Reflector, ScenarioConfig};
use crate::solvers::{
    adm, direct_report, lin_tikh, min_tikh, AdmConfig, CandidateGrid, FilterKind, RegularizationConfig,
    SolverReport,
};
use crate::spectral::{forward_dft, inverse_dft_real, Spectrum, TimeGrid, WeightedNormParams};

/// Overrides the output directory of every run.
pub const OUTPUT_DIR_ENV: &str = "PWSPLIT_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "pwsplit-output";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Ingest,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Ingest => "ingest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Lintikh,
    Mintikh,
    Adm,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::Lintikh => "lintikh",
            SolverKind::Mintikh => "mintikh",
            SolverKind::Adm => "adm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FilterChoice {
    TikhonovShift,
    HardThreshold,
}

impl From<FilterChoice> for FilterKind {
    fn from(f: FilterChoice) -> Self {
        match f {
            FilterChoice::TikhonovShift => FilterKind::TikhonovShift,
            FilterChoice::HardThreshold => FilterKind::HardThreshold,
        }
    }
}

/// Flat run configuration. Every key is optional here; [`RunConfig::resolve`]
/// decides which keys a mode and solver require or forbid. The same fields
/// double as command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Number of points of a preset geometry (2, 3 or 5).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub distances_m: Option<Vec<f64>>,
    #[arg(long)]
    pub period_s: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,

    #[arg(long)]
    pub true_pwv_m_per_s: Option<f64>,
    #[arg(long)]
    pub noise_level: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub reflector_distances_m: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub reflector_attenuations: Option<Vec<f64>>,

    #[arg(long)]
    pub input_csv: Option<PathBuf>,

    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub filter: Option<FilterChoice>,
    #[arg(long)]
    pub smoothness_s: Option<f64>,
    #[arg(long)]
    pub smoothness_r: Option<f64>,
    #[arg(long)]
    pub selection_exponent: Option<f64>,

    /// Known velocity for the direct and lintikh solvers.
    #[arg(long)]
    pub pwv_m_per_s: Option<f64>,

    #[arg(long)]
    pub candidate_min_m_per_s: Option<f64>,
    #[arg(long)]
    pub candidate_max_m_per_s: Option<f64>,
    #[arg(long)]
    pub candidate_count: Option<usize>,

    #[arg(long)]
    pub initial_pwv_m_per_s: Option<f64>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    pub inner_tol: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    #[arg(long)]
    pub min_pwv_m_per_s: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat configuration always serializes")
    }

    /// Keys set in `top` win over keys set in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top;
            mode, solver, output_dir, points, distances_m, period_s, samples,
            true_pwv_m_per_s, noise_level, seed, reflector_distances_m, reflector_attenuations,
            input_csv, alpha, filter, smoothness_s, smoothness_r, selection_exponent,
            pwv_m_per_s, candidate_min_m_per_s, candidate_max_m_per_s, candidate_count,
            initial_pwv_m_per_s, outer_tol, inner_tol, window, max_outer, max_inner, min_pwv_m_per_s,
        )
    }

    /// Validates the configuration and turns it into a runnable experiment.
    /// `env_output_dir` (normally [`OUTPUT_DIR_ENV`]) beats `output_dir`.
    pub fn resolve(&self, env_output_dir: Option<PathBuf>) -> Result<Experiment> {
        let mode = self.mode.ok_or_else(|| missing("mode"))?;
        let solver = self.solver.ok_or_else(|| missing("solver"))?;

        let distances = match (&self.distances_m, self.points) {
            (Some(_), Some(_)) => return Err(Error::Config("give either points or distances_m, not both".into())),
            (Some(d), None) => d.clone(),
            (None, Some(n)) => preset_distances(n)?,
            (None, None) => preset_distances(3)?,
        };
        let geometry = Geometry::new(distances.clone())?;
        let period = self.period_s.unwrap_or(0.75);
        let samples = self.samples.unwrap_or(500);
        TimeGrid::new(samples, period)?;

        let source = match mode {
            Mode::Simulate => {
                forbid(&[("input_csv", self.input_csv.is_some())], "simulate mode")?;
                let seed = self
                    .seed
                    .ok_or_else(|| Error::Config("simulate mode requires an explicit seed".into()))?;
                let scenario = ScenarioConfig {
                    distances,
                    true_pwv: self.true_pwv_m_per_s.ok_or_else(|| missing("true_pwv_m_per_s"))?,
                    period,
                    samples,
                    delta: self.noise_level.unwrap_or(0.0),
                    seed,
                };
                scenario.validate()?;
                let reflections = match (&self.reflector_distances_m, &self.reflector_attenuations) {
                    (None, None) => ReflectionConfig::default(),
                    (Some(d), Some(a)) if d.len() == a.len() => ReflectionConfig::new(
                        d.iter()
                            .zip(a)
                            .map(|(&distance, &attenuation)| Reflector { distance, attenuation })
                            .collect(),
                    )?,
                    _ => {
                        return Err(Error::Config(
                            "reflector_distances_m and reflector_attenuations must be given together with equal lengths"
                                .into(),
                        ))
                    }
                };
                DataSource::Simulate { scenario, reflections }
            }
            Mode::Ingest => {
                forbid(
                    &[
                        ("true_pwv_m_per_s", self.true_pwv_m_per_s.is_some()),
                        ("noise_level", self.noise_level.is_some()),
                        ("seed", self.seed.is_some()),
                        ("reflector_distances_m", self.reflector_distances_m.is_some()),
                        ("reflector_attenuations", self.reflector_attenuations.is_some()),
                    ],
                    "ingest mode",
                )?;
                DataSource::Ingest {
                    path: self.input_csv.clone().ok_or_else(|| missing("input_csv"))?,
                    metadata: IngestMetadata {
                        distances,
                        period,
                        samples,
                    },
                }
            }
        };

        let alpha = self.alpha.ok_or_else(|| missing("alpha"))?;
        let params = WeightedNormParams::new(self.smoothness_s.unwrap_or(0.0), self.smoothness_r.unwrap_or(1.0))
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut reg = RegularizationConfig::new(alpha, params)?;
        reg.selection_exponent = self.selection_exponent;

        let candidate_keys = [
            ("candidate_min_m_per_s", self.candidate_min_m_per_s.is_some()),
            ("candidate_max_m_per_s", self.candidate_max_m_per_s.is_some()),
            ("candidate_count", self.candidate_count.is_some()),
        ];
        let adm_keys = [
            ("initial_pwv_m_per_s", self.initial_pwv_m_per_s.is_some()),
            ("outer_tol", self.outer_tol.is_some()),
            ("inner_tol", self.inner_tol.is_some()),
            ("window", self.window.is_some()),
            ("max_outer", self.max_outer.is_some()),
            ("max_inner", self.max_inner.is_some()),
            ("min_pwv_m_per_s", self.min_pwv_m_per_s.is_some()),
        ];
        let known_keys = [("pwv_m_per_s", self.pwv_m_per_s.is_some())];
        let filter_keys = [("filter", self.filter.is_some())];
        let selection_keys = [("selection_exponent", self.selection_exponent.is_some())];
        let context = format!("solver {}", solver.as_str());

        let spec = match solver {
            SolverKind::Direct | SolverKind::Lintikh => {
                forbid(&candidate_keys, &context)?;
                forbid(&adm_keys, &context)?;
                forbid(&selection_keys, &context)?;
                let u = Pwv::new(self.pwv_m_per_s.ok_or_else(|| missing("pwv_m_per_s"))?)
                    .map_err(|e| Error::Config(e.to_string()))?;
                if solver == SolverKind::Direct {
                    if geometry.points() != 2 {
                        return Err(Error::Config(format!(
                            "the direct solver needs exactly 2 measurement points, got {}",
                            geometry.points()
                        )));
                    }
                    let reg = reg.with_filter(self.filter.map(FilterKind::from).unwrap_or(FilterKind::HardThreshold));
                    SolverSpec::Direct { pwv: u, reg }
                } else {
                    forbid(&filter_keys, &context)?;
                    SolverSpec::LinTikh { pwv: u, reg }
                }
            }
            SolverKind::Mintikh => {
                forbid(&known_keys, &context)?;
                forbid(&adm_keys, &context)?;
                forbid(&filter_keys, &context)?;
                let grid = CandidateGrid::uniform(
                    self.candidate_min_m_per_s.unwrap_or(1.0),
                    self.candidate_max_m_per_s.unwrap_or(10.0),
                    self.candidate_count.unwrap_or(100),
                )?;
                SolverSpec::MinTikh { grid, reg }
            }
            SolverKind::Adm => {
                forbid(&known_keys, &context)?;
                forbid(&candidate_keys, &context)?;
                forbid(&filter_keys, &context)?;
                forbid(&selection_keys, &context)?;
                let u0 = self
                    .initial_pwv_m_per_s
                    .ok_or_else(|| missing("initial_pwv_m_per_s"))?;
                let mut cfg = AdmConfig::new(u0, alpha, params)?;
                if let Some(v) = self.outer_tol {
                    cfg.outer_tol = v;
                }
                if let Some(v) = self.inner_tol {
                    cfg.inner_tol = v;
                }
                if let Some(v) = self.window {
                    cfg.window = v;
                }
                if let Some(v) = self.max_outer {
                    cfg.max_outer = v;
                }
                if let Some(v) = self.max_inner {
                    cfg.max_inner = v;
                }
                if let Some(v) = self.min_pwv_m_per_s {
                    cfg.min_pwv = v;
                }
                cfg.validate()?;
                SolverSpec::Adm(cfg)
            }
        };

        let output_dir = env_output_dir
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(Experiment {
            mode,
            solver: spec,
            source,
            params,
            output_dir,
        })
    }
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing required key `{key}`"))
}

fn forbid(keys: &[(&str, bool)], context: &str) -> Result<()> {
    match keys.iter().find(|(_, present)| *present) {
        Some((key, _)) => Err(Error::Config(format!("key `{key}` does not apply to {context}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub enum DataSource {
    Simulate {
        scenario: ScenarioConfig,
        reflections: ReflectionConfig,
    },
    Ingest {
        path: PathBuf,
        metadata: IngestMetadata,
    },
}

#[derive(Debug, Clone)]
pub enum SolverSpec {
    Direct { pwv: Pwv, reg: RegularizationConfig },
    LinTikh { pwv: Pwv, reg: RegularizationConfig },
    MinTikh { grid: CandidateGrid, reg: RegularizationConfig },
    Adm(AdmConfig),
}

impl SolverSpec {
    pub fn kind(&self) -> SolverKind {
        match self {
            SolverSpec::Direct { .. } => SolverKind::Direct,
            SolverSpec::LinTikh { .. } => SolverKind::Lintikh,
            SolverSpec::MinTikh { .. } => SolverKind::Mintikh,
            SolverSpec::Adm(_) => SolverKind::Adm,
        }
    }

    fn alpha(&self) -> f64 {
        match self {
            SolverSpec::Direct { reg, .. } | SolverSpec::LinTikh { reg, .. } | SolverSpec::MinTikh { reg, .. } => {
                reg.alpha
            }
            SolverSpec::Adm(cfg) => cfg.alpha,
        }
    }

    pub fn solve(&self, meas: &MeasurementSet) -> Result<SolverReport> {
        match self {
            SolverSpec::Direct { pwv, reg } => direct_report(meas, *pwv, reg),
            SolverSpec::LinTikh { pwv, reg } => lin_tikh(meas, *pwv, reg),
            SolverSpec::MinTikh { grid, reg } => min_tikh(meas, grid, reg),
            SolverSpec::Adm(cfg) => adm(meas, cfg),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub mode: Mode,
    pub solver: SolverSpec,
    pub source: DataSource,
    pub params: WeightedNormParams,
    pub output_dir: PathBuf,
}

/// Everything a run produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: SolverReport,
    pub data: MeasurementSet,
    pub truth: Option<SplitState>,
}

impl Experiment {
    pub fn load_data(&self) -> Result<(MeasurementSet, Option<SplitState>)> {
        match &self.source {
            DataSource::Simulate { scenario, reflections } => {
                let s = synthesize_measurements(scenario, reflections)?;
                Ok((s.noisy, Some(s.truth)))
            }
            DataSource::Ingest { path, metadata } => Ok((ingest_waveforms(path, metadata)?, None)),
        }
    }

    /// Loads or synthesizes the data and runs the solver; writes nothing.
    pub fn execute(&self) -> Result<Outcome> {
        let (data, truth) = self.load_data()?;
        let mut report = self.solver.solve(&data)?;
        if let Some(t) = &truth {
            report = report.with_truth(t, self.params)?;
        }
        Ok(Outcome { report, data, truth })
    }

    pub fn flat_report(&self, outcome: &Outcome) -> FlatReport {
        let r = &outcome.report;
        let (noise_level, seed, true_pwv) = match &self.source {
            DataSource::Simulate { scenario, .. } => {
                (Some(scenario.delta), Some(scenario.seed), Some(scenario.true_pwv))
            }
            DataSource::Ingest { .. } => (None, None, None),
        };
        let u = r.state.u.get();
        FlatReport {
            mode: self.mode.as_str(),
            solver: self.solver.kind().as_str(),
            points: outcome.data.geometry().points(),
            samples: outcome.data.grid().len(),
            period_s: outcome.data.grid().period(),
            alpha: self.solver.alpha(),
            smoothness_s: self.params.s,
            smoothness_r: self.params.r,
            relaxed_smoothness: self.params.is_relaxed(),
            noise_level,
            seed,
            true_pwv_m_per_s: true_pwv,
            pwv_m_per_s: u,
            pwv_error_m_per_s: true_pwv.map(|t| (u - t).abs()),
            e_res: r.e_res,
            e_fit: r.e_fit,
            lin_tikh_evaluations: r.trace.lin_tikh_evals,
            outer_iterations: r.trace.pwv_history.len(),
            inner_steps_total: r.trace.inner_steps.iter().sum(),
            stop_reason: r.trace.stop.as_str(),
            converged: r.trace.converged(),
            events: r.trace.events.len(),
        }
    }

    /// Writes the output files of a finished run and returns their paths.
    pub fn write_outputs(&self, outcome: &Outcome) -> Result<Vec<PathBuf>> {
        let files = self.render_outputs(outcome)?;
        fs::create_dir_all(&self.output_dir)?;
        let mut written = Vec::with_capacity(files.len());
        for (name, contents) in files {
            let path = self.output_dir.join(name);
            fs::write(&path, contents)?;
            written.push(path);
        }
        Ok(written)
    }

    /// File names and contents of a finished run.
    pub fn render_outputs(&self, outcome: &Outcome) -> Result<Vec<(&'static str, String)>> {
        let r = &outcome.report;
        let geometry = outcome.data.geometry();
        let mut files = vec![
            ("split_waves.csv", split_waves_csv(&r.state, geometry)?),
            (
                "report.json",
                serde_json::to_string_pretty(&self.flat_report(outcome)).expect("flat report serializes") + "\n",
            ),
        ];
        if let Some(curve) = &r.residual_curve {
            let mut text = String::from("pwv_m_per_s,residual\n");
            for (u, e) in curve {
                writeln!(text, "{},{}", num(*u), num(*e)).unwrap();
            }
            files.push(("residual_curve.csv", text));
        }
        if let SolverSpec::Adm(_) = self.solver {
            let mut text = String::from("outer,pwv_m_per_s,inner_steps,objective\n");
            for (k, (u, (steps, j))) in r
                .trace
                .pwv_history
                .iter()
                .zip(r.trace.inner_steps.iter().zip(&r.trace.objective_history))
                .enumerate()
            {
                writeln!(text, "{},{},{},{}", k + 1, num(*u), steps, num(*j)).unwrap();
            }
            files.push(("trace.csv", text));
        }
        if self.mode == Mode::Simulate {
            files.push(("measurements.csv", wave_csv(outcome.data.channels())?));
        }
        Ok(files)
    }

    pub fn run(&self) -> Result<(Outcome, Vec<PathBuf>)> {
        let outcome = self.execute()?;
        let written = self.write_outputs(&outcome)?;
        Ok((outcome, written))
    }
}

/// Flat key/value summary written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatReport {
    pub mode: &'static str,
    pub solver: &'static str,
    pub points: usize,
    pub samples: usize,
    pub period_s: f64,
    pub alpha: f64,
    pub smoothness_s: f64,
    pub smoothness_r: f64,
    /// `r < s + 2`: below the smoothness the derivative theory asks for.
    pub relaxed_smoothness: bool,
    pub noise_level: Option<f64>,
    pub seed: Option<u64>,
    pub true_pwv_m_per_s: Option<f64>,
    pub pwv_m_per_s: f64,
    pub pwv_error_m_per_s: Option<f64>,
    pub e_res: f64,
    pub e_fit: Option<f64>,
    pub lin_tikh_evaluations: usize,
    pub outer_iterations: usize,
    pub inner_steps_total: usize,
    pub stop_reason: &'static str,
    pub converged: bool,
    pub events: usize,
}

/// 12 significant digits.
fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// Real time samples of a spectrum. For even `m` the Nyquist bin has no
/// sign; it is split evenly between `±ω`, i.e. the real part is kept.
pub fn time_samples(spec: &Spectrum) -> Result<Vec<f64>> {
    inverse_dft_real(&spec.symmetrized())
}

/// `t,p_1,…,p_N` with one row per time sample.
pub fn wave_csv(channels: &[Spectrum]) -> Result<String> {
    let grid = channels
        .first()
        .ok_or_else(|| Error::InvalidArgument("no channels to export".into()))?
        .grid()
        .time_grid();
    let columns = channels.iter().map(time_samples).collect::<Result<Vec<_>>>()?;
    let mut text = String::from("t");
    for k in 1..=channels.len() {
        write!(text, ",p_{k}").unwrap();
    }
    text.push('\n');
    for (j, t) in grid.times().into_iter().enumerate() {
        text.push_str(&num(t));
        for c in &columns {
            write!(text, ",{}", num(c[j])).unwrap();
        }
        text.push('\n');
    }
    Ok(text)
}

/// Reconstructed split plus the per-point forward and backward waves
/// `p_kf(t) = p_1f(t − L_k/u)` and `p_kb(t) = p_Nb(t − (L_N − L_k)/u)`.
pub fn split_waves_csv(state: &SplitState, geometry: &Geometry) -> Result<String> {
    let u = state.u.get();
    let total = geometry.total_length();
    let mut columns = vec![time_samples(&state.x1)?, time_samples(&state.x2)?];
    let mut header = String::from("t,p1f_rec,pNb_rec");
    for (k, l) in geometry.distances().iter().enumerate() {
        columns.push(time_samples(&state.x1.delayed(l / u))?);
        columns.push(time_samples(&state.x2.delayed((total - l) / u))?);
        write!(header, ",p{}f,p{}b", k + 1, k + 1).unwrap();
    }
    let mut text = header + "\n";
    for (j, t) in state.grid().time_grid().times().into_iter().enumerate() {
        text.push_str(&num(t));
        for c in &columns {
            write!(text, ",{}", num(c[j])).unwrap();
        }
        text.push('\n');
    }
    Ok(text)
}

/// Sidecar information needed to interpret a waveform file.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestMetadata {
    pub distances: Vec<f64>,
    pub period: f64,
    /// Number of uniform samples per period after resampling.
    pub samples: usize,
}

/// Parsed waveform file: sample times and one column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveTable {
    pub times: Vec<f64>,
    pub channels: Vec<Vec<f64>>,
}

/// Parses `t,p_1,…,p_N` CSV text. Time must be strictly increasing.
pub fn parse_wave_csv<R: Read>(reader: R) -> Result<WaveTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Parse(format!("header: {e}")))?.clone();
    if header.get(0) != Some("t") {
        return Err(Error::Parse("first column must be named `t`".into()));
    }
    let n = header.len() - 1;
    if n < 2 {
        return Err(Error::Parse(format!("at least 2 channels are required, found {n}")));
    }
    for (k, name) in header.iter().enumerate().skip(1) {
        if name != format!("p_{k}") {
            return Err(Error::Parse(format!("column {} must be named `p_{k}`, found `{name}`", k + 1)));
        }
    }
    let mut times = Vec::new();
    let mut channels = vec![Vec::new(); n];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse(format!("data row {row}: {e}")))?;
        for (c, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::Parse(format!("data row {row}, column {}: missing value", c + 1)));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("data row {row}, column {}: `{field}` is not a number", c + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("data row {row}, column {}: non-finite value", c + 1)));
            }
            if c == 0 {
                if times.last().is_some_and(|&prev| v <= prev) {
                    return Err(Error::NonMonotoneTime { row });
                }
                times.push(v);
            } else {
                channels[c - 1].push(v);
            }
        }
    }
    if times.len() < 2 {
        return Err(Error::Parse(format!("at least 2 data rows are required, found {}", times.len())));
    }
    Ok(WaveTable { times, channels })
}

pub fn read_wave_csv(path: &Path) -> Result<WaveTable> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Parse(format!("cannot open {}: {e}", path.display())))?;
    parse_wave_csv(file)
}

/// Divides by the mean absolute value.
pub fn l1_normalize(values: &[f64]) -> Result<Vec<f64>> {
    let l1 = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    if l1 == 0.0 {
        return Err(Error::Numeric("cannot normalize an all-zero channel".into()));
    }
    Ok(values.iter().map(|v| v / l1).collect())
}

fn is_uniform(times: &[f64], period: f64) -> bool {
    let step = period / times.len() as f64;
    times
        .iter()
        .enumerate()
        .all(|(i, t)| (t - times[0] - i as f64 * step).abs() <= 1e-9 * period)
}

/// Spectrum of one period sampled at `times`, moved onto the `target` grid.
///
/// Samples uniform over exactly one period are interpolated trigonometrically
/// (zero padding or truncation of the spectrum). Anything else is
/// interpolated linearly with periodic wrap-around, which is lossy.
pub fn resample_spectrum(times: &[f64], values: &[f64], period: f64, target: &TimeGrid) -> Result<Spectrum> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            actual: values.len(),
        });
    }
    let count = times.len();
    if times[count - 1] - times[0] >= period {
        return Err(Error::InvalidArgument(format!(
            "samples span {} s, which is not inside one period of {period} s",
            times[count - 1] - times[0]
        )));
    }
    let m = target.len();
    if is_uniform(times, period) {
        let source = TimeGrid::new(count, period)?;
        let raw: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let spec = forward_dft(&raw, &source)?;
        let scale = m as f64 / count as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        if count == m {
            out.copy_from_slice(spec.values());
        } else {
            for (j, o) in out.iter_mut().enumerate() {
                let f = crate::spectral::signed_bin(j, m);
                let fold = f.rem_euclid(count as i64) as usize;
                if 2 * f.unsigned_abs() < count as u64 {
                    *o = spec.values()[fold] * scale;
                } else if 2 * f.unsigned_abs() == count as u64 {
                    // the source Nyquist bin is shared by ±f
                    *o = spec.values()[fold] * (0.5 * scale);
                }
            }
        }
        // samples start at times[0], not at zero
        let shifted = Spectrum::new(out, target.frequency_grid())?.delayed(times[0]);
        return Ok(shifted.symmetrized());
    }
    let resampled: Vec<f64> = target
        .times()
        .into_iter()
        .map(|t| periodic_linear(times, values, period, t))
        .collect();
    let raw: Vec<Complex64> = resampled.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_dft(&raw, target)
}

fn periodic_linear(times: &[f64], values: &[f64], period: f64, t: f64) -> f64 {
    let t0 = times[0];
    let tau = t0 + (t - t0).rem_euclid(period);
    let i = times.partition_point(|&x| x <= tau);
    let (ta, va, tb, vb) = if i == times.len() {
        (times[i - 1], values[i - 1], t0 + period, values[0])
    } else {
        (times[i - 1], values[i - 1], times[i], values[i])
    };
    va + (vb - va) * (tau - ta) / (tb - ta)
}

/// L¹-normalizes each channel, resamples it onto `metadata.samples`
/// uniform points per period and transforms it.
pub fn ingest_table(table: &WaveTable, metadata: &IngestMetadata) -> Result<MeasurementSet> {
    if table.channels.len() != metadata.distances.len() {
        return Err(Error::ChannelMismatch {
            expected: metadata.distances.len(),
            found: table.channels.len(),
        });
    }
    let geometry = Geometry::new(metadata.distances.clone())?;
    let target = TimeGrid::new(metadata.samples, metadata.period)?;
    let grid = target.frequency_grid();
    let channels = table
        .channels
        .iter()
        .map(|c| {
            let spec = resample_spectrum(&table.times, &l1_normalize(c)?, metadata.period, &target)?;
            // share one grid allocation across channels
            Spectrum::new(spec.into_values(), grid.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(channels, geometry, None)
}

pub fn ingest_waveforms(path: &Path, metadata: &IngestMetadata) -> Result<MeasurementSet> {
    ingest_table(&read_wave_csv(path)?, metadata)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParameter {
    Alpha,
    Delta,
    U0,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Delta => "delta",
            SweepParameter::U0 => "u0",
        }
    }

    fn apply(self, base: &RunConfig, value: f64) -> RunConfig {
        let mut cfg = base.clone();
        match self {
            SweepParameter::Alpha => cfg.alpha = Some(value),
            SweepParameter::Delta => cfg.noise_level = Some(value),
            SweepParameter::U0 => cfg.initial_pwv_m_per_s = Some(value),
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub pwv: Option<f64>,
    pub e_res: Option<f64>,
    pub e_fit: Option<f64>,
    pub lin_tikh_evals: Option<usize>,
    /// `ok` or the error that stopped this row.
    pub status: String,
}

/// Re-runs the base configuration once per value. A failing row is
/// recorded and the sweep goes on; only an unusable base configuration is
/// an error.
pub fn sweep(base: &RunConfig, parameter: SweepParameter, values: &[f64]) -> Result<Vec<SweepRow>> {
    match parameter {
        SweepParameter::Delta if base.mode != Some(Mode::Simulate) => {
            return Err(Error::Config("a noise-level sweep needs simulate mode".into()))
        }
        SweepParameter::U0 if base.solver != Some(SolverKind::Adm) => {
            return Err(Error::Config("an initial-velocity sweep needs the adm solver".into()))
        }
        _ => {}
    }
    // the base must be valid once the swept key is filled in
    let probe = values.first().copied().unwrap_or(match parameter {
        SweepParameter::Alpha => 1.0,
        SweepParameter::Delta => 0.0,
        SweepParameter::U0 => 1.0,
    });
    parameter.apply(base, probe).resolve(None)?;

    Ok(values
        .iter()
        .map(|&value| {
            let run = parameter.apply(base, value).resolve(None).and_then(|e| e.execute());
            match run {
                Ok(o) => SweepRow {
                    value,
                    pwv: Some(o.report.state.u.get()),
                    e_res: Some(o.report.e_res),
                    e_fit: o.report.e_fit,
                    lin_tikh_evals: Some(o.report.trace.lin_tikh_evals),
                    status: "ok".into(),
                },
                Err(e) => SweepRow {
                    value,
                    pwv: None,
                    e_res: None,
                    e_fit: None,
                    lin_tikh_evals: None,
                    status: e.to_string(),
                },
            }
        })
        .collect())
}

pub fn sweep_csv(parameter: SweepParameter, rows: &[SweepRow]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record([parameter.as_str(), "pwv_m_per_s", "e_res", "e_fit", "lin_tikh_evaluations", "status"])
        .expect("in-memory write");
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in rows {
        w.write_record([
            num(r.value),
            opt(r.pwv),
            opt(r.e_res),
            opt(r.e_fit),
            r.lin_tikh_evals.map(|n| n.to_string()).unwrap_or_default(),
            r.status.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Process exit code for an error category.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::PwvOutOfDomain { .. } => 2,
        Error::Parse(_) | Error::NonMonotoneTime { .. } | Error::ChannelMismatch { .. } => 3,
        Error::LengthMismatch { .. } | Error::GridMismatch => 3,
        Error::Numeric(_) | Error::UndefinedMetric(_) => 4,
        Error::Io(_) => 5,
    }
}
