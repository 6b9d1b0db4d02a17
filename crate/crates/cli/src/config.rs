//! Experiment configuration: one JSON file per experiment.

use std::fmt;
use std::path::{Path, PathBuf};

use bridgelab::basis::ModalState;
use bridgelab::nonlinearity::NonlinearitySpec;
use bridgelab::{DampingPoint, ModelParams, ParamError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const EXPERIMENTS: [&str; 10] = [
    "simulate",
    "spectrum",
    "resolvent-sweep",
    "f-xi",
    "characteristics",
    "cross-validate",
    "decay",
    "decompose",
    "absorbing",
    "attractor",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Spectrum,
    ResolventSweep,
    FXi,
    Characteristics,
    CrossValidate,
    Decay,
    Decompose,
    Absorbing,
    Attractor,
}

impl Experiment {
    pub fn tag(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Spectrum => "spectrum",
            Experiment::ResolventSweep => "resolvent-sweep",
            Experiment::FXi => "f-xi",
            Experiment::Characteristics => "characteristics",
            Experiment::CrossValidate => "cross-validate",
            Experiment::Decay => "decay",
            Experiment::Decompose => "decompose",
            Experiment::Absorbing => "absorbing",
            Experiment::Attractor => "attractor",
        }
    }

    fn needs_seed(&self) -> bool {
        matches!(self, Experiment::Absorbing | Experiment::Attractor)
    }

    fn time_stepping(&self) -> bool {
        matches!(
            self,
            Experiment::Simulate
                | Experiment::Decay
                | Experiment::Decompose
                | Experiment::Absorbing
                | Experiment::Attractor
                | Experiment::CrossValidate
                | Experiment::Characteristics
        )
    }
}

fn d_modes() -> usize {
    16
}
fn d_dt() -> f64 {
    1e-3
}
fn d_t_end() -> f64 {
    1.0
}
fn d_one() -> usize {
    1
}
fn d_ensemble() -> usize {
    20
}
fn d_radius() -> f64 {
    10.0
}
fn d_lambda_max() -> f64 {
    50.0
}
fn d_grid() -> usize {
    2000
}
fn d_cells() -> usize {
    300
}
fn d_t_star() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "d_modes")]
    pub n_modes: usize,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_one")]
    pub stride: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "d_ensemble")]
    pub ensemble_size: usize,
    /// Radius of the initial-data ball for ensembles.
    #[serde(default = "d_radius")]
    pub radius: f64,
    #[serde(default = "d_lambda_max")]
    pub lambda_max: f64,
    #[serde(default = "d_grid")]
    pub n_grid: usize,
    /// Cells of the characteristics grid.
    #[serde(default = "d_cells")]
    pub cells: usize,
    #[serde(default = "d_t_star")]
    pub t_star: f64,
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    /// Search window for `F_xi` when `xi` is given as a plain number.
    #[serde(default)]
    pub lambda_window: Option<(f64, f64)>,
}

impl Default for Numerics {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// Smooth data with coefficients decaying like `1/(j+1)^2`.
    Generic {
        #[serde(default = "one_f")]
        amplitude: f64,
    },
    CableMode {
        mode: usize,
        #[serde(default = "one_f")]
        amplitude: f64,
    },
    Explicit {
        state: ModalState,
    },
    Zero,
}

fn one_f() -> f64 {
    1.0
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Generic { amplitude: 1.0 }
    }
}

impl InitialData {
    pub fn build(&self, n: usize) -> ModalState {
        match self {
            InitialData::Generic { amplitude } => {
                let mut s = ModalState::zeros(n);
                for j in 0..n {
                    let w = amplitude / (1.0 + j as f64).powi(2);
                    s.a[j] = w * (0.9 + 0.37 * j as f64).sin();
                    s.adot[j] = w * (0.2 + 1.3 * j as f64).cos();
                    s.b[j] = 0.6 * w * (0.4 * j as f64 + 0.5).cos();
                    s.bdot[j] = -0.4 * w * (0.8 * j as f64).sin();
                }
                s
            }
            InitialData::CableMode { mode, amplitude } => ModalState::cable_mode(n, *mode, *amplitude),
            InitialData::Explicit { state } => state.clone(),
            InitialData::Zero => ModalState::zeros(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: ModelParams,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn spec(&self) -> NonlinearitySpec {
        self.nonlinearity.clone().unwrap_or_else(NonlinearitySpec::zero)
    }
}

/// A failed check, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn violation(path: &str, message: impl Into<String>) -> Violation {
    Violation {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and validates, reporting every violation found.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut found = Vec::new();
    match value.get("experiment") {
        None => found.push(violation("experiment", "missing experiment tag")),
        Some(Value::String(tag)) if EXPERIMENTS.contains(&tag.as_str()) => {}
        Some(other) => found.push(violation(
            "experiment",
            format!("unknown experiment {other}; allowed: {}", EXPERIMENTS.join(", ")),
        )),
    }
    if value.get("params").is_none() {
        found.push(violation("params", "missing model parameters"));
    }
    if !found.is_empty() {
        return Err(CliError::Validation(found));
    }
    let config: ExperimentConfig = serde_json::from_value(value).map_err(|e| {
        CliError::Validation(vec![violation("config", e.to_string())])
    })?;
    let found = validate(&config);
    if found.is_empty() {
        Ok(config)
    } else {
        Err(CliError::Validation(found))
    }
}

pub fn validate(c: &ExperimentConfig) -> Vec<Violation> {
    let mut out: Vec<Violation> = c
        .params
        .violations()
        .into_iter()
        .map(|e| {
            let path = match &e {
                ParamError::NonPositiveLength(_) => "params.ell".to_string(),
                ParamError::NegativeCoefficient { name, .. } => format!("params.{name}"),
                ParamError::XiOutOfRange { .. } => "params.xi".to_string(),
            };
            Violation {
                path,
                message: e.to_string(),
            }
        })
        .collect();
    let n = &c.numerics;
    if n.n_modes == 0 {
        out.push(violation("numerics.n_modes", "must be at least 1"));
    }
    if c.experiment.time_stepping() {
        if !(n.dt > 0.0 && n.dt.is_finite()) {
            out.push(violation("numerics.dt", format!("must be positive, got {}", n.dt)));
        }
        if !(n.t_end > 0.0 && n.t_end.is_finite()) {
            out.push(violation("numerics.t_end", format!("must be positive, got {}", n.t_end)));
        }
        if n.stride == 0 {
            out.push(violation("numerics.stride", "must be at least 1"));
        }
    }
    if c.experiment.needs_seed() {
        if n.seed.is_none() {
            out.push(violation("numerics.seed", "ensemble experiments require a seed"));
        }
        if n.ensemble_size == 0 {
            out.push(violation("numerics.ensemble_size", "must be at least 1"));
        }
        if !(n.radius > 0.0) {
            out.push(violation("numerics.radius", "must be positive"));
        }
    }
    if c.experiment == Experiment::Attractor && !(n.t_star > 0.0) {
        out.push(violation("numerics.t_star", "must be positive"));
    }
    if c.experiment == Experiment::ResolventSweep {
        if !(n.lambda_max > 0.0) {
            out.push(violation("numerics.lambda_max", "must be positive"));
        }
        if n.n_grid < 2 {
            out.push(violation("numerics.n_grid", "must be at least 2"));
        }
    }
    if matches!(c.experiment, Experiment::Characteristics | Experiment::CrossValidate) {
        if c.params.k != 0.0 {
            out.push(violation("params.k", "characteristics need the decoupled wave (k = 0)"));
        }
        if n.cells < 2 {
            out.push(violation("numerics.cells", "must be at least 2"));
        }
    }
    if c.experiment == Experiment::FXi
        && matches!(c.params.xi, DampingPoint::Absolute(_))
        && n.lambda_window.is_none()
    {
        out.push(violation(
            "numerics.lambda_window",
            "required when xi is given as a plain number",
        ));
    }
    if let Some(spec) = &c.nonlinearity {
        if let Err(e) = spec.validate() {
            out.push(violation("nonlinearity", e.to_string()));
        }
        if let Some(f) = &spec.forcing {
            if f.len() != 4 * n.n_modes {
                out.push(violation(
                    "nonlinearity.forcing",
                    format!("expected {} entries (4 * n_modes), got {}", 4 * n.n_modes, f.len()),
                ));
            }
        }
    }
    match &c.initial {
        InitialData::CableMode { mode, .. } if *mode >= n.n_modes => {
            out.push(violation("initial.mode", format!("must be below n_modes = {}", n.n_modes)));
        }
        InitialData::Explicit { state } => {
            if state.n_modes() != n.n_modes || state.check().is_err() {
                out.push(violation(
                    "initial.state",
                    format!("must be a finite state with n_modes = {} in every block", n.n_modes),
                ));
            }
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "simulate",
        "params": {"ell": 1, "beta0": 1, "alpha": 1, "alpha0": 1, "k": 1,
                   "gamma": 0.5, "gamma0": 0.5, "xi": {"num": 1, "den": 3}}
    }"#;

    #[test]
    fn minimal_simulate_is_accepted() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.experiment, Experiment::Simulate);
        assert_eq!(c.numerics.n_modes, 16);
        assert_eq!(c.spec(), NonlinearitySpec::zero());
    }

    #[test]
    fn xi_outside_span_names_xi() {
        let text = MINIMAL.replace(r#"{"num": 1, "den": 3}"#, "1.5");
        let Err(CliError::Validation(v)) = parse_config_str(&text) else {
            panic!("expected validation error");
        };
        assert!(v.iter().any(|x| x.path == "params.xi"));
    }

    #[test]
    fn all_violations_are_reported() {
        let text = MINIMAL
            .replace(r#""beta0": 1"#, r#""beta0": -1"#)
            .replace(r#""gamma": 0.5"#, r#""gamma": -2"#)
            .replace(r#"{"num": 1, "den": 3}"#, "3.0");
        let Err(CliError::Validation(v)) = parse_config_str(&text) else {
            panic!("expected validation error");
        };
        let paths: Vec<&str> = v.iter().map(|x| x.path.as_str()).collect();
        assert_eq!(paths, ["params.beta0", "params.gamma", "params.xi"]);
    }

    #[test]
    fn unknown_tag_lists_allowed() {
        let text = MINIMAL.replace("\"simulate\"", "\"fly\"");
        let Err(CliError::Validation(v)) = parse_config_str(&text) else {
            panic!("expected validation error");
        };
        assert_eq!(v[0].path, "experiment");
        for tag in EXPERIMENTS {
            assert!(v[0].message.contains(tag));
        }
    }

    #[test]
    fn ensembles_need_seeds() {
        let text = MINIMAL.replace("\"simulate\"", "\"absorbing\"");
        let Err(CliError::Validation(v)) = parse_config_str(&text) else {
            panic!("expected validation error");
        };
        assert!(v.iter().any(|x| x.path == "numerics.seed"));
    }

    #[test]
    fn bad_json_is_a_parse_error() {
        assert!(matches!(parse_config_str("{"), Err(CliError::Parse(_))));
    }
}
