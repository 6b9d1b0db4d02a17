//! One-parameter sweeps: the same config rerun with a single field overridden.

use std::path::Path;

use bridgelab::DampingPoint;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{validate, ExperimentConfig, Violation};
use crate::error::CliError;
use crate::experiments::run_experiment;
use crate::output::OutputDir;

pub const SWEEP_PARAMS: [&str; 10] = [
    "xi", "gamma", "gamma0", "k", "alpha", "alpha0", "beta0", "ell", "n_modes", "dt",
];

fn bad(path: &str, message: String) -> CliError {
    CliError::Validation(vec![Violation {
        path: path.into(),
        message,
    }])
}

/// `xi` accepts `p/q` (a fraction of the span) or a plain position.
pub fn parse_xi(text: &str) -> Option<DampingPoint> {
    match text.split_once('/') {
        Some((p, q)) => Some(DampingPoint::ratio(p.trim().parse().ok()?, q.trim().parse().ok()?)),
        None => text.trim().parse().ok().map(DampingPoint::Absolute),
    }
}

pub fn apply_override(config: &ExperimentConfig, param: &str, value: &str) -> Result<ExperimentConfig, CliError> {
    let mut c = config.clone();
    let num = || {
        value
            .trim()
            .parse::<f64>()
            .map_err(|_| bad(param, format!("cannot parse {value:?} as a number")))
    };
    match param {
        "xi" => c.params.xi = parse_xi(value).ok_or_else(|| bad("xi", format!("cannot parse {value:?}")))?,
        "gamma" => c.params.gamma = num()?,
        "gamma0" => c.params.gamma0 = num()?,
        "k" => c.params.k = num()?,
        "alpha" => c.params.alpha = num()?,
        "alpha0" => c.params.alpha0 = num()?,
        "beta0" => c.params.beta0 = num()?,
        "ell" => c.params.ell = num()?,
        "n_modes" => {
            c.numerics.n_modes = value
                .trim()
                .parse()
                .map_err(|_| bad(param, format!("cannot parse {value:?} as a count")))?
        }
        "dt" => c.numerics.dt = num()?,
        other => {
            return Err(bad(
                "param",
                format!("cannot sweep {other:?}; allowed: {}", SWEEP_PARAMS.join(", ")),
            ))
        }
    }
    let found = validate(&c);
    if found.is_empty() {
        Ok(c)
    } else {
        Err(CliError::Validation(found))
    }
}

/// Directory-safe label for one sweep point.
fn label(param: &str, value: &str) -> String {
    let v: String = value
        .trim()
        .chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || ch == '.' || ch == '-' { ch } else { '_' })
        .collect();
    format!("{param}={v}")
}

/// Runs every point into `root/<param>=<value>/` and writes a root manifest.
pub fn run_sweep(config: &ExperimentConfig, param: &str, values: &[String], root: &Path) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(bad("values", "at least one value is required".into()));
    }
    // validate every point before running any
    let points = values
        .iter()
        .map(|v| apply_override(config, param, v).map(|c| (v, c)))
        .collect::<Result<Vec<_>, _>>()?;
    if root.join(crate::output::MANIFEST).exists() {
        return Err(CliError::Io(format!("{} already holds a manifest", root.display())));
    }
    let mut runs = Vec::new();
    for (value, c) in points {
        let name = label(param, value);
        let files = run_experiment(&c, OutputDir::create(&root.join(&name))?)?;
        let manifest = std::fs::read(root.join(&name).join(crate::output::MANIFEST))?;
        runs.push(json!({
            "value": value,
            "dir": name,
            "files": files.len(),
            "manifest_sha256": hex::encode(Sha256::digest(&manifest)),
        }));
    }
    let top = OutputDir::create(root)?;
    top.finish("sweep", json!({ "param": param, "runs": runs }))?;
    Ok(())
}
