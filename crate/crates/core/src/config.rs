//! Plain-text configuration handling shared by every subcommand.
//!
//! The file format is one `key = value` per line with `#` starting a
//! comment; the schema is exactly the eight model-parameter keys
//! `lambda, beta1, beta2, alpha, mu, gamma, gamma1, d`. The schema is
//! strict: unknown keys, duplicates, and missing keys are hard errors with
//! 1-based line numbers (line 0 marks file-level problems). Run options
//! (domain half-width, grid step, tolerances, lattice size, time step,
//! horizon) carry documented defaults and are overridden per subcommand by
//! command-line flags, not by the file.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Fixed key order used both for parsing bookkeeping and for the
/// canonical serialization.
pub const MODEL_KEYS: [&str; 8] = [
    "lambda", "beta1", "beta2", "alpha", "mu", "gamma", "gamma1", "d",
];

/// A full run configuration: the model parameter block plus numeric
/// options with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    /// Truncation half-width for profile solves.
    pub b: f64,
    /// Grid step for profile solves and bound grids.
    pub h: f64,
    /// Fixed-point stopping tolerance.
    pub tol: f64,
    /// Fixed-point iteration cap.
    pub max_iter: usize,
    /// Lattice half-width N (patches run over [-N, N]).
    pub n_half: usize,
    /// Time step for lattice and homogeneous runs.
    pub dt: f64,
    /// Time horizon for lattice and homogeneous runs.
    pub t_end: f64,
}

impl RunConfig {
    /// Documented defaults wrapped around a model parameter block.
    pub fn with_model(model: ModelParams) -> RunConfig {
        RunConfig {
            model,
            b: 30.0,
            h: 0.01,
            tol: 1e-10,
            max_iter: 500,
            n_half: 600,
            dt: 0.01,
            t_end: 400.0,
        }
    }
}

/// Parse a configuration from text. Every model key must appear exactly
/// once; values must be finite numbers accepted by the model validator.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut values: [Option<(f64, usize)>; 8] = [None; 8];
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value_text) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value_text = value_text.trim();
        let slot = MODEL_KEYS
            .iter()
            .position(|&k| k == key)
            .ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("unknown key `{key}`"),
            })?;
        if let Some((_, first_line)) = values[slot] {
            return Err(Error::Config {
                line: line_no,
                message: format!("duplicate key `{key}` (first set on line {first_line})"),
            });
        }
        let value: f64 = value_text.parse().map_err(|_| Error::Config {
            line: line_no,
            message: format!("`{value_text}` is not a number for key `{key}`"),
        })?;
        values[slot] = Some((value, line_no));
    }
    for (slot, key) in MODEL_KEYS.iter().enumerate() {
        if values[slot].is_none() {
            return Err(Error::Config {
                line: 0,
                message: format!("missing key `{key}`"),
            });
        }
    }
    let v = |slot: usize| values[slot].unwrap().0;
    let model = ModelParams::new(
        v(0),
        v(1),
        v(2),
        v(3),
        v(4),
        v(5),
        v(6),
        v(7),
    )
    .map_err(|err| match err {
        Error::InvalidParameter { name, value, reason } => {
            let line = MODEL_KEYS
                .iter()
                .position(|&k| k == name)
                .and_then(|slot| values[slot])
                .map_or(0, |(_, l)| l);
            Error::Config {
                line,
                message: format!("out-of-range value {value} for key `{name}`: {reason}"),
            }
        }
        other => other,
    })?;
    Ok(RunConfig::with_model(model))
}

/// Parse a configuration file, wrapping I/O problems with the path.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|err| Error::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    })?;
    parse_config_str(&text)
}

/// Canonical serialization: the eight model keys in fixed order, each value
/// printed with 17 significant digits so parsing reproduces it exactly.
/// Serializing, parsing, and serializing again is byte-identical.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let m = &cfg.model;
    let vals = [
        m.lambda, m.beta1, m.beta2, m.alpha, m.mu, m.gamma, m.gamma1, m.d,
    ];
    let mut out = String::new();
    for (key, val) in MODEL_KEYS.iter().zip(vals) {
        out.push_str(&format!("{key} = {val:.16e}\n"));
    }
    out
}
