//! Error type shared by all modules.
//!
//! Every fallible operation in the crate returns `Result<T, Error>`. Variants
//! carry enough context (parameter names, offending values, grid locations)
//! for the CLI to print actionable one-line diagnostics.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter failed validation at construction.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An operation requiring R0 > 1 was called in the subcritical regime.
    #[error("requires R0 > 1 (got R0 = {r0})")]
    Subcritical { r0: f64 },

    /// No endemic equilibrium exists (R0 <= 1).
    #[error("no endemic equilibrium: R0 = {r0} <= 1")]
    NoEndemicEquilibrium { r0: f64 },

    /// Speed at or below the critical speed where two distinct decay roots
    /// are required. Carries the tangential root r* when c == c*.
    #[error("speed c = {c} is at or below critical c* = {c_star}; no pair of decay roots")]
    AtOrBelowCritical {
        c: f64,
        c_star: f64,
        /// Tangential root r* reported when c is (numerically) equal to c*.
        tangential_root: Option<f64>,
    },

    /// An iterative numeric routine failed to bracket or converge.
    #[error("{what}: no convergence after {iterations} iterations (last delta {last_delta:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_delta: f64,
    },

    /// Bound-constant construction could not produce admissible constants.
    #[error("bound constant construction failed: {reason}")]
    BoundConstruction { reason: String },

    /// A differential inequality of the comparison pair fails on the grid.
    #[error("comparison inequality {inequality} violated at zeta = {zeta} by {violation:e}")]
    BoundViolation {
        inequality: &'static str,
        zeta: f64,
        violation: f64,
    },

    /// Input profile leaves the admissible envelope set.
    #[error("{component} leaves its envelope at zeta = {zeta} by {excess:e}")]
    OutsideEnvelope {
        component: &'static str,
        zeta: f64,
        excess: f64,
    },

    /// Truncated domain too narrow for the chosen bound constants.
    #[error("half-width B = {b} too small; need B >= {required} (deepest kink + margin)")]
    DomainTooNarrow { b: f64, required: f64 },

    /// A profile endpoint sits further from its limit state than allowed.
    #[error("{end} boundary gap in {component}: {gap:e} exceeds allowed {allowed:e}")]
    BoundaryGap {
        end: &'static str,
        component: &'static str,
        gap: f64,
        allowed: f64,
    },

    /// Grid step does not divide the unit shift (or the half-width).
    #[error("grid step h = {h} invalid: {reason}")]
    BadGrid { h: f64, reason: &'static str },

    /// Lyapunov check failure: positivity of the derivative or the
    /// finite-difference agreement band.
    #[error("Lyapunov check failed at zeta = {zeta}: {kind} (value {value:e})")]
    LyapunovViolation {
        zeta: f64,
        kind: &'static str,
        value: f64,
    },

    /// Dual evaluation of the dissipation term disagrees between forms.
    #[error("sigma forms disagree: raw {raw:e} vs regrouped {regrouped:e}")]
    SigmaMismatch { raw: f64, regrouped: f64 },

    /// An analytic value failed its internal finite-difference cross-check.
    #[error("{what}: analytic {analytic:e} vs finite difference {fd:e}")]
    FdMismatch {
        what: &'static str,
        analytic: f64,
        fd: f64,
    },

    /// Argument outside a function's domain (e.g. g(x) with x <= 0).
    #[error("{what} requires a positive argument (got {value})")]
    NonPositive { what: &'static str, value: f64 },

    /// Time step exceeds the stability ceiling.
    #[error("dt = {dt} exceeds dt_max = {dt_max}")]
    StepTooLarge { dt: f64, dt_max: f64 },

    /// A lattice run blew up (NaN or a density far beyond its envelope).
    #[error("lattice instability at t = {t}: {what}")]
    Instability { t: f64, what: String },

    /// Front tracking: no patch ever crosses the threshold.
    #[error("no front: threshold {theta} never crossed")]
    NoFront { theta: f64 },

    /// Front tracking: the front reached the boundary before a usable fit
    /// window formed.
    #[error("front touched boundary at t = {t} before a usable fit window formed")]
    FrontTouchedBoundary { t: f64 },

    /// Front tracking: the front did not advance enough in the fit window.
    #[error("front advanced only {advance} patches in the fit window; need >= {required}")]
    FrontTooSlow { advance: f64, required: f64 },

    /// Config file problem; `line` is 1-based (0 for file-level problems).
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// Wrapper for I/O with path context.
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
