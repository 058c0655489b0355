//! Traveling-wave analysis and simulation for a lattice SVIR vaccination
//! epidemic model.
//!
//! The model tracks susceptible, vaccinated, infected, and recovered
//! densities on the integer lattice with discrete diffusion. This crate
//! computes its equilibria and basic reproduction number, the critical
//! front speed and decay exponents of the linearized wave equations,
//! comparison bounds enclosing wave profiles, truncated-domain profile
//! solves, a Lyapunov functional certifying convergence to the endemic
//! state along waves, and direct lattice/ODE simulation with empirical
//! front-speed measurement.

pub mod bounds;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod lattice;
pub mod lyapunov;
pub mod model;
pub mod profile;

pub use bounds::{
    choose_bound_constants, eval_bounds, kink_excluded_grid, verify_subsuper, BoundConstants,
    BoundSextet, VerifyReport,
};
pub use dispersion::{
    critical_speed, delta, kappa0, lambda_roots, speed_sensitivities, CriticalSpeed, LambdaRoots,
    SensitivityReport,
};
pub use error::{Error, Result};
pub use config::{parse_config, parse_config_str, serialize_config, RunConfig, MODEL_KEYS};
pub use lattice::{
    dt_max, front_speed, initial_localized, ode_simulate, simulate, step, FrontEstimate,
    LatticeState, OdeTrajectory, Trajectory,
};
pub use lyapunov::{
    g, lyapunov_derivative_check, lyapunov_parts, lyapunov_slope, lyapunov_value, sigma,
    sigma_forms, LyapunovTrace,
};
pub use model::{
    basic_reproduction_number, disease_free_equilibrium, endemic_equilibrium,
    equilibrium_residual, DerivedRates, Equilibrium, ModelParams,
};
pub use profile::{
    apply_operator, boundary_check, profile_diagnostics, residual, solve_truncated, sup_distance,
    BoundaryReport, Profile, ProfileDiagnostics, ResidualReport, SolveReport,
};
