//! Time-domain integration of the four-compartment lattice system and its
//! spatially homogeneous ODE reduction, plus front tracking and empirical
//! wave-speed estimation.
//!
//! Patches live on n in [-N, N] with no-flux boundaries (ghost value equals
//! the edge value). Susceptible, vaccinated, and recovered densities diffuse
//! with unit coefficient, infected densities with coefficient d. The
//! classical fixed-step 4-stage Runge-Kutta scheme keeps runs
//! bit-reproducible; spatially constant data reduces exactly to the ODE
//! integrator because the discrete Laplacian of a constant vanishes
//! identically in floating point and both integrators share one reaction
//! kernel.

use crate::error::{Error, Result};
use crate::model::{disease_free_equilibrium, DerivedRates, ModelParams};

/// Full lattice state: densities for all four compartments over patches
/// n in [-N, N], stored with index j = n + N.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    /// Half-width N of the patch range.
    pub n_half: usize,
    /// Current time.
    pub t: f64,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    /// Number of genuine negative undershoots (below -1e-12) clamped to
    /// zero so far; tiny roundoff-level undershoots are clamped silently.
    pub undershoot_clamps: u64,
}

impl LatticeState {
    /// Number of patches, 2N + 1.
    pub fn len(&self) -> usize {
        2 * self.n_half + 1
    }

    /// Whether the state holds no patches (never true for valid states).
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed patch index of storage slot j.
    pub fn patch(&self, j: usize) -> i64 {
        j as i64 - self.n_half as i64
    }

    fn sup(x: &[f64]) -> f64 {
        x.iter().cloned().fold(0.0_f64, f64::max)
    }
}

/// Stability ceiling for the time step at the current state:
/// 0.25 / (2 max(1, d) + beta1 sup S + beta2 sup V + mu3).
pub fn dt_max(p: &ModelParams, state: &LatticeState) -> f64 {
    let r = p.rates();
    0.25
        / (2.0 * p.d.max(1.0)
            + p.beta1 * LatticeState::sup(&state.s)
            + p.beta2 * LatticeState::sup(&state.v)
            + r.mu3)
}

/// Localized seeding: the infection-free equilibrium everywhere, with the
/// infected compartment raised to `i0` on the 2k+1 central patches.
pub fn initial_localized(p: &ModelParams, n_half: usize, k: usize, i0: f64) -> Result<LatticeState> {
    if k >= n_half {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            reason: "seed half-width must be smaller than the lattice half-width",
        });
    }
    if !(i0 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "i0",
            value: i0,
            reason: "seed level must be nonnegative",
        });
    }
    let e0 = disease_free_equilibrium(p);
    let len = 2 * n_half + 1;
    let mut i = vec![0.0; len];
    for (j, slot) in i.iter_mut().enumerate() {
        if (j as i64 - n_half as i64).unsigned_abs() <= k as u64 {
            *slot = i0;
        }
    }
    Ok(LatticeState {
        n_half,
        t: 0.0,
        s: vec![e0.s; len],
        v: vec![e0.v; len],
        i,
        r: vec![0.0; len],
        undershoot_clamps: 0,
    })
}

/// Shared reaction kernel for the three epidemic compartments. Written once
/// so the lattice step and the ODE step perform bitwise-identical
/// arithmetic on identical inputs.
#[inline]
fn reaction(s: f64, v: f64, i: f64, p: &ModelParams, r: &DerivedRates) -> (f64, f64, f64) {
    let infect_s = p.beta1 * s * i;
    let infect_v = p.beta2 * v * i;
    (
        p.lambda - infect_s - r.mu1 * s,
        p.alpha * s - infect_v - r.mu2 * v,
        infect_s + infect_v - r.mu3 * i,
    )
}

/// Stage combination y + (dt/6)(k1 + 2 k2 + 2 k3 + k4), shared between the
/// lattice and ODE integrators for bitwise agreement on constant data.
#[inline]
fn rk4_combine(y: f64, k1: f64, k2: f64, k3: f64, k4: f64, dt: f64) -> f64 {
    y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// No-flux discrete Laplacian at slot j: ghost values copy the edge.
#[inline]
fn lap(x: &[f64], j: usize) -> f64 {
    let left = if j == 0 { x[0] } else { x[j - 1] };
    let right = if j + 1 == x.len() { x[j] } else { x[j + 1] };
    right - 2.0 * x[j] + left
}

struct Arrays {
    s: Vec<f64>,
    v: Vec<f64>,
    i: Vec<f64>,
    r: Vec<f64>,
}

impl Arrays {
    fn zeros(len: usize) -> Self {
        Arrays {
            s: vec![0.0; len],
            v: vec![0.0; len],
            i: vec![0.0; len],
            r: vec![0.0; len],
        }
    }
}

fn rhs_into(p: &ModelParams, rates: &DerivedRates, y: &Arrays, out: &mut Arrays) {
    let len = y.s.len();
    for j in 0..len {
        let (ds, dv, di) = reaction(y.s[j], y.v[j], y.i[j], p, rates);
        out.s[j] = lap(&y.s, j) + ds;
        out.v[j] = lap(&y.v, j) + dv;
        out.i[j] = p.d * lap(&y.i, j) + di;
        out.r[j] = lap(&y.r, j) + p.gamma1 * y.v[j] + p.gamma * y.i[j] - p.mu * y.r[j];
    }
}

/// Per-run density ceilings used by the instability detector: the larger of
/// the initial supremum and the relevant equilibrium-derived envelope.
struct Caps {
    s: f64,
    v: f64,
    i: f64,
    r: f64,
}

impl Caps {
    fn new(p: &ModelParams, init: &LatticeState) -> Caps {
        let e0 = disease_free_equilibrium(p);
        let r = p.rates();
        let sup_s0 = LatticeState::sup(&init.s);
        let s = sup_s0.max(e0.s);
        let v = LatticeState::sup(&init.v).max(e0.v * (1.0 + sup_s0 / e0.s));
        let i = LatticeState::sup(&init.i)
            .max(p.lambda * (p.beta1 + p.beta2) / (p.mu * r.mu3));
        let rr = LatticeState::sup(&init.r).max((p.gamma1 * v + p.gamma * i) / p.mu);
        Caps { s, v, i, r: rr }
    }

    fn check(&self, arrays: &Arrays, t: f64, n_half: usize) -> Result<()> {
        let checks: [(&str, &[f64], f64); 4] = [
            ("S", &arrays.s, self.s),
            ("V", &arrays.v, self.v),
            ("I", &arrays.i, self.i),
            ("R", &arrays.r, self.r),
        ];
        for (name, arr, cap) in checks {
            for (j, &x) in arr.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::Instability {
                        t,
                        what: format!("{name} is not finite at patch {}", j as i64 - n_half as i64),
                    });
                }
                if x > 10.0 * cap {
                    return Err(Error::Instability {
                        t,
                        what: format!(
                            "{name} = {x} exceeds 10x its envelope {cap} at patch {}",
                            j as i64 - n_half as i64
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

struct Scratch {
    k1: Arrays,
    k2: Arrays,
    k3: Arrays,
    k4: Arrays,
    stage: Arrays,
}

impl Scratch {
    fn new(len: usize) -> Scratch {
        Scratch {
            k1: Arrays::zeros(len),
            k2: Arrays::zeros(len),
            k3: Arrays::zeros(len),
            k4: Arrays::zeros(len),
            stage: Arrays::zeros(len),
        }
    }
}

fn stage_into(base: &Arrays, k: &Arrays, coeff: f64, out: &mut Arrays) {
    let len = base.s.len();
    for j in 0..len {
        out.s[j] = base.s[j] + coeff * k.s[j];
        out.v[j] = base.v[j] + coeff * k.v[j];
        out.i[j] = base.i[j] + coeff * k.i[j];
        out.r[j] = base.r[j] + coeff * k.r[j];
    }
}

fn rk4_into(
    p: &ModelParams,
    rates: &DerivedRates,
    cur: &Arrays,
    dt: f64,
    scratch: &mut Scratch,
    next: &mut Arrays,
) {
    rhs_into(p, rates, cur, &mut scratch.k1);
    stage_into(cur, &scratch.k1, 0.5 * dt, &mut scratch.stage);
    rhs_into(p, rates, &scratch.stage, &mut scratch.k2);
    stage_into(cur, &scratch.k2, 0.5 * dt, &mut scratch.stage);
    rhs_into(p, rates, &scratch.stage, &mut scratch.k3);
    stage_into(cur, &scratch.k3, dt, &mut scratch.stage);
    rhs_into(p, rates, &scratch.stage, &mut scratch.k4);
    let len = cur.s.len();
    for j in 0..len {
        next.s[j] = rk4_combine(cur.s[j], scratch.k1.s[j], scratch.k2.s[j], scratch.k3.s[j], scratch.k4.s[j], dt);
        next.v[j] = rk4_combine(cur.v[j], scratch.k1.v[j], scratch.k2.v[j], scratch.k3.v[j], scratch.k4.v[j], dt);
        next.i[j] = rk4_combine(cur.i[j], scratch.k1.i[j], scratch.k2.i[j], scratch.k3.i[j], scratch.k4.i[j], dt);
        next.r[j] = rk4_combine(cur.r[j], scratch.k1.r[j], scratch.k2.r[j], scratch.k3.r[j], scratch.k4.r[j], dt);
    }
}

/// Clamp negative densities to zero; undershoots beyond roundoff scale
/// (below -1e-12) are counted, tinier ones silently repaired.
fn clamp_nonnegative(arr: &mut [f64], clamps: &mut u64) {
    for x in arr.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-12 {
                *clamps += 1;
            }
            *x = 0.0;
        }
    }
}

/// Advance the lattice state by one Runge-Kutta step of length dt.
pub fn step(state: &LatticeState, p: &ModelParams, dt: f64) -> Result<LatticeState> {
    let ceiling = dt_max(p, state);
    if !(dt > 0.0) || dt > ceiling {
        return Err(Error::StepTooLarge { dt, dt_max: ceiling });
    }
    let caps = Caps::new(p, state);
    let rates = p.rates();
    let len = state.len();
    let mut scratch = Scratch::new(len);
    let cur = Arrays {
        s: state.s.clone(),
        v: state.v.clone(),
        i: state.i.clone(),
        r: state.r.clone(),
    };
    let mut next = Arrays::zeros(len);
    rk4_into(p, &rates, &cur, dt, &mut scratch, &mut next);
    let t = state.t + dt;
    let mut clamps = state.undershoot_clamps;
    clamp_nonnegative(&mut next.s, &mut clamps);
    clamp_nonnegative(&mut next.v, &mut clamps);
    clamp_nonnegative(&mut next.i, &mut clamps);
    clamp_nonnegative(&mut next.r, &mut clamps);
    caps.check(&next, t, state.n_half)?;
    Ok(LatticeState {
        n_half: state.n_half,
        t,
        s: next.s,
        v: next.v,
        i: next.i,
        r: next.r,
        undershoot_clamps: clamps,
    })
}

/// Snapshot sequence from a lattice run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<LatticeState>,
}

/// Integrate the lattice system to time `t_end` with fixed step `dt`,
/// recording the initial state, every `snapshot_every`-th step, and the
/// final state.
pub fn simulate(
    p: &ModelParams,
    init: LatticeState,
    t_end: f64,
    dt: f64,
    snapshot_every: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "simulation horizon must be positive",
        });
    }
    if snapshot_every == 0 {
        return Err(Error::InvalidParameter {
            name: "snapshot_every",
            value: 0.0,
            reason: "snapshot cadence must be at least 1 step",
        });
    }
    let ceiling = dt_max(p, &init);
    if !(dt > 0.0) || dt > ceiling {
        return Err(Error::StepTooLarge { dt, dt_max: ceiling });
    }
    let caps = Caps::new(p, &init);
    let rates = p.rates();
    let len = init.len();
    let steps = (t_end / dt).round().max(1.0) as usize;

    let mut scratch = Scratch::new(len);
    let mut cur = Arrays {
        s: init.s.clone(),
        v: init.v.clone(),
        i: init.i.clone(),
        r: init.r.clone(),
    };
    let mut next = Arrays::zeros(len);
    let mut t = init.t;
    let mut clamps = init.undershoot_clamps;
    let n_half = init.n_half;
    let mut snapshots = vec![init];

    for step_index in 1..=steps {
        rk4_into(p, &rates, &cur, dt, &mut scratch, &mut next);
        std::mem::swap(&mut cur, &mut next);
        t += dt;
        clamp_nonnegative(&mut cur.s, &mut clamps);
        clamp_nonnegative(&mut cur.v, &mut clamps);
        clamp_nonnegative(&mut cur.i, &mut clamps);
        clamp_nonnegative(&mut cur.r, &mut clamps);
        caps.check(&cur, t, n_half)?;
        if step_index % snapshot_every == 0 || step_index == steps {
            snapshots.push(LatticeState {
                n_half,
                t,
                s: cur.s.clone(),
                v: cur.v.clone(),
                i: cur.i.clone(),
                r: cur.r.clone(),
                undershoot_clamps: clamps,
            });
        }
    }
    Ok(Trajectory { snapshots })
}

/// Empirical front measurement: threshold, per-snapshot front positions,
/// and the fitted speed over the trailing half of the usable track.
#[derive(Debug, Clone)]
pub struct FrontEstimate {
    pub theta: f64,
    /// Snapshot times with a tracked front, truncated at boundary contact.
    pub times: Vec<f64>,
    /// Interpolated front positions (in patch units) matching `times`.
    pub positions: Vec<f64>,
    /// Least-squares speed over the fit window.
    pub speed: f64,
    /// Root-mean-square deviation of positions from the linear fit.
    pub fit_residual: f64,
    /// Time span [t0, t1] of the fit window.
    pub window: (f64, f64),
}

/// Interpolated position of the rightmost crossing of `theta` in one
/// snapshot, or None if the infected density never reaches it.
fn front_position(state: &LatticeState, theta: f64) -> Option<f64> {
    let len = state.len();
    let j = (0..len).rev().find(|&j| state.i[j] >= theta)?;
    let n = state.patch(j) as f64;
    if j + 1 == len {
        return Some(n);
    }
    let here = state.i[j];
    let next = state.i[j + 1];
    if here > next {
        Some(n + (here - theta) / (here - next))
    } else {
        Some(n)
    }
}

/// Estimate the front speed from a trajectory: per-snapshot rightmost
/// threshold crossings (sub-patch interpolation), truncated at the first
/// boundary contact (within 10 patches of n = N), least-squares fitted over
/// the trailing half of the remaining track.
pub fn front_speed(traj: &Trajectory, theta: f64) -> Result<FrontEstimate> {
    let first = traj
        .snapshots
        .first()
        .expect("trajectory always holds the initial snapshot");
    let n_half = first.n_half as f64;
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "front threshold must be positive",
        });
    }

    let mut times = Vec::new();
    let mut positions = Vec::new();
    let mut crossed = false;
    let mut contact_time = None;
    for snap in &traj.snapshots {
        match front_position(snap, theta) {
            Some(x) => {
                crossed = true;
                if x >= n_half - 10.0 {
                    contact_time = Some(snap.t);
                    break;
                }
                times.push(snap.t);
                positions.push(x);
            }
            None => {
                if crossed {
                    // The crossing was lost again (decaying seed); the
                    // remaining track is what we have.
                    break;
                }
            }
        }
    }
    if !crossed {
        return Err(Error::NoFront { theta });
    }

    // Fit over the trailing half of the usable track.
    let fit_from = times.len() / 2;
    let t_fit = &times[fit_from..];
    let x_fit = &positions[fit_from..];
    if t_fit.len() < 2 || t_fit[t_fit.len() - 1] <= t_fit[0] {
        return Err(Error::FrontTouchedBoundary {
            t: contact_time.unwrap_or_else(|| times.last().copied().unwrap_or(0.0)),
        });
    }
    let advance = x_fit[x_fit.len() - 1] - x_fit[0];
    if advance < 20.0 {
        return Err(Error::FrontTooSlow {
            advance,
            required: 20.0,
        });
    }

    let len = t_fit.len() as f64;
    let t_mean = t_fit.iter().sum::<f64>() / len;
    let x_mean = x_fit.iter().sum::<f64>() / len;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &x) in t_fit.iter().zip(x_fit) {
        num += (t - t_mean) * (x - x_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    let speed = num / den;
    let intercept = x_mean - speed * t_mean;
    let mut sq = 0.0;
    for (&t, &x) in t_fit.iter().zip(x_fit) {
        let dev = x - (intercept + speed * t);
        sq += dev * dev;
    }
    Ok(FrontEstimate {
        theta,
        window: (t_fit[0], t_fit[t_fit.len() - 1]),
        times,
        positions,
        speed,
        fit_residual: (sq / len).sqrt(),
    })
}

/// Trajectory of the spatially homogeneous three-compartment system.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 3]>,
}

/// Integrate the homogeneous (S, V, I) system with the same fixed-step
/// Runge-Kutta scheme and reaction arithmetic as the lattice integrator.
pub fn ode_simulate(p: &ModelParams, init: [f64; 3], t_end: f64, dt: f64) -> Result<OdeTrajectory> {
    if init.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "init",
            value: *init.iter().find(|x| !(**x >= 0.0)).unwrap(),
            reason: "initial densities must be nonnegative",
        });
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "simulation horizon must be positive",
        });
    }
    let rates = p.rates();
    let ceiling = 0.25 / (p.beta1 * init[0] + p.beta2 * init[1] + rates.mu3).max(1e-12);
    if !(dt > 0.0) || dt > ceiling {
        return Err(Error::StepTooLarge { dt, dt_max: ceiling });
    }
    let e0 = disease_free_equilibrium(p);
    let cap_s = init[0].max(e0.s);
    let cap_v = init[1].max(e0.v * (1.0 + init[0] / e0.s));
    let cap_i = init[2].max(p.lambda * (p.beta1 + p.beta2) / (p.mu * rates.mu3));
    let caps = [cap_s, cap_v, cap_i];

    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = init;
    let mut t = 0.0;
    times.push(t);
    states.push(y);
    let f = |y: [f64; 3]| -> [f64; 3] {
        let (ds, dv, di) = reaction(y[0], y[1], y[2], p, &rates);
        [ds, dv, di]
    };
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f([
            y[0] + 0.5 * dt * k1[0],
            y[1] + 0.5 * dt * k1[1],
            y[2] + 0.5 * dt * k1[2],
        ]);
        let k3 = f([
            y[0] + 0.5 * dt * k2[0],
            y[1] + 0.5 * dt * k2[1],
            y[2] + 0.5 * dt * k2[2],
        ]);
        let k4 = f([
            y[0] + dt * k3[0],
            y[1] + dt * k3[1],
            y[2] + dt * k3[2],
        ]);
        for c in 0..3 {
            y[c] = rk4_combine(y[c], k1[c], k2[c], k3[c], k4[c], dt);
        }
        t += dt;
        for (c, name) in ["S", "V", "I"].iter().enumerate() {
            if !y[c].is_finite() {
                return Err(Error::Instability {
                    t,
                    what: format!("{name} is not finite"),
                });
            }
            if y[c] > 10.0 * caps[c] {
                return Err(Error::Instability {
                    t,
                    what: format!("{name} = {} exceeds 10x its envelope {}", y[c], caps[c]),
                });
            }
        }
        times.push(t);
        states.push(y);
    }
    Ok(OdeTrajectory { times, states })
}
