//! Command-line front end: wires configuration files to every library
//! module and emits CSV artifacts plus short stdout reports.
//!
//! Exit codes: 0 = success (all checks passed), 1 = a computation or
//! certification failed (e.g. a violated inequality, instability, or
//! non-convergence), 2 = usage or configuration error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use epiwave::config::{parse_config, RunConfig};
use epiwave::error::Error;
use epiwave::model::{
    basic_reproduction_number, disease_free_equilibrium, endemic_equilibrium,
    equilibrium_residual, ModelParams,
};
use epiwave::{
    bounds, dispersion, front_speed, initial_localized, lyapunov, ode_simulate,
    profile as profile_mod, simulate, Profile,
};

#[derive(Parser)]
#[command(
    name = "epiwave",
    version,
    about = "Traveling-wave analysis and simulation for a lattice vaccination epidemic model"
)]
struct Cli {
    /// Model parameter file (key = value, keys lambda beta1 beta2 alpha mu
    /// gamma gamma1 d). Built-in reference parameters when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the basic reproduction number and infection-free densities.
    R0,
    /// Print both equilibria of the homogeneous system with residuals.
    Equilibria,
    /// Print the critical wave speed c* and its decay exponent r*.
    Speed,
    /// Print the decay exponents r1 < r2 for a supercritical speed c > c*.
    Roots {
        #[arg(long)]
        c: f64,
    },
    /// Verify the sub/super-solution inequalities on a grid; write residuals.
    BoundsCheck {
        #[arg(long)]
        c: f64,
        #[arg(long = "grid-from", default_value_t = -40.0, allow_negative_numbers = true)]
        grid_from: f64,
        #[arg(long = "grid-to", default_value_t = 40.0, allow_negative_numbers = true)]
        grid_to: f64,
        #[arg(long = "grid-n", default_value_t = 4001)]
        grid_n: usize,
        /// Override the lower-bound amplitude M1 (probe of constant necessity).
        #[arg(long = "force-m1")]
        force_m1: Option<f64>,
        #[arg(long, default_value = "bounds.csv")]
        out: PathBuf,
    },
    /// Solve the truncated wave-profile fixed point and write the profile.
    Profile {
        #[arg(long)]
        c: f64,
        #[arg(long = "B")]
        b: Option<f64>,
        #[arg(long = "h")]
        h: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        #[arg(long, default_value = "profile.csv")]
        out: PathBuf,
    },
    /// Certify a computed profile with the Lyapunov functional trace.
    Lyapunov {
        /// Profile CSV (header `zeta,S,V,I`) as written by `profile`.
        #[arg(long)]
        profile: PathBuf,
        /// Wave speed the profile was computed at.
        #[arg(long)]
        c: f64,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Run the lattice system from a localized seed; write snapshots and front track.
    Simulate {
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Seed half-width: the infected bump covers patches |n| <= k.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Seed level for the infected compartment.
        #[arg(long = "I0", default_value_t = 1.0)]
        i0: f64,
        /// Record a snapshot every this many steps.
        #[arg(long = "snapshot-every", default_value_t = 100)]
        snapshot_every: usize,
        /// Front threshold; defaults to I*/2 when the endemic state exists.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value = "snapshots.csv")]
        out: PathBuf,
        #[arg(long = "front-out", default_value = "front.csv")]
        front_out: PathBuf,
    },
    /// Integrate the homogeneous three-compartment system.
    Ode {
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "S0")]
        s0: Option<f64>,
        #[arg(long = "V0")]
        v0: Option<f64>,
        #[arg(long = "I0", default_value_t = 0.1)]
        i0: f64,
        #[arg(long, default_value = "ode.csv")]
        out: PathBuf,
    },
    /// Sweep one parameter; write c*, r*, and the speed sensitivity per value.
    Sweep {
        #[arg(long, value_parser = ["beta1", "beta2", "gamma1", "d"])]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (`epiwave r0 | head -1`),
    // as standard stream tools do, instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("epiwave {name}: error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::R0 => "r0",
        Command::Equilibria => "equilibria",
        Command::Speed => "speed",
        Command::Roots { .. } => "roots",
        Command::BoundsCheck { .. } => "bounds-check",
        Command::Profile { .. } => "profile",
        Command::Lyapunov { .. } => "lyapunov",
        Command::Simulate { .. } => "simulate",
        Command::Ode { .. } => "ode",
        Command::Sweep { .. } => "sweep",
    }
}

/// Usage/configuration problems exit 2, computation failures exit 1.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Io { .. } | Error::InvalidParameter { .. } => 2,
        _ => 1,
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Buffered CSV writer with path context on every error.
struct CsvOut {
    path: String,
    w: BufWriter<File>,
}

impl CsvOut {
    fn create(path: &Path) -> Result<CsvOut, Error> {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(CsvOut {
            path: path.display().to_string(),
            w: BufWriter::new(file),
        })
    }

    fn line(&mut self, line: &str) -> Result<(), Error> {
        writeln!(self.w, "{line}").map_err(|e| Error::Io {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }

    fn finish(mut self) -> Result<(), Error> {
        self.w.flush().map_err(|e| Error::Io {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => parse_config(p),
        None => {
            let model = ModelParams::new(1.0, 0.3, 0.1, 0.2, 0.1, 0.3, 0.1, 1.0)
                .expect("reference parameters are valid");
            Ok(RunConfig::with_model(model))
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let cfg = load_config(&cli.config)?;
    let p = cfg.model;
    match cli.command {
        Command::R0 => {
            let rates = p.rates();
            let e0 = disease_free_equilibrium(&p);
            println!("R0 = {}", num(basic_reproduction_number(&p)));
            println!("S0 = {}", num(e0.s));
            println!("V0 = {}", num(e0.v));
            println!("mu1 = {}", num(rates.mu1));
            println!("mu2 = {}", num(rates.mu2));
            println!("mu3 = {}", num(rates.mu3));
            Ok(0)
        }
        Command::Equilibria => {
            let e0 = disease_free_equilibrium(&p);
            let res0 = equilibrium_residual(&p, &e0);
            println!(
                "E0: S = {} V = {} I = {}",
                num(e0.s),
                num(e0.v),
                num(e0.i)
            );
            println!("E0 residual = {}", num(max_abs3(res0)));
            let r0 = basic_reproduction_number(&p);
            if r0 > 1.0 {
                let estar = endemic_equilibrium(&p)?;
                let res = equilibrium_residual(&p, &estar);
                println!(
                    "E*: S = {} V = {} I = {}",
                    num(estar.s),
                    num(estar.v),
                    num(estar.i)
                );
                println!("E* residual = {}", num(max_abs3(res)));
            } else {
                println!("E*: none (R0 = {} <= 1)", num(r0));
            }
            Ok(0)
        }
        Command::Speed => {
            let cs = dispersion::critical_speed(&p)?;
            println!("c_star = {}", num(cs.c_star));
            println!("r_star = {}", num(cs.r_star));
            Ok(0)
        }
        Command::Roots { c } => {
            let roots = dispersion::lambda_roots(&p, c)?;
            let kappa = dispersion::kappa0(&p, c)?;
            println!("r1 = {}", num(roots.r1));
            println!("r2 = {}", num(roots.r2));
            println!("kappa0 = {}", num(kappa));
            Ok(0)
        }
        Command::BoundsCheck {
            c,
            grid_from,
            grid_to,
            grid_n,
            force_m1,
            out,
        } => {
            let mut k = bounds::choose_bound_constants(&p, c)?;
            if let Some(m1) = force_m1 {
                k = bounds::with_m1(&k, m1);
            }
            let grid = bounds::kink_excluded_grid(grid_from, grid_to, grid_n, &k);
            let samples = bounds::sample_inequalities(&k, &p, c, &grid);
            let mut csv = CsvOut::create(&out)?;
            csv.line("zeta,ineq_id,lhs_minus_rhs")?;
            for s in &samples {
                csv.line(&format!("{},{},{}", num(s.zeta), s.ineq, num(s.lhs_minus_rhs)))?;
            }
            csv.finish()?;
            match bounds::verify_subsuper(&k, &p, c, &grid) {
                Ok(report) => {
                    println!(
                        "PASS: worst violation = {} at zeta = {} ({})",
                        num(report.worst_violation),
                        num(report.worst_zeta),
                        report.worst_ineq
                    );
                    Ok(0)
                }
                Err(Error::BoundViolation {
                    inequality,
                    zeta,
                    violation,
                }) => {
                    println!(
                        "FAIL: inequality {inequality} violated at zeta = {} (violation = {})",
                        num(zeta),
                        num(violation)
                    );
                    Ok(1)
                }
                Err(other) => Err(other),
            }
        }
        Command::Profile {
            c,
            b,
            h,
            tol,
            max_iter,
            out,
        } => {
            let b = b.unwrap_or(cfg.b);
            let h = h.unwrap_or(cfg.h);
            let tol = tol.unwrap_or(cfg.tol);
            let max_iter = max_iter.unwrap_or(cfg.max_iter);
            let (pr, report) = profile_mod::solve_truncated(&p, c, b, h, tol, max_iter)?;
            let mut csv = CsvOut::create(&out)?;
            csv.line("zeta,S,V,I")?;
            for j in 0..pr.node_count() {
                csv.line(&format!(
                    "{},{},{},{}",
                    num(pr.zeta(j)),
                    num(pr.s[j]),
                    num(pr.v[j]),
                    num(pr.i[j])
                ))?;
            }
            csv.finish()?;
            println!("# iterations = {}", report.iterations);
            println!("# final_change = {}", num(report.final_change));
            println!(
                "# residual_max = {} at zeta = {} (equation {})",
                num(report.residual.max_abs),
                num(report.residual.at_zeta),
                report.residual.equation
            );
            println!("# left_gap = {}", num(report.left_gap));
            println!("# right_gap = {}", num(report.right_gap));
            println!("# clamped_last = {}", report.clamped_last);
            Ok(0)
        }
        Command::Lyapunov { profile, c, out } => {
            let pr = read_profile_csv(&profile, c)?;
            let estar = endemic_equilibrium(&p)?;
            match lyapunov::lyapunov_derivative_check(&pr, &p, &estar) {
                Ok(trace) => {
                    let mut csv = CsvOut::create(&out)?;
                    csv.line("zeta,V,dVdzeta,W1,W2,W3,W4")?;
                    for (i, &z) in trace.zeta.iter().enumerate() {
                        let w = trace.parts[i];
                        csv.line(&format!(
                            "{},{},{},{},{},{},{}",
                            num(z),
                            num(trace.value[i]),
                            num(trace.slope[i]),
                            num(w[0]),
                            num(w[1]),
                            num(w[2]),
                            num(w[3])
                        ))?;
                    }
                    csv.finish()?;
                    let min_slope = trace.slope.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max_slope = trace.slope.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    println!(
                        "PASS: dV/dzeta <= 0 on [{}, {}] ({} nodes)",
                        num(trace.zeta[0]),
                        num(*trace.zeta.last().unwrap()),
                        trace.zeta.len()
                    );
                    println!("min_slope = {}", num(min_slope));
                    println!("max_slope = {}", num(max_slope));
                    Ok(0)
                }
                Err(err @ Error::LyapunovViolation { .. })
                | Err(err @ Error::SigmaMismatch { .. }) => {
                    println!("FAIL: {err}");
                    Ok(1)
                }
                Err(other) => Err(other),
            }
        }
        Command::Simulate {
            n,
            t,
            dt,
            k,
            i0,
            snapshot_every,
            theta,
            out,
            front_out,
        } => {
            let n = n.unwrap_or(cfg.n_half);
            let t_end = t.unwrap_or(cfg.t_end);
            let dt = dt.unwrap_or(cfg.dt);
            let init = initial_localized(&p, n, k, i0)?;
            let traj = simulate(&p, init, t_end, dt, snapshot_every)?;
            let last = traj.snapshots.last().expect("at least the initial snapshot");
            let mut csv = CsvOut::create(&out)?;
            csv.line("t,n,S,V,I,R")?;
            for snap in &traj.snapshots {
                for j in 0..snap.len() {
                    csv.line(&format!(
                        "{},{},{},{},{},{}",
                        num(snap.t),
                        snap.patch(j),
                        num(snap.s[j]),
                        num(snap.v[j]),
                        num(snap.i[j]),
                        num(snap.r[j])
                    ))?;
                }
            }
            csv.finish()?;
            println!("# snapshots = {}", traj.snapshots.len());
            println!("# undershoot_clamps = {}", last.undershoot_clamps);

            let theta = match theta {
                Some(th) => Some(th),
                None => {
                    if basic_reproduction_number(&p) > 1.0 {
                        Some(endemic_equilibrium(&p)?.i / 2.0)
                    } else {
                        None
                    }
                }
            };
            let mut front_csv = CsvOut::create(&front_out)?;
            front_csv.line("t,front_pos")?;
            match theta {
                None => {
                    front_csv.finish()?;
                    println!("front: skipped (no endemic state; pass --theta to force tracking)");
                }
                Some(th) => match front_speed(&traj, th) {
                    Ok(est) => {
                        for (t, x) in est.times.iter().zip(&est.positions) {
                            front_csv.line(&format!("{},{}", num(*t), num(*x)))?;
                        }
                        front_csv.finish()?;
                        println!("theta = {}", num(th));
                        println!("c_emp = {}", num(est.speed));
                        println!("fit_residual = {}", num(est.fit_residual));
                        println!("window = [{}, {}]", num(est.window.0), num(est.window.1));
                    }
                    Err(
                        err @ (Error::NoFront { .. }
                        | Error::FrontTouchedBoundary { .. }
                        | Error::FrontTooSlow { .. }),
                    ) => {
                        front_csv.finish()?;
                        println!("front: {err}");
                    }
                    Err(other) => return Err(other),
                },
            }
            Ok(0)
        }
        Command::Ode {
            t,
            dt,
            s0,
            v0,
            i0,
            out,
        } => {
            let e0 = disease_free_equilibrium(&p);
            let t_end = t.unwrap_or(cfg.t_end);
            let dt = dt.unwrap_or(cfg.dt);
            let init = [s0.unwrap_or(e0.s), v0.unwrap_or(e0.v), i0];
            let traj = ode_simulate(&p, init, t_end, dt)?;
            let mut csv = CsvOut::create(&out)?;
            csv.line("t,S,V,I")?;
            for (t, y) in traj.times.iter().zip(&traj.states) {
                csv.line(&format!("{},{},{},{}", num(*t), num(y[0]), num(y[1]), num(y[2])))?;
            }
            csv.finish()?;
            let last = traj.states.last().expect("at least the initial state");
            println!(
                "final: S = {} V = {} I = {}",
                num(last[0]),
                num(last[1]),
                num(last[2])
            );
            Ok(0)
        }
        Command::Sweep {
            param,
            from,
            to,
            steps,
            out,
        } => {
            if steps == 0 {
                return Err(Error::InvalidParameter {
                    name: "steps",
                    value: 0.0,
                    reason: "sweep needs at least one point",
                });
            }
            let mut csv = CsvOut::create(&out)?;
            csv.line("param,c_star,r_star,sensitivity")?;
            for i in 0..steps {
                let value = if steps == 1 {
                    from
                } else {
                    from + (to - from) * i as f64 / (steps - 1) as f64
                };
                let q = set_param(&p, &param, value)?;
                let cs = dispersion::critical_speed(&q)?;
                let sens = dispersion::speed_sensitivities(&q)?;
                let dc = match param.as_str() {
                    "beta1" => sens.dc_dbeta1,
                    "beta2" => sens.dc_dbeta2,
                    "gamma1" => sens.dc_dgamma1,
                    "d" => sens.dc_dd,
                    _ => unreachable!("clap restricts the parameter set"),
                };
                csv.line(&format!(
                    "{},{},{},{}",
                    num(value),
                    num(cs.c_star),
                    num(cs.r_star),
                    num(dc)
                ))?;
            }
            csv.finish()?;
            println!("# wrote {steps} rows");
            Ok(0)
        }
    }
}

fn max_abs3(x: [f64; 3]) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn set_param(p: &ModelParams, name: &str, value: f64) -> Result<ModelParams, Error> {
    let mut vals = (
        p.lambda, p.beta1, p.beta2, p.alpha, p.mu, p.gamma, p.gamma1, p.d,
    );
    match name {
        "beta1" => vals.1 = value,
        "beta2" => vals.2 = value,
        "gamma1" => vals.6 = value,
        "d" => vals.7 = value,
        _ => unreachable!("clap restricts the parameter set"),
    }
    ModelParams::new(
        vals.0, vals.1, vals.2, vals.3, vals.4, vals.5, vals.6, vals.7,
    )
}

/// Read a profile CSV (`zeta,S,V,I`) back into a Profile at speed `c`.
/// The grid must be uniform and symmetric about zero.
fn read_profile_csv(path: &Path, c: f64) -> Result<Profile, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let bad = |line: usize, message: String| Error::Config { line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "zeta,S,V,I" => {}
        Some((_, header)) => {
            return Err(bad(1, format!("expected header `zeta,S,V,I`, got `{header}`")))
        }
        None => return Err(bad(0, "empty profile file".to_string())),
    }
    let mut zeta = Vec::new();
    let mut s = Vec::new();
    let mut v = Vec::new();
    let mut i = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next_num = |what: &str| -> Result<f64, Error> {
            fields
                .next()
                .ok_or_else(|| bad(line_no, format!("missing {what} column")))?
                .trim()
                .parse()
                .map_err(|_| bad(line_no, format!("bad {what} value")))
        };
        zeta.push(next_num("zeta")?);
        s.push(next_num("S")?);
        v.push(next_num("V")?);
        i.push(next_num("I")?);
        if fields.next().is_some() {
            return Err(bad(line_no, "too many columns".to_string()));
        }
    }
    if zeta.len() < 3 {
        return Err(bad(0, "profile needs at least 3 rows".to_string()));
    }
    let h = zeta[1] - zeta[0];
    if !(h > 0.0) {
        return Err(bad(0, "zeta column must be strictly increasing".to_string()));
    }
    for (j, &z) in zeta.iter().enumerate() {
        let expect = zeta[0] + h * j as f64;
        if (z - expect).abs() > 1e-9 * (1.0 + z.abs()) {
            return Err(bad(
                j + 2,
                format!("non-uniform grid: zeta = {z}, expected {expect}"),
            ));
        }
    }
    let b = -zeta[0];
    let last = *zeta.last().unwrap();
    if (last - b).abs() > 1e-9 * (1.0 + b) {
        return Err(bad(
            0,
            format!("grid must be symmetric about zero (runs {} to {})", -b, last),
        ));
    }
    Ok(Profile { b, h, c, s, v, i })
}
