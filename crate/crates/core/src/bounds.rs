//! Comparison bounds: six explicit functions sandwiching a wave profile,
//! admissible constants for them, and a numerical verifier for the
//! differential inequalities they satisfy.
//!
//! The upper triple is (S0, V0, e^{r1 s}); the lower triple cuts each
//! component off at zero past a kink point:
//!
//! ```text
//! S-(s) = max{ S0 (1 - M1 e^{e1 s}), 0 }      kink at X1 = -ln(M1)/e1
//! V-(s) = max{ V0 (1 - M2 e^{e2 s}), 0 }      kink at X2 = -ln(M2)/e2
//! I-(s) = max{ e^{r1 s} (1 - M3 e^{e3 s}), 0 }  kink at X3 = -ln(M3)/e3
//! ```
//!
//! Each triple satisfies a system of differential inequalities (upper: the
//! wave operator applied to it dominates; lower: is dominated), classically
//! away from the kinks. `verify_subsuper` checks all six numerically with
//! analytic one-sided derivatives and exact unit shifts.

use crate::dispersion::{delta, lambda_roots, lap_symbol};
use crate::error::{Error, Result};
use crate::model::{disease_free_equilibrium, ModelParams};

/// Permitted slack when checking the differential inequalities numerically.
pub const INEQ_SLACK: f64 = 1e-12;

/// Decay perturbations, amplitudes, and kink abscissae for the lower bounds,
/// with the slow root carried for evaluating the infected pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub r1: f64,
}

/// Values of all six bound functions at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSextet {
    pub s_plus: f64,
    pub v_plus: f64,
    pub i_plus: f64,
    pub s_minus: f64,
    pub v_minus: f64,
    pub i_minus: f64,
}

/// One evaluated inequality at one grid point. `lhs_minus_rhs` is the
/// literal difference with the derivative side on the left; `violation`
/// is the signed failure amount (positive means the inequality fails):
/// upper-triple rows fail when the right side exceeds the left, lower-triple
/// rows fail the other way around. `scale` is the magnitude of the terms
/// entering the row, the natural yardstick for roundoff in the difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IneqSample {
    pub zeta: f64,
    pub ineq: &'static str,
    pub lhs_minus_rhs: f64,
    pub violation: f64,
    pub scale: f64,
}

/// Verification outcome over a grid: the worst signed violation and where
/// it occurred, plus every sampled row for reporting.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub worst_violation: f64,
    pub worst_zeta: f64,
    pub worst_ineq: &'static str,
    pub samples: Vec<IneqSample>,
}

pub const INEQ_IDS: [&str; 6] = [
    "super_s", "super_v", "super_i", "sub_s", "sub_v", "sub_i",
];

/// Admissible constants for a supercritical speed.
///
/// Perturbations: e1 = e2 = 0.8 min(r1, r2 - r1), e3 = 0.9 min(e1, e2).
/// Amplitudes carry a safety factor 2 over their sufficient conditions and
/// a floor of 1.1 (amplitudes above 1 put every kink at negative abscissa).
/// The margins c e1 + mu1 - w(e1) and c e2 + mu2 - w(e2) must be positive
/// for the amplitude conditions to bite; each epsilon is halved until its
/// margin is, up to 10 times.
pub fn choose_bound_constants(p: &ModelParams, c: f64) -> Result<BoundConstants> {
    let roots = lambda_roots(p, c)?;
    let r1 = roots.r1;
    let r2 = roots.r2;
    let mu2 = p.rates().mu2;
    let e0 = disease_free_equilibrium(p);

    let mu1 = p.rates().mu1;
    let mut eps1 = 0.8 * r1.min(r2 - r1);
    let mut halvings = 0;
    // The susceptible case needs c*eps1 + mu1 - w(eps1) > 0 (the margin the
    // first amplitude works against); w grows like eps^2, so halving wins.
    while c * eps1 + mu1 - lap_symbol(eps1) <= 0.0 {
        eps1 *= 0.5;
        halvings += 1;
        if halvings > 10 {
            return Err(Error::BoundConstruction {
                reason: format!(
                    "first amplitude margin c*eps1 + mu1 - w(eps1) \
                     stayed nonpositive down to eps1 = {eps1:e}"
                ),
            });
        }
    }
    let mut eps2 = eps1;
    halvings = 0;
    while c * eps2 + mu2 - lap_symbol(eps2) <= 0.0 {
        eps2 *= 0.5;
        halvings += 1;
        if halvings > 10 {
            return Err(Error::BoundConstruction {
                reason: format!(
                    "second amplitude denominator c*eps2 + mu2 - w(eps2) \
                     stayed nonpositive down to eps2 = {eps2:e}"
                ),
            });
        }
    }
    let eps3 = 0.9 * eps1.min(eps2);

    let m1 = (2.0 * p.beta1 / (p.mu + c * eps1 + lap_symbol(eps1))).max(1.1);
    let m2 = (2.0 * (mu2 * m1 + p.beta2) / (c * eps2 + mu2 - lap_symbol(eps2))).max(1.1);

    // Amplitude condition: M3 * (-delta(r1+e3, c)) >= b1 S0 M1 + b2 V0 M2,
    // plus the kink-ordering condition ln(M3)/e3 > max(ln(M1)/e1, ln(M2)/e2).
    let gap = -delta(p, r1 + eps3, c);
    if gap <= 0.0 {
        return Err(Error::BoundConstruction {
            reason: format!(
                "characteristic function not negative at r1 + eps3 = {}",
                r1 + eps3
            ),
        });
    }
    let amplitude = (p.beta1 * e0.s * m1 + p.beta2 * e0.v * m2) / gap;
    let ordering = (eps3 * (m1.ln() / eps1).max(m2.ln() / eps2)).exp();
    let m3 = 2.0 * amplitude.max(ordering).max(1.1);

    let k = BoundConstants {
        eps1,
        eps2,
        eps3,
        m1,
        m2,
        m3,
        x1: -m1.ln() / eps1,
        x2: -m2.ln() / eps2,
        x3: -m3.ln() / eps3,
        r1,
    };
    validate_constants(&k, p, c, r2)?;
    Ok(k)
}

/// Structural invariants the constants must satisfy.
fn validate_constants(k: &BoundConstants, p: &ModelParams, c: f64, r2: f64) -> Result<()> {
    let fail = |reason: String| Err(Error::BoundConstruction { reason });
    if !(k.eps3 > 0.0 && k.eps3 < k.eps1.min(k.eps2) && k.eps1 < k.r1) {
        return fail(format!(
            "need 0 < eps3 < min(eps1, eps2) and eps1 < r1; got eps = ({}, {}, {}), r1 = {}",
            k.eps1, k.eps2, k.eps3, k.r1
        ));
    }
    if !(k.r1 + k.eps3 < r2) {
        return fail(format!("need r1 + eps3 < r2; got {} vs {}", k.r1 + k.eps3, r2));
    }
    if !(k.m1 > 1.0 && k.m2 > 1.0 && k.m3 > 1.0) {
        return fail(format!("amplitudes must exceed 1; got ({}, {}, {})", k.m1, k.m2, k.m3));
    }
    if !(k.x3 < k.x1.min(k.x2)) {
        return fail(format!(
            "deepest kink must belong to the infected bound; kinks ({}, {}, {})",
            k.x1, k.x2, k.x3
        ));
    }
    let m1_floor = p.beta1 / (p.mu + c * k.eps1 + lap_symbol(k.eps1));
    if k.m1 < m1_floor {
        return fail(format!("m1 = {} below its lower bound {m1_floor}", k.m1));
    }
    let gap = -delta(p, k.r1 + k.eps3, c);
    let e0 = disease_free_equilibrium(p);
    if k.m3 * gap < p.beta1 * e0.s * k.m1 + p.beta2 * e0.v * k.m2 {
        return fail(format!("m3 = {} below its amplitude bound", k.m3));
    }
    Ok(())
}

/// Probe variant with a replaced first amplitude; the kink moves with it.
/// Intended for necessity experiments, so no admissibility check.
pub fn with_m1(k: &BoundConstants, m1: f64) -> BoundConstants {
    BoundConstants {
        m1,
        x1: -m1.ln() / k.eps1,
        ..*k
    }
}

/// All six bound functions at one abscissa.
pub fn eval_bounds(zeta: f64, k: &BoundConstants, p: &ModelParams) -> BoundSextet {
    let e0 = disease_free_equilibrium(p);
    BoundSextet {
        s_plus: e0.s,
        v_plus: e0.v,
        i_plus: (k.r1 * zeta).exp(),
        s_minus: (e0.s * (1.0 - k.m1 * (k.eps1 * zeta).exp())).max(0.0),
        v_minus: (e0.v * (1.0 - k.m2 * (k.eps2 * zeta).exp())).max(0.0),
        i_minus: ((k.r1 * zeta).exp() * (1.0 - k.m3 * (k.eps3 * zeta).exp())).max(0.0),
    }
}

/// Analytic derivatives of the six bound functions, one-sided at the kinks
/// (the active branch is decided by the sign of the un-clipped expression).
/// Order matches `BoundSextet`.
pub fn bound_slopes(zeta: f64, k: &BoundConstants, p: &ModelParams) -> [f64; 6] {
    let e0 = disease_free_equilibrium(p);
    let s_minus = if zeta < k.x1 {
        -e0.s * k.m1 * k.eps1 * (k.eps1 * zeta).exp()
    } else {
        0.0
    };
    let v_minus = if zeta < k.x2 {
        -e0.v * k.m2 * k.eps2 * (k.eps2 * zeta).exp()
    } else {
        0.0
    };
    let i_minus = if zeta < k.x3 {
        k.r1 * (k.r1 * zeta).exp() - k.m3 * (k.r1 + k.eps3) * ((k.r1 + k.eps3) * zeta).exp()
    } else {
        0.0
    };
    [
        0.0,
        0.0,
        k.r1 * (k.r1 * zeta).exp(),
        s_minus,
        v_minus,
        i_minus,
    ]
}

/// Uniform grid of `n` points on [from, to] with every point within one
/// grid step of a kink removed, so derivatives are classical on the result.
pub fn kink_excluded_grid(from: f64, to: f64, n: usize, k: &BoundConstants) -> Vec<f64> {
    let step = (to - from) / (n - 1) as f64;
    (0..n)
        .map(|j| from + step * j as f64)
        .filter(|z| {
            (z - k.x1).abs() >= step && (z - k.x2).abs() >= step && (z - k.x3).abs() >= step
        })
        .collect()
}

/// Evaluate all six inequalities at every grid point.
///
/// Upper-triple rows (`super_*`): the derivative side must dominate, so the
/// violation is rhs - lhs. Lower-triple rows (`sub_*`): the derivative side
/// must be dominated, violation lhs - rhs. Shifts are evaluated exactly.
pub fn sample_inequalities(
    k: &BoundConstants,
    p: &ModelParams,
    c: f64,
    grid: &[f64],
) -> Vec<IneqSample> {
    let rates = p.rates();
    let mut out = Vec::with_capacity(grid.len() * 6);
    for &z in grid {
        let here = eval_bounds(z, k, p);
        let right = eval_bounds(z + 1.0, k, p);
        let left = eval_bounds(z - 1.0, k, p);
        let slopes = bound_slopes(z, k, p);

        let lap_s_plus = right.s_plus - 2.0 * here.s_plus + left.s_plus;
        let lap_v_plus = right.v_plus - 2.0 * here.v_plus + left.v_plus;
        let lap_i_plus = right.i_plus - 2.0 * here.i_plus + left.i_plus;
        let lap_s_minus = right.s_minus - 2.0 * here.s_minus + left.s_minus;
        let lap_v_minus = right.v_minus - 2.0 * here.v_minus + left.v_minus;
        let lap_i_minus = right.i_minus - 2.0 * here.i_minus + left.i_minus;

        // Upper triple, coupled to the lower infected bound.
        let lhs = [
            c * slopes[0],
            c * slopes[1],
            c * slopes[2],
            c * slopes[3],
            c * slopes[4],
            c * slopes[5],
        ];
        // Terms kept separate so each row's magnitude yardstick can sum
        // their absolute values (roundoff in the difference is relative to
        // the largest participating term, not to the difference itself).
        let terms: [[f64; 4]; 6] = [
            [
                lap_s_plus,
                p.lambda,
                -rates.mu1 * here.s_plus,
                -p.beta1 * here.s_plus * here.i_minus,
            ],
            [
                lap_v_plus,
                p.alpha * here.s_plus,
                -p.beta2 * here.v_plus * here.i_minus,
                -rates.mu2 * here.v_plus,
            ],
            [
                p.d * lap_i_plus,
                p.beta1 * here.s_plus * here.i_plus,
                p.beta2 * here.v_plus * here.i_plus,
                -rates.mu3 * here.i_plus,
            ],
            [
                lap_s_minus,
                p.lambda,
                -rates.mu1 * here.s_minus,
                -p.beta1 * here.s_minus * here.i_plus,
            ],
            [
                lap_v_minus,
                p.alpha * here.s_minus,
                -p.beta2 * here.v_minus * here.i_plus,
                -rates.mu2 * here.v_minus,
            ],
            [
                p.d * lap_i_minus,
                p.beta1 * here.s_minus * here.i_minus,
                p.beta2 * here.v_minus * here.i_minus,
                -rates.mu3 * here.i_minus,
            ],
        ];
        for i in 0..6 {
            let rhs: f64 = terms[i].iter().sum();
            let magnitude: f64 = terms[i].iter().map(|t| t.abs()).sum();
            let diff = lhs[i] - rhs;
            let violation = if i < 3 { -diff } else { diff };
            out.push(IneqSample {
                zeta: z,
                ineq: INEQ_IDS[i],
                lhs_minus_rhs: diff,
                violation,
                scale: magnitude.max(lhs[i].abs()).max(1.0),
            });
        }
    }
    out
}

/// Check the six inequalities over a kink-excluded grid; errors with the
/// worst offender if any violation exceeds the permitted slack.
///
/// The pass threshold for a row is `INEQ_SLACK * scale`: the third upper
/// inequality is an exact identity, so its computed difference is pure
/// roundoff, proportional to the size of the terms involved. The reported
/// `worst_violation` stays unscaled for absolute assertions downstream.
pub fn verify_subsuper(
    k: &BoundConstants,
    p: &ModelParams,
    c: f64,
    grid: &[f64],
) -> Result<VerifyReport> {
    let samples = sample_inequalities(k, p, c, grid);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_zeta = f64::NAN;
    let mut worst_ineq = "";
    let mut failed: Option<&IneqSample> = None;
    for s in &samples {
        if s.violation > worst {
            worst = s.violation;
            worst_zeta = s.zeta;
            worst_ineq = s.ineq;
        }
        if s.violation > INEQ_SLACK * s.scale
            && failed.map_or(true, |f| s.violation / s.scale > f.violation / f.scale)
        {
            failed = Some(s);
        }
    }
    if let Some(s) = failed {
        return Err(Error::BoundViolation {
            inequality: s.ineq,
            zeta: s.zeta,
            violation: s.violation,
        });
    }
    Ok(VerifyReport {
        worst_violation: worst,
        worst_zeta,
        worst_ineq,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::basic_reproduction_number;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn canonical() -> ModelParams {
        ModelParams::new(1.0, 0.3, 0.1, 0.2, 0.1, 0.3, 0.1, 1.0).unwrap()
    }

    const C_STAR: f64 = 1.9988802278020645;

    fn canonical_setup() -> (ModelParams, f64, BoundConstants) {
        let p = canonical();
        let c = 2.0 * C_STAR;
        let k = choose_bound_constants(&p, c).unwrap();
        (p, c, k)
    }

    // Frozen from an independent construction of the same rules.
    const EPS1: f64 = 0.19924875871817394;
    const EPS3: f64 = 0.17932388284635656;
    const M3: f64 = 4.947355233896203;
    const X3: f64 = -8.916007796802123;

    #[test]
    fn constants_canonical_frozen() {
        let (_, _, k) = canonical_setup();
        assert!((k.eps1 - EPS1).abs() <= 1e-12, "eps1 = {}", k.eps1);
        assert_eq!(k.eps1, k.eps2);
        assert!((k.eps3 - EPS3).abs() <= 1e-12, "eps3 = {}", k.eps3);
        assert_eq!(k.m1, 1.1);
        assert_eq!(k.m2, 1.1);
        assert!((k.m3 - M3).abs() <= 1e-9, "m3 = {}", k.m3);
        assert!((k.x3 - X3).abs() <= 1e-9, "x3 = {}", k.x3);
    }

    #[test]
    fn constants_satisfy_invariants() {
        let (p, c, k) = canonical_setup();
        let roots = lambda_roots(&p, c).unwrap();
        assert!(0.0 < k.eps3 && k.eps3 < k.eps1.min(k.eps2));
        assert!(k.eps1 < k.r1);
        assert!(k.r1 + k.eps3 < roots.r2);
        assert!(k.x3 < k.x1.min(k.x2));
        assert!(k.m1 >= p.beta1 / (p.mu + c * k.eps1 + lap_symbol(k.eps1)));
        let e0 = disease_free_equilibrium(&p);
        let gap = -delta(&p, k.r1 + k.eps3, c);
        assert!(gap > 0.0);
        assert!(k.m3 * gap >= p.beta1 * e0.s * k.m1 + p.beta2 * e0.v * k.m2);
    }

    #[test]
    fn kinks_are_zero_crossings() {
        let (p, _, k) = canonical_setup();
        // Continuity at each kink: both branches agree to 1e-12 there.
        let at = |z: f64| eval_bounds(z, &k, &p);
        assert!(at(k.x1).s_minus.abs() <= 1e-12);
        assert!(at(k.x2).v_minus.abs() <= 1e-12);
        assert!(at(k.x3).i_minus.abs() <= 1e-12);
        let tiny = 1e-13;
        assert!((at(k.x1 - tiny).s_minus - at(k.x1 + tiny).s_minus).abs() <= 1e-12);
        assert!((at(k.x2 - tiny).v_minus - at(k.x2 + tiny).v_minus).abs() <= 1e-12);
        assert!((at(k.x3 - tiny).i_minus - at(k.x3 + tiny).i_minus).abs() <= 1e-12);
    }

    #[test]
    fn lower_bounds_vanish_past_their_kinks() {
        let (p, _, k) = canonical_setup();
        for z in [k.x1 + 0.01, 0.0, 5.0, 40.0] {
            assert_eq!(eval_bounds(z, &k, &p).s_minus, 0.0);
        }
        assert_eq!(eval_bounds(k.x3 + 0.01, &k, &p).i_minus, 0.0);
    }

    #[test]
    fn far_left_limits() {
        let (p, _, k) = canonical_setup();
        let e0 = disease_free_equilibrium(&p);
        let b = eval_bounds(-100.0, &k, &p);
        let scale = (-100.0 * k.eps1.min(k.r1)).exp();
        assert!((b.s_minus - e0.s).abs() <= 10.0 * e0.s * scale);
        assert!((b.v_minus - e0.v).abs() <= 10.0 * e0.v * scale);
        assert!(b.i_plus <= scale);
        // Infected ratio approaches 1 from below.
        let at50 = eval_bounds(-50.0, &k, &p);
        let ratio = at50.i_minus / at50.i_plus;
        assert!(ratio >= 1.0 - k.m3 * (-50.0 * k.eps3).exp());
        assert!(ratio <= 1.0);
    }

    #[test]
    fn grid_excludes_kink_neighborhoods() {
        let (_, _, k) = canonical_setup();
        let grid = kink_excluded_grid(-40.0, 10.0, 4001, &k);
        let step = 50.0 / 4000.0;
        assert!(grid.len() > 3950, "over-excluded: {}", grid.len());
        for z in &grid {
            assert!((z - k.x1).abs() >= step);
            assert!((z - k.x2).abs() >= step);
            assert!((z - k.x3).abs() >= step);
        }
    }

    #[test]
    fn all_six_inequalities_hold_on_acceptance_grid() {
        let (p, c, k) = canonical_setup();
        let grid = kink_excluded_grid(-40.0, 10.0, 4001, &k);
        let report = verify_subsuper(&k, &p, c, &grid).unwrap();
        // Absolute slack, not just the scale-aware library threshold: the
        // canonical setup keeps every term at order ten or below.
        assert!(
            report.worst_violation <= INEQ_SLACK,
            "worst {} at {} ({})",
            report.worst_violation,
            report.worst_zeta,
            report.worst_ineq
        );
        assert_eq!(report.samples.len(), grid.len() * 6);
    }

    #[test]
    fn upper_infected_inequality_is_an_identity() {
        let (p, c, k) = canonical_setup();
        let grid = kink_excluded_grid(-40.0, 10.0, 4001, &k);
        for s in sample_inequalities(&k, &p, c, &grid) {
            if s.ineq == "super_i" {
                // Equality up to roundoff on the exponential scale.
                let scale = (k.r1 * s.zeta).exp().max(1.0);
                assert!(
                    s.lhs_minus_rhs.abs() <= 1e-11 * scale,
                    "residual {} at {}",
                    s.lhs_minus_rhs,
                    s.zeta
                );
            }
        }
    }

    // Independent re-implementation of both sides on a 1% random subsample.
    #[test]
    fn spot_check_against_independent_reimplementation() {
        let (p, c, k) = canonical_setup();
        let grid = kink_excluded_grid(-40.0, 10.0, 4001, &k);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let picked: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|_| rng.gen::<f64>() < 0.01)
            .collect();
        assert!(picked.len() > 10);

        let e0 = disease_free_equilibrium(&p);
        let (s0, v0) = (e0.s, e0.v);
        let sm = |z: f64| (s0 - s0 * k.m1 * (k.eps1 * z).exp()).max(0.0);
        let vm = |z: f64| (v0 - v0 * k.m2 * (k.eps2 * z).exp()).max(0.0);
        let ip = |z: f64| (k.r1 * z).exp();
        let im = |z: f64| (ip(z) - k.m3 * ((k.r1 + k.eps3) * z).exp()).max(0.0);
        let mu1 = p.alpha + p.mu;
        let mu2 = p.gamma1 + p.mu;
        let mu3 = p.gamma + p.mu;

        let samples = sample_inequalities(&k, &p, c, &picked);
        for s in samples {
            let z = s.zeta;
            let expected = match s.ineq {
                "super_s" => -(s0 - 2.0 * s0 + s0 + p.lambda - mu1 * s0 - p.beta1 * s0 * im(z)),
                "super_v" => {
                    -(v0 - 2.0 * v0 + v0 + p.alpha * s0 - p.beta2 * v0 * im(z) - mu2 * v0)
                }
                "super_i" => {
                    c * k.r1 * ip(z)
                        - (p.d * (ip(z + 1.0) - 2.0 * ip(z) + ip(z - 1.0))
                            + p.beta1 * s0 * ip(z)
                            + p.beta2 * v0 * ip(z)
                            - mu3 * ip(z))
                }
                "sub_s" => {
                    let slope = if z < k.x1 {
                        -s0 * k.m1 * k.eps1 * (k.eps1 * z).exp()
                    } else {
                        0.0
                    };
                    c * slope
                        - (sm(z + 1.0) - 2.0 * sm(z) + sm(z - 1.0) + p.lambda
                            - mu1 * sm(z)
                            - p.beta1 * sm(z) * ip(z))
                }
                "sub_v" => {
                    let slope = if z < k.x2 {
                        -v0 * k.m2 * k.eps2 * (k.eps2 * z).exp()
                    } else {
                        0.0
                    };
                    c * slope
                        - (vm(z + 1.0) - 2.0 * vm(z) + vm(z - 1.0) + p.alpha * sm(z)
                            - p.beta2 * vm(z) * ip(z)
                            - mu2 * vm(z))
                }
                "sub_i" => {
                    let slope = if z < k.x3 {
                        k.r1 * ip(z) - k.m3 * (k.r1 + k.eps3) * ((k.r1 + k.eps3) * z).exp()
                    } else {
                        0.0
                    };
                    c * slope
                        - (p.d * (im(z + 1.0) - 2.0 * im(z) + im(z - 1.0))
                            + p.beta1 * sm(z) * im(z)
                            + p.beta2 * vm(z) * im(z)
                            - mu3 * im(z))
                }
                other => panic!("unexpected id {other}"),
            };
            assert!(
                (s.lhs_minus_rhs - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "{} at {}: {} vs {}",
                s.ineq,
                z,
                s.lhs_minus_rhs,
                expected
            );
        }
    }

    #[test]
    fn undersized_m1_is_caught() {
        let (p, c, k) = canonical_setup();
        // Half the sufficient lower bound sits below the true violation
        // threshold for these constants.
        let bound = p.beta1 / (p.mu + c * k.eps1 + lap_symbol(k.eps1));
        let probe = with_m1(&k, 0.5 * bound);
        assert!(probe.x1 > 0.0, "probe amplitude below 1 moves the kink right");
        let grid = kink_excluded_grid(-40.0, 10.0, 4001, &probe);
        match verify_subsuper(&probe, &p, c, &grid) {
            Err(Error::BoundViolation {
                inequality, zeta, violation,
            }) => {
                assert_eq!(inequality, "sub_s");
                assert!(zeta < probe.x1);
                assert!(violation > INEQ_SLACK);
            }
            other => panic!("expected a sub_s violation, got {other:?}"),
        }
    }

    #[test]
    fn probe_keeps_admissible_m1_passing() {
        let (p, c, k) = canonical_setup();
        // At the printed lower bound itself the inequality still holds.
        let bound = p.beta1 / (p.mu + c * k.eps1 + lap_symbol(k.eps1));
        let probe = with_m1(&k, bound);
        let grid = kink_excluded_grid(-40.0, 10.0, 4001, &probe);
        assert!(verify_subsuper(&probe, &p, c, &grid).is_ok());
    }

    fn arb_supercritical() -> impl Strategy<Value = ModelParams> {
        (
            0.5..3.0_f64,
            0.2..1.0_f64,
            0.0..0.5_f64,
            0.0..0.5_f64,
            0.02..0.2_f64,
            0.0..0.4_f64,
            0.0..0.4_f64,
            0.2..3.0_f64,
        )
            .prop_map(|(lambda, beta1, beta2, alpha, mu, gamma, gamma1, d)| {
                ModelParams::new(lambda, beta1, beta2, alpha, mu, gamma, gamma1, d).unwrap()
            })
            .prop_filter("supercritical", |p| basic_reproduction_number(p) > 1.05)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ordering_holds_everywhere(p in arb_supercritical(), f in 1.3..3.0_f64, z in -60.0..20.0_f64) {
            let c = f * crate::dispersion::critical_speed(&p).unwrap().c_star;
            let k = choose_bound_constants(&p, c).unwrap();
            let b = eval_bounds(z, &k, &p);
            prop_assert!(b.s_minus <= b.s_plus);
            prop_assert!(b.v_minus <= b.v_plus);
            prop_assert!(b.i_minus <= b.i_plus);
            prop_assert!(b.s_minus >= 0.0 && b.v_minus >= 0.0 && b.i_minus >= 0.0);
        }

        #[test]
        fn inequalities_hold_across_parameter_space(p in arb_supercritical(), f in 1.3..3.0_f64) {
            let c = f * crate::dispersion::critical_speed(&p).unwrap().c_star;
            let k = choose_bound_constants(&p, c).unwrap();
            let lo = (k.x3 - 6.0).min(-40.0);
            let grid = kink_excluded_grid(lo, 10.0, 1001, &k);
            prop_assert!(verify_subsuper(&k, &p, c, &grid).is_ok());
        }
    }
}
