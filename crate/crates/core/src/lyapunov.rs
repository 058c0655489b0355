//! Lyapunov functional certifying that wave profiles approach the endemic
//! state.
//!
//! The functional combines a pointwise entropy-like distance to the endemic
//! equilibrium with unit-window integrals of the same distance for each
//! compartment. Along any profile that solves the wave system, its
//! derivative in the wave variable is a sum of manifestly non-positive
//! brackets, so the functional decreases monotonically; the dissipation
//! term has two algebraically equal forms whose agreement doubles as a
//! transcription check of the underlying identity.

use crate::error::{Error, Result};
use crate::model::{Equilibrium, ModelParams};
use crate::profile::Profile;

/// Entropy-like distance g(x) = x - 1 - ln x: nonnegative, strictly convex,
/// and zero exactly at x = 1.
pub fn g(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositive {
            what: "entropy distance g",
            value: x,
        });
    }
    Ok(g_unchecked(x))
}

#[inline]
fn g_unchecked(x: f64) -> f64 {
    x - 1.0 - x.ln()
}

/// Compensated (Kahan) accumulator for the window quadratures.
#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn positive(what: &'static str, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositive { what, value: x });
    }
    Ok(x)
}

/// Dissipation term at a pointwise state (S, V, I), evaluated in both its
/// raw balance form and its regrouped equilibrium form. The two are equal
/// for every positive state by the equilibrium identities; returning both
/// lets callers assert the identity numerically.
pub fn sigma_forms(state: [f64; 3], p: &ModelParams, estar: &Equilibrium) -> Result<(f64, f64)> {
    let [s, v, i] = state;
    positive("S in sigma", s)?;
    positive("V in sigma", v)?;
    positive("I in sigma", i)?;
    let r = p.rates();

    // Raw form: equilibrium-weighted balances of the three equations.
    let raw = (1.0 - estar.s / s) * (p.lambda - r.mu1 * s - p.beta1 * s * i)
        + (1.0 - estar.v / v) * (p.alpha * s - p.beta2 * v * i - r.mu2 * v)
        + (1.0 - estar.i / i) * ((p.beta1 * s + p.beta2 * v) * i - r.mu3 * i);

    let regrouped = sigma_regrouped(state, p, estar);
    Ok((raw, regrouped))
}

/// Regrouped dissipation term: the sum of four manifestly non-positive
/// brackets (two arithmetic-geometric mean gaps and two entropy-distance
/// groups).
fn sigma_regrouped(state: [f64; 3], p: &ModelParams, estar: &Equilibrium) -> f64 {
    let [s, v, _i] = state;
    let r = p.rates();
    let xs = s / estar.s; // S / S*
    let cross = s * estar.v / (estar.s * v); // S V* / (S* V)
    p.mu * estar.s * (2.0 - 1.0 / xs - xs)
        + r.mu2 * estar.v * (3.0 - 1.0 / xs - v / estar.v - cross)
        - p.beta1 * estar.s * estar.i * (g_unchecked(1.0 / xs) + g_unchecked(xs))
        - p.beta2
            * estar.v
            * estar.i
            * (g_unchecked(1.0 / xs) + g_unchecked(cross) + g_unchecked(v / estar.v))
}

/// Dissipation term at a profile node, certified by dual evaluation: the raw
/// and regrouped forms must agree to 1e-10 relative (with an absolute floor
/// of the same size for values near zero).
pub fn sigma(pr: &Profile, j: usize, p: &ModelParams, estar: &Equilibrium) -> Result<f64> {
    let state = [pr.s[j], pr.v[j], pr.i[j]];
    let (raw, regrouped) = sigma_forms(state, p, estar)?;
    let scale = raw.abs().max(regrouped.abs()).max(1.0);
    if (raw - regrouped).abs() > 1e-10 * scale {
        return Err(Error::SigmaMismatch { raw, regrouped });
    }
    Ok(regrouped)
}

/// Trapezoid quadrature of g(X(tau)/x_star) over the two unit windows
/// around node j: returns the left-window integral minus the right-window
/// integral, int_{j-m..j} - int_{j..j+m}.
fn window_difference(
    x: &[f64],
    x_star: f64,
    j: usize,
    m: usize,
    h: f64,
    what: &'static str,
) -> Result<f64> {
    let mut acc = Kahan::default();
    // Left window nodes j-m..=j, right window nodes j..=j+m. The shared
    // center node enters both with weight h/2 and opposite signs, so it
    // cancels; endpoints keep their half weights.
    for k in 0..=m {
        let weight = if k == 0 || k == m { 0.5 } else { 1.0 };
        let left = positive(what, x[j - m + k] / x_star)?;
        let right = positive(what, x[j + k] / x_star)?;
        acc.add(weight * (g_unchecked(left) - g_unchecked(right)));
    }
    Ok(h * acc.sum)
}

/// Value of the Lyapunov functional at node j together with its component
/// breakdown [W1, W2, W3, W4]: W1 is the pointwise entropy distance scaled
/// by c, W2..W4 are the per-compartment window-integral differences.
pub fn lyapunov_parts(
    pr: &Profile,
    j: usize,
    p: &ModelParams,
    estar: &Equilibrium,
) -> Result<(f64, [f64; 4])> {
    let m = pr.unit_steps();
    let n = pr.node_count();
    if j < m || j + m > n - 1 {
        return Err(Error::DomainTooNarrow {
            b: pr.b,
            required: pr.zeta(j).abs() + 1.0,
        });
    }
    let s = positive("S in Lyapunov window", pr.s[j] / estar.s)?;
    let v = positive("V in Lyapunov window", pr.v[j] / estar.v)?;
    let i = positive("I in Lyapunov window", pr.i[j] / estar.i)?;
    let w1 = pr.c * (estar.s * g_unchecked(s) + estar.v * g_unchecked(v) + estar.i * g_unchecked(i));
    let w2 = window_difference(&pr.s, estar.s, j, m, pr.h, "S in Lyapunov window")?;
    let w3 = window_difference(&pr.v, estar.v, j, m, pr.h, "V in Lyapunov window")?;
    let w4 = window_difference(&pr.i, estar.i, j, m, pr.h, "I in Lyapunov window")?;
    let value = w1 + estar.s * w2 + estar.v * w3 + p.d * estar.i * w4;
    Ok((value, [w1, w2, w3, w4]))
}

/// Value of the Lyapunov functional at node j.
pub fn lyapunov_value(pr: &Profile, j: usize, p: &ModelParams, estar: &Equilibrium) -> Result<f64> {
    Ok(lyapunov_parts(pr, j, p, estar)?.0)
}

/// Analytic derivative of the functional in the wave variable at node j:
/// the regrouped dissipation term plus the three non-positive shift
/// brackets produced by differentiating the window integrals. Every summand
/// is non-positive for positive data.
pub fn lyapunov_slope(pr: &Profile, j: usize, p: &ModelParams, estar: &Equilibrium) -> Result<f64> {
    let m = pr.unit_steps();
    let n = pr.node_count();
    if j < m || j + m > n - 1 {
        return Err(Error::DomainTooNarrow {
            b: pr.b,
            required: pr.zeta(j).abs() + 1.0,
        });
    }
    let state = [
        positive("S in Lyapunov slope", pr.s[j])?,
        positive("V in Lyapunov slope", pr.v[j])?,
        positive("I in Lyapunov slope", pr.i[j])?,
    ];
    let shifts = |x: &[f64], what: &'static str| -> Result<f64> {
        let back = positive(what, x[j - m] / x[j])?;
        let fwd = positive(what, x[j + m] / x[j])?;
        Ok(g_unchecked(back) + g_unchecked(fwd))
    };
    Ok(sigma_regrouped(state, p, estar)
        - estar.s * shifts(&pr.s, "S in Lyapunov slope")?
        - estar.v * shifts(&pr.v, "V in Lyapunov slope")?
        - p.d * estar.i * shifts(&pr.i, "I in Lyapunov slope")?)
}

/// Per-node certification trace over the artifact-free interior band.
#[derive(Debug, Clone)]
pub struct LyapunovTrace {
    /// Node abscissae.
    pub zeta: Vec<f64>,
    /// Functional values V(zeta).
    pub value: Vec<f64>,
    /// Analytic derivative dV/dzeta (all entries <= 1e-12).
    pub slope: Vec<f64>,
    /// Component breakdown [W1, W2, W3, W4] per node.
    pub parts: Vec<[f64; 4]>,
}

const SLOPE_NONPOSITIVE_TOL: f64 = 1e-12;
const FD_RELATIVE_TOL: f64 = 1e-4;
const FD_SMALL_SLOPE: f64 = 1e-8;
const FD_ABSOLUTE_TOL: f64 = 1e-10;

/// Certify the functional along a profile: evaluates value and analytic
/// slope on the interior band (one unit plus four steps clear of each end,
/// the same artifact-free region the residual uses), asserts the slope is
/// non-positive everywhere, matches it against a centered finite difference
/// of the value, checks node-to-node monotonicity, and screens the
/// near-zero-slope nodes for proximity to the endemic state.
pub fn lyapunov_derivative_check(
    pr: &Profile,
    p: &ModelParams,
    estar: &Equilibrium,
) -> Result<LyapunovTrace> {
    let m = pr.unit_steps();
    let n = pr.node_count();
    let lo = m + 4;
    if n < 2 * lo + 1 {
        return Err(Error::DomainTooNarrow {
            b: pr.b,
            required: (lo as f64) * pr.h,
        });
    }
    let hi = n - 1 - lo;

    // Values over the widest defined range so the finite-difference stencil
    // has material at the band edges.
    let v_lo = m;
    let mut values = Vec::with_capacity(n - 2 * m);
    for j in v_lo..=(n - 1 - m) {
        values.push(lyapunov_parts(pr, j, p, estar)?);
    }
    let value_at = |j: usize| values[j - v_lo].0;

    let mut trace = LyapunovTrace {
        zeta: Vec::with_capacity(hi - lo + 1),
        value: Vec::with_capacity(hi - lo + 1),
        slope: Vec::with_capacity(hi - lo + 1),
        parts: Vec::with_capacity(hi - lo + 1),
    };

    for j in lo..=hi {
        let zeta = pr.zeta(j);
        let (value, parts) = values[j - v_lo];
        if !value.is_finite() {
            return Err(Error::LyapunovViolation {
                zeta,
                kind: "non-finite functional value",
                value,
            });
        }
        let slope = lyapunov_slope(pr, j, p, estar)?;
        if slope > SLOPE_NONPOSITIVE_TOL {
            return Err(Error::LyapunovViolation {
                zeta,
                kind: "positive analytic derivative",
                value: slope,
            });
        }

        // Centered five-point finite difference of the computed values.
        let fd = (value_at(j - 2) - 8.0 * value_at(j - 1) + 8.0 * value_at(j + 1)
            - value_at(j + 2))
            / (12.0 * pr.h);
        let err = (fd - slope).abs();
        let within = if slope.abs() > FD_SMALL_SLOPE {
            err <= FD_RELATIVE_TOL * slope.abs()
        } else {
            err <= FD_ABSOLUTE_TOL
        };
        if !within {
            return Err(Error::LyapunovViolation {
                zeta,
                kind: "finite-difference disagreement with analytic derivative",
                value: fd - slope,
            });
        }

        // A (numerically) vanishing derivative must mean the whole +-1
        // window already sits at the endemic state.
        if slope.abs() <= 1e-15 {
            for k in (j - m)..=(j + m) {
                let worst = ((pr.s[k] - estar.s) / estar.s)
                    .abs()
                    .max(((pr.v[k] - estar.v) / estar.v).abs())
                    .max(((pr.i[k] - estar.i) / estar.i).abs());
                if worst > 1e-6 {
                    return Err(Error::LyapunovViolation {
                        zeta,
                        kind: "vanishing derivative away from the endemic state",
                        value: worst,
                    });
                }
            }
        }

        if let Some(&prev) = trace.value.last() {
            if value > prev + 1e-11 * (1.0 + prev.abs()) {
                return Err(Error::LyapunovViolation {
                    zeta,
                    kind: "functional increased between nodes",
                    value: value - prev,
                });
            }
        }

        trace.zeta.push(zeta);
        trace.value.push(value);
        trace.slope.push(slope);
        trace.parts.push(parts);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::critical_speed;
    use crate::model::{disease_free_equilibrium, endemic_equilibrium};
    use crate::profile::solve_truncated;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn canonical() -> ModelParams {
        ModelParams::new(1.0, 0.3, 0.1, 0.2, 0.1, 0.3, 0.1, 1.0).unwrap()
    }

    #[test]
    fn entropy_distance_matches_frozen_values() {
        assert_eq!(g(1.0).unwrap(), 0.0);
        assert!((g(2.0).unwrap() - (1.0 - std::f64::consts::LN_2)).abs() <= 1e-15);
        assert!((g(0.5).unwrap() - (-0.5 + std::f64::consts::LN_2)).abs() <= 1e-15);
        assert!(matches!(g(0.0), Err(Error::NonPositive { .. })));
        assert!(matches!(g(-3.0), Err(Error::NonPositive { .. })));
        assert!(matches!(g(f64::NAN), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn entropy_distance_is_convex_and_anchored() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9_c0de);
        for _ in 0..500 {
            let a = rng.gen_range(1e-3..10.0);
            let b = rng.gen_range(1e-3..10.0);
            let ga = g(a).unwrap();
            let gb = g(b).unwrap();
            let gm = g(0.5 * (a + b)).unwrap();
            assert!(gm <= 0.5 * (ga + gb) + 1e-12);
            assert!(ga >= 0.0);
            // Unique zero at 1: away from 1, strictly positive.
            if (a - 1.0).abs() > 1e-3 {
                assert!(ga > 0.0);
            }
        }
    }

    #[test]
    fn sigma_forms_vanish_at_the_endemic_state() {
        let p = canonical();
        let estar = endemic_equilibrium(&p).unwrap();
        let (raw, regrouped) =
            sigma_forms([estar.s, estar.v, estar.i], &p, &estar).unwrap();
        assert!(raw.abs() <= 1e-13, "raw {raw}");
        assert!(regrouped.abs() <= 1e-13, "regrouped {regrouped}");
    }

    #[test]
    fn sigma_forms_agree_near_the_infection_free_state() {
        let p = canonical();
        let e0 = disease_free_equilibrium(&p);
        let estar = endemic_equilibrium(&p).unwrap();
        for eps in [1e-6, 1e-3, 1e-1] {
            let (raw, regrouped) = sigma_forms([e0.s, e0.v, eps], &p, &estar).unwrap();
            let scale = raw.abs().max(regrouped.abs()).max(1.0);
            assert!(
                (raw - regrouped).abs() <= 1e-12 * scale,
                "eps {eps}: {raw} vs {regrouped}"
            );
        }
    }

    #[test]
    fn sigma_identity_holds_on_random_states() {
        let p = canonical();
        let estar = endemic_equilibrium(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x51e9a);
        for _ in 0..1000 {
            let state = [
                estar.s * rng.gen_range(0.5..1.5),
                estar.v * rng.gen_range(0.5..1.5),
                estar.i * rng.gen_range(0.5..1.5),
            ];
            let (raw, regrouped) = sigma_forms(state, &p, &estar).unwrap();
            let scale = raw.abs().max(regrouped.abs()).max(1.0);
            assert!(
                (raw - regrouped).abs() <= 1e-10 * scale,
                "state {state:?}: {raw} vs {regrouped}"
            );
            // The regrouped form is a sum of non-positive brackets.
            assert!(regrouped <= 1e-13);
        }
    }

    #[test]
    fn sigma_rejects_nonpositive_states() {
        let p = canonical();
        let estar = endemic_equilibrium(&p).unwrap();
        for bad in [
            [0.0, estar.v, estar.i],
            [estar.s, -1.0, estar.i],
            [estar.s, estar.v, 0.0],
        ] {
            assert!(matches!(
                sigma_forms(bad, &p, &estar),
                Err(Error::NonPositive { .. })
            ));
        }
    }

    #[test]
    fn functional_vanishes_identically_at_the_endemic_state() {
        let p = canonical();
        let c = 2.0 * critical_speed(&p).unwrap().c_star;
        let estar = endemic_equilibrium(&p).unwrap();
        let pr = Profile::constant(5.0, 0.1, c, estar.s, estar.v, estar.i).unwrap();
        let m = pr.unit_steps();
        for j in m..=(pr.node_count() - 1 - m) {
            let (value, parts) = lyapunov_parts(&pr, j, &p, &estar).unwrap();
            assert_eq!(value, 0.0);
            assert_eq!(parts, [0.0; 4]);
            assert_eq!(lyapunov_slope(&pr, j, &p, &estar).unwrap(), 0.0);
        }
        let trace = lyapunov_derivative_check(&pr, &p, &estar).unwrap();
        assert!(trace.value.iter().all(|&v| v == 0.0));
        assert!(trace.slope.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn windows_cancel_on_doubled_constants() {
        let p = canonical();
        let c = 2.0 * critical_speed(&p).unwrap().c_star;
        let estar = endemic_equilibrium(&p).unwrap();
        let pr = Profile::constant(
            5.0,
            0.1,
            c,
            2.0 * estar.s,
            2.0 * estar.v,
            2.0 * estar.i,
        )
        .unwrap();
        let j = pr.node_count() / 2;
        let (value, parts) = lyapunov_parts(&pr, j, &p, &estar).unwrap();
        assert_eq!(parts[1], 0.0);
        assert_eq!(parts[2], 0.0);
        assert_eq!(parts[3], 0.0);
        let g2 = g(2.0).unwrap();
        let expected = c * (estar.s + estar.v + estar.i) * g2;
        assert!((value - expected).abs() <= 1e-13 * expected.max(1.0));
        // The slope stays strictly negative away from the equilibrium and
        // inside the non-positivity certificate.
        let slope = lyapunov_slope(&pr, j, &p, &estar).unwrap();
        assert!(slope < -1e-3);
    }

    #[test]
    fn window_evaluation_rejects_nonpositive_windows() {
        let p = canonical();
        let c = 2.0 * critical_speed(&p).unwrap().c_star;
        let estar = endemic_equilibrium(&p).unwrap();
        let mut pr = Profile::constant(5.0, 0.1, c, estar.s, estar.v, estar.i).unwrap();
        let m = pr.unit_steps();
        let j = pr.node_count() / 2;
        pr.i[j + 3] = 0.0;
        assert!(matches!(
            lyapunov_parts(&pr, j, &p, &estar),
            Err(Error::NonPositive { .. })
        ));
        // Out-of-window nodes do not interfere.
        assert!(lyapunov_parts(&pr, j + 3 + m + 1, &p, &estar).is_ok());
    }

    #[test]
    fn converged_profile_is_certified_monotone() {
        let p = canonical();
        let c = 2.0 * critical_speed(&p).unwrap().c_star;
        let estar = endemic_equilibrium(&p).unwrap();
        let (pr, _) = solve_truncated(&p, c, 20.0, 0.01, 1e-10, 500).unwrap();
        let trace = lyapunov_derivative_check(&pr, &p, &estar).unwrap();

        // The trace spans the artifact-free interior band.
        assert!(trace.zeta.len() > 3000);
        assert!(trace.value.iter().all(|v| v.is_finite()));

        // Non-positive slope everywhere, genuinely negative mid-front.
        let min_slope = trace.slope.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_slope < -1e-2);
        assert!(trace.slope.iter().all(|&s| s <= 1e-12));

        // The functional decreases from the infection-free side toward the
        // endemic side; it is anchored at zero from below (the truncated
        // tail has not fully settled, so the right-end value is small only
        // relative to the left, not absolutely).
        let first = *trace.value.first().unwrap();
        let last = *trace.value.last().unwrap();
        assert!(first > last);
        assert!(last >= -1e-9);
        assert!(last < 0.25 * first, "right end {last} vs left end {first}");
        for pair in trace.value.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-11 * (1.0 + pair[0].abs()));
        }
    }
}
