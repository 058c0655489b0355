//! Linearization of the wave equations at the infection-free state: the
//! characteristic function, the critical wave speed, decay exponents, and
//! parameter sensitivities of the speed.
//!
//! Writing w(r) = e^r + e^{-r} - 2 for the symbol of the discrete Laplacian,
//! the characteristic function of the infected component is
//!
//! ```text
//! delta(r, c) = d*w(r) - c*r + (b1*S0 + b2*V0 - mu3)
//! ```
//!
//! For R0 > 1 the constant term is positive, delta is strictly convex in r,
//! and there is a unique critical pair (c*, r*) with delta = d(delta)/dr = 0.
//! Speeds c > c* admit two positive roots r1 < r* < r2; speeds below c*
//! admit none. The critical speed is computed by minimizing
//! c(r) = (d*w(r) + excess)/r, which is the tangency condition in disguise.

use crate::error::{Error, Result};
use crate::model::{basic_reproduction_number, disease_free_equilibrium, ModelParams};

/// Critical wave speed and the tangential decay exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSpeed {
    pub c_star: f64,
    pub r_star: f64,
}

/// The two decay exponents of the linearized front for a speed c > c*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRoots {
    pub r1: f64,
    pub r2: f64,
}

/// Derivatives of the critical speed with respect to model parameters,
/// evaluated at the critical pair via the envelope identity
/// dc*/dp = (d(delta)/dp)(r*, c*) / r*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    pub dc_dgamma1: f64,
    pub dc_dd: f64,
    pub dc_dbeta1: f64,
    pub dc_dbeta2: f64,
    /// Speed change per unit of R0 when R0 varies through the combined
    /// infection pressure at fixed mu3: dc*/dR0 = mu3 / r*.
    pub dc_dr0: f64,
}

/// Symbol of the discrete Laplacian on the exponential ansatz.
#[inline]
pub fn lap_symbol(r: f64) -> f64 {
    r.exp() + (-r).exp() - 2.0
}

/// Combined infection pressure at the infection-free state minus the exit
/// rate of I: b1*S0 + b2*V0 - mu3 = mu3*(R0 - 1).
pub fn pressure_excess(p: &ModelParams) -> f64 {
    let e0 = disease_free_equilibrium(p);
    p.beta1 * e0.s + p.beta2 * e0.v - p.rates().mu3
}

/// Characteristic function of the linearized infected equation.
pub fn delta(p: &ModelParams, r: f64, c: f64) -> f64 {
    p.d * lap_symbol(r) - c * r + pressure_excess(p)
}

/// d(delta)/dr at fixed c.
pub fn delta_dr(p: &ModelParams, r: f64, c: f64) -> f64 {
    p.d * (r.exp() - (-r).exp()) - c
}

/// Critical pair for given diffusivity and positive pressure excess.
/// Golden-section on c(r) = (d*w(r) + excess)/r after a doubling bracket,
/// then Newton polish on the tangency condition c'(r) = 0, whose numerator
/// n(r) = d*(e^r - e^{-r})*r - d*w(r) - excess is strictly increasing.
fn critical_pair_core(d: f64, excess: f64) -> Result<CriticalSpeed> {
    let c_of = |r: f64| (d * lap_symbol(r) + excess) / r;
    let n = |r: f64| d * (r.exp() - (-r).exp()) * r - d * lap_symbol(r) - excess;
    let n_dr = |r: f64| d * r * (r.exp() + (-r).exp());

    // Bracket the minimum: n < 0 left of r*, n > 0 right of it.
    let mut hi = 1.0;
    let mut tries = 0;
    while n(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoConvergence {
                what: "critical speed bracket",
                iterations: tries,
                last_delta: hi,
            });
        }
    }
    let mut lo = hi * 1e-12;

    // Golden-section shrink of [lo, hi] around the minimizer of c(r).
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = c_of(x1);
    let mut f2 = c_of(x2);
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = c_of(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = c_of(x2);
        }
    }

    let mut r = 0.5 * (lo + hi);
    for _ in 0..60 {
        let step = n(r) / n_dr(r);
        let next = r - step;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        if (next - r).abs() <= f64::EPSILON * next {
            r = next;
            break;
        }
        r = next;
    }
    Ok(CriticalSpeed {
        c_star: c_of(r),
        r_star: r,
    })
}

/// Critical speed for the model. Requires R0 > 1 (so the excess is positive)
/// and d > 0.
pub fn critical_speed(p: &ModelParams) -> Result<CriticalSpeed> {
    if p.d <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "d",
            value: p.d,
            reason: "diffusivity must be positive",
        });
    }
    let r0 = basic_reproduction_number(p);
    if r0 <= 1.0 {
        return Err(Error::Subcritical { r0 });
    }
    critical_pair_core(p.d, pressure_excess(p))
}

/// Newton polish of a root of delta(., c) from a bisection seed.
fn polish_root(p: &ModelParams, c: f64, mut r: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..60 {
        let f = delta(p, r, c);
        let df = delta_dr(p, r, c);
        if df == 0.0 {
            break;
        }
        let mut next = r - f / df;
        if next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= f64::EPSILON * next.abs() {
            r = next;
            break;
        }
        r = next;
    }
    r
}

/// Bisection of delta(., c) on [lo, hi] assuming a sign change, Newton-polished.
fn bisect_root(p: &ModelParams, c: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = delta(p, lo, c);
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if (delta(p, mid, c) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    polish_root(p, c, 0.5 * (lo + hi), lo.min(hi) * 0.5, hi * 2.0)
}

/// Both decay exponents for a supercritical speed. Errors at or below c*;
/// at c == c* (to machine tolerance) the error carries the tangential root.
pub fn lambda_roots(p: &ModelParams, c: f64) -> Result<LambdaRoots> {
    let crit = critical_speed(p)?;
    if c <= crit.c_star {
        let tangential = if (c - crit.c_star).abs() <= 1e-12 * crit.c_star.max(1.0) {
            Some(crit.r_star)
        } else {
            None
        };
        return Err(Error::AtOrBelowCritical {
            c,
            c_star: crit.c_star,
            tangential_root: tangential,
        });
    }
    // delta(r*, c) = -(c - c*)*r* < 0, and delta > 0 both at 0+ and far right.
    let r1 = bisect_root(p, c, 1e-300, crit.r_star);
    let mut hi = crit.r_star.max(1.0);
    let mut tries = 0;
    while delta(p, hi, c) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoConvergence {
                what: "second root bracket",
                iterations: tries,
                last_delta: hi,
            });
        }
    }
    let r2 = bisect_root(p, c, crit.r_star, hi);
    Ok(LambdaRoots { r1, r2 })
}

/// Unique positive root of the auxiliary symbol
/// Y(k) = d*w(k) - c*k - mu3, used as the decay ceiling for profile tails.
/// Y(0) = -mu3 < 0 and Y is eventually increasing to infinity, so a single
/// positive root exists for any c > 0; it lies strictly beyond r2.
pub fn kappa0(p: &ModelParams, c: f64) -> Result<f64> {
    if p.d <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "d",
            value: p.d,
            reason: "diffusivity must be positive",
        });
    }
    if c <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "speed must be positive",
        });
    }
    let mu3 = p.rates().mu3;
    let y = |k: f64| p.d * lap_symbol(k) - c * k - mu3;
    let y_dk = |k: f64| p.d * (k.exp() - (-k).exp()) - c;
    let mut hi = 1.0;
    let mut tries = 0;
    while y(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoConvergence {
                what: "kappa0 bracket",
                iterations: tries,
                last_delta: hi,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if y(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..60 {
        let next = k - y(k) / y_dk(k);
        if (next - k).abs() <= f64::EPSILON * next.abs() {
            k = next;
            break;
        }
        k = next;
    }
    Ok(k)
}

/// Central finite difference of a scalar function of one parameter.
fn central_fd(f: impl Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let h = 1e-5 * (x.abs() + 1e-3);
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

fn check_fd(what: &'static str, analytic: f64, fd: f64) -> Result<()> {
    let scale = analytic.abs().max(fd.abs());
    if (analytic - fd).abs() > 1e-4 * scale.max(1e-6) {
        return Err(Error::FdMismatch { what, analytic, fd });
    }
    Ok(())
}

/// Sensitivities of the critical speed via the envelope identity, each
/// cross-checked internally against a central finite difference of the
/// recomputed critical speed (1e-4 relative agreement required).
///
/// Signs for R0 > 1, d > 0 and a genuinely vaccinated population
/// (alpha > 0, beta2 > 0): (-, +, +, +, +). With beta2 = 0 the gamma1
/// sensitivity degenerates to zero.
pub fn speed_sensitivities(p: &ModelParams) -> Result<SensitivityReport> {
    let crit = critical_speed(p)?;
    let e0 = disease_free_equilibrium(p);
    let mu2 = p.rates().mu2;
    let mu3 = p.rates().mu3;
    let r = crit.r_star;

    // d(delta)/d(theta) at fixed (r*, c*), divided by r*.
    // gamma1 acts through V0 = lambda*alpha/(mu1*mu2): dV0/dgamma1 = -V0/mu2.
    let report = SensitivityReport {
        dc_dgamma1: -p.beta2 * e0.v / (mu2 * r),
        dc_dd: lap_symbol(r) / r,
        dc_dbeta1: e0.s / r,
        dc_dbeta2: e0.v / r,
        dc_dr0: mu3 / r,
    };

    let fd_gamma1 = central_fd(
        |x| Ok(critical_speed(&ModelParams { gamma1: x, ..*p })?.c_star),
        p.gamma1,
    )?;
    check_fd("dc*/dgamma1", report.dc_dgamma1, fd_gamma1)?;

    let fd_d = central_fd(
        |x| Ok(critical_speed(&ModelParams { d: x, ..*p })?.c_star),
        p.d,
    )?;
    check_fd("dc*/dd", report.dc_dd, fd_d)?;

    let fd_beta1 = central_fd(
        |x| Ok(critical_speed(&ModelParams { beta1: x, ..*p })?.c_star),
        p.beta1,
    )?;
    check_fd("dc*/dbeta1", report.dc_dbeta1, fd_beta1)?;

    let fd_beta2 = central_fd(
        |x| Ok(critical_speed(&ModelParams { beta2: x, ..*p })?.c_star),
        p.beta2,
    )?;
    check_fd("dc*/dbeta2", report.dc_dbeta2, fd_beta2)?;

    let r0 = basic_reproduction_number(p);
    let fd_r0 = central_fd(
        |x| Ok(critical_pair_core(p.d, mu3 * (x - 1.0))?.c_star),
        r0,
    )?;
    check_fd("dc*/dR0", report.dc_dr0, fd_r0)?;

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn canonical() -> ModelParams {
        ModelParams::new(1.0, 0.3, 0.1, 0.2, 0.1, 0.3, 0.1, 1.0).unwrap()
    }

    // Frozen from an independent Newton/grid oracle for the canonical set.
    const C_STAR: f64 = 1.9988802278020645;
    const R_STAR: f64 = 0.8809776323424784;
    const R1_AT_2C: f64 = 0.2490609483977174;
    const R2_AT_2C: f64 = 2.331003741704891;
    const KAPPA0_AT_2C: f64 = 2.5158315108980656;

    #[test]
    fn delta_at_zero_is_pressure_excess() {
        let p = canonical();
        let q = delta(&p, 0.0, 3.0);
        assert!((q - 14.0 / 15.0).abs() <= 1e-15, "q = {q}");
        let mu3 = p.rates().mu3;
        let r0 = basic_reproduction_number(&p);
        assert!((q - mu3 * (r0 - 1.0)).abs() <= 1e-15);
    }

    #[test]
    fn critical_pair_canonical() {
        let p = canonical();
        let crit = critical_speed(&p).unwrap();
        assert!((crit.c_star - C_STAR).abs() <= 1e-10, "c* = {}", crit.c_star);
        assert!((crit.r_star - R_STAR).abs() <= 1e-9, "r* = {}", crit.r_star);
        // Defining equations at machine accuracy.
        assert!(delta(&p, crit.r_star, crit.c_star).abs() <= 1e-12);
        assert!(delta_dr(&p, crit.r_star, crit.c_star).abs() <= 1e-12);
    }

    #[test]
    fn critical_pair_matches_grid_scan() {
        let p = canonical();
        let crit = critical_speed(&p).unwrap();
        let q = pressure_excess(&p);
        let mut best = f64::INFINITY;
        let mut r = 1e-5;
        while r <= 10.0 {
            let c = (p.d * lap_symbol(r) + q) / r;
            if c < best {
                best = c;
            }
            r += 1e-5;
        }
        assert!(
            (crit.c_star - best).abs() <= 1e-4,
            "{} vs grid {}",
            crit.c_star,
            best
        );
    }

    #[test]
    fn critical_speed_requires_supercritical_r0() {
        let p = ModelParams::new(1.0, 0.01, 0.01, 0.2, 0.1, 0.3, 0.1, 1.0).unwrap();
        match critical_speed(&p) {
            Err(Error::Subcritical { r0 }) => assert!(r0 < 1.0),
            other => panic!("expected Subcritical, got {other:?}"),
        }
    }

    #[test]
    fn roots_canonical_at_twice_critical() {
        let p = canonical();
        let c = 2.0 * C_STAR;
        let roots = lambda_roots(&p, c).unwrap();
        assert!((roots.r1 - R1_AT_2C).abs() <= 1e-10, "r1 = {}", roots.r1);
        assert!((roots.r2 - R2_AT_2C).abs() <= 1e-10, "r2 = {}", roots.r2);
        assert!(delta(&p, roots.r1, c).abs() <= 1e-12);
        assert!(delta(&p, roots.r2, c).abs() <= 1e-12);
        assert!(roots.r1 < R_STAR && R_STAR < roots.r2);
        // Strictly negative between the roots.
        for k in 1..=1000 {
            let r = roots.r1 + (roots.r2 - roots.r1) * k as f64 / 1001.0;
            assert!(delta(&p, r, c) < 0.0, "delta >= 0 at r = {r}");
        }
    }

    #[test]
    fn roots_unfold_just_above_critical() {
        let p = canonical();
        let crit = critical_speed(&p).unwrap();
        let roots = lambda_roots(&p, crit.c_star * (1.0 + 1e-6)).unwrap();
        assert!(roots.r1 < crit.r_star && crit.r_star < roots.r2);
        assert!(roots.r2 - roots.r1 < 0.01);
    }

    #[test]
    fn roots_refused_at_critical_with_tangent_reported() {
        let p = canonical();
        let crit = critical_speed(&p).unwrap();
        match lambda_roots(&p, crit.c_star) {
            Err(Error::AtOrBelowCritical {
                tangential_root: Some(r),
                ..
            }) => assert!((r - crit.r_star).abs() <= 1e-12),
            other => panic!("expected tangential AtOrBelowCritical, got {other:?}"),
        }
    }

    #[test]
    fn no_roots_below_critical_and_delta_positive() {
        let p = canonical();
        let c = 0.5 * C_STAR;
        assert!(matches!(
            lambda_roots(&p, c),
            Err(Error::AtOrBelowCritical { .. })
        ));
        for k in 1..=1000 {
            let r = 10.0 * k as f64 / 1000.0;
            assert!(delta(&p, r, c) > 0.0, "delta <= 0 at r = {r}");
        }
    }

    #[test]
    fn kappa0_canonical_and_ordering() {
        let p = canonical();
        let c = 2.0 * C_STAR;
        let k0 = kappa0(&p, c).unwrap();
        assert!((k0 - KAPPA0_AT_2C).abs() <= 1e-10, "kappa0 = {k0}");
        let roots = lambda_roots(&p, c).unwrap();
        assert!(roots.r2 < k0);
        // Grid oracle: locate the sign change to 1e-6 by scan.
        let y = |k: f64| p.d * lap_symbol(k) - c * k - p.rates().mu3;
        let mut k = (k0 - 1e-3).max(0.0);
        let mut oracle = None;
        while k < k0 + 1e-3 {
            if y(k) <= 0.0 && y(k + 1e-6) > 0.0 {
                oracle = Some(k);
                break;
            }
            k += 1e-6;
        }
        let oracle = oracle.expect("scan found no sign change");
        assert!((k0 - oracle).abs() <= 2e-6);
    }

    #[test]
    fn sensitivity_signs_and_values() {
        let p = canonical();
        let s = speed_sensitivities(&p).unwrap();
        assert!(s.dc_dgamma1 < 0.0);
        assert!(s.dc_dd > 0.0);
        assert!(s.dc_dbeta1 > 0.0);
        assert!(s.dc_dbeta2 > 0.0);
        assert!(s.dc_dr0 > 0.0);
        // Independent finite differences, recomputed here.
        let h = 1e-5;
        let up = critical_speed(&ModelParams {
            gamma1: p.gamma1 + h,
            ..p
        })
        .unwrap()
        .c_star;
        let dn = critical_speed(&ModelParams {
            gamma1: p.gamma1 - h,
            ..p
        })
        .unwrap()
        .c_star;
        let fd = (up - dn) / (2.0 * h);
        assert!((s.dc_dgamma1 - fd).abs() <= 1e-4 * fd.abs());
    }

    #[test]
    fn gamma1_sensitivity_degenerates_without_vaccinated_transmission() {
        let p = ModelParams::new(1.0, 0.3, 0.0, 0.2, 0.1, 0.3, 0.1, 1.0).unwrap();
        let s = speed_sensitivities(&p).unwrap();
        assert_eq!(s.dc_dgamma1, 0.0);
    }

    fn arb_supercritical() -> impl Strategy<Value = ModelParams> {
        (
            0.5..3.0_f64,  // lambda
            0.2..1.0_f64,  // beta1
            0.0..0.5_f64,  // beta2
            0.0..0.5_f64,  // alpha
            0.02..0.2_f64, // mu
            0.0..0.4_f64,  // gamma
            0.0..0.4_f64,  // gamma1
            0.2..3.0_f64,  // d
        )
            .prop_map(|(lambda, beta1, beta2, alpha, mu, gamma, gamma1, d)| {
                ModelParams::new(lambda, beta1, beta2, alpha, mu, gamma, gamma1, d).unwrap()
            })
            .prop_filter("supercritical", |p| basic_reproduction_number(p) > 1.05)
    }

    proptest! {
        #[test]
        fn delta_reflection_identity(p in arb_supercritical(), r in 0.01..4.0_f64, c in 0.1..6.0_f64) {
            let lhs = delta(&p, r, c) - delta(&p, -r, c);
            prop_assert!((lhs + 2.0 * c * r).abs() <= 1e-12 * (c * r).max(1.0));
        }

        #[test]
        fn delta_linear_in_speed(p in arb_supercritical(), r in 0.01..4.0_f64, c in 0.1..6.0_f64) {
            let h = 1e-3;
            let fd = (delta(&p, r, c + h) - delta(&p, r, c - h)) / (2.0 * h);
            prop_assert!((fd + r).abs() <= 1e-9 * r.max(1.0));
        }

        #[test]
        fn delta_convex_in_r(p in arb_supercritical(), r in 0.05..4.0_f64, c in 0.1..6.0_f64) {
            let h = 0.01;
            let second = delta(&p, r + h, c) - 2.0 * delta(&p, r, c) + delta(&p, r - h, c);
            prop_assert!(second > 0.0);
        }

        #[test]
        fn critical_speed_increases_with_diffusivity(p in arb_supercritical()) {
            let faster = ModelParams { d: p.d * 2.0, ..p };
            let a = critical_speed(&p).unwrap().c_star;
            let b = critical_speed(&faster).unwrap().c_star;
            prop_assert!(b > a);
        }

        #[test]
        fn roots_spread_with_speed(p in arb_supercritical(), f in 1.2..4.0_f64) {
            let crit = critical_speed(&p).unwrap();
            let a = lambda_roots(&p, crit.c_star * f).unwrap();
            let b = lambda_roots(&p, crit.c_star * (f + 0.3)).unwrap();
            prop_assert!(b.r1 < a.r1, "r1 must decrease with c");
            prop_assert!(b.r2 > a.r2, "r2 must increase with c");
        }
    }
}
