//! Kinetic core of the vaccination model: parameters, derived loss rates,
//! equilibria, and the basic reproduction number.
//!
//! The spatially homogeneous system is
//!
//! ```text
//! S' = L - b1*S*I - (a + m)*S
//! V' = a*S - b2*V*I - (g1 + m)*V
//! I' = b1*S*I + b2*V*I - (g + m)*I
//! ```
//!
//! with recruitment L, transmission rates b1 (susceptible) and b2
//! (vaccinated, b2 <= b1 typically), vaccination rate a, natural death m,
//! recovery g, and vaccine-induced immunity rate g1. The removed class
//! decouples and is only tracked by the lattice simulator.

use crate::error::{Error, Result};

/// Model parameters. Construct through [`ModelParams::new`], which validates;
/// the numeric operations trust their inputs after that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Recruitment rate into the susceptible class (Lambda).
    pub lambda: f64,
    /// Transmission rate for susceptibles.
    pub beta1: f64,
    /// Transmission rate for vaccinated individuals.
    pub beta2: f64,
    /// Vaccination rate.
    pub alpha: f64,
    /// Natural death rate.
    pub mu: f64,
    /// Recovery rate of infected individuals.
    pub gamma: f64,
    /// Rate at which vaccinated individuals gain full immunity.
    pub gamma1: f64,
    /// Diffusivity of the infected class (S, V, R diffuse with rate 1).
    pub d: f64,
}

/// Aggregate exit rates of the three active compartments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// mu1 = alpha + mu: total exit rate from S.
    pub mu1: f64,
    /// mu2 = gamma1 + mu: total exit rate from V.
    pub mu2: f64,
    /// mu3 = gamma + mu: total exit rate from I.
    pub mu3: f64,
}

/// A constant state (S, V, I) of the kinetic system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub s: f64,
    pub v: f64,
    pub i: f64,
}

impl ModelParams {
    /// Validates and builds a parameter set. Rejects non-finite values,
    /// non-positive lambda/mu/d, negative rates, and beta1 + beta2 == 0.
    pub fn new(
        lambda: f64,
        beta1: f64,
        beta2: f64,
        alpha: f64,
        mu: f64,
        gamma: f64,
        gamma1: f64,
        d: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            lambda,
            beta1,
            beta2,
            alpha,
            mu,
            gamma,
            gamma1,
            d,
        };
        p.validate()?;
        Ok(p)
    }

    /// Re-runs the construction checks (useful after field edits in tests).
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("lambda", self.lambda),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("alpha", self.alpha),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("gamma1", self.gamma1),
            ("d", self.d),
        ];
        for (name, value) in named {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        for (name, value) in [("lambda", self.lambda), ("mu", self.mu), ("d", self.d)] {
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        for (name, value) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("gamma1", self.gamma1),
        ] {
            if value < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be nonnegative",
                });
            }
        }
        if self.beta1 + self.beta2 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta1",
                value: self.beta1,
                reason: "beta1 + beta2 must be positive",
            });
        }
        Ok(())
    }

    pub fn rates(&self) -> DerivedRates {
        DerivedRates {
            mu1: self.alpha + self.mu,
            mu2: self.gamma1 + self.mu,
            mu3: self.gamma + self.mu,
        }
    }
}

/// Infection-free state E0 = (L/mu1, L*alpha/(mu1*mu2), 0).
pub fn disease_free_equilibrium(p: &ModelParams) -> Equilibrium {
    let DerivedRates { mu1, mu2, .. } = p.rates();
    Equilibrium {
        s: p.lambda / mu1,
        v: p.lambda * p.alpha / (mu1 * mu2),
        i: 0.0,
    }
}

/// R0 = (b1*S0 + b2*V0) / mu3: combined infection pressure at the
/// infection-free state over the exit rate of I.
pub fn basic_reproduction_number(p: &ModelParams) -> f64 {
    let DerivedRates { mu3, .. } = p.rates();
    let e0 = disease_free_equilibrium(p);
    (p.beta1 * e0.s + p.beta2 * e0.v) / mu3
}

/// Scalar balance whose positive root is the endemic infection level:
/// h(I) = b1*S(I) + b2*V(I) - mu3 with S(I) = L/(b1*I + mu1) and
/// V(I) = alpha*S(I)/(b2*I + mu2). h(0) = mu3*(R0 - 1) and h is strictly
/// decreasing, so a positive root exists exactly when R0 > 1.
pub fn endemic_balance(p: &ModelParams, i: f64) -> f64 {
    let DerivedRates { mu1, mu2, mu3 } = p.rates();
    let a = p.beta1 * i + mu1;
    let b = p.beta2 * i + mu2;
    p.beta1 * p.lambda / a + p.beta2 * p.alpha * p.lambda / (a * b) - mu3
}

/// Analytic slope of [`endemic_balance`]; strictly negative for I >= 0.
pub fn endemic_balance_slope(p: &ModelParams, i: f64) -> f64 {
    let DerivedRates { mu1, mu2, .. } = p.rates();
    let a = p.beta1 * i + mu1;
    let b = p.beta2 * i + mu2;
    -p.beta1 * p.beta1 * p.lambda / (a * a)
        - p.beta2 * p.alpha * p.lambda * (p.beta1 * b + p.beta2 * a) / (a * a * b * b)
}

/// Endemic equilibrium E* for R0 > 1, via the monotone scalar reduction:
/// bracket the root of `endemic_balance` by doubling, bisect, then Newton
/// polish with the analytic slope.
pub fn endemic_equilibrium(p: &ModelParams) -> Result<Equilibrium> {
    let r0 = basic_reproduction_number(p);
    if r0 <= 1.0 {
        return Err(Error::NoEndemicEquilibrium { r0 });
    }
    let DerivedRates { mu1, mu2, .. } = p.rates();

    // h(0) = mu3*(R0-1) > 0 and h -> -mu3 < 0, so doubling always brackets.
    let mut hi = 1.0;
    let mut iterations = 0usize;
    while endemic_balance(p, hi) > 0.0 {
        hi *= 2.0;
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence {
                what: "endemic bracket doubling",
                iterations,
                last_delta: hi,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if endemic_balance(p, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut i_star = 0.5 * (lo + hi);
    for _ in 0..50 {
        let f = endemic_balance(p, i_star);
        let df = endemic_balance_slope(p, i_star);
        let step = f / df;
        let next = i_star - step;
        // The slope is strictly negative, so Newton stays well defined; fall
        // back inside the bracket if an overshoot ever escapes it.
        let next = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if (next - i_star).abs() <= f64::EPSILON * next.abs() {
            i_star = next;
            break;
        }
        i_star = next;
    }

    let a = p.beta1 * i_star + mu1;
    let b = p.beta2 * i_star + mu2;
    let s = p.lambda / a;
    let v = p.alpha * s / b;
    Ok(Equilibrium {
        s,
        v,
        i: i_star,
    })
}

/// Residuals of the three kinetic balance equations at a constant state,
/// in compartment order [S, V, I].
pub fn equilibrium_residual(p: &ModelParams, eq: &Equilibrium) -> [f64; 3] {
    let DerivedRates { mu1, mu2, mu3 } = p.rates();
    [
        p.lambda - p.beta1 * eq.s * eq.i - mu1 * eq.s,
        p.alpha * eq.s - p.beta2 * eq.v * eq.i - mu2 * eq.v,
        p.beta1 * eq.s * eq.i + p.beta2 * eq.v * eq.i - mu3 * eq.i,
    ]
}
