//! Analytic SINR coverage probability of the buyer's typical user.
//!
//! With association intensity `lambda_A`, interferer intensity `lambda_I`,
//! `A = pi (lambda_I (beta - 1) + lambda_A)` and `B = T sigma^2 / p`:
//!
//! ```text
//! P_c = pi lambda_A * int_0^inf exp(-(A z + B z^(alpha/2))) dz
//! P_c ~ pi lambda_A / (A + (alpha/2) B^(2/alpha) / Gamma(2/alpha))
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::gamma;
use crate::numeric::quadrature::{integrate_to_infinity, Tolerance};
use crate::scenario::{Assumption, Fading, RadioParams, SharingScenario};

/// `rho(T, alpha) = T^(2/alpha) * int_{T^(-2/alpha)}^inf du / (1 + u^(alpha/2))`.
pub fn rho(threshold: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::param("path_loss_exponent", format!("must exceed 2, got {alpha}")));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::param("threshold", format!("must be positive, got {threshold}")));
    }
    let half = alpha / 2.0;
    let ln_lower = -threshold.ln() / half;

    // u = exp(ln_lower + s): the integrand then decays like
    // exp(-(alpha/2 - 1) s), evaluated in log space to avoid overflow.
    let integrand = |s: f64| {
        let ln_v = ln_lower + s;
        if ln_v > 0.0 {
            ((1.0 - half) * ln_v).exp() / (1.0 + (-half * ln_v).exp())
        } else {
            ln_v.exp() / (1.0 + (half * ln_v).exp())
        }
    };
    let est = integrate_to_infinity(integrand, 0.0, Tolerance::new(0.0, 1e-12))?;
    Ok(threshold.powf(1.0 / half) * est.value)
}

/// Interference factor `beta`. Only the Rayleigh reduction
/// `beta = 1 + rho(T, alpha)` is implemented; it does not depend on `p`.
pub fn beta(radio: &RadioParams) -> Result<f64> {
    match radio.fading {
        Fading::Rayleigh => Ok(1.0 + rho(radio.threshold, radio.path_loss_exponent)?),
        other => Err(Error::UnsupportedFading(format!("{other:?}"))),
    }
}

/// Noise-equivalent intensity
/// `theta = alpha / (2 pi) * B^(2/alpha) / Gamma(2/alpha)`, so that the
/// closed-form approximation reads `lambda_A / (lambda_I (beta-1) + lambda_A + theta)`.
pub fn noise_intensity(radio: &RadioParams) -> f64 {
    let alpha = radio.path_loss_exponent;
    let b = radio.noise_coefficient();
    alpha / (2.0 * PI) * b.powf(2.0 / alpha) / gamma(2.0 / alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageCoefficients {
    /// `pi (lambda_I (beta - 1) + lambda_A)`, per m².
    pub a: f64,
    /// `T sigma^2 / p`.
    pub b: f64,
    pub beta: f64,
}

pub fn coefficients(scenario: &SharingScenario, radio: &RadioParams) -> Result<CoverageCoefficients> {
    radio.validate()?;
    let beta = beta(radio)?;
    let a = PI * (scenario.interference_intensity() * (beta - 1.0) + scenario.association_intensity());
    Ok(CoverageCoefficients {
        a,
        b: radio.noise_coefficient(),
        beta,
    })
}

/// Coverage probability from the exact integral, evaluated by adaptive
/// quadrature. Zero when no base station is available for association.
pub fn coverage_exact(scenario: &SharingScenario, radio: &RadioParams) -> Result<f64> {
    let lambda_a = scenario.association_intensity();
    if lambda_a <= 0.0 {
        return Ok(0.0);
    }
    let c = coefficients(scenario, radio)?;
    let half = radio.path_loss_exponent / 2.0;

    // z = scale * s, with scale chosen so both exponent terms are O(1).
    let scale = 1.0 / (c.a + c.b.powf(1.0 / half));
    let ka = c.a * scale;
    let kb = c.b * scale.powf(half);
    let est = integrate_to_infinity(
        |s: f64| (-(ka * s + kb * s.powf(half))).exp(),
        0.0,
        Tolerance::new(1e-14, 1e-12),
    )?;
    Ok((PI * lambda_a * scale * est.value).clamp(0.0, 1.0))
}

/// Closed-form approximation of the coverage probability.
pub fn coverage_approx(scenario: &SharingScenario, radio: &RadioParams) -> Result<f64> {
    let lambda_a = scenario.association_intensity();
    if lambda_a <= 0.0 {
        return Ok(0.0);
    }
    radio.validate()?;
    let beta = beta(radio)?;
    Ok(approx_from_parts(
        lambda_a,
        scenario.interference_intensity(),
        beta,
        noise_intensity(radio),
    ))
}

/// `lambda_A / (lambda_I (beta - 1) + lambda_A + theta)` for precomputed
/// `beta` and noise intensity `theta`.
pub fn approx_from_parts(lambda_a: f64, lambda_i: f64, beta: f64, noise_intensity: f64) -> f64 {
    if lambda_a <= 0.0 {
        return 0.0;
    }
    (lambda_a / (lambda_i * (beta - 1.0) + lambda_a + noise_intensity)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticLimit {
    /// Buyer's own intensity grows without bound.
    Lambda0ToInf,
    /// Number of sellers grows, with total seller intensity unbounded and
    /// `lambda_bar / lambda -> 0`.
    NToInf,
}

/// Limiting coverage as the buyer's intensity or the seller count grows.
pub fn coverage_asymptote(scenario: &SharingScenario, radio: &RadioParams, limit: AsymptoticLimit) -> Result<f64> {
    match (scenario.assumption(), limit) {
        (Assumption::FractionalActivity, AsymptoticLimit::NToInf) => Ok(1.0),
        _ => Ok(1.0 / beta(radio)?),
    }
}
