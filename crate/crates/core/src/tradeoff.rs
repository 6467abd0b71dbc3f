//! Transmit power versus base-station density for a coverage target, and
//! a seller's areal power consumption.
//!
//! Inverting the closed-form coverage approximation at `P_c = 1 - eps`
//! gives `p = c0 * lambda^(-alpha/2)` with
//!
//! ```text
//! c0 = T sigma^2 * [2 pi (1 - (1 - eps) beta') Gamma(2/alpha) / (alpha (1 - eps))]^(-alpha/2)
//! ```
//!
//! where `beta' = 1 + (lambda_I / lambda_A)(beta - 1)`. A positive solution
//! exists only while `1 - eps < 1 / beta'`.

use serde::{Deserialize, Serialize};

use crate::coverage::beta;
use crate::error::{Error, Result};
use crate::numeric::gamma;
use crate::scenario::{RadioParams, SharingScenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosTarget {
    /// Tolerable outage probability.
    pub epsilon: f64,
}

impl QosTarget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
        }
        Ok(QosTarget { epsilon })
    }

    /// Required coverage `1 - eps`.
    pub fn coverage(&self) -> f64 {
        1.0 - self.epsilon
    }
}

/// A seller's power and cost figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCostParams {
    /// Maximum transmit power per BS, W.
    pub p_max: f64,
    /// Circuit power per BS, W.
    pub p_c: f64,
    /// Price per unit areal power.
    pub a: f64,
    /// Fixed operating cost.
    pub d: f64,
    /// The seller's own SINR threshold, linear.
    pub threshold: f64,
}

impl PowerCostParams {
    pub fn new(p_max: f64, p_c: f64, a: f64, d: f64, threshold: f64) -> Result<Self> {
        let params = PowerCostParams {
            p_max,
            p_c,
            a,
            d,
            threshold,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(Error::param("p_max", format!("must be positive, got {}", self.p_max)));
        }
        if !(self.p_c >= 0.0 && self.p_c.is_finite()) {
            return Err(Error::param("p_c", format!("must be non-negative, got {}", self.p_c)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::param("a", format!("must be positive, got {}", self.a)));
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::param("d", format!("must be non-negative, got {}", self.d)));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::param("threshold", format!("must be positive, got {}", self.threshold)));
        }
        Ok(())
    }
}

/// How much of the association set also interferes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InterferenceLoad {
    /// Every station interferes (`lambda_I = lambda_A`).
    Full,
    /// `lambda_I / lambda_A`, i.e. `lambda_bar / lambda` under fractional activity.
    Ratio(f64),
}

impl InterferenceLoad {
    pub fn from_scenario(scenario: &SharingScenario) -> Self {
        InterferenceLoad::Ratio(scenario.interference_ratio())
    }

    pub fn ratio(&self) -> f64 {
        match *self {
            InterferenceLoad::Full => 1.0,
            InterferenceLoad::Ratio(r) => r,
        }
    }

    /// `beta' = 1 + ratio (beta - 1)`.
    pub fn effective_beta(&self, beta: f64) -> f64 {
        1.0 + self.ratio() * (beta - 1.0)
    }
}

// Relative guard on `1 - (1 - eps) beta'` so the exact boundary, which
// rarely evaluates to zero in floating point, is reported as infeasible.
const BOUNDARY_GUARD: f64 = 1e-12;

/// The constant `c0` in `p = c0 lambda^(-alpha/2)`.
pub fn power_coefficient(radio: &RadioParams, qos: &QosTarget, load: InterferenceLoad) -> Result<f64> {
    radio.validate()?;
    if radio.noise_power <= 0.0 {
        return Err(Error::Degenerate(
            "noise power is zero; any positive transmit power meets a feasible target".into(),
        ));
    }
    let ratio = load.ratio();
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::param("interference ratio", format!("must be non-negative, got {ratio}")));
    }
    let beta_eff = load.effective_beta(beta(radio)?);
    let target = qos.coverage();
    let slack = 1.0 - target * beta_eff;
    if slack <= BOUNDARY_GUARD {
        return Err(Error::Infeasible {
            target,
            bound: 1.0 / beta_eff,
        });
    }
    let alpha = radio.path_loss_exponent;
    let core = 2.0 * std::f64::consts::PI * slack * gamma(2.0 / alpha) / (alpha * target);
    Ok(radio.threshold * radio.noise_power * core.powf(-alpha / 2.0))
}

/// Minimum per-BS transmit power that keeps the approximate coverage at
/// `1 - eps` for total association intensity `lambda_total`.
pub fn min_power(lambda_total: f64, radio: &RadioParams, qos: &QosTarget, load: InterferenceLoad) -> Result<f64> {
    if !(lambda_total > 0.0 && lambda_total.is_finite()) {
        return Err(Error::param("lambda_total", format!("must be positive, got {lambda_total}")));
    }
    let c0 = power_coefficient(radio, qos, load)?;
    Ok(c0 * lambda_total.powf(-radio.path_loss_exponent / 2.0))
}

/// Cell radius at minimum power without sharing, defined by a cell-edge
/// SNR of one half: `p R^(-alpha) / sigma^2 = 1/2`.
pub fn cell_radius(lambda0: f64, radio: &RadioParams, qos: &QosTarget, load: InterferenceLoad) -> Result<f64> {
    let p = min_power(lambda0, radio, qos, load)?;
    Ok(radius_for_power(p, radio))
}

/// `R = (2 p / sigma^2)^(1/alpha)`.
pub fn radius_for_power(p: f64, radio: &RadioParams) -> f64 {
    (2.0 * p / radio.noise_power).powf(1.0 / radio.path_loss_exponent)
}

/// How [`AreaPowerModel::minimizer`] found its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimizerKind {
    /// Stationary point of the convex branch.
    Interior,
    /// The stationary point lies below the breakpoint.
    Breakpoint,
    /// No circuit power: areal power keeps falling with density, so the
    /// breakpoint is returned as a convention.
    MonotoneDecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimizer {
    pub lambda: f64,
    pub kind: MinimizerKind,
}

/// Areal power of a seller operating its own network at minimum power,
/// capped at `p_max`:
///
/// ```text
/// S(l) = l (p_max + p_c)                 l <= l_th = (c / p_max)^(2/alpha)
/// S(l) = c l^(1 - alpha/2) + p_c l       l >= l_th
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaPowerModel {
    pub c: f64,
    pub alpha: f64,
    pub p_max: f64,
    pub p_c: f64,
}

impl AreaPowerModel {
    /// Builds the model from the seller's own threshold `params.threshold`,
    /// ignoring `radio.threshold` and `radio.tx_power`.
    pub fn new(params: &PowerCostParams, radio: &RadioParams, qos: &QosTarget) -> Result<Self> {
        params.validate()?;
        let own = radio.with_threshold(params.threshold);
        let c = power_coefficient(&own, qos, InterferenceLoad::Full)?;
        Ok(AreaPowerModel {
            c,
            alpha: radio.path_loss_exponent,
            p_max: params.p_max,
            p_c: params.p_c,
        })
    }

    pub fn from_parts(c: f64, alpha: f64, p_max: f64, p_c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("must be positive, got {c}")));
        }
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(Error::param("path_loss_exponent", format!("must exceed 2, got {alpha}")));
        }
        if !(p_max > 0.0 && p_c >= 0.0) {
            return Err(Error::param("power", "need p_max > 0 and p_c >= 0"));
        }
        Ok(AreaPowerModel { c, alpha, p_max, p_c })
    }

    /// Breakpoint `l_th` where the required power reaches `p_max`.
    pub fn threshold_intensity(&self) -> f64 {
        (self.c / self.p_max).powf(2.0 / self.alpha)
    }

    /// Per-BS transmit power at density `lambda`.
    pub fn tx_power(&self, lambda: f64) -> f64 {
        if lambda <= self.threshold_intensity() {
            self.p_max
        } else {
            self.c * lambda.powf(-self.alpha / 2.0)
        }
    }

    pub fn areal_power(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        lambda * (self.tx_power(lambda) + self.p_c)
    }

    /// `dS/dl`; the right derivative at the breakpoint.
    pub fn marginal(&self, lambda: f64) -> f64 {
        if lambda < self.threshold_intensity() {
            self.p_max + self.p_c
        } else {
            self.p_c - self.c * (self.alpha / 2.0 - 1.0) * lambda.powf(-self.alpha / 2.0)
        }
    }

    /// `d^2 S / dl^2 = c alpha (alpha - 2) / 4 * l^(-alpha/2 - 1)` on the
    /// convex branch, zero on the linear one.
    pub fn curvature(&self, lambda: f64) -> f64 {
        if lambda < self.threshold_intensity() {
            0.0
        } else {
            self.c * self.alpha * (self.alpha - 2.0) / 4.0 * lambda.powf(-self.alpha / 2.0 - 1.0)
        }
    }

    /// Density minimising areal power over `l >= l_th`.
    pub fn minimizer(&self) -> Minimizer {
        let lth = self.threshold_intensity();
        if self.p_c <= 0.0 {
            return Minimizer {
                lambda: lth,
                kind: MinimizerKind::MonotoneDecreasing,
            };
        }
        let stationary = (self.c * (self.alpha / 2.0 - 1.0) / self.p_c).powf(2.0 / self.alpha);
        if stationary > lth {
            Minimizer {
                lambda: stationary,
                kind: MinimizerKind::Interior,
            }
        } else {
            Minimizer {
                lambda: lth,
                kind: MinimizerKind::Breakpoint,
            }
        }
    }
}

pub fn areal_power(lambda_k: f64, params: &PowerCostParams, radio: &RadioParams, qos: &QosTarget) -> Result<f64> {
    if !(lambda_k >= 0.0) {
        return Err(Error::param("lambda_k", format!("must be non-negative, got {lambda_k}")));
    }
    Ok(AreaPowerModel::new(params, radio, qos)?.areal_power(lambda_k))
}

pub fn areal_power_minimizer(params: &PowerCostParams, radio: &RadioParams, qos: &QosTarget) -> Result<Minimizer> {
    Ok(AreaPowerModel::new(params, radio, qos)?.minimizer())
}
