//! Radio parameters, operators and sharing scenarios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fading {
    /// Unit-mean exponential power gain.
    Rayleigh,
    /// Nakagami-m power gain. Recognised so configurations can name it,
    /// but no coverage model is implemented for it.
    Nakagami,
}

/// Downlink radio parameters of the buyer's network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// SINR threshold `T` as a linear ratio.
    pub threshold: f64,
    /// Path-loss exponent `alpha`.
    pub path_loss_exponent: f64,
    /// Noise power in watts.
    pub noise_power: f64,
    /// Per-BS transmit power in watts.
    pub tx_power: f64,
    pub fading: Fading,
}

impl RadioParams {
    pub fn new(threshold: f64, path_loss_exponent: f64, noise_power: f64, tx_power: f64) -> Result<Self> {
        let radio = RadioParams {
            threshold,
            path_loss_exponent,
            noise_power,
            tx_power,
            fading: Fading::Rayleigh,
        };
        radio.validate()?;
        Ok(radio)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::param("threshold", format!("must be positive, got {}", self.threshold)));
        }
        if !(self.path_loss_exponent > 2.0 && self.path_loss_exponent.is_finite()) {
            return Err(Error::param(
                "path_loss_exponent",
                format!("must exceed 2, got {}", self.path_loss_exponent),
            ));
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(Error::param("noise_power", format!("must be non-negative, got {}", self.noise_power)));
        }
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return Err(Error::param("tx_power", format!("must be positive, got {}", self.tx_power)));
        }
        Ok(())
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_tx_power(mut self, tx_power: f64) -> Self {
        self.tx_power = tx_power;
        self
    }

    pub fn with_noise_power(mut self, noise_power: f64) -> Self {
        self.noise_power = noise_power;
        self
    }

    /// Noise coefficient `B = T sigma^2 / p`.
    pub fn noise_coefficient(&self) -> f64 {
        self.threshold * self.noise_power / self.tx_power
    }
}

/// One operator's base-station deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorProfile {
    pub id: usize,
    /// BS intensity per m².
    pub intensity: f64,
}

impl OperatorProfile {
    pub fn new(id: usize, intensity: f64) -> Result<Self> {
        if !(intensity >= 0.0 && intensity.is_finite()) {
            return Err(Error::param("intensity", format!("must be non-negative, got {intensity}")));
        }
        Ok(OperatorProfile { id, intensity })
    }
}

/// Which shared base stations interfere with the buyer's users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assumption {
    /// Every shared BS serves a buyer user, so interferers = association set.
    AllBsServe,
    /// Only an activity-weighted fraction of shared BSs interferes.
    FractionalActivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharedSeller {
    pub operator: OperatorProfile,
    /// Purchased fraction `x_k` in `[0, 1]`.
    pub fraction: f64,
}

/// A buyer plus the sellers whose infrastructure it may associate with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharingScenario {
    buyer: OperatorProfile,
    sellers: Vec<SharedSeller>,
    assumption: Assumption,
}

impl SharingScenario {
    pub fn new(buyer: OperatorProfile, sellers: Vec<SharedSeller>, assumption: Assumption) -> Result<Self> {
        for s in &sellers {
            if !(0.0..=1.0).contains(&s.fraction) {
                return Err(Error::param("fraction", format!("must lie in [0, 1], got {}", s.fraction)));
            }
            OperatorProfile::new(s.operator.id, s.operator.intensity)?;
        }
        OperatorProfile::new(buyer.id, buyer.intensity)?;
        Ok(SharingScenario {
            buyer,
            sellers,
            assumption,
        })
    }

    /// Buyer on its own infrastructure.
    pub fn no_sharing(buyer: OperatorProfile) -> Self {
        SharingScenario {
            buyer,
            sellers: Vec::new(),
            assumption: Assumption::AllBsServe,
        }
    }

    /// Buyer sharing the whole infrastructure of every listed seller.
    pub fn full_sharing(buyer: OperatorProfile, sellers: &[OperatorProfile], assumption: Assumption) -> Result<Self> {
        let sellers = sellers
            .iter()
            .map(|&operator| SharedSeller { operator, fraction: 1.0 })
            .collect();
        SharingScenario::new(buyer, sellers, assumption)
    }

    pub fn buyer(&self) -> &OperatorProfile {
        &self.buyer
    }

    pub fn sellers(&self) -> &[SharedSeller] {
        &self.sellers
    }

    pub fn assumption(&self) -> Assumption {
        self.assumption
    }

    pub fn with_assumption(mut self, assumption: Assumption) -> Self {
        self.assumption = assumption;
        self
    }

    /// Association-eligible intensity of each operator, buyer first:
    /// `[lambda_0, lambda_1 x_1, ...]`.
    pub fn effective_intensities(&self) -> Vec<f64> {
        std::iter::once(self.buyer.intensity)
            .chain(self.sellers.iter().map(|s| s.operator.intensity * s.fraction))
            .collect()
    }

    /// `lambda_A = lambda_0 + sum_k lambda_k x_k`.
    pub fn association_intensity(&self) -> f64 {
        self.effective_intensities().iter().sum()
    }

    /// Activity levels `w_k = lambda_k x_k / lambda_A`, buyer first.
    /// All zero when nothing is deployed.
    pub fn activity_weights(&self) -> Vec<f64> {
        let eff = self.effective_intensities();
        let total: f64 = eff.iter().sum();
        if total <= 0.0 {
            return vec![0.0; eff.len()];
        }
        eff.iter().map(|l| l / total).collect()
    }

    /// Intensity of interfering base stations, `lambda_I`.
    pub fn interference_intensity(&self) -> f64 {
        match self.assumption {
            Assumption::AllBsServe => self.association_intensity(),
            Assumption::FractionalActivity => {
                let eff = self.effective_intensities();
                let total: f64 = eff.iter().sum();
                if total <= 0.0 {
                    0.0
                } else {
                    eff.iter().map(|l| l * l).sum::<f64>() / total
                }
            }
        }
    }

    /// `lambda_I / lambda_A`; 1 under full interference, `lambda_bar / lambda`
    /// under fractional activity.
    pub fn interference_ratio(&self) -> f64 {
        let la = self.association_intensity();
        if la <= 0.0 {
            1.0
        } else {
            self.interference_intensity() / la
        }
    }
}
