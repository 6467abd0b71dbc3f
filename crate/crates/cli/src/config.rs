//! Experiment configuration: the JSON schema, unit normalisation and
//! validation.
//!
//! Intensities are written as base-station counts per disk of radius
//! 500 m and stay in those units until a model is called. Everything with
//! a physical unit (thresholds, powers) is converted to linear SI when the
//! file is loaded.

use std::path::{Path, PathBuf};

use infrashare::buyer::SellerOffer;
use infrashare::market::{PriceCurve, Seller};
use infrashare::sim::DEFAULT_MARGIN_FACTOR;
use infrashare::tradeoff::{PowerCostParams, QosTarget};
use infrashare::units::{per_disk_to_per_m2, REFERENCE_DISK_RADIUS_M};
use infrashare::{Assumption, RadioParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Context, Result};
use crate::quantity::Quantity;

/// Seller QoS used by the areal-power model when a seller sets none.
pub const DEFAULT_SELLER_EPSILON: f64 = 0.6;
pub const DEFAULT_TRIALS: u64 = 100_000;

/// Counts per reference disk to per-m².
pub fn per_m2(count: f64) -> f64 {
    per_disk_to_per_m2(count, REFERENCE_DISK_RADIUS_M)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: Option<String>,
    radio: RawRadio,
    #[serde(default = "default_assumption")]
    assumption: Assumption,
    buyer: RawBuyer,
    #[serde(default)]
    sellers: Vec<RawSeller>,
    #[serde(default)]
    price_curve: Option<PriceCurveConfig>,
    experiment: RawExperiment,
    #[serde(default)]
    simulation: Option<RawSimulation>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<PathBuf>,
}

fn default_assumption() -> Assumption {
    Assumption::FractionalActivity
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    threshold: Quantity,
    path_loss_exponent: f64,
    noise_power: Quantity,
    tx_power: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBuyer {
    intensity: f64,
    #[serde(default)]
    epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeller {
    intensity: f64,
    #[serde(default)]
    price: Option<f64>,
    #[serde(default)]
    threshold: Option<Quantity>,
    #[serde(default)]
    circuit_power: Option<Quantity>,
    #[serde(default)]
    max_power: Option<Quantity>,
    #[serde(default)]
    power_price: Option<f64>,
    #[serde(default)]
    fixed_cost: f64,
    #[serde(default)]
    epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    #[serde(default)]
    disk_factor: Option<f64>,
    #[serde(default)]
    trials: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// A list of values, or `steps` points from `start` to `stop` inclusive.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSweep {
    List(Vec<f64>),
    Range(RawRange),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    start: f64,
    stop: f64,
    steps: usize,
    #[serde(default)]
    scale: Scale,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawExperiment {
    CoverageSweep {
        buyer_intensity: RawSweep,
        epsilon: Vec<f64>,
    },
    PowerSweep {
        tx_power_dbm: RawSweep,
        buyer_intensity: Vec<f64>,
    },
    EpsilonSweep {
        epsilon: RawSweep,
        seller_counts: Vec<usize>,
    },
    ArealPower {
        #[serde(default)]
        seller: usize,
        intensity: RawSweep,
    },
    MarketEquilibrium {
        intensities: Vec<Vec<f64>>,
        #[serde(default)]
        eta: Option<Vec<f64>>,
    },
    FullClearing {
        buyer_intensity: RawSweep,
        seller_counts: Vec<usize>,
    },
    McValidate {
        cases: Vec<McCase>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCase {
    /// Buyer intensity, per disk.
    pub buyer_intensity: f64,
    /// Seller intensities per disk; every seller is shared in full.
    #[serde(default)]
    pub seller_intensities: Vec<f64>,
    pub assumption: Assumption,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceCurveConfig {
    pub theta: f64,
    /// Slope per unit of intensity quoted per disk, so the SI slope is
    /// `eta * pi * 500^2`.
    pub eta: f64,
}

impl PriceCurveConfig {
    pub fn curve(&self) -> Result<PriceCurve> {
        PriceCurve::new(self.theta, self.eta / per_m2(1.0)).context(|| "price_curve".into())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        PriceCurveConfig { eta, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuyerConfig {
    /// Per disk.
    pub intensity: f64,
    pub epsilon: Option<f64>,
}

/// A seller, with SI powers and a linear threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SellerConfig {
    pub id: usize,
    /// Per disk.
    pub intensity: f64,
    /// Price asked from the buyer for the whole deployment. Falls back to
    /// the price curve at the seller's intensity.
    pub price: Option<f64>,
    pub threshold: f64,
    pub circuit_power: f64,
    pub max_power: f64,
    pub power_price: Option<f64>,
    pub fixed_cost: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    CoverageSweep { buyer_intensity: Vec<f64>, epsilon: Vec<f64> },
    PowerSweep { tx_power_dbm: Vec<f64>, buyer_intensity: Vec<f64> },
    EpsilonSweep { epsilon: Vec<f64>, seller_counts: Vec<usize> },
    ArealPower { seller: usize, intensity: Vec<f64> },
    MarketEquilibrium { intensities: Vec<Vec<f64>>, eta: Vec<f64> },
    FullClearing { buyer_intensity: Vec<f64>, seller_counts: Vec<usize> },
    McValidate { cases: Vec<McCase> },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::CoverageSweep { .. } => "coverage-sweep",
            Experiment::PowerSweep { .. } => "power-sweep",
            Experiment::EpsilonSweep { .. } => "epsilon-sweep",
            Experiment::ArealPower { .. } => "areal-power",
            Experiment::MarketEquilibrium { .. } => "market-equilibrium",
            Experiment::FullClearing { .. } => "full-clearing",
            Experiment::McValidate { .. } => "mc-validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    /// Simulation disk radius as a multiple of 500 m.
    pub disk_factor: f64,
    pub trials: u64,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub radio: RadioParams,
    pub assumption: Assumption,
    pub buyer: BuyerConfig,
    pub sellers: Vec<SellerConfig>,
    pub price_curve: Option<PriceCurveConfig>,
    pub experiment: Experiment,
    pub simulation: SimulationConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    parse_config(&text, stem)
}

/// Parses and validates a configuration; `default_name` is used when the
/// document has no `name`.
pub fn parse_config(text: &str, default_name: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Parse {
            field: if field == "." { String::new() } else { field },
            message: e.into_inner().to_string(),
        }
    })?;
    normalize(raw, default_name)
}

fn unit<T>(field: &str, r: std::result::Result<T, String>) -> Result<T> {
    r.map_err(|m| CliError::invalid(field, m))
}

fn check(ok: bool, field: impl Into<String>, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::invalid(field, message))
    }
}

fn check_epsilon(eps: f64, field: impl Into<String>) -> Result<()> {
    check(eps > 0.0 && eps < 1.0, field, format!("epsilon must lie in (0, 1), got {eps}"))
}

fn check_intensity(v: f64, field: impl Into<String>) -> Result<()> {
    check(v >= 0.0 && v.is_finite(), field, format!("intensity must be non-negative, got {v}"))
}

fn expand(sweep: RawSweep, field: &str) -> Result<Vec<f64>> {
    let values = match sweep {
        RawSweep::List(v) => v,
        RawSweep::Range(r) => {
            check(r.steps >= 1, format!("{field}.steps"), "need at least one point")?;
            check(
                r.start.is_finite() && r.stop.is_finite(),
                field.to_string(),
                "range ends must be finite",
            )?;
            if r.scale == Scale::Log {
                check(r.start > 0.0 && r.stop > 0.0, format!("{field}.start"), "log ranges need positive ends")?;
            }
            if r.steps == 1 {
                vec![r.start]
            } else {
                let n = (r.steps - 1) as f64;
                (0..r.steps)
                    .map(|i| {
                        let t = i as f64 / n;
                        if i + 1 == r.steps {
                            return r.stop;
                        }
                        match r.scale {
                            Scale::Linear => r.start + (r.stop - r.start) * t,
                            // base 10 keeps decades exact
                            Scale::Log => 10f64.powf(r.start.log10() + (r.stop.log10() - r.start.log10()) * t),
                        }
                    })
                    .collect()
            }
        }
    };
    check(!values.is_empty(), field.to_string(), "sweep is empty")?;
    for (i, v) in values.iter().enumerate() {
        check(v.is_finite(), format!("{field}[{i}]"), "value must be finite")?;
    }
    Ok(values)
}

fn radio_field(e: infrashare::Error) -> CliError {
    match e {
        infrashare::Error::InvalidParameter { name, reason } => CliError::invalid(format!("radio.{name}"), reason),
        other => CliError::invalid("radio", other.to_string()),
    }
}

fn normalize(raw: RawConfig, default_name: &str) -> Result<ExperimentConfig> {
    let r = &raw.radio;
    let radio = RadioParams::new(
        unit("radio.threshold", r.threshold.ratio())?,
        r.path_loss_exponent,
        unit("radio.noise_power", r.noise_power.watts())?,
        unit("radio.tx_power", r.tx_power.watts())?,
    )
    .map_err(radio_field)?;

    check_intensity(raw.buyer.intensity, "buyer.intensity")?;
    if let Some(eps) = raw.buyer.epsilon {
        check_epsilon(eps, "buyer.epsilon")?;
    }
    let buyer = BuyerConfig {
        intensity: raw.buyer.intensity,
        epsilon: raw.buyer.epsilon,
    };

    if let Some(c) = raw.price_curve {
        check(c.theta > 0.0 && c.theta.is_finite(), "price_curve.theta", "must be positive")?;
        check(c.eta > 0.0 && c.eta.is_finite(), "price_curve.eta", "must be positive")?;
    }

    let mut sellers = Vec::with_capacity(raw.sellers.len());
    for (i, s) in raw.sellers.iter().enumerate() {
        let at = |f: &str| format!("sellers[{i}].{f}");
        check(s.intensity > 0.0 && s.intensity.is_finite(), at("intensity"), "must be positive")?;
        if let Some(p) = s.price {
            check(p > 0.0 && p.is_finite(), at("price"), "must be positive")?;
        }
        let threshold = match &s.threshold {
            Some(q) => unit(&at("threshold"), q.ratio())?,
            None => radio.threshold,
        };
        check(threshold > 0.0 && threshold.is_finite(), at("threshold"), "must be positive")?;
        let circuit_power = match &s.circuit_power {
            Some(q) => unit(&at("circuit_power"), q.watts())?,
            None => 0.0,
        };
        check(circuit_power >= 0.0 && circuit_power.is_finite(), at("circuit_power"), "must be non-negative")?;
        let max_power = match &s.max_power {
            Some(q) => unit(&at("max_power"), q.watts())?,
            None => radio.tx_power,
        };
        check(max_power > 0.0 && max_power.is_finite(), at("max_power"), "must be positive")?;
        if let Some(a) = s.power_price {
            check(a > 0.0 && a.is_finite(), at("power_price"), "must be positive")?;
        }
        check(s.fixed_cost >= 0.0 && s.fixed_cost.is_finite(), at("fixed_cost"), "must be non-negative")?;
        let epsilon = s.epsilon.unwrap_or(DEFAULT_SELLER_EPSILON);
        check_epsilon(epsilon, at("epsilon"))?;
        sellers.push(SellerConfig {
            id: i + 1,
            intensity: s.intensity,
            price: s.price,
            threshold,
            circuit_power,
            max_power,
            power_price: s.power_price,
            fixed_cost: s.fixed_cost,
            epsilon,
        });
    }

    let sim = raw.simulation.unwrap_or(RawSimulation {
        disk_factor: None,
        trials: None,
    });
    let simulation = SimulationConfig {
        disk_factor: sim.disk_factor.unwrap_or(DEFAULT_MARGIN_FACTOR),
        trials: sim.trials.unwrap_or(DEFAULT_TRIALS),
    };
    check(
        simulation.disk_factor >= 1.0 && simulation.disk_factor.is_finite(),
        "simulation.disk_factor",
        "must be at least 1",
    )?;
    check(simulation.trials >= 1, "simulation.trials", "must be at least 1")?;

    let experiment = normalize_experiment(raw.experiment, &buyer, &sellers, raw.price_curve.as_ref())?;

    Ok(ExperimentConfig {
        name: raw.name.unwrap_or_else(|| default_name.to_string()),
        radio,
        assumption: raw.assumption,
        buyer,
        sellers,
        price_curve: raw.price_curve,
        experiment,
        simulation,
        seed: raw.seed,
        output: raw.output,
    })
}

fn check_counts(counts: &[usize], sellers: usize, field: &str) -> Result<()> {
    check(!counts.is_empty(), field, "list is empty")?;
    for (i, &k) in counts.iter().enumerate() {
        check(
            k >= 1 && k <= sellers,
            format!("{field}[{i}]"),
            format!("seller count must lie in 1..={sellers}, got {k}"),
        )?;
    }
    Ok(())
}

fn require_prices(sellers: &[SellerConfig], curve: Option<&PriceCurveConfig>) -> Result<()> {
    for (i, s) in sellers.iter().enumerate() {
        let field = format!("sellers[{i}].price");
        match (s.price, curve) {
            (Some(_), _) => {}
            (None, Some(c)) => {
                let q = c.theta - c.eta * s.intensity;
                check(q > 0.0, field, format!("the price curve gives {q} at this intensity"))?;
            }
            (None, None) => return Err(CliError::invalid(field, "missing; give a price or a price_curve")),
        }
    }
    Ok(())
}

fn require_market(sellers: &[SellerConfig], curve: Option<&PriceCurveConfig>) -> Result<()> {
    check(curve.is_some(), "price_curve", "required by market experiments")?;
    for (i, s) in sellers.iter().enumerate() {
        check(
            s.power_price.is_some(),
            format!("sellers[{i}].power_price"),
            "required by market experiments",
        )?;
    }
    Ok(())
}

fn normalize_experiment(
    raw: RawExperiment,
    buyer: &BuyerConfig,
    sellers: &[SellerConfig],
    curve: Option<&PriceCurveConfig>,
) -> Result<Experiment> {
    Ok(match raw {
        RawExperiment::CoverageSweep { buyer_intensity, epsilon } => {
            let l0 = expand(buyer_intensity, "experiment.buyer_intensity")?;
            for (i, &v) in l0.iter().enumerate() {
                check_intensity(v, format!("experiment.buyer_intensity[{i}]"))?;
            }
            for (i, &e) in epsilon.iter().enumerate() {
                check_epsilon(e, format!("experiment.epsilon[{i}]"))?;
            }
            require_prices(sellers, curve)?;
            Experiment::CoverageSweep {
                buyer_intensity: l0,
                epsilon,
            }
        }
        RawExperiment::PowerSweep {
            tx_power_dbm,
            buyer_intensity,
        } => {
            let p = expand(tx_power_dbm, "experiment.tx_power_dbm")?;
            check(!buyer_intensity.is_empty(), "experiment.buyer_intensity", "list is empty")?;
            for (i, &v) in buyer_intensity.iter().enumerate() {
                check_intensity(v, format!("experiment.buyer_intensity[{i}]"))?;
            }
            Experiment::PowerSweep {
                tx_power_dbm: p,
                buyer_intensity,
            }
        }
        RawExperiment::EpsilonSweep { epsilon, seller_counts } => {
            let eps = expand(epsilon, "experiment.epsilon")?;
            for (i, &e) in eps.iter().enumerate() {
                check_epsilon(e, format!("experiment.epsilon[{i}]"))?;
            }
            check_counts(&seller_counts, sellers.len(), "experiment.seller_counts")?;
            require_prices(sellers, curve)?;
            Experiment::EpsilonSweep {
                epsilon: eps,
                seller_counts,
            }
        }
        RawExperiment::ArealPower { seller, intensity } => {
            check(
                seller < sellers.len(),
                "experiment.seller",
                format!("index {seller} but {} sellers are configured", sellers.len()),
            )?;
            let l = expand(intensity, "experiment.intensity")?;
            for (i, &v) in l.iter().enumerate() {
                check_intensity(v, format!("experiment.intensity[{i}]"))?;
            }
            Experiment::ArealPower { seller, intensity: l }
        }
        RawExperiment::MarketEquilibrium { intensities, eta } => {
            require_market(sellers, curve)?;
            check(!intensities.is_empty(), "experiment.intensities", "list is empty")?;
            for (i, case) in intensities.iter().enumerate() {
                check(
                    case.len() == sellers.len(),
                    format!("experiment.intensities[{i}]"),
                    format!("expected {} seller intensities, got {}", sellers.len(), case.len()),
                )?;
                for (j, &v) in case.iter().enumerate() {
                    check(
                        v > 0.0 && v.is_finite(),
                        format!("experiment.intensities[{i}][{j}]"),
                        "must be positive",
                    )?;
                }
            }
            let eta = eta.unwrap_or_else(|| vec![curve.expect("checked").eta]);
            check(!eta.is_empty(), "experiment.eta", "list is empty")?;
            for (i, &e) in eta.iter().enumerate() {
                check(e > 0.0 && e.is_finite(), format!("experiment.eta[{i}]"), "must be positive")?;
            }
            Experiment::MarketEquilibrium { intensities, eta }
        }
        RawExperiment::FullClearing {
            buyer_intensity,
            seller_counts,
        } => {
            require_market(sellers, curve)?;
            check(buyer.epsilon.is_some(), "buyer.epsilon", "required by full-clearing")?;
            let l0 = expand(buyer_intensity, "experiment.buyer_intensity")?;
            for (i, &v) in l0.iter().enumerate() {
                check_intensity(v, format!("experiment.buyer_intensity[{i}]"))?;
            }
            check_counts(&seller_counts, sellers.len(), "experiment.seller_counts")?;
            Experiment::FullClearing {
                buyer_intensity: l0,
                seller_counts,
            }
        }
        RawExperiment::McValidate { cases } => {
            check(!cases.is_empty(), "experiment.cases", "list is empty")?;
            for (i, c) in cases.iter().enumerate() {
                check_intensity(c.buyer_intensity, format!("experiment.cases[{i}].buyer_intensity"))?;
                for (j, &v) in c.seller_intensities.iter().enumerate() {
                    check(
                        v > 0.0 && v.is_finite(),
                        format!("experiment.cases[{i}].seller_intensities[{j}]"),
                        "must be positive",
                    )?;
                }
                let total = c.buyer_intensity + c.seller_intensities.iter().sum::<f64>();
                check(
                    total > 0.0,
                    format!("experiment.cases[{i}]"),
                    "needs at least one base station on average",
                )?;
            }
            Experiment::McValidate { cases }
        }
    })
}

impl ExperimentConfig {
    /// Seller offers for the first `k` sellers, priced explicitly or from
    /// the curve at each seller's intensity.
    pub fn offers(&self, k: usize) -> Vec<SellerOffer> {
        self.sellers[..k]
            .iter()
            .map(|s| SellerOffer {
                id: s.id,
                intensity: per_m2(s.intensity),
                price: s.price.unwrap_or_else(|| {
                    let c = self.price_curve.expect("validated");
                    c.theta - c.eta * s.intensity
                }),
            })
            .collect()
    }

    pub fn seller_cost(&self, s: &SellerConfig) -> Result<(PowerCostParams, QosTarget)> {
        let what = || format!("sellers[{}]", s.id - 1);
        let params = PowerCostParams::new(
            s.max_power,
            s.circuit_power,
            s.power_price.unwrap_or(1.0),
            s.fixed_cost,
            s.threshold,
        )
        .context(what)?;
        let qos = QosTarget::new(s.epsilon).context(what)?;
        Ok((params, qos))
    }

    /// Market seller `s` deploying `intensity` per disk.
    pub fn market_seller(&self, s: &SellerConfig, intensity: f64) -> Result<Seller> {
        let (params, qos) = self.seller_cost(s)?;
        Seller::new(s.id, per_m2(intensity), &params, &self.radio, &qos).context(|| format!("sellers[{}]", s.id - 1))
    }
}
