//! Poisson point process Monte Carlo for the typical user's downlink SINR.
//!
//! The typical user sits at the origin of a disk. Each operator's base
//! stations form an independent homogeneous PPP; the user associates with
//! the nearest association-eligible station and collects interference from
//! every other interference-eligible one. Under fractional activity a
//! non-serving station of operator `k` interferes with probability `w_k`,
//! drawn independently per trial.
//!
//! Every trial draws from its own xoshiro256++ generator seeded from
//! `(seed, index)`, so results are identical whether trials run
//! sequentially or in parallel.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Exp1, Poisson};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Assumption, RadioParams, SharingScenario};
use crate::units::REFERENCE_DISK_RADIUS_M;

/// Default ratio between the simulated disk and the nominal analysis
/// region, so interference from beyond the nominal radius is captured.
pub const DEFAULT_MARGIN_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRegion {
    radius: f64,
}

impl SimRegion {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        Ok(SimRegion { radius })
    }

    /// Disk of `factor * nominal_radius`.
    pub fn with_margin(nominal_radius: f64, factor: f64) -> Result<Self> {
        SimRegion::new(nominal_radius * factor)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

impl Default for SimRegion {
    fn default() -> Self {
        SimRegion {
            radius: REFERENCE_DISK_RADIUS_M * DEFAULT_MARGIN_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    pub points: Vec<[f64; 2]>,
    pub intensity: f64,
}

impl PointPattern {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn trial_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    // seed_from_u64 runs the key through SplitMix64 again
    let key = SplitMix64::seed_from_u64(seed).next_u64();
    Xoshiro256PlusPlus::seed_from_u64(key ^ index)
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    draw as usize
}

fn check_intensity(intensity: f64) -> Result<()> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::param("intensity", format!("must be non-negative, got {intensity}")));
    }
    Ok(())
}

/// Samples a homogeneous PPP of the given intensity (per m²) on `region`.
pub fn sample_ppp(intensity: f64, region: &SimRegion, seed: u64) -> Result<PointPattern> {
    check_intensity(intensity)?;
    let mut rng = trial_rng(seed, 0);
    Ok(sample_ppp_with(intensity, region, &mut rng))
}

fn sample_ppp_with<R: Rng + ?Sized>(intensity: f64, region: &SimRegion, rng: &mut R) -> PointPattern {
    let n = poisson_count(intensity * region.area(), rng);
    let points = (0..n)
        .map(|_| {
            let r = region.radius * rng.random::<f64>().sqrt();
            let (sin, cos) = (2.0 * PI * rng.random::<f64>()).sin_cos();
            [r * cos, r * sin]
        })
        .collect();
    PointPattern { points, intensity }
}

/// A base station as seen from the typical user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    /// Index into the scenario's operators, buyer first.
    pub operator: usize,
    /// Squared distance to the origin, m².
    pub dist2: f64,
    /// Fading power gain of the link.
    pub gain: f64,
    /// Whether the station transmits on the buyer's band when not serving it.
    pub interferes: bool,
}

/// One sampled deployment of every association-eligible station.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Realization {
    pub stations: Vec<Station>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub serving_distance: f64,
    pub signal: f64,
    pub interference: f64,
    pub sinr: f64,
    /// Number of stations contributing to `interference`.
    pub interferers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrialOutcome {
    Served(SinrSample),
    /// Empty association set; counted as an outage.
    NoServer,
}

impl TrialOutcome {
    pub fn covered(&self, threshold: f64) -> bool {
        match self {
            TrialOutcome::Served(s) => s.sinr > threshold,
            TrialOutcome::NoServer => false,
        }
    }

    pub fn sample(&self) -> Option<&SinrSample> {
        match self {
            TrialOutcome::Served(s) => Some(s),
            TrialOutcome::NoServer => None,
        }
    }
}

impl Realization {
    /// SINR at the origin: serving station is the nearest one, interference
    /// sums the remaining stations flagged as interfering.
    pub fn sinr(&self, radio: &RadioParams) -> TrialOutcome {
        let Some((serving_idx, serving)) = self
            .stations
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dist2.total_cmp(&b.1.dist2))
        else {
            return TrialOutcome::NoServer;
        };
        let loss = PathLoss::new(radio.path_loss_exponent);
        let p = radio.tx_power;

        let mut interference = 0.0;
        let mut interferers = 0;
        for (i, s) in self.stations.iter().enumerate() {
            if i != serving_idx && s.interferes {
                interference += s.gain * loss.eval(s.dist2);
                interferers += 1;
            }
        }
        interference *= p;
        let signal = serving.gain * p * loss.eval(serving.dist2);
        TrialOutcome::Served(SinrSample {
            serving_distance: serving.dist2.sqrt(),
            signal,
            interference,
            sinr: signal / (interference + radio.noise_power),
            interferers,
        })
    }
}

/// `d^-alpha` from the squared distance, avoiding `powf` for the common
/// integer and half-integer exponents.
#[derive(Debug, Clone, Copy)]
enum PathLoss {
    Three,
    Four,
    Five,
    General(f64),
}

impl PathLoss {
    fn new(alpha: f64) -> Self {
        match alpha {
            a if a == 3.0 => PathLoss::Three,
            a if a == 4.0 => PathLoss::Four,
            a if a == 5.0 => PathLoss::Five,
            a => PathLoss::General(-a / 2.0),
        }
    }

    #[inline]
    fn eval(self, d2: f64) -> f64 {
        match self {
            PathLoss::Three => 1.0 / (d2 * d2.sqrt()),
            PathLoss::Four => 1.0 / (d2 * d2),
            PathLoss::Five => 1.0 / (d2 * d2 * d2.sqrt()),
            PathLoss::General(e) => d2.powf(e),
        }
    }
}

/// Per-operator sampling plan derived once from a scenario.
#[derive(Debug, Clone)]
struct Plan {
    /// (mean count in the region, interference retention probability)
    operators: Vec<(f64, f64)>,
    radius2: f64,
}

impl Plan {
    fn new(scenario: &SharingScenario, region: &SimRegion) -> Result<Self> {
        let eff = scenario.effective_intensities();
        let total: f64 = eff.iter().sum();
        if total <= 0.0 {
            return Err(Error::param(
                "scenario",
                "association intensity must be positive for simulation",
            ));
        }
        let weights = scenario.activity_weights();
        let operators = eff
            .iter()
            .zip(&weights)
            .map(|(&l, &w)| {
                let retain = match scenario.assumption() {
                    Assumption::AllBsServe => 1.0,
                    Assumption::FractionalActivity => w,
                };
                (l * region.area(), retain)
            })
            .collect();
        Ok(Plan {
            operators,
            radius2: region.radius * region.radius,
        })
    }

    /// Same draws as [`Plan::sample_into`], evaluated on the fly without
    /// storing the stations.
    fn covered<R: Rng + ?Sized>(&self, rng: &mut R, loss: PathLoss, radio: &RadioParams) -> bool {
        // (dist2, gain, interferes) of the nearest station so far
        let mut nearest: Option<(f64, f64, bool)> = None;
        let mut interference = 0.0;
        for &(mean, retain) in &self.operators {
            let n = poisson_count(mean, rng);
            for _ in 0..n {
                let dist2 = self.radius2 * rng.random::<f64>();
                let gain: f64 = Exp1.sample(rng);
                let interferes = retain >= 1.0 || rng.random::<f64>() < retain;
                let displaced = match nearest {
                    Some(best) if best.0 <= dist2 => (dist2, gain, interferes),
                    _ => {
                        let old = nearest.replace((dist2, gain, interferes));
                        match old {
                            Some(old) => old,
                            None => continue,
                        }
                    }
                };
                if displaced.2 {
                    interference += displaced.1 * loss.eval(displaced.0);
                }
            }
        }
        let Some((d2, g, _)) = nearest else {
            return false;
        };
        let p = radio.tx_power;
        p * g * loss.eval(d2) / (p * interference + radio.noise_power) > radio.threshold
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<Station>) {
        out.clear();
        for (operator, &(mean, retain)) in self.operators.iter().enumerate() {
            let n = poisson_count(mean, rng);
            for _ in 0..n {
                // only the distance matters, and r^2 is uniform on [0, R^2]
                let dist2 = self.radius2 * rng.random::<f64>();
                let gain: f64 = Exp1.sample(rng);
                let interferes = retain >= 1.0 || rng.random::<f64>() < retain;
                out.push(Station {
                    operator,
                    dist2,
                    gain,
                    interferes,
                });
            }
        }
    }
}

/// Samples the association-eligible stations of one trial.
pub fn sample_realization(scenario: &SharingScenario, region: &SimRegion, seed: u64, index: u64) -> Result<Realization> {
    let plan = Plan::new(scenario, region)?;
    let mut rng = trial_rng(seed, index);
    let mut stations = Vec::new();
    plan.sample_into(&mut rng, &mut stations);
    Ok(Realization { stations })
}

/// Runs trial 0 of the stream keyed by `seed`.
pub fn simulate_trial(
    scenario: &SharingScenario,
    radio: &RadioParams,
    region: &SimRegion,
    seed: u64,
) -> Result<TrialOutcome> {
    radio.validate()?;
    Ok(sample_realization(scenario, region, seed, 0)?.sinr(radio))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub p_hat: f64,
    /// 95% normal-approximation half-width, `1.96 sqrt(p (1-p) / n)`.
    pub ci_halfwidth: f64,
    pub trials: u64,
    pub covered: u64,
}

impl CoverageEstimate {
    fn from_counts(covered: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p_hat = covered as f64 / n;
        CoverageEstimate {
            p_hat,
            ci_halfwidth: 1.96 * (p_hat * (1.0 - p_hat) / n).sqrt(),
            trials,
            covered,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        (p - self.p_hat).abs() <= self.ci_halfwidth
    }
}

/// Fraction of `trials` independent trials whose SINR exceeds the threshold.
pub fn estimate_coverage(
    scenario: &SharingScenario,
    radio: &RadioParams,
    region: &SimRegion,
    trials: u64,
    seed: u64,
) -> Result<CoverageEstimate> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    radio.validate()?;
    let plan = Plan::new(scenario, region)?;
    let loss = PathLoss::new(radio.path_loss_exponent);
    let covered = (0..trials)
        .into_par_iter()
        .map(|i| u64::from(plan.covered(&mut trial_rng(seed, i), loss, radio)))
        .sum();
    Ok(CoverageEstimate::from_counts(covered, trials))
}
