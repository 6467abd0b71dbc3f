//! The buyer's purchase problem: which sellers to buy from, and how much.
//!
//! With `e_i = lambda_i x_i` and `x_0 = 1`, the QoS constraint (C1) reads
//!
//! ```text
//! sum_i (1 - e_i (beta-1)(1-eps) / (lambda eps)) e_i >= theta (1-eps) / eps
//! ```
//!
//! The Lagrange conditions give, for a fixed seller set,
//!
//! ```text
//! mu*  = sum_k (q_k/l_k)(eps/l_k - 1) / sum_k (q_k/l_k)^2
//! x_k* = lambda (mu q_k + l_k) / (2 l_k^2 (beta-1)(1-eps))
//! ```
//!
//! and sellers are added greedily in order of unit price `q_k / l_k`.
//!
//! Those two expressions are evaluated with `lambda = lambda_0 + sum l_k`
//! over the selected sellers. The constraint check and the reported
//! coverage use the purchased intensity by default (see
//! [`LambdaConvention`]), which makes (C1) equivalent to
//! `coverage_approx >= 1 - eps` under fractional activity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coverage::{beta, coverage_approx, noise_intensity};
use crate::error::{Error, Result};
use crate::numeric::roots::brent;
use crate::scenario::{Assumption, OperatorProfile, RadioParams, SharedSeller, SharingScenario};
use crate::tradeoff::QosTarget;

/// Relative slack below which (C1) still counts as satisfied, so that a
/// root-solved equality passes.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellerOffer {
    pub id: usize,
    /// Intensity available for purchase, per m².
    pub intensity: f64,
    /// Price per unit of purchased fraction.
    pub price: f64,
}

impl SellerOffer {
    pub fn unit_price(&self) -> f64 {
        self.price / self.intensity
    }
}

/// Which total intensity `lambda` enters (C1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaConvention {
    /// `lambda_0 + sum_k l_k x_k`.
    #[default]
    Purchased,
    /// `lambda_0 + sum_{k in N} l_k`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurchaseProblem {
    buyer_intensity: f64,
    sellers: Vec<SellerOffer>,
    radio: RadioParams,
    qos: QosTarget,
    convention: LambdaConvention,
    beta: f64,
    theta: f64,
}

impl PurchaseProblem {
    pub fn new(buyer_intensity: f64, sellers: Vec<SellerOffer>, radio: RadioParams, qos: QosTarget) -> Result<Self> {
        if !(buyer_intensity >= 0.0 && buyer_intensity.is_finite()) {
            return Err(Error::param(
                "buyer_intensity",
                format!("must be non-negative, got {buyer_intensity}"),
            ));
        }
        let mut ids = BTreeSet::new();
        for s in &sellers {
            if !ids.insert(s.id) {
                return Err(Error::param("sellers", format!("duplicate seller id {}", s.id)));
            }
            if !(s.intensity > 0.0 && s.intensity.is_finite()) {
                return Err(Error::param("intensity", format!("seller {}: must be positive", s.id)));
            }
            if !(s.price > 0.0 && s.price.is_finite()) {
                return Err(Error::param("price", format!("seller {}: must be positive", s.id)));
            }
        }
        radio.validate()?;
        let beta = beta(&radio)?;
        let theta = noise_intensity(&radio);
        Ok(PurchaseProblem {
            buyer_intensity,
            sellers,
            radio,
            qos,
            convention: LambdaConvention::default(),
            beta,
            theta,
        })
    }

    pub fn with_convention(mut self, convention: LambdaConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn buyer_intensity(&self) -> f64 {
        self.buyer_intensity
    }

    pub fn sellers(&self) -> &[SellerOffer] {
        &self.sellers
    }

    pub fn radio(&self) -> &RadioParams {
        &self.radio
    }

    pub fn qos(&self) -> &QosTarget {
        &self.qos
    }

    pub fn convention(&self) -> LambdaConvention {
        self.convention
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Noise-equivalent intensity `theta`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn offer(&self, id: usize) -> Result<&SellerOffer> {
        self.sellers
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::param("selected", format!("unknown seller id {id}")))
    }

    /// Fractional-activity scenario with the given purchased fractions.
    pub fn scenario(&self, fractions: &BTreeMap<usize, f64>) -> Result<SharingScenario> {
        let buyer = OperatorProfile::new(usize::MAX, self.buyer_intensity)?;
        let sellers = fractions
            .iter()
            .map(|(&id, &fraction)| {
                let offer = self.offer(id)?;
                Ok(SharedSeller {
                    operator: OperatorProfile::new(id, offer.intensity)?,
                    fraction,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SharingScenario::new(buyer, sellers, Assumption::FractionalActivity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Futility {
    /// No purchase can reach the target under full interference.
    pub futile: bool,
    /// Coverage ceiling `1 / beta`.
    pub bound: f64,
    /// Smallest total intensity meeting the target,
    /// `theta (1-eps) / (1 - beta (1-eps))`, when it exists.
    pub min_intensity: Option<f64>,
}

/// Whether buying is pointless when every shared BS interferes.
pub fn check_21_futility(radio: &RadioParams, qos: &QosTarget) -> Result<Futility> {
    radio.validate()?;
    let beta = beta(radio)?;
    let target = qos.coverage();
    let denom = 1.0 - beta * target;
    Ok(Futility {
        futile: target > 1.0 / beta,
        bound: 1.0 / beta,
        min_intensity: (denom > 0.0).then(|| noise_intensity(radio) * target / denom),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `lhs - rhs`.
    pub slack: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluates (C1) for candidate fractions. The keys of `fractions` form
/// the seller set; sellers absent from it contribute nothing.
pub fn feasibility_22(problem: &PurchaseProblem, fractions: &BTreeMap<usize, f64>) -> Result<Feasibility> {
    let eps = problem.qos.epsilon;
    let mut purchased = Vec::with_capacity(fractions.len() + 1);
    let mut full = problem.buyer_intensity;
    purchased.push(problem.buyer_intensity);
    for (&id, &x) in fractions {
        let offer = problem.offer(id)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::param("fraction", format!("seller {id}: {x} outside [0, 1]")));
        }
        purchased.push(offer.intensity * x);
        full += offer.intensity;
    }
    let lambda = match problem.convention {
        LambdaConvention::Purchased => purchased.iter().sum(),
        LambdaConvention::Full => full,
    };
    let rhs = problem.theta * (1.0 - eps) / eps;
    let lhs = if lambda > 0.0 {
        let k = (problem.beta - 1.0) * (1.0 - eps) / (lambda * eps);
        purchased.iter().map(|e| (1.0 - k * e) * e).sum()
    } else {
        0.0
    };
    let slack = lhs - rhs;
    Ok(Feasibility {
        feasible: slack >= -FEASIBILITY_TOLERANCE * rhs.max(f64::MIN_POSITIVE),
        slack,
        lhs,
        rhs,
    })
}

/// How [`solve_fractions`] arrived at its fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FractionMethod {
    /// Closed-form multiplier; (C1) holds with equality after clamping.
    ClosedForm,
    /// Closed-form multiplier kept although (C1) is not tight after
    /// clamping, and no multiplier in `(0, mu_max]` makes it tight.
    ClosedFormClamped,
    /// Multiplier found by root-solving (C1) with equality.
    RootSolved,
    /// (C1) already holds in the limit `mu -> 0+`, the cheapest point of
    /// the stationarity curve.
    MultiplierLimit,
    /// The closed-form multiplier is not positive and no root exists;
    /// every selected seller is bought in full.
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSolution {
    pub fractions: BTreeMap<usize, f64>,
    /// Closed-form multiplier, whatever its sign.
    pub mu_star: f64,
    /// Multiplier the fractions were computed from.
    pub mu: f64,
    pub method: FractionMethod,
    pub feasibility: Feasibility,
}

struct FractionMap<'a> {
    offers: Vec<&'a SellerOffer>,
    lambda_full: f64,
    denom: f64,
}

impl FractionMap<'_> {
    fn raw(&self, offer: &SellerOffer, mu: f64) -> f64 {
        self.lambda_full * (mu * offer.price + offer.intensity) / (offer.intensity * offer.intensity * self.denom)
    }

    fn clamped(&self, mu: f64) -> BTreeMap<usize, f64> {
        self.offers.iter().map(|o| (o.id, self.raw(o, mu).clamp(0.0, 1.0))).collect()
    }

    /// Smallest multiplier at which every fraction has reached one.
    fn saturating_mu(&self) -> f64 {
        self.offers
            .iter()
            .map(|o| (o.intensity * o.intensity * self.denom / self.lambda_full - o.intensity) / o.price)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Closed-form multiplier over the selected sellers.
pub fn closed_form_mu(offers: &[&SellerOffer], epsilon: f64) -> f64 {
    let (num, den) = offers.iter().fold((0.0, 0.0), |(num, den), o| {
        let r = o.unit_price();
        (num + r * (epsilon / o.intensity - 1.0), den + r * r)
    });
    num / den
}

/// Fractions for a fixed, non-empty seller set.
pub fn solve_fractions(problem: &PurchaseProblem, selected: &[usize]) -> Result<FractionSolution> {
    if selected.is_empty() {
        return Err(Error::param("selected", "seller set must be non-empty"));
    }
    let eps = problem.qos.epsilon;
    let denom = 2.0 * (problem.beta - 1.0) * (1.0 - eps);
    if !(denom > 0.0) {
        return Err(Error::Degenerate("(beta - 1)(1 - eps) vanishes".into()));
    }
    let offers = selected.iter().map(|&id| problem.offer(id)).collect::<Result<Vec<_>>>()?;
    if offers.len() != selected.iter().collect::<BTreeSet<_>>().len() {
        return Err(Error::param("selected", "seller ids must be distinct"));
    }
    let map = FractionMap {
        lambda_full: problem.buyer_intensity + offers.iter().map(|o| o.intensity).sum::<f64>(),
        offers,
        denom,
    };
    let mu_star = closed_form_mu(&map.offers, eps);

    let rhs_scale = (problem.theta * (1.0 - eps) / eps).max(f64::MIN_POSITIVE);
    let slack_at = |mu: f64| -> Result<f64> { Ok(feasibility_22(problem, &map.clamped(mu))?.slack) };

    if mu_star > 0.0 {
        let fractions = map.clamped(mu_star);
        let feasibility = feasibility_22(problem, &fractions)?;
        if feasibility.slack.abs() <= FEASIBILITY_TOLERANCE * rhs_scale {
            return Ok(FractionSolution {
                fractions,
                mu_star,
                mu: mu_star,
                method: FractionMethod::ClosedForm,
                feasibility,
            });
        }
    }

    // Cost grows with mu, so look for the smallest feasible mu in (0, mu_max].
    let mu_max = map.saturating_mu();
    if mu_max > 0.0 {
        if slack_at(0.0)? >= 0.0 {
            let fractions = map.clamped(0.0);
            let feasibility = feasibility_22(problem, &fractions)?;
            return Ok(FractionSolution {
                fractions,
                mu_star,
                mu: 0.0,
                method: FractionMethod::MultiplierLimit,
                feasibility,
            });
        }
        // (C1) need not be monotone in mu, so scan for the first sign change.
        let grid: Vec<f64> = (0..=SCAN_POINTS).map(|i| mu_max * i as f64 / SCAN_POINTS as f64).collect();
        let mut prev = grid[0];
        for &m in &grid[1..] {
            if slack_at(m)? >= 0.0 {
                let root = brent(|t| slack_at(t).unwrap_or(f64::NAN), prev, m, 1e-15 * mu_max, 500)?;
                // land on the feasible side of the root
                let mu = if slack_at(root)? < 0.0 { bump_feasible(root, m, &slack_at)? } else { root };
                let fractions = map.clamped(mu);
                let feasibility = feasibility_22(problem, &fractions)?;
                return Ok(FractionSolution {
                    fractions,
                    mu_star,
                    mu,
                    method: FractionMethod::RootSolved,
                    feasibility,
                });
            }
            prev = m;
        }
    }

    let (mu, method) = if mu_star > 0.0 {
        (mu_star, FractionMethod::ClosedFormClamped)
    } else {
        (mu_max.max(0.0), FractionMethod::Insufficient)
    };
    let fractions = if method == FractionMethod::Insufficient {
        map.offers.iter().map(|o| (o.id, 1.0)).collect()
    } else {
        map.clamped(mu)
    };
    let feasibility = feasibility_22(problem, &fractions)?;
    Ok(FractionSolution {
        fractions,
        mu_star,
        mu,
        method,
        feasibility,
    })
}

const SCAN_POINTS: usize = 64;

fn bump_feasible(mu: f64, hi: f64, slack_at: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut step = 1e-15 * hi;
    let mut m = mu;
    for _ in 0..60 {
        m = (mu + step).min(hi);
        if slack_at(m)? >= 0.0 {
            return Ok(m);
        }
        step *= 2.0;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyerSolution {
    /// Seller ids in the order they were added.
    pub selected: Vec<usize>,
    pub fractions: BTreeMap<usize, f64>,
    /// Closed-form multiplier of the final set, if any seller was selected.
    pub mu_star: Option<f64>,
    pub method: Option<FractionMethod>,
    pub total_cost: f64,
    /// `sum_k l_k x_k`.
    pub purchased_intensity: f64,
    /// Closed-form coverage under fractional activity.
    pub achieved_coverage: f64,
    pub feasible: bool,
    pub slack: f64,
    /// Number of fraction evaluations, at most `K (K + 1) / 2`.
    pub fraction_evaluations: usize,
}

/// Sellers sorted by unit price, ties broken by id.
pub fn purchase_order(sellers: &[SellerOffer]) -> Vec<usize> {
    let mut order: Vec<&SellerOffer> = sellers.iter().collect();
    order.sort_by(|a, b| a.unit_price().total_cmp(&b.unit_price()).then(a.id.cmp(&b.id)));
    order.into_iter().map(|s| s.id).collect()
}

/// Greedy seller selection: grow the set in unit-price order until (C1)
/// holds. If every seller is exhausted, the last attempt is returned with
/// `feasible = false`.
pub fn greedy_select(problem: &PurchaseProblem) -> Result<BuyerSolution> {
    let none = BTreeMap::new();
    let alone = feasibility_22(problem, &none)?;
    if alone.feasible || problem.sellers.is_empty() {
        return summarize(problem, Vec::new(), None, alone, 0);
    }

    let order = purchase_order(&problem.sellers);
    let mut evaluations = 0;
    let mut last = None;
    for i in 1..=order.len() {
        let prefix = &order[..i];
        let sol = solve_fractions(problem, prefix)?;
        evaluations += i;
        let done = sol.feasibility.feasible;
        last = Some((prefix.to_vec(), sol));
        if done {
            break;
        }
    }
    let (selected, sol) = last.expect("at least one seller");
    let feasibility = sol.feasibility;
    summarize(problem, selected, Some(sol), feasibility, evaluations)
}

fn summarize(
    problem: &PurchaseProblem,
    selected: Vec<usize>,
    sol: Option<FractionSolution>,
    feasibility: Feasibility,
    evaluations: usize,
) -> Result<BuyerSolution> {
    let (fractions, mu_star, method) = match sol {
        Some(s) => (s.fractions, Some(s.mu_star), Some(s.method)),
        None => (BTreeMap::new(), None, None),
    };
    let mut total_cost = 0.0;
    let mut purchased = 0.0;
    for (&id, &x) in &fractions {
        let offer = problem.offer(id)?;
        total_cost += offer.price * x;
        purchased += offer.intensity * x;
    }
    let achieved_coverage = coverage_approx(&problem.scenario(&fractions)?, &problem.radio)?;
    Ok(BuyerSolution {
        selected,
        fractions,
        mu_star,
        method,
        total_cost,
        purchased_intensity: purchased,
        achieved_coverage,
        feasible: feasibility.feasible,
        slack: feasibility.slack,
        fraction_evaluations: evaluations,
    })
}
