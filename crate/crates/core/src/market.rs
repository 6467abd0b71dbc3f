//! Cournot competition between sellers and market clearing with the buyer.
//!
//! Seller `k` offers `y_k` in `[0, l_k]` at the common price
//! `Q(y) = theta - eta y`, pays `C_k = a_k S_k(y_k) + d_k`, and earns
//! `F_k = y_k Q(y) - C_k(y_k)`. Its stationary points are
//!
//! ```text
//! y_k = U_k/2 - y_-k/2                          linear cost branch
//! 2 y_k = V_k y_k^(-alpha/2) + W_k - y_-k       convex cost branch
//! U_k = (theta - a_k (p_max + p_c)) / eta
//! V_k = a_k (alpha/2 - 1) c_k / eta
//! W_k = (theta - a_k p_c) / eta
//! ```
//!
//! Marginal cost drops at the breakpoint `l_th`, so profit is not concave
//! across it; the best response compares every stationary point with the
//! boundary candidates `{0, l_th, l_k}`.

use serde::{Deserialize, Serialize};

use crate::buyer::{greedy_select, BuyerSolution, LambdaConvention, PurchaseProblem, SellerOffer};
use crate::error::{Error, Result};
use crate::numeric::roots::brent;
use crate::scenario::RadioParams;
use crate::tradeoff::{AreaPowerModel, PowerCostParams, QosTarget};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceCurve {
    pub theta: f64,
    pub eta: f64,
}

impl PriceCurve {
    pub fn new(theta: f64, eta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::param("theta", format!("must be positive, got {theta}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("must be positive, got {eta}")));
        }
        Ok(PriceCurve { theta, eta })
    }

    pub fn price(&self, y_total: f64) -> f64 {
        self.theta - self.eta * y_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seller {
    pub id: usize,
    /// Deployed intensity `l_k`, the most the seller can offer.
    pub intensity: f64,
    /// Price per unit areal power.
    pub a: f64,
    /// Fixed operating cost.
    pub d: f64,
    pub power: AreaPowerModel,
}

impl Seller {
    /// Seller whose areal power follows its own threshold and QoS target.
    pub fn new(id: usize, intensity: f64, params: &PowerCostParams, radio: &RadioParams, qos: &QosTarget) -> Result<Self> {
        let power = AreaPowerModel::new(params, radio, qos)?;
        Seller::from_model(id, intensity, params.a, params.d, power)
    }

    pub fn from_model(id: usize, intensity: f64, a: f64, d: f64, power: AreaPowerModel) -> Result<Self> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::param("intensity", format!("seller {id}: must be positive, got {intensity}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("seller {id}: must be positive, got {a}")));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::param("d", format!("seller {id}: must be non-negative, got {d}")));
        }
        Ok(Seller {
            id,
            intensity,
            a,
            d,
            power,
        })
    }

    pub fn threshold_intensity(&self) -> f64 {
        self.power.threshold_intensity()
    }

    fn constants(&self, curve: &PriceCurve) -> (f64, f64, f64) {
        let p = &self.power;
        let u = (curve.theta - self.a * (p.p_max + p.p_c)) / curve.eta;
        let v = self.a * (p.alpha / 2.0 - 1.0) * p.c / curve.eta;
        let w = (curve.theta - self.a * p.p_c) / curve.eta;
        (u, v, w)
    }
}

fn check_quantity(seller: &Seller, y_k: f64) -> Result<()> {
    // allow rounding at the capacity edge
    if !(y_k >= 0.0 && y_k <= seller.intensity * (1.0 + 1e-12)) {
        return Err(Error::param(
            "y_k",
            format!("seller {}: {y_k} outside [0, {}]", seller.id, seller.intensity),
        ));
    }
    Ok(())
}

/// `C_k(y_k) = a_k S_k(y_k) + d_k`.
pub fn cost(seller: &Seller, y_k: f64) -> Result<f64> {
    check_quantity(seller, y_k)?;
    Ok(raw_cost(seller, y_k))
}

fn raw_cost(seller: &Seller, y_k: f64) -> f64 {
    seller.a * seller.power.areal_power(y_k) + seller.d
}

/// `F_k = y_k Q(y) - C_k(y_k)`. Negative prices are used as they are.
pub fn profit(seller: &Seller, curve: &PriceCurve, y_k: f64, y_total: f64) -> Result<f64> {
    check_quantity(seller, y_k)?;
    if y_total < y_k * (1.0 - 1e-12) {
        return Err(Error::param("y_total", "must be at least y_k"));
    }
    Ok(raw_profit(seller, curve, y_k, y_total))
}

fn raw_profit(seller: &Seller, curve: &PriceCurve, y_k: f64, y_total: f64) -> f64 {
    y_k * curve.price(y_total) - raw_cost(seller, y_k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseKind {
    Zero,
    Linear,
    Breakpoint,
    Convex,
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub quantity: f64,
    pub kind: ResponseKind,
    pub profit: f64,
}

/// Profit-maximising quantity given the others' total `y_minus_k`.
pub fn best_response(seller: &Seller, curve: &PriceCurve, y_minus_k: f64) -> Result<BestResponse> {
    if !(y_minus_k >= 0.0 && y_minus_k.is_finite()) {
        return Err(Error::param("y_minus_k", format!("must be non-negative, got {y_minus_k}")));
    }
    let cap = seller.intensity;
    let lth = seller.threshold_intensity();
    let (u, v, w) = seller.constants(curve);
    let half = seller.power.alpha / 2.0;

    let mut candidates = vec![(0.0, ResponseKind::Zero)];
    let lin = (u - y_minus_k) / 2.0;
    if lin > 0.0 && lin <= lth.min(cap) {
        candidates.push((lin, ResponseKind::Linear));
    }
    if lth < cap {
        candidates.push((lth, ResponseKind::Breakpoint));
        let h = |y: f64| 2.0 * y - v * y.powf(-half) - w + y_minus_k;
        // h increases in y, so the convex branch has at most one root
        if h(lth) <= 0.0 && h(cap) >= 0.0 {
            let root = brent(h, lth, cap, 1e-14 * cap, 500)?;
            candidates.push((root, ResponseKind::Convex));
        }
    }
    candidates.push((cap, ResponseKind::Capacity));

    let mut best = BestResponse {
        quantity: 0.0,
        kind: ResponseKind::Zero,
        profit: f64::NEG_INFINITY,
    };
    for (y, kind) in candidates {
        let f = raw_profit(seller, curve, y, y + y_minus_k);
        if f > best.profit {
            best = BestResponse {
                quantity: y,
                kind,
                profit: f,
            };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    pub max_iter: usize,
    /// Fixed-point tolerance relative to the largest seller intensity.
    pub tol: f64,
    /// Initial relaxation factor in `(0, 1]`.
    pub damping: f64,
    /// Halve the damping whenever the iterates oscillate without contracting.
    pub adaptive_damping: bool,
    pub record_trace: bool,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            max_iter: 10_000,
            tol: 1e-10,
            damping: 1.0,
            adaptive_damping: true,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub ids: Vec<usize>,
    pub y_star: Vec<f64>,
    pub y_total: f64,
    pub q_star: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max_k |y_k - BR_k(y_-k)|` at the returned point.
    pub residual: f64,
    /// Damping in effect when the iteration stopped.
    pub damping: f64,
    /// Single seller: solved as a one-variable profit maximisation.
    pub monopoly: bool,
    /// Iterates, starting point first.
    pub trace: Vec<Vec<f64>>,
}

impl EquilibriumResult {
    /// `|y* - sum_k y_-k / (K - 1)|`, zero by construction for `K >= 2`.
    pub fn aggregate_gap(&self) -> Option<f64> {
        let k = self.y_star.len();
        if k < 2 {
            return None;
        }
        let sum_minus: f64 = self.y_star.iter().map(|y| self.y_total - y).sum();
        Some((self.y_total - sum_minus / (k - 1) as f64).abs())
    }
}

fn responses(sellers: &[Seller], curve: &PriceCurve, y: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = y.iter().sum();
    sellers
        .iter()
        .zip(y)
        .map(|(s, &yk)| Ok(best_response(s, curve, (total - yk).max(0.0))?.quantity))
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Synchronous best-response iteration from `y = 0`.
pub fn find_equilibrium(sellers: &[Seller], curve: &PriceCurve, opts: &EquilibriumOptions) -> Result<EquilibriumResult> {
    find_equilibrium_from(sellers, curve, &vec![0.0; sellers.len()], opts)
}

pub fn find_equilibrium_from(
    sellers: &[Seller],
    curve: &PriceCurve,
    start: &[f64],
    opts: &EquilibriumOptions,
) -> Result<EquilibriumResult> {
    if sellers.is_empty() {
        return Err(Error::param("sellers", "at least one seller is required"));
    }
    if start.len() != sellers.len() {
        return Err(Error::param("start", "one starting quantity per seller"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::param("damping", format!("must lie in (0, 1], got {}", opts.damping)));
    }
    for (s, &y) in sellers.iter().zip(start) {
        check_quantity(s, y)?;
    }
    let ids = sellers.iter().map(|s| s.id).collect();
    let scale = sellers.iter().map(|s| s.intensity).fold(0.0, f64::max);
    let tol = opts.tol * scale;

    if sellers.len() == 1 {
        let y = best_response(&sellers[0], curve, 0.0)?.quantity;
        let mut trace = vec![start.to_vec()];
        trace.push(vec![y]);
        return Ok(finish(ids, vec![y], curve, 1, true, 0.0, opts.damping, true, trace, opts));
    }

    let mut y = start.to_vec();
    let mut omega = opts.damping;
    let mut trace = vec![y.clone()];
    let mut prev_step: Option<(Vec<f64>, f64)> = None;

    for iter in 1..=opts.max_iter {
        let br = responses(sellers, curve, &y)?;
        let residual = max_abs_diff(&br, &y);
        if residual < tol {
            return Ok(finish(ids, y, curve, iter - 1, true, residual, omega, false, trace, opts));
        }
        let step: Vec<f64> = br.iter().zip(&y).map(|(b, v)| b - v).collect();
        if opts.adaptive_damping {
            if let Some((prev, prev_res)) = &prev_step {
                let dot: f64 = step.iter().zip(prev).map(|(a, b)| a * b).sum();
                if dot < 0.0 && residual > 0.9 * prev_res {
                    omega = (omega * 0.5).max(1e-6);
                }
            }
        }
        for (v, d) in y.iter_mut().zip(&step) {
            *v += omega * d;
        }
        for (v, s) in y.iter_mut().zip(sellers) {
            *v = v.clamp(0.0, s.intensity);
        }
        if opts.record_trace {
            trace.push(y.clone());
        }
        prev_step = Some((step, residual));
    }
    let residual = max_abs_diff(&responses(sellers, curve, &y)?, &y);
    let converged = residual < tol;
    Ok(finish(ids, y, curve, opts.max_iter, converged, residual, omega, false, trace, opts))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ids: Vec<usize>,
    y_star: Vec<f64>,
    curve: &PriceCurve,
    iterations: usize,
    converged: bool,
    residual: f64,
    damping: f64,
    monopoly: bool,
    trace: Vec<Vec<f64>>,
    opts: &EquilibriumOptions,
) -> EquilibriumResult {
    let y_total: f64 = y_star.iter().sum();
    EquilibriumResult {
        ids,
        q_star: curve.price(y_total),
        y_total,
        y_star,
        iterations,
        converged,
        residual,
        damping,
        monopoly,
        trace: if opts.record_trace { trace } else { Vec::new() },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellerStability {
    pub id: usize,
    /// Largest value of `Q'(y) - C_k''(y_k)` over the grid; must be negative.
    pub condition1: f64,
    /// Largest value of `Q'(y) - y_k Q''(y)` over the grid; must be negative.
    pub condition2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub sellers: Vec<SellerStability>,
}

/// Checks both sufficient stability conditions on a grid of
/// `grid_points` quantities in `[0, l_k]` for every seller.
pub fn check_stability(sellers: &[Seller], curve: &PriceCurve, grid_points: usize) -> StabilityReport {
    let n = grid_points.max(2);
    let dq = -curve.eta;
    // Q is linear
    let d2q = 0.0;
    let per_seller: Vec<SellerStability> = sellers
        .iter()
        .map(|s| {
            let mut c1 = f64::NEG_INFINITY;
            let mut c2 = f64::NEG_INFINITY;
            for i in 0..n {
                let y = s.intensity * i as f64 / (n - 1) as f64;
                c1 = c1.max(dq - s.a * s.power.curvature(y));
                c2 = c2.max(dq - y * d2q);
            }
            SellerStability {
                id: s.id,
                condition1: c1,
                condition2: c2,
            }
        })
        .collect();
    StabilityReport {
        stable: per_seller.iter().all(|s| s.condition1 < 0.0 && s.condition2 < 0.0),
        sellers: per_seller,
    }
}

/// The buyer's side of market clearing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuyerSpec {
    pub intensity: f64,
    pub radio: RadioParams,
    pub qos: QosTarget,
    pub convention: LambdaConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketClearing {
    pub equilibrium: EquilibriumResult,
    pub buyer: BuyerSolution,
}

/// Solves the sellers' game, then lets the buyer purchase from the
/// equilibrium offers, each priced at the clearing price.
pub fn clear_market(
    sellers: &[Seller],
    curve: &PriceCurve,
    buyer: &BuyerSpec,
    opts: &EquilibriumOptions,
) -> Result<MarketClearing> {
    let equilibrium = find_equilibrium(sellers, curve, opts)?;
    let offers: Vec<SellerOffer> = equilibrium
        .ids
        .iter()
        .zip(&equilibrium.y_star)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&id, &y)| SellerOffer {
            id,
            intensity: y,
            price: equilibrium.q_star,
        })
        .collect();

    let alone = PurchaseProblem::new(buyer.intensity, Vec::new(), buyer.radio, buyer.qos)?.with_convention(buyer.convention);
    let problem = if offers.is_empty() {
        alone
    } else if equilibrium.q_star <= 0.0 {
        let sol = greedy_select(&alone)?;
        if !sol.feasible {
            return Err(Error::Degenerate(format!(
                "clearing price {} is not positive but the buyer needs to purchase",
                equilibrium.q_star
            )));
        }
        alone
    } else {
        PurchaseProblem::new(buyer.intensity, offers, buyer.radio, buyer.qos)?.with_convention(buyer.convention)
    };
    let buyer = greedy_select(&problem)?;
    Ok(MarketClearing { equilibrium, buyer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{db_to_linear, per_disk_to_per_m2};
    use approx::assert_relative_eq;

    fn disk(n: f64) -> f64 {
        per_disk_to_per_m2(n, 500.0)
    }

    fn curve() -> PriceCurve {
        PriceCurve::new(500.0, 5.0 * std::f64::consts::PI * 500.0 * 500.0).unwrap()
    }

    // breakpoint far above capacity keeps the seller on the linear branch
    fn linear_seller(id: usize, count: f64, a: f64) -> Seller {
        let power = AreaPowerModel::from_parts(1e6, 4.0, 1.0, 0.5).unwrap();
        Seller::from_model(id, disk(count), a, 2.0, power).unwrap()
    }

    fn paper_seller(id: usize, count: f64, t_db: f64, p_c: f64, a: f64) -> Seller {
        let radio = RadioParams::new(100.0, 5.0, 1e-18, 0.01).unwrap();
        let params = PowerCostParams::new(0.01, p_c, a, 0.0, db_to_linear(t_db)).unwrap();
        Seller::new(id, disk(count), &params, &radio, &QosTarget::new(0.6).unwrap()).unwrap()
    }

    #[test]
    fn cost_and_profit_trivia() {
        let s = linear_seller(1, 100.0, 300.0);
        assert_eq!(cost(&s, 0.0).unwrap(), 2.0);
        let y = disk(10.0);
        assert_relative_eq!(cost(&s, y).unwrap(), 300.0 * y * 1.5 + 2.0, max_relative = 1e-14);
        assert_eq!(profit(&s, &curve(), 0.0, disk(3.0)).unwrap(), -2.0);
        let zero_price = curve().theta / curve().eta;
        assert_relative_eq!(
            profit(&s, &curve(), y, zero_price).unwrap(),
            -cost(&s, y).unwrap(),
            max_relative = 1e-12
        );
        assert!(cost(&s, -1.0).is_err());
        assert!(cost(&s, disk(200.0)).is_err());
    }

    #[test]
    fn linear_response_and_clipping() {
        let s = linear_seller(1, 100.0, 300.0);
        let (u, _, _) = s.constants(&curve());
        // U is 10 per disk here
        let br = best_response(&s, &curve(), disk(4.0)).unwrap();
        assert_eq!(br.kind, ResponseKind::Linear);
        assert_relative_eq!(br.quantity, (u - disk(4.0)) / 2.0, max_relative = 1e-12);
        let br = best_response(&s, &curve(), u * 1.5).unwrap();
        assert_eq!(br.quantity, 0.0);
        let small = linear_seller(2, 3.0, 300.0);
        assert_eq!(best_response(&small, &curve(), 0.0).unwrap().kind, ResponseKind::Capacity);
    }

    #[test]
    fn symmetric_duopoly() {
        let sellers = [linear_seller(1, 100.0, 300.0), linear_seller(2, 100.0, 300.0)];
        let (u, _, _) = sellers[0].constants(&curve());
        let eq = find_equilibrium(&sellers, &curve(), &EquilibriumOptions::default()).unwrap();
        assert!(eq.converged);
        for y in &eq.y_star {
            assert_relative_eq!(*y, u / 3.0, max_relative = 1e-8);
        }
        assert_eq!(eq.q_star, curve().theta - curve().eta * eq.y_total);
        assert!(eq.aggregate_gap().unwrap() <= 1e-15 * eq.y_total);
    }

    #[test]
    fn three_linear_sellers_need_damping() {
        let sellers: Vec<Seller> = (1..=3).map(|i| linear_seller(i, 100.0, 300.0)).collect();
        let (u, _, _) = sellers[0].constants(&curve());
        let eq = find_equilibrium(&sellers, &curve(), &EquilibriumOptions::default()).unwrap();
        assert!(eq.converged);
        assert!(eq.damping < 1.0);
        for y in &eq.y_star {
            assert_relative_eq!(*y, u / 4.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn convex_root_is_stationary() {
        // a circuit power near theta / a makes the unclipped response interior
        let s = paper_seller(1, 100.0, -15.0, 9.0, 50.0);
        let c = curve();
        let y_minus = disk(2.0);
        let br = best_response(&s, &c, y_minus).unwrap();
        assert_eq!(br.kind, ResponseKind::Convex);
        let (_, v, w) = s.constants(&c);
        let y = br.quantity;
        let resid = 2.0 * y - v * y.powf(-2.5) - w + y_minus;
        assert!(resid.abs() < 1e-8 * y, "residual {resid}");

        let h = 1e-4 * y;
        let f = |q: f64| raw_profit(&s, &c, q, q + y_minus);
        let grad = (f(y + h) - f(y - h)) / (2.0 * h);
        assert!(grad.abs() < 1e-8 * c.theta, "gradient {grad}");
        assert!(br.profit >= f(s.threshold_intensity()));
        assert!(br.profit >= f(s.intensity));
    }

    #[test]
    fn responses_decrease_in_rivals() {
        for s in [linear_seller(1, 100.0, 300.0), paper_seller(2, 100.0, 5.0, 9.0, 50.0)] {
            let mut last = f64::INFINITY;
            for i in 0..200 {
                let br = best_response(&s, &curve(), disk(i as f64)).unwrap().quantity;
                assert!(br <= last + 1e-18);
                last = br;
            }
        }
    }

    #[test]
    fn monopoly_is_flagged() {
        let s = [linear_seller(1, 100.0, 300.0)];
        let eq = find_equilibrium(&s, &curve(), &EquilibriumOptions::default()).unwrap();
        assert!(eq.monopoly && eq.converged);
        let (u, _, _) = s[0].constants(&curve());
        assert_relative_eq!(eq.y_star[0], u / 2.0, max_relative = 1e-12);
        assert!(find_equilibrium(&[], &curve(), &EquilibriumOptions::default()).is_err());
    }

    #[test]
    fn paper_duopoly_sells_everything() {
        let sellers = [paper_seller(1, 10.0, -15.0, 0.03, 50.0), paper_seller(2, 10.0, 5.0, 0.08, 90.0)];
        for s in &sellers {
            assert!(s.threshold_intensity() < s.intensity);
        }
        let eq = find_equilibrium(&sellers, &curve(), &EquilibriumOptions::default()).unwrap();
        assert!(eq.converged);
        assert_relative_eq!(eq.y_total, disk(20.0), max_relative = 1e-12);
    }

    #[test]
    fn stability_margins() {
        let sellers = [paper_seller(1, 10.0, -15.0, 0.03, 50.0), linear_seller(2, 10.0, 90.0)];
        let rep = check_stability(&sellers, &curve(), 101);
        assert!(rep.stable);
        // the grid includes y = 0 on the linear branch
        assert!(rep.sellers.iter().all(|s| s.condition1 == -curve().eta));
        assert!(rep.sellers.iter().all(|s| s.condition2 == -curve().eta));
    }
}
