//! Runs a validated configuration and collects the result table.
//!
//! Intensity and quantity columns are counts per 500 m disk; powers are
//! watts unless the column name says otherwise.

use infrashare::buyer::{greedy_select, BuyerSolution, LambdaConvention, PurchaseProblem};
use infrashare::coverage::{beta, coverage_approx, coverage_exact};
use infrashare::market::{clear_market, find_equilibrium, BuyerSpec, EquilibriumOptions};
use infrashare::sim::{estimate_coverage, SimRegion};
use infrashare::tradeoff::{AreaPowerModel, QosTarget};
use infrashare::units::{dbm_to_watts, REFERENCE_DISK_RADIUS_M};
use infrashare::{Assumption, OperatorProfile, RadioParams, SharingScenario};
use sha2::{Digest, Sha256};

use crate::config::{per_m2, Experiment, ExperimentConfig, McCase};
use crate::error::{Context, Result};
use crate::table::{Metadata, ResultTable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the normalised configuration. The output path is left out
/// so that the same experiment hashes the same wherever it is written.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.output = None;
    let bytes = serde_json::to_vec(&c).expect("config serialises");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn bool_col(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn op(id: usize, count: f64) -> Result<OperatorProfile> {
    OperatorProfile::new(id, per_m2(count)).context(|| "buyer.intensity".into())
}

fn shared(l0: f64, sellers: &[f64], assumption: Assumption) -> Result<SharingScenario> {
    let ops = sellers
        .iter()
        .enumerate()
        .map(|(i, &c)| op(i + 1, c))
        .collect::<Result<Vec<_>>>()?;
    SharingScenario::full_sharing(op(0, l0)?, &ops, assumption).context(|| "sellers".into())
}

// An empty network covers nobody.
fn exact(sc: &SharingScenario, radio: &RadioParams) -> Result<f64> {
    if sc.association_intensity() == 0.0 {
        return Ok(0.0);
    }
    coverage_exact(sc, radio).context(|| "coverage".into())
}

fn approx(sc: &SharingScenario, radio: &RadioParams) -> Result<f64> {
    if sc.association_intensity() == 0.0 {
        return Ok(0.0);
    }
    coverage_approx(sc, radio).context(|| "coverage".into())
}

fn purchase(config: &ExperimentConfig, l0: f64, k: usize, eps: f64) -> Result<BuyerSolution> {
    let what = || format!("buyer at {l0} per disk, {k} sellers, epsilon {eps}");
    let qos = QosTarget::new(eps).context(what)?;
    let problem = PurchaseProblem::new(per_m2(l0), config.offers(k), config.radio, qos).context(what)?;
    greedy_select(&problem).context(what)
}

// folding from +0 keeps an empty purchase from printing as -0
fn fraction_total(sol: &BuyerSolution) -> f64 {
    sol.fractions.values().fold(0.0, |a, x| a + x)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let metadata = Metadata {
        name: config.name.clone(),
        kind: config.experiment.kind().to_string(),
        config_hash: config_hash(config),
        seed: config.seed,
        version: VERSION.to_string(),
    };
    let (columns, rows) = match &config.experiment {
        Experiment::CoverageSweep { buyer_intensity, epsilon } => coverage_sweep(config, buyer_intensity, epsilon)?,
        Experiment::PowerSweep {
            tx_power_dbm,
            buyer_intensity,
        } => power_sweep(config, tx_power_dbm, buyer_intensity)?,
        Experiment::EpsilonSweep { epsilon, seller_counts } => epsilon_sweep(config, epsilon, seller_counts)?,
        Experiment::ArealPower { seller, intensity } => areal_power(config, *seller, intensity)?,
        Experiment::MarketEquilibrium { intensities, eta } => market_equilibrium(config, intensities, eta)?,
        Experiment::FullClearing {
            buyer_intensity,
            seller_counts,
        } => full_clearing(config, buyer_intensity, seller_counts)?,
        Experiment::McValidate { cases } => mc_validate(config, cases)?,
    };
    let mut table = ResultTable::new(metadata, columns);
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

type Columns = (Vec<String>, Vec<Vec<f64>>);

fn names(fixed: &[&str]) -> Vec<String> {
    fixed.iter().map(|s| s.to_string()).collect()
}

/// Columns: `lambda0`, `ceiling`, `alone_exact`, `alone_approx`, then per
/// epsilon `purchased_eps{e}`, `coverage_eps{e}`, `feasible_eps{e}`.
fn coverage_sweep(config: &ExperimentConfig, l0s: &[f64], epsilons: &[f64]) -> Result<Columns> {
    let mut columns = names(&["lambda0", "ceiling", "alone_exact", "alone_approx"]);
    for e in epsilons {
        columns.extend([format!("purchased_eps{e}"), format!("coverage_eps{e}"), format!("feasible_eps{e}")]);
    }
    let ceiling = 1.0 / beta(&config.radio).context(|| "radio".into())?;
    let k = config.sellers.len();
    let mut rows = Vec::new();
    for &l0 in l0s {
        let alone = SharingScenario::no_sharing(op(0, l0)?);
        let mut row = vec![l0, ceiling, exact(&alone, &config.radio)?, approx(&alone, &config.radio)?];
        for &eps in epsilons {
            let sol = purchase(config, l0, k, eps)?;
            row.extend([sol.purchased_intensity / per_m2(1.0), sol.achieved_coverage, bool_col(sol.feasible)]);
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Columns: `tx_power_dbm`, `tx_power_w`, `ceiling`, then per buyer
/// intensity `alone_l0_{l}` and, with sellers configured, `shared_l0_{l}`
/// with every seller shared in full under the configured assumption.
fn power_sweep(config: &ExperimentConfig, powers: &[f64], l0s: &[f64]) -> Result<Columns> {
    let sellers: Vec<f64> = config.sellers.iter().map(|s| s.intensity).collect();
    let mut columns = names(&["tx_power_dbm", "tx_power_w", "ceiling"]);
    for l in l0s {
        columns.push(format!("alone_l0_{l}"));
        if !sellers.is_empty() {
            columns.push(format!("shared_l0_{l}"));
        }
    }
    let ceiling = 1.0 / beta(&config.radio).context(|| "radio".into())?;
    let mut rows = Vec::new();
    for &dbm in powers {
        let p = dbm_to_watts(dbm);
        let radio = config.radio.with_tx_power(p);
        radio.validate().context(|| format!("tx power {dbm} dBm"))?;
        let mut row = vec![dbm, p, ceiling];
        for &l0 in l0s {
            row.push(exact(&SharingScenario::no_sharing(op(0, l0)?), &radio)?);
            if !sellers.is_empty() {
                row.push(exact(&shared(l0, &sellers, config.assumption)?, &radio)?);
            }
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Columns: `epsilon`, `alone`, then per seller count `fraction_k{K}`
/// (sum of purchased fractions), `purchased_k{K}`, `coverage_k{K}`,
/// `feasible_k{K}`.
fn epsilon_sweep(config: &ExperimentConfig, epsilons: &[f64], counts: &[usize]) -> Result<Columns> {
    let mut columns = names(&["epsilon", "alone"]);
    for k in counts {
        columns.extend([
            format!("fraction_k{k}"),
            format!("purchased_k{k}"),
            format!("coverage_k{k}"),
            format!("feasible_k{k}"),
        ]);
    }
    let l0 = config.buyer.intensity;
    let alone = exact(&SharingScenario::no_sharing(op(0, l0)?), &config.radio)?;
    let mut rows = Vec::new();
    for &eps in epsilons {
        let mut row = vec![eps, alone];
        for &k in counts {
            let sol = purchase(config, l0, k, eps)?;
            row.extend([
                fraction_total(&sol),
                sol.purchased_intensity / per_m2(1.0),
                sol.achieved_coverage,
                bool_col(sol.feasible),
            ]);
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Columns: `lambda`, `tx_power_w`, `areal_power_per_disk` (W over one
/// reference disk), `marginal` (dS/dlambda, W), `convex` (1 past the
/// breakpoint), `breakpoint`.
fn areal_power(config: &ExperimentConfig, seller: usize, lambdas: &[f64]) -> Result<Columns> {
    let s = &config.sellers[seller];
    let (params, qos) = config.seller_cost(s)?;
    let model = AreaPowerModel::new(&params, &config.radio, &qos).context(|| format!("sellers[{seller}]"))?;
    let area = 1.0 / per_m2(1.0);
    let lth = model.threshold_intensity();
    let columns = names(&["lambda", "tx_power_w", "areal_power_per_disk", "marginal", "convex", "breakpoint"]);
    let rows = lambdas
        .iter()
        .map(|&l| {
            let lam = per_m2(l);
            vec![
                l,
                model.tx_power(lam),
                model.areal_power(lam) * area,
                model.marginal(lam),
                bool_col(lam > lth),
                lth * area,
            ]
        })
        .collect();
    Ok((columns, rows))
}

fn equilibrium_options() -> EquilibriumOptions {
    EquilibriumOptions {
        record_trace: false,
        ..EquilibriumOptions::default()
    }
}

/// Columns: `eta`, `lambda_{k}`, `y_{k}` per seller, `y_total`, `q_star`,
/// `converged`, `iterations`, `residual`.
fn market_equilibrium(config: &ExperimentConfig, cases: &[Vec<f64>], etas: &[f64]) -> Result<Columns> {
    let k = config.sellers.len();
    let mut columns = names(&["eta"]);
    columns.extend((1..=k).map(|i| format!("lambda_{i}")));
    columns.extend((1..=k).map(|i| format!("y_{i}")));
    columns.extend(names(&["y_total", "q_star", "converged", "iterations", "residual"]));
    let unit = per_m2(1.0);
    let base = config.price_curve.expect("validated");
    let mut rows = Vec::new();
    for &eta in etas {
        let curve = base.with_eta(eta).curve()?;
        for case in cases {
            let sellers = config
                .sellers
                .iter()
                .zip(case)
                .map(|(s, &l)| config.market_seller(s, l))
                .collect::<Result<Vec<_>>>()?;
            let eq = find_equilibrium(&sellers, &curve, &equilibrium_options())
                .context(|| format!("equilibrium at eta {eta}, intensities {case:?}"))?;
            let mut row = vec![eta];
            row.extend(case);
            row.extend(eq.y_star.iter().map(|y| y / unit));
            row.extend([
                eq.y_total / unit,
                eq.q_star,
                bool_col(eq.converged),
                eq.iterations as f64,
                eq.residual / unit,
            ]);
            rows.push(row);
        }
    }
    Ok((columns, rows))
}

/// Columns: `lambda0`, `alone`, then per seller count `q_star_k{K}`,
/// `y_total_k{K}`, `purchased_k{K}`, `coverage_k{K}`, `feasible_k{K}`.
fn full_clearing(config: &ExperimentConfig, l0s: &[f64], counts: &[usize]) -> Result<Columns> {
    let mut columns = names(&["lambda0", "alone"]);
    for k in counts {
        columns.extend([
            format!("q_star_k{k}"),
            format!("y_total_k{k}"),
            format!("purchased_k{k}"),
            format!("coverage_k{k}"),
            format!("feasible_k{k}"),
        ]);
    }
    let curve = config.price_curve.expect("validated").curve()?;
    let eps = config.buyer.epsilon.expect("validated");
    let qos = QosTarget::new(eps).context(|| "buyer.epsilon".into())?;
    let unit = per_m2(1.0);
    let mut rows = Vec::new();
    for &l0 in l0s {
        let buyer = BuyerSpec {
            intensity: per_m2(l0),
            radio: config.radio,
            qos,
            convention: LambdaConvention::Purchased,
        };
        let mut row = vec![l0, exact(&SharingScenario::no_sharing(op(0, l0)?), &config.radio)?];
        for &k in counts {
            let sellers = config.sellers[..k]
                .iter()
                .map(|s| config.market_seller(s, s.intensity))
                .collect::<Result<Vec<_>>>()?;
            let out = clear_market(&sellers, &curve, &buyer, &equilibrium_options())
                .context(|| format!("clearing with {k} sellers at buyer intensity {l0}"))?;
            row.extend([
                out.equilibrium.q_star,
                out.equilibrium.y_total / unit,
                out.buyer.purchased_intensity / unit,
                out.buyer.achieved_coverage,
                bool_col(out.buyer.feasible),
            ]);
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Columns: `scenario_id`, `analytic`, `mc`, `ci`, `pass`. Case `i` is
/// simulated with seed `seed + i`; `pass` is 1 when the analytic value
/// lies inside the 95% interval.
fn mc_validate(config: &ExperimentConfig, cases: &[McCase]) -> Result<Columns> {
    let region = SimRegion::with_margin(REFERENCE_DISK_RADIUS_M, config.simulation.disk_factor)
        .context(|| "simulation.disk_factor".into())?;
    let mut rows = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let sc = shared(c.buyer_intensity, &c.seller_intensities, c.assumption)?;
        let analytic = exact(&sc, &config.radio)?;
        let est = estimate_coverage(
            &sc,
            &config.radio,
            &region,
            config.simulation.trials,
            config.seed.wrapping_add(i as u64),
        )
        .context(|| format!("experiment.cases[{i}]"))?;
        rows.push(vec![i as f64, analytic, est.p_hat, est.ci_halfwidth, bool_col(est.contains(analytic))]);
    }
    Ok((names(&["scenario_id", "analytic", "mc", "ci", "pass"]), rows))
}

/// Monte Carlo cross-check of a configuration's scenario: the buyer
/// alone, then with every configured seller under each assumption. An
/// `mc-validate` configuration is returned unchanged.
pub fn validation_config(config: &ExperimentConfig) -> ExperimentConfig {
    if matches!(config.experiment, Experiment::McValidate { .. }) {
        return config.clone();
    }
    let l0 = config.buyer.intensity;
    let sellers: Vec<f64> = config.sellers.iter().map(|s| s.intensity).collect();
    let mut cases = Vec::new();
    if l0 > 0.0 {
        cases.push(McCase {
            buyer_intensity: l0,
            seller_intensities: Vec::new(),
            assumption: config.assumption,
        });
    }
    if !sellers.is_empty() {
        for assumption in [Assumption::AllBsServe, Assumption::FractionalActivity] {
            cases.push(McCase {
                buyer_intensity: l0,
                seller_intensities: sellers.clone(),
                assumption,
            });
        }
    }
    let mut out = config.clone();
    out.name = format!("{}-validate", config.name);
    out.experiment = Experiment::McValidate { cases };
    out
}
