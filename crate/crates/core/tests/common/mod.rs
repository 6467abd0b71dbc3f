//! Helpers shared by the integration tests, including reference
//! computations that avoid the library's own quadrature.
#![allow(dead_code)]

use std::f64::consts::PI;

use infrashare::units::per_disk_to_per_m2;
use infrashare::RadioParams;
use proptest::test_runner::Config;

/// Proptest config without regression files, which integration tests
/// cannot locate.
pub fn cases(n: u32) -> Config {
    Config {
        failure_persistence: None,
        ..Config::with_cases(n)
    }
}

/// Intensity of `count` base stations per 500 m disk, per m².
pub fn disk(count: f64) -> f64 {
    per_disk_to_per_m2(count, 500.0)
}

/// alpha = 5, T = 20 dB, sigma^2 = -150 dBm, p = 10 dBm.
pub fn paper_radio() -> RadioParams {
    RadioParams::new(100.0, 5.0, 1e-18, 0.01).unwrap()
}

pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// `rho(T, alpha)` by Simpson's rule after `u = c / t^2`, `c = T^(-2/alpha)`,
/// which maps the tail onto `(0, 1]` with a smooth integrand for `alpha >= 3`.
pub fn rho_reference(t: f64, alpha: f64) -> f64 {
    let c = t.powf(-2.0 / alpha);
    let ch = c.powf(alpha / 2.0);
    let g = |s: f64| 2.0 * c * s.powf(alpha - 3.0) / (s.powf(alpha) + ch);
    t.powf(2.0 / alpha) * simpson(g, 0.0, 1.0, 200_000)
}

pub fn beta_reference(radio: &RadioParams) -> f64 {
    1.0 + rho_reference(radio.threshold, radio.path_loss_exponent)
}

/// Exact coverage integral by Simpson's rule on a truncated, rescaled range.
pub fn coverage_reference(lambda_a: f64, lambda_i: f64, radio: &RadioParams) -> f64 {
    let beta = beta_reference(radio);
    let alpha = radio.path_loss_exponent;
    let a = PI * (lambda_i * (beta - 1.0) + lambda_a);
    let b = radio.threshold * radio.noise_power / radio.tx_power;
    let scale = 1.0 / (a + b.powf(2.0 / alpha));
    let f = |w: f64| (-(a * scale * w + b * (scale * w).powf(alpha / 2.0))).exp();
    PI * lambda_a * scale * simpson(f, 0.0, 60.0, 400_000)
}

/// Closed-form approximation with every constant computed from scratch.
pub fn approx_reference(lambda_a: f64, lambda_i: f64, radio: &RadioParams) -> f64 {
    let beta = beta_reference(radio);
    lambda_a / (lambda_i * (beta - 1.0) + lambda_a + theta_reference(radio))
}

pub fn theta_reference(radio: &RadioParams) -> f64 {
    let alpha = radio.path_loss_exponent;
    let b = radio.threshold * radio.noise_power / radio.tx_power;
    alpha / (2.0 * PI) * b.powf(2.0 / alpha) / gamma_reference(2.0 / alpha)
}

/// Gamma on (0, 1] via Gamma(x) = Gamma(x + 1) / x and a Simpson integral
/// of `t^x e^-t` after `t = s^2`.
pub fn gamma_reference(x: f64) -> f64 {
    let f = |s: f64| 2.0 * s.powf(2.0 * x + 1.0) * (-s * s).exp();
    simpson(f, 0.0, 12.0, 400_000) / x
}

/// Fractional-activity coverage for buyer `l0` and purchased intensities.
pub fn shared_coverage(l0: f64, purchased: &[f64], radio: &RadioParams, beta: f64, theta: f64) -> f64 {
    let la: f64 = l0 + purchased.iter().sum::<f64>();
    if la <= 0.0 {
        return 0.0;
    }
    let li = (l0 * l0 + purchased.iter().map(|e| e * e).sum::<f64>()) / la;
    let _ = radio;
    la / (li * (beta - 1.0) + la + theta)
}

#[derive(Debug, Clone)]
pub struct GridOptimum {
    pub cost: f64,
    pub fractions: Vec<f64>,
}

/// Cheapest grid point `x in {0, step, ..., 1}^K` meeting the coverage target.
pub fn exhaustive_purchase(
    l0: f64,
    sellers: &[(f64, f64)],
    radio: &RadioParams,
    epsilon: f64,
    step: f64,
) -> Option<GridOptimum> {
    let beta = beta_reference(radio);
    let theta = theta_reference(radio);
    let levels = (1.0 / step).round() as usize;
    let k = sellers.len();
    let total = (levels + 1).pow(k as u32);
    let mut best: Option<GridOptimum> = None;
    let mut x = vec![0.0; k];
    for code in 0..total {
        let mut c = code;
        for xi in x.iter_mut() {
            *xi = (c % (levels + 1)) as f64 / levels as f64;
            c /= levels + 1;
        }
        let purchased: Vec<f64> = sellers.iter().zip(&x).map(|((l, _), xi)| l * xi).collect();
        let pc = shared_coverage(l0, &purchased, radio, beta, theta);
        if pc < 1.0 - epsilon {
            continue;
        }
        let cost: f64 = sellers.iter().zip(&x).map(|((_, q), xi)| q * xi).sum();
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(GridOptimum {
                cost,
                fractions: x.clone(),
            });
        }
    }
    best
}
