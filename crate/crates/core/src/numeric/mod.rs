//! Numerical building blocks: quadrature, root finding, special functions.

pub mod quadrature;
pub mod roots;

/// Gamma function (Lanczos approximation, ~15 significant digits).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}
