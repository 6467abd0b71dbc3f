//! Unit conversions. Everything inside the crate is SI (watts, metres,
//! per-square-metre intensities); these helpers exist for the edges.

use std::f64::consts::PI;

/// Radius of the reference disk used to quote intensities as counts.
pub const REFERENCE_DISK_RADIUS_M: f64 = 500.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn disk_area(radius_m: f64) -> f64 {
    PI * radius_m * radius_m
}

/// Converts "N base stations per disk of `radius_m`" into per-m².
pub fn per_disk_to_per_m2(count: f64, radius_m: f64) -> f64 {
    count / disk_area(radius_m)
}

pub fn per_m2_to_per_disk(intensity: f64, radius_m: f64) -> f64 {
    intensity * disk_area(radius_m)
}
