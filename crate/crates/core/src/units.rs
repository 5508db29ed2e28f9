//! Unit conversions used at the I/O boundary. Everything inside the crate is SI.

use std::f64::consts::{PI, TAU};

/// Metres per second in one international knot.
pub const MS_PER_KNOT: f64 = 1852.0 / 3600.0;

/// Metres in one international foot.
pub const M_PER_FOOT: f64 = 0.3048;

pub fn knots_to_ms(kts: f64) -> f64 {
    kts * MS_PER_KNOT
}

pub fn ms_to_knots(ms: f64) -> f64 {
    ms / MS_PER_KNOT
}

pub fn feet_to_m(ft: f64) -> f64 {
    ft * M_PER_FOOT
}

/// Wraps an angle to `[-π, π)`.
pub fn wrap_pi(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to TAU for tiny negative inputs
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Smallest absolute angular separation between two angles, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}
