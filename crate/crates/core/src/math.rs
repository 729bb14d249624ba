//! Scalar helpers shared by every stage. `core` has no float transcendental
//! functions, so everything goes through `libm`.

use core::f64::consts::{PI, TAU};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Rounds half away from zero, so `round(-x) == -round(x)`.
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// Wraps an angle into `[-π, π)`. Values already in range come back
/// unchanged, bit for bit.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    let mut r = a - TAU * floor((a + PI) / TAU);
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// Absolute angular separation in `[0, π]`.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d < 0.0 {
        -d
    } else {
        d
    }
}

/// Map bearing of a 2-D vector: 0 points east, π/2 north.
#[inline]
pub fn bearing(dx: f64, dy: f64) -> f64 {
    wrap_angle(atan2(dy, dx))
}
