use core::f64::consts::TAU;

/// Reduces a position into `[0, 2π)`.
pub fn wrap_position(x: f64) -> f64 {
    let r = libm::fmod(x, TAU);
    let r = if r < 0.0 { r + TAU } else { r };
    // fmod of a tiny negative value can round back up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `sin(n x)` and `cos(n x)` with `x` reduced modulo the fundamental
/// wavelength first; unwrapped positions would lose phase digits at n ~ 10³.
#[inline]
pub(crate) fn sin_cos(x: f64, order: u32) -> (f64, f64) {
    libm::sincos(order as f64 * wrap_position(x))
}

/// Signed periodic difference `a - b` folded into `(-π, π]`.
pub(crate) fn periodic_delta(a: f64, b: f64) -> f64 {
    let d = wrap_position(a - b);
    if d > core::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}
