//! Scalar numerical kernels: principal-branch Lambert W, the marginal-rate
//! helper `h`, and a guarded bisection.

use std::f64::consts::{E, LN_2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("lambert_w0 argument {0} below the branch point -1/e")]
    LambertDomain(f64),
    #[error("bisection bracket [{lo}, {hi}] does not change sign (f: {f_lo}, {f_hi})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

const INV_E: f64 = 1.0 / E;

/// Principal branch of the Lambert W function, `W0(z)·e^{W0(z)} = z`,
/// for `z >= -1/e`.
///
/// Halley iteration from a piecewise initial guess; a branch-point series is
/// used where the Newton derivative degenerates. Residual |W e^W - z| stays
/// below 1e-12 across the domain grid exercised by the tests.
pub fn lambert_w0(z: f64) -> Result<f64, NumericsError> {
    if !z.is_finite() {
        return Err(NumericsError::LambertDomain(z));
    }
    if z < -INV_E {
        // Tolerate rounding at the branch point itself.
        if z > -INV_E - 1e-14 {
            return Ok(-1.0);
        }
        return Err(NumericsError::LambertDomain(z));
    }
    if z == 0.0 {
        return Ok(0.0);
    }

    let s = z + INV_E;
    if s <= 0.0 {
        return Ok(-1.0);
    }
    // Series in p = sqrt(2(1 + e z)) about the branch point.
    let p = (2.0 * E * s).sqrt();
    if p < 1e-4 {
        return Ok(-1.0 + p - p * p / 3.0 + 11.0 * p.powi(3) / 72.0 - 43.0 * p.powi(4) / 540.0);
    }

    let mut w = if z < -0.2 {
        -1.0 + p - p * p / 3.0 + 11.0 * p.powi(3) / 72.0
    } else if z <= E {
        // Anywhere in W's basin on [-0.2, e]; refined by Halley below.
        z.ln_1p() * 0.8
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..60 {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        // Halley step on f(w) = w e^w - z.
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 1e-16 * w.abs().max(1e-3) {
            break;
        }
    }
    Ok(w)
}

/// Marginal-rate function `h(x) = log2(1+x) - x / ((1+x) ln 2)`.
///
/// Strictly increasing on `x >= 0` with `h(0) = 0`; it is the derivative of
/// `t -> t log2(1 + a/t)` evaluated at `x = a/t`.
pub fn h_func(x: f64) -> f64 {
    (x.ln_1p() - x / (1.0 + x)) / LN_2
}

/// Inverse of [`h_func`]: the `x >= 0` with `h(x) = y`, computed through the
/// Lambert W closed form. Returns infinity when `y` is large enough to
/// underflow the exponential.
pub fn h_inverse(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    let c = y * LN_2;
    if c > 700.0 {
        return f64::INFINITY;
    }
    let z = -(-(c + 1.0)).exp();
    let w = lambert_w0(z).expect("-e^{-(c+1)} is inside the W0 domain for c >= 0");
    if w == 0.0 {
        return f64::INFINITY;
    }
    -1.0 - 1.0 / w
}

/// Bisection for a root of `f` in `[lo, hi]`; `f(lo)` and `f(hi)` must differ
/// in sign. Runs until the interval shrinks below `xtol` relative to its
/// midpoint (or `max_iter` splits).
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, NumericsError> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(NumericsError::NoBracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= xtol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
