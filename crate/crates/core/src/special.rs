//! Lower real branch of the Lambert W function.
//!
//! `W_{-1}(x)` is the solution `w <= -1` of `w * exp(w) = x` for
//! `x in [-1/e, 0)`. On `(-inf, -1]` the map `w -> w * exp(w)` is strictly
//! decreasing from `0-` to `-1/e`, so a bracket can always be found and
//! bisection is safe; Halley iterations then polish the bracketed root.

use crate::error::{domain, Result};

/// `-1/e`, the branch point.
pub const BRANCH_POINT: f64 = -0.367_879_441_171_442_33;

const MAX_HALLEY_STEPS: usize = 32;

fn residual(w: f64, x: f64) -> f64 {
    w * w.exp() - x
}

/// Lower branch `W_{-1}(x)` of the Lambert W function.
///
/// Errors when `x < -1/e` or `x >= 0`.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    if !(BRANCH_POINT..0.0).contains(&x) {
        return Err(domain("x", x, "[-1/e, 0)"));
    }
    if x == BRANCH_POINT {
        return Ok(-1.0);
    }

    // residual(hi) <= 0 always; walk `lo` down until residual(lo) > 0.
    let mut hi = -1.0_f64;
    let mut lo = -2.0_f64;
    while residual(lo, x) <= 0.0 {
        hi = lo;
        lo *= 2.0;
    }

    // Coarse bisection keeps Halley away from the flat branch point.
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if residual(mid, x) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut w = 0.5 * (lo + hi);
    for _ in 0..MAX_HALLEY_STEPS {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let d1 = ew * (w + 1.0);
        let d2 = ew * (w + 2.0);
        let denom = d1 - f * d2 / (2.0 * d1);
        let mut next = w - f / denom;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * w.abs() {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w.min(-1.0))
}
