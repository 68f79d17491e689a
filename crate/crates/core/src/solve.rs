//! Bracketed root finding: bisection with a derivative polish.
//!
//! All uses in this crate solve strictly monotone equations, so bisection is
//! unconditionally safe; the Newton steps at the end buy the last digits.
//! Function evaluations may fail (series divergence), hence the `Result`
//! signatures. Bracket endpoints are never evaluated: callers supply them
//! with known signs.

use crate::error::{Error, Result};

/// Outcome of a bracketed solve.
#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub root: f64,
    /// f(root) at the returned point.
    pub residual: f64,
    /// Final certified sign-change bracket.
    pub bracket: (f64, f64),
    pub iterations: u32,
}

const BISECT_STEPS: u32 = 80;
const NEWTON_STEPS: u32 = 40;
const EXPAND_STEPS: u32 = 200;

/// Starting from `from`, search upward for `x > from` with `f(x) < 0`,
/// doubling the step each time. `f` must be decreasing.
pub fn expand_up<F: FnMut(f64) -> Result<f64>>(mut f: F, from: f64, step0: f64) -> Result<f64> {
    let mut step = step0;
    for _ in 0..EXPAND_STEPS {
        let x = from + step;
        if f(x)? < 0.0 {
            return Ok(x);
        }
        step *= 2.0;
    }
    Err(Error::DomainError(format!(
        "no sign change found above {from}: the equation has no root there"
    )))
}

/// Starting from `from`, search downward for `x < from` with `f(x) > 0`,
/// doubling the step each time. `f` must be decreasing.
pub fn expand_down<F: FnMut(f64) -> Result<f64>>(mut f: F, from: f64, step0: f64) -> Result<f64> {
    let mut step = step0;
    for _ in 0..EXPAND_STEPS {
        let x = from - step;
        if f(x)? > 0.0 {
            return Ok(x);
        }
        step *= 2.0;
    }
    Err(Error::DomainError(format!(
        "no sign change found below {from}: the equation has no root there"
    )))
}

/// Root of a decreasing function on `(lo, hi)` with f(lo) > 0 > f(hi) assumed.
///
/// 80 bisection steps followed by safeguarded Newton refinement; stops early
/// once |f| ≤ `tol`.
pub fn bisect_refine<F, D>(mut f: F, mut df: D, lo: f64, hi: f64, tol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<f64>,
{
    assert!(lo < hi, "invalid bracket [{lo}, {hi}]");
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x)?;
    for _ in 0..BISECT_STEPS {
        iterations += 1;
        if fx.abs() <= tol {
            break;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break; // interval exhausted at double precision
        }
        x = mid;
        fx = f(x)?;
    }
    // Newton polish, clamped to the certified bracket.
    for _ in 0..NEWTON_STEPS {
        if fx.abs() <= tol {
            break;
        }
        iterations += 1;
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x)?;
        let mut next = if d != 0.0 { x - fx / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            break;
        }
        x = next;
        fx = f(x)?;
    }
    Ok(RootResult { root: x, residual: fx, bracket: (lo, hi), iterations })
}
