//! Scalar bracketing root finders.

use crate::{Error, Result};

/// Bisection on `[lo, hi]` until the bracket is narrower than `rtol` relative to its midpoint.
///
/// Returns `None` when the end points do not bracket a sign change.
pub fn bisect<F>(f: F, lo: f64, hi: f64, rtol: f64) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    bisect_until(f, lo, hi, |a, b| {
        (b - a).abs() <= rtol * (0.5 * (a + b)).abs()
    })
}

fn bisect_until<F, D>(mut f: F, mut lo: f64, mut hi: f64, done: D) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<f64>,
    D: Fn(f64, f64) -> bool,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(Some(lo));
    }
    if fhi == 0.0 {
        return Ok(Some(hi));
    }
    if !(flo.is_finite() && fhi.is_finite()) || (flo > 0.0) == (fhi > 0.0) {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if done(lo, hi) {
            return Ok(Some(mid));
        }
        let fm = f(mid)?;
        if !fm.is_finite() {
            return Err(Error::NonFinite("bisect"));
        }
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Bisection in `ln x`; both end points must be positive.
pub fn bisect_log<F>(mut f: F, lo: f64, hi: f64, rtol: f64) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::invalid(
            "bracket",
            "log bisection needs positive end points",
        ));
    }
    let r = bisect_until(
        |u| f(libm::exp(u)),
        libm::log(lo),
        libm::log(hi),
        |a, b| (b - a).abs() <= rtol,
    )?;
    Ok(r.map(libm::exp))
}

/// First sub-interval of a uniform `n`-step scan where `f` changes sign.
pub fn first_sign_change<F>(mut f: F, lo: f64, hi: f64, n: usize) -> Result<Option<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let step = (hi - lo) / n as f64;
    let mut x0 = lo;
    let mut f0 = f(x0)?;
    for k in 1..=n {
        let x1 = if k == n { hi } else { lo + step * k as f64 };
        let f1 = f(x1)?;
        if f0 == 0.0 || (f0 > 0.0) != (f1 > 0.0) {
            return Ok(Some((x0, x1)));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(None)
}
