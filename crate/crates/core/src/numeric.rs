//! Small scalar root-finding and minimisation helpers.

/// Outcome of a bracketed bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bisection {
    Root(f64),
    /// `f(lo)` and `f(hi)` have the same strict sign.
    NoSignChange,
}

/// Bisection on `[lo, hi]` until the bracket is narrower than `x_tol` or
/// `|f| <= f_tol`, whichever happens first.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, f_tol: f64, max_iter: usize) -> Bisection
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Bisection::Root(lo);
    }
    if f_hi == 0.0 {
        return Bisection::Root(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Bisection::NoSignChange;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= f_tol || (hi - lo).abs() <= x_tol {
            return Bisection::Root(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Bisection::Root(mid)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Returns the best point evaluated, which is not necessarily the bracket
/// midpoint: when `f` is `+inf` on part of the interval the midpoint may lie
/// there.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut best = (f64::NAN, f64::INFINITY);
    let track = |x: f64, fx: f64, best: &mut (f64, f64)| {
        if fx < best.1 || best.0.is_nan() {
            *best = (x, fx);
        }
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    track(x1, f1, &mut best);
    track(x2, f2, &mut best);
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            track(x1, f1, &mut best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            track(x2, f2, &mut best);
        }
    }
    best
}
