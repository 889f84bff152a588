/// Nanoseconds (as configured, f64) to integer picoseconds, rounded to nearest.
#[inline]
pub(crate) fn ns_to_ps(ns: f64) -> u64 {
    let ps = ns * 1000.0;
    if ps <= 0.0 {
        0
    } else {
        (ps + 0.5) as u64
    }
}

/// `ceil(x)` for nonnegative finite `x`, without `std`.
#[inline]
pub(crate) fn ceil_to_u64(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let t = x as u64;
    if (t as f64) < x {
        t + 1
    } else {
        t
    }
}
