//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerics.
#![allow(dead_code)]

/// Bisection on `f` over `[lo, hi]` with `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "bracket [{lo}, {hi}] does not straddle a root");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Principal branch of `w e^w = x` by bisection on `[-1, max(1, ln(1 + x))]`.
pub fn lambert_bisect(x: f64) -> f64 {
    let hi = 1.0f64.max((1.0 + x).ln() + 1.0);
    bisect(|w| w * w.exp() - x, -1.0, hi)
}

/// Dominant real root of `lambda + p e^{-lambda tau} = 0`, which lies in
/// `(-1/tau, 0)` whenever `p tau < 1/e`.
pub fn characteristic_root(p: f64, tau: f64) -> f64 {
    assert!(p * tau * std::f64::consts::E < 1.0);
    bisect(|l| l + p * (-l * tau).exp(), -1.0 / tau, 0.0)
}

/// Plain iteration of `y <- base^y` from `y = base`, `n` times.
pub fn brute_tower(base: f64, n: usize) -> f64 {
    let mut y = base;
    for _ in 1..n {
        y = base.powf(y);
    }
    y
}
