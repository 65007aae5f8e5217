//! Composite Simpson rule on a uniform grid.

use crate::error::{invalid, Result};

pub const DEFAULT_PANELS: usize = 64;

/// Checks that `panels` is usable by [`simpson`].
pub fn check_panels(panels: usize) -> Result<()> {
    if panels < 2 || !panels.is_multiple_of(2) {
        return Err(invalid("panels", format!("must be even and >= 2, got {panels}")));
    }
    Ok(())
}

/// Nodes and weights of the composite Simpson rule on `[lo, hi]`.
pub fn simpson_nodes(lo: f64, hi: f64, panels: usize) -> Result<Vec<(f64, f64)>> {
    check_panels(panels)?;
    let h = (hi - lo) / panels as f64;
    Ok((0..=panels)
        .map(|j| {
            let s = if j == panels { hi } else { lo + j as f64 * h };
            let w = if j == 0 || j == panels {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (s, w * h / 3.0)
        })
        .collect())
}

/// `∫_lo^hi f(s) ds` by composite Simpson with `panels` subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> Result<f64> {
    Ok(simpson_nodes(lo, hi, panels)?.into_iter().map(|(s, w)| w * f(s)).sum())
}
