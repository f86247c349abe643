use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the unit d-simplex with `a . x <= z`, where `d = a.len()`.
///
/// Works on the values `u_j = a_j - z` at all d+1 vertices (the origin has
/// `a_0 = 0`). Nonnegative values are the `Y_k`, negative ones the `X_h`, and
/// `A_K` after the recurrence is the fraction. Every update is a convex
/// combination, so the recurrence is stable in floating point.
pub fn varsi_fraction(a: &[f64], z: f64) -> f64 {
    let mut ys = Vec::with_capacity(a.len() + 1);
    let mut xs = Vec::with_capacity(a.len() + 1);
    for u in std::iter::once(-z).chain(a.iter().map(|&aj| aj - z)) {
        if u >= 0.0 {
            ys.push(u);
        } else {
            xs.push(u);
        }
    }
    if xs.is_empty() {
        return 0.0;
    }
    if ys.is_empty() {
        return 1.0;
    }
    let mut acc = vec![0.0; ys.len() + 1];
    acc[0] = 1.0;
    for &x in &xs {
        for k in 1..acc.len() {
            let y = ys[k - 1];
            acc[k] = (y * acc[k] - x * acc[k - 1]) / (y - x);
        }
    }
    acc[ys.len()]
}

/// Fraction of the unit simplex with `z_lo <= a . x <= z_hi`.
pub fn band_fraction(a: &[f64], z_lo: f64, z_hi: f64) -> f64 {
    if !(z_lo < z_hi) {
        return 0.0;
    }
    (varsi_fraction(a, z_hi) - varsi_fraction(a, z_lo)).max(0.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LevelSearch {
    pub level: f64,
    pub fraction: f64,
    /// The fraction could not be brought within the tolerance; `level` is the
    /// best point found.
    pub warning: bool,
}

/// Level `z` with `varsi_fraction(a, z)` within `tol` of `target`.
pub fn bisect_level_for_fraction(a: &[f64], target: f64, tol: f64) -> Result<LevelSearch> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid(format!(
            "target fraction {target} must lie in (0, 1)"
        )));
    }
    if a.is_empty() || a.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("normal must be nonzero"));
    }
    let mut lo = a.iter().fold(0.0f64, |m, &x| m.min(x));
    let mut hi = a.iter().fold(0.0f64, |m, &x| m.max(x));
    let mut best = LevelSearch {
        level: hi,
        fraction: 1.0,
        warning: true,
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = varsi_fraction(a, mid);
        if (f - target).abs() < (best.fraction - target).abs() {
            best = LevelSearch {
                level: mid,
                fraction: f,
                warning: true,
            };
        }
        if (f - target).abs() <= tol {
            best.warning = false;
            return Ok(best);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next <= lo || next >= hi {
            break;
        }
    }
    Ok(best)
}
