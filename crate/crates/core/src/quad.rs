//! Composite Gauss–Legendre quadrature with panel doubling.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes per panel.
pub const ORDER: usize = 20;

/// Hard cap on the number of panels before giving up.
pub const MAX_PANELS: usize = 1 << 14;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..order {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = order as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Fixed composite rule: `panels` equal panels of `ORDER` nodes each.
pub fn composite<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, panels: usize) -> f64 {
    let (nodes, weights) = rule();
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += acc;
    }
    0.5 * h * total
}

/// Doubles the panel count, starting at `start_panels`, until two successive
/// estimates agree to `rel_tol` (or differ by at most `abs_tol`).
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    start_panels: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let mut panels = start_panels.max(1);
    let mut prev = composite(f, lo, hi, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite(f, lo, hi, panels);
        if !next.is_finite() {
            return Err(Error::NonConvergence(format!(
                "quadrature on [{lo}, {hi}] produced a non-finite value"
            )));
        }
        let change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        // An integral that is identically zero never gets a meaningful relative change.
        if change <= rel_tol || (next - prev).abs() <= abs_tol.max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!(
        "quadrature on [{lo}, {hi}] after {MAX_PANELS} panels"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let (x, w) = gauss_legendre(ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for pair in x.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // degree 2*ORDER - 1 is exact on a single panel
        let f = |x: f64| x.powi(39) + 3.0 * x.powi(20) - x;
        let exact = 3.0 * 2.0 / 21.0;
        assert!((composite(&f, -1.0, 1.0, 1) - exact).abs() < 1e-13);
    }

    #[test]
    fn adaptive_converges_on_smooth_integrand() {
        let est = adaptive(&|x: f64| x.exp(), 0.0, 3.0, 1, 1e-13, 0.0).unwrap();
        assert!((est - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
