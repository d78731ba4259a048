use serde::{Deserialize, Serialize};

use crate::efcore::{
    force, structural_constants, turning_points_at, Dimension, EnergyLevel, SystemKind,
};
use crate::error::{Error, Result};
use crate::period::{period_at, PERIOD_TOLERANCE};

/// Bounds of the singular solution `u(r) = r^{(2-n)/2} v(ln(1/r))`:
/// `r^{(n-2)/2} u ≤ C_n` and `r^{n/2} |u'| ≤ C_n'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateBounds {
    pub n: Dimension,
    pub c: f64,
    #[serde(rename = "C_n")]
    pub c_n: f64,
    #[serde(rename = "C_n_prime")]
    pub c_n_prime: f64,
    /// u-time period of `v` (infinite on the homoclinic level).
    #[serde(rename = "T")]
    pub period: f64,
}

/// `C_n = α b(c)` and `C_n' = max |β v + v'|` over the orbit.
///
/// The second maximum is located exactly: on the orbit `w'^2/2 + V(w) = c`,
/// `w + w'` is extremal where `w' = g(w)`, i.e. at the roots of
/// `g(w)^2/2 - (c - V(w))` on either side of the centre.
pub fn estimate_bounds(n: Dimension, c: f64) -> Result<EstimateBounds> {
    let kind = SystemKind::emden_fowler(n);
    let sc = structural_constants(kind);
    let c_max = kind.c_max();
    if !(c > 0.0 && c <= c_max) {
        return Err(Error::range("c", c, format!("(0, {c_max}]")));
    }
    let scale = sc.alpha * sc.beta;

    if c == c_max {
        // v = (cosh t)^{-β}: |βv + v'| = β sech^β (1 - tanh), maximal at tanh = -1/(β+1)
        let beta = sc.beta;
        let tau = -1.0 / (beta + 1.0);
        return Ok(EstimateBounds {
            n,
            c,
            c_n: sc.alpha * sc.b0,
            c_n_prime: beta * (1.0 - tau * tau).powf(0.5 * beta) * (1.0 - tau),
            period: f64::INFINITY,
        });
    }

    let level = EnergyLevel::from_energy(kind, c);
    let (a, b) = turning_points_at(kind, level)?;
    let phi = |w: f64| {
        let g = force(kind, w);
        0.5 * g * g - level.gap(kind, w)
    };
    let mut best: f64 = 0.0;
    for (lo, hi) in [(a, 1.0), (1.0, b)] {
        let w = bisect(&phi, lo, hi);
        best = best.max((w + force(kind, w)).abs());
    }
    Ok(EstimateBounds {
        n,
        c,
        c_n: sc.alpha * b,
        c_n_prime: scale * best,
        period: period_at(kind, level, PERIOD_TOLERANCE)? / sc.beta,
    })
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
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
