//! Period function `T(c)` of the normalized oscillator, its derivative via
//! the Chow–Wang integral, and the printed sufficiency criteria `H` and `Δ`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::efcore::{
    self, force, force_derivatives, pot, turning_points_at, EnergyLevel, SystemKind,
    DEGENERATE_ENERGY,
};
use crate::error::{Error, Result};
use crate::quad;

/// Default relative tolerance of the period quadrature.
pub const PERIOD_TOLERANCE: f64 = 1e-10;

/// Below this inner turning point the integral is split at the centre and the
/// inner half uses `w = a cosh s`.
const DEEP_INNER_POINT: f64 = 0.1;

/// Orbits whose offsets from the centre stay below this use the series form
/// of the potential difference.
const SERIES_AMPLITUDE: f64 = 0.1;
const SERIES_TERMS: usize = 32;

/// Half-width of the series patch for the Chow–Wang bracket.
const BRACKET_PATCH: f64 = 1e-3;

/// Relative margin used to call a grid "strictly increasing".
const STRICT_MARGIN: f64 = 1e-12;

fn check_energy(kind: SystemKind, c: f64, allow_zero: bool) -> Result<()> {
    let c_max = kind.c_max();
    let lower_ok = if allow_zero { c >= 0.0 } else { c > 0.0 };
    if !(lower_ok && c < c_max - DEGENERATE_ENERGY) {
        let open = if allow_zero { "[" } else { "(" };
        return Err(Error::range("c", c, format!("{open}0, {c_max})")));
    }
    Ok(())
}

/// Normalized-time period of the orbit with energy `c`.
pub fn period(kind: SystemKind, c: f64) -> Result<f64> {
    period_with_tolerance(kind, c, PERIOD_TOLERANCE)
}

pub fn period_with_tolerance(kind: SystemKind, c: f64, tol: f64) -> Result<f64> {
    check_energy(kind, c, true)?;
    if c <= DEGENERATE_ENERGY {
        return Ok(kind.linear_period());
    }
    period_at(kind, EnergyLevel::from_energy(kind, c), tol)
}

/// Period at an arbitrary level, including levels exponentially close to
/// the separatrix.
pub fn period_at(kind: SystemKind, level: EnergyLevel, tol: f64) -> Result<f64> {
    if level.c <= DEGENERATE_ENERGY {
        return Ok(kind.linear_period());
    }
    Ok(SQRT_2 * orbit_integral(kind, level, &|_| 1.0, tol, 0.0)?)
}

/// Period evaluated with a fixed number of panels in the regular regime
/// (no adaptivity). Used to audit quadrature convergence.
pub fn period_fixed_panels(kind: SystemKind, c: f64, panels: usize) -> Result<f64> {
    check_energy(kind, c, false)?;
    let level = EnergyLevel::from_energy(kind, c);
    let (a, b) = turning_points_at(kind, level)?;
    let f = regular_integrand(kind, a, b, &|_| 1.0);
    Ok(SQRT_2 * quad::composite(&f, 0.0, FRAC_PI_2, panels))
}

fn regular_integrand<'a, W: Fn(f64) -> f64>(
    kind: SystemKind,
    a: f64,
    b: f64,
    weight: &'a W,
) -> impl Fn(f64) -> f64 + 'a {
    let (xa, xb) = (a - 1.0, b - 1.0);
    let small = xa.abs().max(xb.abs()) < SERIES_AMPLITUDE;
    move |theta: f64| {
        let (s, c) = theta.sin_cos();
        // keep the offset accurate at whichever endpoint is closer
        let (p, d) = if theta < 0.25 * std::f64::consts::PI {
            (xa, (xb - xa) * s * s)
        } else {
            (xb, -(xb - xa) * c * c)
        };
        let x = p + d;
        let gap = if small {
            drop_series(kind, p, d)
        } else {
            drop_from(kind, 1.0 + p, d)
        };
        if gap <= 0.0 {
            return 0.0;
        }
        weight(1.0 + x) * 2.0 * (b - a) * s * c / gap.sqrt()
    }
}

/// `V(1+p) - V(1+p+d)` from the Taylor series of the potential about the
/// centre, written as `-d` times an exact divided difference so that
/// nothing cancels for small amplitudes.
fn drop_series(kind: SystemKind, p: f64, d: f64) -> f64 {
    let x = p + d;
    let q = kind.q();
    let mut coef = q;
    let mut pm = 1.0;
    let mut h = 1.0;
    let mut sum = 0.0;
    for k in 2..=SERIES_TERMS {
        coef *= (q - (k - 1) as f64) / k as f64;
        pm *= p;
        h = x * h + pm;
        sum += coef / q * h;
    }
    -kind.sign() * (sum - 0.5 * (p + x)) * d
}

/// `V(p) - V(p + d)` evaluated without cancellation for small offsets `d`;
/// equals `c - V(p + d)` when `p` is a turning point of level `c`.
fn drop_from(kind: SystemKind, p: f64, d: f64) -> f64 {
    let q = kind.q();
    kind.sign() * (-p.powf(q) * (q * (d / p).ln_1p()).exp_m1() / q + 0.5 * d * (2.0 * p + d))
}

/// `∫_a^b weight(w) / sqrt(c - V(w)) dw` over one half-oscillation.
fn orbit_integral<W: Fn(f64) -> f64>(
    kind: SystemKind,
    level: EnergyLevel,
    weight: &W,
    tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let (a, b) = turning_points_at(kind, level)?;
    if a >= DEEP_INNER_POINT {
        let f = regular_integrand(kind, a, b, weight);
        return quad::adaptive(&f, 0.0, FRAC_PI_2, 4, tol, abs_tol);
    }

    // inner half: w = a cosh s, s in [0, acosh(1/a)]
    let q = kind.q();
    let sign = kind.sign();
    let s_max = (1.0 / a).acosh();
    let inner = |s: f64| {
        let w = a * s.cosh();
        let sh = s.sinh();
        // D(w) - D(a), with D = -sign (w^q/q - w^2/2)
        let power_part = if s < 1.0 {
            a.powf(q) / q * (q * (2.0 * (0.5 * s).sinh().powi(2)).ln_1p()).exp_m1()
        } else {
            (w.powf(q) - a.powf(q)) / q
        };
        let gap = -sign * (power_part - 0.5 * a * a * sh * sh);
        if gap <= 0.0 {
            return 0.0;
        }
        weight(w) * a * sh / gap.sqrt()
    };
    let start = (s_max.ceil() as usize).max(4);
    let left = quad::adaptive(&inner, 0.0, s_max, start, tol, abs_tol)?;

    // outer half: w = b - (b-1)(1 - cos psi), psi in [0, pi/2]
    let outer = |psi: f64| {
        let h = (0.5 * psi).sin();
        let d = -(b - 1.0) * 2.0 * h * h;
        let w = b + d;
        let gap = drop_from(kind, b, d);
        if gap <= 0.0 {
            return 0.0;
        }
        weight(w) * (b - 1.0) * psi.sin() / gap.sqrt()
    };
    let right = quad::adaptive(&outer, 0.0, FRAC_PI_2, 4, tol, abs_tol)?;
    Ok(left + right)
}

/// Chow–Wang bracket `1 - 2 V g' / g^2`, patched by its quadratic series
/// near the centre where numerator and denominator both vanish.
fn bracket(kind: SystemKind, w: f64, series: (f64, f64)) -> f64 {
    let x = w - 1.0;
    if x.abs() < BRACKET_PATCH {
        return series.0 * x + series.1 * x * x;
    }
    let g = force(kind, w);
    let (g1, _, _) = force_derivatives(kind, w);
    1.0 - 2.0 * pot(kind, w) * g1 / (g * g)
}

fn bracket_series(kind: SystemKind) -> (f64, f64) {
    let (k1, k2, k3) = force_derivatives(kind, 1.0);
    (
        -k2 / (3.0 * k1),
        k2 * k2 / (4.0 * k1 * k1) - k3 / (4.0 * k1),
    )
}

/// `T'(c) = (1 / (sqrt(2) c)) ∫_a^b (g^2 - 2 V g') / (g^2 sqrt(c - V)) dw`.
pub fn period_derivative(kind: SystemKind, c: f64) -> Result<f64> {
    period_derivative_with_tolerance(kind, c, PERIOD_TOLERANCE)
}

pub fn period_derivative_with_tolerance(kind: SystemKind, c: f64, tol: f64) -> Result<f64> {
    check_energy(kind, c, false)?;
    period_derivative_at(kind, EnergyLevel::from_energy(kind, c), tol)
}

pub fn period_derivative_at(kind: SystemKind, level: EnergyLevel, tol: f64) -> Result<f64> {
    let series = bracket_series(kind);
    // absolute floor so the isochronous case (integral ~ 0) terminates
    let scale = orbit_integral(kind, level, &|_| 1.0, tol, 0.0)?;
    let integral = orbit_integral(
        kind,
        level,
        &|w| bracket(kind, w, series),
        tol,
        1e-2 * tol * scale,
    )?;
    Ok(integral / (SQRT_2 * level.c))
}

fn check_shifted(kind: SystemKind, x: f64) -> Result<()> {
    let b0 = efcore::structural_constants(kind).b0;
    if !(x > -1.0 && x < b0 - 1.0) {
        return Err(Error::domain("x", x, format!("(-1, {})", b0 - 1.0)));
    }
    Ok(())
}

/// `H(x) = g^2 - 2 V g' + g''(1) / (3 g'(1)^2) g^3` in centre-shifted coordinates.
pub fn chow_wang_h(kind: SystemKind, x: f64) -> Result<f64> {
    check_shifted(kind, x)?;
    let w = 1.0 + x;
    let (k1, k2, _) = force_derivatives(kind, 1.0);
    let g = force(kind, w);
    let (g1, _, _) = force_derivatives(kind, w);
    Ok(g * g - 2.0 * pot(kind, w) * g1 + k2 / (3.0 * k1 * k1) * g * g * g)
}

/// `Δ(x) = (x - 1)[g'(x) g''(1) - g'(1) g''(x)]` (unshifted `x`).
pub fn delta_criterion(kind: SystemKind, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("x", x, "(0, inf)"));
    }
    let (k1, k2, _) = force_derivatives(kind, 1.0);
    let (g1, g2, _) = force_derivatives(kind, x);
    Ok((x - 1.0) * (g1 * k2 - k1 * g2))
}

/// The simplified closed expression printed for the Derdzinski `Δ(f)`:
/// `(f-1)(4/n)(1-4/n)[1 - f^{4/n} + (4/n)(f^{-4/n} - f^{-1-4/n})]`.
///
/// Kept for comparison with [`delta_criterion`]; the two disagree in sign
/// for some `f` (e.g. n = 8, f = 2).
pub fn derdzinski_delta_printed(n: crate::Dimension, f: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::domain("f", f, "(0, inf)"));
    }
    let e = 4.0 / n.as_f64();
    Ok((f - 1.0) * e * (1.0 - e) * (1.0 - f.powf(e) + e * (f.powf(-e) - f.powf(-1.0 - e))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodSample {
    pub c: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "Tprime")]
    pub t_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub kind: SystemKind,
    pub grid: Vec<PeriodSample>,
    pub strictly_increasing: bool,
    pub min_t_prime: f64,
}

/// Uniform interior grid `c_i = c_max i / (N + 1)`, i = 1..N.
pub fn monotonicity_report(kind: SystemKind, grid_size: usize) -> Result<MonotonicityReport> {
    if grid_size < 8 {
        return Err(Error::range("grid_size", grid_size as f64, "[8, inf)"));
    }
    let c_max = kind.c_max();
    let grid = (1..=grid_size)
        .into_par_iter()
        .map(|i| {
            let c = c_max * i as f64 / (grid_size + 1) as f64;
            Ok(PeriodSample {
                c,
                t: period(kind, c)?,
                t_prime: period_derivative(kind, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_increasing = grid
        .windows(2)
        .all(|p| p[1].t - p[0].t > STRICT_MARGIN * p[0].t);
    let min_t_prime = grid.iter().map(|p| p.t_prime).fold(f64::INFINITY, f64::min);
    Ok(MonotonicityReport {
        kind,
        grid,
        strictly_increasing,
        min_t_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Dimension;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ef(n: i64) -> SystemKind {
        SystemKind::ef(n).unwrap()
    }

    #[test]
    fn linear_limit() {
        assert_relative_eq!(
            period(ef(4), 0.0).unwrap(),
            PI * SQRT_2,
            max_relative = 1e-15
        );
        for n in 3..=10 {
            let k = ef(n);
            let t = period(k, 1e-8).unwrap();
            assert_relative_eq!(t, k.linear_period(), max_relative = 1e-6);
        }
    }

    #[test]
    fn n4_value() {
        // 2 K(m) sqrt(2 - m^2), m^2 = 0.75, evaluated independently
        assert_relative_eq!(
            period(ef(4), 0.09).unwrap(),
            4.822_115_582_351_18,
            max_relative = 1e-11
        );
    }

    #[test]
    fn derdzinski_four_is_isochronous() {
        let k = SystemKind::dz(4).unwrap();
        for &c in &[0.05, 0.2, 0.45] {
            assert_relative_eq!(period(k, c).unwrap(), 2.0 * PI, max_relative = 1e-12);
        }
        assert!(period_derivative(k, 0.1).unwrap().abs() < 1e-8);
    }

    #[test]
    fn range_errors() {
        assert!(period(ef(4), 0.25).is_err());
        assert!(period(ef(4), -0.01).is_err());
        assert!(period_derivative(ef(4), 0.0).is_err());
    }

    #[test]
    fn divergence_toward_separatrix() {
        for n in [3, 4, 6, 8] {
            let k = ef(n);
            let mut prev = 0.0;
            for e in 2..=6 {
                let c = k.c_max() * (1.0 - 10f64.powi(-e));
                let t = period(k, c).unwrap();
                assert!(t > prev, "n={n} k={e}");
                prev = t;
            }
        }
    }

    #[test]
    fn deep_and_regular_regimes_agree_at_the_switch() {
        let k = ef(4);
        // a = 0.1 exactly at depth(0.1)
        let c = pot(k, DEEP_INNER_POINT);
        let lo = period(k, c * (1.0 - 1e-9)).unwrap();
        let hi = period(k, c * (1.0 + 1e-9)).unwrap();
        assert!((hi - lo).abs() < 1e-7);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let k = ef(4);
        let c = 0.09;
        let h = 1e-6;
        let fd = (period(k, c + h).unwrap() - period(k, c - h).unwrap()) / (2.0 * h);
        let d = period_derivative(k, c).unwrap();
        assert!(d > 0.0);
        assert_relative_eq!(d, fd, max_relative = 1e-4);
        assert!(period_derivative(ef(3), 0.1).unwrap() > 0.0);
    }

    #[test]
    fn chow_wang_h_examples() {
        for n in 3..=10 {
            assert_eq!(chow_wang_h(ef(n), 0.0).unwrap(), 0.0);
        }
        for &x in &[-0.3, -0.2, 0.2, 0.3] {
            assert!(chow_wang_h(ef(4), x).unwrap() > 0.0, "x = {x}");
        }
        assert!(chow_wang_h(ef(6), 0.25).unwrap() > 0.0);
        assert!(chow_wang_h(ef(4), -1.0).is_err());
        assert!(chow_wang_h(ef(4), 0.5).is_err());
    }

    #[test]
    fn chow_wang_h_frozen_values() {
        // direct evaluation: g = w^3 - w, V = (w^2-1)^2/4, g' = 3w^2 - 1, coefficient 1/2
        let oracle = |w: f64| {
            let g = w * w * w - w;
            let v = (w * w - 1.0).powi(2) / 4.0;
            g * g - 2.0 * v * (3.0 * w * w - 1.0) + 0.5 * g * g * g
        };
        for &x in &[-0.3, -0.2, 0.2, 0.3] {
            assert_relative_eq!(
                chow_wang_h(ef(4), x).unwrap(),
                oracle(1.0 + x),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn delta_examples() {
        let k = ef(4);
        assert_eq!(delta_criterion(k, 1.0).unwrap(), 0.0);
        assert_relative_eq!(delta_criterion(k, 2.0).unwrap(), 42.0, max_relative = 1e-14);
        assert_relative_eq!(delta_criterion(k, 0.5).unwrap(), 3.75, max_relative = 1e-14);
        assert!(delta_criterion(k, 0.0).is_err());
        for &x in &[0.3, 0.7, 1.3, 2.5] {
            let simplified = 6.0 * (x - 1.0f64).powi(2) * (3.0 * x + 1.0);
            assert_relative_eq!(
                delta_criterion(k, x).unwrap(),
                simplified,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn derdzinski_delta_forms_disagree_in_sign() {
        let n8 = Dimension::new(8).unwrap();
        let k = SystemKind::derdzinski(n8);
        assert!(delta_criterion(k, 2.0).unwrap() > 0.0);
        assert!(derdzinski_delta_printed(n8, 2.0).unwrap() < 0.0);
    }

    #[test]
    fn monotonicity_reports() {
        let r = monotonicity_report(ef(4), 50).unwrap();
        assert!(r.strictly_increasing);
        assert!(r.min_t_prime > 0.0);
        assert_eq!(r.grid.len(), 50);
        assert!(r.grid.windows(2).all(|p| p[0].c < p[1].c));

        let r = monotonicity_report(SystemKind::dz(4).unwrap(), 50).unwrap();
        assert!(!r.strictly_increasing);
        assert!(r.min_t_prime.abs() < 1e-8);

        assert!(monotonicity_report(ef(3), 50).unwrap().strictly_increasing);
        assert!(monotonicity_report(ef(4), 4).is_err());
    }

    #[test]
    fn panel_doubling_is_converged() {
        let k = ef(5);
        for frac in [0.1, 0.5, 0.9] {
            let c = frac * k.c_max();
            let t = period(k, c).unwrap();
            let mut panels = 4;
            while (period_fixed_panels(k, c, panels).unwrap() - t).abs() > 1e-12 * t {
                panels *= 2;
                assert!(panels < 1 << 12);
            }
            let doubled = period_fixed_panels(k, c, 2 * panels).unwrap();
            assert!((doubled - t).abs() < 1e-10 * t);
        }
    }
}
