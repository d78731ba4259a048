use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moduli closer to 1 than this are rejected instead of extrapolated.
pub const MODULUS_LIMIT: f64 = 1.0 - 1e-10;

/// Evaluation points closer than this to a lattice pole are rejected.
pub const POLE_GUARD: f64 = 1e-12;

/// Arithmetic–geometric mean, iterated until the two means stop moving.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let next = (0.5 * (a + b), (a * b).sqrt());
        if next.0 == a && next.1 == b {
            break;
        }
        (a, b) = next;
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind, `k` the modulus.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::range("k", k, "[0, 1)"));
    }
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    Ok(PI / (2.0 * agm(1.0, kp)))
}

/// `(sn, cn, dn)` of modulus `k ∈ [0, 1]` by the descending Landen/AGM scale.
pub fn jacobi(x: f64, k: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::range("k", k, "[0, 1]"));
    }
    if k == 0.0 {
        let (s, c) = x.sin_cos();
        return Ok((s, c, 1.0));
    }
    if k == 1.0 {
        let sech = 1.0 / x.cosh();
        return Ok((x.tanh(), sech, sech));
    }
    // reduce modulo the real period 4K
    let four_k = 4.0 * elliptic_k(k)?;
    let x = x - four_k * (x / four_k).round();

    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    let mut a = 1.0;
    let mut b = kp;
    let mut ratios = Vec::with_capacity(16);
    let mut scale = 1.0;
    for _ in 0..32 {
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        scale *= 2.0;
        ratios.push(c / a);
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    let mut phi = scale * a * x;
    for r in ratios.iter().rev() {
        phi = 0.5 * (phi + (r * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn² = k'² + k² cn² has no cancellation, unlike 1 - k² sn²
    let dn = (kp * kp + k * k * cn * cn).sqrt();
    Ok((sn, cn, dn))
}

pub fn jacobi_dn(x: f64, k: f64) -> Result<f64> {
    Ok(jacobi(x, k)?.2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PBranch {
    /// `℘ ≥ e1`, pole at the origin.
    RealAxis,
    /// `℘ ∈ [e3, e2]`, the real line shifted by the imaginary half-period.
    Bounded,
}

/// Real roots `e1 > e2 > e3` of `4t^3 - g2 t - g3`.
pub fn cubic_roots(g2: f64, g3: f64) -> Result<(f64, f64, f64)> {
    let disc = g2 * g2 * g2 - 27.0 * g3 * g3;
    let scale = (g2 * g2 * g2).abs().max(27.0 * g3 * g3);
    if !(disc > 1e-14 * scale) {
        return Err(Error::DegenerateDiscriminant(disc));
    }
    // t^3 + p t + q with p = -g2/4, q = -g3/4
    let r = (g2 / 12.0).sqrt();
    let cos3 = (g3 / 4.0 / (2.0 * r * r * r)).clamp(-1.0, 1.0);
    let theta = cos3.acos() / 3.0;
    let mut e = [
        2.0 * r * theta.cos(),
        2.0 * r * (theta - 2.0 * PI / 3.0).cos(),
        2.0 * r * (theta + 2.0 * PI / 3.0).cos(),
    ];
    for t in &mut e {
        for _ in 0..3 {
            let f = 4.0 * *t * *t * *t - g2 * *t - g3;
            let d = 12.0 * *t * *t - g2;
            if d != 0.0 {
                *t -= f / d;
            }
        }
    }
    e.sort_by(|a, b| b.total_cmp(a));
    Ok((e[0], e[1], e[2]))
}

/// Lattice data shared by the ℘ evaluations.
#[derive(Debug, Clone, Copy)]
struct Lattice {
    e1: f64,
    e2: f64,
    e3: f64,
    k: f64,
    rate: f64,
    omega1: f64,
}

fn lattice(g2: f64, g3: f64) -> Result<Lattice> {
    let (e1, e2, e3) = cubic_roots(g2, g3)?;
    let k = ((e2 - e3) / (e1 - e3)).sqrt();
    if k > MODULUS_LIMIT {
        return Err(Error::range("modulus", k, format!("[0, {MODULUS_LIMIT}]")));
    }
    let rate = (e1 - e3).sqrt();
    Ok(Lattice {
        e1,
        e2,
        e3,
        k,
        rate,
        omega1: elliptic_k(k)? / rate,
    })
}

/// `(℘(x), ℘'(x))` on the chosen real branch.
pub fn weierstrass_p(x: f64, g2: f64, g3: f64, branch: PBranch) -> Result<(f64, f64)> {
    let l = lattice(g2, g3)?;
    let (sn, cn, dn) = jacobi(l.rate * x, l.k)?;
    match branch {
        PBranch::RealAxis => {
            let period = 2.0 * l.omega1;
            let reduced = x - period * (x / period).round();
            if reduced.abs() < POLE_GUARD {
                return Err(Error::Pole(x));
            }
            let d = l.e1 - l.e3;
            Ok((
                l.e3 + d / (sn * sn),
                -2.0 * d * l.rate * cn * dn / (sn * sn * sn),
            ))
        }
        PBranch::Bounded => {
            let d = l.e2 - l.e3;
            Ok((l.e3 + d * sn * sn, 2.0 * d * l.rate * sn * cn * dn))
        }
    }
}

/// `℘'' = 6℘² - g2/2`.
pub fn weierstrass_p_second(p: f64, g2: f64) -> f64 {
    6.0 * p * p - 0.5 * g2
}

/// Real period `2ω1 = 2K(k)/√(e1 - e3)`.
pub fn real_period(g2: f64, g3: f64) -> Result<f64> {
    Ok(2.0 * lattice(g2, g3)?.omega1)
}

/// Real half-period `ω1`.
pub fn real_half_period(g2: f64, g3: f64) -> Result<f64> {
    Ok(lattice(g2, g3)?.omega1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn complete_integral() {
        assert_eq!(elliptic_k(0.0).unwrap(), FRAC_PI_2);
        assert_relative_eq!(
            elliptic_k(std::f64::consts::FRAC_1_SQRT_2).unwrap(),
            1.854_074_677_301_372,
            max_relative = 1e-15
        );
        assert!(elliptic_k(1.0 - 1e-12).unwrap() > 14.0);
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(-0.1).is_err());
    }

    #[test]
    fn dn_values() {
        assert_eq!(jacobi_dn(0.0, 0.6).unwrap(), 1.0);
        for x in [-3.0, 0.2, 7.5] {
            assert_eq!(jacobi_dn(x, 0.0).unwrap(), 1.0);
        }
        let k = 0.75f64.sqrt();
        let kk = elliptic_k(k).unwrap();
        assert_relative_eq!(jacobi_dn(kk, k).unwrap(), 0.5, max_relative = 1e-14);
        assert!(jacobi_dn(0.1, 1.1).is_err());
    }

    #[test]
    fn jacobi_reference_values() {
        // independent high-precision values for k^2 = 0.5, x = 0.8
        let (sn, cn, dn) = jacobi(0.8, 0.5f64.sqrt()).unwrap();
        assert_relative_eq!(sn, 0.690_934_850_866_438_8, max_relative = 1e-13);
        assert_relative_eq!(cn, 0.722_917_029_719_297_8, max_relative = 1e-13);
        assert_relative_eq!(dn, 0.872_527_659_119_804_6, max_relative = 1e-13);
    }

    #[test]
    fn lemniscatic_roots_and_period() {
        let (e1, e2, e3) = cubic_roots(4.0 / 3.0, 0.0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_relative_eq!(e1, s, max_relative = 1e-15);
        assert!(e2.abs() < 1e-15);
        assert_relative_eq!(e3, -s, max_relative = 1e-15);
        assert_relative_eq!(
            real_half_period(4.0 / 3.0, 0.0).unwrap(),
            1.725_410_903_834_814,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            real_period(4.0 / 3.0, 0.0).unwrap(),
            3.450_821_807_669_628,
            max_relative = 1e-14
        );
    }

    #[test]
    fn degenerate_lattices() {
        assert!(matches!(
            cubic_roots(4.0 / 3.0, -8.0 / 27.0),
            Err(Error::DegenerateDiscriminant(_))
        ));
        // approaching the root collision the period grows
        let p1 = real_period(4.0 / 3.0, -8.0 / 27.0 + 1e-4).unwrap();
        let p2 = real_period(4.0 / 3.0, -8.0 / 27.0 + 1e-8).unwrap();
        assert!(p2 > p1);
    }

    #[test]
    fn pole_and_laurent() {
        let (p, _) = weierstrass_p(1e-4, 4.0 / 3.0, 0.1, PBranch::RealAxis).unwrap();
        assert!((p * 1e-8 - 1.0).abs() < 1e-6);
        assert!(matches!(
            weierstrass_p(0.0, 4.0 / 3.0, 0.1, PBranch::RealAxis),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn bounded_branch_range() {
        let (g2, g3) = (4.0 / 3.0, -0.1);
        let (_, e2, e3) = cubic_roots(g2, g3).unwrap();
        for i in 0..50 {
            let (p, _) = weierstrass_p(0.1 * i as f64, g2, g3, PBranch::Bounded).unwrap();
            assert!(p >= e3 - 1e-14 && p <= e2 + 1e-14);
        }
    }
}
