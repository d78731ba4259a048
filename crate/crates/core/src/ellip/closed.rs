use serde::{Deserialize, Serialize};

use super::functions::{
    jacobi, real_half_period, weierstrass_p, weierstrass_p_second, PBranch, MODULUS_LIMIT,
};
use crate::efcore::{structural_constants, Dimension, SystemKind};
use crate::error::{Error, Result};

/// Raw energy `c̄ = 2α²β²(c - 1/n)` of the u-equation: the centre maps to the
/// left end of the closed-orbit window, the homoclinic level to 0.
pub fn raw_energy(n: Dimension, c: f64) -> Result<f64> {
    let nf = n.as_f64();
    if !(0.0..=1.0 / nf).contains(&c) {
        return Err(Error::range("c", c, format!("[0, {}]", 1.0 / nf)));
    }
    let sc = structural_constants(SystemKind::emden_fowler(n));
    Ok(2.0 * sc.alpha * sc.alpha * sc.beta * sc.beta * (c - 1.0 / nf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ClosedFormVariant {
    /// `u(r) = scale · dn(r · time_scale, modulus)`.
    JacobiDn {
        modulus: f64,
        scale: f64,
        time_scale: f64,
    },
    /// `u(r) = offset - ℘(r; g2, g3)`.
    Weierstrass6 { g2: f64, g3: f64, offset: f64 },
    /// `u = v^{-1/2}` with `v = (℘(r; g2, g3) - 1/12)/c̄`.
    Weierstrass3 { g2: f64, g3: f64, cbar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub n: Dimension,
    pub c: f64,
    pub cbar: f64,
    #[serde(flatten)]
    pub variant: ClosedFormVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CurveClass {
    Elliptic { genus: u32 },
    Hyperelliptic { genus: u32, automorphic: bool },
}

impl CurveClass {
    pub fn genus(self) -> u32 {
        match self {
            CurveClass::Elliptic { genus } | CurveClass::Hyperelliptic { genus, .. } => genus,
        }
    }
}

/// Algebraic type of the first integral: elliptic only for n = 3, 4, 6.
pub fn curve_class(n: Dimension) -> CurveClass {
    match n.get() {
        3 | 4 | 6 => CurveClass::Elliptic { genus: 1 },
        m if m % 2 == 1 => CurveClass::Hyperelliptic {
            genus: (m - 1) / 2,
            automorphic: true,
        },
        m => CurveClass::Hyperelliptic {
            genus: m / 4,
            automorphic: true,
        },
    }
}

/// Exact solution descriptor of the orbit with normalized energy `c`.
pub fn closed_form(n: Dimension, c: f64) -> Result<ClosedForm> {
    let nf = n.as_f64();
    if !matches!(n.get(), 3 | 4 | 6) {
        return Err(Error::UnsupportedDimension {
            n: n.get(),
            genus: curve_class(n).genus(),
        });
    }
    if !(c > 0.0 && c < 1.0 / nf) {
        return Err(Error::range("c", c, format!("(0, {})", 1.0 / nf)));
    }
    let cbar = raw_energy(n, c)?;
    let variant = match n.get() {
        4 => {
            // (1 - k²)/(2 - k²)² = -c̄, root with 2 - k² ∈ (1, 2]
            let y = 2.0 / (1.0 + (1.0 + 4.0 * cbar).sqrt());
            let modulus = (2.0 - y).sqrt();
            if modulus > MODULUS_LIMIT {
                return Err(Error::range(
                    "modulus",
                    modulus,
                    format!("[0, {MODULUS_LIMIT}]"),
                ));
            }
            let s = 1.0 / y.sqrt();
            ClosedFormVariant::JacobiDn {
                modulus,
                scale: s,
                time_scale: s,
            }
        }
        6 => ClosedFormVariant::Weierstrass6 {
            g2: 4.0 / 3.0,
            g3: -8.0 / 27.0 - cbar,
            offset: 1.0 / 3.0,
        },
        _ => ClosedFormVariant::Weierstrass3 {
            g2: 1.0 / 12.0,
            g3: cbar * cbar - 1.0 / 216.0,
            cbar,
        },
    };
    Ok(ClosedForm {
        n,
        c,
        cbar,
        variant,
    })
}

/// `(u, u', u'')` of the closed form at `r`. Bounded profiles are phased so
/// that `r = 0` is the orbit maximum; `singular` selects the real-axis ℘
/// branch, which exists only for n = 6.
pub fn evaluate_closed_form_jet(
    form: &ClosedForm,
    r: f64,
    singular: bool,
) -> Result<(f64, f64, f64)> {
    match form.variant {
        ClosedFormVariant::JacobiDn {
            modulus: k,
            scale,
            time_scale,
        } => {
            if singular {
                return Err(Error::NoSingularBranch(form.n.get()));
            }
            let (sn, cn, dn) = jacobi(r * time_scale, k)?;
            let k2 = k * k;
            let ts2 = time_scale * time_scale;
            Ok((
                scale * dn,
                -scale * time_scale * k2 * sn * cn,
                -scale * ts2 * k2 * dn * (cn * cn - sn * sn),
            ))
        }
        ClosedFormVariant::Weierstrass6 { g2, g3, offset } => {
            let branch = if singular {
                PBranch::RealAxis
            } else {
                PBranch::Bounded
            };
            let (p, pp) = weierstrass_p(r, g2, g3, branch)?;
            Ok((offset - p, -pp, -weierstrass_p_second(p, g2)))
        }
        ClosedFormVariant::Weierstrass3 { g2, g3, cbar } => {
            if singular {
                return Err(Error::NoSingularBranch(form.n.get()));
            }
            let shift = real_half_period(g2, g3)?;
            let (p, pp) = weierstrass_p(r + shift, g2, g3, PBranch::Bounded)?;
            let v = (p - 1.0 / 12.0) / cbar;
            let vp = pp / cbar;
            let vpp = weierstrass_p_second(p, g2) / cbar;
            let u = v.powf(-0.5);
            let up = -0.5 * v.powf(-1.5) * vp;
            let upp = 0.75 * v.powf(-2.5) * vp * vp - 0.5 * v.powf(-1.5) * vpp;
            Ok((u, up, upp))
        }
    }
}

pub fn evaluate_closed_form(form: &ClosedForm, r: f64, singular: bool) -> Result<f64> {
    Ok(evaluate_closed_form_jet(form, r, singular)?.0)
}

/// Period of the closed-form profile in r (u-time).
pub fn closed_form_period(form: &ClosedForm) -> Result<f64> {
    match form.variant {
        ClosedFormVariant::JacobiDn {
            modulus,
            time_scale,
            ..
        } => Ok(2.0 * super::functions::elliptic_k(modulus)? / time_scale),
        ClosedFormVariant::Weierstrass6 { g2, g3, .. }
        | ClosedFormVariant::Weierstrass3 { g2, g3, .. } => super::functions::real_period(g2, g3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efcore::yamabe_acceleration;
    use approx::assert_relative_eq;

    fn dim(n: i64) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn raw_energy_window() {
        assert_relative_eq!(
            raw_energy(dim(4), 0.1).unwrap(),
            0.1 - 0.25,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            raw_energy(dim(4), 0.0).unwrap(),
            -0.25,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            raw_energy(dim(3), 0.0).unwrap(),
            -1.0 / (6.0 * 3f64.sqrt()),
            max_relative = 1e-12
        );
        for n in 3..=9 {
            assert_eq!(raw_energy(dim(n), 1.0 / n as f64).unwrap(), 0.0);
        }
        assert!(raw_energy(dim(4), 0.3).is_err());
    }

    #[test]
    fn closed_form_parameters() {
        let f = closed_form(dim(4), 0.09).unwrap();
        match f.variant {
            ClosedFormVariant::JacobiDn { modulus, scale, .. } => {
                assert_relative_eq!(modulus * modulus, 0.75, max_relative = 1e-14);
                assert_relative_eq!(scale, 1.0 / 1.25f64.sqrt(), max_relative = 1e-14);
            }
            _ => panic!("expected dn form"),
        }
        let f = closed_form(dim(6), 1.0 / 12.0).unwrap();
        match f.variant {
            ClosedFormVariant::Weierstrass6 { g2, g3, .. } => {
                assert_eq!(g2, 4.0 / 3.0);
                assert!(g3.abs() < 1e-15);
            }
            _ => panic!("expected ℘ form"),
        }
        // c̄ = -1/(12√3) corresponds to c = 1/6 at n = 3
        let f = closed_form(dim(3), 1.0 / 6.0).unwrap();
        match f.variant {
            ClosedFormVariant::Weierstrass3 { g3, cbar, .. } => {
                assert_relative_eq!(cbar, -1.0 / (12.0 * 3f64.sqrt()), max_relative = 1e-12);
                assert_relative_eq!(g3, -1.0 / 432.0, max_relative = 1e-12);
            }
            _ => panic!("expected ℘ form"),
        }
        assert!(matches!(
            closed_form(dim(5), 0.1),
            Err(Error::UnsupportedDimension { n: 5, genus: 2 })
        ));
        assert!(closed_form(dim(4), 0.0).is_err());
    }

    #[test]
    fn curve_classes() {
        assert_eq!(curve_class(dim(8)).genus(), 2);
        assert_eq!(curve_class(dim(10)).genus(), 2);
        assert_eq!(curve_class(dim(5)).genus(), 2);
        assert_eq!(curve_class(dim(7)).genus(), 3);
        assert_eq!(curve_class(dim(12)).genus(), 3);
        assert_eq!(curve_class(dim(4)), CurveClass::Elliptic { genus: 1 });
        assert!(matches!(
            curve_class(dim(9)),
            CurveClass::Hyperelliptic {
                automorphic: true,
                ..
            }
        ));
    }

    #[test]
    fn ode_residuals() {
        for (n, c) in [(3, 0.1), (4, 0.09), (6, 0.05), (3, 0.3), (6, 0.16)] {
            let d = dim(n);
            let f = closed_form(d, c).unwrap();
            let p = closed_form_period(&f).unwrap();
            for i in 0..100 {
                let r = p * i as f64 / 100.0;
                let (u, _, upp) = evaluate_closed_form_jet(&f, r, false).unwrap();
                assert!(u > 0.0);
                assert!(
                    (upp - yamabe_acceleration(d, u)).abs() < 1e-8,
                    "n={n} r={r}"
                );
            }
        }
    }

    #[test]
    fn bounded_profile_starts_at_maximum() {
        for (n, c) in [(3, 0.1), (4, 0.09), (6, 0.05)] {
            let d = dim(n);
            let f = closed_form(d, c).unwrap();
            let (u, up, _) = evaluate_closed_form_jet(&f, 0.0, false).unwrap();
            let kind = SystemKind::emden_fowler(d);
            let (_, b) = crate::efcore::turning_points(kind, c).unwrap();
            assert_relative_eq!(
                u,
                structural_constants(kind).alpha * b,
                max_relative = 1e-10
            );
            assert!(up.abs() < 1e-10);
        }
        let f = closed_form(dim(4), 0.09).unwrap();
        assert_relative_eq!(
            evaluate_closed_form(&f, 0.0, false).unwrap(),
            1.0 / 1.25f64.sqrt()
        );
    }

    #[test]
    fn singular_profiles() {
        let d = dim(6);
        let f = closed_form(d, 0.1).unwrap();
        let r = 1e-4;
        let u = evaluate_closed_form(&f, r, true).unwrap();
        assert!((r * r * u.abs() - 1.0).abs() < 1e-6);
        let (u, _, upp) = evaluate_closed_form_jet(&f, 0.3, true).unwrap();
        assert!(u < 0.0);
        assert!((upp - (4.0 * u - 6.0 * u * u)).abs() < 1e-8);
        assert!(matches!(
            evaluate_closed_form(&closed_form(dim(4), 0.1).unwrap(), 0.5, true),
            Err(Error::NoSingularBranch(4))
        ));
        assert!(matches!(
            evaluate_closed_form(&closed_form(dim(3), 0.1).unwrap(), 0.5, true),
            Err(Error::NoSingularBranch(3))
        ));
        assert!(matches!(
            evaluate_closed_form(&f, 0.0, true),
            Err(Error::Pole(_))
        ));
    }
}
