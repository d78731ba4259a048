use proptest::prelude::*;

use yamabe_lab::curvature::{codazzi_pair, pohozaev, ricci_components, sphere_volume};
use yamabe_lab::efcore::{self, energy, structural_constants, PhaseState};
use yamabe_lab::ellip::{self, PBranch};
use yamabe_lab::{period, Dimension, SystemKind};

fn dim(n: u32) -> Dimension {
    Dimension::new(n as i64).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_matches_scalar_on_solutions(n in 3u32..=10, frac in 0.01f64..0.99, idx in 0usize..256) {
        let kind = SystemKind::emden_fowler(dim(n));
        let c = frac * kind.c_max();
        let orbit = efcore::denormalize(dim(n), &efcore::integrate_orbit(kind, c, 1, 256).unwrap()).unwrap();
        let s = orbit.samples[idx];
        let upp = efcore::yamabe_acceleration(dim(n), s.w);
        let r = ricci_components(dim(n), s.w, s.wp, upp).unwrap();
        let target = (n * (n - 1)) as f64;
        prop_assert!((r.scalar - target).abs() < 1e-9 * target);
        prop_assert!(r.audit_passes());
    }

    #[test]
    fn weierstrass_scaling(s in 0.3f64..3.0, g3 in -0.25f64..0.25, x in 0.05f64..1.5) {
        let g2 = 4.0 / 3.0;
        let base = ellip::real_period(g2, g3).unwrap();
        let scaled = ellip::real_period(g2 * s.powi(4), g3 * s.powi(6)).unwrap();
        prop_assert!((scaled * s / base - 1.0).abs() < 1e-12);
        let (p, _) = ellip::weierstrass_p(x, g2, g3, PBranch::RealAxis).unwrap();
        let (ps, _) = ellip::weierstrass_p(x / s, g2 * s.powi(4), g3 * s.powi(6), PBranch::RealAxis).unwrap();
        prop_assert!((ps / (s * s * p) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn pohozaev_is_linear(n in 3u32..=12, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let cm = 1.0 / n as f64;
        let (x, y) = (a * cm * 0.5, b * cm * 0.5);
        let d = dim(n);
        let lhs = pohozaev(d, x + y).unwrap();
        let rhs = pohozaev(d, x).unwrap() + pohozaev(d, y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0));
    }

    #[test]
    fn codazzi_trace(n in 3u32..=12, tr in -5.0f64..5.0, psi in -0.5f64..2.0) {
        let (l, mu) = codazzi_pair(dim(n), tr, psi);
        let sum = l + (n - 1) as f64 * mu;
        prop_assert!((sum - tr).abs() <= 1e-12 * (1.0 + l.abs() + mu.abs() * n as f64));
    }

    #[test]
    fn energy_is_conserved(n in 3u32..=10, frac in 0.05f64..0.95) {
        let kind = SystemKind::emden_fowler(dim(n));
        let c = frac * kind.c_max();
        let orbit = efcore::integrate_orbit(kind, c, 2, 1024).unwrap();
        prop_assert!(!orbit.drift_exceeded);
        for s in orbit.samples.iter().step_by(97) {
            let e = energy(kind, PhaseState { t: s.t, w: s.w, wp: s.wp });
            prop_assert!((e - c).abs() < 1e-8);
        }
    }

    #[test]
    fn period_exceeds_linear_value(n in 3u32..=10, frac in 0.01f64..0.99) {
        let kind = SystemKind::emden_fowler(dim(n));
        let t = period::period(kind, frac * kind.c_max()).unwrap();
        prop_assert!(t > structural_constants(kind).t1 * structural_constants(kind).beta);
    }

    #[test]
    fn dn_pythagoras(x in -20.0f64..20.0, k in 0.0f64..0.9999) {
        let (sn, cn, dn) = ellip::jacobi(x, k).unwrap();
        prop_assert!((sn * sn + cn * cn - 1.0).abs() < 1e-13);
        prop_assert!((dn * dn + k * k * sn * sn - 1.0).abs() < 1e-13);
    }
}

#[test]
fn sphere_volumes() {
    use std::f64::consts::PI;
    assert!((sphere_volume(1) - 2.0 * PI).abs() < 1e-14);
    assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-14);
    assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-13);
    assert!((sphere_volume(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
}
