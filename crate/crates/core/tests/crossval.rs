use std::f64::consts::PI;

use approx::assert_relative_eq;
use yamabe_lab::census::{self, branch_orbit, count_metrics, solve_branches};
use yamabe_lab::efcore::{self, structural_constants};
use yamabe_lab::ellip::{self, ClosedFormVariant, PBranch};
use yamabe_lab::{period, Dimension, SystemKind};

fn dim(n: u32) -> Dimension {
    Dimension::new(n as i64).unwrap()
}

fn ef(n: u32) -> SystemKind {
    SystemKind::emden_fowler(dim(n))
}

#[test]
fn laurent_remainder_is_eighth_order() {
    let (g2, g3) = (4.0 / 3.0, 0.1);
    let rem = |x: f64| {
        let (p, _) = ellip::weierstrass_p(x, g2, g3, PBranch::RealAxis).unwrap();
        p - 1.0 / (x * x) - g2 / 20.0 * x * x - g3 / 28.0 * x.powi(4)
    };
    let (r1, r2) = (rem(0.2), rem(0.1));
    assert!((r1 / r2 / 64.0 - 1.0).abs() < 1e-2, "ratio {}", r1 / r2);
    // leading coefficient of x^6
    assert_relative_eq!(r2 / 1e-6, g2 * g2 / 1200.0, max_relative = 2e-2);
}

#[test]
fn n4_period_is_elliptic() {
    for c in [0.01, 0.05, 0.09, 0.2] {
        let form = ellip::closed_form(dim(4), c).unwrap();
        let ClosedFormVariant::JacobiDn { modulus: k, .. } = form.variant else {
            panic!("n = 4 closed form is dn")
        };
        let closed = 2.0 * ellip::elliptic_k(k).unwrap() * (2.0 - k * k).sqrt();
        assert!((period::period(ef(4), c).unwrap() - closed).abs() < 1e-8);
    }
}

#[test]
fn closed_forms_match_integrator() {
    for n in [3, 4, 6] {
        let kind = ef(n);
        for frac in [0.05, 0.3, 0.6, 0.95] {
            let c = frac * kind.c_max();
            let form = ellip::closed_form(dim(n), c).unwrap();
            let beta = structural_constants(kind).beta;
            assert_relative_eq!(
                ellip::closed_form_period(&form).unwrap(),
                period::period(kind, c).unwrap() / beta,
                max_relative = 1e-10
            );
            let orbit =
                efcore::denormalize(dim(n), &efcore::integrate_orbit(kind, c, 1, 4096).unwrap())
                    .unwrap();
            let worst = orbit
                .samples
                .iter()
                .map(|s| {
                    let (u, up, _) = ellip::evaluate_closed_form_jet(&form, s.t, false).unwrap();
                    (u - s.w).abs().max((up - s.wp).abs())
                })
                .fold(0.0, f64::max);
            assert!(worst < 1e-7, "n = {n}, c = {c}: {worst}");
        }
    }
}

#[test]
fn census_is_self_consistent() {
    for n in 3..=8 {
        let t1 = structural_constants(ef(n)).t1;
        for i in 1..=40 {
            let t = 0.5 * i as f64 * t1;
            let branches = solve_branches(dim(n), t).unwrap();
            assert_eq!(branches.len() as u32, count_metrics(dim(n), t).unwrap());
            assert!(branches[0].is_trivial());
            for pair in branches[1..].windows(2) {
                assert!(pair[0].c >= pair[1].c && pair[0].deficit < pair[1].deficit);
            }
        }
    }
}

#[test]
fn branches_collapse_at_thresholds() {
    for n in [3, 4, 6] {
        let periods = census::bifurcation_periods(dim(n), 4).unwrap();
        for (i, &tk) in periods.iter().enumerate() {
            let k = i + 1;
            let just_above = solve_branches(dim(n), tk * (1.0 + 1e-10)).unwrap();
            assert_eq!(just_above.len(), k + 1);
            assert_eq!(just_above[k].j, k as u32);
            assert!(just_above[k].c < 1e-6);
            assert_eq!(solve_branches(dim(n), tk * (1.0 - 1e-10)).unwrap().len(), k);
        }
    }
}

#[test]
fn branch_orbits_close() {
    // j = 1 here sits within 1e-11 of the separatrix
    for b in solve_branches(dim(5), 20.0).unwrap() {
        let o = branch_orbit(&b, 4096).unwrap();
        let (first, last) = (o.samples[0], *o.samples.last().unwrap());
        assert_relative_eq!(o.duration(), 20.0, max_relative = 1e-12);
        assert!((first.w - last.w).abs() < 1e-6 && (first.wp - last.wp).abs() < 1e-6);
        assert!(o.seam_error < 1e-9);
        assert!(!o.drift_exceeded);
    }
}

#[test]
fn bounds_hold_on_sampled_orbits() {
    for n in [3, 4, 5, 6, 8] {
        let kind = ef(n);
        let beta = structural_constants(kind).beta;
        for frac in [0.1, 0.5, 0.9] {
            let c = frac * kind.c_max();
            let b = ellip::estimate_bounds(dim(n), c).unwrap();
            let o =
                efcore::denormalize(dim(n), &efcore::integrate_orbit(kind, c, 1, 8192).unwrap())
                    .unwrap();
            let (mut vmax, mut dmax) = (0.0f64, 0.0f64);
            for s in &o.samples {
                vmax = vmax.max(s.w);
                dmax = dmax.max((beta * s.w + s.wp).abs());
            }
            assert!(vmax <= b.c_n * (1.0 + 1e-12) && b.c_n - vmax < 1e-9);
            assert!(dmax <= b.c_n_prime * (1.0 + 1e-9) && b.c_n_prime - dmax < 1e-5);
        }
    }
}

#[test]
fn derdzinski_census_examples() {
    let r = census::derdzinski_census(dim(8), 1.0, 42.0, 10.0).unwrap();
    assert_eq!(r.k, 2);
    assert_relative_eq!(r.norm.alpha_d, 2304.0, max_relative = 1e-14);
    assert_relative_eq!(r.norm.beta_d, 2f64.sqrt(), max_relative = 1e-15);
    let threshold = r.norm.threshold();
    assert_relative_eq!(threshold, 2.0 * PI, max_relative = 1e-15);
    let at = census::derdzinski_census(dim(8), 1.0, 42.0, threshold).unwrap();
    assert_eq!(at.branches.len(), 1);
    assert!(at.branches[0].branch.is_trivial());
}
