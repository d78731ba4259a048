//! Self-check suite: every module's invariants evaluated at concrete inputs,
//! reported as measured value against tolerance. Failures are reported, not
//! raised.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::{self, branch_orbit, count_metrics, derdzinski_census, solve_branches};
use crate::curvature::{self, nonparallel_witness, yamabe_functional, Profile};
use crate::efcore::{self, structural_constants, Dimension, SystemKind};
use crate::ellip::{self, PBranch};
use crate::error::Result;
use crate::period;

pub const MODULES: [&str; 5] = ["efcore", "period", "census", "ellip", "curvature"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub module: String,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Replaceable pieces of the pipeline, so that the suite can be shown to
/// catch a deliberately broken implementation.
pub struct Hooks {
    /// Map from raw energy `c̄` to the dn modulus of the n = 4 closed form.
    pub n4_modulus: Box<dyn Fn(f64) -> Result<f64> + Sync>,
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks {
            n4_modulus: Box::new(|cbar| {
                let c = cbar + 0.25;
                match ellip::closed_form(Dimension::new(4)?, c)?.variant {
                    ellip::ClosedFormVariant::JacobiDn { modulus, .. } => Ok(modulus),
                    _ => unreachable!("n = 4 has a dn closed form"),
                }
            }),
        }
    }
}

fn dim(n: u32) -> Dimension {
    Dimension::new(n as i64).expect("n >= 3")
}

fn ef(n: u32) -> SystemKind {
    SystemKind::emden_fowler(dim(n))
}

/// A check whose measurement is an error to be kept `<= tolerance`.
fn at_most(module: &str, name: &str, tolerance: f64, measured: Result<f64>) -> Check {
    match measured {
        Ok(m) => Check {
            module: module.into(),
            name: name.into(),
            passed: m <= tolerance,
            measured: m,
            tolerance,
            error: None,
        },
        Err(e) => Check {
            module: module.into(),
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            tolerance,
            error: Some(e.to_string()),
        },
    }
}

/// A yes/no check; `measured` is 1 on success.
fn holds(module: &str, name: &str, ok: Result<bool>) -> Check {
    at_most(module, name, 0.0, ok.map(|b| if b { 0.0 } else { 1.0 }))
}

fn max_of(it: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut m: f64 = 0.0;
    for v in it {
        m = m.max(v?);
    }
    Ok(m)
}

fn efcore_checks() -> Vec<Check> {
    let m = "efcore";
    vec![
        at_most(
            m,
            "alpha*b0 = 1 for n = 3..10",
            1e-14,
            max_of((3..=10).map(|n| {
                let sc = structural_constants(ef(n));
                Ok((sc.alpha * sc.b0 - 1.0).abs())
            })),
        ),
        at_most(
            m,
            "RK4 energy drift (n = 4, c = 0.09, 1024 steps)",
            efcore::DRIFT_TOLERANCE,
            efcore::integrate_orbit(ef(4), 0.09, 1, 1024).map(|o| o.energy_drift),
        ),
        at_most(
            m,
            "half-orbit integrations agree at the seam (n = 3..8)",
            1e-9,
            max_of((3..=8).flat_map(|n| {
                [0.5, 1.0 - 1e-6, 1.0 - 1e-11].into_iter().map(move |f| {
                    let k = ef(n);
                    Ok(efcore::integrate_orbit(k, f * k.c_max(), 1, 2048)?.seam_error)
                })
            })),
        ),
    ]
}

fn period_checks() -> Vec<Check> {
    let m = "period";
    let mut out = vec![
        at_most(
            m,
            "linear limit at c = 1e-8 (relative, n = 3..10)",
            1e-6,
            max_of((3..=10).map(|n| {
                let k = ef(n);
                Ok((period::period(k, 1e-8)? / k.linear_period() - 1.0).abs())
            })),
        ),
        holds(
            m,
            "period grows toward the separatrix (k = 2..6)",
            (|| {
                for n in 3..=10 {
                    let k = ef(n);
                    let mut prev = 0.0;
                    for e in 2..=6 {
                        let t = period::period(k, k.c_max() * (1.0 - 10f64.powi(-e)))?;
                        if t <= prev {
                            return Ok(false);
                        }
                        prev = t;
                    }
                }
                Ok(true)
            })(),
        ),
        at_most(
            m,
            "Chow-Wang T' vs central differences (relative)",
            1e-4,
            max_of([3, 4, 6, 8].into_iter().flat_map(|n| {
                [0.1, 0.5, 0.9].into_iter().map(move |f| {
                    let k = ef(n);
                    let c = f * k.c_max();
                    let h = 1e-6 * k.c_max();
                    let fd = (period::period(k, c + h)? - period::period(k, c - h)?) / (2.0 * h);
                    Ok((period::period_derivative(k, c)? / fd - 1.0).abs())
                })
            })),
        ),
        at_most(
            m,
            "panel doubling at the accepted answer (relative)",
            1e-10,
            max_of([0.1, 0.5, 0.9].into_iter().map(|f| {
                let k = ef(5);
                let c = f * k.c_max();
                let t = period::period(k, c)?;
                let mut panels = 4;
                while (period::period_fixed_panels(k, c, panels)? - t).abs() > 1e-12 * t
                    && panels < 1 << 12
                {
                    panels *= 2;
                }
                Ok((period::period_fixed_panels(k, c, 2 * panels)? / t - 1.0).abs())
            })),
        ),
        at_most(
            m,
            "isochronous Derdzinski(4): |T'|",
            1e-8,
            max_of(
                [0.1, 0.3].into_iter().map(|c| {
                    Ok(period::period_derivative(SystemKind::derdzinski(dim(4)), c)?.abs())
                }),
            ),
        ),
    ];
    let mono: Vec<Check> = (3..=10u32)
        .into_par_iter()
        .map(|n| {
            holds(
                m,
                &format!("T strictly increasing on the 50-point grid, n = {n}"),
                period::monotonicity_report(ef(n), 50)
                    .map(|r| r.strictly_increasing && r.min_t_prime > 0.0),
            )
        })
        .collect();
    out.extend(mono);
    out
}

fn census_checks() -> Vec<Check> {
    let m = "census";
    let lengths: Vec<(u32, f64)> = (3..=8)
        .flat_map(|n| (1..=40).map(move |i| (n, 0.5 * i as f64)))
        .collect();
    let consistency = lengths
        .par_iter()
        .map(|&(n, f)| {
            let t = f * structural_constants(ef(n)).t1;
            Ok(solve_branches(dim(n), t)?.len() as u32 == count_metrics(dim(n), t)?)
        })
        .collect::<Result<Vec<bool>>>()
        .map(|v| v.into_iter().all(|b| b));

    let round_trip = || -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (n, t) in [
            (4, 10.0),
            (4, 9.644224),
            (6, 2.0 * PI),
            (5, 15.0),
            (3, 30.0),
        ] {
            let kind = ef(n);
            let beta = structural_constants(kind).beta;
            for b in solve_branches(dim(n), t)?.iter().skip(1) {
                let p =
                    period::period_at(kind, b.level(kind), census::CENSUS_PERIOD_TOLERANCE)? / beta;
                worst = worst.max((p * b.j as f64 - t).abs());
            }
        }
        Ok(worst)
    };

    vec![
        holds(
            m,
            "census length = count for n = 3..8, T = 0.5..20 T1",
            consistency,
        ),
        at_most(m, "branch round trip |j T(c_j) - T|", 1e-8, round_trip()),
        at_most(
            m,
            "branch orbits: seam mismatch (n = 4, T = 10; n = 5, T = 20)",
            1e-9,
            max_of([(4, 10.0), (5, 20.0)].into_iter().map(|(n, t)| {
                max_of(
                    solve_branches(dim(n), t)?
                        .iter()
                        .map(|b| Ok(branch_orbit(b, 2048)?.seam_error)),
                )
            })),
        ),
        at_most(
            m,
            "branch j = k collapses at T = T_k (c_k)",
            1e-6,
            max_of([(4, 2), (6, 3)].into_iter().map(|(n, k)| {
                let t = structural_constants(ef(n)).t1 * k as f64 * (1.0 + 1e-10);
                let b = solve_branches(dim(n), t)?;
                Ok(b.last().map_or(f64::INFINITY, |b| b.c))
            })),
        ),
        holds(
            m,
            "no nontrivial Derdzinski(4) branch",
            derdzinski_census(dim(4), 1.0, 12.0, 40.0).map(|r| r.branches.len() == 1),
        ),
        holds(
            m,
            "energy deficits increase with the winding index",
            solve_branches(dim(4), 30.0)
                .map(|b| b[1..].windows(2).all(|p| p[0].deficit < p[1].deficit)),
        ),
    ]
}

fn ellip_checks(hooks: &Hooks) -> Vec<Check> {
    let m = "ellip";
    let n4_agreement = max_of([0.01, 0.05, 0.09, 0.2].into_iter().map(|c| {
        let k = (hooks.n4_modulus)(ellip::raw_energy(dim(4), c)?)?;
        let closed = 2.0 * ellip::elliptic_k(k)? * (2.0 - k * k).sqrt();
        Ok((period::period(ef(4), c)? - closed).abs())
    }));

    let closed_vs_integrated = max_of([3u32, 4, 6].into_iter().flat_map(|n| {
        [0.2, 0.8].into_iter().map(move |f| {
            let d = dim(n);
            let kind = ef(n);
            let c = f * kind.c_max();
            let form = ellip::closed_form(d, c)?;
            let orbit = efcore::denormalize(d, &efcore::integrate_orbit(kind, c, 1, 4096)?)?;
            max_of(
                orbit
                    .samples
                    .iter()
                    .map(|s| Ok((ellip::evaluate_closed_form(&form, s.t, false)? - s.w).abs())),
            )
        })
    }));

    let laurent = || -> Result<f64> {
        let (g2, g3) = (4.0 / 3.0, 0.1);
        let rem = |x: f64| -> Result<f64> {
            let (p, _) = ellip::weierstrass_p(x, g2, g3, PBranch::RealAxis)?;
            Ok(x * x * p - 1.0 - g2 / 20.0 * x.powi(4) - g3 / 28.0 * x.powi(6))
        };
        let ratio = rem(0.2)? / rem(0.1)?;
        Ok((ratio / 256.0 - 1.0).abs())
    };

    let residual = || -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (g2, g3) in [
            (4.0 / 3.0, 0.0),
            (4.0 / 3.0, -0.2),
            (1.0 / 12.0, -1.0 / 432.0),
        ] {
            for branch in [PBranch::RealAxis, PBranch::Bounded] {
                for i in 1..50 {
                    let x = 0.07 * i as f64;
                    let (p, pp) = ellip::weierstrass_p(x, g2, g3, branch)?;
                    let r = pp * pp - (4.0 * p * p * p - g2 * p - g3);
                    worst = worst.max(r.abs() / (1.0 + p.abs().powi(3)));
                }
            }
        }
        Ok(worst)
    };

    let bounds = max_of([3u32, 4, 6].into_iter().flat_map(|n| {
        [0.2, 0.8].into_iter().map(move |f| {
            let d = dim(n);
            let kind = ef(n);
            let c = f * kind.c_max();
            let b = ellip::estimate_bounds(d, c)?;
            let beta = structural_constants(kind).beta;
            let orbit = efcore::denormalize(d, &efcore::integrate_orbit(kind, c, 1, 4096)?)?;
            let mut excess: f64 = 0.0;
            for s in &orbit.samples {
                excess = excess
                    .max(s.w - b.c_n)
                    .max((beta * s.w + s.wp).abs() - b.c_n_prime);
            }
            Ok(excess.max(0.0))
        })
    }));

    vec![
        at_most(
            m,
            "dn^2 + k^2 sn^2 = 1",
            1e-12,
            max_of([0.1, 0.5, 0.9, 0.999].into_iter().flat_map(|k| {
                (0..40).map(move |i| {
                    let (sn, _, dn) = ellip::jacobi(0.37 * i as f64 - 5.0, k)?;
                    Ok((dn * dn + k * k * sn * sn - 1.0).abs())
                })
            })),
        ),
        at_most(m, "n = 4 period = 2K(k) sqrt(2 - k^2)", 1e-8, n4_agreement),
        at_most(
            m,
            "n = 6 period_u(1/12) = real period of P(4/3, 0)",
            1e-6,
            (|| {
                let k = ef(6);
                Ok(
                    (period::period(k, 1.0 / 12.0)? / structural_constants(k).beta
                        - ellip::real_period(4.0 / 3.0, 0.0)?)
                    .abs(),
                )
            })(),
        ),
        at_most(
            m,
            "closed form vs integrated orbit, n = 3, 4, 6",
            1e-7,
            closed_vs_integrated,
        ),
        at_most(
            m,
            "raw energy window end at n = 3",
            1e-12,
            ellip::raw_energy(dim(3), 0.0).map(|v| (v + 1.0 / (6.0 * 3f64.sqrt())).abs()),
        ),
        at_most(m, "Laurent remainder ratio O(x^8)", 1e-2, laurent()),
        at_most(
            m,
            "P'^2 = 4P^3 - g2 P - g3 on both branches",
            1e-9,
            residual(),
        ),
        at_most(
            m,
            "sampled profile within the estimate bounds (excess)",
            1e-9,
            bounds,
        ),
    ]
}

fn curvature_checks() -> Vec<Check> {
    let m = "curvature";
    let reports = || -> Result<Vec<curvature::CurvatureReport>> {
        let mut out = Vec::new();
        for (n, t) in [(4, 10.0), (6, 2.0 * PI), (3, 15.0), (5, 12.0)] {
            for b in solve_branches(dim(n), t)? {
                out.push(nonparallel_witness(dim(n), &branch_orbit(&b, 2048)?)?);
            }
        }
        Ok(out)
    };
    let reports = reports();
    let over = |f: &dyn Fn(&curvature::CurvatureReport) -> f64| -> Result<f64> {
        match &reports {
            Ok(r) => Ok(r.iter().map(f).fold(0.0, f64::max)),
            Err(e) => Err(e.clone()),
        }
    };
    let grid: Vec<f64> = (1..=50).map(|i| PI * i as f64 / 51.0).collect();
    let d4 = dim(4);
    let t1 = structural_constants(ef(4)).t1;
    vec![
        at_most(
            m,
            "scalar curvature = n(n-1) along census orbits",
            1e-6,
            over(&|r| r.scalar_deviation),
        ),
        at_most(m, "trace audit", 1e-6, over(&|r| r.trace_deviation)),
        at_most(
            m,
            "witness vanishes at turning points",
            1e-9,
            over(&|r| {
                r.turning_point_witness[0]
                    .abs()
                    .max(r.turning_point_witness[1].abs())
            }),
        ),
        holds(
            m,
            "witness: zero on the constant branch, nonzero otherwise",
            reports.clone().map(|rs| {
                rs.iter().all(|r| {
                    if r.c == 0.0 {
                        r.max_witness == 0.0
                    } else {
                        r.max_witness > 1e-3
                    }
                })
            }),
        ),
        holds(
            m,
            "Pohozaev invariant increasing in c, zero at c = 0",
            (|| {
                let d = dim(5);
                let v: Vec<f64> = (0..=10)
                    .map(|i| curvature::pohozaev(d, 0.2 * i as f64 / 10.0))
                    .collect::<Result<_>>()?;
                Ok(v[0] == 0.0 && v.windows(2).all(|p| p[1] > p[0]))
            })(),
        ),
        holds(
            m,
            "J ordering: J_trivial(T1) < mu(S^4), J(j = 1) < J_trivial at T = 7",
            (|| {
                let r = curvature::reference_constants(d4, t1)?;
                let jt = yamabe_functional(d4, t1, Profile::Trivial)?;
                let b = solve_branches(d4, 7.0)?;
                let j1 = yamabe_functional(d4, 7.0, Profile::Orbit(&branch_orbit(&b[1], 4096)?))?;
                let j0 = yamabe_functional(d4, 7.0, Profile::Trivial)?;
                Ok(jt < r.mu_sphere && j1 < j0)
            })(),
        ),
        at_most(
            m,
            "sphere family residual (n = 4, R = 12, t = 0.5)",
            1e-8,
            curvature::sphere_family_residual(d4, 12.0, 0.5, &grid),
        ),
        at_most(
            m,
            "Codazzi trace identity",
            1e-12,
            max_of((0..20).map(|i| {
                let (tr, psi) = (0.3 * i as f64 - 2.0, 0.1 * i as f64);
                let (l, mu) = curvature::codazzi_pair(d4, tr, psi);
                Ok((l + 3.0 * mu - tr).abs())
            })),
        ),
    ]
}

/// Runs the suites named in `selection` (all when empty).
pub fn verify_suite(selection: &[String]) -> VerifyReport {
    verify_suite_with(selection, &Hooks::default())
}

pub fn verify_suite_with(selection: &[String], hooks: &Hooks) -> VerifyReport {
    let want = |m: &str| selection.is_empty() || selection.iter().any(|s| s == m);
    let mut checks = Vec::new();
    if want("efcore") {
        checks.extend(efcore_checks());
    }
    if want("period") {
        checks.extend(period_checks());
    }
    if want("census") {
        checks.extend(census_checks());
    }
    if want("ellip") {
        checks.extend(ellip_checks(hooks));
    }
    if want("curvature") {
        checks.extend(curvature_checks());
    }
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { checks, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_filters_modules() {
        let r = verify_suite(&["ellip".to_string()]);
        assert!(!r.checks.is_empty());
        assert!(r.checks.iter().all(|c| c.module == "ellip"));
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn sign_flipped_modulus_map_is_caught() {
        let hooks = Hooks {
            n4_modulus: Box::new(|cbar| {
                // the map with the sign of c̄ flipped
                let y = 2.0 / (1.0 + (1.0 - 4.0 * cbar).sqrt());
                Ok((2.0 - y).abs().sqrt())
            }),
        };
        let r = verify_suite_with(&["ellip".to_string()], &hooks);
        let check = r
            .checks
            .iter()
            .find(|c| c.name.starts_with("n = 4 period"))
            .expect("period agreement check present");
        assert!(!check.passed);
        assert!(!r.passed);
    }
}
