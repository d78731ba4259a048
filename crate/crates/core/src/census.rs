//! Solution censuses: how many rotationally invariant constant-scalar-curvature
//! metrics exist on `S^1(T) × S^{n-1}`, and the energies of the nontrivial ones.
//!
//! Two interval conventions coexist on purpose. The pseudo-cylindric count uses
//! right-closed brackets `T ∈ (T_{k-1}, T_k]`; the Derdzinski count uses
//! left-closed brackets `2π(k-1)/√C ≤ T < 2πk/√C`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::efcore::{
    denormalize, integrate_orbit_at, structural_constants, turning_points_at, Dimension,
    EnergyLevel, OrbitTrajectory, PhaseState, SystemKind, TimeFrame, DRIFT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::period::period_at;

/// Tolerance of the period evaluations inside root finding.
pub const CENSUS_PERIOD_TOLERANCE: f64 = 1e-12;

/// Ratios within this relative distance of an integer are treated as that integer.
const SNAP: f64 = 1e-12;

/// Smallest deficit `c_max - c` explored by the near-separatrix search.
const MIN_DEFICIT: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionBranch {
    pub n: Dimension,
    #[serde(rename = "T")]
    pub length: f64,
    /// Winding index; 0 is the trivial product metric.
    pub j: u32,
    /// Normalized energy (0 for the trivial branch).
    pub c: f64,
    /// `c_max - c`, kept separately because it can be far below `ulp(c_max)`.
    pub deficit: f64,
    /// Period of the profile in the raw time variable (`T/j` for `j ≥ 1`).
    pub fundamental_period: f64,
}

impl SolutionBranch {
    pub fn is_trivial(&self) -> bool {
        self.j == 0
    }

    /// The orbit energy, rebuilt from whichever of `c`, `deficit` is exact.
    pub fn level(&self, kind: SystemKind) -> EnergyLevel {
        if self.deficit < self.c {
            EnergyLevel::from_deficit(kind, self.deficit)
        } else {
            EnergyLevel::from_energy(kind, self.c)
        }
    }
}

fn check_positive(what: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::range(what, v, "(0, inf)"));
    }
    Ok(())
}

/// `[T_1, …, T_kmax]` with `T_k = 2πk/√(n-2)`.
pub fn bifurcation_periods(n: Dimension, kmax: u32) -> Result<Vec<f64>> {
    if kmax < 1 {
        return Err(Error::range("kmax", kmax as f64, "[1, inf)"));
    }
    let t1 = 2.0 * PI / (n.as_f64() - 2.0).sqrt();
    Ok((1..=kmax).map(|k| k as f64 * t1).collect())
}

/// `ceil(x)`, except that values within `SNAP` of an integer round to it.
fn snapped_ceil(x: f64) -> u32 {
    let r = x.round();
    if (x - r).abs() <= SNAP * x.max(1.0) {
        r as u32
    } else {
        x.ceil() as u32
    }
}

/// `floor(x)`, with the same snapping as [`snapped_ceil`].
fn snapped_floor(x: f64) -> u32 {
    let r = x.round();
    if (x - r).abs() <= SNAP * x.max(1.0) {
        r as u32
    } else {
        x.floor() as u32
    }
}

/// Number of metrics (including the product metric) for circle length `T`:
/// the `k` with `T ∈ (T_{k-1}, T_k]`.
pub fn count_metrics(n: Dimension, length: f64) -> Result<u32> {
    check_positive("T", length)?;
    let t1 = structural_constants(SystemKind::emden_fowler(n)).t1;
    Ok(snapped_ceil(length / t1).max(1))
}

/// Inverts the (monotone) normalized period function: the level whose orbit
/// has period `target`.
///
/// Near the Emden–Fowler separatrix the period grows like `ln(1/deficit)`,
/// so that regime is searched on a logarithmic deficit scale.
pub fn energy_for_period(kind: SystemKind, target: f64) -> Result<EnergyLevel> {
    check_positive("period", target)?;
    let c_max = kind.c_max();
    let t_lin = kind.linear_period();
    let t = |level: EnergyLevel| period_at(kind, level, CENSUS_PERIOD_TOLERANCE);

    let mid = EnergyLevel::from_energy(kind, 0.5 * c_max);
    let t_mid = t(mid)?;
    let increasing = t_mid > t_lin;
    let below_mid = if increasing {
        target <= t_mid
    } else {
        target >= t_mid
    };
    let unattainable = || {
        Error::NonConvergence(format!(
            "no orbit of {kind:?} has normalized period {target}"
        ))
    };
    if (increasing && target <= t_lin) || (!increasing && target >= t_lin) {
        return Err(unattainable());
    }

    if below_mid {
        let f = |c: f64| t(EnergyLevel::from_energy(kind, c)).map(|p| p - target);
        let c = bisect_fallible(f, 0.0, 0.5 * c_max, increasing)?;
        return Ok(EnergyLevel::from_energy(kind, c));
    }

    let lo = MIN_DEFICIT.ln();
    let hi = (0.5 * c_max).ln();
    let edge = t(EnergyLevel::from_deficit(kind, MIN_DEFICIT))?;
    if (increasing && target >= edge) || (!increasing && target <= edge) {
        return Err(unattainable());
    }
    // period decreases with ln(deficit) when it increases with c
    let f = |ld: f64| t(EnergyLevel::from_deficit(kind, ld.exp())).map(|p| p - target);
    let ld = bisect_fallible(f, lo, hi, !increasing)?;
    Ok(EnergyLevel::from_deficit(kind, ld.exp()))
}

/// Bisection for a function known to be increasing (or decreasing) on
/// `[lo, hi]`; runs until the bracket stops shrinking.
fn bisect_fallible<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    increasing: bool,
) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // the endpoint c = 0 is never evaluated
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if (v < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The trivial branch plus one branch for each `j ≥ 1` with `T/j > T_1`.
pub fn solve_branches(n: Dimension, length: f64) -> Result<Vec<SolutionBranch>> {
    let k = count_metrics(n, length)?;
    let kind = SystemKind::emden_fowler(n);
    let beta = structural_constants(kind).beta;
    let trivial = SolutionBranch {
        n,
        length,
        j: 0,
        c: 0.0,
        deficit: kind.c_max(),
        fundamental_period: length,
    };
    let rest = (1..k)
        .into_par_iter()
        .map(|j| {
            let level = energy_for_period(kind, beta * length / j as f64)?;
            Ok(SolutionBranch {
                n,
                length,
                j,
                c: level.c,
                deficit: level.deficit,
                fundamental_period: period_at(kind, level, CENSUS_PERIOD_TOLERANCE)? / beta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(k as usize);
    out.push(trivial);
    out.extend(rest);
    Ok(out)
}

/// The branch profile in u-time over `[0, T]` (`j` fundamental periods),
/// sampled with `steps_per_period` RK4 steps per period.
pub fn branch_orbit(branch: &SolutionBranch, steps_per_period: usize) -> Result<OrbitTrajectory> {
    let kind = SystemKind::emden_fowler(branch.n);
    if branch.is_trivial() {
        let alpha = structural_constants(kind).alpha;
        let samples = (0..=steps_per_period)
            .map(|i| PhaseState {
                t: branch.length * i as f64 / steps_per_period as f64,
                w: alpha,
                wp: 0.0,
            })
            .collect();
        return Ok(OrbitTrajectory {
            kind,
            c: 0.0,
            deficit: kind.c_max(),
            frame: TimeFrame::Physical,
            period: branch.length,
            samples,
            energy_drift: 0.0,
            drift_tolerance: DRIFT_TOLERANCE,
            drift_exceeded: false,
            seam_error: 0.0,
        });
    }
    let orbit = integrate_orbit_at(
        kind,
        branch.level(kind),
        branch.j as usize,
        steps_per_period,
        DRIFT_TOLERANCE,
    )?;
    denormalize(branch.n, &orbit)
}

/// Scale constants of `h(t) = alpha_D f(beta_D t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerdzinskiNormalization {
    #[serde(rename = "alpha_D")]
    pub alpha_d: f64,
    #[serde(rename = "beta_D")]
    pub beta_d: f64,
    #[serde(rename = "C")]
    pub c_const: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl DerdzinskiNormalization {
    pub fn new(n: Dimension, c_const: f64, r: f64) -> Result<Self> {
        check_positive("C", c_const)?;
        check_positive("R", r)?;
        let nf = n.as_f64();
        Ok(DerdzinskiNormalization {
            alpha_d: ((nf - 1.0) * c_const / (nf * r)).powf(-nf / 4.0),
            beta_d: (nf * c_const / 4.0).sqrt(),
            c_const,
            r,
        })
    }

    /// Smallest circle length carrying a nonconstant solution, `2π/√C`.
    pub fn threshold(&self) -> f64 {
        2.0 * PI / self.c_const.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerdzinskiBranch {
    #[serde(flatten)]
    pub branch: SolutionBranch,
    /// Range of the warping function `h` over the orbit.
    pub h_min: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerdzinskiCensus {
    pub k: u32,
    pub branches: Vec<DerdzinskiBranch>,
    /// Winding indices inside the counting bracket whose target period lies
    /// outside the range of the period function.
    pub unattainable: Vec<u32>,
    pub norm: DerdzinskiNormalization,
}

/// Warped-product census. `k` follows the left-closed bracket
/// `2π(k-1)/√C ≤ T < 2πk/√C`; a nontrivial branch `j` needs
/// `T/j > 2π/√C` strictly and an orbit whose period matches.
pub fn derdzinski_census(
    n: Dimension,
    c_const: f64,
    r: f64,
    length: f64,
) -> Result<DerdzinskiCensus> {
    check_positive("T", length)?;
    let norm = DerdzinskiNormalization::new(n, c_const, r)?;
    let kind = SystemKind::derdzinski(n);
    let threshold = norm.threshold();
    let k = snapped_floor(length / threshold) + 1;

    let trivial = DerdzinskiBranch {
        branch: SolutionBranch {
            n,
            length,
            j: 0,
            c: 0.0,
            deficit: kind.c_max(),
            fundamental_period: length,
        },
        h_min: norm.alpha_d,
        h_max: norm.alpha_d,
    };

    let candidates: Vec<u32> = (1..k)
        .filter(|&j| length / j as f64 > threshold * (1.0 + SNAP))
        .collect();
    let solved = candidates
        .par_iter()
        .map(|&j| {
            if n.get() == 4 {
                // linear equation: every orbit has the threshold period
                return Ok((j, None));
            }
            match energy_for_period(kind, norm.beta_d * length / j as f64) {
                Ok(level) => {
                    let (a, b) = turning_points_at(kind, level)?;
                    let p = period_at(kind, level, CENSUS_PERIOD_TOLERANCE)?;
                    Ok((
                        j,
                        Some(DerdzinskiBranch {
                            branch: SolutionBranch {
                                n,
                                length,
                                j,
                                c: level.c,
                                deficit: level.deficit,
                                fundamental_period: p / norm.beta_d,
                            },
                            h_min: norm.alpha_d * a,
                            h_max: norm.alpha_d * b,
                        }),
                    ))
                }
                Err(e) if e.is_non_convergence() => Ok((j, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut branches = vec![trivial];
    let mut unattainable = Vec::new();
    for (j, b) in solved {
        match b {
            Some(b) => branches.push(b),
            None => unattainable.push(j),
        }
    }
    Ok(DerdzinskiCensus {
        k,
        branches,
        unattainable,
        norm,
    })
}

/// Length `2π√((n-1)/R0)` at which the product metric is a degenerate
/// critical point.
pub fn degenerate_length(n: Dimension, r0: f64) -> Result<f64> {
    check_positive("R0", r0)?;
    Ok(2.0 * PI * ((n.as_f64() - 1.0) / r0).sqrt())
}
