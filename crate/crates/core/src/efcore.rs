//! Normalized autonomous dynamics `w'' + g(w) = 0` shared by the
//! pseudo-cylindric (Emden–Fowler) and Derdzinski equations.
//!
//! Both families are written with a single exponent `q` and a sign `s`:
//!
//! ```text
//! g(w) = s (w^(q-1) - w)            centre at w = 1
//! V(w) = c_max - s' (w^q/q - w^2/2) shifted so V(1) = 0
//! ```
//!
//! Emden–Fowler: `q = 2n/(n-2)`, `s = +1`, `c_max = 1/n`.
//! Derdzinski:   `q = 2(n-2)/n`, `s = -1`, `c_max = 1/(n-2)`.
//!
//! Near the centre the potential is evaluated through `(1+x)^q - 1 - qx`
//! by series so that tiny energies keep full relative precision; near
//! `w = 0` the depth `c_max - V` is evaluated directly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::period;

/// Energies at or below this are routed to the constant orbit.
pub const DEGENERATE_ENERGY: f64 = 1e-12;

/// Default energy-drift tolerance for integrated orbits.
pub const DRIFT_TOLERANCE: f64 = 1e-8;

/// Minimum fixed-step resolution accepted by [`integrate_orbit`].
pub const MIN_STEPS_PER_PERIOD: usize = 64;

/// Relative mismatch between the two half-integrations of an orbit below
/// which RK4 substep refinement stops.
pub const SEAM_TOLERANCE: f64 = 1e-10;

const MAX_SUBSTEPS: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(n: i64) -> Result<Self> {
        if n < 3 || n > u32::MAX as i64 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Dimension(n as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    EmdenFowler,
    Derdzinski,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemKind {
    pub family: Family,
    pub n: Dimension,
}

impl SystemKind {
    pub fn emden_fowler(n: Dimension) -> Self {
        SystemKind {
            family: Family::EmdenFowler,
            n,
        }
    }

    pub fn derdzinski(n: Dimension) -> Self {
        SystemKind {
            family: Family::Derdzinski,
            n,
        }
    }

    /// Shorthand for tests and the CLI.
    pub fn ef(n: i64) -> Result<Self> {
        Dimension::new(n).map(Self::emden_fowler)
    }

    pub fn dz(n: i64) -> Result<Self> {
        Dimension::new(n).map(Self::derdzinski)
    }

    pub fn is_emden_fowler(self) -> bool {
        self.family == Family::EmdenFowler
    }

    /// Exponent `q` of the potential.
    pub(crate) fn q(self) -> f64 {
        let n = self.n.as_f64();
        match self.family {
            Family::EmdenFowler => 2.0 * n / (n - 2.0),
            Family::Derdzinski => 2.0 * (n - 2.0) / n,
        }
    }

    pub(crate) fn sign(self) -> f64 {
        match self.family {
            Family::EmdenFowler => 1.0,
            Family::Derdzinski => -1.0,
        }
    }

    /// Supremum of the normalized energy over periodic orbits.
    pub fn c_max(self) -> f64 {
        let n = self.n.as_f64();
        match self.family {
            Family::EmdenFowler => 1.0 / n,
            Family::Derdzinski => 1.0 / (n - 2.0),
        }
    }

    /// `g'(1)`, the squared frequency of the linearization at the centre.
    pub fn linear_frequency_sq(self) -> f64 {
        self.sign() * (self.q() - 2.0)
    }

    /// Period of the linearized oscillation at the centre (normalized time).
    pub fn linear_period(self) -> f64 {
        2.0 * PI / self.linear_frequency_sq().sqrt()
    }

    /// Derdzinski's convexity hypothesis `g'' >= 0` holds only for n >= 4.
    /// Recorded for reports; never enforced.
    pub fn convexity_hypothesis_holds(self) -> bool {
        match self.family {
            Family::EmdenFowler => true,
            Family::Derdzinski => self.n.get() >= 4,
        }
    }

    pub(crate) fn require_emden_fowler(self) -> Result<()> {
        if self.is_emden_fowler() {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected: "Emden-Fowler",
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    /// Emden–Fowler: `u = alpha w(beta t)`; Derdzinski: 1 (the scale lives in
    /// `census::DerdzinskiNormalization`).
    pub alpha: f64,
    pub beta: f64,
    /// Outer turning point of the limiting orbit at `c_max`.
    pub b0: f64,
    pub c_max: f64,
    /// First bifurcation length. Emden–Fowler: u-time `2π/√(n-2)`.
    /// Derdzinski: normalized f-time `π√n`.
    pub t1: f64,
    pub center: f64,
    pub linear_frequency_sq: f64,
}

pub fn structural_constants(kind: SystemKind) -> StructuralConstants {
    let n = kind.n.as_f64();
    match kind.family {
        Family::EmdenFowler => StructuralConstants {
            // exponent (n-2)/4 is the one that solves the constant-solution condition
            alpha: ((n - 2.0) / n).powf((n - 2.0) / 4.0),
            beta: (n - 2.0) / 2.0,
            b0: (n / (n - 2.0)).powf((n - 2.0) / 4.0),
            c_max: kind.c_max(),
            t1: 2.0 * PI / (n - 2.0).sqrt(),
            center: 1.0,
            linear_frequency_sq: kind.linear_frequency_sq(),
        },
        Family::Derdzinski => StructuralConstants {
            alpha: 1.0,
            beta: 1.0,
            b0: derdzinski_b0(kind),
            c_max: kind.c_max(),
            t1: kind.linear_period(),
            center: 1.0,
            linear_frequency_sq: kind.linear_frequency_sq(),
        },
    }
}

fn derdzinski_b0(kind: SystemKind) -> f64 {
    let c_max = kind.c_max();
    let mut hi = 2.0;
    while pot(kind, hi) < c_max {
        hi *= 2.0;
    }
    bisect(|w| pot(kind, w) - c_max, 1.0, hi)
}

/// `(1+x)^q - 1 - qx` without cancellation for small `x`.
pub(crate) fn pow1p_remainder(q: f64, x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut term = q * (q - 1.0) / 2.0 * x * x;
        let mut sum = term;
        let mut k = 2.0;
        while k < 80.0 {
            term *= (q - k) / (k + 1.0) * x;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        (1.0 + x).powf(q) - 1.0 - q * x
    }
}

/// Restoring function without domain checks.
pub(crate) fn force(kind: SystemKind, w: f64) -> f64 {
    let q = kind.q();
    let x = w - 1.0;
    if x.abs() < 0.1 {
        // w^(q-1) - w = R_{q-1}(x) + (q-2) x
        kind.sign() * (pow1p_remainder(q - 1.0, x) + (q - 2.0) * x)
    } else {
        kind.sign() * (w.powf(q - 1.0) - w)
    }
}

pub(crate) fn force_derivatives(kind: SystemKind, w: f64) -> (f64, f64, f64) {
    let q = kind.q();
    let s = kind.sign();
    let g1 = s * ((q - 1.0) * w.powf(q - 2.0) - 1.0);
    let g2 = s * (q - 1.0) * (q - 2.0) * w.powf(q - 3.0);
    let g3 = s * (q - 1.0) * (q - 2.0) * (q - 3.0) * w.powf(q - 4.0);
    (g1, g2, g3)
}

/// Shifted potential without domain checks.
pub(crate) fn pot(kind: SystemKind, w: f64) -> f64 {
    let q = kind.q();
    let x = w - 1.0;
    if x.abs() < 0.5 {
        kind.sign() * (pow1p_remainder(q, x) / q - 0.5 * x * x)
    } else {
        kind.c_max() - depth(kind, w)
    }
}

/// `c_max - V(w)`, accurate near `w = 0`.
pub(crate) fn depth(kind: SystemKind, w: f64) -> f64 {
    let q = kind.q();
    -kind.sign() * (w.powf(q) / q - 0.5 * w * w)
}

/// Value and first two derivatives of the restoring function `g`.
pub fn nonlinearity(kind: SystemKind, w: f64) -> Result<(f64, f64, f64)> {
    if !(w >= 0.0) {
        return Err(Error::domain("w", w, "[0, inf)"));
    }
    if w == 0.0 && !kind.is_emden_fowler() {
        return Err(Error::domain("f", w, "(0, inf) for the Derdzinski family"));
    }
    let (g1, g2, _) = force_derivatives(kind, w);
    Ok((force(kind, w), g1, g2))
}

/// Third derivative `g'''(w)`, used for the Chow–Wang series.
pub fn nonlinearity_third(kind: SystemKind, w: f64) -> f64 {
    force_derivatives(kind, w).2
}

/// Shifted potential `V` with `V(centre) = 0`.
pub fn potential(kind: SystemKind, w: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::domain("w", w, "[0, inf)"));
    }
    Ok(pot(kind, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    pub w: f64,
    pub wp: f64,
}

/// Normalized energy `c = w'^2/2 + V(w)`.
pub fn energy(kind: SystemKind, s: PhaseState) -> f64 {
    0.5 * s.wp * s.wp + pot(kind, s.w)
}

/// An orbit energy carried both as `c` and as the deficit `c_max - c`, so
/// that levels within `1e-300` of the separatrix remain representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub c: f64,
    pub deficit: f64,
}

impl EnergyLevel {
    pub fn from_energy(kind: SystemKind, c: f64) -> Self {
        EnergyLevel {
            c,
            deficit: kind.c_max() - c,
        }
    }

    pub fn from_deficit(kind: SystemKind, deficit: f64) -> Self {
        EnergyLevel {
            c: kind.c_max() - deficit,
            deficit,
        }
    }

    fn near_separatrix(&self) -> bool {
        self.deficit < self.c
    }

    /// `c - V(w)`.
    pub(crate) fn gap(&self, kind: SystemKind, w: f64) -> f64 {
        if self.near_separatrix() {
            depth(kind, w) - self.deficit
        } else {
            self.c - pot(kind, w)
        }
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_open_energy(kind: SystemKind, c: f64) -> Result<()> {
    let c_max = kind.c_max();
    if !(c > 0.0 && c < c_max) {
        return Err(Error::range("c", c, format!("(0, {c_max})")));
    }
    Ok(())
}

/// Turning points `a < 1 < b` with `V(a) = V(b) = c`.
pub fn turning_points(kind: SystemKind, c: f64) -> Result<(f64, f64)> {
    check_open_energy(kind, c)?;
    turning_points_at(kind, EnergyLevel::from_energy(kind, c))
}

pub fn turning_points_at(kind: SystemKind, level: EnergyLevel) -> Result<(f64, f64)> {
    if !(level.c > 0.0 && level.deficit > 0.0) {
        return Err(Error::range(
            "c",
            level.c,
            format!("(0, {}) with positive deficit", kind.c_max()),
        ));
    }
    let gap = |w: f64| level.gap(kind, w);

    // inner point: walk down geometrically so deep levels keep relative precision
    let mut hi = 1.0;
    let mut lo = 0.5;
    while gap(lo) >= 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo == 0.0 {
            return Err(Error::NonConvergence(format!(
                "inner turning point for deficit {}",
                level.deficit
            )));
        }
    }
    let a = bisect(gap, lo, hi);

    let b0 = structural_constants(kind).b0;
    let mut top = b0;
    while gap(top) > 0.0 {
        top *= 1.5;
    }
    let b = bisect(gap, 1.0, top);
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeFrame {
    /// `w`- or `f`-time of the normalized equation.
    Normalized,
    /// u-time of the raw Yamabe ODE.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrajectory {
    pub kind: SystemKind,
    pub c: f64,
    /// `c_max - c`, exact even where `c` has rounded to `c_max`.
    pub deficit: f64,
    pub frame: TimeFrame,
    /// Fundamental period in the trajectory's own time.
    pub period: f64,
    pub samples: Vec<PhaseState>,
    pub energy_drift: f64,
    pub drift_tolerance: f64,
    pub drift_exceeded: bool,
    /// Relative mismatch where the integrations from the two turning points
    /// meet; a measure of the sampling accuracy.
    pub seam_error: f64,
}

impl OrbitTrajectory {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn level(&self) -> EnergyLevel {
        if self.deficit < self.c {
            EnergyLevel::from_deficit(self.kind, self.deficit)
        } else {
            EnergyLevel::from_energy(self.kind, self.c)
        }
    }

    pub fn is_constant(&self) -> bool {
        self.c <= DEGENERATE_ENERGY
    }
}

/// RK4 orbit starting at the outer turning point `(b, 0)`, sampled at
/// `steps_per_period` equal steps per period.
pub fn integrate_orbit(
    kind: SystemKind,
    c: f64,
    periods: usize,
    steps_per_period: usize,
) -> Result<OrbitTrajectory> {
    let c_max = kind.c_max();
    if !(c >= 0.0 && c < c_max - DEGENERATE_ENERGY) {
        return Err(Error::range("c", c, format!("[0, {c_max})")));
    }
    integrate_orbit_at(
        kind,
        EnergyLevel::from_energy(kind, c),
        periods,
        steps_per_period,
        DRIFT_TOLERANCE,
    )
}

pub fn integrate_orbit_at(
    kind: SystemKind,
    level: EnergyLevel,
    periods: usize,
    steps_per_period: usize,
    drift_tolerance: f64,
) -> Result<OrbitTrajectory> {
    if steps_per_period < MIN_STEPS_PER_PERIOD {
        return Err(Error::range(
            "steps_per_period",
            steps_per_period as f64,
            format!("[{MIN_STEPS_PER_PERIOD}, inf)"),
        ));
    }
    if periods == 0 {
        return Err(Error::range("periods", 0.0, "[1, inf)"));
    }
    let total = periods * steps_per_period;

    if level.c <= DEGENERATE_ENERGY {
        let period = kind.linear_period();
        let dt = period / steps_per_period as f64;
        let samples = (0..=total)
            .map(|i| PhaseState {
                t: i as f64 * dt,
                w: 1.0,
                wp: 0.0,
            })
            .collect();
        return Ok(OrbitTrajectory {
            kind,
            c: 0.0,
            deficit: kind.c_max(),
            frame: TimeFrame::Normalized,
            period,
            samples,
            energy_drift: 0.0,
            drift_tolerance,
            drift_exceeded: false,
            seam_error: 0.0,
        });
    }

    let (a, b) = turning_points_at(kind, level)?;
    let period = period::period_at(kind, level, period::PERIOD_TOLERANCE)?;
    let n_steps = steps_per_period;
    let dt = period / n_steps as f64;

    // One period is assembled from two integrations that each start on a
    // turning point: forward from (b, 0) at t = 0 and backward from (a, 0) at
    // t = P/2, meeting at P/4. The second half-period follows from time
    // reversal. Starting the saddle passage from exact data keeps orbits next
    // to the separatrix from picking up a phase error there. Each output step
    // is split into RK4 substeps until the two halves agree at the seam.
    let half = n_steps / 2;
    let quarter = n_steps / 4;
    let mut substeps = 1;
    let (table, seam) = loop {
        let forward = rk4_run(kind, (b, 0.0), dt, quarter + 1, substeps);
        // backward: first a fractional step from P/2 onto the grid
        let offset = 0.5 * period - half as f64 * dt;
        let lead = rk4_step(kind, (a, 0.0), -offset, substeps);
        let backward = rk4_run(kind, lead, -dt, half - quarter + 1, substeps);
        let meet = backward[half - quarter];
        let seam = (forward[quarter].0 - meet.0)
            .abs()
            .max((forward[quarter].1 - meet.1).abs())
            / b.max(1.0);
        if seam <= SEAM_TOLERANCE || substeps >= MAX_SUBSTEPS {
            // grid points k = 0..=half
            let mut table: Vec<(f64, f64)> = forward[..quarter].to_vec();
            table.extend(backward.iter().rev());
            break (table, seam);
        }
        substeps *= 2;
    };

    let state = |k: usize| -> (f64, f64) {
        let k = k % n_steps;
        if k <= half {
            table[k]
        } else {
            let (w, v) = table[n_steps - k];
            (w, -v)
        }
    };
    let mut samples = Vec::with_capacity(total + 1);
    let mut drift: f64 = 0.0;
    for i in 0..=total {
        let (w, v) = state(i);
        drift = drift.max((0.5 * v * v - level.gap(kind, w)).abs());
        samples.push(PhaseState {
            t: i as f64 * dt,
            w,
            wp: v,
        });
    }
    Ok(OrbitTrajectory {
        kind,
        c: level.c,
        deficit: level.deficit,
        frame: TimeFrame::Normalized,
        period,
        samples,
        energy_drift: drift,
        drift_tolerance,
        drift_exceeded: drift > drift_tolerance,
        seam_error: seam,
    })
}

fn rk4_step(kind: SystemKind, (mut w, mut v): (f64, f64), dt: f64, substeps: usize) -> (f64, f64) {
    let accel = |w: f64| -force(kind, w);
    let h = dt / substeps as f64;
    for _ in 0..substeps {
        let (k1w, k1v) = (v, accel(w));
        let (k2w, k2v) = (v + 0.5 * h * k1v, accel(w + 0.5 * h * k1w));
        let (k3w, k3v) = (v + 0.5 * h * k2v, accel(w + 0.5 * h * k2w));
        let (k4w, k4v) = (v + h * k3v, accel(w + h * k3w));
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (w, v)
}

/// `count` states spaced by `dt`, the first being `start`.
fn rk4_run(
    kind: SystemKind,
    start: (f64, f64),
    dt: f64,
    count: usize,
    substeps: usize,
) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    let mut s = start;
    out.push(s);
    for _ in 1..count {
        s = rk4_step(kind, s, dt, substeps);
        out.push(s);
    }
    out
}

/// Homoclinic profile `u0(t) = (cosh t)^{-(n-2)/2}` of the raw equation.
pub fn homoclinic_profile(n: Dimension, t: f64) -> f64 {
    let m = (n.as_f64() - 2.0) / 2.0;
    let a = t.abs();
    let ln_cosh = a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2;
    (-m * ln_cosh).exp()
}

/// `(u0, u0', u0'')` of the homoclinic profile.
pub fn homoclinic_derivatives(n: Dimension, t: f64) -> (f64, f64, f64) {
    let m = (n.as_f64() - 2.0) / 2.0;
    let u = homoclinic_profile(n, t);
    let th = t.tanh();
    let sech2 = 1.0 - th * th;
    (u, -m * u * th, m * m * u - m * (m + 1.0) * u * sech2)
}

/// Right-hand side `u''` of the raw Yamabe ODE on the cylinder.
pub fn yamabe_acceleration(n: Dimension, u: f64) -> f64 {
    let nf = n.as_f64();
    let beta = (nf - 2.0) / 2.0;
    beta * beta * u - nf * (nf - 2.0) / 4.0 * u.powf((nf + 2.0) / (nf - 2.0))
}

/// `u'''` from differentiating the raw ODE.
pub fn yamabe_jerk(n: Dimension, u: f64, up: f64) -> f64 {
    let nf = n.as_f64();
    let beta = (nf - 2.0) / 2.0;
    (beta * beta - nf * (nf + 2.0) / 4.0 * u.powf(4.0 / (nf - 2.0))) * up
}

/// Maps a normalized Emden–Fowler orbit to u-time: `u(t) = alpha w(beta t)`.
pub fn denormalize(n: Dimension, w_orbit: &OrbitTrajectory) -> Result<OrbitTrajectory> {
    w_orbit.kind.require_emden_fowler()?;
    if w_orbit.kind.n != n {
        return Err(Error::Mismatch(format!(
            "orbit dimension {} does not match n = {}",
            w_orbit.kind.n.get(),
            n.get()
        )));
    }
    if w_orbit.frame != TimeFrame::Normalized {
        return Err(Error::Mismatch("orbit is already in u-time".into()));
    }
    let sc = structural_constants(w_orbit.kind);
    let samples = w_orbit
        .samples
        .iter()
        .map(|s| PhaseState {
            t: s.t / sc.beta,
            w: sc.alpha * s.w,
            wp: sc.alpha * sc.beta * s.wp,
        })
        .collect();
    Ok(OrbitTrajectory {
        samples,
        frame: TimeFrame::Physical,
        period: w_orbit.period / sc.beta,
        ..w_orbit.clone()
    })
}

/// Inverse of [`denormalize`] for a single state.
pub fn normalize_state(n: Dimension, s: PhaseState) -> PhaseState {
    let sc = structural_constants(SystemKind::emden_fowler(n));
    PhaseState {
        t: s.t * sc.beta,
        w: s.w / sc.alpha,
        wp: s.wp / (sc.alpha * sc.beta),
    }
}
