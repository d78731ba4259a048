//! Curvature of `ḡ = u^{4/(n-2)}(dt² + g_{S^{n-1}})` for t-only conformal
//! factors, the Pohozaev invariant, the Yamabe functional and its reference
//! constants, the Codazzi eigenvalue pair and the conformal family of round metrics on `S^n`.
//!
//! Sign convention: the `R̄₀₀` used for reports is
//! `-2(n-1)/(n-2) (u''/u - u'²/u²)`, which satisfies the trace identity
//! `ḡ^{00}R̄₀₀ + ḡ^{ij}R̄ᵢⱼ = R̄`. The variant with `+(u''/u + u'²/u²)` does not;
//! it is still computed and carried as metadata.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::efcore::{
    structural_constants, turning_points_at, yamabe_acceleration, yamabe_jerk, Dimension,
    OrbitTrajectory, SystemKind, TimeFrame,
};
use crate::error::{Error, Result};

/// Tolerance of the trace audit.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicciComponents {
    #[serde(rename = "R00")]
    pub r00: f64,
    #[serde(rename = "R0i")]
    pub r0i: f64,
    #[serde(rename = "Rij_coeff")]
    pub rij_coeff: f64,
    /// Scalar curvature from the conformal transformation law.
    pub scalar: f64,
    /// `ḡ^{00}R̄₀₀ + ḡ^{ij}R̄ᵢⱼ` assembled from the components.
    pub trace: f64,
    /// The alternative-sign `R̄₀₀ = 2(n-1)/(n-2)(u''/u + u'²/u²)`.
    #[serde(rename = "R00_alt")]
    pub r00_alt: f64,
    /// Trace assembled with `r00_alt`.
    pub trace_alt: f64,
}

impl RicciComponents {
    pub fn audit_passes(&self) -> bool {
        (self.trace - self.scalar).abs() <= AUDIT_TOLERANCE * self.scalar.abs().max(1.0)
    }

    pub fn alt_audit_passes(&self) -> bool {
        (self.trace_alt - self.scalar).abs() <= AUDIT_TOLERANCE * self.scalar.abs().max(1.0)
    }
}

pub fn ricci_components(n: Dimension, u: f64, up: f64, upp: f64) -> Result<RicciComponents> {
    if !(u > 0.0) {
        return Err(Error::domain("u", u, "(0, inf)"));
    }
    let nf = n.as_f64();
    let a = upp / u;
    let b = up * up / (u * u);
    let k = 2.0 * (nf - 1.0) / (nf - 2.0);
    let r00 = -k * (a - b);
    let r00_alt = k * (a + b);
    let rij_coeff = (nf - 2.0) - 2.0 / (nf - 2.0) * (a + b);
    let inv = u.powf(-4.0 / (nf - 2.0));
    let scalar = inv * ((nf - 1.0) * (nf - 2.0) - 4.0 * (nf - 1.0) / (nf - 2.0) * a);
    Ok(RicciComponents {
        r00,
        r0i: 0.0,
        rij_coeff,
        scalar,
        trace: inv * (r00 + (nf - 1.0) * rij_coeff),
        r00_alt,
        trace_alt: inv * (r00_alt + (nf - 1.0) * rij_coeff),
    })
}

/// `D₀R̄₀₀` for the working sign of `R̄₀₀`, given `u, u', u'', u'''`.
pub fn witness(n: Dimension, u: f64, up: f64, upp: f64, uppp: f64) -> f64 {
    let nf = n.as_f64();
    let m = nf - 2.0;
    -2.0 * (nf - 1.0) / m * uppp / u
        + 2.0 * (nf - 1.0) * (3.0 * nf - 2.0) / (m * m) * up * upp / (u * u)
        - 4.0 * nf * (nf - 1.0) / (m * m) * up * up * up / (u * u * u)
}

/// The alternative expression `2(n-1)/(n-2)·u'''/u + 2(n+2)/(n-2)·u'u''/u² - 4u'³/u³`.
pub fn witness_alt(n: Dimension, u: f64, up: f64, upp: f64, uppp: f64) -> f64 {
    let nf = n.as_f64();
    2.0 * (nf - 1.0) / (nf - 2.0) * uppp / u + 2.0 * (nf + 2.0) / (nf - 2.0) * up * upp / (u * u)
        - 4.0 * up * up * up / (u * u * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessSample {
    pub t: f64,
    #[serde(rename = "D0R00")]
    pub d0r00: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub n: Dimension,
    pub c: f64,
    pub period: f64,
    pub witness_profile: Vec<WitnessSample>,
    pub max_witness: f64,
    /// Maximum of the alternative witness expression along the same orbit.
    pub max_witness_alt: f64,
    /// Witness at the exact inner and outer turning points.
    pub turning_point_witness: [f64; 2],
    /// `max |R̄ - n(n-1)|` over the samples.
    pub scalar_deviation: f64,
    /// `max |trace - R̄|` over the samples.
    pub trace_deviation: f64,
    pub trace_audit_passed: bool,
    pub alt_trace_audit_passed: bool,
    pub pohozaev: f64,
    #[serde(rename = "yamabe_J")]
    pub yamabe_j: f64,
    pub notes: Vec<String>,
}

fn require_physical(orbit: &OrbitTrajectory) -> Result<()> {
    orbit.kind.require_emden_fowler()?;
    if orbit.frame != TimeFrame::Physical {
        return Err(Error::Mismatch("orbit must be in u-time".into()));
    }
    Ok(())
}

/// Evaluates `D₀R̄₀₀` along a u-time orbit with `u''`, `u'''` taken from the
/// ODE, together with the curvature audits, Pohozaev invariant and Yamabe
/// functional of the orbit.
pub fn nonparallel_witness(n: Dimension, orbit: &OrbitTrajectory) -> Result<CurvatureReport> {
    require_physical(orbit)?;
    if orbit.kind.n != n {
        return Err(Error::Mismatch("orbit dimension differs from n".into()));
    }
    let nf = n.as_f64();
    let target = nf * (nf - 1.0);
    let mut profile = Vec::with_capacity(orbit.samples.len());
    let (mut max_w, mut max_alt, mut scalar_dev, mut trace_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut audit, mut alt_audit) = (true, true);
    for s in &orbit.samples {
        let (u, up) = (s.w, s.wp);
        let upp = yamabe_acceleration(n, u);
        let uppp = yamabe_jerk(n, u, up);
        let d = witness(n, u, up, upp, uppp);
        max_w = max_w.max(d.abs());
        max_alt = max_alt.max(witness_alt(n, u, up, upp, uppp).abs());
        let rc = ricci_components(n, u, up, upp)?;
        scalar_dev = scalar_dev.max((rc.scalar - target).abs());
        trace_dev = trace_dev.max((rc.trace - rc.scalar).abs());
        audit &= rc.audit_passes();
        alt_audit &= rc.alt_audit_passes();
        profile.push(WitnessSample { t: s.t, d0r00: d });
    }

    let kind = SystemKind::emden_fowler(n);
    let alpha = structural_constants(kind).alpha;
    let turning_point_witness = if orbit.is_constant() {
        [0.0, 0.0]
    } else {
        let (a, b) = turning_points_at(kind, orbit.level())?;
        let at = |w: f64| {
            let u = alpha * w;
            witness(n, u, 0.0, yamabe_acceleration(n, u), yamabe_jerk(n, u, 0.0))
        };
        [at(a), at(b)]
    };

    let mut notes = Vec::new();
    if !alt_audit {
        notes.push(
            "R00 = +2(n-1)/(n-2)(u''/u + u'^2/u^2) fails the trace audit; reported R00 and D0R00 use \
             -2(n-1)/(n-2)(u''/u - u'^2/u^2)"
                .to_string(),
        );
    }
    if orbit.drift_exceeded {
        notes.push(format!(
            "energy drift {} exceeds tolerance {}",
            orbit.energy_drift, orbit.drift_tolerance
        ));
    }

    Ok(CurvatureReport {
        n,
        c: orbit.c,
        period: orbit.period,
        witness_profile: profile,
        max_witness: max_w,
        max_witness_alt: max_alt,
        turning_point_witness,
        scalar_deviation: scalar_dev,
        trace_deviation: trace_dev,
        trace_audit_passed: audit,
        alt_trace_audit_passed: alt_audit,
        pohozaev: pohozaev(n, orbit.c.min(1.0 / nf))?,
        yamabe_j: yamabe_functional(n, orbit.duration(), Profile::Orbit(orbit))?,
        notes,
    })
}

/// Volume of the unit `k`-sphere, `2π^{(k+1)/2}/Γ((k+1)/2)`.
pub fn sphere_volume(k: u32) -> f64 {
    2.0 * PI.powf((k as f64 + 1.0) / 2.0) / gamma_half(k + 1)
}

/// `Γ(m/2)` for a positive integer `m`, by the recurrence from `Γ(1)`, `Γ(1/2)`.
fn gamma_half(m: u32) -> f64 {
    let (mut g, mut x) = if m.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x < m as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Dilational Pohozaev invariant `4(n-1)/(n-2) ω_{n-1} c`.
pub fn pohozaev(n: Dimension, c: f64) -> Result<f64> {
    let nf = n.as_f64();
    if !(0.0..=1.0 / nf).contains(&c) {
        return Err(Error::range("c", c, format!("[0, {}]", 1.0 / nf)));
    }
    Ok(4.0 * (nf - 1.0) / (nf - 2.0) * sphere_volume(n.get() - 1) * c)
}

/// Input of [`yamabe_functional`].
#[derive(Debug, Clone, Copy)]
pub enum Profile<'a> {
    /// The constant solution `u ≡ α`.
    Trivial,
    /// A u-time trajectory covering exactly `[0, T]`.
    Orbit(&'a OrbitTrajectory),
}

fn simpson(h: f64, f: &[f64]) -> f64 {
    let last = f.len() - 1;
    let inner: f64 = f[1..last]
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    h / 3.0 * (f[0] + inner + f[last])
}

/// Yamabe quotient on `S^1(T) × S^{n-1}` of a t-only profile.
pub fn yamabe_functional(n: Dimension, length: f64, profile: Profile<'_>) -> Result<f64> {
    if !(length > 0.0) {
        return Err(Error::range("T", length, "(0, inf)"));
    }
    let nf = n.as_f64();
    let omega = sphere_volume(n.get() - 1);
    let orbit = match profile {
        Profile::Trivial => {
            return Ok((nf - 1.0) * (nf - 2.0) * (length * omega).powf(2.0 / nf));
        }
        Profile::Orbit(o) => o,
    };
    require_physical(orbit)?;
    let steps = orbit.samples.len().saturating_sub(1);
    if steps < 2 || steps % 2 != 0 {
        return Err(Error::Mismatch(format!(
            "Simpson's rule needs an even number of intervals, got {steps}"
        )));
    }
    if (orbit.duration() - length).abs() > 1e-9 * length || orbit.samples[0].t != 0.0 {
        return Err(Error::Mismatch(format!(
            "orbit covers [{}, {}], expected [0, {length}]",
            orbit.samples[0].t, orbit.samples[steps].t
        )));
    }
    let h = orbit.duration() / steps as f64;
    let p = 2.0 * nf / (nf - 2.0);
    let kinetic: Vec<f64> = orbit.samples.iter().map(|s| s.wp * s.wp).collect();
    let mass: Vec<f64> = orbit.samples.iter().map(|s| s.w * s.w).collect();
    let crit: Vec<f64> = orbit.samples.iter().map(|s| s.w.powf(p)).collect();
    let num = (4.0 * (nf - 1.0) / (nf - 2.0) * simpson(h, &kinetic)
        + (nf - 1.0) * (nf - 2.0) * simpson(h, &mass))
        * omega;
    let den = (omega * simpson(h, &crit)).powf((nf - 2.0) / nf);
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConstants {
    pub omega_nm1: f64,
    pub omega_n: f64,
    #[serde(rename = "J_trivial")]
    pub j_trivial: f64,
    pub mu_sphere: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    pub hv_bound: f64,
}

pub fn reference_constants(n: Dimension, length: f64) -> Result<ReferenceConstants> {
    if !(length > 0.0) {
        return Err(Error::range("T", length, "(0, inf)"));
    }
    let nf = n.as_f64();
    let omega_nm1 = sphere_volume(n.get() - 1);
    let omega_n = sphere_volume(n.get());
    let k2 = 4.0 * omega_n.powf(-2.0 / nf) / (nf * (nf - 2.0));
    Ok(ReferenceConstants {
        omega_nm1,
        omega_n,
        j_trivial: (nf - 1.0) * (nf - 2.0) * (length * omega_nm1).powf(2.0 / nf),
        mu_sphere: nf * (nf - 1.0) * omega_n.powf(2.0 / nf),
        k2,
        hv_bound: k2 / (length * length) + (nf - 2.0) / nf * omega_n.powf(-2.0 / nf),
    })
}

/// Eigenvalues `λ = c/n + (1-n)c e^{-nψ}`, `μ = c/n + c e^{-nψ}` (c the trace)
/// of the two-eigenvalue Codazzi tensor.
pub fn codazzi_pair(n: Dimension, trace: f64, psi: f64) -> (f64, f64) {
    let nf = n.as_f64();
    let e = (-nf * psi).exp();
    (trace / nf + (1.0 - nf) * trace * e, trace / nf + trace * e)
}

/// Max over `x_grid` of the radial Yamabe residual on the unit sphere for
/// `u_t(x) = (√(1+t²) + t cos(αx))^{-(n-2)/2}`, `α = √(R/(n(n-1)))`.
pub fn sphere_family_residual(n: Dimension, r: f64, t: f64, x_grid: &[f64]) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::range("R", r, "(0, inf)"));
    }
    if x_grid.is_empty() {
        return Err(Error::domain(
            "x_grid",
            f64::NAN,
            "non-empty subset of (0, pi)",
        ));
    }
    let nf = n.as_f64();
    let alpha = (r / (nf * (nf - 1.0))).sqrt();
    let m = (nf - 2.0) / 2.0;
    let p = (nf + 2.0) / (nf - 2.0);
    let s = (1.0 + t * t).sqrt();
    let residuals = x_grid
        .par_iter()
        .map(|&x| {
            if !(x > 0.0 && x < PI) {
                return Err(Error::domain("x", x, "(0, pi)"));
            }
            let (sin, cos) = (alpha * x).sin_cos();
            let d = s + t * cos;
            let d1 = -t * alpha * sin;
            let d2 = -t * alpha * alpha * cos;
            let u = d.powf(-m);
            let u1 = -m * d.powf(-m - 1.0) * d1;
            let u2 = m * (m + 1.0) * d.powf(-m - 2.0) * d1 * d1 - m * d.powf(-m - 1.0) * d2;
            let cot = x.cos() / x.sin();
            let res = 4.0 * (nf - 1.0) / (nf - 2.0) * (-u2 - (nf - 1.0) * cot * u1)
                + nf * (nf - 1.0) * u
                - r * u.powf(p);
            Ok(res.abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}
