//! Elliptic special functions and the closed-form solutions available for
//! n = 3, 4, 6.

mod bounds;
mod closed;
mod functions;

pub use bounds::{estimate_bounds, EstimateBounds};
pub use closed::{
    closed_form, closed_form_period, curve_class, evaluate_closed_form, evaluate_closed_form_jet,
    raw_energy, ClosedForm, ClosedFormVariant, CurveClass,
};
pub use functions::{
    agm, cubic_roots, elliptic_k, jacobi, jacobi_dn, real_half_period, real_period, weierstrass_p,
    weierstrass_p_second, PBranch, MODULUS_LIMIT, POLE_GUARD,
};
