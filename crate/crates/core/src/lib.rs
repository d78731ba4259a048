//! Numerical laboratory for the rotationally invariant constant scalar
//! curvature metrics on `S^1(T) × S^{n-1}` and the related warped products.
//!
//! * [`efcore`] — normalized oscillator dynamics shared by both families.
//! * [`period`] — period function, its derivative, sufficiency criteria.
//! * [`census`] — counting and solving solution branches.
//! * [`ellip`] — elliptic functions and the closed forms for n = 3, 4, 6.
//! * [`curvature`] — Ricci components, non-parallelism witness, invariants.
//! * [`verify`] — the self-check suite.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod census;
pub mod curvature;
pub mod efcore;
pub mod ellip;
pub mod error;
pub mod period;
mod quad;
pub mod verify;

pub use efcore::{Dimension, Family, SystemKind};
pub use error::{Error, Result};
