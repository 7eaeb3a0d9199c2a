//! Numerical laboratory for strongly singular rank-one perturbations
//! T + g chi (chi, .) of a positive diagonal operator.
//!
//! The crate builds a finite spectral surrogate of the Hilbert scale, the
//! Pontryagin space on which the renormalized operator acts, the explicit
//! higher-order counterterm systems that approximate it, and the convergence
//! experiments comparing their evolution operators (Schrodinger, parabolic,
//! hyperbolic) and resolvents.

pub mod approx;
pub mod convergence;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod pontryagin;
pub mod report;
pub mod resolvent;
pub mod spectral;

pub use error::{CoreError, Result};
pub use num_complex::Complex64;
