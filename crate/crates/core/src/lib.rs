//! Jacobi theta functions, elliptic functions and the Jacobi zeta function.
//!
//! Every quantity is available through two independent routes: the classical
//! q-series (the ground truth) and the exponential-trigonometric expansions in
//! powers of `sin πv`. The [`report_io`] module records how far the routes
//! disagree, and the `jtheta` binary runs the full verification battery.
//!
//! Conventions: the theta argument `v` has period 1 (`θ3(v+1) = θ3(v)`), the
//! nome is `q = exp(iπτ)`, and the elliptic argument is `u = 2K·v` with
//! `K = (π/2)·θ3(0)²`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications_verify;
pub mod cli;
pub mod complex_core;
pub mod elliptic;
pub mod error;
pub mod report_io;
pub mod theta_classical;
pub mod theta_expansion;
pub mod trig_coefficients;
pub mod zeta;

pub use complex_core::{Complex, TruncationPolicy};
pub use error::{Error, Result};
pub use report_io::{Measurement, Verdict, VerificationReport};
pub use theta_classical::{EllipticModuli, LatticeParameter, StripDomain, ThetaConstants, ThetaKind};
pub use trig_coefficients::{CoefficientMethod, CoefficientTable};

