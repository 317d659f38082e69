//! Rotated-ansatz approximate counterdiabatic driving.
//!
//! Symbolic Pauli algebra, model Hamiltonians, adiabatic gauge potentials,
//! closed-form action functionals, the sequential trajectory optimizer and an
//! exact state-vector propagator.
//!
//! Scalar-generic pieces (ramp, closed forms, spline, BFGS) take any
//! [`num_traits::Float`]; the aliases below fix them to `f64`.

pub mod agp;
pub mod closed_form;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod models;
pub mod operators;
pub mod optimizer;
pub mod validation;

pub use error::{Error, Result};

pub type Ramp = models::Ramp<f64>;
pub type FieldDerivs = closed_form::FieldDerivs<f64>;
pub type RaParams = closed_form::RaParams<f64>;
pub type CubicSpline = optimizer::CubicSpline<f64>;
pub type BfgsOptions = optimizer::BfgsOptions<f64>;

/// Locale-independent decimal with 16 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.15e}")
}
