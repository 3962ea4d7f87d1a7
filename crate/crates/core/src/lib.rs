//! Numerical toolkit for ε-regularized harmonic map energies of maps S² → S².
//!
//! The crate is organised bottom-up: [`sphere`] holds charts, quadrature and
//! chart-aware derivatives; [`mobius`] the SL(2,ℂ) algebra; [`energy`] the
//! energy functionals built on both; [`symmetric`] the rotationally
//! symmetric reduction and its minimizer; [`spectral`] the vector-field
//! operators on S².

// Negated float comparisons are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod jet;
pub mod maps;
pub mod mobius;
pub mod optim;
pub mod spectral;
pub mod sphere;
pub mod symmetric;

pub use error::{Error, Result};
