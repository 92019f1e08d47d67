//! Path-space integrals built from cylinder measures.
//!
//! A cylinder function depends on a path only through its values at finitely
//! many times. Integrating one against a transition kernel reduces to a finite
//! dimensional integral over the configuration space, which this crate
//! evaluates by tensor quadrature. On top of that sit:
//!
//! * positive (heat-kernel) pinned measures on the circle, an interval and the
//!   half-line,
//! * complex kernels and their four-part signed decomposition,
//! * the Feynman integral as the limit of complex cylinder integrals against
//!   complex-time regularized Schrodinger kernels,
//! * the radial free propagator expressed through Bessel functions of real
//!   order, together with its perturbation series for power potentials.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex_measure;
pub mod cylinder;
pub mod error;
pub mod extrapolate;
pub mod feynman;
pub mod kernel;
pub mod quadrature;
pub mod radial;

pub use error::{Error, Result};
pub use num_complex::Complex64;
