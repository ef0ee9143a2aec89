//! Conformal Finsler spaces: indicatrix volumes, field equations, a
//! cosmological solution, conformal curvature and gradient congruences.

// `!(x > 0.0)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// tensor code reads best with explicit index loops
#![allow(clippy::needless_range_loop)]

pub mod cosmology;
pub mod curvature;
pub mod error;
pub mod field;
pub mod geodesics;
pub mod geometry;
pub mod grid;
pub mod ode;
pub mod oracle;
pub mod quadrature;
pub mod series;
pub mod verification;
pub mod volume;

pub use error::{Error, Result};
