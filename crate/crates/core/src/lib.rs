//! Smallest-gap statistics for the Gaussian orthogonal, unitary and symplectic
//! ensembles.
//!
//! The crate has three layers:
//!
//! * scalar numerics: [`special_functions`], [`quadrature`], [`pfaffian`];
//! * kernels and correlations: [`kernels`], [`correlations`];
//! * sampling and statistics: [`ensembles`], [`gapstats`].
//!
//! [`matchings`] is independent of the numerics and checks the exponent
//! bookkeeping of signed perfect matchings with exact rational arithmetic.

pub mod beta;
pub mod correlations;
pub mod ensembles;
pub mod error;
pub mod gapstats;
pub mod kernels;
pub mod matchings;
pub mod output;
pub mod pfaffian;
pub mod quadrature;
pub mod special_functions;

pub use beta::Beta;
pub use error::{Error, Result};
