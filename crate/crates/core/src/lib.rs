//! Limiting spectral densities of heavy-tailed random matrices.
//!
//! The crate solves the fixed-point equations satisfied by the Stieltjes
//! transforms of heavy-tailed Wigner, band, covariance and diagonally
//! perturbed ensembles, and simulates the same ensembles at finite size so
//! the two can be compared.

pub mod acceptance;
pub mod density;
pub mod eig;
pub mod error;
pub mod matrices;
pub mod montecarlo;
pub mod oracle;
mod quadrature;
pub mod sampling;
pub mod solver;
pub mod special_fn;

pub use error::{Error, Result};
