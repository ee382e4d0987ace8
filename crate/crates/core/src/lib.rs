#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Tridiagonal models of the Gaussian, Laguerre and Jacobi beta ensembles at
//! high temperature (`β = 2c/N`), their spectral measures, and Monte Carlo
//! checks that those spectral measures behave like Dirichlet processes.

pub mod cli;
pub mod convergence;
pub mod dirichlet_process;
pub mod ensembles;
pub mod error;
pub mod limit_measures;
pub mod measures;
pub mod quadrature;
pub mod sampling;
pub mod tridiag;

pub use error::{Error, Result};
