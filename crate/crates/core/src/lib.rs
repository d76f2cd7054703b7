//! Numerical laboratory for Sobolev-type constants of the p-Laplacian on
//! planar domains and their limit towards the Cheeger constant as `p -> 1+`.
//!
//! The crate is organised around a raster [`grid::GridDomain`]:
//!
//! * [`grid`] holds the domain, discrete fields and the discrete measures
//!   (area, perimeter, `L^q` norms, p-Dirichlet energy, total variation).
//! * [`special`] evaluates the closed-form constants (Gamma, Beta, unit-ball
//!   volume, Sobolev constant, ball Cheeger constant).
//! * [`plap`] computes the constrained minimisers `u_{p,q}` and `lambda_{p,q}`.
//! * [`cheeger`] computes `h(Omega)` by inner parallel sets and by total
//!   variation bisection.
//! * [`harness`] runs continuation sweeps in `p` and checks the limit claims.
//! * [`verify`] bundles the acceptance checks; [`cli`] is the command-line
//!   front end.

pub mod cheeger;
pub mod cli;
mod error;
pub mod grid;
pub mod harness;
pub mod plap;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
