//! Constrained minimisers of the p-Dirichlet energy in `L^q`.
//!
//! For `1 < p <= 2` and `0 < q < p*` the solver approximates
//! `lambda_{p,q} = min { ||grad u||_p^p : ||u||_q = 1 }` and its nonnegative
//! minimiser `u_{p,q}`, which solves
//! `-div(|grad u|^{p-2} grad u) = lambda u^{q-1}` with zero boundary values.

mod operator;
mod solver;

pub use solver::{
    critical_exponent, el_residual, initial_guess, lane_emden, lane_emden_factor,
    minimize_rayleigh, sup_normalized, IterationRecord, SolveParams, SolveResult, SolveSummary,
};
