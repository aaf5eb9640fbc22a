//! Finite difference solvers for the periodic nonlinear Klein-Gordon equation
//! `u_tt - u_xx + u + eps^2 u^3 = 0`, a spectral reference solver, energy and
//! stability diagnostics, and a convergence-study harness.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod oscillatory;
pub mod problem;
pub mod schemes;
pub mod spectral;
pub mod harness;
pub mod io;

pub use error::{Error, Result};
pub use grid::{Grid1D, GridFunction};
pub use problem::ProblemSpec;
pub use schemes::{LinearBackend, SchemeKind, SolverParams, StepperState};
