//! Pseudospectral solvers and diagnostics for the Navier–Stokes–Korteweg
//! relaxation of the Busenberg–Travis cross-diffusion system on the periodic
//! torus `[0, 2π)^d`.
//!
//! * [`grid`]: grids, fields and exact spectral operators.
//! * [`state`]: parameters, states and initial conditions.
//! * [`functionals`]: energy, entropies, relative energy and dissipation terms.
//! * [`nsk`]: IMEX integration of the regularized relaxation system.
//! * [`bt`]: semi-implicit integration of the limit systems.
//! * [`experiments`]: ε-sweeps, limit defect, manufactured solutions and the
//!   inequality stress test.
//! * [`io`]: configuration files, CSV diagnostics and field snapshots.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bt;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod nsk;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use grid::{make_grid, GridSpec, ScalarField, VectorField};
pub use state::{InitialConditionSpec, Params, SpeciesState, SystemState};
pub use trajectory::Trajectory;
