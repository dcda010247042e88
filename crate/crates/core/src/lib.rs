//! Optimal control of a heat equation with an exponential memory term, the
//! limit of a problem posed in a domain perforated by small absorbing
//! particles.
//!
//! The state equation is
//!
//! ```text
//! u_t - Lap u + A (u - B H(u)) = f + chi_omega v,   u(0) = 0,  u = 0 on the boundary
//! H(u)(t) = int_0^t e^{-B (t - s)} u(s) ds
//! ```
//!
//! discretized by finite differences on a box and implicit Euler in time.
//! [`cell`] computes the constants `A` and `B` from the particle cell
//! problem.

pub mod cell;
pub mod control;
pub mod domain;
pub mod error;
pub mod io;
pub mod manufactured;
pub mod memory;
pub mod presets;
pub mod solvers;

pub use cell::{EffectiveConstants, HomogenizedCoefficients};
pub use control::{CostBreakdown, OptimalTriple, OptimizeReport};
pub use domain::{ControlProblem, Mesh, RegionMask, ScalarField, SpaceTimeField, TimeAxis};
pub use error::{Error, Result};
pub use memory::DiscreteHOperator;
pub use presets::FieldSpec;
pub use solvers::{SolveReport, SolverOptions, StateSolution};
