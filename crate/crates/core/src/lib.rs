//! Radially symmetric M-covering stationary points of the energy
//! `I(u) = ∫_B ½|∇u|² + ρ(det ∇u) dx` on the unit disc.
//!
//! With `u(x) = r(R) e_R(Mθ)` the Euler–Lagrange equations reduce to a
//! singular two-point problem for `r` on `[0, 1]` with `r(0) = 0`, `r(1) = 1`.
//! The crate solves it by shooting and by direct minimization of the reduced
//! energy, and checks the qualitative properties a solution must have.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod integrator;
pub mod io;
pub mod kinematics;
pub mod mesh;
pub mod ode;
pub mod penalty;
pub mod solvers;

pub use error::{Error, Result, SolveError};
pub use kinematics::{EnergyBreakdown, RadialProfile};
pub use ode::OdeState;
pub use penalty::{PenaltyKind, PenaltySpec};
