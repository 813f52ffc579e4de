//! Shooting, direct minimization, and their cross-check.

pub mod cross;
pub mod minimize;
pub mod shooting;

pub use minimize::{gradient_self_test, minimize, DiscreteEnergy, MinimizeConfig, MinimizeOutcome};
pub use shooting::{shoot_delayed, shoot_immediate, Branch, ShootingConfig, ShootingSolution};
pub use cross::{cross_validate, CrossConfig, CrossProfiles, CrossValidation};
