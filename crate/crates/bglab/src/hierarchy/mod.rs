//! Numerical diagnostics for the one-particle balance equation.

mod balance;
mod collision;
mod residual;

pub use balance::{
    hierarchy_balance_report, BalanceCell, BalanceInputs, BalanceReport, WELL_SAMPLED_THRESHOLD,
};
pub use collision::{
    collision_integral_mc, collision_integral_mc_from_source, CollisionField, CollisionMoments,
    CollisionParams, MomentCheck, VelocityGrid, VelocitySource,
};
pub use residual::{free_streaming_residual, ResidualField};
