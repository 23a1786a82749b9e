//! Exact event-driven evolution of the hard-sphere and tethered-pair systems.

mod cells;
mod classify;
mod collide;
mod event;
mod geometry;
mod particle;
mod predict;
mod simulation;

pub use classify::{classify_pairs, PairClassification};
pub use collide::{conserved_quantities, resolve_pair_collision, resolve_wall_collision};
pub use event::{EventKind, EventRecord};
pub use geometry::{BoundaryKind, DomainGeometry};
pub use particle::{mean_free_time, Mode, ParticleState, SystemConfig};
pub use predict::{predict_pair_contact, predict_wall_event, PairKind, TAU_GRAZING};
pub use simulation::{advance_system, Budget, RunStats, Simulation, Sinks};

pub(crate) use cells::for_each_close_pair;
