//! Emitted event records and the internal queue entry ordering.

use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Physical event categories emitted to sinks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "external-contact")]
    ExternalContact,
    #[serde(rename = "tether-contact")]
    TetherContact,
    #[serde(rename = "wall")]
    Wall,
}

/// One resolved event on a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    /// One id for wall events, two for contacts.
    pub participants: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_id: Option<u32>,
    pub pre_velocities: Vec<Vec3>,
    pub post_velocities: Vec<Vec3>,
}

/// Queue entry classes in tie-break order: simultaneous events resolve by
/// (time, class, participant ids).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum EntryClass {
    ExternalContact = 0,
    TetherContact = 1,
    Wall = 2,
    CellCross = 3,
}

/// Scheduled event with invalidation stamps. An entry is stale once either
/// participant's stamp has moved past the recorded value.
#[derive(Clone, Copy, Debug)]
pub(crate) struct QueueEntry {
    pub time: f64,
    pub class: EntryClass,
    pub a: u32,
    /// Partner id for pair events, `u32::MAX` otherwise.
    pub b: u32,
    /// Wall id for wall entries; `2*axis + direction` for cell crossings.
    pub aux: u32,
    pub stamp_a: u32,
    pub stamp_b: u32,
}

impl QueueEntry {
    fn key(&self) -> (EntryClass, u32, u32, u32) {
        (self.class, self.a, self.b, self.aux)
    }
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.time.total_cmp(&other.time).is_eq() && self.key() == other.key()
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.key().cmp(&other.key()))
    }
}
