//! Event-driven time evolution.
//!
//! The engine processes contact, wall and cell-crossing events in
//! chronological order from a binary heap. Entries carry per-particle
//! invalidation stamps; any processed event bumps the stamps of its
//! participants, so stale predictions drop out when popped. Positions are
//! advanced ballistically and lazily (each body carries its own sync time).

use crate::dynamics::cells::CellGrid;
use crate::dynamics::classify::classify_pairs;
use crate::dynamics::collide::{resolve_pair_collision, resolve_wall_collision};
use crate::dynamics::event::{EntryClass, EventKind, EventRecord, QueueEntry};
use crate::dynamics::geometry::{BoundaryKind, DomainGeometry};
use crate::dynamics::particle::{Mode, ParticleState, SystemConfig};
use crate::dynamics::predict::{predict_pair_contact, predict_wall_event, PairKind, TAU_GRAZING};
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

/// Full pair-distance audit cadence, in physical events.
const AUDIT_INTERVAL: u64 = 10_000;
/// Accepted deviation of the centre distance from d at a contact, relative to d.
const TAU_CONTACT_REL: f64 = 1e-9;
/// Audit slack on pair distances, relative to d.
const TAU_OVERLAP_REL: f64 = 1e-8;

/// Stop condition for one `advance` call.
#[derive(Clone, Copy, Debug)]
pub enum Budget {
    /// Process exactly this many physical events (contacts and wall bounces),
    /// or fewer if the system goes quiescent.
    MaxEvents(u64),
    /// Advance the clock by this much time.
    MaxTime(f64),
}

/// Consumers for the event stream and periodic snapshots.
#[derive(Default)]
pub struct Sinks<'a> {
    pub events: Option<&'a mut dyn FnMut(&EventRecord)>,
    /// Emit snapshots every `snapshot_interval` time units, starting one
    /// interval after the current time.
    pub snapshot_interval: Option<f64>,
    pub snapshots: Option<&'a mut dyn FnMut(&SystemConfig)>,
}

impl<'a> Sinks<'a> {
    pub fn none() -> Self {
        Sinks::default()
    }
}

/// Counters from one `advance` call.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunStats {
    pub events: u64,
    pub external_contacts: u64,
    pub tether_contacts: u64,
    pub wall_bounces: u64,
    pub cell_crossings: u64,
    pub grazing_skips: u64,
    pub stale_drops: u64,
    pub audits: u64,
    pub final_time: f64,
}

struct Body {
    r: Vec3,
    v: Vec3,
    sync_time: f64,
    stamp: u32,
}

impl Body {
    fn position_at(&self, t: f64) -> Vec3 {
        self.r + self.v * (t - self.sync_time)
    }

    fn state(&self, id: u32) -> ParticleState {
        ParticleState {
            id,
            r: self.r,
            v: self.v,
            sync_time: self.sync_time,
        }
    }
}

pub struct Simulation {
    d: f64,
    m: f64,
    geometry: DomainGeometry,
    mode: Mode,
    time: f64,
    bodies: Vec<Body>,
    /// Tether partners per particle (s_n-model).
    partners: Vec<Vec<u32>>,
    registered: BTreeSet<(u32, u32)>,
    grid: CellGrid,
    queue: BinaryHeap<Reverse<QueueEntry>>,
    events_total: u64,
}

impl Simulation {
    /// Build the engine from a validated configuration.
    ///
    /// Particle ids must be `0..N` in order. In s_n-model mode the
    /// mutually-internal pair set is frozen here, from
    /// `registered_internal` when present and from the geometry otherwise.
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.check_basic()?;
        let n = config.n();
        if n == 0 {
            return Err(Error::InvalidParam("no particles".into()));
        }
        for (i, p) in config.particles.iter().enumerate() {
            if p.id as usize != i {
                return Err(Error::InvalidParam(
                    "particle ids must be 0..N in order".into(),
                ));
            }
        }
        if config.geometry.kind == BoundaryKind::SpecularBox {
            for l in config.geometry.lengths {
                if l <= config.d {
                    return Err(Error::InvalidParam(
                        "specular box edges must exceed d".into(),
                    ));
                }
            }
        }
        let tau_overlap = TAU_OVERLAP_REL * config.d;
        for p in &config.particles {
            if !config.geometry.contains(p.r, config.d, tau_overlap) {
                return Err(Error::InvalidParam(format!(
                    "particle {} outside the domain",
                    p.id
                )));
            }
        }

        let registered: BTreeSet<(u32, u32)> = match config.mode {
            Mode::SnModel => match &config.registered_internal {
                Some(pairs) => pairs.iter().copied().collect(),
                None => classify_pairs(&config).mutually_internal,
            },
            Mode::StandardGas => {
                let derived = classify_pairs(&config);
                if let Some(&(a, b)) = derived.mutually_internal.iter().next() {
                    let dist = config.geometry.distance(
                        config.particles[a as usize].r,
                        config.particles[b as usize].r,
                    );
                    if dist < config.d - tau_overlap {
                        return Err(Error::InvalidParam(format!(
                            "standard-gas config has overlapping pair ({a}, {b}) at distance {dist}"
                        )));
                    }
                }
                BTreeSet::new()
            }
            Mode::FreeFlow => BTreeSet::new(),
        };

        let mut partners = vec![Vec::new(); n];
        for &(a, b) in &registered {
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidParam(format!(
                    "registered internal pair ({a}, {b}) out of range"
                )));
            }
            partners[a as usize].push(b);
            partners[b as usize].push(a);
        }

        let time = config.time;
        let mut grid = CellGrid::new(&config.geometry, config.d, n);
        let mut bodies = Vec::with_capacity(n);
        for p in &config.particles {
            let r = config.geometry.wrap(p.position_at(time));
            bodies.push(Body {
                r,
                v: p.v,
                sync_time: time,
                stamp: 0,
            });
        }
        for (i, b) in bodies.iter().enumerate() {
            let cell = grid.cell_for_position(b.r);
            grid.insert(i, cell);
        }

        let mut sim = Simulation {
            d: config.d,
            m: config.m,
            geometry: config.geometry,
            mode: config.mode,
            time,
            bodies,
            partners,
            registered,
            grid,
            queue: BinaryHeap::new(),
            events_total: 0,
        };
        sim.build_initial_queue()?;
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Frozen mutually-internal pair set (empty outside s_n-model).
    pub fn registered_internal(&self) -> &BTreeSet<(u32, u32)> {
        &self.registered
    }

    /// Snapshot of the state at the current clock, particles in id order.
    pub fn current_config(&self) -> SystemConfig {
        let particles = self
            .bodies
            .iter()
            .enumerate()
            .map(|(i, b)| ParticleState {
                id: i as u32,
                r: self.geometry.wrap(b.position_at(self.time)),
                v: b.v,
                sync_time: self.time,
            })
            .collect();
        SystemConfig {
            particles,
            d: self.d,
            m: self.m,
            geometry: self.geometry,
            mode: self.mode,
            time: self.time,
            registered_internal: if self.mode == Mode::SnModel {
                Some(self.registered.iter().copied().collect())
            } else {
                None
            },
        }
    }

    fn tau_contact(&self) -> f64 {
        TAU_CONTACT_REL * self.d
    }

    fn tau_overlap(&self) -> f64 {
        TAU_OVERLAP_REL * self.d
    }

    fn is_partner(&self, i: usize, j: usize) -> bool {
        self.partners[i].contains(&(j as u32))
    }

    fn advance_body(&mut self, i: usize) {
        let t = self.time;
        let b = &mut self.bodies[i];
        b.r = b.r + b.v * (t - b.sync_time);
        b.sync_time = t;
    }

    fn sync_all(&mut self, t: f64) {
        for b in &mut self.bodies {
            b.r = b.r + b.v * (t - b.sync_time);
            b.sync_time = t;
        }
        self.time = t;
    }

    fn push_pair(&mut self, i: usize, j: usize) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let kind = if self.is_partner(a, b) {
            PairKind::Tether
        } else {
            PairKind::External
        };
        let sa = self.bodies[a].state(a as u32);
        let sb = self.bodies[b].state(b as u32);
        if let Ok(Some((t, ev))) = predict_pair_contact(&sa, &sb, kind, self.d, &self.geometry) {
            let class = match ev {
                EventKind::ExternalContact => EntryClass::ExternalContact,
                EventKind::TetherContact => EntryClass::TetherContact,
                EventKind::Wall => unreachable!(),
            };
            self.queue.push(Reverse(QueueEntry {
                time: t,
                class,
                a: a as u32,
                b: b as u32,
                aux: 0,
                stamp_a: self.bodies[a].stamp,
                stamp_b: self.bodies[b].stamp,
            }));
        }
    }

    fn push_boundary(&mut self, i: usize) {
        let state = self.bodies[i].state(i as u32);
        if let Some((t, wall)) = predict_wall_event(&state, self.d, &self.geometry) {
            self.queue.push(Reverse(QueueEntry {
                time: t,
                class: EntryClass::Wall,
                a: i as u32,
                b: u32::MAX,
                aux: wall,
                stamp_a: self.bodies[i].stamp,
                stamp_b: 0,
            }));
        }
        // Cell crossings keep the broad phase current. A specular single-cell
        // grid has no interior boundaries and walls preempt the outer faces.
        if self.geometry.is_periodic() || !self.grid.single_cell() {
            let r_now = self.bodies[i].position_at(self.time);
            if let Some((t, axis, dir)) =
                self.grid
                    .crossing_event(self.grid.cell_of(i), r_now, self.bodies[i].v, self.time)
            {
                self.queue.push(Reverse(QueueEntry {
                    time: t,
                    class: EntryClass::CellCross,
                    a: i as u32,
                    b: u32::MAX,
                    aux: (axis * 2 + dir) as u32,
                    stamp_a: self.bodies[i].stamp,
                    stamp_b: 0,
                }));
            }
        }
    }

    /// Re-predict everything involving particle `i`.
    fn schedule_for(&mut self, i: usize) {
        self.push_boundary(i);
        if self.mode == Mode::FreeFlow {
            return;
        }
        let mut neighbors = Vec::new();
        self.grid
            .for_each_in_neighborhood(self.grid.cell_of(i), |j| {
                if j != i {
                    neighbors.push(j);
                }
            });
        for j in neighbors {
            if !self.is_partner(i, j) {
                self.push_pair(i, j);
            }
        }
        let partners = self.partners[i].clone();
        for p in partners {
            self.push_pair(i, p as usize);
        }
    }

    fn build_initial_queue(&mut self) -> Result<()> {
        for i in 0..self.bodies.len() {
            self.push_boundary(i);
        }
        if self.mode == Mode::FreeFlow {
            return Ok(());
        }
        // each unordered pair once: per cell, in-cell pairs plus pairs into
        // strictly larger neighbour cells
        for cell in 0..self.grid.cell_count() {
            let mut here = Vec::new();
            self.grid.for_each_in_cell(cell, |i| here.push(i));
            if here.is_empty() {
                continue;
            }
            for (k, &i) in here.iter().enumerate() {
                for &j in &here[k + 1..] {
                    if !self.is_partner(i, j) {
                        self.push_pair(i, j);
                    }
                }
            }
            for other in self.grid.neighbor_cells(cell) {
                if other <= cell {
                    continue;
                }
                let mut there = Vec::new();
                self.grid.for_each_in_cell(other, |j| there.push(j));
                for &i in &here {
                    for &j in &there {
                        if !self.is_partner(i, j) {
                            self.push_pair(i, j);
                        }
                    }
                }
            }
        }
        let pairs: Vec<(u32, u32)> = self.registered.iter().copied().collect();
        for (a, b) in pairs {
            self.push_pair(a as usize, b as usize);
        }
        Ok(())
    }

    fn entry_valid(&self, e: &QueueEntry) -> bool {
        if self.bodies[e.a as usize].stamp != e.stamp_a {
            return false;
        }
        if e.b != u32::MAX && self.bodies[e.b as usize].stamp != e.stamp_b {
            return false;
        }
        true
    }

    /// Full pair-distance audit at the current clock.
    fn audit(&self) -> Result<()> {
        if self.mode == Mode::FreeFlow {
            return Ok(());
        }
        let positions: Vec<Vec3> = self
            .bodies
            .iter()
            .map(|b| self.geometry.wrap(b.position_at(self.time)))
            .collect();
        let tau = self.tau_overlap();
        let mut worst: Option<(usize, usize, f64)> = None;
        crate::dynamics::cells::for_each_close_pair(
            &positions,
            self.d,
            &self.geometry,
            |i, j, dist| {
                if dist < self.d - tau && !self.registered.contains(&(i as u32, j as u32)) {
                    if worst.map_or(true, |(_, _, w)| dist < w) {
                        worst = Some((i, j, dist));
                    }
                }
            },
        );
        if let Some((i, j, dist)) = worst {
            return Err(Error::PenetrationDetected {
                a: i as u32,
                b: j as u32,
                distance: dist,
                d: self.d,
            });
        }
        for &(a, b) in &self.registered {
            let dist = self
                .geometry
                .distance(positions[a as usize], positions[b as usize]);
            if dist > self.d + tau {
                return Err(Error::TetherBroken {
                    a,
                    b,
                    distance: dist,
                    d: self.d,
                });
            }
        }
        Ok(())
    }

    /// Process events until the budget is exhausted.
    pub fn advance(&mut self, budget: Budget, sinks: &mut Sinks) -> Result<RunStats> {
        let mut stats = RunStats::default();
        let (t_end, max_events) = match budget {
            Budget::MaxTime(dt) => {
                if !(dt.is_finite() && dt >= 0.0) {
                    return Err(Error::InvalidParam("time budget must be >= 0".into()));
                }
                (self.time + dt, u64::MAX)
            }
            Budget::MaxEvents(n) => (f64::INFINITY, n),
        };
        let mut next_snap = sinks.snapshot_interval.map(|dt| {
            debug_assert!(dt > 0.0);
            self.time + dt
        });

        while stats.events < max_events {
            let Some(Reverse(head)) = self.queue.peek() else {
                break;
            };
            if head.time > t_end {
                break;
            }
            let entry = self.queue.pop().unwrap().0;
            if !self.entry_valid(&entry) {
                stats.stale_drops += 1;
                continue;
            }

            self.emit_snapshots_until(entry.time.min(t_end), &mut next_snap, sinks);

            let tau_time = 1e-12 * (1.0 + self.time.abs());
            if entry.time < self.time - tau_time {
                return Err(Error::CausalityViolation {
                    event_time: entry.time,
                    clock: self.time,
                });
            }
            self.time = self.time.max(entry.time);

            match entry.class {
                EntryClass::ExternalContact | EntryClass::TetherContact => {
                    self.process_contact(&entry, &mut stats, sinks)?;
                }
                EntryClass::Wall => {
                    self.process_wall(&entry, &mut stats, sinks)?;
                }
                EntryClass::CellCross => {
                    self.process_crossing(&entry, &mut stats);
                }
            }
        }

        if t_end.is_finite() {
            self.emit_snapshots_until(t_end, &mut next_snap, sinks);
            self.sync_all(t_end);
        }
        stats.final_time = self.time;
        Ok(stats)
    }

    fn emit_snapshots_until(&mut self, t_cap: f64, next_snap: &mut Option<f64>, sinks: &mut Sinks) {
        let Some(interval) = sinks.snapshot_interval else {
            return;
        };
        while let Some(ts) = *next_snap {
            if ts > t_cap {
                break;
            }
            self.sync_all(ts);
            if let Some(sink) = sinks.snapshots.as_deref_mut() {
                let snap = self.current_config();
                sink(&snap);
            }
            *next_snap = Some(ts + interval);
        }
    }

    fn after_physical_event(&mut self, stats: &mut RunStats) -> Result<()> {
        stats.events += 1;
        self.events_total += 1;
        if self.events_total % AUDIT_INTERVAL == 0 {
            self.audit()?;
            stats.audits += 1;
        }
        Ok(())
    }

    fn process_contact(
        &mut self,
        entry: &QueueEntry,
        stats: &mut RunStats,
        sinks: &mut Sinks,
    ) -> Result<()> {
        let (i, j) = (entry.a as usize, entry.b as usize);
        self.advance_body(i);
        self.advance_body(j);
        let w = self
            .geometry
            .displacement(self.bodies[i].r, self.bodies[j].r);
        let dist = w.norm();
        let tether = entry.class == EntryClass::TetherContact;
        if (dist - self.d).abs() > self.tau_contact() {
            // beyond the audit slack on the forbidden side this is not a
            // stale root, it is a missed event
            if !tether && dist < self.d - self.tau_overlap() {
                return Err(Error::PenetrationDetected {
                    a: entry.a,
                    b: entry.b,
                    distance: dist,
                    d: self.d,
                });
            }
            if tether && dist > self.d + self.tau_overlap() {
                return Err(Error::TetherBroken {
                    a: entry.a,
                    b: entry.b,
                    distance: dist,
                    d: self.d,
                });
            }
            // numerically stale root (or a flipped minimum image); re-predict
            stats.stale_drops += 1;
            self.push_pair(i, j);
            return Ok(());
        }
        let normal = w * (1.0 / dist);
        let vn = (self.bodies[i].v - self.bodies[j].v).dot(normal);
        if vn.abs() < TAU_GRAZING {
            stats.grazing_skips += 1;
            self.push_pair(i, j);
            return Ok(());
        }
        let approaching_expected = !tether;
        if (vn < 0.0) != approaching_expected {
            stats.stale_drops += 1;
            self.push_pair(i, j);
            return Ok(());
        }
        let pre = [self.bodies[i].v, self.bodies[j].v];
        let (v1, v2) = resolve_pair_collision(pre[0], pre[1], normal)
            .expect("contact normal is unit by construction");
        self.bodies[i].v = v1;
        self.bodies[j].v = v2;
        self.bodies[i].stamp = self.bodies[i].stamp.wrapping_add(1);
        self.bodies[j].stamp = self.bodies[j].stamp.wrapping_add(1);
        if tether {
            stats.tether_contacts += 1;
        } else {
            stats.external_contacts += 1;
        }
        if let Some(sink) = sinks.events.as_deref_mut() {
            sink(&EventRecord {
                time: self.time,
                kind: if tether {
                    EventKind::TetherContact
                } else {
                    EventKind::ExternalContact
                },
                participants: vec![entry.a, entry.b],
                wall_id: None,
                pre_velocities: pre.to_vec(),
                post_velocities: vec![v1, v2],
            });
        }
        self.schedule_for(i);
        self.schedule_for(j);
        self.after_physical_event(stats)
    }

    fn process_wall(
        &mut self,
        entry: &QueueEntry,
        stats: &mut RunStats,
        sinks: &mut Sinks,
    ) -> Result<()> {
        let i = entry.a as usize;
        self.advance_body(i);
        let wall = entry.aux;
        let normal = DomainGeometry::wall_normal(wall);
        if self.bodies[i].v.dot(normal) <= 0.0 {
            stats.stale_drops += 1;
            self.push_boundary(i);
            return Ok(());
        }
        // snap the centre onto the contact plane
        let axis = (wall / 2) as usize;
        self.bodies[i].r[axis] = if wall % 2 == 1 {
            self.geometry.lengths[axis] - self.d / 2.0
        } else {
            self.d / 2.0
        };
        let pre = self.bodies[i].v;
        let post = resolve_wall_collision(pre, normal);
        self.bodies[i].v = post;
        self.bodies[i].stamp = self.bodies[i].stamp.wrapping_add(1);
        stats.wall_bounces += 1;
        if let Some(sink) = sinks.events.as_deref_mut() {
            sink(&EventRecord {
                time: self.time,
                kind: EventKind::Wall,
                participants: vec![entry.a],
                wall_id: Some(wall),
                pre_velocities: vec![pre],
                post_velocities: vec![post],
            });
        }
        self.schedule_for(i);
        self.after_physical_event(stats)
    }

    fn process_crossing(&mut self, entry: &QueueEntry, stats: &mut RunStats) {
        let i = entry.a as usize;
        self.advance_body(i);
        let axis = (entry.aux / 2) as usize;
        let dir = (entry.aux % 2) as usize;
        let (new_cell, shift) = self.grid.crossed_cell(self.grid.cell_of(i), axis, dir);
        if shift != 0.0 {
            debug_assert!(self.geometry.is_periodic());
            self.bodies[i].r[axis] += shift * self.geometry.lengths[axis];
        }
        self.grid.move_to(i, new_cell);
        self.bodies[i].stamp = self.bodies[i].stamp.wrapping_add(1);
        stats.cell_crossings += 1;
        self.schedule_for(i);
    }
}

/// Run `config` forward under `budget`, returning the final configuration.
pub fn advance_system(
    config: SystemConfig,
    budget: Budget,
    sinks: &mut Sinks,
) -> Result<(SystemConfig, RunStats)> {
    let mut sim = Simulation::new(config)?;
    let stats = sim.advance(budget, sinks)?;
    Ok((sim.current_config(), stats))
}
