//! JSON-lines snapshot persistence.
//!
//! One header line carries (N, d, m, geometry, time, mode), followed by one
//! line per particle (id, r, v). Floating-point values render in the
//! shortest form that parses back to the identical bits, so
//! save -> load -> save is byte-identical.

use crate::dynamics::{DomainGeometry, Mode, ParticleState, SystemConfig};
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotHeader {
    n: usize,
    d: f64,
    m: f64,
    geometry: DomainGeometry,
    mode: Mode,
    time: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    registered_internal: Option<Vec<(u32, u32)>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParticleLine {
    id: u32,
    r: [f64; 3],
    v: [f64; 3],
}

/// Append one snapshot to a writer.
pub fn write_snapshot(w: &mut impl Write, config: &SystemConfig) -> Result<()> {
    let header = SnapshotHeader {
        n: config.n(),
        d: config.d,
        m: config.m,
        geometry: config.geometry,
        mode: config.mode,
        time: config.time,
        registered_internal: config.registered_internal.clone(),
    };
    serde_json::to_writer(&mut *w, &header).map_err(io_err)?;
    w.write_all(b"\n")?;
    for p in &config.particles {
        let line = ParticleLine {
            id: p.id,
            r: p.r.0,
            v: p.v.0,
        };
        serde_json::to_writer(&mut *w, &line).map_err(io_err)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Format(format!("snapshot encode: {e}"))
}

/// Read the next snapshot, or `None` at a clean end of stream.
pub fn read_snapshot(r: &mut impl BufRead) -> Result<Option<SystemConfig>> {
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        if !line.trim().is_empty() {
            break;
        }
    }
    let header: SnapshotHeader =
        serde_json::from_str(&line).map_err(|e| Error::Format(format!("snapshot header: {e}")))?;
    let mut particles = Vec::with_capacity(header.n);
    for k in 0..header.n {
        line.clear();
        if r.read_line(&mut line)? == 0 || line.trim().is_empty() {
            return Err(Error::Format(format!(
                "count mismatch: header says {} particles, stream ended after {k}",
                header.n
            )));
        }
        let p: ParticleLine = serde_json::from_str(&line).map_err(|_| {
            Error::Format(format!(
                "count mismatch: header says {} particles, particle line {k} is malformed",
                header.n
            ))
        })?;
        particles.push(ParticleState {
            id: p.id,
            r: Vec3(p.r),
            v: Vec3(p.v),
            sync_time: header.time,
        });
    }
    Ok(Some(SystemConfig {
        particles,
        d: header.d,
        m: header.m,
        geometry: header.geometry,
        mode: header.mode,
        time: header.time,
        registered_internal: header.registered_internal,
    }))
}

/// Read every snapshot in a stream.
pub fn read_snapshot_stream(r: &mut impl BufRead) -> Result<Vec<SystemConfig>> {
    let mut out = Vec::new();
    while let Some(snap) = read_snapshot(r)? {
        out.push(snap);
    }
    Ok(out)
}
