//! Snapshot persistence: write a run's states as JSON lines, read them back
//! bit-exactly, and resume the simulation from the loaded state.
//!
//! ```bash
//! cargo run --release -p bglab --example persist_and_reload
//! ```

use bglab::dynamics::{advance_system, BoundaryKind, Budget, DomainGeometry, Mode, Sinks};
use bglab::io::{read_snapshot_stream, write_snapshot};
use bglab::sampling::{sample_configuration, PositionLaw, SamplerSpec};
use std::io::BufReader;

fn main() -> bglab::Result<()> {
    let spec = SamplerSpec {
        n_external: 50,
        n_internal_pairs: 2,
        internal_separation: 0.5,
        temperature: 1.0,
        seed: 99,
        geometry: DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0)?,
        d: 0.05,
        m: 1.0,
        mode: Mode::SnModel,
        position_law: PositionLaw::HardSphere,
        max_attempts: 1_000_000,
    };
    let start = sample_configuration(&spec)?;
    let (mid, stats) = advance_system(start, Budget::MaxEvents(500), &mut Sinks::none())?;
    println!("ran {} events to t = {:.4}", stats.events, mid.time);

    // one snapshot block: a header line plus one line per particle
    let mut buffer = Vec::new();
    write_snapshot(&mut buffer, &mid)?;
    println!(
        "snapshot is {} bytes for {} particles (+ header)",
        buffer.len(),
        mid.n()
    );

    let loaded = read_snapshot_stream(&mut BufReader::new(buffer.as_slice()))?;
    let reloaded = &loaded[0];
    assert_eq!(reloaded, &mid, "round trip must be bit-exact");
    println!(
        "round trip bit-exact, registered pairs: {:?}",
        reloaded.registered_internal
    );

    // the loaded state resumes exactly like the original
    let (a, _) = advance_system(mid, Budget::MaxEvents(200), &mut Sinks::none())?;
    let (b, _) = advance_system(reloaded.clone(), Budget::MaxEvents(200), &mut Sinks::none())?;
    assert_eq!(a, b);
    println!("resumed runs agree event for event");
    Ok(())
}
