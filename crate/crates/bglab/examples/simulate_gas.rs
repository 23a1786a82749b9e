//! Run a plain hard-sphere gas and watch the conserved quantities.
//!
//! ```bash
//! cargo run --release -p bglab --example simulate_gas
//! ```

use bglab::dynamics::{
    advance_system, conserved_quantities, BoundaryKind, Budget, DomainGeometry, Mode, Sinks,
};
use bglab::sampling::{sample_configuration, PositionLaw, SamplerSpec};

fn main() -> bglab::Result<()> {
    let spec = SamplerSpec {
        n_external: 200,
        n_internal_pairs: 0,
        internal_separation: 0.5,
        temperature: 1.0,
        seed: 7,
        geometry: DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0)?,
        d: 0.04,
        m: 1.0,
        mode: Mode::StandardGas,
        position_law: PositionLaw::HardSphere,
        max_attempts: 1_000_000,
    };
    let config = sample_configuration(&spec)?;
    let tau = bglab::dynamics::mean_free_time(&config);
    let (e0, p0) = conserved_quantities(&config);
    println!(
        "N = {}, d = {}, mean free time ~ {tau:.4}",
        config.n(),
        config.d
    );
    println!("E = {e0:.6}, |P| = {:.3e}", p0.norm());

    let mut sinks = Sinks::none();
    let (end, stats) = advance_system(config, Budget::MaxEvents(20_000), &mut sinks)?;
    let (e1, p1) = conserved_quantities(&end);
    println!(
        "{} events to t = {:.3} ({:.1} mean free times): {} contacts, {} crossings",
        stats.events,
        stats.final_time,
        stats.final_time / tau,
        stats.external_contacts,
        stats.cell_crossings,
    );
    println!(
        "energy drift {:.3e}, momentum drift {:.3e}",
        ((e1 - e0) / e0).abs(),
        (p1 - p0).norm()
    );
    Ok(())
}
