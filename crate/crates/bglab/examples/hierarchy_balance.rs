//! Balance the two sides of the one-particle equation on a relaxing gas:
//! the measured transport rate of the (masked) density against the
//! molecular-chaos collision term.
//!
//! ```bash
//! cargo run --release -p bglab --example hierarchy_balance
//! ```

use bglab::dynamics::{BoundaryKind, DomainGeometry, Mode};
use bglab::estimators::GridSpec;
use bglab::hierarchy::{
    collision_integral_mc, hierarchy_balance_report, BalanceInputs, CollisionParams,
};
use bglab::sampling::PositionLaw;
use bglab::sweep::{measure_ensemble, MeasureSpec};

fn main() -> bglab::Result<()> {
    let n = 600;
    let d = 0.03;
    let geometry = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0)?;
    let grid = GridSpec::new(&geometry, [2, 2, 2], [8, 8, 8], 5.0)?;

    // Maxwellian ensemble measured at three closely spaced times; at
    // equilibrium both sides of the balance vanish within noise.
    let sampler = bglab::sampling::SamplerSpec {
        n_external: n,
        n_internal_pairs: 0,
        internal_separation: 0.5,
        temperature: 1.0,
        seed: 0,
        geometry,
        d,
        m: 1.0,
        mode: Mode::StandardGas,
        position_law: PositionLaw::HardSphere,
        max_attempts: 1_000_000,
    };
    let tau = 1.0
        / (std::f64::consts::SQRT_2
            * std::f64::consts::PI
            * n as f64
            * d
            * d
            * (8.0 / std::f64::consts::PI).sqrt());
    let delta = 0.05 * tau;
    let measurement = measure_ensemble(&MeasureSpec {
        sampler,
        grid,
        times: vec![0.1 * tau - delta, 0.1 * tau, 0.1 * tau + delta],
        center_slot: 1,
        ensemble_size: 60,
        master_seed: 77,
        stream_index: 0,
    })?;

    let collision = collision_integral_mc(
        &measurement.fhat[1],
        CollisionParams {
            d,
            n_particles: n as f64,
            volume: 1.0,
            samples: 500_000,
            seed: 78,
        },
    )?;
    let report = hierarchy_balance_report(&BalanceInputs {
        fhat_series: measurement.fhat.iter().collect(),
        i2_series: measurement.i2.iter().collect(),
        times: measurement.times.clone(),
        collision: &collision,
        well_sampled_threshold: 25.0,
    })?;

    println!(
        "balance at t = {:.4} (stencil {:.4}), {} well-sampled velocity cells",
        report.time, report.dt, report.evaluated_cells
    );
    println!(
        "sup |transport| = {:.3e}, sup |collision| = {:.3e}",
        report.lhs_sup, report.rhs_sup
    );
    // at equilibrium both sides vanish; what remains should sit inside the
    // propagated error bars cell by cell
    let mut worst = 0.0f64;
    for cell in report.cells.iter().filter(|c| c.well_sampled) {
        let noise = (cell.lhs_std_err.powi(2) + cell.rhs_std_err.powi(2)).sqrt();
        if noise > 0.0 {
            worst = worst.max((cell.lhs - cell.rhs).abs() / noise);
        }
    }
    println!("worst |lhs - rhs| in noise units: {worst:.2} (equilibrium: both sides are zero)");
    println!(
        "mask correction: L1 = {:.3e} (a plain gas keeps it exactly zero)",
        report.i2_l1
    );
    Ok(())
}
