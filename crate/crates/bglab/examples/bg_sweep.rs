//! Scaling sweep: N grows with N d^2/V and m N/V pinned, and the
//! neighbour-mask correction decays like N^(-1/2) for the overlap-allowed
//! control ensemble.
//!
//! ```bash
//! cargo run --release -p bglab --example bg_sweep
//! ```

use bglab::dynamics::{BoundaryKind, DomainGeometry, Mode};
use bglab::sampling::PositionLaw;
use bglab::scaling::bg_scaling_sequence;
use bglab::sweep::{run_bg_sweep, InternalScaling, SweepSpec};

fn main() -> bglab::Result<()> {
    let spec = SweepSpec {
        scaling: bg_scaling_sequence(1.0, 1.0, 1.0, &[125, 250, 500, 1000, 2000])?,
        geometry: DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0)?,
        mode: Mode::FreeFlow,
        position_law: PositionLaw::IdealGas,
        internal_scaling: InternalScaling::None,
        internal_separation: 0.5,
        velocity_variance: 1.0,
        ensemble_size: 48,
        measure_after_mft: 0.0,
        stencil_fraction: 0.0,
        spatial_bins: 2,
        velocity_bins: 6,
        v_max: 5.0,
        radial_bins: 16,
        velocity_pair_bins: 2,
        collision_samples: 0,
        well_sampled_threshold: 25.0,
        master_seed: 2024,
    };
    let report = run_bg_sweep(&spec)?;

    println!("     N        d    eta_conv     I2 L1   mass ratio");
    for p in &report.points {
        println!(
            "{:>6} {:>8.5} {:>10.3e} {:>10.4e} {:>10.4e}",
            p.point.n, p.point.d, p.point.eta_conv, p.i2_l1, p.i2_mass_ratio
        );
    }
    if let Some(fit) = &report.exponent_fits.i2_l1 {
        println!(
            "fitted decay exponent: {:.4} +- {:.4} (expect -1/2 for this control)",
            fit.slope, fit.half_width
        );
    }
    for diff in &report.successive_diffs {
        println!(
            "|f1(N={}) - f1(N={})|: sup {:.3e}, L1 {:.3e}",
            diff.n_to, diff.n_from, diff.norms.sup, diff.norms.l1
        );
    }
    Ok(())
}
