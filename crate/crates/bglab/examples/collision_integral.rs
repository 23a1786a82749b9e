//! Monte Carlo hard-sphere collision term: a Maxwellian is annihilated,
//! two counter-propagating beams deplete while the shell between them fills.
//!
//! ```bash
//! cargo run --release -p bglab --example collision_integral
//! ```

use bglab::hierarchy::{
    collision_integral_mc_from_source, CollisionParams, VelocityGrid, VelocitySource,
};
use bglab::vec3::Vec3;

fn main() -> bglab::Result<()> {
    let params = CollisionParams {
        d: 0.05,
        n_particles: 1000.0,
        volume: 1.0,
        samples: 2_000_000,
        seed: 42,
    };

    // equilibrium input: every cell consistent with zero
    let grid = VelocityGrid {
        bins: [12, 12, 12],
        v_max: 5.0,
    };
    let field = collision_integral_mc_from_source(
        &VelocitySource::Maxwellian { variance: 1.0 },
        &grid,
        params,
    )?;
    let mut worst_z: f64 = 0.0;
    let mut evaluated = 0;
    for c in 0..grid.cell_count() {
        if field.hits[c] >= 25 && field.std_err[c] > 0.0 {
            evaluated += 1;
            worst_z = worst_z.max(field.values[c].abs() / field.std_err[c]);
        }
    }
    println!("maxwellian: {evaluated} well-sampled cells, worst |value|/se = {worst_z:.2}");
    let m = &field.moments;
    println!(
        "moments (should vanish): mass {:.2e}+-{:.2e}, energy {:.2e}+-{:.2e}",
        m.mass.value, m.mass.std_err, m.energy.value, m.energy.std_err
    );

    // two beams: loss at the beams, gain on the scattering sphere
    let beams = VelocitySource::Atoms(vec![
        (Vec3::new(1.0, 0.0, 0.0), 0.5),
        (Vec3::new(-1.0, 0.0, 0.0), 0.5),
    ]);
    let grid = VelocityGrid {
        bins: [8, 8, 8],
        v_max: 2.0,
    };
    let field = collision_integral_mc_from_source(&beams, &grid, params)?;
    let beam = grid.index(Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let pole = grid.index(Vec3::new(0.01, 0.01, 0.99)).unwrap();
    println!(
        "two beams: beam cell {:.3e} (depletes), polar shell cell {:.3e} (fills)",
        field.values[beam], field.values[pole]
    );
    println!(
        "mass moment {:.2e} +- {:.2e} (gain balances loss)",
        field.moments.mass.value, field.moments.mass.std_err
    );
    Ok(())
}
