//! Side-by-side evaluation of the one-particle balance: transport of the
//! masked density against the molecular-chaos collision term.

use crate::error::{Error, Result};
use crate::estimators::PhaseHistogram;
use crate::hierarchy::collision::CollisionField;
use crate::hierarchy::residual::{free_streaming_residual, ResidualField};
use serde::{Deserialize, Serialize};

/// Minimum deposits for a velocity cell to enter the norms.
pub const WELL_SAMPLED_THRESHOLD: f64 = 25.0;

#[derive(Clone, Debug)]
pub struct BalanceInputs<'a> {
    /// Plain density at three evenly spaced times.
    pub fhat_series: Vec<&'a PhaseHistogram>,
    /// Mask correction at the same times.
    pub i2_series: Vec<&'a PhaseHistogram>,
    pub times: Vec<f64>,
    /// Collision term evaluated from the centre-time distribution.
    pub collision: &'a CollisionField,
    pub well_sampled_threshold: f64,
}

/// Per-velocity-cell comparison row.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BalanceCell {
    pub cell: usize,
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub rhs: f64,
    pub rhs_std_err: f64,
    pub well_sampled: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BalanceReport {
    pub time: f64,
    pub dt: f64,
    /// Transport residual of the masked density, spatially averaged per
    /// velocity cell, against the collision term.
    pub cells: Vec<BalanceCell>,
    pub evaluated_cells: u64,
    pub excluded_cells: u64,
    pub lhs_sup: f64,
    pub rhs_sup: f64,
    pub discrepancy_sup: f64,
    pub discrepancy_l1: f64,
    /// `sup |lhs - rhs| / sup |rhs|` over well-sampled cells.
    pub discrepancy_ratio: f64,
    /// Mask-correction magnitude at the centre time.
    pub i2_l1: f64,
    pub i2_sup: f64,
    /// Masked-density transport residual against zero (sup/L1 over
    /// well-sampled velocity cells): the quantity that vanishes for the
    /// tethered system in the scaling limit.
    pub masked_residual_sup: f64,
    pub masked_residual_l1: f64,
    pub threshold: f64,
    /// Run-manifest ids (or other labels) of the inputs.
    #[serde(default)]
    pub provenance: Vec<String>,
}

fn sub_series(fhat: &PhaseHistogram, i2: &PhaseHistogram) -> Result<PhaseHistogram> {
    if fhat.grid != i2.grid {
        return Err(Error::GridMismatch(
            "fhat and I2 must share one grid".into(),
        ));
    }
    let mut out = fhat.clone();
    for (w, wi) in out.weights.iter_mut().zip(&i2.weights) {
        *w -= wi;
    }
    Ok(out)
}

/// Compare transport and collision sides over well-sampled velocity cells.
///
/// The masked density `f1 = fhat - I2` is formed per time, its
/// free-streaming residual is spatially averaged per velocity cell, and the
/// result stands against the collision field. Poorly sampled cells are
/// excluded and counted.
pub fn hierarchy_balance_report(inputs: &BalanceInputs) -> Result<BalanceReport> {
    if inputs.fhat_series.len() != inputs.i2_series.len()
        || inputs.fhat_series.len() != inputs.times.len()
    {
        return Err(Error::InvalidParam(
            "series and times must have matching lengths".into(),
        ));
    }
    let masked: Vec<PhaseHistogram> = inputs
        .fhat_series
        .iter()
        .zip(&inputs.i2_series)
        .map(|(f, i)| sub_series(f, i))
        .collect::<Result<_>>()?;
    let refs: Vec<&PhaseHistogram> = masked.iter().collect();
    let residual: ResidualField = free_streaming_residual(&refs, &inputs.times)?;

    let grid = &residual.grid;
    if grid.velocity_bins != inputs.collision.grid.bins
        || (grid.v_max - inputs.collision.grid.v_max).abs() > 0.0
    {
        return Err(Error::GridMismatch(
            "collision field grid does not match the histogram velocity grid".into(),
        ));
    }

    let center = inputs.fhat_series[inputs.fhat_series.len() / 2];
    let i2_center = inputs.i2_series[inputs.i2_series.len() / 2];
    let velocity_counts = center.velocity_marginal_weights();

    let lhs = residual.velocity_profile();
    let lhs_err = residual.velocity_profile_std_err();

    let nv = grid.velocity_count();
    let vcell = inputs.collision.grid.cell_volume();
    let mut cells = Vec::with_capacity(nv);
    let mut lhs_sup = 0.0f64;
    let mut rhs_sup = 0.0f64;
    let mut disc_sup = 0.0f64;
    let mut disc_l1 = 0.0f64;
    let mut evaluated = 0u64;
    let mut excluded = 0u64;
    for w in 0..nv {
        let well = velocity_counts[w] >= inputs.well_sampled_threshold;
        let rhs = inputs.collision.values[w];
        cells.push(BalanceCell {
            cell: w,
            lhs: lhs[w],
            lhs_std_err: lhs_err[w],
            rhs,
            rhs_std_err: inputs.collision.std_err[w],
            well_sampled: well,
        });
        if well {
            evaluated += 1;
            lhs_sup = lhs_sup.max(lhs[w].abs());
            rhs_sup = rhs_sup.max(rhs.abs());
            let diff = (lhs[w] - rhs).abs();
            disc_sup = disc_sup.max(diff);
            disc_l1 += diff * vcell;
        } else {
            excluded += 1;
        }
    }

    // the I2 magnitude and masked-residual norms reported alongside
    let i2_l1 = i2_center.l1_mass();
    let mut i2_sup = 0.0f64;
    {
        let nv_counts = i2_center.velocity_marginal_weights();
        let densities = i2_center.densities();
        for (cell, dens) in densities.iter().enumerate() {
            let w = cell % nv;
            if nv_counts[w] >= inputs.well_sampled_threshold {
                i2_sup = i2_sup.max(dens.abs());
            }
        }
    }
    let mut masked_sup = 0.0f64;
    let mut masked_l1 = 0.0;
    for w in 0..nv {
        if velocity_counts[w] >= inputs.well_sampled_threshold {
            masked_sup = masked_sup.max(lhs[w].abs());
            masked_l1 += lhs[w].abs() * vcell;
        }
    }

    Ok(BalanceReport {
        time: residual.time,
        dt: residual.dt,
        cells,
        evaluated_cells: evaluated,
        excluded_cells: excluded,
        lhs_sup,
        rhs_sup,
        discrepancy_sup: disc_sup,
        discrepancy_l1: disc_l1,
        discrepancy_ratio: if rhs_sup > 0.0 {
            disc_sup / rhs_sup
        } else {
            0.0
        },
        i2_l1,
        i2_sup,
        masked_residual_sup: masked_sup,
        masked_residual_l1: masked_l1,
        threshold: inputs.well_sampled_threshold,
        provenance: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BoundaryKind, DomainGeometry};
    use crate::estimators::GridSpec;
    use crate::hierarchy::collision::{CollisionField, CollisionMoments, VelocityGrid};

    fn flat_collision(grid: &GridSpec) -> CollisionField {
        let vg = VelocityGrid {
            bins: grid.velocity_bins,
            v_max: grid.v_max,
        };
        CollisionField {
            values: vec![0.0; vg.cell_count()],
            std_err: vec![0.0; vg.cell_count()],
            hits: vec![0; vg.cell_count()],
            samples: 1,
            dropped_samples: 0,
            scale: 1.0,
            moments: CollisionMoments::default(),
            grid: vg,
        }
    }

    #[test]
    fn equilibrium_balances_to_noise() {
        let geometry = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let grid = GridSpec::new(&geometry, [2, 2, 2], [4, 4, 4], 3.0).unwrap();
        // stationary analytic input: lhs = 0, rhs = 0
        let h = PhaseHistogram::from_analytic(&grid, |_, v| (-v.norm_sq()).exp());
        // give it believable counts so cells qualify as well-sampled
        let mut h = h;
        h.deposits = 1;
        for w in h.weights.iter_mut() {
            *w *= 1e6;
        }
        let zero_i2 = {
            let mut z = h.clone();
            for w in z.weights.iter_mut() {
                *w = 0.0;
            }
            z
        };
        let collision = flat_collision(&grid);
        let report = hierarchy_balance_report(&BalanceInputs {
            fhat_series: vec![&h, &h, &h],
            i2_series: vec![&zero_i2, &zero_i2, &zero_i2],
            times: vec![0.0, 0.1, 0.2],
            collision: &collision,
            well_sampled_threshold: WELL_SAMPLED_THRESHOLD,
        })
        .unwrap();
        assert!(report.discrepancy_sup < 1e-9);
        assert_eq!(report.i2_l1, 0.0);
        assert!(report.evaluated_cells > 0);
    }
}
