//! Free-streaming residual `(d/dt + v . d/dr) f` from time-sequenced
//! histograms.

use crate::error::{Error, Result};
use crate::estimators::{GridSpec, PhaseHistogram};
use serde::{Deserialize, Serialize};

/// Per-cell residual of the transport operator with propagated standard
/// errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Evaluation time (the centre of the stencil).
    pub time: f64,
    /// Temporal stencil spacing.
    pub dt: f64,
}

impl ResidualField {
    /// Volume-weighted spatial average per velocity cell. With periodic
    /// stencils the transport term telescopes away exactly, leaving the
    /// ensemble rate of change of the velocity marginal.
    pub fn velocity_profile(&self) -> Vec<f64> {
        let ns = self.grid.spatial_count();
        let nv = self.grid.velocity_count();
        let mut out = vec![0.0; nv];
        for s in 0..ns {
            for w in 0..nv {
                out[w] += self.values[self.grid.cell_index(s, w)];
            }
        }
        for v in out.iter_mut() {
            *v /= ns as f64;
        }
        out
    }

    /// Propagated standard error of [`Self::velocity_profile`], treating
    /// cells as independent.
    pub fn velocity_profile_std_err(&self) -> Vec<f64> {
        let ns = self.grid.spatial_count();
        let nv = self.grid.velocity_count();
        let mut out = vec![0.0; nv];
        for s in 0..ns {
            for w in 0..nv {
                let e = self.std_err[self.grid.cell_index(s, w)];
                out[w] += e * e;
            }
        }
        for v in out.iter_mut() {
            *v = v.sqrt() / ns as f64;
        }
        out
    }
}

/// Poisson variance of the density view of one cell.
fn density_variance(h: &PhaseHistogram, cell: usize) -> f64 {
    if h.deposits == 0 {
        return 0.0;
    }
    let norm = h.deposits as f64 * h.grid.cell_volume();
    h.weights[cell].abs() / (norm * norm)
}

/// Central-difference evaluation of the free-streaming operator at the middle
/// time of an evenly spaced series.
///
/// The time derivative uses the neighbours of the centre histogram; the
/// transport term differentiates the centre histogram across the spatial
/// grid at each velocity-cell centre. Spatial stencils wrap in periodic
/// domains and fall back to one-sided second-order forms at specular
/// boundaries. Per-cell errors propagate ensemble (Poisson) variances.
pub fn free_streaming_residual(series: &[&PhaseHistogram], times: &[f64]) -> Result<ResidualField> {
    if series.len() < 3 || times.len() != series.len() {
        return Err(Error::InsufficientData(
            "need at least three histograms with matching times".into(),
        ));
    }
    let grid = &series[0].grid;
    if series.iter().any(|h| &h.grid != grid) {
        return Err(Error::GridMismatch(
            "residual series must share one grid spec".into(),
        ));
    }
    let c = series.len() / 2;
    let dt = times[c] - times[c - 1];
    if !(dt > 0.0) {
        return Err(Error::InvalidParam(
            "stencil spacing must be positive".into(),
        ));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidParam("times must be evenly spaced".into()));
        }
    }

    let prev = series[c - 1].densities();
    let mid = series[c].densities();
    let next = series[c + 1].densities();

    let ns = grid.spatial_count();
    let nv = grid.velocity_count();
    let widths = grid.spatial_widths();
    let mut values = vec![0.0; grid.cell_count()];
    let mut variance = vec![0.0; grid.cell_count()];

    // d/dt by central difference
    let inv_2dt = 1.0 / (2.0 * dt);
    for cell in 0..grid.cell_count() {
        values[cell] = (next[cell] - prev[cell]) * inv_2dt;
        let var = density_variance(series[c + 1], cell) + density_variance(series[c - 1], cell);
        variance[cell] = var * inv_2dt * inv_2dt;
    }

    // v . d/dr on the centre histogram
    for s in 0..ns {
        let coords = grid.spatial_coords(s);
        for w in 0..nv {
            let v_center = grid.velocity_cell_center(w);
            let cell = grid.cell_index(s, w);
            for axis in 0..3 {
                let nbins = grid.spatial_bins[axis];
                if nbins < 3 {
                    // no resolvable spatial variation along this axis
                    continue;
                }
                let h = widths[axis];
                let va = v_center[axis];
                if va == 0.0 {
                    continue;
                }
                let at = |offset: i64| -> Option<usize> {
                    let mut cc = coords;
                    let raw = coords[axis] as i64 + offset;
                    let n = nbins as i64;
                    let idx = if grid.periodic {
                        raw.rem_euclid(n)
                    } else if (0..n).contains(&raw) {
                        raw
                    } else {
                        return None;
                    };
                    cc[axis] = idx as usize;
                    Some(grid.cell_index(grid.spatial_from_coords(cc), w))
                };
                // stencil as (cell, coefficient) pairs over density values
                let mut stencil: [(usize, f64); 3] = [(cell, 0.0); 3];
                let m = match (at(-1), at(1)) {
                    (Some(lo), Some(hi)) => {
                        stencil[0] = (hi, 0.5 / h);
                        stencil[1] = (lo, -0.5 / h);
                        2
                    }
                    (None, Some(_)) => {
                        // second-order one-sided forward difference
                        let f1 = at(1).unwrap();
                        let f2 = at(2).expect("nbins >= 3");
                        stencil[0] = (cell, -1.5 / h);
                        stencil[1] = (f1, 2.0 / h);
                        stencil[2] = (f2, -0.5 / h);
                        3
                    }
                    (Some(_), None) => {
                        let b1 = at(-1).unwrap();
                        let b2 = at(-2).expect("nbins >= 3");
                        stencil[0] = (cell, 1.5 / h);
                        stencil[1] = (b1, -2.0 / h);
                        stencil[2] = (b2, 0.5 / h);
                        3
                    }
                    (None, None) => unreachable!("nbins >= 3"),
                };
                for &(idx, coeff) in &stencil[..m] {
                    values[cell] += va * coeff * mid[idx];
                    let vc = va * coeff;
                    variance[cell] += vc * vc * density_variance(series[c], idx);
                }
            }
        }
    }

    Ok(ResidualField {
        grid: grid.clone(),
        values,
        std_err: variance.into_iter().map(f64::sqrt).collect(),
        time: times[c],
        dt,
    })
}
