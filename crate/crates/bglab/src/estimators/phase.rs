//! Phase-space histograms and the masked one-particle estimators.
//!
//! Every estimator deposits once per particle per ensemble member and shares
//! one normalisation constant (the deposit count), so the identity
//! `f1 = fhat - I2` holds cell-wise exactly: the weights are small integers
//! and `fhat` deposits 1, `I2` deposits the neighbour count, `f1` deposits
//! one minus the neighbour count in a single pass.

use crate::dynamics::{for_each_close_pair, ParticleState, SystemConfig};
use crate::error::{Error, Result};
use crate::estimators::grid::GridSpec;
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "probability-density")]
    ProbabilityDensity,
    #[serde(rename = "raw-counts")]
    RawCounts,
}

/// Binned estimate of a density over (r, v).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseHistogram {
    pub grid: GridSpec,
    /// Accumulated raw weights per cell; integers by construction, so merges
    /// are bit-exact in any association order.
    pub weights: Vec<f64>,
    /// Deposit operations performed (the shared normalisation constant).
    pub deposits: u64,
    /// Ensemble members merged in.
    pub ensemble_count: u64,
    /// Deposits whose velocity fell outside the grid.
    pub overflow: u64,
    pub normalization: Normalization,
}

/// Warn when more than this fraction of deposits overflows the velocity grid.
pub const OVERFLOW_WARN_FRACTION: f64 = 1e-3;

impl PhaseHistogram {
    pub fn new(grid: GridSpec) -> Self {
        let cells = grid.cell_count();
        PhaseHistogram {
            grid,
            weights: vec![0.0; cells],
            deposits: 0,
            ensemble_count: 0,
            overflow: 0,
            normalization: Normalization::ProbabilityDensity,
        }
    }

    pub fn deposit(&mut self, r: Vec3, v: Vec3, weight: f64) {
        self.deposits += 1;
        match self.grid.locate(r, v) {
            Some(cell) => self.weights[cell] += weight,
            None => self.overflow += 1,
        }
    }

    /// Probability-density value of one cell.
    pub fn density(&self, cell: usize) -> f64 {
        if self.deposits == 0 {
            return 0.0;
        }
        self.weights[cell] / (self.deposits as f64 * self.grid.cell_volume())
    }

    pub fn densities(&self) -> Vec<f64> {
        let norm = if self.deposits == 0 {
            0.0
        } else {
            1.0 / (self.deposits as f64 * self.grid.cell_volume())
        };
        self.weights.iter().map(|w| w * norm).collect()
    }

    /// Integral of the density view (sum of weights over deposits).
    pub fn total_mass(&self) -> f64 {
        if self.deposits == 0 {
            return 0.0;
        }
        self.weights.iter().sum::<f64>() / self.deposits as f64
    }

    /// Integral of |density|.
    pub fn l1_mass(&self) -> f64 {
        if self.deposits == 0 {
            return 0.0;
        }
        self.weights.iter().map(|w| w.abs()).sum::<f64>() / self.deposits as f64
    }

    pub fn overflow_fraction(&self) -> f64 {
        if self.deposits == 0 {
            0.0
        } else {
            self.overflow as f64 / self.deposits as f64
        }
    }

    /// Marginal raw weight per velocity cell (summed over space).
    pub fn velocity_marginal_weights(&self) -> Vec<f64> {
        let nv = self.grid.velocity_count();
        let mut out = vec![0.0; nv];
        for (cell, w) in self.weights.iter().enumerate() {
            out[cell % nv] += w;
        }
        out
    }

    /// Histogram whose density view reproduces `f` exactly at cell centres.
    /// Used to drive the finite-difference diagnostics with noise-free
    /// analytic inputs.
    pub fn from_analytic(grid: &GridSpec, mut f: impl FnMut(Vec3, Vec3) -> f64) -> Self {
        let mut h = PhaseHistogram::new(grid.clone());
        h.deposits = 1;
        h.ensemble_count = 1;
        let vol = grid.cell_volume();
        for s in 0..grid.spatial_count() {
            let r = grid.spatial_cell_center(s);
            for w in 0..grid.velocity_count() {
                let v = grid.velocity_cell_center(w);
                h.weights[grid.cell_index(s, w)] = f(r, v) * vol;
            }
        }
        h
    }

    /// Fold another histogram in; grids must match exactly.
    pub fn merge_in_place(&mut self, other: &PhaseHistogram) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "cannot merge histograms with different grid specs".into(),
            ));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.deposits += other.deposits;
        self.ensemble_count += other.ensemble_count;
        self.overflow += other.overflow;
        Ok(())
    }
}

/// Merge two histograms into a new one. Associative and commutative;
/// bit-exact on the integer raw weights.
pub fn merge_estimates(a: &PhaseHistogram, b: &PhaseHistogram) -> Result<PhaseHistogram> {
    let mut out = a.clone();
    out.merge_in_place(b)?;
    Ok(out)
}

/// A particle state together with its neighbour count
/// `#{j != i : |r_i - r_j| < d}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedDeposit {
    pub state: ParticleState,
    pub neighbor_count: u32,
}

/// Neighbour counts for every particle of a snapshot (strictly-below-d rule,
/// minimum image in periodic domains).
pub fn neighbor_counts(config: &SystemConfig) -> Vec<u32> {
    let positions: Vec<Vec3> = config.particles.iter().map(|p| p.r).collect();
    let mut counts = vec![0u32; positions.len()];
    for_each_close_pair(&positions, config.d, &config.geometry, |i, j, _| {
        counts[i] += 1;
        counts[j] += 1;
    });
    counts
}

pub fn masked_deposits(config: &SystemConfig) -> Vec<MaskedDeposit> {
    let counts = neighbor_counts(config);
    config
        .particles
        .iter()
        .zip(counts)
        .map(|(p, c)| MaskedDeposit {
            state: *p,
            neighbor_count: c,
        })
        .collect()
}

/// Which particles contribute to the masked estimators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepositPolicy {
    /// Every particle deposits with a neighbour-mask weight (literal mask
    /// reading). Default.
    #[default]
    #[serde(rename = "mask-neighbors")]
    MaskNeighbors,
    /// Particles with any neighbour inside d are excluded from deposits
    /// entirely; the normalisation still counts them.
    #[serde(rename = "external-only")]
    ExternalOnly,
}

fn check_grid(config: &SystemConfig, grid: &GridSpec) -> Result<()> {
    if config.geometry.lengths != grid.lengths || config.geometry.is_periodic() != grid.periodic {
        return Err(Error::GridMismatch(
            "snapshot geometry does not match the grid spec".into(),
        ));
    }
    Ok(())
}

fn estimate_with<W>(
    snapshots: &[SystemConfig],
    grid: &GridSpec,
    mut weight: W,
) -> Result<PhaseHistogram>
where
    W: FnMut(u32) -> f64,
{
    if snapshots.is_empty() {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    let mut hist = PhaseHistogram::new(grid.clone());
    for config in snapshots {
        check_grid(config, grid)?;
        let counts = neighbor_counts(config);
        for (p, &c) in config.particles.iter().zip(&counts) {
            hist.deposit(p.r, p.v, weight(c));
        }
        hist.ensemble_count += 1;
    }
    Ok(hist)
}

/// Plain density estimate: unit weight per particle per member.
pub fn estimate_fhat(snapshots: &[SystemConfig], grid: &GridSpec) -> Result<PhaseHistogram> {
    if snapshots.is_empty() {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    let mut hist = PhaseHistogram::new(grid.clone());
    for config in snapshots {
        check_grid(config, grid)?;
        for p in &config.particles {
            hist.deposit(p.r, p.v, 1.0);
        }
        hist.ensemble_count += 1;
    }
    Ok(hist)
}

/// Neighbour-overlap correction: each particle deposits its neighbour count.
/// Exchangeability turns the (N-1)-scaled single-pair indicator into that
/// count, and the shared normalisation keeps `f1 = fhat - I2` cell-wise.
pub fn estimate_i2(snapshots: &[SystemConfig], grid: &GridSpec) -> Result<PhaseHistogram> {
    estimate_with(snapshots, grid, |c| c as f64)
}

/// Masked one-particle density in a single pass (weight `1 - neighbors`).
/// Negative cells are preserved, not clipped.
pub fn estimate_f1_masked(
    snapshots: &[SystemConfig],
    grid: &GridSpec,
    policy: DepositPolicy,
) -> Result<PhaseHistogram> {
    match policy {
        DepositPolicy::MaskNeighbors => estimate_with(snapshots, grid, |c| 1.0 - c as f64),
        DepositPolicy::ExternalOnly => {
            estimate_with(snapshots, grid, |c| if c == 0 { 1.0 } else { 0.0 })
        }
    }
}
