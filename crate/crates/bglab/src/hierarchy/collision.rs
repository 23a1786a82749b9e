//! Monte Carlo estimate of the hard-sphere collision term under the
//! molecular-chaos closure `f2 = f1 f1`.
//!
//! Velocity pairs are drawn from the product distribution, impact directions
//! uniformly on the sphere, and gain/loss deposits with kernel `|v12 . n|`
//! accumulate per velocity cell. A sample whose pre- or post-collision
//! velocity overflows the grid is dropped whole (and counted), which keeps
//! the binned moments honest: the retained deposit set is symmetric under
//! the pre/post swap.

use crate::dynamics::resolve_pair_collision;
use crate::error::{Error, Result};
use crate::estimators::PhaseHistogram;
use crate::rng::stream;
use crate::vec3::Vec3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Velocity-space grid of a collision field (cube `[-v_max, v_max]^3`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    pub bins: [usize; 3],
    pub v_max: f64,
}

impl VelocityGrid {
    pub fn cell_count(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..3)
            .map(|k| 2.0 * self.v_max / self.bins[k] as f64)
            .product()
    }

    pub fn index(&self, v: Vec3) -> Option<usize> {
        let mut idx = 0usize;
        for k in 0..3 {
            if v[k] < -self.v_max || v[k] >= self.v_max {
                return None;
            }
            let w = 2.0 * self.v_max / self.bins[k] as f64;
            let i = (((v[k] + self.v_max) / w).floor() as i64).clamp(0, self.bins[k] as i64 - 1);
            idx = idx * self.bins[k] + i as usize;
        }
        Some(idx)
    }

    pub fn center(&self, cell: usize) -> Vec3 {
        let z = cell % self.bins[2];
        let y = (cell / self.bins[2]) % self.bins[1];
        let x = cell / (self.bins[2] * self.bins[1]);
        let c = [x, y, z];
        let mut v = Vec3::ZERO;
        for k in 0..3 {
            let w = 2.0 * self.v_max / self.bins[k] as f64;
            v[k] = -self.v_max + (c[k] as f64 + 0.5) * w;
        }
        v
    }
}

/// Where sampled velocities come from.
#[derive(Clone, Debug)]
pub enum VelocitySource {
    /// Gaussian components with the given per-component variance (`T/m`).
    Maxwellian { variance: f64 },
    /// Point masses; weights need not be normalised.
    Atoms(Vec<(Vec3, f64)>),
    /// Velocity marginal of a phase histogram, jittered uniformly within
    /// each cell.
    Histogram {
        bins: [usize; 3],
        v_max: f64,
        weights: Vec<f64>,
    },
}

impl VelocitySource {
    pub fn from_phase_histogram(h: &PhaseHistogram) -> Self {
        VelocitySource::Histogram {
            bins: h.grid.velocity_bins,
            v_max: h.grid.v_max,
            weights: h.velocity_marginal_weights(),
        }
    }
}

struct Sampler<'a> {
    source: &'a VelocitySource,
    /// Cumulative weights for the categorical cases.
    cumulative: Vec<f64>,
    total: f64,
}

impl<'a> Sampler<'a> {
    fn new(source: &'a VelocitySource) -> Result<Self> {
        let weights: Option<Vec<f64>> = match source {
            VelocitySource::Maxwellian { variance } => {
                if !(variance.is_finite() && *variance > 0.0) {
                    return Err(Error::InvalidParam("variance must be > 0".into()));
                }
                None
            }
            VelocitySource::Atoms(atoms) => Some(atoms.iter().map(|(_, w)| *w).collect()),
            VelocitySource::Histogram { weights, .. } => Some(weights.clone()),
        };
        let (cumulative, total) = match weights {
            None => (Vec::new(), 1.0),
            Some(ws) => {
                if ws.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                    return Err(Error::InvalidParam(
                        "sampling weights must be finite and non-negative".into(),
                    ));
                }
                let mut acc = 0.0;
                let cum: Vec<f64> = ws
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                if acc <= 0.0 {
                    return Err(Error::InsufficientData(
                        "velocity source carries no weight".into(),
                    ));
                }
                (cum, acc)
            }
        };
        Ok(Sampler {
            source,
            cumulative,
            total,
        })
    }

    fn draw(&self, rng: &mut impl Rng) -> Vec3 {
        match self.source {
            VelocitySource::Maxwellian { variance } => {
                let sigma = variance.sqrt();
                Vec3::new(
                    sigma * sample_normal(rng),
                    sigma * sample_normal(rng),
                    sigma * sample_normal(rng),
                )
            }
            VelocitySource::Atoms(atoms) => {
                let u: f64 = rng.random_range(0.0..self.total);
                let k = self.cumulative.partition_point(|&c| c <= u);
                atoms[k.min(atoms.len() - 1)].0
            }
            VelocitySource::Histogram { bins, v_max, .. } => {
                let u: f64 = rng.random_range(0.0..self.total);
                let k = self.cumulative.partition_point(|&c| c <= u);
                let cell = k.min(self.cumulative.len() - 1);
                let grid = VelocityGrid {
                    bins: *bins,
                    v_max: *v_max,
                };
                let center = grid.center(cell);
                let mut v = Vec3::ZERO;
                for axis in 0..3 {
                    let w = 2.0 * v_max / bins[axis] as f64;
                    v[axis] = center[axis] + w * (rng.random::<f64>() - 0.5);
                }
                v
            }
        }
    }
}

fn sample_normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Scalar moment accumulators with standard errors from per-sample spreads.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct MomentCheck {
    pub value: f64,
    pub std_err: f64,
}

/// Collision invariants of the field: mass, momentum, energy integrals.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CollisionMoments {
    pub mass: MomentCheck,
    pub momentum: [MomentCheck; 3],
    pub energy: MomentCheck,
}

/// Monte Carlo estimate of `d^2 N C[f, f]` per velocity cell, in the units
/// of the one-particle hierarchy (spatially uniform reading; the `1/V^2`
/// from the joint densities is folded into `scale`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollisionField {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Samples that deposited into each cell.
    pub hits: Vec<u64>,
    pub samples: u64,
    /// Samples dropped whole because a velocity left the grid.
    pub dropped_samples: u64,
    /// Overall scale `d^2 N / V^2` applied to the raw operator.
    pub scale: f64,
    pub moments: CollisionMoments,
}

impl CollisionField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CollisionParams {
    pub d: f64,
    pub n_particles: f64,
    pub volume: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Default)]
struct Block {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    hits: Vec<u64>,
    dropped: u64,
    mom_sum: [f64; 5],
    mom_sq: [f64; 5],
}

/// Estimate the collision term of the distribution carried by `f` (its
/// velocity marginal) on that histogram's velocity grid.
pub fn collision_integral_mc(
    f: &PhaseHistogram,
    params: CollisionParams,
) -> Result<CollisionField> {
    let grid = VelocityGrid {
        bins: f.grid.velocity_bins,
        v_max: f.grid.v_max,
    };
    let source = VelocitySource::from_phase_histogram(f);
    collision_integral_mc_from_source(&source, &grid, params)
}

/// Estimate the collision term from an explicit velocity source.
pub fn collision_integral_mc_from_source(
    source: &VelocitySource,
    grid: &VelocityGrid,
    params: CollisionParams,
) -> Result<CollisionField> {
    if params.samples == 0 {
        return Err(Error::InvalidParam("sample budget must be > 0".into()));
    }
    if !(params.volume > 0.0) || !(params.d >= 0.0) || !(params.n_particles >= 0.0) {
        return Err(Error::InvalidParam("bad collision scaling inputs".into()));
    }
    let sampler = Sampler::new(source)?;
    let cells = grid.cell_count();
    let cell_vol = grid.cell_volume();

    // independent blocks with derived streams; reduced in index order
    let n_blocks = 64u64.min(params.samples);
    let per_block = params.samples / n_blocks;
    let remainder = params.samples % n_blocks;

    let blocks: Vec<Block> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(params.seed, &[0x636f_6c6c, b]);
            let mut block = Block {
                sum: vec![0.0; cells],
                sum_sq: vec![0.0; cells],
                hits: vec![0; cells],
                ..Block::default()
            };
            let count = per_block + if b < remainder { 1 } else { 0 };
            let mut touched: Vec<(usize, f64)> = Vec::with_capacity(4);
            for _ in 0..count {
                let v1 = sampler.draw(&mut rng);
                let v2 = sampler.draw(&mut rng);
                let axis: [f64; 3] = UnitSphere.sample(&mut rng);
                let normal = Vec3(axis);
                let kernel = (v1 - v2).dot(normal).abs();
                let (v1p, v2p) = resolve_pair_collision(v1, v2, normal)
                    .expect("unit normal from the sphere sampler");
                let cells4 = [
                    (grid.index(v1p), 1.0),
                    (grid.index(v2p), 1.0),
                    (grid.index(v1), -1.0),
                    (grid.index(v2), -1.0),
                ];
                if cells4.iter().any(|(c, _)| c.is_none()) {
                    block.dropped += 1;
                    continue;
                }
                // per-sample deposit: pi * kernel * (+-1) / cell volume
                touched.clear();
                let amp = std::f64::consts::PI * kernel / cell_vol;
                for (c, sign) in cells4 {
                    let c = c.unwrap();
                    match touched.iter_mut().find(|(tc, _)| *tc == c) {
                        Some((_, val)) => *val += sign * amp,
                        None => touched.push((c, sign * amp)),
                    }
                }
                for &(c, val) in &touched {
                    block.sum[c] += val;
                    block.sum_sq[c] += val * val;
                    block.hits[c] += 1;
                }
                // moment contributions from binned centres
                let b1 = grid.center(cells4[0].0.unwrap());
                let b2 = grid.center(cells4[1].0.unwrap());
                let a1 = grid.center(cells4[2].0.unwrap());
                let a2 = grid.center(cells4[3].0.unwrap());
                let pi_k = std::f64::consts::PI * kernel;
                let dm = [
                    0.0,
                    pi_k * (b1[0] + b2[0] - a1[0] - a2[0]),
                    pi_k * (b1[1] + b2[1] - a1[1] - a2[1]),
                    pi_k * (b1[2] + b2[2] - a1[2] - a2[2]),
                    pi_k * (b1.norm_sq() + b2.norm_sq() - a1.norm_sq() - a2.norm_sq()),
                ];
                for (k, &m) in dm.iter().enumerate() {
                    block.mom_sum[k] += m;
                    block.mom_sq[k] += m * m;
                }
            }
            block
        })
        .collect();

    let mut sum = vec![0.0; cells];
    let mut sum_sq = vec![0.0; cells];
    let mut hits = vec![0u64; cells];
    let mut dropped = 0u64;
    let mut mom_sum = [0.0; 5];
    let mut mom_sq = [0.0; 5];
    for b in &blocks {
        for c in 0..cells {
            sum[c] += b.sum[c];
            sum_sq[c] += b.sum_sq[c];
            hits[c] += b.hits[c];
        }
        dropped += b.dropped;
        for k in 0..5 {
            mom_sum[k] += b.mom_sum[k];
            mom_sq[k] += b.mom_sq[k];
        }
    }

    let m = params.samples as f64;
    let scale = params.d * params.d * params.n_particles / (params.volume * params.volume);
    let mut values = vec![0.0; cells];
    let mut std_err = vec![0.0; cells];
    for c in 0..cells {
        let mean = sum[c] / m;
        values[c] = scale * mean;
        let var = ((sum_sq[c] / m) - mean * mean).max(0.0);
        std_err[c] = scale * (var / m).sqrt();
    }
    let moment = |k: usize| -> MomentCheck {
        let mean = mom_sum[k] / m;
        let var = ((mom_sq[k] / m) - mean * mean).max(0.0);
        MomentCheck {
            value: scale * mean,
            std_err: scale * (var / m).sqrt(),
        }
    };
    let moments = CollisionMoments {
        mass: moment(0),
        momentum: [moment(1), moment(2), moment(3)],
        energy: moment(4),
    };

    Ok(CollisionField {
        grid: grid.clone(),
        values,
        std_err,
        hits,
        samples: params.samples,
        dropped_samples: dropped,
        scale,
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maxwellian_params(samples: u64) -> CollisionParams {
        CollisionParams {
            d: 0.05,
            n_particles: 1000.0,
            volume: 1.0,
            samples,
            seed: 17,
        }
    }

    #[test]
    fn maxwellian_is_annihilated() {
        let grid = VelocityGrid {
            bins: [8, 8, 8],
            v_max: 5.0,
        };
        let source = VelocitySource::Maxwellian { variance: 1.0 };
        let field =
            collision_integral_mc_from_source(&source, &grid, maxwellian_params(400_000)).unwrap();
        let mut worst = 0.0f64;
        for c in 0..grid.cell_count() {
            if field.std_err[c] > 0.0 {
                worst = worst.max(field.values[c].abs() / field.std_err[c]);
            } else {
                assert!(field.values[c].abs() < 1e-12);
            }
        }
        // cell-wise consistency with zero; a few cells near 3 sigma are
        // expected across 512 bins, so gate on a small excess
        let over: usize = (0..grid.cell_count())
            .filter(|&c| field.std_err[c] > 0.0 && field.values[c].abs() > 4.0 * field.std_err[c])
            .count();
        assert!(over <= 2, "{over} cells beyond 4 sigma, worst z = {worst}");
    }

    #[test]
    fn moments_are_conserved() {
        let grid = VelocityGrid {
            bins: [8, 8, 8],
            v_max: 6.0,
        };
        let source = VelocitySource::Maxwellian { variance: 1.0 };
        let field =
            collision_integral_mc_from_source(&source, &grid, maxwellian_params(200_000)).unwrap();
        let m = &field.moments;
        assert!(m.mass.value.abs() <= 3.0 * m.mass.std_err + 1e-12);
        for k in 0..3 {
            assert!(m.momentum[k].value.abs() <= 3.0 * m.momentum[k].std_err + 1e-12);
        }
        assert!(m.energy.value.abs() <= 3.0 * m.energy.std_err + 1e-12);
    }

    #[test]
    fn two_beams_deplete_and_fill() {
        let grid = VelocityGrid {
            bins: [8, 8, 8],
            v_max: 2.0,
        };
        let u = 1.0;
        let source = VelocitySource::Atoms(vec![
            (Vec3::new(u, 0.0, 0.0), 0.5),
            (Vec3::new(-u, 0.0, 0.0), 0.5),
        ]);
        let field =
            collision_integral_mc_from_source(&source, &grid, maxwellian_params(200_000)).unwrap();
        let beam = grid.index(Vec3::new(u, 0.0, 0.0)).unwrap();
        let center = grid.index(Vec3::new(0.011, 0.011, u - 0.011)).unwrap();
        assert!(field.values[beam] < 0.0, "beam cell {}", field.values[beam]);
        // post-collision velocities land on the sphere of radius u around the
        // origin: the polar cell fills
        assert!(
            field.values[center] > 0.0,
            "scatter cell {}",
            field.values[center]
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let grid = VelocityGrid {
            bins: [4, 4, 4],
            v_max: 4.0,
        };
        let source = VelocitySource::Maxwellian { variance: 1.0 };
        let a =
            collision_integral_mc_from_source(&source, &grid, maxwellian_params(10_000)).unwrap();
        let b =
            collision_integral_mc_from_source(&source, &grid, maxwellian_params(10_000)).unwrap();
        assert_eq!(a.values, b.values);
    }
}
