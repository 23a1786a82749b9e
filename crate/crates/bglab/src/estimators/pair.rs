//! Pair statistics: radial distribution and the factorization (AFC) metric.

use crate::dynamics::SystemConfig;
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSpec {
    pub bins: usize,
    pub r_max: f64,
}

/// Coarse velocity-pair grid for the factorization check: per-axis bin count
/// over `[-v_max, v_max]` applied to both members of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityPairSpec {
    pub bins: usize,
    pub v_max: f64,
}

/// Binned pair-distance counts with the ideal-gas normalisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairHistogram {
    pub spec: RadialSpec,
    pub counts: Vec<u64>,
    pub members: u64,
    /// Particles per member (equal across the ensemble).
    pub n_particles: u64,
    pub volume: f64,
}

impl PairHistogram {
    /// Radial distribution value for one bin: counts over the ideal-gas
    /// shell expectation.
    pub fn g(&self, bin: usize) -> f64 {
        let expect = self.ideal_count(bin);
        if expect == 0.0 {
            0.0
        } else {
            self.counts[bin] as f64 / expect
        }
    }

    /// Expected count for independent uniform positions.
    pub fn ideal_count(&self, bin: usize) -> f64 {
        let w = self.spec.r_max / self.spec.bins as f64;
        let (lo, hi) = (bin as f64 * w, (bin + 1) as f64 * w);
        let shell = 4.0 * std::f64::consts::PI / 3.0 * (hi.powi(3) - lo.powi(3));
        let pairs = (self.n_particles * (self.n_particles - 1) / 2) as f64;
        self.members as f64 * pairs * shell / self.volume
    }

    /// Poisson standard error of g in one bin.
    pub fn g_std_err(&self, bin: usize) -> f64 {
        let expect = self.ideal_count(bin);
        if expect == 0.0 {
            0.0
        } else {
            (self.counts[bin].max(1) as f64).sqrt() / expect
        }
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        let w = self.spec.r_max / self.spec.bins as f64;
        (0..self.spec.bins).map(|k| (k as f64 + 0.5) * w).collect()
    }
}

/// Asymptotic-factorization metric over coarse velocity-pair bins:
/// `max |f2 - f1 f1| / max(f1 f1, floor)` over bins with enough statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AfcMetric {
    pub max_deviation: f64,
    /// Velocity-pair bins that met the statistics threshold.
    pub evaluated_bins: u64,
    /// Bins flagged indeterminate (count below the threshold).
    pub indeterminate_bins: u64,
}

/// Denominator floor for the AFC ratio.
pub const AFC_FLOOR: f64 = 1e-12;
/// Minimum pair count for a bin to be determinate.
pub const MIN_BIN_COUNT: u64 = 25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub radial: PairHistogram,
    pub afc: AfcMetric,
}

fn coarse_index(v: Vec3, spec: &VelocityPairSpec) -> Option<usize> {
    let w = 2.0 * spec.v_max / spec.bins as f64;
    let mut idx = 0usize;
    for k in 0..3 {
        if v[k] < -spec.v_max || v[k] >= spec.v_max {
            return None;
        }
        let i = (((v[k] + spec.v_max) / w).floor() as i64).clamp(0, spec.bins as i64 - 1) as usize;
        idx = idx * spec.bins + i;
    }
    Some(idx)
}

/// Radial distribution plus the AFC factorization metric over an ensemble of
/// same-size snapshots.
pub fn estimate_pair_correlation(
    snapshots: &[SystemConfig],
    radial: RadialSpec,
    velocity_pairs: VelocityPairSpec,
) -> Result<PairCorrelation> {
    if snapshots.is_empty() {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    let n = snapshots[0].n();
    if n < 2 {
        return Err(Error::InsufficientData(
            "pair statistics need at least two particles".into(),
        ));
    }
    if snapshots.iter().any(|s| s.n() != n) {
        return Err(Error::InvalidParam(
            "ensemble members must have equal particle counts".into(),
        ));
    }
    if radial.bins == 0 || !(radial.r_max > 0.0) {
        return Err(Error::InvalidParam("bad radial spec".into()));
    }
    let geometry = snapshots[0].geometry;
    if geometry.is_periodic() {
        let half_min = geometry
            .lengths
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            / 2.0;
        if radial.r_max > half_min + 1e-12 {
            return Err(Error::InvalidParam(format!(
                "r_max {} exceeds half the box ({half_min}) in periodic mode",
                radial.r_max
            )));
        }
    }

    let width = radial.r_max / radial.bins as f64;
    let mut counts = vec![0u64; radial.bins];

    let nc = velocity_pairs.bins.pow(3);
    let mut f1_counts = vec![0u64; nc];
    let mut f2_counts = vec![0u64; nc * nc];
    let mut f1_total: u64 = 0;
    let mut f2_total: u64 = 0;

    for snap in snapshots {
        for i in 0..n {
            if let Some(ci) = coarse_index(snap.particles[i].v, &velocity_pairs) {
                f1_counts[ci] += 1;
                f1_total += 1;
            }
            for j in (i + 1)..n {
                let dist = geometry.distance(snap.particles[i].r, snap.particles[j].r);
                let bin = (dist / width).floor() as usize;
                if bin < radial.bins {
                    counts[bin] += 1;
                }
                if let (Some(ci), Some(cj)) = (
                    coarse_index(snap.particles[i].v, &velocity_pairs),
                    coarse_index(snap.particles[j].v, &velocity_pairs),
                ) {
                    // deposit both orders; f2 is symmetric
                    f2_counts[ci * nc + cj] += 1;
                    f2_counts[cj * nc + ci] += 1;
                    f2_total += 2;
                }
            }
        }
    }

    let radial_hist = PairHistogram {
        spec: radial,
        counts,
        members: snapshots.len() as u64,
        n_particles: n as u64,
        volume: geometry.volume(),
    };

    // densities per coarse cell (cell volumes cancel only partially, so keep
    // them explicit)
    let w1 = (2.0 * velocity_pairs.v_max / velocity_pairs.bins as f64).powi(3);
    let mut max_deviation: f64 = 0.0;
    let mut evaluated = 0u64;
    let mut indeterminate = 0u64;
    if f1_total > 0 && f2_total > 0 {
        for a in 0..nc {
            let f1_a = f1_counts[a] as f64 / (f1_total as f64 * w1);
            for b in 0..nc {
                let count = f2_counts[a * nc + b];
                if count < MIN_BIN_COUNT {
                    indeterminate += 1;
                    continue;
                }
                evaluated += 1;
                let f1_b = f1_counts[b] as f64 / (f1_total as f64 * w1);
                let f2 = count as f64 / (f2_total as f64 * w1 * w1);
                let product = f1_a * f1_b;
                let dev = (f2 - product).abs() / product.max(AFC_FLOOR);
                if dev > max_deviation {
                    max_deviation = dev;
                }
            }
        }
    }

    Ok(PairCorrelation {
        radial: radial_hist,
        afc: AfcMetric {
            max_deviation,
            evaluated_bins: evaluated,
            indeterminate_bins: indeterminate,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BoundaryKind, DomainGeometry, Mode, ParticleState};
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn uniform_snapshot(n: usize, seed: u64, d: f64) -> SystemConfig {
        let geometry = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let mut rng = crate::rng::stream(seed, &[9]);
        let particles = (0..n)
            .map(|i| {
                let r = Vec3::new(rng.random(), rng.random(), rng.random());
                let v = Vec3::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                );
                ParticleState::new(i as u32, r, v)
            })
            .collect();
        SystemConfig {
            particles,
            d,
            m: 1.0,
            geometry,
            mode: Mode::FreeFlow,
            time: 0.0,
            registered_internal: None,
        }
    }

    #[test]
    fn uniform_positions_give_flat_g() {
        let snaps: Vec<_> = (0..40).map(|s| uniform_snapshot(200, s, 0.01)).collect();
        let pc = estimate_pair_correlation(
            &snaps,
            RadialSpec {
                bins: 20,
                r_max: 0.5,
            },
            VelocityPairSpec {
                bins: 3,
                v_max: 4.0,
            },
        )
        .unwrap();
        for bin in 2..20 {
            let g = pc.radial.g(bin);
            let se = pc.radial.g_std_err(bin);
            assert!(
                (g - 1.0).abs() <= 3.0 * se + 0.02,
                "bin {bin}: g = {g}, se = {se}"
            );
        }
    }

    #[test]
    fn independent_velocities_factorize() {
        let snaps: Vec<_> = (0..60)
            .map(|s| uniform_snapshot(150, s + 100, 0.01))
            .collect();
        let pc = estimate_pair_correlation(
            &snaps,
            RadialSpec {
                bins: 8,
                r_max: 0.5,
            },
            VelocityPairSpec {
                bins: 2,
                v_max: 4.0,
            },
        )
        .unwrap();
        // product ensemble by construction: deviation is sampling noise
        assert!(
            pc.afc.max_deviation < 0.2,
            "AFC deviation {}",
            pc.afc.max_deviation
        );
        assert!(pc.afc.evaluated_bins > 0);
    }

    #[test]
    fn hard_sphere_core_is_empty() {
        // no-penetration puts zero pair mass below d
        use crate::sampling::{sample_configuration, PositionLaw, SamplerSpec};
        let d = 0.08;
        let geometry = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let snaps: Vec<_> = (0..10)
            .map(|k| {
                sample_configuration(&SamplerSpec {
                    n_external: 150,
                    n_internal_pairs: 0,
                    internal_separation: 0.5,
                    temperature: 1.0,
                    seed: 60 + k,
                    geometry,
                    d,
                    m: 1.0,
                    mode: Mode::StandardGas,
                    position_law: PositionLaw::HardSphere,
                    max_attempts: 1_000_000,
                })
                .unwrap()
            })
            .collect();
        let pc = estimate_pair_correlation(
            &snaps,
            RadialSpec {
                bins: 25,
                r_max: 0.5,
            },
            VelocityPairSpec {
                bins: 2,
                v_max: 5.0,
            },
        )
        .unwrap();
        let width = 0.5 / 25.0;
        for bin in 0..25 {
            if (bin + 1) as f64 * width <= d {
                assert_eq!(pc.radial.counts[bin], 0, "core bin {bin} populated");
                assert_eq!(pc.radial.g(bin), 0.0);
            }
        }
    }

    #[test]
    fn sparse_bins_flagged_indeterminate() {
        let snaps = vec![uniform_snapshot(10, 3, 0.01)];
        let pc = estimate_pair_correlation(
            &snaps,
            RadialSpec {
                bins: 4,
                r_max: 0.4,
            },
            VelocityPairSpec {
                bins: 4,
                v_max: 4.0,
            },
        )
        .unwrap();
        assert!(pc.afc.indeterminate_bins > 0);
    }

    #[test]
    fn r_max_beyond_half_box_rejected() {
        let snaps = vec![uniform_snapshot(10, 3, 0.01)];
        assert!(estimate_pair_correlation(
            &snaps,
            RadialSpec {
                bins: 4,
                r_max: 0.7
            },
            VelocityPairSpec {
                bins: 2,
                v_max: 4.0
            },
        )
        .is_err());
    }
}
