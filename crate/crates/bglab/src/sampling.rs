//! Initial-microstate construction and rule validation.
//!
//! Samplers are pure functions of their spec (seed included); positions,
//! dimer placement and velocities draw from separate derived streams so that
//! changing one stage never reshuffles another.

use crate::dynamics::{
    classify_pairs, BoundaryKind, DomainGeometry, Mode, ParticleState, SystemConfig,
};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::vec3::Vec3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Feasibility cutoff for rejection sampling (conventional volume fraction).
pub const ETA_FEASIBLE: f64 = 0.3;

const TAU_REL: f64 = 1e-8;

/// How external positions are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositionLaw {
    /// Uniform with pairwise exclusion at distance d.
    #[serde(rename = "hard-sphere")]
    HardSphere,
    /// Independent uniform positions, overlaps allowed. Only meaningful in
    /// free-flow mode; used as the analytic control for the mask estimators.
    #[serde(rename = "ideal-gas")]
    IdealGas,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub n_external: usize,
    pub n_internal_pairs: usize,
    /// Dimer centre separation as a fraction of d, in (0, 1).
    pub internal_separation: f64,
    pub temperature: f64,
    pub seed: u64,
    pub geometry: DomainGeometry,
    pub d: f64,
    pub m: f64,
    pub mode: Mode,
    pub position_law: PositionLaw,
    /// Rejection cap before reporting packing infeasibility.
    pub max_attempts: u64,
}

impl SamplerSpec {
    pub fn total_particles(&self) -> usize {
        self.n_external + 2 * self.n_internal_pairs
    }

    /// Conventional volume fraction N (pi/6) d^3 / V of the full spec.
    pub fn eta_conv(&self) -> f64 {
        self.total_particles() as f64 * (std::f64::consts::PI / 6.0) * self.d.powi(3)
            / self.geometry.volume()
    }

    fn check(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::InvalidParam("d must be > 0".into()));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidParam("m must be > 0".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidParam("temperature must be >= 0".into()));
        }
        if self.n_internal_pairs > 0
            && !(self.internal_separation > 0.0 && self.internal_separation < 1.0)
        {
            return Err(Error::InvalidParam(
                "internal_separation must lie strictly inside (0, 1)".into(),
            ));
        }
        if self.mode == Mode::SnModel && (self.n_external == 0 || self.n_internal_pairs == 0) {
            return Err(Error::InvalidParam(
                "s_n-model requires both occupation numbers non-zero: \
                 n_external >= 1 and n_internal_pairs >= 1"
                    .into(),
            ));
        }
        if self.n_internal_pairs > 0 && self.mode == Mode::StandardGas {
            return Err(Error::InvalidParam(
                "standard-gas mode cannot hold internal pairs".into(),
            ));
        }
        if self.position_law == PositionLaw::IdealGas && self.mode != Mode::FreeFlow {
            return Err(Error::InvalidParam(
                "ideal-gas positions (overlap allowed) require free-flow mode".into(),
            ));
        }
        if self.position_law == PositionLaw::IdealGas && self.n_internal_pairs > 0 {
            return Err(Error::InvalidParam(
                "ideal-gas positions cannot carry internal pairs".into(),
            ));
        }
        if self.geometry.kind == BoundaryKind::SpecularBox
            && self.geometry.lengths.iter().any(|&l| l <= self.d)
        {
            return Err(Error::InvalidParam(
                "specular box edges must exceed d".into(),
            ));
        }
        if self.position_law == PositionLaw::HardSphere && self.eta_conv() > ETA_FEASIBLE {
            return Err(Error::PackingInfeasible(format!(
                "volume fraction {:.4} exceeds the feasibility cutoff {}",
                self.eta_conv(),
                ETA_FEASIBLE
            )));
        }
        Ok(())
    }
}

fn uniform_position(spec: &SamplerSpec, rng: &mut impl Rng) -> Vec3 {
    let mut r = Vec3::ZERO;
    for k in 0..3 {
        let l = spec.geometry.lengths[k];
        r[k] = match spec.geometry.kind {
            BoundaryKind::SpecularBox => rng.random_range(spec.d / 2.0..=l - spec.d / 2.0),
            BoundaryKind::PeriodicBox => rng.random_range(0.0..l),
        };
    }
    r
}

fn clear_of(existing: &[ParticleState], r: Vec3, d: f64, geometry: &DomainGeometry) -> bool {
    let d2 = d * d;
    existing
        .iter()
        .all(|p| geometry.displacement(r, p.r).norm_sq() >= d2)
}

/// Draw the external gas: uniform admissible centres with pairwise
/// exclusion at d (unless the ideal-gas control law is selected).
/// Velocities are left at zero.
pub fn sample_external_gas(spec: &SamplerSpec) -> Result<SystemConfig> {
    spec.check()?;
    let mut rng = stream(spec.seed, &[0]);
    let mut particles: Vec<ParticleState> = Vec::with_capacity(spec.n_external);
    let mut rejections: u64 = 0;
    for id in 0..spec.n_external {
        loop {
            let r = uniform_position(spec, &mut rng);
            if spec.position_law == PositionLaw::IdealGas
                || clear_of(&particles, r, spec.d, &spec.geometry)
            {
                particles.push(ParticleState::new(id as u32, r, Vec3::ZERO));
                break;
            }
            rejections += 1;
            if rejections >= spec.max_attempts {
                return Err(Error::PackingInfeasible(format!(
                    "external gas placement exceeded {} rejections at particle {id}",
                    spec.max_attempts
                )));
            }
        }
    }
    Ok(SystemConfig {
        particles,
        d: spec.d,
        m: spec.m,
        geometry: spec.geometry,
        mode: spec.mode,
        time: 0.0,
        registered_internal: None,
    })
}

/// Add tethered dimers to `base`: each dimer's centres sit at
/// `internal_separation * d`, and every member keeps distance >= d from all
/// non-partner particles.
pub fn sample_internal_clusters(spec: &SamplerSpec, base: SystemConfig) -> Result<SystemConfig> {
    spec.check()?;
    let mut rng = stream(spec.seed, &[1]);
    let mut particles = base.particles;
    let mut registered = Vec::with_capacity(spec.n_internal_pairs);
    let half = 0.5 * spec.internal_separation * spec.d;
    let mut rejections: u64 = 0;
    for _ in 0..spec.n_internal_pairs {
        loop {
            let centroid = uniform_position(spec, &mut rng);
            let axis: [f64; 3] = UnitSphere.sample(&mut rng);
            let offset = Vec3(axis) * half;
            let ra = spec.geometry.wrap(centroid + offset);
            let rb = spec.geometry.wrap(centroid - offset);
            let placed = spec.geometry.contains(ra, spec.d, 0.0)
                && spec.geometry.contains(rb, spec.d, 0.0)
                && clear_of(&particles, ra, spec.d, &spec.geometry)
                && clear_of(&particles, rb, spec.d, &spec.geometry);
            if placed {
                let id_a = particles.len() as u32;
                let id_b = id_a + 1;
                particles.push(ParticleState::new(id_a, ra, Vec3::ZERO));
                particles.push(ParticleState::new(id_b, rb, Vec3::ZERO));
                registered.push((id_a, id_b));
                break;
            }
            rejections += 1;
            if rejections >= spec.max_attempts {
                return Err(Error::PackingInfeasible(format!(
                    "dimer placement exceeded {} rejections",
                    spec.max_attempts
                )));
            }
        }
    }
    Ok(SystemConfig {
        particles,
        registered_internal: Some(registered),
        ..base
    })
}

/// Draw independent Gaussian velocity components with variance `T/m`, then
/// shift the total momentum to exactly zero.
///
/// The shift subtracts the mean and then replaces the last particle's
/// velocity with the negated running sum of the others, so the momentum
/// accumulated in particle order vanishes identically.
pub fn sample_maxwellian_velocities(config: &mut SystemConfig, temperature: f64, seed: u64) {
    let n = config.n();
    if n == 0 {
        return;
    }
    let sigma = (temperature / config.m).sqrt();
    let mut rng = stream(seed, &[2]);
    for p in &mut config.particles {
        let g: [f64; 3] = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        p.v = Vec3(g) * sigma;
    }
    if n == 1 {
        config.particles[0].v = Vec3::ZERO;
        return;
    }
    let mut mean = Vec3::ZERO;
    for p in &config.particles {
        mean += p.v;
    }
    mean = mean * (1.0 / n as f64);
    for p in &mut config.particles {
        p.v -= mean;
    }
    let mut head_sum = Vec3::ZERO;
    for p in &config.particles[..n - 1] {
        head_sum += p.v;
    }
    config.particles[n - 1].v = -head_sum;
}

/// Full pipeline: external gas, internal clusters, Maxwellian velocities.
pub fn sample_configuration(spec: &SamplerSpec) -> Result<SystemConfig> {
    let mut config = sample_external_gas(spec)?;
    if spec.n_internal_pairs > 0 {
        config = sample_internal_clusters(spec, config)?;
    }
    sample_maxwellian_velocities(&mut config, spec.temperature, spec.seed);
    Ok(config)
}

/// A single rule violation found by [`validate_configuration`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    NonFinite { id: u32 },
    OutOfDomain { id: u32 },
    Overlap { a: u32, b: u32, distance: f64 },
    UnregisteredOverlap { a: u32, b: u32, distance: f64 },
    BrokenTether { a: u32, b: u32, distance: f64 },
    ZeroInternalOccupation,
    ZeroExternalOccupation,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { id } => write!(f, "non-finite state: particle {id}"),
            Violation::OutOfDomain { id } => write!(f, "out of domain: particle {id}"),
            Violation::Overlap { a, b, distance } => {
                write!(f, "overlap: pair ({a}, {b}) at distance {distance}")
            }
            Violation::UnregisteredOverlap { a, b, distance } => write!(
                f,
                "unregistered overlap: pair ({a}, {b}) at distance {distance}"
            ),
            Violation::BrokenTether { a, b, distance } => write!(
                f,
                "broken tether: registered pair ({a}, {b}) at distance {distance}"
            ),
            Violation::ZeroInternalOccupation => write!(f, "N_int = 0"),
            Violation::ZeroExternalOccupation => write!(f, "N_ext = 0"),
        }
    }
}

/// Check a configuration against the rules for `mode`. Violations are data,
/// not failures; all of them are returned.
pub fn validate_configuration(config: &SystemConfig, mode: Mode) -> Vec<Violation> {
    let mut out = Vec::new();
    let tau = TAU_REL * config.d;
    for p in &config.particles {
        if !p.r.is_finite() || !p.v.is_finite() {
            out.push(Violation::NonFinite { id: p.id });
        } else if !config.geometry.contains(p.r, config.d, tau) {
            out.push(Violation::OutOfDomain { id: p.id });
        }
    }
    if mode == Mode::FreeFlow {
        return out;
    }
    let class = classify_pairs(config);
    match mode {
        Mode::StandardGas => {
            for &(a, b) in &class.mutually_internal {
                let distance = config.geometry.distance(
                    config.particles[a as usize].r,
                    config.particles[b as usize].r,
                );
                if distance < config.d - tau {
                    out.push(Violation::Overlap { a, b, distance });
                }
            }
        }
        Mode::SnModel => {
            let registered = config
                .registered_internal
                .clone()
                .unwrap_or_else(|| class.mutually_internal.iter().copied().collect());
            for &(a, b) in &class.mutually_internal {
                let distance = config.geometry.distance(
                    config.particles[a as usize].r,
                    config.particles[b as usize].r,
                );
                if distance < config.d - tau && !registered.contains(&(a, b)) {
                    out.push(Violation::UnregisteredOverlap { a, b, distance });
                }
            }
            for &(a, b) in &registered {
                let distance = config.geometry.distance(
                    config.particles[a as usize].r,
                    config.particles[b as usize].r,
                );
                if distance > config.d + tau {
                    out.push(Violation::BrokenTether { a, b, distance });
                }
            }
            if class.n_int == 0 {
                out.push(Violation::ZeroInternalOccupation);
            }
            if class.n_ext == 0 {
                out.push(Violation::ZeroExternalOccupation);
            }
        }
        Mode::FreeFlow => unreachable!(),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::conserved_quantities;

    fn base_spec() -> SamplerSpec {
        SamplerSpec {
            n_external: 2,
            n_internal_pairs: 0,
            internal_separation: 0.5,
            temperature: 1.0,
            seed: 1,
            geometry: DomainGeometry::cube(BoundaryKind::SpecularBox, 1.0).unwrap(),
            d: 0.1,
            m: 1.0,
            mode: Mode::StandardGas,
            position_law: PositionLaw::HardSphere,
            max_attempts: 1_000_000,
        }
    }

    #[test]
    fn small_gas_is_valid_and_spaced() {
        let cfg = sample_external_gas(&base_spec()).unwrap();
        assert!(validate_configuration(&cfg, Mode::StandardGas).is_empty());
        let gap = cfg
            .geometry
            .distance(cfg.particles[0].r, cfg.particles[1].r);
        assert!(gap >= 0.1);
    }

    #[test]
    fn dense_gas_succeeds_within_cap() {
        // eta_conv ~ 2.1e-3: acceptance stays near 1
        let spec = SamplerSpec {
            n_external: 500,
            d: 0.02,
            ..base_spec()
        };
        let cfg = sample_external_gas(&spec).unwrap();
        assert_eq!(cfg.n(), 500);
        assert!(validate_configuration(&cfg, Mode::StandardGas).is_empty());
    }

    #[test]
    fn infeasible_packing_rejected() {
        // eta_conv = 0.5 > 0.3
        let eta_target: f64 = 0.5;
        let n = 1000usize;
        let d = (eta_target * 6.0 / (std::f64::consts::PI * n as f64)).cbrt();
        let spec = SamplerSpec {
            n_external: n,
            d,
            geometry: DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap(),
            ..base_spec()
        };
        match sample_external_gas(&spec) {
            Err(Error::PackingInfeasible(_)) => {}
            other => panic!("expected packing-infeasible, got {other:?}"),
        }
    }

    #[test]
    fn lone_dimer_classifies_internal() {
        let spec = SamplerSpec {
            n_external: 0,
            n_internal_pairs: 1,
            mode: Mode::FreeFlow, // bypass the s_n occupation rule for this probe
            ..base_spec()
        };
        let base = sample_external_gas(&spec).unwrap();
        let cfg = sample_internal_clusters(&spec, base).unwrap();
        let class = classify_pairs(&cfg);
        assert_eq!(class.n_int, 2);
        assert_eq!(class.n_ext, 0);
        let gap = cfg
            .geometry
            .distance(cfg.particles[0].r, cfg.particles[1].r);
        assert!((gap - 0.5 * spec.d).abs() < 1e-12);
    }

    #[test]
    fn dimer_among_gas_keeps_occupation() {
        let spec = SamplerSpec {
            n_external: 100,
            n_internal_pairs: 1,
            d: 0.03,
            mode: Mode::SnModel,
            ..base_spec()
        };
        let cfg = sample_configuration(&spec).unwrap();
        let class = classify_pairs(&cfg);
        assert_eq!(class.n_int, 2);
        assert_eq!(class.n_ext, 100);
        assert!(validate_configuration(&cfg, Mode::SnModel).is_empty());
    }

    #[test]
    fn unit_separation_rejected() {
        let spec = SamplerSpec {
            n_external: 1,
            n_internal_pairs: 1,
            internal_separation: 1.0,
            mode: Mode::SnModel,
            ..base_spec()
        };
        assert!(sample_configuration(&spec).is_err());
    }

    #[test]
    fn sn_requires_both_occupations() {
        let spec = SamplerSpec {
            n_external: 10,
            n_internal_pairs: 0,
            mode: Mode::SnModel,
            ..base_spec()
        };
        assert!(sample_configuration(&spec).is_err());
    }

    #[test]
    fn momentum_is_exactly_zero() {
        let spec = SamplerSpec {
            n_external: 137,
            d: 0.01,
            ..base_spec()
        };
        let cfg = sample_configuration(&spec).unwrap();
        let (_, p) = conserved_quantities(&cfg);
        assert_eq!(p, Vec3::ZERO);
    }

    #[test]
    fn zero_temperature_freezes() {
        let spec = SamplerSpec {
            temperature: 0.0,
            ..base_spec()
        };
        let cfg = sample_configuration(&spec).unwrap();
        assert!(cfg.particles.iter().all(|p| p.v == Vec3::ZERO));
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = SamplerSpec {
            n_external: 40,
            d: 0.03,
            ..base_spec()
        };
        let a = sample_configuration(&spec).unwrap();
        let b = sample_configuration(&spec).unwrap();
        assert_eq!(a, b);
        let other = SamplerSpec { seed: 2, ..spec };
        assert_ne!(sample_configuration(&other).unwrap(), a);
    }

    #[test]
    fn velocity_variance_matches_temperature() {
        // law-of-large-numbers check on the per-component variance
        let spec = SamplerSpec {
            n_external: 100_000,
            temperature: 1.0,
            position_law: PositionLaw::IdealGas,
            mode: Mode::FreeFlow,
            geometry: DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap(),
            d: 0.001,
            ..base_spec()
        };
        let cfg = sample_configuration(&spec).unwrap();
        for k in 0..3 {
            let var = cfg.particles.iter().map(|p| p.v[k] * p.v[k]).sum::<f64>() / cfg.n() as f64;
            assert!((var - 1.0).abs() < 0.02, "component {k} variance {var}");
        }
    }

    #[test]
    fn overlap_flagged_in_standard_gas() {
        let mut cfg = sample_external_gas(&base_spec()).unwrap();
        cfg.particles[1].r = cfg.particles[0].r + Vec3::new(0.9 * cfg.d, 0.0, 0.0);
        let violations = validate_configuration(&cfg, Mode::StandardGas);
        assert!(matches!(violations[..], [Violation::Overlap { .. }]));
    }

    #[test]
    fn sn_with_no_dimers_reports_zero_occupation() {
        let cfg = sample_external_gas(&base_spec()).unwrap();
        let violations = validate_configuration(&cfg, Mode::SnModel);
        assert!(violations.contains(&Violation::ZeroInternalOccupation));
    }
}
