//! Particle and full-system microstate types.

use crate::dynamics::geometry::DomainGeometry;
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// One particle's point in the one-particle phase space.
///
/// `r` is the position at `sync_time`; between events positions are advanced
/// ballistically on demand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub id: u32,
    pub r: Vec3,
    pub v: Vec3,
    pub sync_time: f64,
}

impl ParticleState {
    pub fn new(id: u32, r: Vec3, v: Vec3) -> Self {
        ParticleState {
            id,
            r,
            v,
            sync_time: 0.0,
        }
    }

    /// Ballistic position at absolute time `t >= sync_time`.
    pub fn position_at(&self, t: f64) -> Vec3 {
        self.r + self.v * (t - self.sync_time)
    }
}

/// Dynamical regime of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Plain hard spheres: every pair collides elastically at distance d.
    #[serde(rename = "standard-gas")]
    StandardGas,
    /// Registered mutually-internal pairs are tethered at distance d from
    /// below; all other pairs collide externally at distance d from above.
    #[serde(rename = "s_n-model")]
    SnModel,
    /// Pair interactions disabled; boundaries still apply.
    #[serde(rename = "free-flow")]
    FreeFlow,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::StandardGas => "standard-gas",
            Mode::SnModel => "s_n-model",
            Mode::FreeFlow => "free-flow",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard-gas" => Ok(Mode::StandardGas),
            "s_n-model" => Ok(Mode::SnModel),
            "free-flow" => Ok(Mode::FreeFlow),
            other => Err(Error::InvalidParam(format!(
                "unknown mode '{other}' (expected standard-gas, s_n-model or free-flow)"
            ))),
        }
    }
}

/// A point of the N-particle phase space plus the run geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub particles: Vec<ParticleState>,
    /// Sphere diameter.
    pub d: f64,
    /// Particle mass; enters conserved-quantity scaling only.
    pub m: f64,
    pub geometry: DomainGeometry,
    pub mode: Mode,
    pub time: f64,
    /// Mutually-internal pairs registered at construction (s_n-model runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registered_internal: Option<Vec<(u32, u32)>>,
}

impl SystemConfig {
    pub fn n(&self) -> usize {
        self.particles.len()
    }

    pub fn number_density(&self) -> f64 {
        self.n() as f64 / self.geometry.volume()
    }

    /// Mean particle speed of the current velocities.
    pub fn mean_speed(&self) -> f64 {
        if self.particles.is_empty() {
            return 0.0;
        }
        self.particles.iter().map(|p| p.v.norm()).sum::<f64>() / self.n() as f64
    }

    /// Basic structural checks; detailed rule checks live in
    /// [`crate::sampling::validate_configuration`].
    pub fn check_basic(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::InvalidParam("d must be finite and > 0".into()));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidParam("m must be finite and > 0".into()));
        }
        for p in &self.particles {
            if !p.r.is_finite() || !p.v.is_finite() || !p.sync_time.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "particle {} has non-finite state",
                    p.id
                )));
            }
        }
        Ok(())
    }
}

/// Mean free time estimate `1 / (sqrt(2) pi n d^2 vbar)` from run statistics.
pub fn mean_free_time(config: &SystemConfig) -> f64 {
    let n = config.number_density();
    let vbar = config.mean_speed();
    let rate = std::f64::consts::SQRT_2 * std::f64::consts::PI * n * config.d * config.d * vbar;
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}
