//! Simulation domain: an axis-aligned box with specular or periodic boundaries.

use crate::error::{Error, Result};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    #[serde(rename = "specular-box")]
    SpecularBox,
    #[serde(rename = "periodic-box")]
    PeriodicBox,
}

/// Bounded, connected 3D configuration space of volume `V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGeometry {
    pub kind: BoundaryKind,
    pub lengths: [f64; 3],
}

impl DomainGeometry {
    pub fn new(kind: BoundaryKind, lengths: [f64; 3]) -> Result<Self> {
        if !lengths.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Error::InvalidParam(
                "box edge lengths must be finite and > 0".into(),
            ));
        }
        Ok(DomainGeometry { kind, lengths })
    }

    pub fn cube(kind: BoundaryKind, edge: f64) -> Result<Self> {
        Self::new(kind, [edge; 3])
    }

    pub fn volume(&self) -> f64 {
        self.lengths[0] * self.lengths[1] * self.lengths[2]
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == BoundaryKind::PeriodicBox
    }

    /// Displacement `a - b`; minimum-image in periodic mode.
    pub fn displacement(&self, a: Vec3, b: Vec3) -> Vec3 {
        let mut w = a - b;
        if self.is_periodic() {
            for k in 0..3 {
                let l = self.lengths[k];
                w[k] -= l * (w[k] / l).round();
            }
        }
        w
    }

    pub fn distance(&self, a: Vec3, b: Vec3) -> f64 {
        self.displacement(a, b).norm()
    }

    /// Map a position into the canonical cell `[0, L)` (periodic only).
    pub fn wrap(&self, mut r: Vec3) -> Vec3 {
        if self.is_periodic() {
            for k in 0..3 {
                let l = self.lengths[k];
                r[k] = r[k].rem_euclid(l);
                if r[k] >= l {
                    // rem_euclid can return l for tiny negative inputs
                    r[k] = 0.0;
                }
            }
        }
        r
    }

    /// Whether a sphere of diameter `d` centred at `r` fits inside the domain.
    /// `slack` loosens the wall margin to absorb floating-point drift.
    pub fn contains(&self, r: Vec3, d: f64, slack: f64) -> bool {
        match self.kind {
            BoundaryKind::SpecularBox => {
                (0..3).all(|k| r[k] >= d / 2.0 - slack && r[k] <= self.lengths[k] - d / 2.0 + slack)
            }
            BoundaryKind::PeriodicBox => {
                (0..3).all(|k| r[k] >= -slack && r[k] < self.lengths[k] + slack)
            }
        }
    }

    /// Outward wall normal for wall id `2*axis + (1 if max side)`.
    pub fn wall_normal(wall_id: u32) -> Vec3 {
        let axis = (wall_id / 2) as usize;
        let sign = if wall_id % 2 == 1 { 1.0 } else { -1.0 };
        let mut n = Vec3::ZERO;
        n[axis] = sign;
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimum_image_wraps() {
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let w = g.displacement(Vec3::new(0.95, 0.0, 0.0), Vec3::new(0.05, 0.0, 0.0));
        assert!((w[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn specular_displacement_is_plain() {
        let g = DomainGeometry::cube(BoundaryKind::SpecularBox, 1.0).unwrap();
        let w = g.displacement(Vec3::new(0.95, 0.0, 0.0), Vec3::new(0.05, 0.0, 0.0));
        assert!((w[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn wrap_into_cell() {
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let r = g.wrap(Vec3::new(1.3, -0.25, 0.5));
        assert!((r[0] - 0.3).abs() < 1e-15);
        assert!((r[1] - 0.75).abs() < 1e-15);
        assert_eq!(r[2], 0.5);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(DomainGeometry::cube(BoundaryKind::SpecularBox, 0.0).is_err());
        assert!(DomainGeometry::cube(BoundaryKind::SpecularBox, f64::NAN).is_err());
    }
}
