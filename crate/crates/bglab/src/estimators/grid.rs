//! Regular phase-space grid over position (the domain box) and velocity
//! (a centred cube `[-v_max, v_max]^3`).

use crate::dynamics::DomainGeometry;
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SPATIAL_BINS: usize = 8;
pub const DEFAULT_VELOCITY_BINS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub spatial_bins: [usize; 3],
    pub lengths: [f64; 3],
    pub periodic: bool,
    pub velocity_bins: [usize; 3],
    pub v_max: f64,
}

impl GridSpec {
    pub fn new(
        geometry: &DomainGeometry,
        spatial_bins: [usize; 3],
        velocity_bins: [usize; 3],
        v_max: f64,
    ) -> Result<Self> {
        if spatial_bins
            .iter()
            .chain(velocity_bins.iter())
            .any(|&b| b == 0)
        {
            return Err(Error::InvalidParam("grid bin counts must be >= 1".into()));
        }
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidParam("v_max must be > 0".into()));
        }
        Ok(GridSpec {
            spatial_bins,
            lengths: geometry.lengths,
            periodic: geometry.is_periodic(),
            velocity_bins,
            v_max,
        })
    }

    /// Grid defaults: 8^3 spatial, 16^3 velocity cells with the given v_max.
    pub fn with_defaults(geometry: &DomainGeometry, v_max: f64) -> Result<Self> {
        Self::new(
            geometry,
            [DEFAULT_SPATIAL_BINS; 3],
            [DEFAULT_VELOCITY_BINS; 3],
            v_max,
        )
    }

    /// Default velocity-range rule: five thermal speeds.
    pub fn default_v_max(temperature: f64, m: f64) -> f64 {
        5.0 * (temperature / m).sqrt()
    }

    pub fn spatial_count(&self) -> usize {
        self.spatial_bins.iter().product()
    }

    pub fn velocity_count(&self) -> usize {
        self.velocity_bins.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.spatial_count() * self.velocity_count()
    }

    pub fn spatial_cell_volume(&self) -> f64 {
        (0..3)
            .map(|k| self.lengths[k] / self.spatial_bins[k] as f64)
            .product()
    }

    pub fn velocity_cell_volume(&self) -> f64 {
        (0..3)
            .map(|k| 2.0 * self.v_max / self.velocity_bins[k] as f64)
            .product()
    }

    /// Uniform phase-space cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.spatial_cell_volume() * self.velocity_cell_volume()
    }

    pub fn spatial_index(&self, r: Vec3) -> usize {
        let mut c = [0usize; 3];
        for k in 0..3 {
            let w = self.lengths[k] / self.spatial_bins[k] as f64;
            let i = (r[k] / w).floor() as i64;
            c[k] = i.clamp(0, self.spatial_bins[k] as i64 - 1) as usize;
        }
        (c[0] * self.spatial_bins[1] + c[1]) * self.spatial_bins[2] + c[2]
    }

    /// Velocity cell index, or `None` outside the grid.
    pub fn velocity_index(&self, v: Vec3) -> Option<usize> {
        let mut c = [0usize; 3];
        for k in 0..3 {
            if v[k] < -self.v_max || v[k] >= self.v_max {
                return None;
            }
            let w = 2.0 * self.v_max / self.velocity_bins[k] as f64;
            let i = ((v[k] + self.v_max) / w).floor() as i64;
            c[k] = i.clamp(0, self.velocity_bins[k] as i64 - 1) as usize;
        }
        Some((c[0] * self.velocity_bins[1] + c[1]) * self.velocity_bins[2] + c[2])
    }

    pub fn cell_index(&self, spatial: usize, velocity: usize) -> usize {
        spatial * self.velocity_count() + velocity
    }

    pub fn split_index(&self, cell: usize) -> (usize, usize) {
        (cell / self.velocity_count(), cell % self.velocity_count())
    }

    /// Locate a phase point; `None` when the velocity overflows the grid.
    pub fn locate(&self, r: Vec3, v: Vec3) -> Option<usize> {
        let sv = self.spatial_index(r);
        self.velocity_index(v).map(|vv| self.cell_index(sv, vv))
    }

    pub fn spatial_coords(&self, spatial: usize) -> [usize; 3] {
        let z = spatial % self.spatial_bins[2];
        let y = (spatial / self.spatial_bins[2]) % self.spatial_bins[1];
        let x = spatial / (self.spatial_bins[2] * self.spatial_bins[1]);
        [x, y, z]
    }

    pub fn spatial_from_coords(&self, c: [usize; 3]) -> usize {
        (c[0] * self.spatial_bins[1] + c[1]) * self.spatial_bins[2] + c[2]
    }

    pub fn velocity_coords(&self, velocity: usize) -> [usize; 3] {
        let z = velocity % self.velocity_bins[2];
        let y = (velocity / self.velocity_bins[2]) % self.velocity_bins[1];
        let x = velocity / (self.velocity_bins[2] * self.velocity_bins[1]);
        [x, y, z]
    }

    pub fn spatial_cell_center(&self, spatial: usize) -> Vec3 {
        let c = self.spatial_coords(spatial);
        let mut r = Vec3::ZERO;
        for k in 0..3 {
            let w = self.lengths[k] / self.spatial_bins[k] as f64;
            r[k] = (c[k] as f64 + 0.5) * w;
        }
        r
    }

    pub fn velocity_cell_center(&self, velocity: usize) -> Vec3 {
        let c = self.velocity_coords(velocity);
        let mut v = Vec3::ZERO;
        for k in 0..3 {
            let w = 2.0 * self.v_max / self.velocity_bins[k] as f64;
            v[k] = -self.v_max + (c[k] as f64 + 0.5) * w;
        }
        v
    }

    pub fn spatial_widths(&self) -> [f64; 3] {
        [
            self.lengths[0] / self.spatial_bins[0] as f64,
            self.lengths[1] / self.spatial_bins[1] as f64,
            self.lengths[2] / self.spatial_bins[2] as f64,
        ]
    }
}
