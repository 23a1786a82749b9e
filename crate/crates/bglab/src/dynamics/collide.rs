//! Elastic collision resolution and conservation diagnostics.

use crate::dynamics::particle::SystemConfig;
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Resolve an elastic equal-mass contact.
///
/// `normal` is the unit vector from centre 2 to centre 1. The radial relative
/// velocity component is exactly reversed; tangential components are
/// untouched. The same impulse applies to external and tether contacts.
pub fn resolve_pair_collision(v1: Vec3, v2: Vec3, normal: Vec3) -> Result<(Vec3, Vec3)> {
    if (normal.norm_sq() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParam(format!(
            "contact normal is not unit length (|n|^2 = {})",
            normal.norm_sq()
        )));
    }
    let vn = (v1 - v2).dot(normal);
    Ok((v1 - normal * vn, v2 + normal * vn))
}

/// Specular wall reflection: the normal component (toward the outward wall
/// normal) reverses, tangential components are preserved.
pub fn resolve_wall_collision(v: Vec3, wall_normal: Vec3) -> Vec3 {
    debug_assert!((wall_normal.norm_sq() - 1.0).abs() < 1e-12);
    v - wall_normal * (2.0 * v.dot(wall_normal))
}

/// Total kinetic energy and momentum.
///
/// All particles share one mass, so the momentum is `m` times the velocity
/// sum taken in particle order; samplers zero that ordered sum exactly.
pub fn conserved_quantities(config: &SystemConfig) -> (f64, Vec3) {
    let mut v_sum = Vec3::ZERO;
    let mut speed_sq_sum = 0.0;
    for p in &config.particles {
        v_sum += p.v;
        speed_sq_sum += p.v.norm_sq();
    }
    (0.5 * config.m * speed_sq_sum, v_sum * config.m)
}
