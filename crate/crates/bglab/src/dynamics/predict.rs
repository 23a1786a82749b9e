//! Event prediction: pair contacts and wall collisions.

use crate::dynamics::event::EventKind;
use crate::dynamics::geometry::{BoundaryKind, DomainGeometry};
use crate::dynamics::particle::ParticleState;
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Events with a radial relative speed below this are discarded as grazing
/// and the pair is re-predicted.
pub const TAU_GRAZING: f64 = 1e-12;

/// Which contact law applies to a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// Impenetrable from outside: contact when distance decreases through d.
    External,
    /// Mutually-internal pair: contact when distance increases through d.
    Tether,
}

/// Solve `|w + u s| = d` for the contact root appropriate to `kind`.
///
/// `w` is the relative position now, `u` the relative velocity. Returns the
/// relative time `s >= 0` of the crossing, or `None` for a miss or a grazing
/// contact (radial speed below [`TAU_GRAZING`]).
fn contact_root(w: Vec3, u: Vec3, d: f64, kind: PairKind) -> Option<f64> {
    let a = u.norm_sq();
    if a == 0.0 {
        return None;
    }
    let b = w.dot(u);
    let c = w.norm_sq() - d * d;
    let disc = b * b - a * c;

    let s = match kind {
        PairKind::External => {
            if b >= 0.0 {
                // separating or tangential now: distance never decreases
                return None;
            }
            if c <= 0.0 {
                // at or within contact distance while approaching: collide now
                0.0
            } else {
                if disc <= 0.0 {
                    return None;
                }
                // smaller root in the cancellation-safe (citardauq) form
                c / (-b + disc.sqrt())
            }
        }
        PairKind::Tether => {
            if disc <= 0.0 {
                // can only happen when the pair is already outside d
                return None;
            }
            if c >= 0.0 && b >= 0.0 {
                // at or beyond the tether radius and separating: bounce now
                0.0
            } else if b > 0.0 {
                // larger root, stable when b and sqrt(disc) are close
                -c / (b + disc.sqrt())
            } else {
                (-b + disc.sqrt()) / a
            }
        }
    };

    if !(s >= 0.0) || !s.is_finite() {
        return None;
    }
    // Radial relative speed at contact; tangency is discarded.
    let contact = w + u * s;
    let radial = u.dot(contact) / d;
    if radial.abs() < TAU_GRAZING {
        return None;
    }
    Some(s)
}

/// Earliest contact event for a pair, as an absolute time.
///
/// Positions are extrapolated to the later of the two sync times; periodic
/// geometry uses the minimum-image displacement at that instant.
pub fn predict_pair_contact(
    p1: &ParticleState,
    p2: &ParticleState,
    kind: PairKind,
    d: f64,
    geometry: &DomainGeometry,
) -> Result<Option<(f64, EventKind)>> {
    if !p1.r.is_finite() || !p1.v.is_finite() || !p2.r.is_finite() || !p2.v.is_finite() {
        return Err(Error::InvalidParam("non-finite particle state".into()));
    }
    let t0 = p1.sync_time.max(p2.sync_time);
    let w = geometry.displacement(p1.position_at(t0), p2.position_at(t0));
    let u = p1.v - p2.v;
    Ok(contact_root(w, u, d, kind).map(|s| {
        let ev = match kind {
            PairKind::External => EventKind::ExternalContact,
            PairKind::Tether => EventKind::TetherContact,
        };
        (t0 + s, ev)
    }))
}

/// Earliest wall collision for a particle in a specular box, as an absolute
/// time together with the wall id `2*axis + (1 if max side)`.
///
/// Periodic boxes have no walls; the event loop schedules cell-boundary
/// crossings instead. Returns `None` there.
pub fn predict_wall_event(
    p: &ParticleState,
    d: f64,
    geometry: &DomainGeometry,
) -> Option<(f64, u32)> {
    if geometry.kind != BoundaryKind::SpecularBox {
        return None;
    }
    let mut best: Option<(f64, u32)> = None;
    for k in 0..3 {
        let v = p.v[k];
        if v == 0.0 {
            continue;
        }
        let (plane, wall_id) = if v > 0.0 {
            (geometry.lengths[k] - d / 2.0, 2 * k as u32 + 1)
        } else {
            (d / 2.0, 2 * k as u32)
        };
        let s = (plane - p.r[k]) / v;
        if s > 0.0 && best.map_or(true, |(t, _)| p.sync_time + s < t) {
            best = Some((p.sync_time + s, wall_id));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::geometry::BoundaryKind;

    fn particle(r: Vec3, v: Vec3) -> ParticleState {
        ParticleState::new(0, r, v)
    }

    fn big_box() -> DomainGeometry {
        DomainGeometry::cube(BoundaryKind::SpecularBox, 1000.0).unwrap()
    }

    #[test]
    fn head_on_external_contact() {
        // relative position 2d along x, closing at speed 1 -> contact at t = d
        let d = 0.25;
        let p1 = particle(
            Vec3::new(500.0 + 2.0 * d, 500.0, 500.0),
            Vec3::new(-1.0, 0.0, 0.0),
        );
        let p2 = particle(Vec3::new(500.0, 500.0, 500.0), Vec3::ZERO);
        let (t, kind) = predict_pair_contact(&p1, &p2, PairKind::External, d, &big_box())
            .unwrap()
            .unwrap();
        assert!((t - d).abs() < 1e-14);
        assert_eq!(kind, EventKind::ExternalContact);
    }

    #[test]
    fn tether_separation_contact() {
        // relative position 0.5d, separating at speed 1 -> crossing at t = 0.5d
        let d = 0.25;
        let p1 = particle(
            Vec3::new(500.0 + 0.5 * d, 500.0, 500.0),
            Vec3::new(1.0, 0.0, 0.0),
        );
        let p2 = particle(Vec3::new(500.0, 500.0, 500.0), Vec3::ZERO);
        let (t, kind) = predict_pair_contact(&p1, &p2, PairKind::Tether, d, &big_box())
            .unwrap()
            .unwrap();
        assert!((t - 0.5 * d).abs() < 1e-14);
        assert_eq!(kind, EventKind::TetherContact);
    }

    #[test]
    fn geometric_miss_returns_none() {
        // closest approach 2d > d
        let d = 0.25;
        let p1 = particle(
            Vec3::new(500.0 + 2.0 * d, 500.0 + 2.0 * d, 500.0),
            Vec3::new(-1.0, 0.0, 0.0),
        );
        let p2 = particle(Vec3::new(500.0, 500.0, 500.0), Vec3::ZERO);
        assert!(
            predict_pair_contact(&p1, &p2, PairKind::External, d, &big_box())
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn non_finite_rejected() {
        let d = 0.25;
        let p1 = particle(Vec3::new(f64::NAN, 0.0, 0.0), Vec3::ZERO);
        let p2 = particle(Vec3::ZERO, Vec3::ZERO);
        assert!(predict_pair_contact(&p1, &p2, PairKind::External, d, &big_box()).is_err());
    }

    #[test]
    fn wall_hit_time_and_id() {
        // unit box, center x = 0.5, v_x = +1, d = 0.1 -> t = 0.45 at the max-x wall
        let g = DomainGeometry::cube(BoundaryKind::SpecularBox, 1.0).unwrap();
        let p = particle(Vec3::new(0.5, 0.5, 0.5), Vec3::new(1.0, 0.0, 0.0));
        let (t, wall) = predict_wall_event(&p, 0.1, &g).unwrap();
        assert!((t - 0.45).abs() < 1e-14);
        assert_eq!(wall, 1);
    }

    #[test]
    fn at_rest_never_hits_wall() {
        let g = DomainGeometry::cube(BoundaryKind::SpecularBox, 1.0).unwrap();
        let p = particle(Vec3::new(0.5, 0.5, 0.5), Vec3::ZERO);
        assert!(predict_wall_event(&p, 0.1, &g).is_none());
    }

    #[test]
    fn contact_already_at_wall_rejected() {
        // center exactly d/2 from the min-x wall, moving toward it: t = 0 is
        // rejected; moving away instead reports the opposite wall.
        let g = DomainGeometry::cube(BoundaryKind::SpecularBox, 1.0).unwrap();
        let d = 0.1;
        let toward = particle(Vec3::new(d / 2.0, 0.5, 0.5), Vec3::new(-1.0, 0.0, 0.0));
        assert!(predict_wall_event(&toward, d, &g).is_none());
        let away = particle(Vec3::new(d / 2.0, 0.5, 0.5), Vec3::new(1.0, 0.0, 0.0));
        let (t, wall) = predict_wall_event(&away, d, &g).unwrap();
        assert_eq!(wall, 1);
        assert!((t - 0.9).abs() < 1e-14);
    }

    #[test]
    fn periodic_contact_uses_minimum_image() {
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let d = 0.1;
        // particles near opposite faces, closing across the boundary
        let p1 = particle(Vec3::new(0.05, 0.5, 0.5), Vec3::new(-1.0, 0.0, 0.0));
        let p2 = particle(Vec3::new(0.85, 0.5, 0.5), Vec3::ZERO);
        let (t, _) = predict_pair_contact(&p1, &p2, PairKind::External, d, &g)
            .unwrap()
            .unwrap();
        // gap across the boundary is 0.2, contact when it shrinks to 0.1
        assert!((t - 0.1).abs() < 1e-14);
    }

    #[test]
    fn grazing_contact_discarded() {
        let d = 0.25;
        // passes at exactly distance d (tangent)
        let p1 = particle(
            Vec3::new(500.0 - 2.0, 500.0 + d, 500.0),
            Vec3::new(1.0, 0.0, 0.0),
        );
        let p2 = particle(Vec3::new(500.0, 500.0, 500.0), Vec3::ZERO);
        assert!(
            predict_pair_contact(&p1, &p2, PairKind::External, d, &big_box())
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn mixed_sync_times_extrapolate() {
        let d = 0.25;
        let mut p1 = particle(
            Vec3::new(500.0 + 3.0 * d, 500.0, 500.0),
            Vec3::new(-1.0, 0.0, 0.0),
        );
        p1.sync_time = 0.0;
        // p2 synced later; at t0 = d it will have drifted nowhere (at rest)
        let mut p2 = particle(Vec3::new(500.0, 500.0, 500.0), Vec3::ZERO);
        p2.sync_time = d;
        let (t, _) = predict_pair_contact(&p1, &p2, PairKind::External, d, &big_box())
            .unwrap()
            .unwrap();
        // p1 at t0=d sits at 2d separation, so contact at t0 + d = 2d
        assert!((t - 2.0 * d).abs() < 1e-14);
    }
}
