//! First-intersection queries against a scene.

use super::scene::{Scene, Shape, Side};
use super::{Point2, Vec2};
use crate::error::{Error, Result};

/// Self-intersection threshold: hits closer than this to the ray origin are ignored,
/// which is equivalent to nudging the origin along the ray before querying.
pub const RAY_EPS: f64 = 1e-9;

/// Discriminants at or below this value are tangent grazes and count as misses.
pub const TANGENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub surface: usize,
    /// Arc-length parameter of the hit point along the surface.
    pub param: f64,
    pub point: Point2,
    pub distance: f64,
    /// Unit normal of the hit surface, pointing into the cavity the ray travels in.
    pub normal: Vec2,
    /// Incoming direction mirrored about `normal`.
    pub outgoing: Vec2,
}

pub fn reflect(direction: &Vec2, normal: &Vec2) -> Vec2 {
    direction - normal * (2.0 * direction.dot(normal))
}

/// Nearest positive intersection of a ray with a circle, ignoring grazes.
pub fn ray_circle(origin: &Point2, dir: &Vec2, center: &Point2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = dir.dot(&oc);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc <= TANGENT_EPS {
        return None;
    }
    let sq = disc.sqrt();
    // Only the entry root counts: rays never travel inside a disc.
    let t0 = -b - sq;
    (t0 > RAY_EPS).then_some(t0)
}

/// Finds the first boundary surface hit by the ray `origin + t * direction`, `t > RAY_EPS`.
///
/// The owning cavity is found from a point just ahead of the origin; the cavity exit is
/// computed with a slab test and matched to the wall piece it falls on, then the discs of
/// that cavity are tested for a closer hit.
pub fn first_hit(scene: &Scene, origin: &Point2, direction: &Vec2) -> Result<Hit> {
    let probe = origin + direction * RAY_EPS;
    let cavity_idx = scene.locate(&probe, RAY_EPS).ok_or_else(|| {
        Error::Geometry(format!(
            "ray origin ({}, {}) is outside every cavity",
            origin.x, origin.y
        ))
    })?;
    let cavity = &scene.cavities[cavity_idx];
    let (lo, hi) = (cavity.min(), cavity.max());

    let slab = |o: f64, d: f64, lo: f64, hi: f64| -> f64 {
        if d > 0.0 {
            (hi - o) / d
        } else if d < 0.0 {
            (lo - o) / d
        } else {
            f64::INFINITY
        }
    };
    let tx = slab(origin.x, direction.x, lo.x, hi.x);
    let ty = slab(origin.y, direction.y, lo.y, hi.y);
    let (t_wall, side) = if tx <= ty {
        (
            tx,
            if direction.x > 0.0 {
                Side::Right
            } else {
                Side::Left
            },
        )
    } else {
        (
            ty,
            if direction.y > 0.0 {
                Side::Top
            } else {
                Side::Bottom
            },
        )
    };
    if !t_wall.is_finite() {
        return Err(Error::Geometry("degenerate ray direction".into()));
    }
    let t_wall = t_wall.max(0.0);

    let mut best: Option<(f64, usize)> = None;
    for &sid in &scene.cavity_discs[cavity_idx] {
        if let Shape::Circle { center, radius } = scene.surfaces[sid].shape {
            if let Some(t) = ray_circle(origin, direction, &center, radius) {
                if t < t_wall && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, sid));
                }
            }
        }
    }

    if let Some((t, sid)) = best {
        let surface = &scene.surfaces[sid];
        let Shape::Circle { center, radius } = surface.shape else {
            unreachable!()
        };
        let point = origin + direction * t;
        let normal = (point - center) / radius;
        let normal = normal.normalize();
        let mut phi = normal.y.atan2(normal.x);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        let param = (phi * radius).min(surface.length);
        return Ok(Hit {
            surface: sid,
            param,
            point,
            distance: t,
            normal,
            outgoing: reflect(direction, &normal),
        });
    }

    // Wall exit: snap onto the wall and look up the piece.
    let mut point = origin + direction * t_wall;
    match side {
        Side::Left => point.x = lo.x,
        Side::Right => point.x = hi.x,
        Side::Bottom => point.y = lo.y,
        Side::Top => point.y = hi.y,
    }
    point.x = point.x.clamp(lo.x, hi.x);
    point.y = point.y.clamp(lo.y, hi.y);
    let offset = match side {
        Side::Bottom | Side::Top => point.x - lo.x,
        Side::Left | Side::Right => point.y - lo.y,
    };
    let pieces = &scene.pieces[cavity_idx][side.index()];
    let piece = pieces
        .iter()
        .find(|p| offset <= p.end)
        .or(pieces.last())
        .ok_or_else(|| Error::Geometry(format!("cavity `{}` has no wall pieces", cavity.id)))?;
    let surface = &scene.surfaces[piece.surface];
    let Shape::Segment { normal, .. } = surface.shape else {
        return Err(Error::Geometry("wall piece is not a segment".into()));
    };
    if t_wall <= 0.0 && direction.dot(&normal) >= 0.0 {
        return Err(Error::Geometry(format!(
            "ray at ({}, {}) does not reach any boundary",
            origin.x, origin.y
        )));
    }
    Ok(Hit {
        surface: piece.surface,
        param: (offset - piece.start).clamp(0.0, surface.length),
        point,
        distance: t_wall,
        normal,
        outgoing: reflect(direction, &normal),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::scene::{CavityConfig, DiscConfig, SceneConfig};

    fn unit_square(discs: Vec<DiscConfig>) -> Scene {
        Scene::build(&SceneConfig {
            name: None,
            cavities: vec![CavityConfig {
                id: "C1".into(),
                origin: [0.0, 0.0],
                side: 1.0,
            }],
            discs,
            openings: vec![],
            alpha: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn axis_aligned_hit_on_top_wall() {
        let scene = unit_square(vec![]);
        let hit = first_hit(&scene, &Point2::new(0.5, 0.5), &Vec2::new(0.0, 1.0)).unwrap();
        assert_eq!(hit.point, Point2::new(0.5, 1.0));
        assert!((hit.distance - 0.5).abs() < 1e-15);
        assert_eq!(hit.outgoing, Vec2::new(0.0, -1.0));
    }

    #[test]
    fn head_on_disc_hit() {
        let scene = unit_square(vec![DiscConfig {
            cavity: "C1".into(),
            center: [0.5, 0.2],
            radius: 0.1,
        }]);
        let hit = first_hit(&scene, &Point2::new(0.5, 0.5), &Vec2::new(0.0, -1.0)).unwrap();
        assert!((hit.point - Point2::new(0.5, 0.3)).norm() < 1e-14);
        assert!((hit.distance - 0.2).abs() < 1e-14);
        assert!((hit.outgoing - Vec2::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn tangent_graze_is_a_miss() {
        let scene = unit_square(vec![DiscConfig {
            cavity: "C1".into(),
            center: [0.5, 0.5],
            radius: 0.1,
        }]);
        let hit = first_hit(&scene, &Point2::new(0.1, 0.6), &Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(hit.point, Point2::new(1.0, 0.6));
    }

    #[test]
    fn leaving_a_disc_does_not_self_intersect() {
        let scene = unit_square(vec![DiscConfig {
            cavity: "C1".into(),
            center: [0.5, 0.5],
            radius: 0.1,
        }]);
        let hit = first_hit(&scene, &Point2::new(0.5, 0.6), &Vec2::new(0.0, 1.0)).unwrap();
        assert!((hit.distance - 0.4).abs() < 1e-14);
    }

    #[test]
    fn origin_outside_every_cavity_is_an_error() {
        let scene = unit_square(vec![]);
        let err = first_hit(&scene, &Point2::new(2.0, 2.0), &Vec2::new(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }
}
