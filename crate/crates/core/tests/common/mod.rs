//! Brute-force scene intersector built straight from a scene description.
//!
//! It knows nothing about wall pieces, cavity lookup or slab tests: every cavity wall is a
//! full segment, every disc a circle, and the nearest positive root wins.

#![allow(dead_code)]

use cavityflux::geometry::{OpeningKind, Point2, SceneConfig, Side, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Wall,
    Disc(usize),
    Port(String),
    Aperture(String),
}

#[derive(Debug, Clone)]
pub struct OracleHit {
    pub t: f64,
    pub point: Point2,
    /// Unit normal facing the incoming ray.
    pub normal: Vec2,
    pub kind: Kind,
    /// Distance of the hit point from the nearest opening edge on its wall.
    pub edge_distance: f64,
}

struct Segment {
    a: Point2,
    b: Point2,
}

struct Span {
    a: Point2,
    b: Point2,
    id: String,
    kind: OpeningKind,
}

pub struct Oracle {
    segments: Vec<Segment>,
    discs: Vec<(Point2, f64)>,
    spans: Vec<Span>,
}

fn wall_endpoints(origin: [f64; 2], side: f64, which: Side) -> (Point2, Point2) {
    let (x0, y0) = (origin[0], origin[1]);
    let (x1, y1) = (x0 + side, y0 + side);
    match which {
        Side::Bottom => (Point2::new(x0, y0), Point2::new(x1, y0)),
        Side::Top => (Point2::new(x0, y1), Point2::new(x1, y1)),
        Side::Left => (Point2::new(x0, y0), Point2::new(x0, y1)),
        Side::Right => (Point2::new(x1, y0), Point2::new(x1, y1)),
    }
}

impl Oracle {
    pub fn new(config: &SceneConfig) -> Oracle {
        let mut segments = Vec::new();
        for c in &config.cavities {
            for side in [Side::Bottom, Side::Right, Side::Top, Side::Left] {
                let (a, b) = wall_endpoints(c.origin, c.side, side);
                segments.push(Segment { a, b });
            }
        }
        let discs = config
            .discs
            .iter()
            .map(|d| (Point2::new(d.center[0], d.center[1]), d.radius))
            .collect();
        let spans = config
            .openings
            .iter()
            .map(|o| {
                let c = config
                    .cavities
                    .iter()
                    .find(|c| c.id == o.wall.cavity)
                    .unwrap();
                let (a, b) = wall_endpoints(c.origin, c.side, o.wall.side);
                let t = (b - a).normalize();
                Span {
                    a: a + t * (o.center_offset - 0.5 * o.width),
                    b: a + t * (o.center_offset + 0.5 * o.width),
                    id: o.id.clone(),
                    kind: o.kind,
                }
            })
            .collect();
        Oracle {
            segments,
            discs,
            spans,
        }
    }

    pub fn nearest(&self, origin: &Point2, dir: &Vec2) -> Option<OracleHit> {
        let mut best: Option<OracleHit> = None;
        let mut consider = |t: f64, normal: Vec2, kind: Kind| {
            if t > 1e-9 && best.as_ref().is_none_or(|b| t < b.t) {
                best = Some(OracleHit {
                    t,
                    point: origin + dir * t,
                    normal,
                    kind,
                    edge_distance: f64::INFINITY,
                });
            }
        };
        for s in &self.segments {
            // origin + t dir = a + u (b - a)
            let e = s.b - s.a;
            let det = dir.x * (-e.y) - dir.y * (-e.x);
            if det.abs() < 1e-15 {
                continue;
            }
            let r = s.a - origin;
            let t = (r.x * (-e.y) - r.y * (-e.x)) / det;
            let u = (dir.x * r.y - dir.y * r.x) / det;
            if (0.0..=1.0).contains(&u) {
                let mut n = Vec2::new(-e.y, e.x).normalize();
                if n.dot(dir) > 0.0 {
                    n = -n;
                }
                consider(t, n, Kind::Wall);
            }
        }
        for (k, (c, r)) in self.discs.iter().enumerate() {
            let oc = origin - c;
            let b = dir.dot(&oc);
            let disc = b * b - (oc.norm_squared() - r * r);
            if disc > 1e-12 {
                let t = -b - disc.sqrt();
                let p = origin + dir * t;
                consider(t, (p - c) / *r, Kind::Disc(k));
            }
        }
        let mut hit = best?;
        if hit.kind == Kind::Wall {
            for span in &self.spans {
                let e = span.b - span.a;
                let len = e.norm();
                let rel = hit.point - span.a;
                let along = rel.dot(&e) / len;
                let off = (rel - e * (along / len)).norm();
                if off > 1e-9 {
                    continue;
                }
                let edge = along.abs().min((along - len).abs());
                hit.edge_distance = hit.edge_distance.min(edge);
                if along > 0.0 && along < len {
                    hit.kind = match span.kind {
                        OpeningKind::Port => Kind::Port(span.id.clone()),
                        OpeningKind::Aperture => Kind::Aperture(span.id.clone()),
                    };
                }
            }
        }
        Some(hit)
    }
}

pub fn reflect(d: &Vec2, n: &Vec2) -> Vec2 {
    d - n * (2.0 * d.dot(n))
}

/// Uniform point strictly inside the scene and outside every disc.
pub fn interior_point<R: rand::Rng>(scene: &cavityflux::geometry::Scene, rng: &mut R) -> Point2 {
    let (lo, hi) = scene.bounds();
    loop {
        let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if scene.is_interior(&p).is_some() {
            return p;
        }
    }
}

pub fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}
