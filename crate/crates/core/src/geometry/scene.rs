//! Scene description, validation and construction of boundary surfaces.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Point2, Vec2};
use crate::error::{Error, Result};

/// Tolerance used when deciding whether two cavity walls touch.
const CONTACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn opposite(self) -> Side {
        match self {
            Side::Bottom => Side::Top,
            Side::Right => Side::Left,
            Side::Top => Side::Bottom,
            Side::Left => Side::Right,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Side::Bottom => 0,
            Side::Right => 1,
            Side::Top => 2,
            Side::Left => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpeningKind {
    /// Opening from a cavity to the exterior reservoir.
    #[serde(rename = "port", alias = "exterior-port")]
    Port,
    /// Zero-thickness gap in a wall shared by two cavities.
    #[serde(rename = "aperture", alias = "inter-cavity-aperture")]
    Aperture,
}

// ---------------------------------------------------------------------------
// JSON description
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub cavities: Vec<CavityConfig>,
    #[serde(default)]
    pub discs: Vec<DiscConfig>,
    #[serde(default)]
    pub openings: Vec<OpeningConfig>,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub id: String,
    pub origin: [f64; 2],
    pub side: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscConfig {
    pub cavity: String,
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallRef {
    pub cavity: String,
    pub side: Side,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpeningConfig {
    pub id: String,
    pub kind: OpeningKind,
    pub wall: WallRef,
    /// Distance of the opening centre from the start of the host wall.
    /// Bottom/top walls start at the cavity's left edge, left/right walls at its bottom edge.
    pub center_offset: f64,
    pub width: f64,
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "fig1a" => include_str!("../../presets/fig1a.json"),
            "fig1b" => include_str!("../../presets/fig1b.json"),
            "fig2" => include_str!("../../presets/fig2.json"),
            "fig3" => include_str!("../../presets/fig3.json"),
            other => {
                return Err(Error::validation(
                    "preset",
                    format!("unknown preset `{other}` (expected fig1a, fig1b, fig2 or fig3)"),
                ))
            }
        };
        let mut cfg = Self::from_json(text)?;
        cfg.name.get_or_insert_with(|| name.to_string());
        Ok(cfg)
    }
}

pub const PRESETS: [&str; 4] = ["fig1a", "fig1b", "fig2", "fig3"];

// ---------------------------------------------------------------------------
// Built scene
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Cavity {
    pub id: String,
    pub origin: Point2,
    pub side: f64,
}

impl Cavity {
    pub fn min(&self) -> Point2 {
        self.origin
    }

    pub fn max(&self) -> Point2 {
        Point2::new(self.origin.x + self.side, self.origin.y + self.side)
    }

    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        let hi = self.max();
        p.x >= self.origin.x - tol
            && p.x <= hi.x + tol
            && p.y >= self.origin.y - tol
            && p.y <= hi.y + tol
    }

    /// Start point, unit tangent (direction of increasing offset) and inward normal of a wall.
    pub fn wall_frame(&self, side: Side) -> (Point2, Vec2, Vec2) {
        let o = self.origin;
        let l = self.side;
        match side {
            Side::Bottom => (o, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)),
            Side::Right => (
                Point2::new(o.x + l, o.y),
                Vec2::new(0.0, 1.0),
                Vec2::new(-1.0, 0.0),
            ),
            Side::Top => (
                Point2::new(o.x, o.y + l),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, -1.0),
            ),
            Side::Left => (o, Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)),
        }
    }

    pub fn perimeter(&self) -> f64 {
        4.0 * self.side
    }
}

#[derive(Debug, Clone)]
pub struct Opening {
    pub id: String,
    pub kind: OpeningKind,
    pub width: f64,
    pub cavity: usize,
    pub side: Side,
    pub center_offset: f64,
    /// Cavity on the far side for apertures.
    pub far_cavity: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
    pub cavity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// One-sided segment; `normal` points into the owning cavity.
    Segment {
        start: Point2,
        end: Point2,
        tangent: Vec2,
        normal: Vec2,
    },
    /// Full disc boundary, arc parameter measured counter-clockwise from +x.
    Circle { center: Point2, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    Wall,
    Disc(usize),
    Opening(usize),
}

/// A maximal piece of boundary with uniform behaviour, seen from one cavity.
#[derive(Debug, Clone)]
pub struct Surface {
    pub shape: Shape,
    pub kind: SurfaceKind,
    pub cavity: usize,
    pub alpha: f64,
    /// For aperture pieces: the matching surface seen from the other cavity.
    pub twin: Option<usize>,
    pub length: f64,
}

impl Surface {
    pub fn point_at(&self, s: f64) -> Point2 {
        match self.shape {
            Shape::Segment { start, tangent, .. } => start + tangent * s,
            Shape::Circle { center, radius } => {
                let phi = s / radius;
                center + Vec2::new(phi.cos(), phi.sin()) * radius
            }
        }
    }

    /// Inward (into the cavity) normal at arc parameter `s`.
    pub fn normal_at(&self, s: f64) -> Vec2 {
        match self.shape {
            Shape::Segment { normal, .. } => normal,
            Shape::Circle { radius, .. } => {
                let phi = s / radius;
                Vec2::new(phi.cos(), phi.sin())
            }
        }
    }

    /// Unit tangent at `s`, oriented in the direction of increasing arc parameter.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        match self.shape {
            Shape::Segment { tangent, .. } => tangent,
            Shape::Circle { radius, .. } => {
                let phi = s / radius;
                Vec2::new(-phi.sin(), phi.cos())
            }
        }
    }

    pub fn is_reflecting(&self) -> bool {
        !matches!(self.kind, SurfaceKind::Opening(_))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub start: f64,
    pub end: f64,
    pub surface: usize,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub cavities: Vec<Cavity>,
    pub openings: Vec<Opening>,
    pub discs: Vec<Disc>,
    pub alpha: f64,
    pub surfaces: Vec<Surface>,
    /// `[cavity][side]` → wall pieces in increasing offset order.
    pub(crate) pieces: Vec<[Vec<Piece>; 4]>,
    /// `[cavity]` → surface ids of the discs in that cavity.
    pub(crate) cavity_discs: Vec<Vec<usize>>,
    config: SceneConfig,
}

fn finite(v: f64, entity: &str, field: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(entity, format!("{field} is not finite")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::validation(
            "alpha",
            format!("absorption factor {alpha} outside [0, 1]"),
        ));
    }
    Ok(())
}

impl Scene {
    pub fn build(config: &SceneConfig) -> Result<Scene> {
        finite(config.alpha, "alpha", "alpha")?;
        check_alpha(config.alpha)?;
        if config.cavities.is_empty() {
            return Err(Error::validation(
                "scene",
                "at least one cavity is required",
            ));
        }

        let mut cavities = Vec::with_capacity(config.cavities.len());
        for c in &config.cavities {
            let entity = format!("cavity `{}`", c.id);
            finite(c.origin[0], &entity, "origin")?;
            finite(c.origin[1], &entity, "origin")?;
            finite(c.side, &entity, "side")?;
            if c.side <= 0.0 {
                return Err(Error::validation(entity, "side must be positive"));
            }
            if cavities.iter().any(|k: &Cavity| k.id == c.id) {
                return Err(Error::validation(entity, "duplicate cavity id"));
            }
            cavities.push(Cavity {
                id: c.id.clone(),
                origin: Point2::new(c.origin[0], c.origin[1]),
                side: c.side,
            });
        }

        // Overlap and wall-sharing checks.
        let n = cavities.len();
        let mut neighbour: Vec<[Option<usize>; 4]> = vec![[None; 4]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let (ca, cb) = (&cavities[a], &cavities[b]);
                let (alo, ahi, blo, bhi) = (ca.min(), ca.max(), cb.min(), cb.max());
                let ox = ahi.x.min(bhi.x) - alo.x.max(blo.x);
                let oy = ahi.y.min(bhi.y) - alo.y.max(blo.y);
                if ox > CONTACT_TOL && oy > CONTACT_TOL {
                    return Err(Error::validation(
                        format!("cavity `{}`", cb.id),
                        format!("overlaps cavity `{}`", ca.id),
                    ));
                }
                let touching = (ox.abs() <= CONTACT_TOL && oy > CONTACT_TOL)
                    || (oy.abs() <= CONTACT_TOL && ox > CONTACT_TOL);
                if !touching {
                    continue;
                }
                let aligned = (ca.side - cb.side).abs() <= CONTACT_TOL
                    && if ox.abs() <= CONTACT_TOL {
                        (alo.y - blo.y).abs() <= CONTACT_TOL
                    } else {
                        (alo.x - blo.x).abs() <= CONTACT_TOL
                    };
                if !aligned {
                    return Err(Error::validation(
                        format!("cavity `{}`", cb.id),
                        format!(
                            "partially shares a wall with cavity `{}`; shared walls must coincide",
                            ca.id
                        ),
                    ));
                }
                let side_a = if ox.abs() <= CONTACT_TOL {
                    if (ahi.x - blo.x).abs() <= CONTACT_TOL {
                        Side::Right
                    } else {
                        Side::Left
                    }
                } else if (ahi.y - blo.y).abs() <= CONTACT_TOL {
                    Side::Top
                } else {
                    Side::Bottom
                };
                neighbour[a][side_a.index()] = Some(b);
                neighbour[b][side_a.opposite().index()] = Some(a);
            }
        }

        let cavity_index = |id: &str, entity: &str| -> Result<usize> {
            cavities
                .iter()
                .position(|c| c.id == id)
                .ok_or_else(|| Error::validation(entity, format!("unknown cavity `{id}`")))
        };

        // Openings. Apertures are mirrored onto the neighbouring cavity's wall.
        let mut openings = Vec::with_capacity(config.openings.len());
        for o in &config.openings {
            let entity = format!("opening `{}`", o.id);
            finite(o.width, &entity, "width")?;
            finite(o.center_offset, &entity, "center_offset")?;
            if openings.iter().any(|k: &Opening| k.id == o.id) {
                return Err(Error::validation(entity, "duplicate opening id"));
            }
            if o.width <= 0.0 {
                return Err(Error::validation(entity, "width must be positive"));
            }
            let cavity = cavity_index(&o.wall.cavity, &entity)?;
            let side_len = cavities[cavity].side;
            if o.width >= side_len {
                return Err(Error::validation(
                    entity,
                    format!(
                        "width {} does not fit in wall of length {}",
                        o.width, side_len
                    ),
                ));
            }
            let lo = o.center_offset - 0.5 * o.width;
            let hi = o.center_offset + 0.5 * o.width;
            if lo <= 0.0 || hi >= side_len {
                return Err(Error::validation(
                    entity,
                    format!(
                        "span [{lo}, {hi}] is not strictly inside its host wall [0, {side_len}]"
                    ),
                ));
            }
            let far = neighbour[cavity][o.wall.side.index()];
            match (o.kind, far) {
                (OpeningKind::Port, Some(b)) => {
                    return Err(Error::validation(
                        entity,
                        format!(
                            "port placed on wall shared with cavity `{}`",
                            cavities[b].id
                        ),
                    ))
                }
                (OpeningKind::Aperture, None) => {
                    return Err(Error::validation(
                        entity,
                        "aperture placed on an exterior wall",
                    ))
                }
                _ => {}
            }
            openings.push(Opening {
                id: o.id.clone(),
                kind: o.kind,
                width: o.width,
                cavity,
                side: o.wall.side,
                center_offset: o.center_offset,
                far_cavity: far,
            });
        }

        // Per (cavity, side): spans of openings, checked for overlap.
        let mut spans: Vec<[Vec<(f64, f64, usize)>; 4]> = vec![Default::default(); n];
        for (k, o) in openings.iter().enumerate() {
            let span = (
                o.center_offset - 0.5 * o.width,
                o.center_offset + 0.5 * o.width,
                k,
            );
            spans[o.cavity][o.side.index()].push(span);
            if let Some(b) = o.far_cavity {
                spans[b][o.side.opposite().index()].push(span);
            }
        }
        for c in 0..n {
            for s in 0..4 {
                let list = &mut spans[c][s];
                list.sort_by(|a, b| a.0.total_cmp(&b.0));
                for w in list.windows(2) {
                    if w[1].0 < w[0].1 {
                        return Err(Error::validation(
                            format!("opening `{}`", openings[w[1].2].id),
                            format!(
                                "overlaps opening `{}` on the same wall",
                                openings[w[0].2].id
                            ),
                        ));
                    }
                }
            }
        }

        // Discs.
        let mut discs: Vec<Disc> = Vec::with_capacity(config.discs.len());
        for (k, d) in config.discs.iter().enumerate() {
            let entity = format!("disc #{k}");
            finite(d.center[0], &entity, "center")?;
            finite(d.center[1], &entity, "center")?;
            finite(d.radius, &entity, "radius")?;
            if d.radius <= 0.0 {
                return Err(Error::validation(entity, "radius must be positive"));
            }
            let cavity = cavity_index(&d.cavity, &entity)?;
            let c = Point2::new(d.center[0], d.center[1]);
            let (lo, hi) = (cavities[cavity].min(), cavities[cavity].max());
            let clearance = (c.x - lo.x).min(hi.x - c.x).min(c.y - lo.y).min(hi.y - c.y);
            if clearance <= d.radius {
                return Err(Error::validation(
                    entity,
                    format!(
                        "radius {} does not fit strictly inside cavity `{}` (wall clearance {clearance})",
                        d.radius, cavities[cavity].id
                    ),
                ));
            }
            for (j, other) in discs.iter().enumerate() {
                if (other.center - c).norm() <= other.radius + d.radius {
                    return Err(Error::validation(entity, format!("overlaps disc #{j}")));
                }
            }
            discs.push(Disc {
                center: c,
                radius: d.radius,
                cavity,
            });
        }

        // Surfaces.
        let alpha = config.alpha;
        let mut surfaces = Vec::new();
        let mut pieces: Vec<[Vec<Piece>; 4]> = vec![Default::default(); n];
        let mut aperture_surface: Vec<Vec<(usize, usize)>> = vec![Vec::new(); openings.len()];
        for c in 0..n {
            for side in Side::ALL {
                let (start, tangent, normal) = cavities[c].wall_frame(side);
                let side_len = cavities[c].side;
                let mut cursor = 0.0;
                let mut push = |a: f64, b: f64, kind: SurfaceKind, surfaces: &mut Vec<Surface>| {
                    let id = surfaces.len();
                    surfaces.push(Surface {
                        shape: Shape::Segment {
                            start: start + tangent * a,
                            end: start + tangent * b,
                            tangent,
                            normal,
                        },
                        kind,
                        cavity: c,
                        alpha,
                        twin: None,
                        length: b - a,
                    });
                    pieces[c][side.index()].push(Piece {
                        start: a,
                        end: b,
                        surface: id,
                    });
                    id
                };
                for &(a, b, k) in &spans[c][side.index()] {
                    if a > cursor {
                        push(cursor, a, SurfaceKind::Wall, &mut surfaces);
                    }
                    let id = push(a, b, SurfaceKind::Opening(k), &mut surfaces);
                    if openings[k].kind == OpeningKind::Aperture {
                        aperture_surface[k].push((c, id));
                    }
                    cursor = b;
                }
                if cursor < side_len {
                    push(cursor, side_len, SurfaceKind::Wall, &mut surfaces);
                }
            }
        }
        for pair in &aperture_surface {
            if let [(_, a), (_, b)] = pair[..] {
                surfaces[a].twin = Some(b);
                surfaces[b].twin = Some(a);
            }
        }
        let mut cavity_discs = vec![Vec::new(); n];
        for (k, d) in discs.iter().enumerate() {
            cavity_discs[d.cavity].push(surfaces.len());
            surfaces.push(Surface {
                shape: Shape::Circle {
                    center: d.center,
                    radius: d.radius,
                },
                kind: SurfaceKind::Disc(k),
                cavity: d.cavity,
                alpha,
                twin: None,
                length: 2.0 * PI * d.radius,
            });
        }

        Ok(Scene {
            name: config.name.clone().unwrap_or_else(|| "custom".to_string()),
            cavities,
            openings,
            discs,
            alpha,
            surfaces,
            pieces,
            cavity_discs,
            config: config.clone(),
        })
    }

    pub fn preset(name: &str) -> Result<Scene> {
        Scene::build(&SceneConfig::preset(name)?)
    }

    /// Loads a preset by name, or a JSON scene description from a path.
    pub fn load(name_or_path: &str) -> Result<Scene> {
        if PRESETS.contains(&name_or_path) {
            Scene::preset(name_or_path)
        } else {
            Scene::build(&SceneConfig::from_path(name_or_path)?)
        }
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    /// Same geometry with a different uniform absorption factor.
    pub fn with_alpha(&self, alpha: f64) -> Result<Scene> {
        check_alpha(alpha)?;
        let mut scene = self.clone();
        scene.alpha = alpha;
        scene.config.alpha = alpha;
        for s in &mut scene.surfaces {
            s.alpha = alpha;
        }
        Ok(scene)
    }

    pub fn opening_index(&self, id: &str) -> Result<usize> {
        self.openings
            .iter()
            .position(|o| o.id == id)
            .ok_or_else(|| Error::UnknownOpening(id.to_string()))
    }

    pub fn cavity_index(&self, id: &str) -> Option<usize> {
        self.cavities.iter().position(|c| c.id == id)
    }

    /// Exterior ports in declaration order.
    pub fn ports(&self) -> impl Iterator<Item = (usize, &Opening)> {
        self.openings
            .iter()
            .enumerate()
            .filter(|(_, o)| o.kind == OpeningKind::Port)
    }

    /// Cavity containing `p` in its interior or on its boundary (within `tol`).
    /// Exact containment wins over containment within `tol`.
    pub fn locate(&self, p: &Point2, tol: f64) -> Option<usize> {
        self.cavities
            .iter()
            .position(|c| c.contains(p, 0.0))
            .or_else(|| self.cavities.iter().position(|c| c.contains(p, tol)))
    }

    /// Whether `p` lies strictly inside a cavity and outside every disc.
    pub fn is_interior(&self, p: &Point2) -> Option<usize> {
        let c = self.cavities.iter().position(|c| {
            let (lo, hi) = (c.min(), c.max());
            p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y
        })?;
        if self.discs.iter().any(|d| (p - d.center).norm() <= d.radius) {
            return None;
        }
        Some(c)
    }

    /// Axis-aligned bounding box of all cavities.
    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.cavities {
            lo.x = lo.x.min(c.min().x);
            lo.y = lo.y.min(c.min().y);
            hi.x = hi.x.max(c.max().x);
            hi.y = hi.y.max(c.max().y);
        }
        (lo, hi)
    }

    /// Surface id of the opening piece facing cavity `cavity`.
    pub fn opening_surface(&self, opening: usize, cavity: usize) -> Option<usize> {
        self.surfaces.iter().position(|s| {
            s.cavity == cavity && matches!(s.kind, SurfaceKind::Opening(k) if k == opening)
        })
    }

    /// Total boundary length seen from inside all cavities (walls, openings and disc rims).
    pub fn boundary_length(&self) -> f64 {
        self.cavities.iter().map(Cavity::perimeter).sum::<f64>()
            + self.discs.iter().map(|d| 2.0 * PI * d.radius).sum::<f64>()
    }
}
