//! Boundary discretisation into elements.

use super::scene::{OpeningKind, Scene, Shape, SurfaceKind};
use super::{Point2, Vec2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementShape {
    Segment {
        start: Point2,
        end: Point2,
    },
    /// Arc of a disc between polar angles `phi0 < phi1`.
    Arc {
        center: Point2,
        radius: f64,
        phi0: f64,
        phi1: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    /// Reflects specularly, absorbing a fraction `alpha` of the incident power.
    Reflecting { alpha: f64 },
    /// Exterior port: arriving power leaves the system.
    Port { opening: usize },
    /// Inter-cavity aperture piece; `twin` is the element on the far side.
    Aperture { opening: usize, twin: usize },
}

#[derive(Debug, Clone)]
pub struct BoundaryElement {
    pub id: usize,
    pub surface: usize,
    /// Parameter range `[s0, s1)` along the parent surface.
    pub s0: f64,
    pub s1: f64,
    pub arc_length: f64,
    /// Inward normal at the element midpoint.
    pub inward_normal: Vec2,
    pub cavity: usize,
    pub behavior: Behavior,
    pub shape: ElementShape,
}

impl BoundaryElement {
    pub fn opening(&self) -> Option<usize> {
        match self.behavior {
            Behavior::Port { opening } | Behavior::Aperture { opening, .. } => Some(opening),
            Behavior::Reflecting { .. } => None,
        }
    }

    pub fn is_port(&self) -> bool {
        matches!(self.behavior, Behavior::Port { .. })
    }
}

/// Elements of every surface in the scene, uniformly subdivided per surface.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub elements: Vec<BoundaryElement>,
    pub target_length: f64,
    surface_first: Vec<usize>,
    surface_count: Vec<usize>,
}

impl Mesh {
    /// Element containing arc parameter `param` of `surface`.
    pub fn element_at(&self, surface: usize, param: f64) -> usize {
        let first = self.surface_first[surface];
        let count = self.surface_count[surface];
        let h = (self.elements[first].s1 - self.elements[first].s0).max(f64::MIN_POSITIVE);
        let k = ((param / h).floor().max(0.0) as usize).min(count - 1);
        first + k
    }

    pub fn surface_elements(&self, surface: usize) -> std::ops::Range<usize> {
        let first = self.surface_first[surface];
        first..first + self.surface_count[surface]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.elements.iter().map(|e| e.arc_length).sum()
    }
}

/// Splits every boundary surface into equal elements no longer than `target_length`.
///
/// Wall pieces and openings are subdivided separately, so each opening is tiled by whole
/// elements. Walls shared by two cavities carry one element set per side.
pub fn discretize(scene: &Scene, target_length: f64) -> Result<Mesh> {
    if !(target_length > 0.0 && target_length.is_finite()) {
        return Err(Error::validation(
            "target_length",
            "must be positive and finite",
        ));
    }
    if let Some(o) = scene
        .openings
        .iter()
        .filter(|o| target_length > o.width)
        .min_by(|a, b| a.width.total_cmp(&b.width))
    {
        return Err(Error::validation(
            "target_length",
            format!(
                "{target_length} exceeds the width {} of opening `{}`; every opening needs a dedicated element",
                o.width, o.id
            ),
        ));
    }

    let mut elements = Vec::new();
    let mut surface_first = Vec::with_capacity(scene.surfaces.len());
    let mut surface_count = Vec::with_capacity(scene.surfaces.len());
    for (sid, surface) in scene.surfaces.iter().enumerate() {
        let count = ((surface.length / target_length) * (1.0 - 1e-12))
            .ceil()
            .max(1.0) as usize;
        let h = surface.length / count as f64;
        surface_first.push(elements.len());
        surface_count.push(count);
        for k in 0..count {
            let s0 = k as f64 * h;
            let s1 = if k + 1 == count {
                surface.length
            } else {
                (k + 1) as f64 * h
            };
            let shape = match surface.shape {
                Shape::Segment { .. } => ElementShape::Segment {
                    start: surface.point_at(s0),
                    end: surface.point_at(s1),
                },
                Shape::Circle { center, radius } => ElementShape::Arc {
                    center,
                    radius,
                    phi0: s0 / radius,
                    phi1: s1 / radius,
                },
            };
            let behavior = match surface.kind {
                SurfaceKind::Wall | SurfaceKind::Disc(_) => Behavior::Reflecting {
                    alpha: surface.alpha,
                },
                SurfaceKind::Opening(o) => match scene.openings[o].kind {
                    OpeningKind::Port => Behavior::Port { opening: o },
                    // Twin ids are patched once every surface has been split.
                    OpeningKind::Aperture => Behavior::Aperture {
                        opening: o,
                        twin: usize::MAX,
                    },
                },
            };
            elements.push(BoundaryElement {
                id: elements.len(),
                surface: sid,
                s0,
                s1,
                arc_length: s1 - s0,
                inward_normal: surface.normal_at(0.5 * (s0 + s1)),
                cavity: surface.cavity,
                behavior,
                shape,
            });
        }
    }

    for e in 0..elements.len() {
        if let Behavior::Aperture { opening, .. } = elements[e].behavior {
            let sid = elements[e].surface;
            let twin_surface = scene.surfaces[sid]
                .twin
                .ok_or_else(|| Error::Geometry(format!("aperture surface {sid} has no twin")))?;
            let k = e - surface_first[sid];
            if surface_count[twin_surface] != surface_count[sid] {
                return Err(Error::Geometry("aperture sides split differently".into()));
            }
            elements[e].behavior = Behavior::Aperture {
                opening,
                twin: surface_first[twin_surface] + k,
            };
        }
    }

    Ok(Mesh {
        elements,
        target_length,
        surface_first,
        surface_count,
    })
}
