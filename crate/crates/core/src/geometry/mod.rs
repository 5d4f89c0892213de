//! Scenes of axis-aligned square cavities with circular scatterers and openings.

mod intersect;
mod mesh;
mod scene;

pub use intersect::{first_hit, ray_circle, reflect, Hit, RAY_EPS, TANGENT_EPS};
pub use mesh::{discretize, Behavior, BoundaryElement, ElementShape, Mesh};
pub use scene::{
    Cavity, CavityConfig, Disc, DiscConfig, Opening, OpeningConfig, OpeningKind, Scene,
    SceneConfig, Shape, Side, Surface, SurfaceKind, WallRef, PRESETS,
};

use std::f64::consts::PI;

pub type Point2 = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// Point-source locations used for the source-position sweeps.
pub const TABLE1_SOURCES: [(f64, f64); 7] = [
    (0.1, 0.9),
    (0.9, 0.1),
    (0.5, 0.4),
    (0.4, 0.1),
    (0.25, 0.2),
    (0.9, 0.9),
    (0.1, 0.5),
];

/// Lengths that enter the power balance of one cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityDimensions {
    pub cavity: String,
    /// Wall perimeter plus the circumference of every disc in the cavity.
    pub perimeter: f64,
    /// `(opening id, width)` of each exterior port on this cavity.
    pub ports: Vec<(String, f64)>,
    /// `(opening id, width, far cavity index)` of each aperture on this cavity.
    pub apertures: Vec<(String, f64, usize)>,
}

impl CavityDimensions {
    pub fn opening_width(&self) -> f64 {
        self.ports.iter().map(|p| p.1).sum::<f64>()
            + self.apertures.iter().map(|a| a.1).sum::<f64>()
    }
}

pub fn pwb_dimensions(scene: &Scene) -> Vec<CavityDimensions> {
    scene
        .cavities
        .iter()
        .enumerate()
        .map(|(c, cavity)| {
            let discs: f64 = scene
                .discs
                .iter()
                .filter(|d| d.cavity == c)
                .map(|d| 2.0 * PI * d.radius)
                .sum();
            let mut ports = Vec::new();
            let mut apertures = Vec::new();
            for o in &scene.openings {
                match o.kind {
                    OpeningKind::Port if o.cavity == c => ports.push((o.id.clone(), o.width)),
                    OpeningKind::Aperture if o.cavity == c => {
                        apertures.push((o.id.clone(), o.width, o.far_cavity.unwrap_or(c)))
                    }
                    OpeningKind::Aperture if o.far_cavity == Some(c) => {
                        apertures.push((o.id.clone(), o.width, o.cavity))
                    }
                    _ => {}
                }
            }
            CavityDimensions {
                cavity: cavity.id.clone(),
                perimeter: cavity.perimeter() + discs,
                ports,
                apertures,
            }
        })
        .collect()
}
