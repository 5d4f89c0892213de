//! Forward Monte-Carlo ray transport with per-reflection absorption.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{first_hit, OpeningKind, Point2, Scene, SurfaceKind, Vec2, TABLE1_SOURCES};
use crate::grid::DensityGrid;
use crate::sum::NeumaierSum;

/// Rays launched per chunk; fixed so that reductions do not depend on the thread count.
const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct RtConfig {
    pub n_rays: usize,
    pub max_bounces: usize,
    /// Rays whose energy falls below this fraction of their launch energy stop.
    pub energy_cutoff: f64,
    pub rng_seed: u64,
    /// Cells per unit length of the optional energy-density tally.
    pub grid_resolution: Option<usize>,
}

impl Default for RtConfig {
    fn default() -> Self {
        RtConfig {
            n_rays: 8002,
            max_bounces: 10_000,
            energy_cutoff: 1e-12,
            rng_seed: 1,
            grid_resolution: None,
        }
    }
}

impl RtConfig {
    fn validate(&self) -> Result<()> {
        if self.n_rays == 0 {
            return Err(Error::validation("rt config", "n_rays must be at least 1"));
        }
        if self.max_bounces == 0 {
            return Err(Error::validation(
                "rt config",
                "max_bounces must be at least 1",
            ));
        }
        if !(0.0..1.0).contains(&self.energy_cutoff) {
            return Err(Error::validation(
                "rt config",
                "energy_cutoff must lie in [0, 1)",
            ));
        }
        Ok(())
    }
}

/// Unit-power source.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Parallel rays entering along the inward normal of an exterior port.
    PortNormal(String),
    /// Isotropic emitter inside a cavity.
    Point(Point2),
}

impl Source {
    /// Point source `n` (1-based) of the standard source table.
    pub fn table1(n: usize) -> Result<Source> {
        let (x, y) = *TABLE1_SOURCES.get(n.wrapping_sub(1)).ok_or_else(|| {
            Error::InvalidSource(format!("table1 source #{n} does not exist (1..=7)"))
        })?;
        Ok(Source::Point(Point2::new(x, y)))
    }

    /// Checks placement and returns the cavity the source injects into.
    pub fn validate(&self, scene: &Scene) -> Result<usize> {
        match self {
            Source::PortNormal(id) => {
                let k = scene.opening_index(id)?;
                let o = &scene.openings[k];
                if o.kind != OpeningKind::Port {
                    return Err(Error::InvalidSource(format!(
                        "opening `{id}` is not an exterior port"
                    )));
                }
                Ok(o.cavity)
            }
            Source::Point(p) => scene.is_interior(p).ok_or_else(|| {
                Error::InvalidSource(format!(
                    "point ({}, {}) is not strictly inside a cavity and outside every disc",
                    p.x, p.y
                ))
            }),
        }
    }

    /// Launch point and direction of ray `k` of `n`, with `u` in `[0, 1)` the jitter inside
    /// its stratum.
    pub fn launch(&self, scene: &Scene, k: usize, n: usize, u: f64) -> Result<(Point2, Vec2)> {
        let frac = (k as f64 + u) / n as f64;
        match self {
            Source::PortNormal(id) => {
                let opening = scene.opening_index(id)?;
                let sid = scene
                    .opening_surface(opening, scene.openings[opening].cavity)
                    .ok_or_else(|| Error::Geometry(format!("port `{id}` has no surface")))?;
                let s = &scene.surfaces[sid];
                Ok((s.point_at(frac * s.length), s.normal_at(0.0)))
            }
            Source::Point(p) => {
                let theta = std::f64::consts::TAU * frac;
                Ok((*p, Vec2::new(theta.cos(), theta.sin())))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayEnd {
    Exited {
        opening: usize,
    },
    /// Energy dropped below the cutoff.
    Depleted,
    /// Bounce cap reached.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayOutcome {
    pub end: RayEnd,
    pub bounces: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEvent {
    pub surface: usize,
    pub point: Point2,
}

/// Per-ray energy bookkeeping, indexed like the scene's openings and cavities.
#[derive(Debug, Clone)]
pub struct RayTally {
    pub port: Vec<f64>,
    pub wall: Vec<f64>,
    /// Energy carried across each aperture (both directions).
    pub crossing: Vec<f64>,
    pub residual: f64,
    pub path: Option<Vec<PathEvent>>,
}

impl RayTally {
    pub fn new(scene: &Scene) -> Self {
        RayTally {
            port: vec![0.0; scene.openings.len()],
            wall: vec![0.0; scene.cavities.len()],
            crossing: vec![0.0; scene.openings.len()],
            residual: 0.0,
            path: None,
        }
    }

    pub fn recording(scene: &Scene) -> Self {
        RayTally {
            path: Some(Vec::new()),
            ..RayTally::new(scene)
        }
    }
}

/// Follows one unit-energy ray until it leaves through a port, runs out of energy or hits
/// the bounce cap.
pub fn trace_one(
    scene: &Scene,
    origin: Point2,
    direction: Vec2,
    rt: &RtConfig,
    tally: &mut RayTally,
    mut grid: Option<&mut DensityGrid>,
) -> Result<RayOutcome> {
    let mut energy = 1.0;
    let mut bounces = 0;
    let mut pos = origin;
    let mut dir = direction;
    loop {
        let hit = first_hit(scene, &pos, &dir)?;
        if let Some(g) = grid.as_deref_mut() {
            g.deposit_segment(&pos, &hit.point, energy);
        }
        if let Some(path) = tally.path.as_mut() {
            path.push(PathEvent {
                surface: hit.surface,
                point: hit.point,
            });
        }
        let surface = &scene.surfaces[hit.surface];
        match surface.kind {
            SurfaceKind::Opening(k) if scene.openings[k].kind == OpeningKind::Port => {
                tally.port[k] += energy;
                return Ok(RayOutcome {
                    end: RayEnd::Exited { opening: k },
                    bounces,
                    energy,
                });
            }
            SurfaceKind::Opening(k) => {
                tally.crossing[k] += energy;
                pos = hit.point;
            }
            SurfaceKind::Wall | SurfaceKind::Disc(_) => {
                let kept = (1.0 - surface.alpha) * energy;
                tally.wall[surface.cavity] += energy - kept;
                energy = kept;
                bounces += 1;
                pos = hit.point;
                dir = hit.outgoing;
                if energy < rt.energy_cutoff || bounces >= rt.max_bounces {
                    tally.residual += energy;
                    let end = if energy < rt.energy_cutoff {
                        RayEnd::Depleted
                    } else {
                        RayEnd::Truncated
                    };
                    return Ok(RayOutcome {
                        end,
                        bounces,
                        energy,
                    });
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    /// Exit power per exterior port, in scene order.
    pub p_port: Vec<(String, f64)>,
    /// Wall and scatterer absorption per cavity.
    pub p_wall: Vec<(String, f64)>,
    /// Power carried across each aperture, counting every crossing.
    pub p_aperture: Vec<(String, f64)>,
    /// Energy left in rays stopped by the bounce cap or energy cutoff.
    pub p_residual: f64,
    /// `|1 - (ports + walls + residual)|`.
    pub defect: f64,
    pub n_rays: usize,
}

impl PowerReport {
    pub fn port(&self, id: &str) -> Option<f64> {
        self.p_port.iter().find(|p| p.0 == id).map(|p| p.1)
    }

    pub fn aperture(&self, id: &str) -> Option<f64> {
        self.p_aperture.iter().find(|p| p.0 == id).map(|p| p.1)
    }

    pub fn wall_total(&self) -> f64 {
        self.p_wall.iter().map(|w| w.1).sum()
    }

    pub fn port_total(&self) -> f64 {
        self.p_port.iter().map(|p| p.1).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub report: PowerReport,
    pub density: Option<DensityGrid>,
}

/// Per-ray seed stream: ray `k` always draws from stream `k` of the configured seed.
fn ray_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

pub fn simulate(scene: &Scene, source: &Source, rt: &RtConfig) -> Result<Simulation> {
    rt.validate()?;
    source.validate(scene)?;
    let n = rt.n_rays;
    let template = rt.grid_resolution.map(|r| DensityGrid::for_scene(scene, r));

    let chunks: Vec<(Vec<RayTally>, Option<DensityGrid>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<_> {
            let mut grid = template.as_ref().map(DensityGrid::empty_like);
            let mut tallies = Vec::with_capacity(CHUNK);
            for k in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
                let u: f64 = ray_rng(rt.rng_seed, k).random();
                let (origin, dir) = source.launch(scene, k, n, u)?;
                let mut tally = RayTally::new(scene);
                trace_one(scene, origin, dir, rt, &mut tally, grid.as_mut())?;
                tallies.push(tally);
            }
            Ok((tallies, grid))
        })
        .collect::<Result<_>>()?;

    let mut port = vec![NeumaierSum::default(); scene.openings.len()];
    let mut crossing = vec![NeumaierSum::default(); scene.openings.len()];
    let mut wall = vec![NeumaierSum::default(); scene.cavities.len()];
    let mut residual = NeumaierSum::default();
    let mut density = template.as_ref().map(DensityGrid::empty_like);
    for (tallies, grid) in &chunks {
        for t in tallies {
            for (acc, v) in port.iter_mut().zip(&t.port) {
                acc.add(*v);
            }
            for (acc, v) in crossing.iter_mut().zip(&t.crossing) {
                acc.add(*v);
            }
            for (acc, v) in wall.iter_mut().zip(&t.wall) {
                acc.add(*v);
            }
            residual.add(t.residual);
        }
        if let (Some(total), Some(g)) = (density.as_mut(), grid) {
            total.add(g);
        }
    }

    let scale = 1.0 / n as f64;
    let p_port: Vec<(String, f64)> = scene
        .ports()
        .map(|(k, o)| (o.id.clone(), port[k].value() * scale))
        .collect();
    let p_aperture = scene
        .openings
        .iter()
        .enumerate()
        .filter(|(_, o)| o.kind == OpeningKind::Aperture)
        .map(|(k, o)| (o.id.clone(), crossing[k].value() * scale))
        .collect();
    let p_wall: Vec<(String, f64)> = scene
        .cavities
        .iter()
        .zip(&wall)
        .map(|(c, w)| (c.id.clone(), w.value() * scale))
        .collect();
    let p_residual = residual.value() * scale;

    let mut total = NeumaierSum::default();
    for v in port.iter().chain(&wall) {
        total.add(v.value());
    }
    total.add(residual.value());
    let defect = (1.0 - total.value() * scale).abs();

    if let Some(g) = density.as_mut() {
        g.scale(scale);
    }
    Ok(Simulation {
        report: PowerReport {
            p_port,
            p_wall,
            p_aperture,
            p_residual,
            defect,
            n_rays: n,
        },
        density,
    })
}
