//! Interior reconstructions of boundary densities on a regular grid.

use rayon::prelude::*;

use super::basis::PhaseSpaceBasis;
use super::operator::{arrival_cell, arrival_factor, cell_rays, Quadrature};
use super::{AdjointDensity, PhaseSpaceDensity};
use crate::error::Result;
use crate::geometry::{first_hit, Point2, Scene, Vec2};
use crate::grid::DensityGrid;
use crate::raytrace::Source;

const CELLS_PER_TASK: usize = 512;

/// What a grid value means.
#[derive(Debug, Clone, Copy)]
pub enum MapInput<'a> {
    /// Stationary energy density: every outgoing cell deposits its power along its chords.
    Flux(&'a PhaseSpaceDensity),
    /// Power reaching the opening from a unit isotropic emitter at each grid point: the
    /// direction average of the arrival-side adjoint value along every chord.
    Adjoint(&'a AdjointDensity),
}

/// Grid reconstruction of a boundary density.
///
/// Each cell launches its quadrature rays (port cells only for adjoint input); a chord deposits
/// `weight × chord length in grid cell / grid cell area`. For flux input the weight is the
/// cell power; for adjoint input it is the arrival value weighted by the cell's phase-space
/// measure over `2π`, so that a uniform adjoint maps to a uniform grid of the same value.
pub fn spatial_map(
    scene: &Scene,
    basis: &PhaseSpaceBasis,
    input: MapInput<'_>,
    resolution: usize,
    quad: Quadrature,
) -> Result<DensityGrid> {
    let template = DensityGrid::for_scene(scene, resolution);
    let dim = basis.dim();
    let w = 1.0 / quad.samples() as f64;
    let parts: Vec<DensityGrid> = (0..dim.div_ceil(CELLS_PER_TASK))
        .into_par_iter()
        .map(|task| -> Result<DensityGrid> {
            let mut grid = template.empty_like();
            for cell in (task * CELLS_PER_TASK)..((task + 1) * CELLS_PER_TASK).min(dim) {
                // Ports emit no flux, but their chords still carry the view of the interior
                // that a point near the port has when looking back at it.
                if let MapInput::Flux(rho) = input {
                    if !basis.emits(basis.element_of(cell)) || rho.values[cell] == 0.0 {
                        continue;
                    }
                }
                for (origin, dir) in cell_rays(basis, scene, cell, quad) {
                    let hit = first_hit(scene, &origin, &dir)?;
                    let weight = match input {
                        MapInput::Flux(rho) => rho.values[cell] * w,
                        MapInput::Adjoint(mu) => {
                            let (row, target) = arrival_cell(basis, scene, &hit, &dir);
                            let value = arrival_factor(basis, scene, target) * mu.values[row];
                            value * basis.cell_measure(cell) * w / std::f64::consts::TAU
                        }
                    };
                    grid.deposit_segment(&origin, &hit.point, weight);
                }
            }
            Ok(grid)
        })
        .collect::<Result<_>>()?;
    let mut total = template;
    for p in &parts {
        total.add(p);
    }
    Ok(total)
}

/// Energy density of the source's own first flight, to be added to a flux map.
pub fn source_flight_map(
    scene: &Scene,
    source: &Source,
    n_rays: usize,
    resolution: usize,
) -> Result<DensityGrid> {
    source.validate(scene)?;
    let template = DensityGrid::for_scene(scene, resolution);
    let n = n_rays.max(1);
    let chunk = 4096;
    let parts: Vec<DensityGrid> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| -> Result<DensityGrid> {
            let mut grid = template.empty_like();
            for k in (c * chunk)..((c + 1) * chunk).min(n) {
                let (origin, dir): (Point2, Vec2) = source.launch(scene, k, n, 0.5)?;
                let hit = first_hit(scene, &origin, &dir)?;
                grid.deposit_segment(&origin, &hit.point, 1.0 / n as f64);
            }
            Ok(grid)
        })
        .collect::<Result<_>>()?;
    let mut total = template;
    for p in &parts {
        total.add(p);
    }
    Ok(total)
}
