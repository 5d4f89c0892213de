//! Regular grid accumulating path-length weighted energy.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::geometry::{Point2, Scene};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub origin: Point2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, row 0 at the lowest `y`.
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(origin: Point2, cell: f64, nx: usize, ny: usize) -> Self {
        DensityGrid {
            origin,
            cell,
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    /// Grid covering the scene bounding box with `resolution` cells per unit length.
    pub fn for_scene(scene: &Scene, resolution: usize) -> Self {
        let (lo, hi) = scene.bounds();
        let cell = 1.0 / resolution.max(1) as f64;
        let nx = ((hi.x - lo.x) / cell).round().max(1.0) as usize;
        let ny = ((hi.y - lo.y) / cell).round().max(1.0) as usize;
        DensityGrid::new(lo, cell, nx, ny)
    }

    pub fn empty_like(&self) -> Self {
        DensityGrid::new(self.origin, self.cell, self.nx, self.ny)
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell,
            self.origin.y + (iy as f64 + 0.5) * self.cell,
        )
    }

    pub fn cell_of(&self, p: &Point2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.cell;
        let fy = (p.y - self.origin.y) / self.cell;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }

    pub fn add(&mut self, other: &DensityGrid) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell * self.cell
    }

    /// Adds `weight * (length of segment inside cell) / cell area` to every cell the segment crosses.
    pub fn deposit_segment(&mut self, a: &Point2, b: &Point2, weight: f64) {
        let d = b - a;
        let len = d.norm();
        if len <= 0.0 || weight == 0.0 {
            return;
        }
        let area = self.cell * self.cell;
        let to_grid = |v: f64, o: f64| (v - o) / self.cell;
        let (gx0, gy0) = (to_grid(a.x, self.origin.x), to_grid(a.y, self.origin.y));
        let (gx1, gy1) = (to_grid(b.x, self.origin.x), to_grid(b.y, self.origin.y));
        let (dx, dy) = (gx1 - gx0, gy1 - gy0);

        // Parametric crossings of grid lines, t in [0, 1].
        let clamp_cell = |g: f64, n: usize| (g.floor().max(0.0) as usize).min(n - 1);
        let mut ix = clamp_cell(gx0, self.nx);
        let mut iy = clamp_cell(gy0, self.ny);
        let (step_x, mut t_next_x, dt_x) = axis_setup(gx0, dx, ix);
        let (step_y, mut t_next_y, dt_y) = axis_setup(gy0, dy, iy);

        let mut t = 0.0;
        loop {
            let t_end = t_next_x.min(t_next_y).min(1.0);
            let w = weight * (t_end - t) * len / area;
            if w != 0.0 {
                self.values[iy * self.nx + ix] += w;
            }
            if t_end >= 1.0 {
                break;
            }
            if t_next_x <= t_next_y {
                t_next_x += dt_x;
                match step_x {
                    1 if ix + 1 < self.nx => ix += 1,
                    -1 if ix > 0 => ix -= 1,
                    _ => {}
                }
            } else {
                t_next_y += dt_y;
                match step_y {
                    1 if iy + 1 < self.ny => iy += 1,
                    -1 if iy > 0 => iy -= 1,
                    _ => {}
                }
            }
            t = t_end;
        }
    }

    /// CSV matrix, one grid row per line, lowest `y` first.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for iy in 0..self.ny {
            let row: Vec<String> = (0..self.nx)
                .map(|ix| format!("{:.9e}", self.get(ix, iy)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Sidecar metadata as `key=value` lines.
    pub fn write_meta(&self, path: impl AsRef<Path>, extra: &[(&str, String)]) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "origin_x={}", self.origin.x)?;
        writeln!(out, "origin_y={}", self.origin.y)?;
        writeln!(out, "cell_size={}", self.cell)?;
        writeln!(out, "nx={}", self.nx)?;
        writeln!(out, "ny={}", self.ny)?;
        writeln!(out, "row_order=bottom_to_top")?;
        for (k, v) in extra {
            writeln!(out, "{k}={v}")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Step direction, parameter of the first grid-line crossing, and parameter spacing.
fn axis_setup(g0: f64, dg: f64, cell: usize) -> (i32, f64, f64) {
    if dg > 0.0 {
        (1, ((cell + 1) as f64 - g0) / dg, 1.0 / dg)
    } else if dg < 0.0 {
        (-1, (cell as f64 - g0) / dg, -1.0 / dg)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}
