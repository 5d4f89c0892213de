use crate::error::{Error, Result};
use crate::geometry::{Behavior, Mesh};

/// Piecewise-constant basis over boundary position × direction.
///
/// Directions are binned by `p = sin(theta)`, `theta` measured from the inward normal,
/// into `n_dir` bins of equal width on `(-1, 1)`. Equal width in `p` is equal flux measure.
#[derive(Debug, Clone)]
pub struct PhaseSpaceBasis {
    pub mesh: Mesh,
    pub n_dir: usize,
}

impl PhaseSpaceBasis {
    pub fn new(mesh: Mesh, n_dir: usize) -> Result<Self> {
        if n_dir == 0 {
            return Err(Error::validation(
                "n_dir",
                "at least one direction bin is required",
            ));
        }
        Ok(PhaseSpaceBasis { mesh, n_dir })
    }

    pub fn dim(&self) -> usize {
        self.mesh.len() * self.n_dir
    }

    pub fn cell(&self, element: usize, bin: usize) -> usize {
        element * self.n_dir + bin
    }

    pub fn element_of(&self, cell: usize) -> usize {
        cell / self.n_dir
    }

    pub fn bin_of(&self, cell: usize) -> usize {
        cell % self.n_dir
    }

    pub fn bin_width(&self) -> f64 {
        2.0 / self.n_dir as f64
    }

    pub fn bin_range(&self, bin: usize) -> (f64, f64) {
        let w = self.bin_width();
        (
            -1.0 + bin as f64 * w,
            if bin + 1 == self.n_dir {
                1.0
            } else {
                -1.0 + (bin + 1) as f64 * w
            },
        )
    }

    pub fn bin_for(&self, p: f64) -> usize {
        let b = ((p + 1.0) * 0.5 * self.n_dir as f64).floor();
        (b.max(0.0) as usize).min(self.n_dir - 1)
    }

    /// Phase-space measure `length × Δp` of a cell.
    pub fn cell_measure(&self, cell: usize) -> f64 {
        self.mesh.elements[self.element_of(cell)].arc_length * self.bin_width()
    }

    /// Cells of elements that belong to opening `opening` (both sides for apertures).
    pub fn opening_cells(&self, opening: usize) -> impl Iterator<Item = usize> + '_ {
        self.mesh
            .elements
            .iter()
            .filter(move |e| e.opening() == Some(opening))
            .flat_map(move |e| (0..self.n_dir).map(move |b| e.id * self.n_dir + b))
    }

    /// Whether flux in this cell is re-emitted into the cavity (everything but ports).
    pub fn emits(&self, element: usize) -> bool {
        !matches!(self.mesh.elements[element].behavior, Behavior::Port { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize, Scene};

    #[test]
    fn bins_partition_the_direction_interval() {
        let mesh = discretize(&Scene::preset("fig2").unwrap(), 0.1).unwrap();
        let basis = PhaseSpaceBasis::new(mesh, 7).unwrap();
        let mut edge = -1.0;
        for b in 0..7 {
            let (lo, hi) = basis.bin_range(b);
            assert_eq!(lo, edge);
            assert!(hi > lo);
            assert_eq!(basis.bin_for(0.5 * (lo + hi)), b);
            edge = hi;
        }
        assert_eq!(edge, 1.0);
        assert_eq!(basis.bin_for(-1.0), 0);
        assert_eq!(basis.bin_for(1.0), 6);
        assert_eq!(basis.dim(), basis.mesh.len() * 7);
    }
}
