//! Dynamical energy analysis on boundary phase space.
//!
//! The boundary is cut into elements and outgoing directions into bins of `p = sin(theta)`.
//! `L` moves flux from each outgoing cell to the cell where it lands after one free flight,
//! so the stationary flux solves `(I - L) rho = rho0`. Ports absorb what reaches them and
//! re-emit nothing; apertures hand flux to the twin element on the far side.

mod basis;
mod map;
mod operator;
mod solver;

pub use basis::PhaseSpaceBasis;
pub use map::{source_flight_map, spatial_map, MapInput};
pub use operator::{assemble, source_vector, FlightMap, Quadrature, SourceFlights, TransferMatrix};
pub use solver::{solve_transpose_with, solve_with, spectral_radius, SolveStats, SolverConfig};

use crate::error::{Error, Result};
use crate::geometry::{discretize, OpeningKind, Scene};
use crate::raytrace::Source;

/// Flux coefficients over the phase-space basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceDensity {
    pub values: Vec<f64>,
}

impl PhaseSpaceDensity {
    pub fn new(values: Vec<f64>) -> Self {
        PhaseSpaceDensity { values }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// Power delivered to one opening per unit power starting in each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointDensity {
    pub opening: usize,
    pub values: Vec<f64>,
}

/// 0/1 indicator on the cells of an opening (both sides for an aperture).
pub fn indicator(basis: &PhaseSpaceBasis, opening: usize) -> PhaseSpaceDensity {
    let mut chi = vec![0.0; basis.dim()];
    for c in basis.opening_cells(opening) {
        chi[c] = 1.0;
    }
    PhaseSpaceDensity::new(chi)
}

/// Power reaching an opening: the sum of `rho` over its cells.
pub fn port_flux(basis: &PhaseSpaceBasis, rho: &PhaseSpaceDensity, opening: usize) -> f64 {
    basis.opening_cells(opening).map(|c| rho.values[c]).sum()
}

pub fn solve(
    l: &TransferMatrix,
    rho0: &PhaseSpaceDensity,
    cfg: &SolverConfig,
) -> Result<PhaseSpaceDensity> {
    Ok(PhaseSpaceDensity::new(solve_with(l, &rho0.values, cfg)?.0))
}

/// `mu = (I - L)^-T chi`, so that `<rho0, mu> = <rho, chi>` for every source.
pub fn adjoint(
    l: &TransferMatrix,
    basis: &PhaseSpaceBasis,
    opening: usize,
    cfg: &SolverConfig,
) -> Result<AdjointDensity> {
    let chi = indicator(basis, opening);
    Ok(AdjointDensity {
        opening,
        values: solve_transpose_with(l, &chi.values, cfg)?.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeaConfig {
    /// Target element length; `None` picks one from the scene's smallest opening.
    pub element_length: Option<f64>,
    pub n_dir: usize,
    pub quadrature: Quadrature,
    /// Rays in the fan that builds `rho0`.
    pub source_rays: usize,
    pub solver: SolverConfig,
}

impl Default for DeaConfig {
    fn default() -> Self {
        DeaConfig {
            element_length: None,
            n_dir: 64,
            quadrature: Quadrature::default(),
            source_rays: 1 << 20,
            solver: SolverConfig::default(),
        }
    }
}

/// 0.02, halved until every opening holds at least two elements.
pub fn default_element_length(scene: &Scene) -> f64 {
    let narrowest = scene
        .openings
        .iter()
        .map(|o| o.width)
        .fold(f64::INFINITY, f64::min);
    let mut len = 0.02;
    while len > 0.5 * narrowest {
        len *= 0.5;
    }
    len
}

/// Discretised scene with its absorption-free flight map, reusable across absorption values.
#[derive(Debug, Clone)]
pub struct DeaModel {
    pub config: DeaConfig,
    pub basis: PhaseSpaceBasis,
    pub element_length: f64,
    flights: FlightMap,
}

#[derive(Debug, Clone)]
pub struct DeaSolution {
    pub operator: TransferMatrix,
    pub rho0: PhaseSpaceDensity,
    pub rho: PhaseSpaceDensity,
    /// `(opening id, power)` for every exterior port.
    pub p_port: Vec<(String, f64)>,
    /// `(opening id, power crossing in both directions)` for every aperture.
    pub p_aperture: Vec<(String, f64)>,
    /// Power absorbed by the walls and discs of each cavity.
    pub p_wall: Vec<f64>,
    /// `|1 - ports - walls|`
    pub defect: f64,
    pub stats: SolveStats,
}

impl DeaSolution {
    pub fn port(&self, id: &str) -> Option<f64> {
        self.p_port.iter().find(|(k, _)| k == id).map(|(_, p)| *p)
    }
}

impl DeaModel {
    pub fn build(scene: &Scene, config: DeaConfig) -> Result<DeaModel> {
        if config.quadrature.samples() == 0 {
            return Err(Error::validation(
                "dea config",
                "quadrature needs at least one sample",
            ));
        }
        let element_length = config
            .element_length
            .unwrap_or_else(|| default_element_length(scene));
        let mesh = discretize(scene, element_length)?;
        let basis = PhaseSpaceBasis::new(mesh, config.n_dir)?;
        let flights = FlightMap::build(scene, &basis, config.quadrature)?;
        Ok(DeaModel {
            config,
            basis,
            element_length,
            flights,
        })
    }

    /// `L` with the reflectivities of `scene`, which must share the model's geometry.
    pub fn operator(&self, scene: &Scene) -> TransferMatrix {
        self.flights.transfer(scene, &self.basis)
    }

    pub fn source_flights(&self, scene: &Scene, source: &Source) -> Result<SourceFlights> {
        SourceFlights::build(scene, &self.basis, source, self.config.source_rays)
    }

    pub fn run(&self, scene: &Scene, source: &Source) -> Result<DeaSolution> {
        let flights = self.source_flights(scene, source)?;
        self.solve_with_flights(scene, &flights)
    }

    /// Solves for the absorption of `scene` with precomputed source flights.
    pub fn solve_with_flights(
        &self,
        scene: &Scene,
        flights: &SourceFlights,
    ) -> Result<DeaSolution> {
        let operator = self.operator(scene);
        let (rho0, first_absorbed) = flights.apply(scene, &self.basis);
        let (values, stats) = solve_with(&operator, &rho0.values, &self.config.solver)?;
        let rho = PhaseSpaceDensity::new(values);

        let mut p_port = Vec::new();
        let mut p_aperture = Vec::new();
        for (k, o) in scene.openings.iter().enumerate() {
            let p = port_flux(&self.basis, &rho, k);
            match o.kind {
                OpeningKind::Port => p_port.push((o.id.clone(), p)),
                OpeningKind::Aperture => p_aperture.push((o.id.clone(), p)),
            }
        }
        let p_wall: Vec<f64> = first_absorbed
            .iter()
            .zip(&operator.absorption)
            .map(|(a0, row)| a0 + rho.dot(row))
            .collect();
        let out: f64 = p_port.iter().map(|(_, p)| p).sum::<f64>() + p_wall.iter().sum::<f64>();
        Ok(DeaSolution {
            operator,
            rho0,
            rho,
            p_port,
            p_aperture,
            p_wall,
            defect: (1.0 - out).abs(),
            stats,
        })
    }

    pub fn adjoint(&self, solution: &DeaSolution, opening: usize) -> Result<AdjointDensity> {
        adjoint(
            &solution.operator,
            &self.basis,
            opening,
            &self.config.solver,
        )
    }
}
