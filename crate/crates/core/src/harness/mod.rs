//! Sweeps over absorption and source position, writing one comparison table per run.

mod compare;

pub use compare::{
    compare, compare_tables, read_rows, Band, BandOutcome, Bands, CompareReport, Expect,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dea::{self, DeaConfig, DeaModel, MapInput};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Scene, TABLE1_SOURCES};
use crate::grid::DensityGrid;
use crate::pwb::PwbNetwork;
use crate::raytrace::{self, RtConfig, Source};

pub const DEFAULT_ALPHAS: [f64; 11] = [0.0, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0];

pub const CSV_HEADER: [&str; 9] = [
    "scene",
    "method",
    "alpha",
    "source",
    "port",
    "power",
    "defect",
    "runtime_ms",
    "resolution",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Pwb,
    Rt,
    Dea,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pwb => "pwb",
            Method::Rt => "rt",
            Method::Dea => "dea",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pwb" => Ok(Method::Pwb),
            "rt" => Ok(Method::Rt),
            "dea" => Ok(Method::Dea),
            other => Err(Error::validation(
                "method",
                format!("`{other}` is not one of pwb, rt, dea"),
            )),
        }
    }
}

/// A source together with the tag written to the `source` column.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub tag: String,
    pub source: Source,
}

impl SourceSpec {
    pub fn port(id: &str) -> SourceSpec {
        SourceSpec {
            tag: format!("port:{id}"),
            source: Source::PortNormal(id.to_string()),
        }
    }

    pub fn table1(n: usize) -> Result<SourceSpec> {
        Ok(SourceSpec {
            tag: format!("table1:{n}"),
            source: Source::table1(n)?,
        })
    }

    /// Parses `port:ID`, `point:X,Y`, `table1:N` or `table1:all`.
    pub fn parse_list(s: &str) -> Result<Vec<SourceSpec>> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            Error::InvalidSource(format!("`{s}`: expected port:ID, point:X,Y or table1:N"))
        })?;
        match kind {
            "port" if !arg.is_empty() => Ok(vec![SourceSpec::port(arg)]),
            "point" => {
                let (x, y) = arg
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidSource(format!("`{s}`: expected point:X,Y")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidSource(format!("`{s}`: `{v}` is not a number")))
                };
                Ok(vec![SourceSpec {
                    tag: format!("point:{},{}", parse(x)?, parse(y)?),
                    source: Source::Point(Point2::new(parse(x)?, parse(y)?)),
                }])
            }
            "table1" if arg == "all" => {
                (1..=TABLE1_SOURCES.len()).map(SourceSpec::table1).collect()
            }
            "table1" => {
                let n = arg.parse::<usize>().map_err(|_| {
                    Error::InvalidSource(format!("`{s}`: `{arg}` is not a source number"))
                })?;
                Ok(vec![SourceSpec::table1(n)?])
            }
            _ => Err(Error::InvalidSource(format!(
                "`{s}`: expected port:ID, point:X,Y or table1:N"
            ))),
        }
    }
}

/// Parses `default` or a comma-separated list of absorption values.
pub fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    if s.trim() == "default" {
        return Ok(DEFAULT_ALPHAS.to_vec());
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation("alphas", format!("`{v}` is not a number")))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Preset name or scene file.
    pub scene: String,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub sources: Vec<SourceSpec>,
    pub rt: RtConfig,
    pub dea: DeaConfig,
    pub out_dir: PathBuf,
    /// Write energy-density grids for RT and DEA and adjoint grids for every opening.
    pub heatmaps: bool,
    /// Grid cells per unit length.
    pub heatmap_resolution: usize,
}

impl SweepSpec {
    pub fn new(scene: impl Into<String>, out_dir: impl Into<PathBuf>) -> SweepSpec {
        SweepSpec {
            scene: scene.into(),
            methods: vec![Method::Pwb, Method::Rt, Method::Dea],
            alphas: DEFAULT_ALPHAS.to_vec(),
            sources: Vec::new(),
            rt: RtConfig::default(),
            dea: DeaConfig::default(),
            out_dir: out_dir.into(),
            heatmaps: false,
            heatmap_resolution: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::validation("sweep", "no methods selected"));
        }
        if self.alphas.is_empty() {
            return Err(Error::validation("sweep", "no alpha values"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::validation(
                "sweep",
                format!("alpha {a} is outside [0, 1]"),
            ));
        }
        if self.sources.is_empty() {
            return Err(Error::validation("sweep", "no sources"));
        }
        Ok(())
    }
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scene: String,
    pub method: String,
    pub alpha: f64,
    pub source: String,
    pub port: String,
    pub power: f64,
    pub defect: f64,
    pub runtime_ms: f64,
    pub resolution: String,
}

impl ComparisonRow {
    pub fn key(&self) -> RowKey {
        RowKey {
            scene: self.scene.clone(),
            method: self.method.clone(),
            alpha: self.alpha.to_bits(),
            source: self.source.clone(),
            port: self.port.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub scene: String,
    pub method: String,
    alpha: u64,
    pub source: String,
    pub port: String,
}

impl RowKey {
    pub fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha)
    }
}

impl std::fmt::Display for RowKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{}/alpha={}/{}/{}",
            self.scene,
            self.method,
            self.alpha(),
            self.source,
            self.port
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ComparisonRow>,
    pub csv_path: PathBuf,
    pub heatmaps: Vec<PathBuf>,
}

struct JobResult {
    ports: Vec<(String, f64)>,
    defect: f64,
    resolution: String,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let base = Scene::load(&spec.scene)?;
    let name = base.name.clone();
    for s in &spec.sources {
        s.source.validate(&base)?;
    }
    std::fs::create_dir_all(&spec.out_dir)?;
    let port_ids: Vec<String> = base.ports().map(|(_, o)| o.id.clone()).collect();

    let mut rows = Vec::new();
    let mut heatmaps = Vec::new();
    let mut methods = spec.methods.clone();
    methods.sort();
    methods.dedup();

    for method in methods {
        // The DEA flight map does not depend on absorption, so it is built once per scene.
        let dea_model = match method {
            Method::Dea => Some(DeaModel::build(&base, spec.dea.clone())),
            _ => None,
        };
        for (si, source) in spec.sources.iter().enumerate() {
            let dea_flights = match &dea_model {
                Some(Ok(m)) => Some(m.source_flights(&base, &source.source)),
                _ => None,
            };
            for &alpha in &spec.alphas {
                let started = Instant::now();
                let result = base.with_alpha(alpha).and_then(|scene| match method {
                    Method::Pwb => run_pwb(&scene, &source.source),
                    Method::Rt => {
                        let (job, grid) = run_rt(&scene, &source.source, spec)?;
                        if let Some(grid) = grid {
                            let tag = heatmap_tag(&name, alpha, &source.tag);
                            heatmaps.extend(write_heatmap(
                                spec,
                                "rt",
                                &tag,
                                &grid,
                                &meta(&name, alpha, &source.tag),
                            )?);
                        }
                        Ok(job)
                    }
                    Method::Dea => {
                        let model = match dea_model.as_ref().expect("model built for dea") {
                            Ok(m) => m,
                            Err(e) => return Err(Error::validation("dea model", e.to_string())),
                        };
                        let flights = match dea_flights.as_ref().expect("flights built for dea") {
                            Ok(f) => f,
                            Err(e) => return Err(Error::validation("dea source", e.to_string())),
                        };
                        let sol = model.solve_with_flights(&scene, flights)?;
                        if spec.heatmaps {
                            // Adjoint maps do not depend on the source.
                            let adjoints = si == 0;
                            heatmaps.extend(dea_heatmaps(
                                spec,
                                &scene,
                                model,
                                &sol,
                                &source.source,
                                &name,
                                alpha,
                                &source.tag,
                                adjoints,
                            )?);
                        }
                        Ok(JobResult {
                            ports: sol.p_port.clone(),
                            defect: sol.defect,
                            resolution: format!(
                                "elem_len={};n_dir={};quad={};source_rays={};iterations={}",
                                model.element_length,
                                model.config.n_dir,
                                model.config.quadrature.samples(),
                                model.config.source_rays,
                                sol.stats.iterations
                            ),
                        })
                    }
                });
                let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
                match result {
                    Ok(job) => {
                        rows.extend(job.ports.into_iter().map(|(port, power)| ComparisonRow {
                            scene: name.clone(),
                            method: method.name().to_string(),
                            alpha,
                            source: source.tag.clone(),
                            port,
                            power,
                            defect: job.defect,
                            runtime_ms,
                            resolution: job.resolution.clone(),
                        }))
                    }
                    Err(e) => rows.extend(port_ids.iter().map(|port| ComparisonRow {
                        scene: name.clone(),
                        method: method.name().to_string(),
                        alpha,
                        source: source.tag.clone(),
                        port: port.clone(),
                        power: f64::NAN,
                        defect: f64::NAN,
                        runtime_ms,
                        resolution: format!("error: {e}"),
                    })),
                }
            }
        }
    }

    let csv_path = spec.out_dir.join("sweep.csv");
    write_rows(&csv_path, &rows)?;
    Ok(SweepOutput {
        rows,
        csv_path,
        heatmaps,
    })
}

fn run_pwb(scene: &Scene, source: &Source) -> Result<JobResult> {
    let cavity = source.validate(scene)?;
    let network = PwbNetwork::from_scene(scene);
    let mut injection = vec![0.0; scene.cavities.len()];
    injection[cavity] = 1.0;
    let report = network.solve(&injection)?;
    Ok(JobResult {
        defect: report.conservation_defect(1.0),
        ports: report.p_port,
        resolution: "network".to_string(),
    })
}

fn run_rt(
    scene: &Scene,
    source: &Source,
    spec: &SweepSpec,
) -> Result<(JobResult, Option<DensityGrid>)> {
    let rt = RtConfig {
        grid_resolution: spec.heatmaps.then_some(spec.heatmap_resolution),
        ..spec.rt.clone()
    };
    let sim = raytrace::simulate(scene, source, &rt)?;
    Ok((
        JobResult {
            defect: sim.report.defect,
            resolution: format!(
                "rays={};seed={};max_bounces={};residual={:e}",
                rt.n_rays, rt.rng_seed, rt.max_bounces, sim.report.p_residual
            ),
            ports: sim.report.p_port,
        },
        sim.density,
    ))
}

#[allow(clippy::too_many_arguments)]
fn dea_heatmaps(
    spec: &SweepSpec,
    scene: &Scene,
    model: &DeaModel,
    sol: &dea::DeaSolution,
    source: &Source,
    name: &str,
    alpha: f64,
    source_tag: &str,
    adjoints: bool,
) -> Result<Vec<PathBuf>> {
    let quad = model.config.quadrature;
    let mut grid = dea::spatial_map(
        scene,
        &model.basis,
        MapInput::Flux(&sol.rho),
        spec.heatmap_resolution,
        quad,
    )?;
    grid.add(&dea::source_flight_map(
        scene,
        source,
        model.config.source_rays,
        spec.heatmap_resolution,
    )?);
    let tag = heatmap_tag(name, alpha, source_tag);
    let mut written = write_heatmap(spec, "dea", &tag, &grid, &meta(name, alpha, source_tag))?;
    if !adjoints {
        return Ok(written);
    }
    for (k, o) in scene.openings.iter().enumerate() {
        let mu = model.adjoint(sol, k)?;
        let grid = dea::spatial_map(
            scene,
            &model.basis,
            MapInput::Adjoint(&mu),
            spec.heatmap_resolution,
            quad,
        )?;
        let tag = format!("{}_alpha{}", sanitize(name), alpha);
        let mut extra = vec![
            ("scene", name.to_string()),
            ("alpha", alpha.to_string()),
            ("opening", o.id.clone()),
            ("quantity", "adjoint".to_string()),
        ];
        extra.push((
            "table1_sources",
            TABLE1_SOURCES
                .iter()
                .map(|(x, y)| format!("{x}:{y}"))
                .collect::<Vec<_>>()
                .join(";"),
        ));
        written.extend(write_heatmap(
            spec,
            &format!("dea-adjoint-{}", sanitize(&o.id)),
            &tag,
            &grid,
            &extra,
        )?);
    }
    Ok(written)
}

fn meta(scene: &str, alpha: f64, source: &str) -> Vec<(&'static str, String)> {
    vec![
        ("scene", scene.to_string()),
        ("alpha", alpha.to_string()),
        ("source", source.to_string()),
        ("quantity", "energy_density".to_string()),
    ]
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

fn heatmap_tag(scene: &str, alpha: f64, source: &str) -> String {
    format!("{}_alpha{}_{}", sanitize(scene), alpha, sanitize(source))
}

fn write_heatmap(
    spec: &SweepSpec,
    method: &str,
    tag: &str,
    grid: &DensityGrid,
    extra: &[(&str, String)],
) -> Result<Vec<PathBuf>> {
    let csv = spec.out_dir.join(format!("heatmap_{method}_{tag}.csv"));
    let meta = spec.out_dir.join(format!("heatmap_{method}_{tag}.meta"));
    grid.write_csv(&csv)?;
    grid.write_meta(&meta, extra)?;
    Ok(vec![csv, meta])
}

pub fn write_rows(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
