use std::path::PathBuf;
use std::process::ExitCode;

use cavityflux::dea::{DeaConfig, Quadrature};
use cavityflux::geometry::Scene;
use cavityflux::harness::{self, Bands, Method, SourceSpec, SweepSpec};
use cavityflux::raytrace::RtConfig;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cavityflux",
    version,
    about = "Power balance, ray tracing and DEA for coupled 2D cavities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep absorption values and sources, writing sweep.csv (and heatmaps) to --out.
    Run(RunArgs),
    /// Compare sweep tables against each other and against tolerance bands.
    Compare {
        csv: Vec<PathBuf>,
        /// TOML file with `table_tolerance` and `[[band]]` entries.
        #[arg(long)]
        bands: Option<PathBuf>,
    },
    /// Scene utilities.
    Scene {
        #[command(subcommand)]
        command: SceneCommand,
    },
}

#[derive(Subcommand)]
enum SceneCommand {
    /// Build a scene file (or preset) and report what it contains.
    Validate { file: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Preset name (fig1a, fig1b, fig2, fig3) or scene JSON file.
    #[arg(long)]
    scene: String,
    #[arg(long, default_value = "pwb,rt,dea")]
    methods: String,
    /// Comma-separated absorption values, or `default`.
    #[arg(long, default_value = "default")]
    alphas: String,
    /// port:ID, point:X,Y, table1:N or table1:all; repeatable.
    #[arg(long, required = true)]
    source: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    rays: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_dir: Option<usize>,
    #[arg(long)]
    elem_len: Option<f64>,
    /// DEA quadrature: N positions × N directions per phase-space cell.
    #[arg(long)]
    quad: Option<usize>,
    #[arg(long)]
    heatmaps: bool,
    /// Heatmap cells per unit length.
    #[arg(long, default_value_t = 100)]
    heatmap_resolution: usize,
}

fn run(args: RunArgs) -> cavityflux::Result<ExitCode> {
    let mut spec = SweepSpec::new(args.scene, args.out);
    spec.methods = args
        .methods
        .split(',')
        .map(Method::parse)
        .collect::<Result<_, _>>()?;
    spec.alphas = harness::parse_alphas(&args.alphas)?;
    spec.sources = Vec::new();
    for s in &args.source {
        spec.sources.extend(SourceSpec::parse_list(s)?);
    }
    let defaults = RtConfig::default();
    spec.rt = RtConfig {
        n_rays: args.rays.unwrap_or(defaults.n_rays),
        rng_seed: args.seed.unwrap_or(defaults.rng_seed),
        ..defaults
    };
    let dea_defaults = DeaConfig::default();
    spec.dea = DeaConfig {
        element_length: args.elem_len,
        n_dir: args.n_dir.unwrap_or(dea_defaults.n_dir),
        quadrature: args.quad.map_or(dea_defaults.quadrature, |n| Quadrature {
            positions: n,
            directions: n,
        }),
        ..dea_defaults
    };
    spec.heatmaps = args.heatmaps;
    spec.heatmap_resolution = args.heatmap_resolution;

    let out = harness::run_sweep(&spec)?;
    let failed = out
        .rows
        .iter()
        .filter(|r| r.resolution.starts_with("error"))
        .count();
    println!(
        "wrote {} rows to {}",
        out.rows.len(),
        out.csv_path.display()
    );
    if !out.heatmaps.is_empty() {
        println!("wrote {} heatmap files", out.heatmaps.len());
    }
    if failed > 0 {
        eprintln!("{failed} rows failed; see the resolution column");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(file: &str) -> cavityflux::Result<ExitCode> {
    let scene = Scene::load(file)?;
    println!("scene `{}`: valid", scene.name);
    for c in &scene.cavities {
        println!(
            "  cavity {} at ({}, {}) side {}",
            c.id, c.origin.x, c.origin.y, c.side
        );
    }
    for o in &scene.openings {
        println!("  {:?} {} width {}", o.kind, o.id, o.width);
    }
    println!(
        "  {} discs, {} surfaces, boundary length {:.6}",
        scene.discs.len(),
        scene.surfaces.len(),
        scene.boundary_length()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare { csv, bands } => (|| {
            if csv.is_empty() {
                return Err(cavityflux::Error::Validation {
                    entity: "compare".into(),
                    reason: "at least one CSV is required".into(),
                });
            }
            let bands = match bands {
                Some(p) => Bands::from_path(p)?,
                None => Bands::default(),
            };
            let report = harness::compare(&csv, &bands)?;
            print!("{}", report.render());
            Ok(if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        })(),
        Command::Scene {
            command: SceneCommand::Validate { file },
        } => validate(&file),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
