use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use warpcurv::certify::{
    certify, geodesic_tsv, load_spec, sample_record, spec_slack, CertificationReport, ENGINE_POOL, EXACT_SLACK,
};
use warpcurv::comparison::{sample_comparisons_with, Kind, SamplerOptions};
use warpcurv::constructions::{parse_number, SpaceSpec};
use warpcurv::metric::{MetricOracle, Point};
use warpcurv::model::Curvature;
use warpcurv::warped::{warped_distance_detailed, warped_geodesic, EngineOptions};

const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "warpcurv", version, about = "Curvature-bound certification for warped products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Run the condition battery and sample the warped product.
    Certify {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "machine")]
        format: Format,
    },
    /// Same as `certify`, human-readable by default.
    Report {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Distance between two points of the warped product.
    Distance {
        spec: PathBuf,
        /// Comma-separated coordinates, base first.
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long)]
        tol: Option<f64>,
        /// Write the geodesic as TSV.
        #[arg(long)]
        geodesic: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        resolution: f64,
    },
    /// Sample curvature comparisons on a spec's warped product or a space.
    Sample {
        /// Spec file or space expression such as `circle(2*pi+0.5)`.
        target: String,
        #[arg(long)]
        kind: Kind,
        #[arg(long, allow_hyphen_values = true)]
        kappa: String,
        #[arg(short, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_point(s: &str) -> Result<Point> {
    s.split(',').map(|c| parse_number(c.trim()).map_err(|e| anyhow!(e))).collect()
}

fn emit(report: &CertificationReport, format: Format) -> u8 {
    match format {
        Format::Machine => print!("{}", report.machine()),
        Format::Text => print!("{}", report.text()),
    }
    report.exit_code() as u8
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Certify { spec, format } | Command::Report { spec, format } => {
            let spec = load_spec(&spec)?;
            Ok(emit(&certify(&spec), format))
        }
        Command::Distance { spec, from, to, tol, geodesic, resolution } => {
            let spec = load_spec(&spec)?;
            let (u, v) = (parse_point(&from)?, parse_point(&to)?);
            let w = spec.product();
            w.validate(&u).context("--from")?;
            w.validate(&v).context("--to")?;
            let tol = tol.unwrap_or(spec.tol);
            let est = if w.has_fast_path() {
                w.estimate(&u, &v)?
            } else {
                let opts = EngineOptions { grid: spec.budget.grid, ..EngineOptions::default() };
                warped_distance_detailed(&spec.triple, &u, &v, tol, &opts)?
            };
            println!(
                "DISTANCE value={:.9e} richardson={:.9e} levels={} segments={} via_zero={} converged={}",
                est.value, est.richardson, est.levels, est.segments, est.via_zero, est.converged
            );
            if let Some(path) = geodesic {
                let g = warped_geodesic(&spec.triple, &u, &v, resolution)?;
                fs::write(&path, geodesic_tsv(&spec.triple, &g))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(0)
        }
        Command::Sample { target, kind, kappa, n, seed } => {
            let kappa = Curvature::new(parse_number(&kappa)?)?;
            let path = Path::new(&target);
            let (space, slack, opts): (Arc<dyn MetricOracle>, f64, SamplerOptions) = if path.is_file() {
                let spec = load_spec(path)?;
                let w = spec.product();
                if w.has_fast_path() {
                    (Arc::new(w), EXACT_SLACK, SamplerOptions::default())
                } else {
                    let slack = spec.engine_slack();
                    (Arc::new(w), slack, SamplerOptions { pool: ENGINE_POOL, ..SamplerOptions::default() })
                }
            } else {
                let space = SpaceSpec::parse(&target)?.build()?;
                let slack = spec_slack(&space);
                (space, slack, SamplerOptions::default())
            };
            let v = sample_comparisons_with(space.as_ref(), kappa, kind, n, seed, slack, opts);
            print!("{}", sample_record(space.as_ref(), kind, kappa, seed, &v));
            Ok(if v.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
