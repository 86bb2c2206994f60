use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use elastobridge::admissibility::{enumerate_irreducible, AdmissibilityProblem};
use elastobridge::circuit::{solve_network, ResistorNetwork};
use elastobridge::optimize::{best_of, MethodSelection, OptimizerRegistry};
use elastobridge::plasticity::evaluate_all;
use elastobridge::report::{self, PlotSpec};
use elastobridge::sweep::{
    fit_max_margin, run_study, Grid, Study, StudySpec, SweepConfig, SweepRow, ThresholdFit,
};
use elastobridge::{conductance, resistance, Error, PlasticDomain, Result, SpringSet};

#[derive(Parser)]
#[command(name = "elastobridge", version, about = "Five-spring elastoplastic bridge design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equivalent resistance and conductance of a design.
    Resistance {
        /// Five comma-separated elastic limits.
        #[arg(long, allow_hyphen_values = true)]
        c: SpringSet,
        /// Use the node-potential solver instead of the closed form.
        #[arg(long)]
        oracle: bool,
    },
    /// Force, resistance, conductance, cost and feasibility of a design.
    Evaluate {
        #[arg(long, allow_hyphen_values = true)]
        c: SpringSet,
        #[arg(long, default_value = "d135")]
        domain: PlasticDomain,
    },
    /// Irreducible admissible signed index sets.
    Admissible {
        /// JSON matrix, or an object with `matrix` and optional `target`.
        #[arg(long, conflicts_with = "benchmark", required_unless_present = "benchmark")]
        matrix_file: Option<PathBuf>,
        /// Use the built-in bridge matrix.
        #[arg(long)]
        benchmark: bool,
    },
    /// Solve one study at one weight pair.
    Optimize(OptimizeArgs),
    /// Solve a study over a weight grid.
    Sweep(SweepArgs),
    /// Render CSV, exceptions table and SVG from sweep JSON.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    study: Study,
    #[arg(long)]
    k1: f64,
    #[arg(long)]
    k2: f64,
    #[arg(long, default_value = "d135")]
    domain: PlasticDomain,
    /// Registered optimizer name, or `both`.
    #[arg(long, default_value = "both")]
    method: MethodSelection,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    study: Study,
    /// `start:stop:step` for both weights, `k1spec,k2spec`, `coarse` or `fine`.
    #[arg(long, default_value = "coarse")]
    grid: String,
    /// `d135`, `d234` or `both`.
    #[arg(long, default_value = "both")]
    domain: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the CSV mirror; defaults to `out` with a `.csv` extension.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Bare(Vec<Vec<f64>>),
    Full(AdmissibilityProblem),
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Resistance { c, oracle } => {
            let r = if oracle {
                solve_network(&ResistorNetwork::bridge(&c))?
            } else {
                resistance(&c)
            };
            let g = if oracle {
                if r.is_finite() {
                    1.0 / r
                } else {
                    0.0
                }
            } else {
                conductance(&c)
            };
            println!("{}", json!({ "R": finite_or_null(r), "G": g }));
        }
        Command::Evaluate { c, domain } => print_json(&evaluate_all(&c, domain))?,
        Command::Admissible {
            matrix_file,
            benchmark,
        } => {
            let problem = match (benchmark, matrix_file) {
                (true, _) => AdmissibilityProblem::benchmark(),
                (false, Some(path)) => match serde_json::from_str(&fs::read_to_string(path)?)? {
                    MatrixFile::Bare(m) => AdmissibilityProblem::new(m)?,
                    MatrixFile::Full(p) => {
                        p.validate()?;
                        p
                    }
                },
                (false, None) => unreachable!("clap requires one of the two"),
            };
            print_json(&enumerate_irreducible(&problem)?)?;
        }
        Command::Optimize(args) => {
            let registry = OptimizerRegistry::with_defaults();
            let problem = args.study.problem(args.k1, args.k2, args.domain);
            let runs = registry
                .resolve(&args.method)?
                .into_iter()
                .map(|o| o.optimize(&problem, args.seed))
                .collect::<Result<Vec<_>>>()?;
            print_json(&best_of(&runs)?)?;
        }
        Command::Sweep(args) => {
            let grid = match args.grid.as_str() {
                "coarse" => Grid::coarse(),
                "fine" => Grid::fine(),
                other => other.parse()?,
            };
            let domains = match args.domain.as_str() {
                "both" => PlasticDomain::ALL.to_vec(),
                d => vec![d.parse()?],
            };
            let spec = StudySpec::new(args.study)
                .with_grid(grid)
                .with_domains(domains);
            let report = run_study(&spec, &SweepConfig::default(), args.seed)?;
            let rows = report.rows();
            report::write_rows_json(&rows, &args.out)?;
            let csv = args.csv.unwrap_or_else(|| args.out.with_extension("csv"));
            fs::write(&csv, report::render_csv(&rows)?)?;
            eprintln!(
                "{} cells written to {} and {}",
                rows.len(),
                args.out.display(),
                csv.display()
            );
        }
        Command::Report { input, svg, csv } => {
            let rows = report::read_rows_json(&input)?;
            if let Some(path) = csv {
                let md = report::emit_tables(&rows, &path)?;
                eprintln!("wrote {} and {}", path.display(), md.display());
            }
            if let Some(path) = svg {
                let mut spec = PlotSpec::for_rows(&rows);
                if let Some(fit) = threshold_for(&rows) {
                    spec = spec.with_threshold(fit);
                }
                report::emit_svg(&rows, &spec, &path)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

/// The fitted class boundary of the study the rows came from, when both
/// classes are present and separable.
fn threshold_for(rows: &[SweepRow]) -> Option<ThresholdFit> {
    let study = rows.first()?.study;
    let (a, b) = match study {
        Study::A => ("red", "blue"),
        Study::B => return None,
        Study::C | Study::D => ("base", "elevated"),
    };
    let points = |label: &str| -> Vec<[f64; 2]> {
        rows.iter()
            .filter(|r| r.label == label)
            .map(|r| [r.k1, r.k2])
            .collect()
    };
    fit_max_margin(&points(a), &points(b))
        .ok()
        .filter(|f| f.separable)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
