//! Command-line front end for the xy-loops library.

mod bkt;
mod config;
mod output;
mod sample;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use xy_loops::bessel::{
    bessel_i_scaled, lammers_margin, lammers_threshold, lammers_triangulation_margin, lammers_triangulation_threshold,
    log_bessel_i, turan_margin,
};
use xy_loops::current::{cutoff_for, partition_and_correlators};
use xy_loops::{GraphFile, PlanarGraph};

use config::FileConfig;
use output::Output;

#[derive(Parser, Debug)]
#[command(name = "xy-loops", version, about = "Loop representations of the planar XY model: exact checks and samplers")]
struct Cli {
    /// JSON file with default values for flags; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Graph file utilities.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Bessel values, Turán margins and Lammers thresholds as JSON.
    Bessel(BesselArgs),
    /// Exact two-point function by current enumeration.
    Exact(ExactArgs),
    /// Run a verification battery and print a JSON report.
    Verify(VerifyArgs),
    /// Monte Carlo estimates of observables as CSV.
    Sample(sample::SampleArgs),
    /// Boundary sums, cut sums and decay fits over boxes and inverse temperatures.
    Bkt(bkt::BktArgs),
}

#[derive(Subcommand, Debug)]
enum GraphAction {
    /// Validate a graph file and print vertex, edge and face counts.
    Check { file: PathBuf },
}

#[derive(Args, Debug)]
struct BesselArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    kmax: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Where a graph comes from.
#[derive(Args, Debug, Clone)]
pub struct GraphSource {
    /// Graph file in the JSON rotation format.
    #[arg(long, conflicts_with = "box_side")]
    pub graph: Option<PathBuf>,
    /// Built-in square box with this many vertices per side.
    #[arg(long = "box")]
    pub box_side: Option<usize>,
    /// Apply the diagonal triangulation to the built-in box.
    #[arg(long, requires = "box_side")]
    pub triangulate: bool,
}

impl GraphSource {
    pub fn load(&self) -> anyhow::Result<PlanarGraph> {
        let g = match (&self.graph, self.box_side) {
            (Some(p), _) => load_graph(p)?,
            (None, Some(n)) if n >= 2 => PlanarGraph::box_lattice(n - 1, n - 1, 1.0)?,
            (None, Some(n)) => anyhow::bail!("--box needs at least 2 vertices per side, got {n}"),
            (None, None) => anyhow::bail!("give either --graph FILE or --box N"),
        };
        if self.triangulate {
            return Ok(g.triangulate_square_lattice()?);
        }
        Ok(g)
    }
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    a: usize,
    #[arg(long)]
    b: usize,
    /// Power k in ⟨σ_a^k σ̄_b^k⟩.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Per-directed-edge cutoff; chosen from the tail bound when omitted.
    #[arg(long)]
    cutoff: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Loops,
    Coloured,
    Inequalities,
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long)]
    seed: Option<u64>,
    /// Random instances per inverse temperature for the inequality suite.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// Bad input or configuration.
    Usage(anyhow::Error),
    /// The run completed but a check did not pass.
    Check,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

fn load_graph(path: &std::path::Path) -> anyhow::Result<PlanarGraph> {
    use anyhow::Context;
    let g = GraphFile::read(path)
        .and_then(|f| f.to_graph())
        .with_context(|| format!("graph file {}", path.display()))?;
    Ok(g)
}

fn graph_check(file: &std::path::Path) -> Result<(), Failure> {
    let g = load_graph(file)?;
    let report = json!({
        "vertices": g.num_vertices(),
        "edges": g.num_edges(),
        "faces": g.num_faces(),
        "components": g.num_components(),
        "outer_faces": g.outer_faces(),
    });
    Output::stdout().json(&report)?;
    Ok(())
}

fn bessel(args: &BesselArgs) -> Result<(), Failure> {
    let rows: Vec<_> = args
        .beta
        .iter()
        .map(|&beta| {
            let values: Vec<_> = (0..=args.kmax)
                .map(|k| {
                    json!({
                        "k": k,
                        "scaled": bessel_i_scaled(k, beta),
                        "log": log_bessel_i(k, beta),
                        "turan_margin": turan_margin(k, beta),
                    })
                })
                .collect();
            json!({
                "beta": beta,
                "values": values,
                "lammers_margin": lammers_margin(beta),
                "triangulation_margin": lammers_triangulation_margin(beta),
            })
        })
        .collect();
    let report = json!({
        "lammers_threshold": lammers_threshold(),
        "triangulation_threshold": lammers_triangulation_threshold(),
        "betas": rows,
    });
    Output::to(args.out.as_deref()).json(&report)?;
    Ok(())
}

fn exact(args: &ExactArgs) -> Result<(), Failure> {
    let g = args.source.load()?;
    let cutoff = args.cutoff.unwrap_or_else(|| cutoff_for(&g, args.beta, 1e-12));
    let c = partition_and_correlators(&g, args.beta, args.a, args.b, args.k, cutoff)?;
    let report = json!({
        "beta": args.beta,
        "a": args.a,
        "b": args.b,
        "k": args.k,
        "cutoff": cutoff,
        "value": c.ratio,
        "lower": c.lower,
        "upper": c.upper,
        "width": c.width(),
    });
    Output::to(args.out.as_deref()).json(&report)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::read(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Graph {
            action: GraphAction::Check { file },
        } => graph_check(&file),
        Command::Bessel(a) => bessel(&a),
        Command::Exact(a) => exact(&a),
        Command::Verify(a) => {
            let seed = a.seed.or(file.seed);
            let trials = a.trials.or(file.trials).unwrap_or(verify::DEFAULT_TRIALS);
            let betas = a.beta.or(file.betas.clone()).unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
            let report = verify::run(a.suite, seed, trials, &betas)?;
            Output::to(a.out.as_deref()).json(&report)?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Command::Sample(a) => sample::run(&a, &file).map_err(Failure::Usage),
        Command::Bkt(a) => bkt::run(&a, &file).map_err(Failure::Usage),
    }
}

/// The error chain, skipping causes already quoted by the message above them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("XY_LOOPS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // ignore the error if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Cli;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
