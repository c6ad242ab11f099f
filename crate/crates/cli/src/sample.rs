//! `sample`: Monte Carlo estimates with standard errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use xy_loops::samplers::{estimate_two_point_sq, spin_mcmc_with, winding_and_height_stats, ChainSpec, Estimate, SpinConfig};
use xy_loops::PlanarGraph;

use crate::config::FileConfig;
use crate::output::{num, write_atomic, Output, CSV_HEADER};
use crate::GraphSource;

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub beta: f64,
    /// Required for every sampling run, here or in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Comma-separated list: `energy`, `tp:A:B[:K]`, `sq:A:B`, `absh:F`.
    /// Vertices are labels or indices, faces are indices.
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    /// Spin updates by heat bath only, without cluster moves.
    #[arg(long)]
    pub no_clusters: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-sample spin observables as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// What `sample` can measure.
#[derive(Clone, Debug, PartialEq)]
pub enum Obs {
    Energy,
    TwoPoint { a: usize, b: usize, k: i64 },
    /// `⟨σ_a²σ̄_b²⟩` through the height chain and loop augmentation.
    Square { a: usize, b: usize },
    /// `E|h(F)|` through the height chain.
    AbsHeight { face: usize },
}

fn vertex(g: &PlanarGraph, tok: &str) -> anyhow::Result<usize> {
    if let Some(v) = g.labels().iter().position(|l| l == tok) {
        return Ok(v);
    }
    match tok.parse::<usize>() {
        Ok(v) if v < g.num_vertices() => Ok(v),
        _ => bail!("unknown vertex `{tok}`"),
    }
}

pub fn parse_observable(g: &PlanarGraph, s: &str) -> anyhow::Result<Obs> {
    let parts: Vec<&str> = s.split(':').collect();
    let obs = match parts.as_slice() {
        ["energy"] => Obs::Energy,
        ["tp", a, b] => Obs::TwoPoint {
            a: vertex(g, a)?,
            b: vertex(g, b)?,
            k: 1,
        },
        ["tp", a, b, k] => Obs::TwoPoint {
            a: vertex(g, a)?,
            b: vertex(g, b)?,
            k: k.parse().with_context(|| format!("bad power in `{s}`"))?,
        },
        ["sq", a, b] => Obs::Square {
            a: vertex(g, a)?,
            b: vertex(g, b)?,
        },
        ["absh", f] => {
            let face: usize = f.parse().with_context(|| format!("bad face in `{s}`"))?;
            if face >= g.num_faces() {
                bail!("face {face} out of range");
            }
            Obs::AbsHeight { face }
        }
        _ => bail!("unknown observable `{s}`"),
    };
    Ok(obs)
}

fn energy(g: &PlanarGraph, s: &SpinConfig) -> f64 {
    -(0..g.num_edges())
        .map(|e| {
            let (u, v) = g.endpoints(e);
            g.coupling(e) * (s.theta[u] - s.theta[v]).cos()
        })
        .sum::<f64>()
}

pub fn run(args: &SampleArgs, file: &FileConfig) -> anyhow::Result<()> {
    let g = args.source.load()?;
    let seed = args
        .seed
        .or(file.seed)
        .context("sampling needs a seed: pass --seed or set `seed` in the config file")?;
    let spec = ChainSpec::new(
        seed,
        args.burnin.or(file.burnin).unwrap_or(1000),
        args.samples.or(file.samples).unwrap_or(10_000),
        args.thin.or(file.thin).unwrap_or(1),
    );
    spec.validate()?;
    if !(args.beta.is_finite() && args.beta >= 0.0) {
        bail!("beta must be finite and nonnegative");
    }
    let names: Vec<String> = match &args.observables {
        Some(v) => v.clone(),
        None => vec!["energy".into(), format!("tp:0:{}", g.num_vertices() - 1)],
    };
    let obs: Vec<Obs> = names.iter().map(|s| parse_observable(&g, s)).collect::<anyhow::Result<_>>()?;

    let spin: Vec<usize> = (0..obs.len())
        .filter(|&i| matches!(obs[i], Obs::Energy | Obs::TwoPoint { .. }))
        .collect();
    let mut results: Vec<Option<Estimate>> = vec![None; obs.len()];
    let mut trace = String::new();
    if !spin.is_empty() {
        let mut index = 0usize;
        let est = spin_mcmc_with(&g, args.beta, &spec, !args.no_clusters, |s: &SpinConfig| {
            let vals: Vec<f64> = spin
                .iter()
                .map(|&i| match obs[i] {
                    Obs::Energy => energy(&g, s),
                    Obs::TwoPoint { a, b, k } => s.two_point(a, b, k),
                    _ => unreachable!(),
                })
                .collect();
            if args.trace.is_some() {
                let row: Vec<String> = vals.iter().map(|&v| num(v)).collect();
                let _ = writeln!(trace, "{{\"sample\":{index},\"values\":[{}]}}", row.join(","));
                index += 1;
            }
            vals
        })?;
        for (&i, e) in spin.iter().zip(est) {
            results[i] = Some(e);
        }
    }
    for (i, o) in obs.iter().enumerate() {
        results[i] = match *o {
            Obs::Square { a, b } => Some(estimate_two_point_sq(&g, args.beta, a, b, &spec)?),
            Obs::AbsHeight { face } => Some(winding_and_height_stats(&g, args.beta, &spec, face, None)?.abs_height),
            _ => continue,
        };
    }

    let mut csv = format!("{CSV_HEADER}\n");
    writeln!(
        csv,
        "# beta={} seed={} burnin={} samples={} thin={}",
        args.beta, spec.seed, spec.burn_in, spec.samples, spec.thinning
    )?;
    csv.push_str("observable,mean,stderr,ess\n");
    for (name, e) in names.iter().zip(&results) {
        let e = e.as_ref().expect("every observable measured");
        writeln!(csv, "{},{},{},{}", name, num(e.mean), num(e.std_error), num(e.ess))?;
    }
    if let Some(p) = &args.trace {
        let head: Vec<String> = spin.iter().map(|&i| format!("\"{}\"", names[i])).collect();
        let body = format!("{{\"observables\":[{}]}}\n{trace}", head.join(","));
        write_atomic(p, body.as_bytes())?;
    }
    Output::to(args.out.as_deref()).write(csv.as_bytes())
}
