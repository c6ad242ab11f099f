//! `bkt`: boundary sums, cut sums and decay fits on centred boxes.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use xy_loops::bkt::{chi_cut, correlation_profile, decay_fit, phi, DecayModel};
use xy_loops::inequalities::{CenteredBox, Estimator};
use xy_loops::samplers::ChainSpec;
use xy_loops::CutPath;

use crate::config::FileConfig;
use crate::output::{num, Output, CSV_HEADER};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CutKind {
    /// Straight vertical line through the face next to the centre.
    Vertical,
}

#[derive(Args, Debug)]
pub struct BktArgs {
    /// Odd side lengths, in vertices, of the centred boxes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub boxes: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = CutKind::Vertical)]
    pub cut: CutKind,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Exact correlators instead of Monte Carlo; only feasible on tiny boxes.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Inner face whose lower-left corner is the box centre.
fn centre_face(bx: &CenteredBox) -> anyhow::Result<usize> {
    let g = &bx.graph;
    let o = g.coord(bx.origin()).context("box without coordinates")?;
    g.inner_faces()
        .into_iter()
        .find(|&f| {
            g.face_centroid(f)
                .is_some_and(|c| (c[0] - o[0] - 0.5).abs() < 1e-9 && (c[1] - o[1] - 0.5).abs() < 1e-9)
        })
        .context("no face next to the centre")
}

pub fn run(args: &BktArgs, file: &FileConfig) -> anyhow::Result<()> {
    let betas = args.betas.clone().or(file.betas.clone()).context("give --betas")?;
    let epsilon = args.epsilon.or(file.epsilon).unwrap_or(0.5);
    let seed = args
        .seed
        .or(file.seed)
        .context("bkt samples Monte Carlo chains: pass --seed or set `seed` in the config file")?;
    let spec = ChainSpec::new(
        seed,
        args.burnin.or(file.burnin).unwrap_or(1000),
        args.samples.or(file.samples).unwrap_or(10_000),
        args.thin.or(file.thin).unwrap_or(1),
    );
    spec.validate()?;
    let estimator = if args.exact { Estimator::Exact } else { Estimator::Mcmc(spec) };
    for &l in &args.boxes {
        if l < 3 || l % 2 == 0 {
            bail!("box sides must be odd and at least 3, got {l}");
        }
    }

    let mut csv = format!("{CSV_HEADER}\n");
    writeln!(csv, "# epsilon={epsilon} seed={seed} burnin={} samples={} thin={}", spec.burn_in, spec.samples, spec.thinning)?;
    csv.push_str("beta,box,phi,phi_se,chi,chi_se,Eabsh,Eabsh_se,fit_model,fit_param,fit_residual\n");
    for &l in &args.boxes {
        let h = (l - 1) / 2;
        let bx = CenteredBox::new(h, h, 1.0)?;
        let cut = match args.cut {
            CutKind::Vertical => CutPath::vertical_through(&bx.graph, centre_face(&bx)?)?,
        };
        for &beta in &betas {
            let p = phi(&bx, beta, &estimator)?;
            let c = chi_cut(&bx, beta, epsilon, &cut, &estimator, Some(&spec))?;
            let absh = c.abs_height.expect("height chain requested");
            // four distances are the least a two-parameter fit can be judged on
            let fit = if l - 1 >= 8 && beta > 0.0 {
                let points = correlation_profile(l - 1, beta, (l - 1) / 2, &spec)?;
                decay_fit(&points).ok()
            } else {
                None
            };
            let (model, param, resid) = match &fit {
                Some(f) => {
                    let s = f.selected_fit();
                    let m = match s.model {
                        DecayModel::Exponential => "exponential",
                        DecayModel::Power => "power",
                    };
                    (m.to_string(), num(s.param), num(s.residual))
                }
                None => ("none".into(), "nan".into(), "nan".into()),
            };
            writeln!(
                csv,
                "{beta},{l},{},{},{},{},{},{},{model},{param},{resid}",
                num(p.mean),
                num(p.std_error),
                num(c.chi.mean),
                num(c.chi.std_error),
                num(absh.mean),
                num(absh.std_error),
            )?;
        }
    }
    Output::to(args.out.as_deref()).write(csv.as_bytes())
}
