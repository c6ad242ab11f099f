//! Finite-volume diagnostics around the BKT transition: boundary sums, cut sums,
//! correlation profiles and their decay shape.

mod fit;

pub use fit::{decay_fit, DecayFit, DecayModel, DecayPoint, FloorCheck, ModelFit};

use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::{lammers_triangulation_margin, lammers_triangulation_threshold};
use crate::current::dipole;
use crate::error::{Error, Result};
use crate::graph::{CutPath, PlanarGraph, VertexId};
use crate::inequalities::{exact_correlator, CenteredBox, Estimator};
use crate::samplers::{spin_mcmc_with, winding_and_height_stats, ChainSpec, Estimate, SpinConfig};

/// Vertices of the box with fewer than four lattice neighbours inside it.
pub fn box_boundary(bx: &CenteredBox) -> Vec<VertexId> {
    let mut out = Vec::new();
    for y in -bx.hy..=bx.hy {
        for x in -bx.hx..=bx.hx {
            if x.abs() == bx.hx || y.abs() == bx.hy {
                out.push(bx.vertex(x, y).expect("inside"));
            }
        }
    }
    out.sort_unstable();
    out
}

fn exact_sum(g: &PlanarGraph, beta: f64, pairs: &[(VertexId, VertexId)], power: f64) -> Result<Estimate> {
    let nv = g.num_vertices();
    let (mut s, mut w) = (0.0, 0.0);
    for &(a, b) in pairs {
        let c = exact_correlator(g, beta, &dipole(nv, a, b, 1))?;
        s += c.value.max(0.0).powf(power);
        w += power.abs() * c.upper.max(1e-300).powf(power - 1.0) * c.width();
    }
    Ok(Estimate {
        mean: s,
        std_error: w,
        ess: f64::INFINITY,
        n: 0,
    })
}

/// `φ_{G,β} = Σ_{w∈∂G} ⟨σ_0σ̄_w⟩` with the origin at the centre of the box.
/// Under Monte Carlo the sum is measured per sample, so its error accounts for
/// correlations between the terms.
pub fn phi(bx: &CenteredBox, beta: f64, estimator: &Estimator) -> Result<Estimate> {
    let o = bx.origin();
    let bd: Vec<VertexId> = box_boundary(bx).into_iter().filter(|&w| w != o).collect();
    let self_term = if bd.len() < box_boundary(bx).len() { 1.0 } else { 0.0 };
    if beta == 0.0 {
        return Ok(Estimate::exact(self_term, 0));
    }
    let g = &bx.graph;
    let mut est = match estimator {
        Estimator::Exact => {
            let pairs: Vec<_> = bd.iter().map(|&w| (o, w)).collect();
            exact_sum(g, beta, &pairs, 1.0)?
        }
        Estimator::Mcmc(spec) => {
            let e = spin_mcmc_with(g, beta, spec, true, |s: &SpinConfig| {
                vec![bd.iter().map(|&w| s.two_point(o, w, 1)).sum()]
            })?;
            e[0]
        }
    };
    est.mean += self_term;
    Ok(est)
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiPoint {
    pub half_width: i64,
    pub beta: f64,
    pub phi: Estimate,
}

/// Finite-size crossing of `φ = 1` over a family of boxes and a grid of β.
#[derive(Clone, Debug, Serialize)]
pub struct BetaBracket {
    /// Largest β at which some box certifies `φ < 1`.
    pub lo: Option<f64>,
    /// Smallest β at which every box certifies `φ ≥ 1`.
    pub hi: Option<f64>,
    pub sigmas: f64,
    pub table: Vec<PhiPoint>,
}

pub fn bracket_beta_c(boxes: &[CenteredBox], betas: &[f64], estimator: &Estimator, sigmas: f64) -> Result<BetaBracket> {
    let mut betas = betas.to_vec();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let jobs: Vec<(usize, f64)> = (0..boxes.len()).flat_map(|i| betas.iter().map(move |&b| (i, b))).collect();
    let table: Vec<PhiPoint> = jobs
        .par_iter()
        .map(|&(i, beta)| {
            Ok(PhiPoint {
                half_width: boxes[i].hx.max(boxes[i].hy),
                beta,
                phi: phi(&boxes[i], beta, estimator)?,
            })
        })
        .collect::<Result<_>>()?;
    let below = |p: &PhiPoint| p.phi.mean + sigmas * p.phi.std_error < 1.0;
    let above = |p: &PhiPoint| p.phi.mean - sigmas * p.phi.std_error >= 1.0;
    let lo = betas
        .iter()
        .copied()
        .filter(|&b| table.iter().any(|p| p.beta == b && below(p)))
        .fold(None, |m: Option<f64>, b| Some(m.map_or(b, |m| m.max(b))));
    let hi = betas
        .iter()
        .copied()
        .find(|&b| !boxes.is_empty() && table.iter().filter(|p| p.beta == b).all(above));
    Ok(BetaBracket {
        lo,
        hi,
        sigmas,
        table,
    })
}

/// Cut sum `Σ_{a∈L_+, b∈L_−} ⟨σ_aσ̄_b⟩^{2−ε}` next to `E|h|` at the cut's face.
#[derive(Clone, Debug, Serialize)]
pub struct ChiReport {
    pub epsilon: f64,
    pub chi: Estimate,
    /// `ε ≥ 2`: every term is a nonpositive power and the sum is not physical.
    pub degenerate: bool,
    pub abs_height: Option<Estimate>,
    /// `E|h| / χ^ε` when both are available.
    pub ratio: Option<f64>,
    /// Monte Carlo correlators below zero that were clamped before taking powers.
    pub clamped: usize,
}

pub fn chi_cut(
    bx: &CenteredBox,
    beta: f64,
    epsilon: f64,
    cut: &CutPath,
    estimator: &Estimator,
    height_spec: Option<&ChainSpec>,
) -> Result<ChiReport> {
    let g = &bx.graph;
    cut.validate(g)?;
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Argument(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    let power = 2.0 - epsilon;
    let degenerate = power <= 0.0;
    let pairs: Vec<(VertexId, VertexId)> = cut
        .plus_side
        .iter()
        .flat_map(|&a| cut.minus_side.iter().map(move |&b| (a, b)))
        .collect();
    let mut clamped = 0;
    let chi = if degenerate {
        // a zero-valued correlator is read as contributing 1 to the count when ε = 2
        Estimate::exact(pairs.len() as f64, 0)
    } else if beta == 0.0 {
        Estimate::exact(pairs.iter().filter(|p| p.0 == p.1).count() as f64, 0)
    } else {
        match estimator {
            Estimator::Exact => exact_sum(g, beta, &pairs, power)?,
            Estimator::Mcmc(spec) => {
                let est = spin_mcmc_with(g, beta, spec, true, |s: &SpinConfig| {
                    pairs.iter().map(|&(a, b)| s.two_point(a, b, 1)).collect()
                })?;
                let (mut m, mut v, mut ess) = (0.0, 0.0, f64::INFINITY);
                for e in &est {
                    if e.mean <= 0.0 {
                        clamped += 1;
                        continue;
                    }
                    m += e.mean.powf(power);
                    v += (power * e.mean.powf(power - 1.0) * e.std_error).powi(2);
                    ess = ess.min(e.ess);
                }
                Estimate {
                    mean: m,
                    std_error: v.sqrt(),
                    ess,
                    n: spec.samples,
                }
            }
        }
    };
    let abs_height = match height_spec {
        Some(spec) if beta > 0.0 => Some(winding_and_height_stats(g, beta, spec, cut.face_anchor, Some(cut))?.abs_height),
        Some(_) => Some(Estimate::exact(0.0, 0)),
        None => None,
    };
    let ratio = abs_height.as_ref().filter(|_| chi.mean > 0.0).map(|h| h.mean / chi.mean);
    Ok(ChiReport {
        epsilon,
        chi,
        degenerate,
        abs_height,
        ratio,
        clamped,
    })
}

/// Two-point functions on the `(n+1) × (n+1)` box averaged over every horizontal
/// and vertical pair at lattice distance `r = 1..=r_max`.
pub fn correlation_profile(n: usize, beta: f64, r_max: usize, spec: &ChainSpec) -> Result<Vec<DecayPoint>> {
    if r_max == 0 || r_max > n {
        return Err(Error::Argument(format!("r_max must lie in 1..={n}")));
    }
    let g = PlanarGraph::box_lattice(n, n, 1.0)?;
    let w = n + 1;
    let mut c = vec![0.0; w * w];
    let mut s = vec![0.0; w * w];
    let est = spin_mcmc_with(&g, beta, spec, true, |cfg: &SpinConfig| {
        for (v, t) in cfg.theta.iter().enumerate() {
            (s[v], c[v]) = t.sin_cos();
        }
        (1..=r_max)
            .map(|r| {
                let mut acc = 0.0;
                for y in 0..w {
                    for x in 0..w - r {
                        let (u, v) = (y * w + x, y * w + x + r);
                        acc += c[u] * c[v] + s[u] * s[v];
                        let (u, v) = (x * w + y, (x + r) * w + y);
                        acc += c[u] * c[v] + s[u] * s[v];
                    }
                }
                acc / (2 * w * (w - r)) as f64
            })
            .collect()
    })?;
    Ok(est
        .into_iter()
        .enumerate()
        .map(|(i, e)| DecayPoint {
            distance: (i + 1) as f64,
            value: e.mean,
            std_error: e.std_error,
            ess: e.ess,
        })
        .collect())
}

/// `(I_1(β/2)/I_0(β/2))² − 1/2`, the height-delocalisation margin after triangulating.
pub fn lammers_condition_triangulation(beta: f64) -> f64 {
    lammers_triangulation_margin(beta)
}

/// Root of [`lammers_condition_triangulation`] by bisection.
pub fn lammers_triangulation_root() -> f64 {
    lammers_triangulation_threshold()
}
