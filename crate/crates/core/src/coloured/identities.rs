use crate::current::{
    correlator_enclosure, dipole, for_each_current_truncated, for_each_net_flow, partition_function,
    partition_function_truncated, partition_with_edge_moment, weight_log, CorrelatorResult, Current, SourceFunction,
    TruncatedSum, Truncation,
};
use crate::current::poisson_exceed;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, PlanarGraph, VertexId};
use crate::loops::{m_law, path_visit_expectation};
use crate::samplers::{quad_at, quad_correlator_at, QUAD_MAX_VERTICES};

const PRUNE_REL: f64 = 1e-14;

fn binomial_row(n: u32) -> Vec<f64> {
    let mut row = vec![1.0f64; n as usize + 1];
    for k in 1..n as usize {
        row[k] = row[k - 1] * (n as usize + 1 - k) as f64 / k as f64;
    }
    row
}

/// Splits of a current `n` into `r + b` with `δr = φ`.
///
/// Returns `Σ Π_h C(n_h, r_h)` and, when `edge` is given, the same sum
/// weighted by `r_f − b_f` and by `r_b − b_b` on that edge.
fn split_sums(g: &PlanarGraph, n: &Current, phi: &SourceFunction, edge: Option<EdgeId>) -> Result<(f64, f64, f64)> {
    let ne = g.num_edges();
    let cap = (0..g.num_half_edges()).map(|h| n.get(h)).max().unwrap_or(0) as i64;
    // per edge and net flow d: (Σ C C, Σ C C (2r_f − n_f), Σ C C (2r_b − n_b))
    let mut tables = Vec::with_capacity(ne);
    for e in 0..ne {
        let (nf, nb) = (n.get(2 * e), n.get(2 * e + 1));
        let (cf, cb) = (binomial_row(nf), binomial_row(nb));
        let mut t = vec![(0.0, 0.0, 0.0); (2 * cap + 1) as usize];
        for rf in 0..=nf {
            for rb in 0..=nb {
                let d = rf as i64 - rb as i64;
                let w = cf[rf as usize] * cb[rb as usize];
                let slot = &mut t[(d + cap) as usize];
                slot.0 += w;
                slot.1 += w * (2.0 * rf as f64 - nf as f64);
                slot.2 += w * (2.0 * rb as f64 - nb as f64);
            }
        }
        tables.push(t);
    }
    let (mut k, mut kf, mut kb) = (0.0, 0.0, 0.0);
    for_each_net_flow(g, phi, cap, |d| {
        let mut base = 1.0;
        for e in 0..ne {
            if Some(e) != edge {
                base *= tables[e][(d[e] + cap) as usize].0;
            }
        }
        match edge {
            None => k += base,
            Some(e) => {
                let t = tables[e][(d[e] + cap) as usize];
                k += base * t.0;
                kf += base * t.1;
                kb += base * t.2;
            }
        }
    })?;
    Ok((k, kf, kb))
}

/// Both sides of `⟨σ_a σ̄_b⟩² = Ẽ[m_{a,b}/(m_{a,b}+1)]`.
#[derive(Clone, Debug)]
pub struct DoubleSwitchReport {
    pub amplitude_cap: u32,
    /// `⟨σ_a σ̄_b⟩` from current sums with its enclosure.
    pub correlator: CorrelatorResult,
    pub current_side: f64,
    pub current_lower: f64,
    pub current_upper: f64,
    pub loop_side: f64,
    pub loop_lower: f64,
    pub loop_upper: f64,
    pub p_positive: f64,
    /// Truncated pair sums on both sides of path switching, relative to `(Z^0)²`.
    pub truncated_gap: f64,
    pub pruned_mass: f64,
    pub currents_expanded: usize,
    pub sandwich_holds: bool,
}

impl DoubleSwitchReport {
    pub fn agrees(&self) -> bool {
        let slack = 1e-12;
        self.current_lower <= self.loop_upper + slack
            && self.loop_lower <= self.current_upper + slack
            && self.truncated_gap <= self.pruned_mass + 1e-12
    }

    pub fn inconclusive(&self, tol: f64) -> bool {
        !(self.current_upper - self.current_lower <= tol) || !(self.loop_upper - self.loop_lower <= tol)
    }
}

/// Pairs of currents whose summed amplitude exceeds `cap` somewhere, relative to `e^{2βΣJ}`.
fn pair_tail(g: &PlanarGraph, beta: f64, cap: u32) -> f64 {
    (0..g.num_edges())
        .map(|e| poisson_exceed(2.0 * beta * g.coupling(e), cap))
        .sum()
}

/// Verifies double switching with every summed amplitude `|r + b|_e ≤ cutoff`.
///
/// The loop side sums over total currents `n = r + b`: pairs with a given
/// total weigh `w_β(n)·Σ Π_h C(n_h, r_h)`, and because pairings do not see
/// colours, `m_{a,b}` has the same law as for the uncoloured current `n`.
pub fn double_switch_verify(
    g: &PlanarGraph,
    beta: f64,
    a: VertexId,
    b: VertexId,
    cutoff: u32,
) -> Result<DoubleSwitchReport> {
    let nv = g.num_vertices();
    if a == b || a >= nv || b >= nv {
        return Err(Error::Argument("a and b must be distinct vertices of the graph".into()));
    }
    let trunc = Truncation::Amplitude(cutoff);
    let zero = vec![0i64; nv];
    let connected = g.component_of(a) == g.component_of(b);
    let den = partition_function_truncated(g, beta, &zero, trunc)?;
    let num = if connected {
        partition_function_truncated(g, beta, &dipole(nv, a, b, 1), trunc)?
    } else {
        TruncatedSum {
            value: 0.0,
            tail_bound: 0.0,
            log_scale: den.log_scale,
        }
    };
    let correlator = correlator_enclosure(num, den);
    let scale = 2.0 * den.log_scale;

    // switched side: pairs of sourced currents
    let phi = dipole(nv, a, b, 1);
    let mut lhs = 0.0;
    if connected {
        let mut err = None;
        for_each_current_truncated(g, &dipole(nv, a, b, 2), trunc, |n| {
            if err.is_some() {
                return;
            }
            match split_sums(g, n, &phi, None) {
                Ok((k, _, _)) => lhs += (weight_log(g, n, beta) - scale).exp() * k,
                Err(e) => err = Some(e),
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
    }

    let (mut z2, mut rhs, mut pos, mut pruned) = (0.0, 0.0, 0.0, 0.0);
    let mut items = Vec::new();
    let mut err = None;
    for_each_current_truncated(g, &zero, trunc, |n| {
        if err.is_some() {
            return;
        }
        match split_sums(g, n, &zero, None) {
            Ok((k, _, _)) => {
                let w = (weight_log(g, n, beta) - scale).exp() * k;
                z2 += w;
                items.push((n.clone(), w));
            }
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let threshold = PRUNE_REL * z2;
    let mut expanded = 0;
    let mut sandwich = true;
    for (n, w) in &items {
        if *w < threshold {
            pruned += w;
            continue;
        }
        let law = m_law::<f64>(g, n, a, b)?;
        expanded += 1;
        let gk: f64 = law.iter().enumerate().map(|(m, p)| p * m as f64 / (m as f64 + 1.0)).sum();
        let p: f64 = law.iter().skip(1).sum();
        if gk > p * (1.0 + 1e-13) || gk < 0.5 * p * (1.0 - 1e-13) {
            sandwich = false;
        }
        rhs += w * gk;
        pos += w * p;
    }
    let t2 = pair_tail(g, beta, cutoff);
    let (lo, hi) = (correlator.lower, correlator.upper);
    Ok(DoubleSwitchReport {
        amplitude_cap: cutoff,
        correlator,
        current_side: correlator.ratio * correlator.ratio,
        current_lower: lo * lo,
        current_upper: hi * hi,
        loop_side: rhs / z2,
        loop_lower: rhs / (z2 + t2),
        loop_upper: (rhs + pruned + t2) / z2,
        p_positive: pos / z2,
        truncated_gap: (rhs - lhs).abs() / z2,
        pruned_mass: pruned / z2,
        currents_expanded: expanded,
        sandwich_holds: sandwich,
    })
}

/// Interval for `⟨Π σ⟩ = Z^φ/Z^0` from current sums with a per-directed cutoff.
fn correlator_interval(g: &PlanarGraph, beta: f64, phi: &SourceFunction, cutoff: u32) -> Result<CorrelatorResult> {
    let nv = g.num_vertices();
    let den = partition_function(g, beta, &vec![0; nv], cutoff)?;
    if phi.iter().all(|&x| x == 0) {
        return Ok(correlator_enclosure(den, den));
    }
    let mut comp_sum = vec![0i64; g.num_components()];
    for (v, &x) in phi.iter().enumerate() {
        comp_sum[g.component_of(v)] += x;
    }
    let num = if comp_sum.iter().any(|&s| s != 0) {
        TruncatedSum {
            value: 0.0,
            tail_bound: 0.0,
            log_scale: den.log_scale,
        }
    } else {
        partition_function(g, beta, phi, cutoff)?
    };
    Ok(correlator_enclosure(num, den))
}

/// Margins of `⟨σ_aσ̄_b⟩ ≥ ⟨σ_aσ̄_c⟩⟨σ_cσ̄_b⟩ ≥ ⟨σ_aσ_bσ̄_c²⟩`.
#[derive(Clone, Debug)]
pub struct FerromagnetReport {
    pub ab: CorrelatorResult,
    pub ac: CorrelatorResult,
    pub cb: CorrelatorResult,
    pub abcc: CorrelatorResult,
    /// `⟨σ_aσ̄_b⟩ − ⟨σ_aσ̄_c⟩⟨σ_cσ̄_b⟩` at the point estimates, with a certified interval.
    pub first: f64,
    pub first_lower: f64,
    pub first_upper: f64,
    /// `⟨σ_aσ̄_c⟩⟨σ_cσ̄_b⟩ − ⟨σ_aσ_bσ̄_c²⟩`.
    pub second: f64,
    pub second_lower: f64,
    pub second_upper: f64,
}

impl FerromagnetReport {
    /// Neither margin is certified below `−tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.first_upper >= -tol && self.second_upper >= -tol
    }
}

pub fn ferromagnet_verify(
    g: &PlanarGraph,
    beta: f64,
    a: VertexId,
    b: VertexId,
    c: VertexId,
    cutoff: u32,
) -> Result<FerromagnetReport> {
    let nv = g.num_vertices();
    if a >= nv || b >= nv || c >= nv {
        return Err(Error::Argument("vertex out of range".into()));
    }
    let mut pc = vec![0i64; nv];
    pc[a] += 1;
    pc[b] += 1;
    pc[c] -= 2;
    let ab = correlator_interval(g, beta, &dipole(nv, a, b, 1), cutoff)?;
    let ac = correlator_interval(g, beta, &dipole(nv, a, c, 1), cutoff)?;
    let cb = correlator_interval(g, beta, &dipole(nv, c, b, 1), cutoff)?;
    let abcc = correlator_interval(g, beta, &pc, cutoff)?;
    Ok(FerromagnetReport {
        first: ab.ratio - ac.ratio * cb.ratio,
        first_lower: ab.lower - ac.upper * cb.upper,
        first_upper: ab.upper - ac.lower * cb.lower,
        second: ac.ratio * cb.ratio - abcc.ratio,
        second_lower: ac.lower * cb.lower - abcc.upper,
        second_upper: ac.upper * cb.upper - abcc.lower,
        ab,
        ac,
        cb,
        abcc,
    })
}

/// Three evaluations of `∂⟨σ_aσ̄_b⟩/∂J_e`.
#[derive(Clone, Debug)]
pub struct DerivativeReport {
    /// Centered finite difference of the correlator.
    pub finite_difference: f64,
    pub step: f64,
    /// `J_e^{-1}(Z^0 Σ_r w(r)|r|_e − Z^{δ_a−δ_b} Σ_b w(b)|b|_e)/(Z^0)²`.
    pub current_side: f64,
    /// `J_e^{-1} Σ λ̃(R_e − B_e) / (Z^0)²` over coloured configurations.
    pub loop_side: f64,
    /// Bound on the loop-side truncation error.
    pub loop_error_bound: f64,
    pub amplitude_cap: u32,
}

impl DerivativeReport {
    pub fn residual(&self) -> f64 {
        (self.finite_difference - self.loop_side).abs()
    }
}

fn correlator_at(g: &PlanarGraph, beta: f64, a: VertexId, b: VertexId, points: usize) -> Result<f64> {
    if g.num_vertices() <= QUAD_MAX_VERTICES {
        quad_at(g, beta, &[(a, 1), (b, -1)], points)
    } else {
        let cutoff = crate::current::cutoff_for(g, beta, 1e-15);
        Ok(correlator_interval(g, beta, &dipole(g.num_vertices(), a, b, 1), cutoff)?.ratio)
    }
}

/// Compares a finite difference of `⟨σ_aσ̄_b⟩` in `J_e` with the coloured
/// loop expression for the derivative, truncated at summed amplitude `cutoff`.
///
/// The loop side groups configurations by the total current `n = r + b`.
/// Given `n`, the path from `a` to `b` has a colour-blind law, and the colours
/// of the copies of `e` running one way are exchangeable, so
/// `E[R_e − B_e] = Σ_dir (r_dir − b_dir)·E[visits along dir]/n_dir`.
pub fn derivative_identity_check(
    g: &PlanarGraph,
    beta: f64,
    a: VertexId,
    b: VertexId,
    e: EdgeId,
    cutoff: u32,
) -> Result<DerivativeReport> {
    let nv = g.num_vertices();
    if a == b || a >= nv || b >= nv || e >= g.num_edges() {
        return Err(Error::Argument("need distinct vertices a, b and a valid edge".into()));
    }
    let je = g.coupling(e);
    if je <= 0.0 {
        return Err(Error::Argument("the differentiated coupling must be positive".into()));
    }
    // finite difference
    let points = if nv <= QUAD_MAX_VERTICES {
        2 * quad_correlator_at(g, beta, &[(a, 1), (b, -1)])?.1.max(16)
    } else {
        0
    };
    let step = 1e-4 * je;
    let with = |j: f64| -> Result<PlanarGraph> {
        let mut c = g.couplings().to_vec();
        c[e] = j;
        g.with_couplings(c)
    };
    let fp = correlator_at(&with(je + step)?, beta, a, b, points)?;
    let fm = correlator_at(&with(je - step)?, beta, a, b, points)?;
    let finite_difference = (fp - fm) / (2.0 * step);

    let trunc = Truncation::Amplitude(cutoff);
    let zero = vec![0i64; nv];
    let phi = dipole(nv, a, b, 1);
    let connected = g.component_of(a) == g.component_of(b);
    let (z0, m0) = partition_with_edge_moment(g, beta, &zero, trunc, e)?;
    let (zphi, mphi) = if connected {
        partition_with_edge_moment(g, beta, &phi, trunc, e)?
    } else {
        (
            TruncatedSum {
                value: 0.0,
                tail_bound: 0.0,
                log_scale: z0.log_scale,
            },
            0.0,
        )
    };
    let current_side = (z0.value * mphi - zphi.value * m0) / (je * z0.value * z0.value);

    let scale = 2.0 * z0.log_scale;
    let (mut acc, mut pruned) = (0.0, 0.0);
    let z2 = z0.value * z0.value;
    if connected {
        let mut items = Vec::new();
        for_each_current_truncated(g, &phi, trunc, |n| items.push(n.clone()))?;
        for n in &items {
            let w = (weight_log(g, n, beta) - scale).exp();
            let (k, kf, kb) = split_sums(g, n, &phi, Some(e))?;
            let amp = n.amplitude(e) as f64;
            if w * k * amp < PRUNE_REL * z2 {
                pruned += w * k * amp;
                continue;
            }
            if amp == 0.0 {
                continue;
            }
            let (vf, vb): (f64, f64) = path_visit_expectation(g, n, a, b, e)?;
            let (nf, nb) = (n.get(2 * e) as f64, n.get(2 * e + 1) as f64);
            let mut t = 0.0;
            if nf > 0.0 {
                t += kf * vf / nf;
            }
            if nb > 0.0 {
                t += kb * vb / nb;
            }
            acc += w * t;
        }
    }
    // pairs beyond the cap: |R − B| ≤ |r + b|_e, and E[N; N ≥ A] = λ P(N ≥ A − 1) for N ~ Pois(λ)
    let mut tail = 0.0;
    for f in 0..g.num_edges() {
        let lam = 2.0 * beta * g.coupling(f);
        let lam_e = 2.0 * beta * je;
        tail += if f == e {
            lam_e * poisson_exceed(lam_e, cutoff.saturating_sub(1))
        } else {
            lam_e * poisson_exceed(lam, cutoff)
        };
    }
    let t0 = z0.tail_bound;
    let loop_side = acc / (je * z2);
    // the true (Z^0)² lies in [z2, (z0 + t0)²]
    let numerator_err = (pruned + tail) / je;
    let loop_error_bound = numerator_err / z2 + loop_side.abs() * (1.0 - z2 / ((z0.value + t0) * (z0.value + t0)));
    Ok(DerivativeReport {
        finite_difference,
        step,
        current_side,
        loop_side,
        loop_error_bound,
        amplitude_cap: cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;

    fn bessel_ratio(k: i64, x: f64) -> f64 {
        bessel_i_scaled::<f64>(k, x) / bessel_i_scaled::<f64>(0, x)
    }

    #[test]
    fn double_switching_single_edge() {
        let g = PlanarGraph::single_edge(1.0);
        for beta in [0.5, 1.0, 2.0] {
            let r = double_switch_verify(&g, beta, 0, 1, 40).unwrap();
            let exact = bessel_ratio(1, beta).powi(2);
            assert!(r.agrees(), "{r:?}");
            assert!((r.loop_side - exact).abs() < 1e-10, "{beta}: {} {exact}", r.loop_side);
            assert!(r.sandwich_holds);
        }
    }

    #[test]
    fn double_switching_four_cycle() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let r = double_switch_verify(&g, 1.0, 0, 1, 24).unwrap();
        assert!(r.agrees(), "{r:?}");
        assert!(!r.inconclusive(1e-6), "{r:?}");
        assert!((r.loop_side - r.current_side).abs() < 1e-8);
    }

    #[test]
    fn ferromagnet_margins() {
        // on a tree the angle increments are independent, so both margins vanish
        let g = PlanarGraph::path(2, 1.0).unwrap();
        let r = ferromagnet_verify(&g, 1.0, 0, 2, 1, 30).unwrap();
        assert!(r.first.abs() < 1e-14 && r.second.abs() < 1e-14 && r.holds(1e-12), "{r:?}");
        let r = ferromagnet_verify(&g, 1.0, 0, 2, 0, 30).unwrap();
        assert!(r.first.abs() < 1e-14);
        let g = PlanarGraph::cycle(3, 1.0).unwrap();
        let r = ferromagnet_verify(&g, 2.0, 0, 1, 2, 40).unwrap();
        assert!(r.first > 1e-3 && r.second > 1e-3 && r.holds(1e-12), "{r:?}");
    }

    #[test]
    fn derivative_on_single_edge() {
        let g = PlanarGraph::single_edge(1.0);
        let r = derivative_identity_check(&g, 1.0, 0, 1, 0, 30).unwrap();
        // d/dJ I_1(βJ)/I_0(βJ) = β(1 − ρ/x − ρ²) with ρ = I_1/I_0, x = βJ
        let rho = bessel_ratio(1, 1.0);
        let exact = 1.0 - rho - rho * rho;
        assert!((r.finite_difference - exact).abs() < 1e-8, "{r:?}");
        assert!((r.current_side - exact).abs() < 1e-10, "{r:?}");
        assert!((r.loop_side - exact).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn derivative_on_pendant_edge_vanishes() {
        let g = PlanarGraph::path(2, 1.0).unwrap();
        let r = derivative_identity_check(&g, 1.0, 0, 1, 1, 24).unwrap();
        assert!(r.finite_difference.abs() < 1e-8);
        assert!(r.loop_side.abs() < 1e-8, "{r:?}");
    }
}
