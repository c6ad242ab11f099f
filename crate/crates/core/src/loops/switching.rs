use std::collections::{HashMap, HashSet};

use num_rational::BigRational;
use num_traits::Zero;

use super::config::LoopConfig;
use super::count::enumerate_consistent;
use super::mlaw::m_law;
use crate::current::{
    correlator_enclosure, dipole, for_each_current_truncated, partition_function_truncated, weight_log,
    CorrelatorResult, Current, TruncatedSum, Truncation,
};
use crate::error::{Error, Result};
use crate::graph::{PlanarGraph, VertexId};
use crate::scalar::{factorial, Weight};

/// Currents lighter than this fraction of `Z^0` are bounded instead of expanded.
const PRUNE_REL: f64 = 1e-14;

/// Both sides of `⟨σ_a^{2k} σ̄_b^{2k}⟩ = E[(m)_k / ((m + k))_k]`, truncated at a common amplitude cap.
#[derive(Clone, Debug)]
pub struct SwitchReport {
    pub k: u32,
    pub amplitude_cap: u32,
    /// Ratio of current sums with its enclosure.
    pub current_side: CorrelatorResult,
    /// Loop-side expectation over the truncated set.
    pub loop_side: f64,
    pub loop_lower: f64,
    pub loop_upper: f64,
    /// `P(m_{a,b} > 0)` over the truncated set.
    pub p_positive: f64,
    /// `|Σ w·E[f(m)] − Z^φ_A|` relative to `Z^0_A`; zero up to rounding and pruned mass.
    pub truncated_gap: f64,
    /// Mass of currents bounded rather than expanded, relative to `Z^0_A`.
    pub pruned_mass: f64,
    pub currents_expanded: usize,
    /// `½P(m > 0) ≤ E[m/(m+1)] ≤ P(m > 0)` on every expanded current (k = 1 only).
    pub sandwich_holds: bool,
}

impl SwitchReport {
    /// Both enclosures overlap and the truncated sums agree.
    pub fn agrees(&self) -> bool {
        let slack = 1e-12;
        self.current_side.lower <= self.loop_upper + slack
            && self.loop_lower <= self.current_side.upper + slack
            && self.truncated_gap <= self.pruned_mass + 1e-12
    }

    /// The combined enclosure is too wide to decide at `tol`.
    pub fn inconclusive(&self, tol: f64) -> bool {
        !self.current_side.certifies(tol) || !(self.loop_upper - self.loop_lower <= tol)
    }
}

/// `(m)_k / ((m + k))_k`: falling over rising factorial.
fn falling_ratio(m: usize, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k as usize {
        if m < i + 1 {
            return 0.0;
        }
        r *= (m - i) as f64 / (m + k as usize - i) as f64;
    }
    r
}

/// Single switching, `k = 1`.
pub fn single_switch_verify(g: &PlanarGraph, beta: f64, a: VertexId, b: VertexId, cutoff: u32) -> Result<SwitchReport> {
    higher_power_verify(g, beta, a, b, 1, cutoff)
}

/// Compares `Z^{2k(δ_a − δ_b)}/Z^0` with the loop-side expectation, both
/// truncated to currents whose amplitudes are at most `cutoff`.
///
/// Path reversal keeps amplitudes, so the two truncated sums coincide
/// exactly; the enclosures account for everything beyond the cap.
pub fn higher_power_verify(
    g: &PlanarGraph,
    beta: f64,
    a: VertexId,
    b: VertexId,
    k: u32,
    cutoff: u32,
) -> Result<SwitchReport> {
    if a == b || a >= g.num_vertices() || b >= g.num_vertices() {
        return Err(Error::Argument("a and b must be distinct vertices of the graph".into()));
    }
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let trunc = Truncation::Amplitude(cutoff);
    let zero = vec![0i64; g.num_vertices()];
    let den = partition_function_truncated(g, beta, &zero, trunc)?;
    let num = if g.component_of(a) == g.component_of(b) {
        partition_function_truncated(g, beta, &dipole(g.num_vertices(), a, b, 2 * k as i64), trunc)?
    } else {
        TruncatedSum {
            value: 0.0,
            tail_bound: 0.0,
            log_scale: den.log_scale,
        }
    };
    let current_side = correlator_enclosure(num, den);

    let z0 = den.value;
    let threshold = PRUNE_REL * z0;
    let (mut rhs, mut pos, mut pruned) = (0.0, 0.0, 0.0);
    let mut expanded = 0usize;
    let mut sandwich = true;
    let mut failure = None;
    for_each_current_truncated(g, &zero, trunc, |n| {
        if failure.is_some() {
            return;
        }
        let w = (weight_log(g, n, beta) - den.log_scale).exp();
        if w < threshold {
            pruned += w;
            return;
        }
        let law = match m_law::<f64>(g, n, a, b) {
            Ok(l) => l,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        expanded += 1;
        let gk: f64 = law.iter().enumerate().map(|(m, p)| p * falling_ratio(m, k)).sum();
        let p: f64 = law.iter().skip(1).sum();
        if k == 1 && (gk > p * (1.0 + 1e-13) || gk < 0.5 * p * (1.0 - 1e-13)) {
            sandwich = false;
        }
        rhs += w * gk;
        pos += w * p;
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let shift = (num.log_scale - den.log_scale).exp();
    let t = den.tail_bound;
    Ok(SwitchReport {
        k,
        amplitude_cap: cutoff,
        current_side,
        loop_side: rhs / z0,
        loop_lower: rhs / (z0 + t),
        loop_upper: (rhs + pruned + t) / z0,
        p_positive: pos / z0,
        truncated_gap: (rhs - num.value * shift).abs() / z0,
        pruned_mass: pruned / z0,
        currents_expanded: expanded,
        sandwich_holds: sandwich,
    })
}

/// Outcome of checking path reversal configuration by configuration.
#[derive(Clone, Debug, Default)]
pub struct PathReversalReport {
    /// Amplitude vectors examined.
    pub multigraphs: usize,
    /// Pairs `(ω, γ)` with `γ` a path from `a` to `b`.
    pub pairs: usize,
    /// Every image lies in `L^{a,b}_0` with the same weight.
    pub sources_erased: bool,
    /// `m_{b,a}(ω′) = m_{b,a}(ω) + 1` and `m_{a,b}(ω) = m_{b,a}(ω) + 2`.
    pub m_shift: bool,
    /// Reversing the reversed path restores the pair.
    pub involution: bool,
    /// Distinct pairs have distinct images and every `(ω′, γ′)` is hit.
    pub bijective: bool,
    /// `|L^{a,b}_φ(M)| = Σ_{L^{a,b}_0(M)} m_{b,a}/(m_{b,a}+1)` in exact arithmetic.
    pub counting: bool,
    /// The same sum after cutting to `L^∅_0(M)`, weighted by `λ^{a,b}/λ^∅`.
    pub cutting: bool,
}

impl PathReversalReport {
    pub fn ok(&self) -> bool {
        self.sources_erased && self.m_shift && self.involution && self.bijective && self.counting && self.cutting
    }
}

fn config_key(cfg: &LoopConfig) -> (Vec<usize>, Vec<Option<usize>>) {
    (cfg.multigraph.copies.clone(), cfg.succ.clone())
}

/// Checks path reversal on every multigraph whose amplitudes are at most `cap`.
pub fn path_reversal_check(g: &PlanarGraph, a: VertexId, b: VertexId, cap: u32) -> Result<PathReversalReport> {
    if a == b || a >= g.num_vertices() || b >= g.num_vertices() {
        return Err(Error::Argument("a and b must be distinct vertices of the graph".into()));
    }
    let nv = g.num_vertices();
    let trunc = Truncation::Amplitude(cap);
    let mut groups: HashMap<Vec<u32>, (Vec<Current>, Vec<Current>)> = HashMap::new();
    let amps = |n: &Current| (0..g.num_edges()).map(|e| n.amplitude(e)).collect::<Vec<_>>();
    if g.component_of(a) == g.component_of(b) {
        for_each_current_truncated(g, &dipole(nv, a, b, 2), trunc, |n| {
            groups.entry(amps(n)).or_default().0.push(n.clone());
        })?;
    }
    for_each_current_truncated(g, &vec![0; nv], trunc, |n| {
        groups.entry(amps(n)).or_default().1.push(n.clone());
    })?;

    let mut rep = PathReversalReport {
        sources_erased: true,
        m_shift: true,
        involution: true,
        bijective: true,
        counting: true,
        cutting: true,
        ..Default::default()
    };
    let ab = [a, b];
    let mut keys: Vec<_> = groups.keys().cloned().collect();
    keys.sort();
    for key in keys {
        let (sourced, sourceless) = &groups[&key];
        rep.multigraphs += 1;
        let mut images = HashSet::new();
        let mut lhs = 0u64;
        for n in sourced {
            for cfg in enumerate_consistent(g, n, &ab)? {
                lhs += 1;
                let fwd = cfg.paths_between(g, a, b);
                let back = cfg.paths_between(g, b, a).len();
                if fwd.len() != back + 2 {
                    rep.m_shift = false;
                }
                for path in fwd {
                    rep.pairs += 1;
                    let img = cfg.reverse_path(g, &path)?;
                    let cur = img.current(g);
                    if crate::current::divergence(g, &cur).iter().any(|&d| d != 0)
                        || img.validate(g).is_err()
                        || (super::count::weight_lambda(g, &img, 1.0) - super::count::weight_lambda(g, &cfg, 1.0)).abs()
                            > 1e-12
                    {
                        rep.sources_erased = false;
                    }
                    if img.paths_between(g, b, a).len() != back + 1 {
                        rep.m_shift = false;
                    }
                    let rev: Vec<usize> = path.iter().rev().copied().collect();
                    if config_key(&img.reverse_path(g, &rev)?) != config_key(&cfg) {
                        rep.involution = false;
                    }
                    if !images.insert((config_key(&img), rev)) {
                        rep.bijective = false;
                    }
                }
            }
        }
        // right-hand side in exact units of λ^{a,b}(M)
        let mut rhs = BigRational::zero();
        let mut hits = 0usize;
        let mut rhs_pairs = 0usize;
        let mut cut_sum = BigRational::zero();
        let mut deg = vec![0u32; nv];
        for n in sourceless {
            for cfg in enumerate_consistent(g, n, &ab)? {
                let paths = cfg.paths_between(g, b, a);
                let m = paths.len() as u64;
                rhs_pairs += paths.len();
                for p in paths {
                    if images.contains(&(config_key(&cfg), p)) {
                        hits += 1;
                    }
                }
                if m > 0 {
                    rhs += BigRational::from_ratio(m, m + 1);
                }
            }
            for cfg in enumerate_consistent(g, n, &[])? {
                let m = cfg.count_m(g, b, a)? as u64;
                if m > 0 {
                    cut_sum += BigRational::from_ratio(m, m + 1);
                }
            }
            deg = cfg_degrees(g, n);
        }
        if hits != images.len() || rhs_pairs != images.len() {
            rep.bijective = false;
        }
        let lhs_r = BigRational::from_count(lhs);
        if lhs_r != rhs {
            rep.counting = false;
        }
        if !sourceless.is_empty() {
            // λ^{a,b} = λ^∅ · (deg_a/2)! (deg_b/2)!
            let f: BigRational = factorial::<BigRational>(deg[a] / 2) * factorial::<BigRational>(deg[b] / 2);
            if cut_sum != rhs * f {
                rep.cutting = false;
            }
        } else if !lhs_r.is_zero() {
            rep.counting = false;
        }
    }
    Ok(rep)
}

fn cfg_degrees(g: &PlanarGraph, n: &Current) -> Vec<u32> {
    let mut d = vec![0u32; g.num_vertices()];
    for e in 0..g.num_edges() {
        let (u, v) = g.endpoints(e);
        d[u] += n.amplitude(e);
        d[v] += n.amplitude(e);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;

    #[test]
    fn single_edge_matches_bessel_ratio() {
        let g = PlanarGraph::single_edge(1.0);
        for beta in [0.5, 1.0, 2.0] {
            let r = single_switch_verify(&g, beta, 0, 1, 30).unwrap();
            let exact = bessel_i_scaled::<f64>(2, beta) / bessel_i_scaled::<f64>(0, beta);
            assert!(r.agrees(), "{r:?}");
            assert!(!r.inconclusive(1e-6));
            assert!((r.loop_side - exact).abs() < 1e-12);
            assert!(r.sandwich_holds);
        }
    }

    #[test]
    fn second_power_on_single_edge() {
        let g = PlanarGraph::single_edge(1.0);
        let r = higher_power_verify(&g, 1.0, 0, 1, 2, 30).unwrap();
        let exact = bessel_i_scaled::<f64>(4, 1.0) / bessel_i_scaled::<f64>(0, 1.0);
        assert!((r.loop_side - exact).abs() < 1e-12);
        assert!(r.agrees());
    }

    #[test]
    fn four_cycle_agrees() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        for (a, b) in [(0, 1), (0, 2)] {
            let r = single_switch_verify(&g, 1.0, a, b, 22).unwrap();
            assert!(r.agrees(), "{r:?}");
            assert!(!r.inconclusive(1e-6), "{r:?}");
            assert!(r.truncated_gap <= r.pruned_mass + 1e-13, "{r:?}");
        }
    }

    #[test]
    fn disconnected_sides_vanish() {
        let g = PlanarGraph::path(4, 1.0).unwrap().remove_edges(&[1]).unwrap();
        let r = single_switch_verify(&g, 1.0, 0, 3, 20).unwrap();
        assert_eq!(r.current_side.ratio, 0.0);
        assert_eq!(r.loop_side, 0.0);
    }

    #[test]
    fn path_reversal_on_small_graphs() {
        let g = PlanarGraph::single_edge(1.0);
        let r = path_reversal_check(&g, 0, 1, 5).unwrap();
        assert!(r.ok(), "{r:?}");
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let r = path_reversal_check(&g, 0, 2, 2).unwrap();
        assert!(r.ok(), "{r:?}");
        assert!(r.pairs > 0);
    }
}
