use super::config::{LoopConfig, LoopMultigraph};
use crate::current::{divergence, weight_log, Current};
use crate::error::{Error, Result};
use crate::graph::{PlanarGraph, VertexId};
use crate::scalar::{factorial, ln_factorial, Weight};
use std::collections::HashMap;
use std::sync::Mutex;

/// Largest configuration count [`enumerate_consistent`] will materialize.
pub const EXPLICIT_GUARD: f64 = 2.0e6;
const MAX_COPIES: usize = 24;

fn source_mask(g: &PlanarGraph, s: &[VertexId]) -> Vec<bool> {
    let mut mask = vec![false; g.num_vertices()];
    for &v in s {
        mask[v] = true;
    }
    mask
}

fn supports_sources(g: &PlanarGraph, n: &Current, mask: &[bool]) -> bool {
    divergence(g, n).iter().zip(mask).all(|(&d, &m)| d == 0 || m)
}

/// `log λ^S_β` of a configuration; depends only on the multigraph and `S`.
pub fn weight_lambda(g: &PlanarGraph, cfg: &LoopConfig, beta: f64) -> f64 {
    let deg = cfg.multigraph.degrees(g);
    let m = cfg.multigraph.edge_counts(g);
    let mut acc = 0.0;
    for v in 0..g.num_vertices() {
        if !cfg.source_set[v] {
            debug_assert!(deg[v] % 2 == 0);
            acc -= ln_factorial::<f64>(deg[v] as u64 / 2);
        }
    }
    for (e, &me) in m.iter().enumerate() {
        if me > 0 {
            acc += me as f64 * (beta * g.coupling(e) / 2.0).ln() - ln_factorial::<f64>(me as u64);
        }
    }
    acc
}

/// `λ^S_β` in the scalar `W`.
pub fn weight_lambda_exact<W: Weight>(g: &PlanarGraph, cfg: &LoopConfig, beta: &W) -> W {
    let deg = cfg.multigraph.degrees(g);
    let m = cfg.multigraph.edge_counts(g);
    let mut acc = W::one();
    for v in 0..g.num_vertices() {
        if !cfg.source_set[v] {
            acc = acc / factorial::<W>(deg[v] / 2);
        }
    }
    let half = W::from_ratio(1, 2);
    for (e, &me) in m.iter().enumerate() {
        let x = beta.clone() * W::from_real(g.coupling(e)) * half.clone();
        acc = acc * x.powu(me) / factorial::<W>(me);
    }
    acc
}

/// `|L^S_n|` from the orientation and pairing counts.
pub fn configuration_count(g: &PlanarGraph, n: &Current, s: &[VertexId]) -> f64 {
    let mask = source_mask(g, s);
    if !supports_sources(g, n, &mask) {
        return 0.0;
    }
    let mut log = 0.0;
    for e in 0..g.num_edges() {
        let (a, b) = (n.get(2 * e) as u64, n.get(2 * e + 1) as u64);
        log += ln_factorial::<f64>(a + b) - ln_factorial::<f64>(a) - ln_factorial::<f64>(b);
    }
    let deg = LoopMultigraph::from_current(n).degrees(g);
    for v in 0..g.num_vertices() {
        if !mask[v] {
            log += ln_factorial::<f64>(deg[v] as u64 / 2);
        }
    }
    log.exp().round()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(k, &mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Subsets of `0..m` of size `r`, as bit masks.
fn subsets(m: u32, r: u32) -> Vec<u32> {
    (0u32..(1u32 << m)).filter(|x| x.count_ones() == r).collect()
}

/// Every configuration in `L^S_n`: all orientations of the labelled copies
/// consistent with `n`, times all pairings at vertices outside `S`.
pub fn enumerate_consistent(g: &PlanarGraph, n: &Current, s: &[VertexId]) -> Result<Vec<LoopConfig>> {
    let mask = source_mask(g, s);
    if !supports_sources(g, n, &mask) {
        return Ok(Vec::new());
    }
    let total = n.total() as usize;
    let count = configuration_count(g, n, s);
    if total > MAX_COPIES || count > EXPLICIT_GUARD {
        return Err(Error::Guard {
            what: "loop configuration enumeration".into(),
            estimate: count.max(total as f64),
            limit: EXPLICIT_GUARD,
        });
    }
    // copy blocks per edge
    let mut offset = vec![0usize; g.num_edges() + 1];
    for e in 0..g.num_edges() {
        offset[e + 1] = offset[e] + n.amplitude(e) as usize;
    }
    let per_edge: Vec<Vec<u32>> = (0..g.num_edges())
        .map(|e| subsets(n.amplitude(e), n.get(2 * e)))
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; g.num_edges()];
    loop {
        let mut copies = vec![0usize; total];
        for e in 0..g.num_edges() {
            let bits = per_edge[e][choice[e]];
            for i in 0..n.amplitude(e) as usize {
                copies[offset[e] + i] = if bits >> i & 1 == 1 { 2 * e } else { 2 * e + 1 };
            }
        }
        pair_all(g, &copies, &mask, &mut out);
        let mut e = 0;
        loop {
            if e == g.num_edges() {
                return Ok(out);
            }
            choice[e] += 1;
            if choice[e] < per_edge[e].len() {
                break;
            }
            choice[e] = 0;
            e += 1;
        }
    }
}

fn pair_all(g: &PlanarGraph, copies: &[usize], mask: &[bool], out: &mut Vec<LoopConfig>) {
    let nv = g.num_vertices();
    let mut ins = vec![Vec::new(); nv];
    let mut outs = vec![Vec::new(); nv];
    for (c, &h) in copies.iter().enumerate() {
        ins[g.head(h)].push(c);
        outs[g.origin(h)].push(c);
    }
    let active: Vec<VertexId> = (0..nv).filter(|&v| !mask[v] && !ins[v].is_empty()).collect();
    let perms: Vec<Vec<Vec<usize>>> = active.iter().map(|&v| permutations(ins[v].len())).collect();
    let mut idx = vec![0usize; active.len()];
    loop {
        let mut succ = vec![None; copies.len()];
        for (i, &v) in active.iter().enumerate() {
            for (j, &c) in ins[v].iter().enumerate() {
                succ[c] = Some(outs[v][perms[i][idx[i]][j]]);
            }
        }
        out.push(LoopConfig {
            multigraph: LoopMultigraph {
                copies: copies.to_vec(),
            },
            succ,
            source_set: mask.to_vec(),
        });
        let mut i = 0;
        loop {
            if i == active.len() {
                return;
            }
            idx[i] += 1;
            if idx[i] < perms[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

static ORIENTATION_COUNTS: Mutex<Option<HashMap<(u32, u32), u64>>> = Mutex::new(None);
static PAIRING_COUNTS: Mutex<Option<HashMap<usize, u64>>> = Mutex::new(None);

/// Orientations of `m` labelled copies with `r` forward, counted by brute force.
fn orientation_count(m: u32, r: u32) -> u64 {
    let mut guard = ORIENTATION_COUNTS.lock().unwrap();
    *guard
        .get_or_insert_with(HashMap::new)
        .entry((m, r))
        .or_insert_with(|| subsets(m, r).len() as u64)
}

/// Bijections between two `k`-sets, counted by brute-force generation.
fn pairing_count(k: usize) -> u64 {
    let mut guard = PAIRING_COUNTS.lock().unwrap();
    *guard.get_or_insert_with(HashMap::new).entry(k).or_insert_with(|| {
        let mut count = 0u64;
        let mut p: Vec<usize> = (0..k).collect();
        // lexicographic next-permutation walk
        loop {
            count += 1;
            let Some(i) = (1..k).rev().find(|&i| p[i - 1] < p[i]) else {
                break;
            };
            let j = (i..k).rev().find(|&j| p[j] > p[i - 1]).unwrap();
            p.swap(i - 1, j);
            p[i..].reverse();
        }
        count
    })
}

/// `log Σ_{ω∈L^S_n} λ^S_β(ω)` and whether it came from explicit enumeration.
///
/// Small instances enumerate and validate every configuration. Larger ones use
/// that `L^S_n` is a product over edges (orientations of labelled copies) and
/// vertices (pairings), counting each factor by brute force.
pub fn loop_weight_sum(g: &PlanarGraph, n: &Current, s: &[VertexId], beta: f64, explicit_limit: f64) -> Result<(f64, bool)> {
    let mask = source_mask(g, s);
    if !supports_sources(g, n, &mask) {
        return Ok((f64::NEG_INFINITY, false));
    }
    let count = configuration_count(g, n, s);
    if count <= explicit_limit && (n.total() as usize) <= MAX_COPIES {
        let configs = enumerate_consistent(g, n, s)?;
        let mut acc = f64::NEG_INFINITY;
        for cfg in &configs {
            cfg.validate(g)?;
            if cfg.current(g) != *n {
                return Err(Error::Consistency("enumerated configuration has the wrong current".into()));
            }
            acc = log_add(acc, weight_lambda(g, cfg, beta));
        }
        return Ok((acc, true));
    }
    let mg = LoopMultigraph::from_current(n);
    let deg = mg.degrees(g);
    let mut log_count = 0.0;
    for e in 0..g.num_edges() {
        let m = n.amplitude(e);
        if m > 30 {
            return Err(Error::Guard {
                what: "orientation count".into(),
                estimate: m as f64,
                limit: 30.0,
            });
        }
        log_count += (orientation_count(m, n.get(2 * e)) as f64).ln();
    }
    for v in 0..g.num_vertices() {
        if !mask[v] {
            let k = deg[v] as usize / 2;
            if k > 11 {
                return Err(Error::Guard {
                    what: "pairing count".into(),
                    estimate: k as f64,
                    limit: 11.0,
                });
            }
            log_count += (pairing_count(k) as f64).ln();
        }
    }
    let cfg = LoopConfig {
        multigraph: mg,
        succ: Vec::new(),
        source_set: mask,
    };
    Ok((weight_lambda(g, &cfg, beta) + log_count, false))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Clone, Debug)]
pub struct LoopexpCheck {
    pub weight_log: f64,
    pub loop_sum_log: f64,
    pub rel_err: f64,
    pub explicit: bool,
}

/// Compares `Σ_{ω∈L^S_n} λ^S_β(ω)` with `w_β(n)`.
pub fn verify_loopexp(g: &PlanarGraph, n: &Current, s: &[VertexId], beta: f64) -> Result<LoopexpCheck> {
    let mask = source_mask(g, s);
    if !supports_sources(g, n, &mask) {
        return Err(Error::Argument("the source set must contain every source of the current".into()));
    }
    let w = weight_log(g, n, beta);
    let (sum, explicit) = loop_weight_sum(g, n, s, beta, 64.0)?;
    Ok(LoopexpCheck {
        weight_log: w,
        loop_sum_log: sum,
        rel_err: ((sum - w).exp() - 1.0).abs(),
        explicit,
    })
}

#[derive(Clone, Debug)]
pub struct CuttingCheck {
    pub preimages: usize,
    pub expected_preimages: f64,
    pub preimage_weight_log: f64,
    pub image_weight_log: f64,
}

/// Enumerates `ρ^{-1}[ω]` for `ω` over `S` and a smaller set `S′`, summing `λ^{S′}`.
pub fn verify_cutting(g: &PlanarGraph, cfg: &LoopConfig, s_prime: &[VertexId], beta: f64) -> Result<CuttingCheck> {
    cfg.validate(g)?;
    let sp = source_mask(g, s_prime);
    if sp.iter().zip(&cfg.source_set).any(|(&a, &b)| a && !b) {
        return Err(Error::Argument("S′ must be a subset of the configuration's source set".into()));
    }
    let reopen: Vec<VertexId> = (0..g.num_vertices()).filter(|&v| cfg.source_set[v] && !sp[v]).collect();
    let nv = g.num_vertices();
    let mut ins = vec![Vec::new(); nv];
    let mut outs = vec![Vec::new(); nv];
    for (c, &h) in cfg.multigraph.copies.iter().enumerate() {
        ins[g.head(h)].push(c);
        outs[g.origin(h)].push(c);
    }
    for &v in &reopen {
        if ins[v].len() != outs[v].len() {
            return Err(Error::Argument(format!("vertex {v} has sources and cannot be paired")));
        }
    }
    let deg = cfg.multigraph.degrees(g);
    let expected: f64 = reopen.iter().map(|&v| (ln_factorial::<f64>(deg[v] as u64 / 2)).exp()).product();
    let perms: Vec<Vec<Vec<usize>>> = reopen.iter().map(|&v| permutations(ins[v].len())).collect();
    let mut idx = vec![0usize; reopen.len()];
    let mut count = 0usize;
    let mut acc = f64::NEG_INFINITY;
    loop {
        let mut pre = cfg.clone();
        pre.source_set = sp.clone();
        for (i, &v) in reopen.iter().enumerate() {
            for (j, &c) in ins[v].iter().enumerate() {
                pre.succ[c] = Some(outs[v][perms[i][idx[i]][j]]);
            }
        }
        pre.validate(g)?;
        if pre.cut(g, &reopen) != *cfg {
            return Err(Error::Consistency("preimage does not cut back to the configuration".into()));
        }
        count += 1;
        acc = log_add(acc, weight_lambda(g, &pre, beta));
        let mut i = 0;
        loop {
            if i == reopen.len() {
                return Ok(CuttingCheck {
                    preimages: count,
                    expected_preimages: expected,
                    preimage_weight_log: acc,
                    image_weight_log: weight_lambda(g, cfg, beta),
                });
            }
            idx[i] += 1;
            if idx[i] < perms[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Number of orientations of the labelled multigraph with `m[e]` copies of
/// edge `e` that balance in- and out-degree everywhere, by brute force.
pub fn eulerian_factor(g: &PlanarGraph, m: &[u32]) -> Result<u64> {
    let copies: Vec<usize> = m.iter().enumerate().flat_map(|(e, &k)| std::iter::repeat_n(e, k as usize)).collect();
    if copies.len() > 20 {
        return Err(Error::Guard {
            what: "Eulerian orientation count".into(),
            estimate: copies.len() as f64,
            limit: 20.0,
        });
    }
    let mut count = 0u64;
    let mut bal = vec![0i64; g.num_vertices()];
    for mask in 0u32..(1u32 << copies.len()) {
        bal.iter_mut().for_each(|x| *x = 0);
        for (i, &e) in copies.iter().enumerate() {
            let h = if mask >> i & 1 == 1 { 2 * e } else { 2 * e + 1 };
            bal[g.origin(h)] += 1;
            bal[g.head(h)] -= 1;
        }
        if bal.iter().all(|&x| x == 0) {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Clone, Debug)]
pub struct EulerianCheck {
    pub multigraph: Vec<u32>,
    /// `Σ_{n ∈ Ω_0, |n| = M} w_β(n)`.
    pub current_side: f64,
    /// `E(M) Π_e (βJ_e/2)^{M_e}/M_e!`.
    pub eulerian_side: f64,
}

/// Marginal of the sourceless loop measure on multigraphs, computed from
/// currents and from Eulerian orientation counts, for all `M_e ≤ max_copies`.
pub fn eulerian_marginal_check(g: &PlanarGraph, beta: f64, max_copies: u32) -> Result<Vec<EulerianCheck>> {
    let ne = g.num_edges();
    let mut out = Vec::new();
    let mut m = vec![0u32; ne];
    loop {
        if m.iter().sum::<u32>() <= 12 {
            let mut lhs = 0.0;
            let mut fwd = vec![0u32; ne];
            loop {
                let pairs: Vec<(u32, u32)> = (0..ne).map(|e| (fwd[e], m[e] - fwd[e])).collect();
                let n = Current::from_pairs(&pairs);
                if divergence(g, &n).iter().all(|&x| x == 0) {
                    lhs += weight_log(g, &n, beta).exp();
                }
                let mut i = 0;
                while i < ne && fwd[i] == m[i] {
                    fwd[i] = 0;
                    i += 1;
                }
                if i == ne {
                    break;
                }
                fwd[i] += 1;
            }
            let e_m = eulerian_factor(g, &m)? as f64;
            let mut rhs = e_m;
            for e in 0..ne {
                rhs *= (m[e] as f64 * (beta * g.coupling(e) / 2.0).ln() - ln_factorial::<f64>(m[e] as u64)).exp();
            }
            out.push(EulerianCheck {
                multigraph: m.clone(),
                current_side: lhs,
                eulerian_side: rhs,
            });
        }
        let mut i = 0;
        while i < ne && m[i] == max_copies {
            m[i] = 0;
            i += 1;
        }
        if i == ne {
            return Ok(out);
        }
        m[i] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn lap(g: &PlanarGraph) -> Current {
        let mut n = Current::zero(g);
        for &h in g.face_walk(g.inner_faces()[0]) {
            n.add(h, 1);
        }
        n
    }

    #[test]
    fn zero_current_has_one_empty_configuration() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let cfgs = enumerate_consistent(&g, &Current::zero(&g), &[]).unwrap();
        assert_eq!(cfgs.len(), 1);
        assert!(cfgs[0].multigraph.is_empty());
        assert_eq!(weight_lambda(&g, &cfgs[0], 1.0), 0.0);
    }

    #[test]
    fn one_lap_has_one_configuration() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let cfgs = enumerate_consistent(&g, &lap(&g), &[]).unwrap();
        assert_eq!(cfgs.len(), 1);
        assert!(weight_lambda(&g, &cfgs[0], 2.0).abs() < 1e-15);
        let chk = verify_loopexp(&g, &lap(&g), &[], 1.0).unwrap();
        assert!((chk.loop_sum_log.exp() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn back_and_forth_on_one_edge() {
        let g = PlanarGraph::single_edge(1.0);
        let n = Current::from_pairs(&[(1, 1)]);
        let cfgs = enumerate_consistent(&g, &n, &[]).unwrap();
        // two labellings of the same two-step loop
        assert_eq!(cfgs.len(), 2);
        for c in &cfgs {
            assert_eq!(c.traversals(&g).len(), 1);
        }
        let chk = verify_loopexp(&g, &n, &[], 2.0).unwrap();
        assert!(chk.rel_err < 1e-14);
    }

    #[test]
    fn doubled_multigraph_weight() {
        let g = PlanarGraph::single_edge(1.0);
        let n = Current::from_pairs(&[(2, 0)]);
        let cfgs = enumerate_consistent(&g, &n, &[0, 1]).unwrap();
        assert_eq!(cfgs.len(), 1);
        assert!((weight_lambda(&g, &cfgs[0], 2.0) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn count_matches_enumeration_and_exact_sum() {
        let g = PlanarGraph::theta(1.0);
        let beta = BigRational::from_ratio(3, 2);
        let n = Current::from_pairs(&[(1, 1), (1, 0), (0, 1), (2, 1), (0, 1)]);
        let s: Vec<VertexId> = (0..4).filter(|&v| divergence(&g, &n)[v] != 0).collect();
        let cfgs = enumerate_consistent(&g, &n, &s).unwrap();
        assert_eq!(cfgs.len() as f64, configuration_count(&g, &n, &s));
        let total = cfgs
            .iter()
            .fold(BigRational::from_count(0), |acc, c| acc + weight_lambda_exact(&g, c, &beta));
        assert_eq!(total, crate::current::weight(&g, &n, &beta));
    }

    #[test]
    fn cutting_a_degree_four_vertex() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let mut n = lap(&g);
        for &h in g.face_walk(g.inner_faces()[0]) {
            n.add(h, 1);
        }
        let cfg = enumerate_consistent(&g, &n, &[0]).unwrap().remove(0);
        let chk = verify_cutting(&g, &cfg, &[], 1.0).unwrap();
        assert_eq!(chk.preimages, 2);
        assert_eq!(chk.expected_preimages, 2.0);
        assert!((chk.preimage_weight_log - chk.image_weight_log).abs() < 1e-14);
        let same = verify_cutting(&g, &cfg, &[0], 1.0).unwrap();
        assert_eq!(same.preimages, 1);
    }

    #[test]
    fn eulerian_examples() {
        let c = PlanarGraph::cycle(4, 1.0).unwrap();
        assert_eq!(eulerian_factor(&c, &[1, 1, 1, 1]).unwrap(), 2);
        let e = PlanarGraph::single_edge(1.0);
        assert_eq!(eulerian_factor(&e, &[2]).unwrap(), 2);
        assert_eq!(eulerian_factor(&e, &[1]).unwrap(), 0);
    }

    #[test]
    fn factorized_sum_matches_explicit() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let n = Current::from_pairs(&[(2, 1), (2, 1), (2, 1), (2, 1)]);
        let (a, ea) = loop_weight_sum(&g, &n, &[], 1.0, 1e9).unwrap();
        let (b, eb) = loop_weight_sum(&g, &n, &[], 1.0, 0.0).unwrap();
        assert!(ea && !eb);
        assert!((a - b).abs() < 1e-12);
    }
}
