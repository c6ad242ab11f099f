use std::collections::HashMap;
use std::sync::Mutex;

use super::config::{weight_lambda_tilde, Colour, ColouredLoopConfig};
use crate::current::{divergence, weight_log, Current};
use crate::error::{Error, Result};
use crate::graph::{PlanarGraph, VertexId};
use crate::loops::{LoopMultigraph, LoopexpCheck, EXPLICIT_GUARD};
use crate::scalar::ln_factorial;

const MAX_COPIES: usize = 24;

/// Per-copy label on one edge: colour and whether it runs along `2e`.
type Slot = (Colour, bool);

fn mask_of(g: &PlanarGraph, s: &[VertexId]) -> Vec<bool> {
    let mut mask = vec![false; g.num_vertices()];
    for &v in s {
        mask[v] = true;
    }
    mask
}

/// `|L̃^S_{r,b}|`: colour-and-orientation arrangements per edge times pairings per vertex.
pub fn coloured_count(g: &PlanarGraph, r: &Current, b: &Current, s: &[VertexId]) -> f64 {
    let mask = mask_of(g, s);
    let n = r.sum(b);
    let phi = divergence(g, &n);
    let deg = LoopMultigraph::from_current(&n).degrees(g);
    let mut log = 0.0;
    for e in 0..g.num_edges() {
        let parts = [r.get(2 * e), r.get(2 * e + 1), b.get(2 * e), b.get(2 * e + 1)];
        log += ln_factorial::<f64>(parts.iter().map(|&x| x as u64).sum());
        for x in parts {
            log -= ln_factorial::<f64>(x as u64);
        }
    }
    for v in 0..g.num_vertices() {
        if !mask[v] {
            let p = phi[v].unsigned_abs();
            log += ln_factorial::<f64>((deg[v] as u64 + p) / 2) - ln_factorial::<f64>(p);
        }
    }
    log.exp().round()
}

/// Distinct orderings of a multiset given as counts per slot kind.
fn multiset_orders(kinds: &[Slot], counts: &[u32]) -> Vec<Vec<Slot>> {
    fn rec(kinds: &[Slot], left: &mut [u32], cur: &mut Vec<Slot>, out: &mut Vec<Vec<Slot>>) {
        if left.iter().all(|&x| x == 0) {
            out.push(cur.clone());
            return;
        }
        for i in 0..kinds.len() {
            if left[i] > 0 {
                left[i] -= 1;
                cur.push(kinds[i]);
                rec(kinds, left, cur, out);
                cur.pop();
                left[i] += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(kinds, &mut counts.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Ordered selections of `k` distinct elements of `0..n`.
fn arrangements(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

const SLOT_KINDS: [Slot; 4] = [(Colour::Red, true), (Colour::Red, false), (Colour::Blue, true), (Colour::Blue, false)];

fn slot_counts(r: &Current, b: &Current, e: usize) -> [u32; 4] {
    [r.get(2 * e), r.get(2 * e + 1), b.get(2 * e), b.get(2 * e + 1)]
}

/// Every configuration of `L̃^S_{r,b}` over labelled copies.
pub fn enumerate_coloured(g: &PlanarGraph, r: &Current, b: &Current, s: &[VertexId]) -> Result<Vec<ColouredLoopConfig>> {
    let mask = mask_of(g, s);
    let n = r.sum(b);
    let total = n.total() as usize;
    let count = coloured_count(g, r, b, s);
    if total > MAX_COPIES || count > EXPLICIT_GUARD {
        return Err(Error::Guard {
            what: "coloured configuration enumeration".into(),
            estimate: count.max(total as f64),
            limit: EXPLICIT_GUARD,
        });
    }
    let per_edge: Vec<Vec<Vec<Slot>>> = (0..g.num_edges())
        .map(|e| multiset_orders(&SLOT_KINDS, &slot_counts(r, b, e)))
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; g.num_edges()];
    loop {
        let mut copies = Vec::with_capacity(total);
        let mut colours = Vec::with_capacity(total);
        for e in 0..g.num_edges() {
            for &(c, fwd) in &per_edge[e][choice[e]] {
                copies.push(if fwd { 2 * e } else { 2 * e + 1 });
                colours.push(c);
            }
        }
        pair_all(g, &copies, &colours, &mask, &mut out);
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

/// Pairings at one vertex: `succ` assignments as (incoming copy, outgoing copy) lists.
fn vertex_pairings(ins: &[usize], outs: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if ins.len() <= outs.len() {
        arrangements(outs.len(), ins.len())
            .into_iter()
            .map(|sel| ins.iter().zip(sel).map(|(&i, j)| (i, outs[j])).collect())
            .collect()
    } else {
        arrangements(ins.len(), outs.len())
            .into_iter()
            .map(|sel| outs.iter().zip(sel).map(|(&o, j)| (ins[j], o)).collect())
            .collect()
    }
}

fn pair_all(g: &PlanarGraph, copies: &[usize], colours: &[Colour], mask: &[bool], out: &mut Vec<ColouredLoopConfig>) {
    let nv = g.num_vertices();
    let mut ins = vec![Vec::new(); nv];
    let mut outs = vec![Vec::new(); nv];
    for (c, &h) in copies.iter().enumerate() {
        ins[g.head(h)].push(c);
        outs[g.origin(h)].push(c);
    }
    let active: Vec<VertexId> = (0..nv)
        .filter(|&v| !mask[v] && !ins[v].is_empty() && !outs[v].is_empty())
        .collect();
    let options: Vec<Vec<Vec<(usize, usize)>>> = active.iter().map(|&v| vertex_pairings(&ins[v], &outs[v])).collect();
    let mut idx = vec![0usize; active.len()];
    loop {
        let mut succ = vec![None; copies.len()];
        for (i, opts) in options.iter().enumerate() {
            for &(c, d) in &opts[idx[i]] {
                succ[c] = Some(d);
            }
        }
        out.push(ColouredLoopConfig {
            multigraph: LoopMultigraph {
                copies: copies.to_vec(),
            },
            colours: colours.to_vec(),
            succ,
            source_set: mask.to_vec(),
        });
        let mut i = 0;
        loop {
            if i == active.len() {
                return;
            }
            idx[i] += 1;
            if idx[i] < options[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

static ARRANGEMENT_COUNTS: Mutex<Option<HashMap<(usize, usize), u64>>> = Mutex::new(None);
static ORDER_COUNTS: Mutex<Option<HashMap<[u32; 4], u64>>> = Mutex::new(None);

fn arrangement_count(n: usize, k: usize) -> u64 {
    let mut guard = ARRANGEMENT_COUNTS.lock().unwrap();
    *guard
        .get_or_insert_with(HashMap::new)
        .entry((n, k))
        .or_insert_with(|| arrangements(n, k).len() as u64)
}

fn order_count(counts: [u32; 4]) -> u64 {
    let mut guard = ORDER_COUNTS.lock().unwrap();
    *guard
        .get_or_insert_with(HashMap::new)
        .entry(counts)
        .or_insert_with(|| multiset_orders(&SLOT_KINDS, &counts).len() as u64)
}

/// Compares `Σ_{ω∈L̃^S_{r,b}} λ̃^S_β(ω)` with `w_β(r)·w_β(b)`.
///
/// Up to 64 configurations are enumerated and validated one by one; larger
/// instances count each edge and vertex factor by brute force.
pub fn verify_loopexp1(g: &PlanarGraph, r: &Current, b: &Current, s: &[VertexId], beta: f64) -> Result<LoopexpCheck> {
    let target = weight_log(g, r, beta) + weight_log(g, b, beta);
    let n = r.sum(b);
    let count = coloured_count(g, r, b, s);
    let (sum, explicit) = if count <= 64.0 {
        let mut acc = f64::NEG_INFINITY;
        for cfg in enumerate_coloured(g, r, b, s)? {
            cfg.validate(g)?;
            if cfg.red(g) != *r || cfg.blue(g) != *b {
                return Err(Error::Consistency("enumerated configuration has the wrong currents".into()));
            }
            let w = weight_lambda_tilde(g, &cfg, beta)?;
            acc = if acc == f64::NEG_INFINITY {
                w
            } else {
                let m = acc.max(w);
                m + ((acc - m).exp() + (w - m).exp()).ln()
            };
        }
        (acc, true)
    } else {
        let mask = mask_of(g, s);
        let mg = LoopMultigraph::from_current(&n);
        let phi = divergence(g, &n);
        let deg = mg.degrees(g);
        let mut log_count = 0.0;
        for e in 0..g.num_edges() {
            let c = slot_counts(r, b, e);
            if c.iter().sum::<u32>() > 14 {
                return Err(Error::Guard {
                    what: "colour arrangement count".into(),
                    estimate: c.iter().sum::<u32>() as f64,
                    limit: 14.0,
                });
            }
            log_count += (order_count(c) as f64).ln();
        }
        for v in 0..g.num_vertices() {
            if mask[v] {
                continue;
            }
            let outs = ((deg[v] as i64 + phi[v]) / 2) as usize;
            let ins = ((deg[v] as i64 - phi[v]) / 2) as usize;
            if outs.max(ins) > 11 {
                return Err(Error::Guard {
                    what: "pairing count".into(),
                    estimate: outs.max(ins) as f64,
                    limit: 11.0,
                });
            }
            log_count += (arrangement_count(outs.max(ins), outs.min(ins)) as f64).ln();
        }
        let cfg = ColouredLoopConfig {
            colours: vec![Colour::Red; mg.len()],
            succ: vec![None; mg.len()],
            multigraph: mg,
            source_set: mask,
        };
        (weight_lambda_tilde(g, &cfg, beta)? + log_count, false)
    };
    Ok(LoopexpCheck {
        weight_log: target,
        loop_sum_log: sum,
        rel_err: ((sum - target).exp() - 1.0).abs(),
        explicit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::current::{for_each_current, height_from_current};
    use crate::loops::winding_field;

    #[test]
    fn empty_pair_has_one_configuration() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let z = Current::zero(&g);
        assert_eq!(enumerate_coloured(&g, &z, &z, &[]).unwrap().len(), 1);
        assert!(verify_loopexp1(&g, &z, &z, &[], 1.0).unwrap().rel_err < 1e-15);
    }

    #[test]
    fn single_edge_examples() {
        let g = PlanarGraph::single_edge(1.0);
        let r = Current::from_pairs(&[(1, 0)]);
        let b = Current::from_pairs(&[(0, 1)]);
        let cfgs = enumerate_coloured(&g, &r, &b, &[0, 1]).unwrap();
        assert_eq!(cfgs.len(), 2);
        for c in &cfgs {
            assert_ne!(c.colours[0], c.colours[1]);
        }
        // red back-and-forth: the two labelled copies give two configurations of one shape
        let r = Current::from_pairs(&[(1, 1)]);
        let z = Current::zero(&g);
        let cfgs = enumerate_coloured(&g, &r, &z, &[]).unwrap();
        assert_eq!(cfgs.len(), 2);
        assert!(cfgs.iter().all(|c| c.paths(&g).is_empty()));
    }

    #[test]
    fn vertex_weight_factors() {
        let g = PlanarGraph::single_edge(2.0);
        let r = Current::from_pairs(&[(1, 0)]);
        let z = Current::zero(&g);
        let cfg = enumerate_coloured(&g, &r, &z, &[]).unwrap().remove(0);
        // β J / 2 = 1 and each endpoint has degree 1 with |φ| = 1
        assert!(weight_lambda_tilde(&g, &cfg, 1.0).unwrap().abs() < 1e-15);
        cfg.validate(&g).unwrap();
    }

    #[test]
    fn loop_expansion_on_small_graphs() {
        let graphs = [PlanarGraph::single_edge(1.0), PlanarGraph::cycle(4, 0.7).unwrap(), PlanarGraph::theta(1.2)];
        for g in &graphs {
            let nv = g.num_vertices();
            let mut currents = Vec::new();
            for_each_current(g, &vec![0; nv], 1, |n| currents.push(n.clone())).unwrap();
            let mut dip = Vec::new();
            for_each_current(g, &crate::current::dipole(nv, 0, 1, 1), 1, |n| dip.push(n.clone())).unwrap();
            for r in currents.iter().chain(&dip).take(12) {
                for b in currents.iter().take(6) {
                    for s in [vec![], vec![0], vec![0, 1]] {
                        let c = verify_loopexp1(g, r, b, &s, 1.3).unwrap();
                        assert!(c.rel_err < 1e-12, "{c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn factorised_count_matches_enumeration() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let r = Current::from_flows(vec![2, 0, 1, 1, 1, 1, 1, 1]);
        let b = Current::from_flows(vec![0, 1, 1, 0, 1, 0, 1, 0]);
        for s in [vec![], vec![2]] {
            let listed = enumerate_coloured(&g, &r, &b, &s).unwrap().len() as f64;
            assert_eq!(listed, coloured_count(&g, &r, &b, &s));
        }
        assert!(!verify_loopexp1(&g, &r, &b, &[], 1.0).unwrap().explicit);
        assert!(verify_loopexp1(&g, &r, &b, &[], 1.0).unwrap().rel_err < 1e-12);
    }

    #[test]
    fn winding_is_sum_of_two_heights() {
        let g = PlanarGraph::box_lattice(2, 1, 1.0).unwrap();
        let nv = g.num_vertices();
        let mut currents = Vec::new();
        for_each_current(&g, &vec![0; nv], 1, |n| currents.push(n.clone())).unwrap();
        let small: Vec<_> = currents.into_iter().filter(|n| n.total() <= 6).collect();
        for r in &small {
            for b in small.iter().take(8) {
                if coloured_count(&g, r, b, &[]) > 5000.0 {
                    continue;
                }
                let want = height_from_current(&g, r).unwrap().sum(&height_from_current(&g, b).unwrap());
                for cfg in enumerate_coloured(&g, r, b, &[]).unwrap() {
                    assert_eq!(winding_field(&g, &cfg.uncoloured()).unwrap(), want);
                }
            }
        }
    }

    #[test]
    fn switching_twice_is_identity_and_keeps_weight() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let mut r = Current::zero(&g);
        r.set(0, 1);
        r.set(2, 1);
        let mut b = Current::zero(&g);
        b.set(0, 1);
        b.set(2, 1);
        b.set(4, 1);
        b.set(6, 1);
        for cfg in enumerate_coloured(&g, &r, &b, &[0, 2]).unwrap() {
            for p in cfg.paths(&g) {
                let once = cfg.switch_path(&p).unwrap();
                let rev: Vec<usize> = p.iter().rev().copied().collect();
                assert_eq!(once.switch_path(&rev).unwrap(), cfg);
                let w0 = weight_lambda_tilde(&g, &cfg, 1.0).unwrap();
                let w1 = weight_lambda_tilde(&g, &once, 1.0).unwrap();
                assert!((w0 - w1).abs() < 1e-14);
            }
        }
    }
}
