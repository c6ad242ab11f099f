//! Exact laws of path statistics under uniform pairings, by revealing the
//! pairing one step at a time along the traced strands.
//!
//! At a vertex outside the source set the pairing is a uniform bijection
//! from incoming to outgoing copies, so conditionally on everything revealed
//! so far, the copy paired with the next arrival is uniform among the
//! outgoing copies not yet used. Memoizing on the remaining out-counts gives
//! the exact law without listing configurations.

use super::count::enumerate_consistent;
use crate::current::{divergence, Current};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, HalfEdge, PlanarGraph, VertexId};
use crate::scalar::Weight;
use std::collections::HashMap;

const STATE_GUARD: usize = 4_000_000;

struct Walker<'a> {
    g: &'a PlanarGraph,
    outs: Vec<Vec<HalfEdge>>,
}

impl<'a> Walker<'a> {
    fn new(g: &'a PlanarGraph) -> Self {
        Walker {
            g,
            outs: (0..g.num_vertices()).map(|v| g.out_half_edges(v)).collect(),
        }
    }
}

fn guard<T>(memo: &HashMap<(Vec<u32>, usize), T>) -> Result<()> {
    if memo.len() > STATE_GUARD {
        return Err(Error::Guard {
            what: "pairing revelation states".into(),
            estimate: memo.len() as f64,
            limit: STATE_GUARD as f64,
        });
    }
    Ok(())
}

const BETWEEN: usize = usize::MAX;

/// Law of `m_{a,b}` over the uniform configurations of `L^∅_n`; entry `k` is `P(m = k)`.
pub fn m_law<W: Weight>(g: &PlanarGraph, n: &Current, a: VertexId, b: VertexId) -> Result<Vec<W>> {
    if a == b {
        return Err(Error::Argument("m_{a,b} needs distinct vertices".into()));
    }
    if divergence(g, n).iter().any(|&d| d != 0) {
        return Err(Error::Argument("the current must be sourceless".into()));
    }
    let w = Walker::new(g);
    let mut memo = HashMap::new();
    let mut rem = n.flows().to_vec();
    strand_law(&w, a, b, &mut rem, BETWEEN, &mut memo)
}

fn add_shifted<W: Weight>(acc: &mut Vec<W>, law: &[W], shift: usize, p: &W) {
    if acc.len() < law.len() + shift {
        acc.resize(law.len() + shift, W::zero());
    }
    for (k, q) in law.iter().enumerate() {
        acc[k + shift] = acc[k + shift].clone() + p.clone() * q.clone();
    }
}

fn strand_law<W: Weight>(
    w: &Walker,
    a: VertexId,
    b: VertexId,
    rem: &mut Vec<u32>,
    at: usize,
    memo: &mut HashMap<(Vec<u32>, usize), Vec<W>>,
) -> Result<Vec<W>> {
    if at == a {
        return strand_law(w, a, b, rem, BETWEEN, memo);
    }
    if at == b {
        let rest = strand_law(w, a, b, rem, BETWEEN, memo)?;
        let mut out = vec![W::zero()];
        out.extend(rest);
        return Ok(out);
    }
    let key = (rem.clone(), at);
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    guard(memo)?;
    let result = if at == BETWEEN {
        // start the next strand at an unused outgoing copy of a
        match w.outs[a].iter().copied().find(|&h| rem[h] > 0) {
            None => vec![W::one()],
            Some(h) => {
                rem[h] -= 1;
                let r = strand_law(w, a, b, rem, w.g.head(h), memo);
                rem[h] += 1;
                r?
            }
        }
    } else {
        let total: u32 = w.outs[at].iter().map(|&h| rem[h]).sum();
        if total == 0 {
            return Err(Error::Consistency(format!("strand stuck at vertex {at}")));
        }
        let mut acc: Vec<W> = Vec::new();
        let tot = W::from_count(total as u64);
        for &h in &w.outs[at] {
            if rem[h] == 0 {
                continue;
            }
            let p = W::from_count(rem[h] as u64) / tot.clone();
            rem[h] -= 1;
            let sub = strand_law(w, a, b, rem, w.g.head(h), memo);
            rem[h] += 1;
            add_shifted(&mut acc, &sub?, 0, &p);
        }
        acc
    };
    memo.insert(key, result.clone());
    Ok(result)
}

/// Law of `m_{a,b}` by listing every configuration of `L^∅_n`.
pub fn m_law_explicit<W: Weight>(g: &PlanarGraph, n: &Current, a: VertexId, b: VertexId) -> Result<Vec<W>> {
    let cfgs = enumerate_consistent(g, n, &[])?;
    let mut hist: Vec<u64> = Vec::new();
    for c in &cfgs {
        let m = c.count_m(g, a, b)?;
        if hist.len() <= m {
            hist.resize(m + 1, 0);
        }
        hist[m] += 1;
    }
    let total = W::from_count(cfgs.len() as u64);
    Ok(hist.into_iter().map(|h| W::from_count(h) / total.clone()).collect())
}

/// Expected numbers of copies of `e` traversed along `2e` and along `2e + 1`
/// by the path from `a` to `b`, over uniform configurations of a current with
/// `δn = δ_a − δ_b` where `a` keeps one outgoing and `b` one incoming end unmatched.
pub fn path_visit_expectation<W: Weight>(
    g: &PlanarGraph,
    n: &Current,
    a: VertexId,
    b: VertexId,
    e: EdgeId,
) -> Result<(W, W)> {
    let d = divergence(g, n);
    if a == b || d.iter().enumerate().any(|(v, &x)| x != (v == a) as i64 - (v == b) as i64) {
        return Err(Error::Argument("the current must have divergence δ_a − δ_b".into()));
    }
    let w = Walker::new(g);
    let mut memo = HashMap::new();
    let mut rem = n.flows().to_vec();
    visit_expectation(&w, b, e, &mut rem, a, true, &mut memo)
}

fn visit_expectation<W: Weight>(
    w: &Walker,
    b: VertexId,
    e: EdgeId,
    rem: &mut Vec<u32>,
    at: VertexId,
    start: bool,
    memo: &mut HashMap<(Vec<u32>, usize), (W, W)>,
) -> Result<(W, W)> {
    let key = (rem.clone(), if start { BETWEEN } else { at });
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    guard(memo)?;
    let total: u32 = w.outs[at].iter().map(|&h| rem[h]).sum();
    // at b the arriving copy is the unmatched end with probability 1/(remaining ins)
    let go_on = if at == b && !start {
        let ins = total + 1;
        W::from_count(total as u64) / W::from_count(ins as u64)
    } else {
        W::one()
    };
    let mut ef = W::zero();
    let mut eb = W::zero();
    if total > 0 && go_on != W::zero() {
        let tot = W::from_count(total as u64);
        for &h in &w.outs[at] {
            if rem[h] == 0 {
                continue;
            }
            let p = go_on.clone() * W::from_count(rem[h] as u64) / tot.clone();
            rem[h] -= 1;
            let sub = visit_expectation(w, b, e, rem, w.g.head(h), false, memo);
            rem[h] += 1;
            let (sf, sb) = sub?;
            let (hf, hb) = if h == 2 * e {
                (W::one(), W::zero())
            } else if h == 2 * e + 1 {
                (W::zero(), W::one())
            } else {
                (W::zero(), W::zero())
            };
            ef = ef + p.clone() * (hf + sf);
            eb = eb + p * (hb + sb);
        }
    } else if at != b {
        return Err(Error::Consistency(format!("path stuck at vertex {at}")));
    }
    memo.insert(key, (ef.clone(), eb.clone()));
    Ok((ef, eb))
}
