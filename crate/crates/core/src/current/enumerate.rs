use super::exact::Truncation;
use super::{Current, SourceFunction};
use crate::bessel::poisson_tail_bound;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, PlanarGraph, VertexId};

/// Refuse enumerations whose estimated output exceeds this many currents.
pub const ENUMERATION_GUARD: f64 = 2.0e7;

/// All currents with a prescribed divergence and per-directed-edge cap.
#[derive(Clone, Debug)]
pub struct CurrentEnumeration {
    pub currents: Vec<Current>,
    pub cutoff: u32,
    /// Upper bound on `Σ w(n)` over omitted currents, divided by `e^{βΣJ}`.
    pub tail_bound_scaled: f64,
    pub beta: f64,
}

/// `P(Pois(x) > n)` bound.
pub fn poisson_exceed(x: f64, n: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (poisson_tail_bound(x, n as i64 + 1) * (-x).exp()).min(1.0)
}

/// Omitted mass (relative to `e^{βΣJ}`) when every directed entry is capped at `cutoff`.
pub fn current_tail_bound(g: &PlanarGraph, beta: f64, cutoff: u32) -> f64 {
    (0..g.num_edges())
        .map(|e| 2.0 * poisson_exceed(beta * g.coupling(e) / 2.0, cutoff))
        .sum()
}

/// Omitted mass (relative to `e^{βΣJ}`) when every amplitude is capped at `cap`.
pub fn amplitude_tail_bound(g: &PlanarGraph, beta: f64, cap: u32) -> f64 {
    (0..g.num_edges())
        .map(|e| poisson_exceed(beta * g.coupling(e), cap))
        .sum()
}

struct Forest {
    /// Vertices in BFS order per component, roots first.
    order: Vec<VertexId>,
    parent_edge: Vec<Option<EdgeId>>,
    is_tree: Vec<bool>,
    roots: Vec<VertexId>,
}

fn spanning_forest(g: &PlanarGraph) -> Forest {
    let nv = g.num_vertices();
    let mut seen = vec![false; nv];
    let mut parent_edge = vec![None; nv];
    let mut is_tree = vec![false; g.num_edges()];
    let mut order = Vec::with_capacity(nv);
    let mut roots = Vec::new();
    for r in 0..nv {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        roots.push(r);
        let start = order.len();
        order.push(r);
        let mut i = start;
        while i < order.len() {
            let v = order[i];
            i += 1;
            for h in g.out_half_edges(v) {
                let w = g.head(h);
                if !seen[w] {
                    seen[w] = true;
                    parent_edge[w] = Some(h / 2);
                    is_tree[h / 2] = true;
                    order.push(w);
                }
            }
        }
    }
    Forest {
        order,
        parent_edge,
        is_tree,
        roots,
    }
}

/// Calls `f` with every net flow `d` (`d_e = n_{2e} − n_{2e+1}`) of divergence
/// `phi` with `|d_e| ≤ cap`, iterating over the cycle space.
pub fn for_each_net_flow<F: FnMut(&[i64])>(g: &PlanarGraph, phi: &SourceFunction, cap: i64, mut f: F) -> Result<()> {
    check_phi(g, phi)?;
    let forest = spanning_forest(g);
    for &r in &forest.roots {
        let total: i64 = forest
            .order
            .iter()
            .filter(|&&v| g.component_of(v) == g.component_of(r))
            .map(|&v| phi[v])
            .sum();
        if total != 0 {
            return Ok(());
        }
    }
    let free: Vec<EdgeId> = (0..g.num_edges()).filter(|&e| !forest.is_tree[e]).collect();
    let mut d = vec![0i64; g.num_edges()];
    let mut digits = vec![-cap; free.len()];
    let mut out = vec![0i64; g.num_vertices()];
    loop {
        for (i, &e) in free.iter().enumerate() {
            d[e] = digits[i];
        }
        if solve_tree(g, &forest, phi, &mut d, &mut out, cap) {
            f(&d);
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(());
            }
            if digits[i] < cap {
                digits[i] += 1;
                break;
            }
            digits[i] = -cap;
            i += 1;
        }
    }
}

/// Fills tree-edge net flows from the leaves up; false if some exceeds `cap`.
fn solve_tree(g: &PlanarGraph, forest: &Forest, phi: &[i64], d: &mut [i64], out: &mut [i64], cap: i64) -> bool {
    out.iter_mut().for_each(|x| *x = 0);
    for e in 0..g.num_edges() {
        if !forest.is_tree[e] {
            let (u, v) = g.endpoints(e);
            out[u] += d[e];
            out[v] -= d[e];
        }
    }
    for &v in forest.order.iter().rev() {
        if let Some(e) = forest.parent_edge[v] {
            // the parent edge must carry the remaining outflow of v
            let need = phi[v] - out[v];
            let (u, w) = g.endpoints(e);
            let val = if u == v { need } else { -need };
            if val.abs() > cap {
                return false;
            }
            d[e] = val;
            out[u] += val;
            out[w] -= val;
        }
    }
    true
}

/// Some net flow with divergence `phi`, supported on a spanning forest.
pub fn particular_flow(g: &PlanarGraph, phi: &SourceFunction) -> Result<Vec<i64>> {
    check_phi(g, phi)?;
    let forest = spanning_forest(g);
    let mut total = vec![0i64; g.num_components()];
    for v in 0..g.num_vertices() {
        total[g.component_of(v)] += phi[v];
    }
    if let Some(c) = total.iter().position(|&t| t != 0) {
        return Err(Error::Argument(format!(
            "sources sum to {} on connected component {c}",
            total[c]
        )));
    }
    let mut d = vec![0i64; g.num_edges()];
    let mut out = vec![0i64; g.num_vertices()];
    solve_tree(g, &forest, phi, &mut d, &mut out, i64::MAX);
    Ok(d)
}

fn check_phi(g: &PlanarGraph, phi: &SourceFunction) -> Result<()> {
    if phi.len() != g.num_vertices() {
        return Err(Error::Argument(format!(
            "source function has {} entries for {} vertices",
            phi.len(),
            g.num_vertices()
        )));
    }
    Ok(())
}

fn cycle_rank(g: &PlanarGraph) -> usize {
    g.num_edges() + g.num_components() - g.num_vertices()
}

/// Rough count of currents with per-directed cap `cutoff`, used by the guard.
pub fn enumeration_estimate(g: &PlanarGraph, cutoff: u32) -> f64 {
    let n = cutoff as f64;
    (2.0 * n + 1.0).powi(cycle_rank(g) as i32) * (n + 1.0).powi(g.num_edges() as i32)
}

/// Streams every current with `δn = φ` and all directed entries `≤ cutoff`.
pub fn for_each_current<F: FnMut(&Current)>(g: &PlanarGraph, phi: &SourceFunction, cutoff: u32, f: F) -> Result<()> {
    for_each_current_truncated(g, phi, Truncation::Directed(cutoff), f)
}

/// Streams every current with `δn = φ` inside the given truncation.
pub fn for_each_current_truncated<F: FnMut(&Current)>(
    g: &PlanarGraph,
    phi: &SourceFunction,
    trunc: Truncation,
    mut f: F,
) -> Result<()> {
    let cutoff = trunc.cap();
    let est = enumeration_estimate(g, cutoff);
    if est > ENUMERATION_GUARD {
        return Err(Error::Guard {
            what: "current enumeration".into(),
            estimate: est,
            limit: ENUMERATION_GUARD,
        });
    }
    let ne = g.num_edges();
    let cap = cutoff as i64;
    let mut n = Current::zero(g);
    for_each_net_flow(g, phi, cap, |d| {
        // choose the smaller entry x_e per edge
        let mut x = vec![0u32; ne];
        loop {
            for e in 0..ne {
                let (a, b) = if d[e] >= 0 {
                    (x[e] + d[e] as u32, x[e])
                } else {
                    (x[e], x[e] + (-d[e]) as u32)
                };
                n.set(2 * e, a);
                n.set(2 * e + 1, b);
            }
            f(&n);
            let mut i = 0;
            loop {
                if i == ne {
                    return;
                }
                if (x[i] as u64) < trunc.max_x(d[i].unsigned_abs()) {
                    x[i] += 1;
                    break;
                }
                x[i] = 0;
                i += 1;
            }
        }
    })
}

/// Collects every current with `δn = φ` and all directed entries `≤ cutoff`.
pub fn enumerate_currents(g: &PlanarGraph, phi: &SourceFunction, cutoff: u32, beta: f64) -> Result<CurrentEnumeration> {
    let mut currents = Vec::new();
    for_each_current(g, phi, cutoff, |n| currents.push(n.clone()))?;
    currents.sort();
    Ok(CurrentEnumeration {
        currents,
        cutoff,
        tail_bound_scaled: current_tail_bound(g, beta, cutoff),
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::current::{dipole, divergence};

    #[test]
    fn single_edge_examples() {
        let g = PlanarGraph::single_edge(1.0);
        let zero = enumerate_currents(&g, &vec![0, 0], 2, 1.0).unwrap();
        let pairs: Vec<_> = zero.currents.iter().map(|n| (n.get(0), n.get(1))).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 1), (2, 2)]);
        let src = enumerate_currents(&g, &dipole(2, 0, 1, 1), 2, 1.0).unwrap();
        let pairs: Vec<_> = src.currents.iter().map(|n| (n.get(0), n.get(1))).collect();
        assert_eq!(pairs, vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn cutoff_zero_gives_zero_current() {
        let g = PlanarGraph::theta(1.0);
        let en = enumerate_currents(&g, &vec![0; 4], 0, 1.0).unwrap();
        assert_eq!(en.currents.len(), 1);
        assert!(en.currents[0].is_zero());
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        for g in [PlanarGraph::cycle(3, 1.0).unwrap(), PlanarGraph::path(3, 1.0).unwrap()] {
            let nh = g.num_half_edges();
            let cutoff = 2u32;
            for phi in [vec![0; g.num_vertices()], dipole(g.num_vertices(), 0, 2, 1)] {
                let mut brute = Vec::new();
                let total = (cutoff as usize + 1).pow(nh as u32);
                for code in 0..total {
                    let mut c = code;
                    let flows: Vec<u32> = (0..nh)
                        .map(|_| {
                            let x = (c % (cutoff as usize + 1)) as u32;
                            c /= cutoff as usize + 1;
                            x
                        })
                        .collect();
                    let n = Current::from_flows(flows);
                    if divergence(&g, &n) == phi {
                        brute.push(n);
                    }
                }
                brute.sort();
                let en = enumerate_currents(&g, &phi, cutoff, 1.0).unwrap();
                assert_eq!(en.currents, brute);
            }
        }
    }

    #[test]
    fn unbalanced_sources_give_nothing() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let en = enumerate_currents(&g, &vec![1, 0, 0, 0], 3, 1.0).unwrap();
        assert!(en.currents.is_empty());
    }

    #[test]
    fn guard_refuses_large_requests() {
        let g = PlanarGraph::box_lattice(3, 3, 1.0).unwrap();
        let err = enumerate_currents(&g, &vec![0; 16], 6, 1.0).unwrap_err();
        assert!(matches!(err, Error::Guard { .. }));
    }
}
