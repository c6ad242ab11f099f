//! Exact sums over integer height functions by variable elimination.

use super::enumerate::{particular_flow as tree_flow, poisson_exceed};
use super::exact::{correlator_enclosure, CorrelatorResult, TruncatedSum};
use super::SourceFunction;
use crate::bessel::BesselTable;
use crate::elimination::FactorGraph;
use crate::error::{Error, Result};
use crate::graph::{PlanarGraph, VertexId};

pub use super::enumerate::particular_flow;

/// Factor `I_{shift + h(t) − h(s)}(βJ)·e^{−βJ}` between two sites.
#[derive(Clone, Debug)]
pub struct Bond {
    pub s: usize,
    pub t: usize,
    pub beta_j: f64,
    pub shift: i64,
}

/// Integer heights on sites with Bessel-potential bonds; pinned sites are 0.
#[derive(Clone, Debug)]
pub struct HeightModel {
    pub num_sites: usize,
    pub pinned: Vec<bool>,
    pub bonds: Vec<Bond>,
}

/// Truncated law of one site's height on `[−cap, cap]`.
#[derive(Clone, Debug)]
pub struct HeightLaw {
    pub cap: i64,
    /// Normalized over the truncated range; index `i` is height `i − cap`.
    pub probs: Vec<f64>,
    /// Upper bound on the total-variation distance to the untruncated law.
    pub tv_bound: f64,
}

impl HeightLaw {
    pub fn prob(&self, k: i64) -> f64 {
        if k.abs() > self.cap {
            0.0
        } else {
            self.probs[(k + self.cap) as usize]
        }
    }

    /// Total-variation distance between the truncated laws plus both truncation bounds.
    pub fn tv_upper(&self, other: &HeightLaw) -> f64 {
        let cap = self.cap.max(other.cap);
        let tv: f64 = (-cap..=cap).map(|k| (self.prob(k) - other.prob(k)).abs()).sum::<f64>() / 2.0;
        tv + self.tv_bound + other.tv_bound
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DualResult {
    pub sum: TruncatedSum,
    pub height_cap: i64,
}

impl HeightModel {
    /// Heights on faces of `g`, outer faces pinned, for currents of divergence `phi`.
    ///
    /// Net flows of divergence `phi` are `p + ∇h` for a fixed particular flow `p`,
    /// so `Z^φ e^{−βΣJ} = Σ_h Π_e I_{p_e + h(L_e) − h(R_e)}(βJ_e) e^{−βJ_e}`.
    pub fn dual_of(g: &PlanarGraph, beta: f64, phi: &SourceFunction) -> Result<Self> {
        let p = tree_flow(g, phi)?;
        let mut pinned = vec![false; g.num_faces()];
        for &f in g.outer_faces() {
            pinned[f] = true;
        }
        let bonds = (0..g.num_edges())
            .map(|e| Bond {
                s: g.right_face(2 * e),
                t: g.left_face(2 * e),
                beta_j: beta * g.coupling(e),
                shift: p[e],
            })
            .collect();
        Ok(HeightModel {
            num_sites: g.num_faces(),
            pinned,
            bonds,
        })
    }

    /// Heights on the vertices of `g` itself, with `pinned` vertices at 0.
    pub fn on_vertices(g: &PlanarGraph, beta: f64, pinned_vertices: &[VertexId]) -> Result<Self> {
        let mut pinned = vec![false; g.num_vertices()];
        for &v in pinned_vertices {
            pinned[v] = true;
        }
        for c in 0..g.num_components() {
            if !(0..g.num_vertices()).any(|v| pinned[v] && g.component_of(v) == c) {
                return Err(Error::Argument(format!("component {c} has no pinned vertex")));
            }
        }
        let bonds = (0..g.num_edges())
            .map(|e| {
                let (u, v) = g.endpoints(e);
                Bond {
                    s: u,
                    t: v,
                    beta_j: beta * g.coupling(e),
                    shift: 0,
                }
            })
            .collect();
        Ok(HeightModel {
            num_sites: g.num_vertices(),
            pinned,
            bonds,
        })
    }

    /// Bound on the omitted mass of heights outside `[−cap, cap]`, relative to the
    /// scaled partition function. Along a spanning tree grown from the pinned sites
    /// the increments are independent Poisson differences; every bond off the tree
    /// contributes at most its largest value `I_0(βJ)e^{−βJ}`.
    pub fn tail_bound(&self, cap: i64) -> f64 {
        let n = self.num_sites;
        let mut adj = vec![Vec::new(); n];
        for (i, b) in self.bonds.iter().enumerate() {
            if b.s != b.t {
                adj[b.s].push((b.t, i));
                adj[b.t].push((b.s, i));
            }
        }
        let mut on_tree = vec![false; self.bonds.len()];
        // (rate sum, shift sum) along the tree path from a pinned site
        let mut path: Vec<Option<(f64, i64)>> = (0..n).map(|s| self.pinned[s].then_some((0.0, 0))).collect();
        let mut queue: std::collections::VecDeque<usize> = (0..n).filter(|&s| self.pinned[s]).collect();
        while let Some(s) = queue.pop_front() {
            let (r, sh) = path[s].unwrap();
            for &(t, i) in &adj[s] {
                if path[t].is_none() {
                    let b = &self.bonds[i];
                    path[t] = Some((r + b.beta_j / 2.0, sh + b.shift.abs()));
                    on_tree[i] = true;
                    queue.push_back(t);
                }
            }
        }
        let mut total = 0.0;
        for s in 0..n {
            if self.pinned[s] {
                continue;
            }
            match path[s] {
                None => return f64::INFINITY,
                Some((rate, shift)) => {
                    let room = cap - shift;
                    total += if room < 0 {
                        2.0
                    } else {
                        2.0 * poisson_exceed(rate, room as u64 as u32)
                    };
                }
            }
        }
        let off_tree: f64 = self
            .bonds
            .iter()
            .zip(&on_tree)
            .filter(|(_, &t)| !t)
            .map(|(b, _)| {
                if b.s == b.t {
                    crate::bessel::bessel_i_scaled(b.shift, b.beta_j)
                } else {
                    crate::bessel::bessel_i_scaled(0, b.beta_j)
                }
            })
            .product();
        total * off_tree
    }

    fn factor_graph(&self, cap: i64) -> (FactorGraph<f64>, Vec<Option<usize>>) {
        let mut var = vec![None; self.num_sites];
        let mut nv = 0;
        for s in 0..self.num_sites {
            if !self.pinned[s] {
                var[s] = Some(nv);
                nv += 1;
            }
        }
        let d = (2 * cap + 1) as usize;
        let mut fg = FactorGraph::new(vec![d; nv]);
        let max_shift = self.bonds.iter().map(|b| b.shift.abs()).max().unwrap_or(0);
        let mut tables: std::collections::HashMap<u64, BesselTable> = Default::default();
        for b in &self.bonds {
            tables
                .entry(b.beta_j.to_bits())
                .or_insert_with(|| BesselTable::new(b.beta_j, (2 * cap + max_shift) as usize + 1));
        }
        for b in &self.bonds {
            let tab = &tables[&b.beta_j.to_bits()];
            let val = |hs: i64, ht: i64| tab.scaled(b.shift + ht - hs);
            match (var[b.s], var[b.t]) {
                _ if b.s == b.t => fg.add_constant(val(0, 0)),
                (None, None) => fg.add_constant(val(0, 0)),
                (Some(x), None) => fg.add_fn(&[x], |a| val(a[0] as i64 - cap, 0)),
                (None, Some(y)) => fg.add_fn(&[y], |a| val(0, a[0] as i64 - cap)),
                (Some(x), Some(y)) => fg.add_fn(&[x, y], |a| val(a[0] as i64 - cap, a[1] as i64 - cap)),
            }
        }
        (fg, var)
    }

    /// Scaled partition function with heights restricted to `[−cap, cap]`.
    pub fn partition(&self, cap: i64) -> Result<TruncatedSum> {
        let (fg, _) = self.factor_graph(cap);
        let (m, s) = fg.total()?;
        Ok(TruncatedSum {
            value: m * s.exp(),
            tail_bound: self.tail_bound(cap),
            log_scale: 0.0,
        })
    }

    /// Law of the height at `site`.
    pub fn law_of(&self, site: usize, cap: i64) -> Result<HeightLaw> {
        let (fg, var) = self.factor_graph(cap);
        let Some(x) = var[site] else {
            let mut probs = vec![0.0; (2 * cap + 1) as usize];
            probs[cap as usize] = 1.0;
            return Ok(HeightLaw {
                cap,
                probs,
                tv_bound: 0.0,
            });
        };
        let (f, s) = fg.eliminate(&[x])?;
        let z: f64 = f.table.iter().sum();
        let probs = f.table.iter().map(|v| v / z).collect();
        let z_trunc = z * s.exp();
        Ok(HeightLaw {
            cap,
            probs,
            tv_bound: self.tail_bound(cap) / z_trunc,
        })
    }

    /// Lower bound on the scaled partition function: the all-zero height term.
    pub fn zero_term(&self) -> f64 {
        self.bonds
            .iter()
            .map(|b| crate::bessel::bessel_i_scaled(b.shift, b.beta_j))
            .product()
    }

    /// Smallest cap whose tail bound is below `rel_tol` times [`Self::zero_term`].
    pub fn cap_for(&self, rel_tol: f64) -> i64 {
        let target = rel_tol * self.zero_term();
        (1..400).find(|&c| self.tail_bound(c) <= target).unwrap_or(400)
    }
}

impl HeightModel {
    /// Like [`Self::cap_for`], but measured against the truncated sum at a small
    /// cap, which is a much larger lower bound than the zero term.
    pub fn adaptive_cap(&self, rel_tol: f64) -> Result<i64> {
        let zero = self.cap_for(rel_tol);
        if zero <= 3 {
            return Ok(zero);
        }
        let lower = self.partition(2)?.value.max(self.zero_term());
        let target = rel_tol * lower;
        Ok((1..400).find(|&c| self.tail_bound(c) <= target).unwrap_or(400))
    }
}

/// `Z^φ` relative to `e^{βΣJ}` by summing over dual heights.
pub fn dual_partition(g: &PlanarGraph, beta: f64, phi: &SourceFunction, height_cap: Option<i64>) -> Result<DualResult> {
    let model = HeightModel::dual_of(g, beta, phi)?;
    let cap = match height_cap {
        Some(c) => c,
        None => model.adaptive_cap(1e-12)?,
    };
    let mut sum = model.partition(cap)?;
    sum.log_scale = beta * g.couplings().iter().sum::<f64>();
    Ok(DualResult { sum, height_cap: cap })
}

/// `⟨Π σ_v^{φ_v}⟩` (with `σ̄` for negative powers) as `Z^φ/Z^0` over dual heights.
pub fn dual_correlator(g: &PlanarGraph, beta: f64, phi: &SourceFunction, height_cap: Option<i64>) -> Result<CorrelatorResult> {
    let den = dual_partition(g, beta, &vec![0; g.num_vertices()], height_cap)?;
    if phi.iter().all(|&x| x == 0) {
        return Ok(correlator_enclosure(den.sum, den.sum));
    }
    let num = dual_partition(g, beta, phi, height_cap)?;
    Ok(correlator_enclosure(num.sum, den.sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;
    use crate::current::{dipole, partition_and_correlators, partition_function};

    #[test]
    fn single_face_law_is_bessel_power() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let model = HeightModel::dual_of(&g, 1.0, &vec![0; 4]).unwrap();
        let inner = g.inner_faces()[0];
        let law = model.law_of(inner, 12).unwrap();
        let w: Vec<f64> = (-12..=12).map(|k| bessel_i_scaled(k, 1.0f64).powi(4)).collect();
        let z: f64 = w.iter().sum();
        for (i, wk) in w.iter().enumerate() {
            assert!((law.probs[i] - wk / z).abs() < 1e-15);
        }
        assert!(law.tv_bound < 1e-10);
    }

    #[test]
    fn dual_route_matches_current_route() {
        for g in [PlanarGraph::cycle(4, 1.0).unwrap(), PlanarGraph::theta(0.7), PlanarGraph::box_lattice(2, 1, 1.0).unwrap()] {
            let nv = g.num_vertices();
            for beta in [0.5, 1.5] {
                let a = partition_and_correlators(&g, beta, 0, nv - 1, 1, 16).unwrap();
                let b = dual_correlator(&g, beta, &dipole(nv, 0, nv - 1, 1), None).unwrap();
                assert!((a.ratio - b.ratio).abs() < 1e-11, "{} vs {}", a.ratio, b.ratio);
                let z0 = partition_function(&g, beta, &vec![0; nv], 16).unwrap();
                let z1 = dual_partition(&g, beta, &vec![0; nv], None).unwrap();
                assert!((z0.value - z1.sum.value).abs() < 1e-11 * z0.value);
            }
        }
    }

    #[test]
    fn bridge_correlator_is_bessel_ratio() {
        let g = PlanarGraph::path(3, 1.0).unwrap();
        let r = dual_correlator(&g, 1.0, &dipole(4, 0, 3, 1), None).unwrap();
        let q = bessel_i_scaled(1, 1.0f64) / bessel_i_scaled(0, 1.0f64);
        assert!((r.ratio - q.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn vertex_model_requires_pins() {
        let g = PlanarGraph::single_edge(1.0);
        assert!(HeightModel::on_vertices(&g, 1.0, &[]).is_err());
    }
}
