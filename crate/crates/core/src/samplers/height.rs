use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, HashMap};

use super::stats::{ChainSpec, Estimate};
use crate::bessel::{BesselTable, YkDistribution};
use crate::current::{assemble, HeightField};
use crate::error::{Error, Result};
use crate::graph::{edge_of, CutPath, FaceId, PlanarGraph, VertexId};
use crate::loops::{winding_at, LoopConfig, LoopMultigraph};

const TAIL_REL: f64 = 1e-14;

/// Single-face heat bath for the integer height model with Bessel weights.
pub struct HeightChain<'g> {
    g: &'g PlanarGraph,
    pub state: HeightField,
    /// Per inner face: (neighbouring face, table index).
    around: Vec<Vec<(FaceId, usize)>>,
    tables: Vec<BesselTable>,
    weights: Vec<f64>,
}

impl<'g> HeightChain<'g> {
    pub fn new(g: &'g PlanarGraph, beta: f64) -> Result<Self> {
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::Argument(format!("beta must be finite and positive, got {beta}")));
        }
        let mut tables: Vec<BesselTable> = Vec::new();
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut around = vec![Vec::new(); g.num_faces()];
        for f in 0..g.num_faces() {
            if g.is_outer(f) {
                continue;
            }
            for &h in g.face_walk(f) {
                let nb = g.right_face(h);
                if nb == f {
                    continue;
                }
                let bj = beta * g.coupling(edge_of(h));
                let t = *index.entry(bj.to_bits()).or_insert_with(|| {
                    tables.push(BesselTable::new(bj, 64));
                    tables.len() - 1
                });
                around[f].push((nb, t));
            }
        }
        Ok(HeightChain {
            g,
            state: HeightField::zero(g),
            around,
            tables,
            weights: Vec::new(),
        })
    }

    fn log_cond(&self, f: FaceId, k: i64) -> f64 {
        self.around[f]
            .iter()
            .map(|&(nb, t)| self.tables[t].log_scaled(k - self.state.values[nb]))
            .sum()
    }

    /// Resamples face `f` from its conditional law, enumerating outward from
    /// the mode until the remaining terms are negligible (the law is log-concave).
    pub fn update_face<R: Rng + ?Sized>(&mut self, f: FaceId, rng: &mut R) {
        if self.around[f].is_empty() {
            return;
        }
        let mut mode = self.state.values[f];
        let mut lm = self.log_cond(f, mode);
        loop {
            let up = self.log_cond(f, mode + 1);
            if up > lm {
                mode += 1;
                lm = up;
                continue;
            }
            let down = self.log_cond(f, mode - 1);
            if down > lm {
                mode -= 1;
                lm = down;
                continue;
            }
            break;
        }
        // weights[i] for heights lo..=hi
        let mut right = vec![1.0];
        let mut acc = 1.0;
        let mut k = mode + 1;
        loop {
            let w = (self.log_cond(f, k) - lm).exp();
            if w < TAIL_REL * acc {
                break;
            }
            right.push(w);
            acc += w;
            k += 1;
        }
        let mut left = Vec::new();
        let mut k = mode - 1;
        loop {
            let w = (self.log_cond(f, k) - lm).exp();
            if w < TAIL_REL * acc {
                break;
            }
            left.push(w);
            acc += w;
            k -= 1;
        }
        let lo = mode - left.len() as i64;
        self.weights.clear();
        self.weights.extend(left.iter().rev());
        self.weights.extend(right.iter());
        let mut u = rng.random::<f64>() * acc;
        for (i, &w) in self.weights.iter().enumerate() {
            if u < w {
                self.state.values[f] = lo + i as i64;
                return;
            }
            u -= w;
        }
        self.state.values[f] = lo + self.weights.len() as i64 - 1;
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for f in 0..self.g.num_faces() {
            if !self.g.is_outer(f) {
                self.update_face(f, rng);
            }
        }
    }
}

/// Height fields sampled by the single-face heat bath, outer faces pinned at 0.
pub fn height_heat_bath(g: &PlanarGraph, beta: f64, spec: &ChainSpec) -> Result<Vec<HeightField>> {
    spec.validate()?;
    let mut rng = spec.rng(0);
    let mut chain = HeightChain::new(g, beta)?;
    for _ in 0..spec.burn_in {
        chain.sweep(&mut rng);
    }
    let mut out = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        for _ in 0..spec.thinning {
            chain.sweep(&mut rng);
        }
        out.push(chain.state.clone());
    }
    Ok(out)
}

/// Draws the loop configuration above a height field: amplitudes from
/// `Y_{|∇h|}` per edge, then a uniform pairing at every vertex.
pub struct Augmenter<'g> {
    g: &'g PlanarGraph,
    beta: f64,
    cache: HashMap<(usize, u64), YkDistribution<f64>>,
}

impl<'g> Augmenter<'g> {
    pub fn new(g: &'g PlanarGraph, beta: f64) -> Self {
        Augmenter {
            g,
            beta,
            cache: HashMap::new(),
        }
    }

    pub fn augment<R: Rng + ?Sized>(&mut self, h: &HeightField, rng: &mut R) -> Result<LoopConfig> {
        let g = self.g;
        let mut x = vec![0i64; g.num_edges()];
        for (e, xe) in x.iter_mut().enumerate() {
            let k = h.gradient(g, 2 * e).unsigned_abs();
            let bj = self.beta * g.coupling(e);
            let d = self.cache.entry((e, k)).or_insert_with(|| YkDistribution::new(k, bj));
            *xe = d.sample(rng) as i64;
        }
        let n = assemble(g, h, &x)?;
        let multigraph = LoopMultigraph::from_current(&n);
        let nv = g.num_vertices();
        let mut ins = vec![Vec::new(); nv];
        let mut outs = vec![Vec::new(); nv];
        for (c, &he) in multigraph.copies.iter().enumerate() {
            ins[g.head(he)].push(c);
            outs[g.origin(he)].push(c);
        }
        let mut succ = vec![None; multigraph.len()];
        for v in 0..nv {
            outs[v].shuffle(rng);
            for (&c, &d) in ins[v].iter().zip(&outs[v]) {
                succ[c] = Some(d);
            }
        }
        Ok(LoopConfig {
            multigraph,
            succ,
            source_set: vec![false; nv],
        })
    }
}

pub fn augment_to_loops<R: Rng + ?Sized>(g: &PlanarGraph, h: &HeightField, beta: f64, rng: &mut R) -> Result<LoopConfig> {
    Augmenter::new(g, beta).augment(h, rng)
}

/// Runs heat bath and augmentation, calling `visit` with each sampled pair.
pub fn loop_samples<F>(g: &PlanarGraph, beta: f64, spec: &ChainSpec, mut visit: F) -> Result<()>
where
    F: FnMut(&HeightField, &LoopConfig) -> Result<()>,
{
    spec.validate()?;
    let mut rng = spec.rng(0);
    let mut aug_rng = spec.rng(1);
    let mut chain = HeightChain::new(g, beta)?;
    let mut aug = Augmenter::new(g, beta);
    for _ in 0..spec.burn_in {
        chain.sweep(&mut rng);
    }
    for _ in 0..spec.samples {
        for _ in 0..spec.thinning {
            chain.sweep(&mut rng);
        }
        let cfg = aug.augment(&chain.state, &mut aug_rng)?;
        visit(&chain.state, &cfg)?;
    }
    Ok(())
}

/// `⟨σ_a^2 σ̄_b^2⟩` estimated as the sample mean of `m_{a,b}/(m_{a,b}+1)`.
pub fn estimate_two_point_sq(g: &PlanarGraph, beta: f64, a: VertexId, b: VertexId, spec: &ChainSpec) -> Result<Estimate> {
    if a == b || a >= g.num_vertices() || b >= g.num_vertices() {
        return Err(Error::Argument("a and b must be distinct vertices of the graph".into()));
    }
    if g.component_of(a) != g.component_of(b) {
        return Ok(Estimate::exact(0.0, spec.samples));
    }
    let mut xs = Vec::with_capacity(spec.samples);
    loop_samples(g, beta, spec, |_, cfg| {
        let m = cfg.count_m(g, a, b)? as f64;
        xs.push(m / (m + 1.0));
        Ok(())
    })?;
    Ok(Estimate::from_series(&xs))
}

/// Joint statistics of heights, windings and cut crossings along one chain.
#[derive(Clone, Debug)]
pub struct WindingStats {
    pub face: FaceId,
    /// `E|h(face)|`.
    pub abs_height: Estimate,
    /// Histogram of `W(face)`.
    pub winding_histogram: BTreeMap<i64, u64>,
    /// `Σ_{a∈L_+, b∈L_−} m_{a,b}` per sample, when a cut is given.
    pub cut_m: Option<Estimate>,
    /// Samples where `W(face) ≠ h(face)`.
    pub mismatches: usize,
    /// Samples where `|W(face)|` exceeds the cut sum.
    pub domination_violations: usize,
    pub samples: usize,
}

pub fn winding_and_height_stats(
    g: &PlanarGraph,
    beta: f64,
    spec: &ChainSpec,
    face: FaceId,
    cut: Option<&CutPath>,
) -> Result<WindingStats> {
    if face >= g.num_faces() {
        return Err(Error::Argument(format!("face {face} out of range")));
    }
    let mut abs_h = Vec::with_capacity(spec.samples);
    let mut cut_sums = Vec::new();
    let mut hist = BTreeMap::new();
    let (mut mismatches, mut violations) = (0, 0);
    loop_samples(g, beta, spec, |h, cfg| {
        let w = winding_at(g, cfg, face)?;
        let hv = h.get(face);
        if w != hv {
            mismatches += 1;
        }
        *hist.entry(w).or_insert(0) += 1;
        abs_h.push(hv.abs() as f64);
        if let Some(c) = cut {
            let mut s = 0usize;
            for &a in &c.plus_side {
                for &b in &c.minus_side {
                    s += cfg.count_m(g, a, b)?;
                }
            }
            if w.unsigned_abs() as usize > s {
                violations += 1;
            }
            cut_sums.push(s as f64);
        }
        Ok(())
    })?;
    Ok(WindingStats {
        face,
        abs_height: Estimate::from_series(&abs_h),
        winding_histogram: hist,
        cut_m: cut.map(|_| Estimate::from_series(&cut_sums)),
        mismatches,
        domination_violations: violations,
        samples: spec.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;
    use crate::current::{divergence, Current};

    fn single_face_law(beta: f64, kmax: i64) -> Vec<(i64, f64)> {
        let w: Vec<(i64, f64)> = (-kmax..=kmax).map(|k| (k, bessel_i_scaled::<f64>(k, beta).powi(4))).collect();
        let z: f64 = w.iter().map(|x| x.1).sum();
        w.into_iter().map(|(k, x)| (k, x / z)).collect()
    }

    #[test]
    fn single_face_heights_match_bessel_law() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let f = g.inner_faces()[0];
        let spec = ChainSpec::new(21, 10, 100_000, 1);
        let hs = height_heat_bath(&g, 1.0, &spec).unwrap();
        let mut counts: BTreeMap<i64, f64> = BTreeMap::new();
        for h in &hs {
            *counts.entry(h.get(f)).or_default() += 1.0 / hs.len() as f64;
        }
        let law = single_face_law(1.0, 12);
        let tv: f64 = 0.5 * law.iter().map(|(k, p)| (counts.get(k).copied().unwrap_or(0.0) - p).abs()).sum::<f64>();
        assert!(tv < 0.01, "{tv}");
    }

    #[test]
    fn augmentation_gives_sourceless_consistent_loops() {
        let g = PlanarGraph::box_lattice(2, 2, 1.0).unwrap();
        let spec = ChainSpec::new(2, 5, 200, 1);
        loop_samples(&g, 1.2, &spec, |h, cfg| {
            cfg.validate(&g)?;
            let n: Current = cfg.current(&g);
            assert!(divergence(&g, &n).iter().all(|&d| d == 0));
            assert_eq!(&crate::current::height_from_current(&g, &n)?, h);
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn one_lap_draw_is_forced() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let f = g.inner_faces()[0];
        let mut h = HeightField::zero(&g);
        h.values[f] = 1;
        // at tiny β every X_e is 0 with overwhelming probability
        let mut rng = ChainSpec::new(0, 0, 1, 1).rng(0);
        let cfg = augment_to_loops(&g, &h, 1e-9, &mut rng).unwrap();
        assert_eq!(cfg.multigraph.len(), 4);
        assert_eq!(winding_at(&g, &cfg, f).unwrap(), 1);
    }

    #[test]
    fn single_edge_two_point_square() {
        let g = PlanarGraph::single_edge(1.0);
        let spec = ChainSpec::new(3, 0, 20000, 1);
        let e = estimate_two_point_sq(&g, 1.0, 0, 1, &spec).unwrap();
        let exact = bessel_i_scaled::<f64>(2, 1.0) / bessel_i_scaled::<f64>(0, 1.0);
        assert!(e.within(exact, 4.0), "{e:?} {exact}");
    }

    #[test]
    fn winding_equals_height_every_sample() {
        let g = PlanarGraph::box_lattice(3, 3, 1.0).unwrap();
        let face = g.inner_faces()[4];
        let cut = CutPath::vertical_through(&g, face).unwrap();
        let spec = ChainSpec::new(8, 10, 500, 1);
        let s = winding_and_height_stats(&g, 1.0, &spec, face, Some(&cut)).unwrap();
        assert_eq!(s.mismatches, 0);
        assert_eq!(s.domination_violations, 0);
        assert!(s.abs_height.mean <= s.cut_m.unwrap().mean);
    }
}
