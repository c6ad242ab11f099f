use rand::Rng;
use std::f64::consts::{PI, TAU};

use super::stats::{ChainSpec, Estimate};
use crate::error::{Error, Result};
use crate::graph::{PlanarGraph, VertexId};

/// One angle per vertex; `σ_v = e^{iθ_v}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinConfig {
    pub theta: Vec<f64>,
}

impl SpinConfig {
    pub fn aligned(n: usize) -> Self {
        SpinConfig { theta: vec![0.0; n] }
    }

    /// `Re σ_a^k σ̄_b^k`.
    pub fn two_point(&self, a: VertexId, b: VertexId, k: i64) -> f64 {
        (k as f64 * (self.theta[a] - self.theta[b])).cos()
    }

    /// Rotates every spin by `alpha`.
    pub fn rotated(&self, alpha: f64) -> Self {
        SpinConfig {
            theta: self.theta.iter().map(|t| wrap(t + alpha)).collect(),
        }
    }
}

fn wrap(t: f64) -> f64 {
    let x = t.rem_euclid(TAU);
    if x > PI {
        x - TAU
    } else {
        x
    }
}

/// Observables of the spin chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// `Re σ_a^k σ̄_b^k`.
    TwoPoint { a: VertexId, b: VertexId, k: i64 },
    /// `−Σ_e J_e cos(θ_u − θ_v)`.
    Energy,
}

impl Observable {
    pub fn measure(&self, g: &PlanarGraph, s: &SpinConfig) -> f64 {
        match *self {
            Observable::TwoPoint { a, b, k } => s.two_point(a, b, k),
            Observable::Energy => -(0..g.num_edges())
                .map(|e| {
                    let (u, v) = g.endpoints(e);
                    g.coupling(e) * (s.theta[u] - s.theta[v]).cos()
                })
                .sum::<f64>(),
        }
    }
}

/// Draw from the von Mises law `∝ e^{κ cos(θ − μ)}` (Best–Fisher rejection).
pub fn von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-9 {
        return wrap(rng.random::<f64>() * TAU);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let t = f.clamp(-1.0, 1.0).acos();
            return wrap(mu + if u3 > 0.5 { t } else { -t });
        }
    }
}

/// Heat-bath sweeps in vertex order followed by one reflection cluster.
pub struct SpinChain<'g> {
    g: &'g PlanarGraph,
    beta: f64,
    pub state: SpinConfig,
    nbrs: Vec<Vec<(VertexId, f64)>>,
    stack: Vec<VertexId>,
    in_cluster: Vec<bool>,
}

impl<'g> SpinChain<'g> {
    pub fn new(g: &'g PlanarGraph, beta: f64) -> Self {
        let mut nbrs = vec![Vec::new(); g.num_vertices()];
        for e in 0..g.num_edges() {
            let (u, v) = g.endpoints(e);
            if u != v {
                nbrs[u].push((v, g.coupling(e)));
                nbrs[v].push((u, g.coupling(e)));
            }
        }
        SpinChain {
            g,
            beta,
            state: SpinConfig::aligned(g.num_vertices()),
            nbrs,
            stack: Vec::new(),
            in_cluster: vec![false; g.num_vertices()],
        }
    }

    pub fn heat_bath_sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for v in 0..self.g.num_vertices() {
            let (mut x, mut y) = (0.0, 0.0);
            for &(u, j) in &self.nbrs[v] {
                x += j * self.state.theta[u].cos();
                y += j * self.state.theta[u].sin();
            }
            let kappa = self.beta * (x * x + y * y).sqrt();
            self.state.theta[v] = von_mises(rng, y.atan2(x), kappa);
        }
    }

    /// Reflection of one cluster across a uniformly random axis.
    pub fn cluster_update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let nv = self.g.num_vertices();
        if nv == 0 {
            return 0;
        }
        let phi = rng.random::<f64>() * TAU;
        let (rx, ry) = (phi.cos(), phi.sin());
        let proj = |t: f64| t.cos() * rx + t.sin() * ry;
        let seed = rng.random_range(0..nv);
        self.in_cluster.iter_mut().for_each(|x| *x = false);
        self.stack.clear();
        self.stack.push(seed);
        self.in_cluster[seed] = true;
        let mut size = 0;
        while let Some(u) = self.stack.pop() {
            let pu = proj(self.state.theta[u]);
            self.state.theta[u] = wrap(PI + 2.0 * phi - self.state.theta[u]);
            size += 1;
            for &(v, j) in &self.nbrs[u] {
                if self.in_cluster[v] {
                    continue;
                }
                let x = -2.0 * self.beta * j * pu * proj(self.state.theta[v]);
                let p = 1.0 - x.min(0.0).exp();
                if rng.random::<f64>() < p {
                    self.in_cluster[v] = true;
                    self.stack.push(v);
                }
            }
        }
        size
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, clusters: bool) {
        self.heat_bath_sweep(rng);
        if clusters {
            self.cluster_update(rng);
        }
    }
}

/// Runs one spin chain and records `measure(state)` after every thinning interval.
pub fn spin_mcmc_with<F>(g: &PlanarGraph, beta: f64, spec: &ChainSpec, clusters: bool, mut measure: F) -> Result<Vec<Estimate>>
where
    F: FnMut(&SpinConfig) -> Vec<f64>,
{
    spec.validate()?;
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::Argument(format!("beta must be finite and nonnegative, got {beta}")));
    }
    let mut rng = spec.rng(0);
    let mut chain = SpinChain::new(g, beta);
    for v in 0..g.num_vertices() {
        chain.state.theta[v] = wrap(rng.random::<f64>() * TAU);
    }
    for _ in 0..spec.burn_in {
        chain.sweep(&mut rng, clusters);
    }
    let mut series: Vec<Vec<f64>> = Vec::new();
    for i in 0..spec.samples {
        for _ in 0..spec.thinning {
            chain.sweep(&mut rng, clusters);
        }
        let row = measure(&chain.state);
        if i == 0 {
            series = vec![Vec::with_capacity(spec.samples); row.len()];
        }
        for (s, x) in series.iter_mut().zip(row) {
            s.push(x);
        }
    }
    Ok(series.iter().map(|s| Estimate::from_series(s)).collect())
}

/// Heat-bath plus reflection-cluster chain for the listed observables.
pub fn spin_mcmc(g: &PlanarGraph, beta: f64, spec: &ChainSpec, observables: &[Observable]) -> Result<Vec<Estimate>> {
    spin_mcmc_with(g, beta, spec, true, |s| observables.iter().map(|o| o.measure(g, s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;
    use crate::samplers::quad_correlator;

    #[test]
    fn von_mises_mean_resultant() {
        let mut rng = ChainSpec::new(1, 0, 1, 1).rng(0);
        for kappa in [0.3, 2.0, 20.0] {
            let n = 40000;
            let m: f64 = (0..n).map(|_| von_mises(&mut rng, 0.7, kappa)).map(|t| (t - 0.7).cos()).sum::<f64>() / n as f64;
            let want = bessel_i_scaled::<f64>(1, kappa) / bessel_i_scaled::<f64>(0, kappa);
            assert!((m - want).abs() < 0.01, "{kappa}: {m} {want}");
        }
    }

    #[test]
    fn infinite_temperature_is_uncorrelated() {
        let g = PlanarGraph::single_edge(1.0);
        let spec = ChainSpec::new(9, 10, 4000, 1);
        let e = spin_mcmc(&g, 0.0, &spec, &[Observable::TwoPoint { a: 0, b: 1, k: 1 }]).unwrap();
        assert!(e[0].within(0.0, 4.0), "{e:?}");
    }

    #[test]
    fn agrees_with_quadrature_on_four_cycle() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let spec = ChainSpec::new(11, 100, 20000, 1);
        let obs = [Observable::TwoPoint { a: 0, b: 1, k: 1 }, Observable::TwoPoint { a: 0, b: 2, k: 2 }];
        let e = spin_mcmc(&g, 1.0, &spec, &obs).unwrap();
        let q1 = quad_correlator(&g, 1.0, &[(0, 1), (1, -1)]).unwrap();
        let q2 = quad_correlator(&g, 1.0, &[(0, 2), (2, -2)]).unwrap();
        assert!(e[0].within(q1, 4.0) && e[0].ess >= 500.0, "{e:?} {q1}");
        assert!(e[1].within(q2, 4.0), "{e:?} {q2}");
    }

    #[test]
    fn same_seed_same_output() {
        let g = PlanarGraph::box_lattice(2, 2, 1.0).unwrap();
        let spec = ChainSpec::new(4, 5, 200, 2);
        let obs = [Observable::Energy];
        assert_eq!(spin_mcmc(&g, 0.8, &spec, &obs).unwrap(), spin_mcmc(&g, 0.8, &spec, &obs).unwrap());
    }

    #[test]
    fn two_point_is_rotation_invariant() {
        let s = SpinConfig {
            theta: vec![0.3, -2.0, 1.1],
        };
        let r = s.rotated(2.5);
        assert!((s.two_point(0, 1, 1) - r.two_point(0, 1, 1)).abs() < 1e-12);
    }
}
