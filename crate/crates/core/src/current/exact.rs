use super::enumerate::{amplitude_tail_bound, current_tail_bound, for_each_net_flow};
use super::{dipole, SourceFunction};
use crate::error::{Error, Result};
use crate::graph::{PlanarGraph, VertexId};
use crate::scalar::{ln_factorial, CompensatedSum};

const NET_FLOW_GUARD: f64 = 2.0e8;

/// A truncated nonnegative series: the true value lies in
/// `[value, value + tail_bound]`, both expressed relative to `e^{log_scale}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail_bound: f64,
    pub log_scale: f64,
}

impl TruncatedSum {
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

/// Ratio of two truncated sums with a rigorous enclosure.
#[derive(Clone, Copy, Debug)]
pub struct CorrelatorResult {
    pub numerator: TruncatedSum,
    pub denominator: TruncatedSum,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CorrelatorResult {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// True when the enclosure is finite and at most `tol` wide.
    pub fn certifies(&self, tol: f64) -> bool {
        self.upper.is_finite() && self.width() <= tol
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lower - slack && x <= self.upper + slack
    }
}

/// `[(N − t)/(D + t), (N + t)/(D − t)]` with both sums on a common scale.
pub fn correlator_enclosure(num: TruncatedSum, den: TruncatedSum) -> CorrelatorResult {
    let shift = (num.log_scale - den.log_scale).exp();
    let (n, tn) = (num.value * shift, num.tail_bound * shift);
    let (d, td) = (den.value, den.tail_bound);
    let ratio = n / d;
    let lower = ((n - tn) / (d + td)).max(0.0);
    let upper = if d > td { (n + tn) / (d - td) } else { f64::INFINITY };
    CorrelatorResult {
        numerator: num,
        denominator: den,
        ratio,
        lower,
        upper,
    }
}

/// How a truncated current sum is cut off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// Every directed entry `n_h ≤ N`.
    Directed(u32),
    /// Every amplitude `n_h + n_twin(h) ≤ A`.
    Amplitude(u32),
}

impl Truncation {
    pub fn cap(&self) -> u32 {
        match *self {
            Truncation::Directed(n) | Truncation::Amplitude(n) => n,
        }
    }

    /// Largest smaller entry `x` allowed on an edge with net flow `|d|`.
    pub fn max_x(&self, ad: u64) -> u64 {
        match *self {
            Truncation::Directed(n) => n as u64 - ad,
            Truncation::Amplitude(a) => (a as u64 - ad) / 2,
        }
    }

    pub fn tail_bound(&self, g: &PlanarGraph, beta: f64) -> f64 {
        match *self {
            Truncation::Directed(n) => current_tail_bound(g, beta, n),
            Truncation::Amplitude(a) => amplitude_tail_bound(g, beta, a),
        }
    }
}

/// `Σ_x e^{−βJ}(βJ/2)^{2x+|d|}/(x!(x+|d|)!)` for `d ∈ [−N, N]`, `x` limited by the truncation.
fn edge_table(beta_j: f64, trunc: Truncation) -> Vec<f64> {
    let n = trunc.cap() as i64;
    let lx = (beta_j / 2.0).ln();
    (-n..=n)
        .map(|d| {
            let ad = d.unsigned_abs();
            let mut acc = CompensatedSum::new();
            for x in 0..=trunc.max_x(ad) {
                let p = 2 * x + ad;
                acc.add((p as f64 * lx - ln_factorial::<f64>(x) - ln_factorial::<f64>(x + ad) - beta_j).exp());
            }
            acc.value()
        })
        .collect()
}

/// `Z^φ_{G,β}` summed over currents with every directed entry `≤ cutoff`,
/// reported relative to `e^{βΣJ}`.
///
/// The sum runs over net flows (the cycle space), so every edge's pair of
/// entries is summed in closed form rather than enumerated.
pub fn partition_function(g: &PlanarGraph, beta: f64, phi: &SourceFunction, cutoff: u32) -> Result<TruncatedSum> {
    partition_function_truncated(g, beta, phi, Truncation::Directed(cutoff))
}

/// `Z^φ_{G,β}` under an arbitrary truncation, relative to `e^{βΣJ}`.
pub fn partition_function_truncated(
    g: &PlanarGraph,
    beta: f64,
    phi: &SourceFunction,
    trunc: Truncation,
) -> Result<TruncatedSum> {
    let cutoff = trunc.cap();
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::Argument(format!("beta must be finite and nonnegative, got {beta}")));
    }
    let rank = g.num_edges() + g.num_components() - g.num_vertices();
    let est = (2.0 * cutoff as f64 + 1.0).powi(rank as i32);
    if est > NET_FLOW_GUARD {
        return Err(Error::Guard {
            what: "net-flow enumeration".into(),
            estimate: est,
            limit: NET_FLOW_GUARD,
        });
    }
    let log_scale: f64 = beta * g.couplings().iter().sum::<f64>();
    if beta == 0.0 {
        let zero = phi.iter().all(|&x| x == 0);
        return Ok(TruncatedSum {
            value: if zero { 1.0 } else { 0.0 },
            tail_bound: 0.0,
            log_scale,
        });
    }
    let tables: Vec<Vec<f64>> = (0..g.num_edges())
        .map(|e| edge_table(beta * g.coupling(e), trunc))
        .collect();
    let off = cutoff as i64;
    let mut acc = CompensatedSum::new();
    for_each_net_flow(g, phi, off, |d| {
        let mut p = 1.0;
        for (e, &de) in d.iter().enumerate() {
            p *= tables[e][(de + off) as usize];
        }
        acc.add(p);
    })?;
    Ok(TruncatedSum {
        value: acc.value(),
        tail_bound: trunc.tail_bound(g, beta),
        log_scale,
    })
}

/// `Z^φ` together with `Σ_n w_β(n)·|n|_e`, both truncated and relative to `e^{βΣJ}`.
///
/// The second value carries no tail bound of its own.
pub fn partition_with_edge_moment(
    g: &PlanarGraph,
    beta: f64,
    phi: &SourceFunction,
    trunc: Truncation,
    edge: usize,
) -> Result<(TruncatedSum, f64)> {
    if edge >= g.num_edges() {
        return Err(Error::Argument(format!("edge {edge} out of range")));
    }
    let z = partition_function_truncated(g, beta, phi, trunc)?;
    if beta == 0.0 {
        return Ok((z, 0.0));
    }
    let cutoff = trunc.cap();
    let tables: Vec<Vec<f64>> = (0..g.num_edges())
        .map(|e| edge_table(beta * g.coupling(e), trunc))
        .collect();
    let bj = beta * g.coupling(edge);
    let lx = (bj / 2.0).ln();
    let off = cutoff as i64;
    let moment: Vec<f64> = (-off..=off)
        .map(|d| {
            let ad = d.unsigned_abs();
            let mut acc = CompensatedSum::new();
            for x in 0..=trunc.max_x(ad) {
                let p = 2 * x + ad;
                acc.add(p as f64 * (p as f64 * lx - ln_factorial::<f64>(x) - ln_factorial::<f64>(x + ad) - bj).exp());
            }
            acc.value()
        })
        .collect();
    let mut acc = CompensatedSum::new();
    for_each_net_flow(g, phi, off, |d| {
        let mut p = moment[(d[edge] + off) as usize];
        for (e, &de) in d.iter().enumerate() {
            if e != edge {
                p *= tables[e][(de + off) as usize];
            }
        }
        acc.add(p);
    })?;
    Ok((z, acc.value()))
}

/// `⟨σ_a^k σ̄_b^k⟩ = Z^{kδ_a − kδ_b} / Z^0` with a rigorous enclosure.
pub fn partition_and_correlators(
    g: &PlanarGraph,
    beta: f64,
    a: VertexId,
    b: VertexId,
    k: u32,
    cutoff: u32,
) -> Result<CorrelatorResult> {
    let nv = g.num_vertices();
    if a >= nv || b >= nv {
        return Err(Error::Argument(format!("vertex out of range for {nv} vertices")));
    }
    let den = partition_function(g, beta, &vec![0; nv], cutoff)?;
    let num = if k == 0 || a == b {
        den
    } else {
        partition_function(g, beta, &dipole(nv, a, b, k as i64), cutoff)?
    };
    Ok(correlator_enclosure(num, den))
}

/// Smallest cutoff whose tail bound is below `rel_tol` times a lower bound of `Z^0`.
pub fn cutoff_for(g: &PlanarGraph, beta: f64, rel_tol: f64) -> u32 {
    // Z^0 ≥ the zero current's weight, i.e. 1, so e^{-βΣJ} bounds Z^0 scaled from below
    let z_lower = (-beta * g.couplings().iter().sum::<f64>()).exp();
    (1..200)
        .find(|&n| current_tail_bound(g, beta, n) <= rel_tol * z_lower)
        .unwrap_or(200)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;
    use crate::current::{enumerate_currents, weight_log};

    #[test]
    fn single_edge_ratio_tends_to_bessel_ratio() {
        let g = PlanarGraph::single_edge(1.0);
        for beta in [0.5, 1.0, 2.0] {
            let r = partition_and_correlators(&g, beta, 0, 1, 1, 25).unwrap();
            let exact = bessel_i_scaled(1, beta) / bessel_i_scaled(0, beta);
            assert!((r.ratio - exact).abs() < 1e-13, "{beta}");
            assert!(r.contains(exact, 1e-14));
            assert!(r.certifies(1e-12));
        }
    }

    #[test]
    fn power_zero_is_one() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let r = partition_and_correlators(&g, 1.0, 0, 2, 0, 10).unwrap();
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn agrees_with_explicit_current_sum() {
        let g = PlanarGraph::theta(1.0);
        let beta = 1.3;
        let phi = dipole(4, 0, 3, 1);
        let z = partition_function(&g, beta, &phi, 3).unwrap();
        let en = enumerate_currents(&g, &phi, 3, beta).unwrap();
        let direct: f64 = en
            .currents
            .iter()
            .map(|n| (weight_log(&g, n, beta) - z.log_scale).exp())
            .sum();
        assert!((direct - z.value).abs() < 1e-14 * direct.max(1.0));
    }

    #[test]
    fn cutoff_for_reaches_tolerance() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let n = cutoff_for(&g, 2.0, 1e-10);
        let r = partition_and_correlators(&g, 2.0, 0, 1, 1, n).unwrap();
        assert!(r.certifies(1e-8));
    }
}
