use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::elimination::FactorGraph;
use crate::error::{Error, Result};
use crate::graph::{PlanarGraph, VertexId};

/// Largest graph handed to spin-space quadrature.
pub const QUAD_MAX_VERTICES: usize = 5;
const QUAD_TOL: f64 = 1e-10;
const MIN_POINTS: usize = 16;
const MAX_POINTS: usize = 512;

fn check(g: &PlanarGraph, monomial: &[(VertexId, i64)]) -> Result<()> {
    if g.num_vertices() > QUAD_MAX_VERTICES {
        return Err(Error::Guard {
            what: "spin quadrature".into(),
            estimate: g.num_vertices() as f64,
            limit: QUAD_MAX_VERTICES as f64,
        });
    }
    if let Some(&(v, _)) = monomial.iter().find(|(v, _)| *v >= g.num_vertices()) {
        return Err(Error::Argument(format!("vertex {v} out of range")));
    }
    Ok(())
}

/// `⟨Π σ_v^{k_v}⟩` with `points` equally spaced angles per spin.
pub fn quad_at(g: &PlanarGraph, beta: f64, monomial: &[(VertexId, i64)], points: usize) -> Result<f64> {
    check(g, monomial)?;
    let nv = g.num_vertices();
    let mut power = vec![0i64; nv];
    for &(v, k) in monomial {
        power[v] += k;
    }
    let cos: Vec<f64> = (0..points).map(|j| (TAU * j as f64 / points as f64).cos()).collect();
    let build = |with_obs: bool| {
        let mut fg = FactorGraph::<Complex64>::new(vec![points; nv]);
        for e in 0..g.num_edges() {
            let (u, v) = g.endpoints(e);
            if u == v {
                continue;
            }
            let bj = beta * g.coupling(e);
            fg.add_fn(&[u, v], |x| {
                let d = (x[0] + points - x[1]) % points;
                Complex64::new((bj * (cos[d] - 1.0)).exp(), 0.0)
            });
        }
        if with_obs {
            for (v, &k) in power.iter().enumerate() {
                if k != 0 {
                    fg.add_fn(&[v], |x| Complex64::from_polar(1.0, TAU * (k * x[0] as i64) as f64 / points as f64));
                }
            }
        }
        fg.total()
    };
    let (num, ln) = build(true)?;
    let (den, ld) = build(false)?;
    Ok((num / den).re * (ln - ld).exp())
}

/// `⟨Π σ_v^{k_v}⟩` by periodic trapezoid quadrature in every angle,
/// doubling the resolution until successive values agree.
///
/// Returns the value and the resolution it was computed at.
pub fn quad_correlator_at(g: &PlanarGraph, beta: f64, monomial: &[(VertexId, i64)]) -> Result<(f64, usize)> {
    check(g, monomial)?;
    let nv = g.num_vertices();
    let mut power = vec![0i64; nv];
    for &(v, k) in monomial {
        power[v] += k;
    }
    if power.iter().sum::<i64>() != 0 {
        return Ok((0.0, 0));
    }
    if power.iter().all(|&k| k == 0) {
        return Ok((1.0, 0));
    }
    let kmax = power.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0);
    let mut points = MIN_POINTS.max(4 * kmax).next_power_of_two();
    let mut prev = quad_at(g, beta, monomial, points)?;
    while points < MAX_POINTS {
        points *= 2;
        let cur = quad_at(g, beta, monomial, points)?;
        if (cur - prev).abs() < QUAD_TOL {
            return Ok((cur, points));
        }
        prev = cur;
    }
    Err(Error::Guard {
        what: "quadrature resolution".into(),
        estimate: (2 * points) as f64,
        limit: MAX_POINTS as f64,
    })
}

/// `⟨Π σ_v^{k_v}⟩` on a graph with at most five vertices.
pub fn quad_correlator(g: &PlanarGraph, beta: f64, monomial: &[(VertexId, i64)]) -> Result<f64> {
    quad_correlator_at(g, beta, monomial).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;

    #[test]
    fn trivial_monomials() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        assert_eq!(quad_correlator(&g, 1.0, &[(0, 1), (0, -1)]).unwrap(), 1.0);
        assert_eq!(quad_correlator(&g, 1.0, &[(0, 1), (1, 1)]).unwrap(), 0.0);
    }

    #[test]
    fn single_edge_bessel_ratio() {
        let g = PlanarGraph::single_edge(1.0);
        for beta in [0.5, 1.0, 2.0, 4.0] {
            for k in 1..4 {
                let q = quad_correlator(&g, beta, &[(0, k), (1, -k)]).unwrap();
                let exact = bessel_i_scaled::<f64>(k, beta) / bessel_i_scaled::<f64>(0, beta);
                assert!((q - exact).abs() < 1e-12, "{beta} {k}: {q} {exact}");
            }
        }
    }

    #[test]
    fn guard_on_large_graphs() {
        let g = PlanarGraph::box_lattice(2, 2, 1.0).unwrap();
        assert!(matches!(quad_correlator(&g, 1.0, &[(0, 1), (1, -1)]), Err(Error::Guard { .. })));
    }
}
