use crate::current::{dual_correlator, partition_function, cutoff_for, correlator_enclosure, SourceFunction};
use crate::error::{Error, Result};
use crate::graph::PlanarGraph;
use crate::samplers::{quad_correlator, QUAD_MAX_VERTICES};

/// Largest number of net flows the current route will sum over.
const NET_FLOW_BUDGET: f64 = 2.0e5;
const QUAD_ACCURACY: f64 = 1e-10;
/// Routes must agree to this much beyond their own enclosures.
pub const ROUTE_SLACK: f64 = 1e-9;

/// A correlator from every exact route that fits its guard, cross-checked.
#[derive(Clone, Debug)]
pub struct OracleValue {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub routes: Vec<(&'static str, f64)>,
}

impl OracleValue {
    fn exact(x: f64, route: &'static str) -> Self {
        OracleValue {
            value: x,
            lower: x,
            upper: x,
            routes: vec![(route, x)],
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn current_route_fits(g: &PlanarGraph, cutoff: u32) -> bool {
    let rank = g.num_edges() + g.num_components() - g.num_vertices();
    (2.0 * cutoff as f64 + 1.0).powi(rank as i32) <= NET_FLOW_BUDGET
}

/// `⟨Π σ_v^{φ_v}⟩` (conjugates for negative powers) by quadrature, current sums
/// and dual heights, whichever are feasible; at least one must be.
pub fn exact_correlator(g: &PlanarGraph, beta: f64, phi: &SourceFunction) -> Result<OracleValue> {
    let nv = g.num_vertices();
    if phi.len() != nv {
        return Err(Error::Argument(format!("source function has {} entries for {nv} vertices", phi.len())));
    }
    if phi.iter().all(|&x| x == 0) {
        return Ok(OracleValue::exact(1.0, "trivial"));
    }
    let mut charge = vec![0i64; g.num_components()];
    for (v, &x) in phi.iter().enumerate() {
        charge[g.component_of(v)] += x;
    }
    if charge.iter().any(|&c| c != 0) {
        return Ok(OracleValue::exact(0.0, "charge"));
    }

    let mut routes: Vec<(&'static str, f64, f64, f64)> = Vec::new();
    let cutoff = cutoff_for(g, beta, 1e-13);
    if current_route_fits(g, cutoff) {
        let den = partition_function(g, beta, &vec![0; nv], cutoff)?;
        let num = partition_function(g, beta, phi, cutoff)?;
        let c = correlator_enclosure(num, den);
        routes.push(("currents", c.ratio, c.lower, c.upper));
    }
    match dual_correlator(g, beta, phi, None) {
        Ok(c) => routes.push(("heights", c.ratio, c.lower, c.upper)),
        Err(Error::Guard { .. }) => {}
        Err(e) => return Err(e),
    }
    // quadrature is the slowest route; it only runs when it is needed as a second opinion
    if routes.len() < 2 && nv <= QUAD_MAX_VERTICES {
        let mono: Vec<_> = phi.iter().enumerate().filter(|x| *x.1 != 0).map(|(v, &k)| (v, k)).collect();
        match quad_correlator(g, beta, &mono) {
            Ok(q) => routes.push(("quadrature", q, q - QUAD_ACCURACY, q + QUAD_ACCURACY)),
            Err(Error::Guard { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if routes.is_empty() {
        return Err(Error::Unsupported("no exact route fits its guard".into()));
    }
    for (i, x) in routes.iter().enumerate() {
        for y in &routes[i + 1..] {
            if x.2 > y.3 + ROUTE_SLACK || y.2 > x.3 + ROUTE_SLACK {
                return Err(Error::Consistency(format!(
                    "{} route gives {} but {} route gives {}",
                    x.0, x.1, y.0, y.1
                )));
            }
        }
    }
    let best = routes
        .iter()
        .min_by(|x, y| (x.3 - x.2).total_cmp(&(y.3 - y.2)))
        .expect("nonempty");
    Ok(OracleValue {
        value: best.1,
        lower: routes.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max),
        upper: routes.iter().map(|r| r.3).fold(f64::INFINITY, f64::min),
        routes: routes.iter().map(|r| (r.0, r.1)).collect(),
    })
}
