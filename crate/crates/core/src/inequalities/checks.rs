use serde::{Deserialize, Serialize};

use super::oracle::{exact_correlator, OracleValue};
use crate::current::dipole;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, PlanarGraph, VertexId};
use crate::samplers::{spin_mcmc, ChainSpec, Observable};

/// Absolute tolerance for checks evaluated by exact routes, on top of the
/// propagated enclosure widths.
pub const EXACT_TOL: f64 = 1e-9;
/// Monte Carlo checks allow this many combined standard errors.
pub const MC_SIGMAS: f64 = 3.0;
pub const MIN_ESS: f64 = 200.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub instance: String,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn new(name: &str, instance: String, margin: f64, tolerance: f64) -> Self {
        CheckReport {
            name: name.to_string(),
            instance,
            margin,
            tolerance,
            passed: margin >= -tolerance,
            note: None,
        }
    }

    /// The binding comparison among several `(margin, tolerance)` pairs: the one
    /// with the least slack `margin + tolerance`.
    pub fn worst<I>(name: &str, instance: String, items: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let (m, t) = items
            .into_iter()
            .min_by(|x, y| (x.0 + x.1).total_cmp(&(y.0 + y.1)))
            .unwrap_or((0.0, EXACT_TOL));
        Self::new(name, instance, m, t)
    }

    /// A check that could not be evaluated; counts as a failure.
    pub fn failed(name: &str, instance: String, why: String) -> Self {
        CheckReport {
            name: name.to_string(),
            instance,
            margin: -1.0,
            tolerance: 0.0,
            passed: false,
            note: Some(why),
        }
    }
}

fn describe(g: &PlanarGraph, beta: f64) -> String {
    format!("{}v/{}e J={:?} beta={beta}", g.num_vertices(), g.num_edges(), g.couplings())
}

fn two_point(g: &PlanarGraph, beta: f64, a: VertexId, b: VertexId, k: i64) -> Result<OracleValue> {
    exact_correlator(g, beta, &dipole(g.num_vertices(), a, b, k))
}

fn check_vertex(g: &PlanarGraph, v: VertexId) -> Result<()> {
    if v >= g.num_vertices() {
        return Err(Error::Argument(format!("vertex {v} out of range")));
    }
    Ok(())
}

/// Copy of `g` with coupling `j` on edge `e`; a zero coupling removes the edge.
pub fn with_coupling(g: &PlanarGraph, e: EdgeId, j: f64) -> Result<PlanarGraph> {
    if e >= g.num_edges() {
        return Err(Error::Argument(format!("edge {e} out of range")));
    }
    if j == 0.0 {
        return g.remove_edges(&[e]);
    }
    let mut c = g.couplings().to_vec();
    c[e] = j;
    g.with_couplings(c)
}

/// Every two-point function is nondecreasing along the grid of values of `J_e`.
pub fn check_ginibre_monotonicity(g: &PlanarGraph, beta: f64, e: EdgeId, grid: &[f64]) -> Result<CheckReport> {
    if grid.iter().any(|&j| !(j >= 0.0) || !j.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("coupling grid must be finite, nonnegative and sorted".into()));
    }
    let nv = g.num_vertices();
    let mut table: Vec<Vec<OracleValue>> = Vec::new();
    for &j in grid {
        let gj = with_coupling(g, e, j)?;
        let mut row = Vec::new();
        for u in 0..nv {
            for v in u + 1..nv {
                row.push(two_point(&gj, beta, u, v, 1)?);
            }
        }
        table.push(row);
    }
    let mut steps = Vec::new();
    for w in table.windows(2) {
        for (x, y) in w[0].iter().zip(&w[1]) {
            steps.push((y.value - x.value, EXACT_TOL + x.width() + y.width()));
        }
    }
    let instance = format!("{} e={e} grid={grid:?}", describe(g, beta));
    Ok(CheckReport::worst("ginibre", instance, steps))
}

/// `2⟨σ_aσ̄_b⟩² − ⟨σ_a²σ̄_b²⟩ ≥ 0`.
pub fn check_squares(g: &PlanarGraph, beta: f64, a: VertexId, b: VertexId) -> Result<CheckReport> {
    check_vertex(g, a)?;
    check_vertex(g, b)?;
    let c1 = two_point(g, beta, a, b, 1)?;
    let c2 = two_point(g, beta, a, b, 2)?;
    let margin = 2.0 * c1.value * c1.value - c2.value;
    let tol = EXACT_TOL + 4.0 * c1.upper.min(1.0) * c1.width() + c2.width();
    Ok(CheckReport::new("squares", format!("{} a={a} b={b}", describe(g, beta)), margin, tol))
}

/// Both ferromagnet inequalities `⟨σ_aσ̄_b⟩ ≥ ⟨σ_aσ̄_c⟩⟨σ_cσ̄_b⟩ ≥ ⟨σ_aσ_bσ̄_c²⟩`
/// through the cross-checked oracle.
pub fn check_ferromagnet(g: &PlanarGraph, beta: f64, a: VertexId, b: VertexId, c: VertexId) -> Result<CheckReport> {
    for v in [a, b, c] {
        check_vertex(g, v)?;
    }
    let nv = g.num_vertices();
    let ab = two_point(g, beta, a, b, 1)?;
    let ac = two_point(g, beta, a, c, 1)?;
    let cb = two_point(g, beta, c, b, 1)?;
    let mut pc = vec![0i64; nv];
    pc[a] += 1;
    pc[b] += 1;
    pc[c] -= 2;
    let abcc = exact_correlator(g, beta, &pc)?;
    let prod = ac.value * cb.value;
    let prod_w = ac.width() * cb.upper.min(1.0) + cb.width() * ac.upper.min(1.0);
    let instance = format!("{} a={a} b={b} c={c}", describe(g, beta));
    Ok(CheckReport::worst(
        "ferromagnet",
        instance,
        [
            (ab.value - prod, EXACT_TOL + ab.width() + prod_w),
            (prod - abcc.value, EXACT_TOL + abcc.width() + prod_w),
        ],
    ))
}

/// Vertices of `h` with a neighbour outside `h`.
pub fn boundary_of(g: &PlanarGraph, h: &[VertexId]) -> Vec<VertexId> {
    let mut inside = vec![false; g.num_vertices()];
    for &v in h {
        inside[v] = true;
    }
    h.iter().copied().filter(|&v| g.neighbors(v).iter().any(|&u| !inside[u])).collect()
}

/// `Σ_{c∈∂H} ⟨σ_aσ̄_c⟩_H ⟨σ_cσ̄_b⟩_G ≥ ⟨σ_aσ̄_b⟩_G` for the subgraph induced by `h`.
pub fn check_lieb_rivasseau(g: &PlanarGraph, h: &[VertexId], beta: f64, a: VertexId, b: VertexId) -> Result<CheckReport> {
    check_vertex(g, a)?;
    check_vertex(g, b)?;
    let mut seen = vec![false; g.num_vertices()];
    for &v in h {
        check_vertex(g, v)?;
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::Argument(format!("vertex {v} listed twice in H")));
        }
    }
    if !seen[a] || seen[b] {
        return Err(Error::Argument("H must contain a and not b".into()));
    }
    let (gh, _) = g.induced_subgraph(h)?;
    let pos = |v: VertexId| h.iter().position(|&x| x == v).expect("in H");
    let ab = two_point(g, beta, a, b, 1)?;
    let mut sum = 0.0;
    let mut width = ab.width();
    for c in boundary_of(g, h) {
        let ach = two_point(&gh, beta, pos(a), pos(c), 1)?;
        let cb = two_point(g, beta, c, b, 1)?;
        sum += ach.value * cb.value;
        width += ach.width() * cb.upper.min(1.0) + cb.width() * ach.upper.min(1.0);
    }
    let instance = format!("{} H={h:?} a={a} b={b}", describe(g, beta));
    Ok(CheckReport::new("lieb-rivasseau", instance, sum - ab.value, EXACT_TOL + width))
}

/// `⟨σ_aσ̄_b⟩ ≥ ⟨σ_aσ̄_{b'}⟩` where `b'` is the mirror image of `b` across a symmetry
/// line of `g` and `a`, `b` lie on the same side.
pub fn check_reflection(g: &PlanarGraph, beta: f64, a: VertexId, b: VertexId, mirror_b: VertexId) -> Result<CheckReport> {
    for v in [a, b, mirror_b] {
        check_vertex(g, v)?;
    }
    let near = two_point(g, beta, a, b, 1)?;
    let far = two_point(g, beta, a, mirror_b, 1)?;
    let instance = format!("{} a={a} b={b} b'={mirror_b}", describe(g, beta));
    Ok(CheckReport::new("reflection", instance, near.value - far.value, EXACT_TOL + near.width() + far.width()))
}

/// How MMS correlators are evaluated.
#[derive(Clone, Debug)]
pub enum Estimator {
    Exact,
    Mcmc(ChainSpec),
}

/// The box `[−hx, hx] × [−hy, hy]` of the square lattice with its centre vertex.
#[derive(Clone, Debug)]
pub struct CenteredBox {
    pub graph: PlanarGraph,
    pub hx: i64,
    pub hy: i64,
}

impl CenteredBox {
    pub fn new(hx: usize, hy: usize, beta_j: f64) -> Result<Self> {
        Ok(CenteredBox {
            graph: PlanarGraph::box_lattice(2 * hx, 2 * hy, beta_j)?,
            hx: hx as i64,
            hy: hy as i64,
        })
    }

    pub fn vertex(&self, x: i64, y: i64) -> Option<VertexId> {
        (x.abs() <= self.hx && y.abs() <= self.hy).then(|| ((y + self.hy) * (2 * self.hx + 1) + x + self.hx) as VertexId)
    }

    pub fn origin(&self) -> VertexId {
        self.vertex(0, 0).expect("centre")
    }
}

/// One MMS sequence value: `k`, the lattice point, and the correlator with its error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequencePoint {
    pub k: u64,
    pub point: (i64, i64),
    pub value: f64,
    pub error: f64,
    pub ess: f64,
}

/// `k ↦ ⟨σ_0σ̄_{(n,k)}⟩` and `k ↦ ⟨σ_0σ̄_{(n+k,n−k)}⟩` over `ks`, skipping points outside the box.
pub fn mms_sequences(
    bx: &CenteredBox,
    beta: f64,
    n: i64,
    ks: &[u64],
    estimator: &Estimator,
) -> Result<(Vec<SequencePoint>, Vec<SequencePoint>)> {
    let axis: Vec<(u64, (i64, i64))> = ks.iter().map(|&k| (k, (n, k as i64))).collect();
    let diag: Vec<(u64, (i64, i64))> = ks.iter().map(|&k| (k, (n + k as i64, n - k as i64))).collect();
    let axis: Vec<_> = axis.into_iter().filter(|p| bx.vertex(p.1 .0, p.1 .1).is_some()).collect();
    let diag: Vec<_> = diag.into_iter().filter(|p| bx.vertex(p.1 .0, p.1 .1).is_some()).collect();
    let o = bx.origin();
    let g = &bx.graph;
    let all: Vec<(u64, (i64, i64))> = axis.iter().chain(&diag).copied().collect();
    let values: Vec<SequencePoint> = match estimator {
        Estimator::Exact => all
            .iter()
            .map(|&(k, p)| {
                let v = bx.vertex(p.0, p.1).expect("filtered");
                let c = two_point(g, beta, o, v, 1)?;
                Ok(SequencePoint {
                    k,
                    point: p,
                    value: c.value,
                    error: c.width(),
                    ess: f64::INFINITY,
                })
            })
            .collect::<Result<_>>()?,
        Estimator::Mcmc(spec) => {
            let obs: Vec<Observable> = all
                .iter()
                .map(|&(_, p)| Observable::TwoPoint {
                    a: o,
                    b: bx.vertex(p.0, p.1).expect("filtered"),
                    k: 1,
                })
                .collect();
            let est = spin_mcmc(g, beta, spec, &obs)?;
            all.iter()
                .zip(est)
                .map(|(&(k, p), e)| SequencePoint {
                    k,
                    point: p,
                    value: e.mean,
                    error: e.std_error,
                    ess: e.ess,
                })
                .collect()
        }
    };
    let diag_vals = values[axis.len()..].to_vec();
    let mut axis_vals = values;
    axis_vals.truncate(axis.len());
    Ok((axis_vals, diag_vals))
}

/// Both MMS sequences are nonincreasing in `k` on the centred box.
pub fn check_mms(bx: &CenteredBox, beta: f64, n: i64, ks: &[u64], estimator: &Estimator) -> Result<CheckReport> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let (axis, diag) = mms_sequences(bx, beta, n, &ks, estimator)?;
    let instance = format!(
        "box [-{},{}]x[-{},{}] beta={beta} n={n} k={ks:?} {}",
        bx.hx,
        bx.hx,
        bx.hy,
        bx.hy,
        match estimator {
            Estimator::Exact => "exact".to_string(),
            Estimator::Mcmc(s) => format!("mcmc seed={} samples={}", s.seed, s.samples),
        }
    );
    if let Estimator::Mcmc(_) = estimator {
        let ess = axis.iter().chain(&diag).map(|p| p.ess).fold(f64::INFINITY, f64::min);
        if ess < MIN_ESS {
            return Ok(CheckReport::failed("mms", instance, format!("effective sample size {ess:.0} below {MIN_ESS}")));
        }
    }
    let mut steps = Vec::new();
    for seq in [&axis, &diag] {
        for w in seq.windows(2) {
            let tol = match estimator {
                Estimator::Exact => EXACT_TOL + w[0].error + w[1].error,
                Estimator::Mcmc(_) => MC_SIGMAS * w[0].error.hypot(w[1].error),
            };
            steps.push((w[0].value - w[1].value, tol));
        }
    }
    Ok(CheckReport::worst("mms", instance, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;

    fn ratio(k: i64, beta: f64) -> f64 {
        bessel_i_scaled::<f64>(k, beta) / bessel_i_scaled::<f64>(0, beta)
    }

    #[test]
    fn ginibre_direct_edge_strictly_increases() {
        let g = PlanarGraph::single_edge(1.0);
        let r = check_ginibre_monotonicity(&g, 1.0, 0, &[0.0, 1.0]).unwrap();
        assert!(r.passed);
        assert!((r.margin - ratio(1, 1.0)).abs() < 1e-10);
    }

    #[test]
    fn ginibre_pendant_edge_is_irrelevant() {
        // triangle 0-1-2 plus pendant edge 2-3
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, 2.0]];
        let g = PlanarGraph::from_coordinates(&pts, &[(0, 1), (1, 2), (2, 0), (2, 3)], 1.0).unwrap();
        let c = |j: f64| two_point(&with_coupling(&g, 3, j).unwrap(), 1.0, 0, 1, 1).unwrap().value;
        assert!((c(0.0) - c(2.0)).abs() < 1e-10);
    }

    #[test]
    fn ginibre_triangle_grid() {
        let g = PlanarGraph::cycle(3, 1.0).unwrap();
        let r = check_ginibre_monotonicity(&g, 1.0, 0, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert!(r.passed && r.margin > 0.0, "{r:?}");
        assert!(check_ginibre_monotonicity(&g, 1.0, 0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn squares_examples() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let r = check_squares(&g, 1.0, 2, 2).unwrap();
        assert!((r.margin - 1.0).abs() < 1e-15);
        let e = PlanarGraph::single_edge(1.0);
        for beta in [0.3, 1.0, 4.0] {
            let r = check_squares(&e, beta, 0, 1).unwrap();
            let want = 2.0 * ratio(1, beta).powi(2) - ratio(2, beta);
            assert!(r.passed && (r.margin - want).abs() < 1e-10, "{r:?} {want}");
        }
    }

    #[test]
    fn ferromagnet_path_is_tight() {
        let g = PlanarGraph::path(2, 1.0).unwrap();
        let r = check_ferromagnet(&g, 1.0, 0, 2, 1).unwrap();
        assert!(r.passed && r.margin.abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn lieb_rivasseau_single_boundary_vertex() {
        let g = PlanarGraph::path(2, 1.0).unwrap();
        let r = check_lieb_rivasseau(&g, &[0, 1], 1.0, 0, 2).unwrap();
        assert!(r.passed && r.margin.abs() < 1e-10, "{r:?}");
        assert!(check_lieb_rivasseau(&g, &[1, 2], 1.0, 0, 2).is_err());
        assert!(check_lieb_rivasseau(&g, &[0, 0], 1.0, 0, 2).is_err());
    }

    #[test]
    fn lieb_rivasseau_box_corner() {
        // 3×2 vertex box, H = the 2×2 corner on the left
        let g = PlanarGraph::box_lattice(2, 1, 1.0).unwrap();
        for beta in [0.5, 2.0] {
            let r = check_lieb_rivasseau(&g, &[0, 1, 3, 4], beta, 0, 5).unwrap();
            assert!(r.passed && r.margin > 0.0, "{r:?}");
        }
    }

    #[test]
    fn reflection_across_edges_and_through_vertices() {
        // four rows, horizontal mirror between rows 1 and 2
        let g = PlanarGraph::box_lattice(2, 3, 1.0).unwrap();
        let at = |x: usize, y: usize| y * 3 + x;
        let r = check_reflection(&g, 1.0, at(0, 0), at(2, 1), at(2, 2)).unwrap();
        assert!(r.passed && r.margin > 0.0, "{r:?}");
        // diagonal mirror x ↔ y through vertices of a square box
        let s = PlanarGraph::box_lattice(2, 2, 1.0).unwrap();
        let r = check_reflection(&s, 1.0, at(1, 0), at(2, 1), at(1, 2)).unwrap();
        assert!(r.passed && r.margin > 0.0, "{r:?}");
    }

    #[test]
    fn mms_exact_on_small_box() {
        let bx = CenteredBox::new(1, 1, 1.0).unwrap();
        for n in [0, 1] {
            let r = check_mms(&bx, 1.0, n, &[0, 1], &Estimator::Exact).unwrap();
            assert!(r.passed, "{r:?}");
        }
        let (axis, _) = mms_sequences(&bx, 1.0, 0, &[0, 1], &Estimator::Exact).unwrap();
        assert_eq!(axis[0].value, 1.0);
    }

    #[test]
    fn mms_axis_symmetry_exact() {
        let bx = CenteredBox::new(1, 1, 1.0).unwrap();
        let g = &bx.graph;
        let o = bx.origin();
        let x = two_point(g, 1.0, o, bx.vertex(1, 0).unwrap(), 1).unwrap();
        let y = two_point(g, 1.0, o, bx.vertex(0, 1).unwrap(), 1).unwrap();
        assert!((x.value - y.value).abs() < 1e-12);
    }

    #[test]
    fn mms_monte_carlo_on_five_by_five() {
        let bx = CenteredBox::new(2, 2, 1.0).unwrap();
        let spec = ChainSpec::new(11, 200, 20000, 1);
        let r = check_mms(&bx, 1.0, 0, &[0, 1, 2], &Estimator::Mcmc(spec.clone())).unwrap();
        assert!(r.passed, "{r:?}");
        let r = check_mms(&bx, 1.0, 1, &[0, 1], &Estimator::Mcmc(spec)).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn report_json_round_trip() {
        let r = CheckReport::new("squares", "x".into(), 0.5, 1e-9);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<CheckReport>(&s).unwrap(), r);
        assert!(!CheckReport::new("x", String::new(), -1e-3, 1e-9).passed);
    }
}
