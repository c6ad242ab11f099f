use super::{HalfEdge, PlanarGraph, VertexId};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

const MAX_PARALLEL_TRIALS: usize = 4096;

impl PlanarGraph {
    /// Straight-line embedding: rotations sorted by angle.
    pub fn from_coordinates(points: &[[f64; 2]], edges: &[(VertexId, VertexId)], j: f64) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, j)).collect();
        Self::from_coordinates_weighted(points, &weighted)
    }

    pub fn from_coordinates_weighted(points: &[[f64; 2]], edges: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let n = points.len();
        let mut rotation: Vec<Vec<(f64, HalfEdge)>> = vec![Vec::new(); n];
        for (e, &(u, v, _)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::Embedding(format!("edge {u}-{v} references a missing vertex")));
            }
            let d = [points[v][0] - points[u][0], points[v][1] - points[u][1]];
            rotation[u].push((d[1].atan2(d[0]), 2 * e));
            rotation[v].push(((-d[1]).atan2(-d[0]), 2 * e + 1));
        }
        let mut rot = Vec::with_capacity(n);
        for (v, list) in rotation.iter_mut().enumerate() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            if list.windows(2).any(|w| (w[1].0 - w[0].0).abs() < 1e-12) {
                return Err(Error::Embedding(format!(
                    "two edges leave vertex {v} in the same direction; give an explicit rotation"
                )));
            }
            rot.push(list.iter().map(|x| x.1).collect());
        }
        Self::assemble(n, edges, &rot, Some(points.to_vec()), None)
    }

    /// Builds from per-vertex cyclic neighbour lists.
    ///
    /// `coupling(u, w, i)` gives the coupling of the `i`-th parallel edge
    /// between `u < w`, counted in the rotation order at `u`. Parallel edges
    /// are matched across their endpoints by trying every cyclic offset and
    /// keeping the first planar result.
    pub fn from_neighbor_rotation<F>(
        rotation: &[Vec<VertexId>],
        labels: Option<Vec<String>>,
        mut coupling: F,
    ) -> Result<Self>
    where
        F: FnMut(VertexId, VertexId, usize) -> Result<f64>,
    {
        let n = rotation.len();
        let name = |v: usize| labels.as_ref().map(|l| l[v].clone()).unwrap_or_else(|| v.to_string());
        // positions of w in rotation[u]
        let mut occ: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (u, list) in rotation.iter().enumerate() {
            for (i, &w) in list.iter().enumerate() {
                if w >= n {
                    return Err(Error::Embedding(format!(
                        "vertex {} lists unknown neighbour {w}",
                        name(u)
                    )));
                }
                if w == u {
                    return Err(Error::Unsupported(format!("self-loop at vertex {}", name(u))));
                }
                occ.entry((u, w)).or_default().push(i);
            }
        }
        let mut pairs = Vec::new();
        for (&(u, w), pos) in &occ {
            if u > w {
                continue;
            }
            let back = occ.get(&(w, u)).map(|p| p.len()).unwrap_or(0);
            if back != pos.len() {
                return Err(Error::Embedding(format!(
                    "edge {}-{}: {} lists {} {} time(s) but {} lists {} {} time(s)",
                    name(u),
                    name(w),
                    name(u),
                    name(w),
                    pos.len(),
                    name(w),
                    name(u),
                    back
                )));
            }
            pairs.push((u, w, pos.len()));
        }
        for (&(u, w), _) in occ.iter().filter(|(k, _)| k.0 > k.1) {
            if !occ.contains_key(&(w, u)) {
                return Err(Error::Embedding(format!(
                    "edge {}-{}: {} does not list {}",
                    name(w),
                    name(u),
                    name(w),
                    name(u)
                )));
            }
        }

        let mut edges = Vec::new();
        for &(u, w, m) in &pairs {
            for i in 0..m {
                edges.push((u, w, coupling(u, w, i)?));
            }
        }
        let multi: Vec<usize> = pairs.iter().map(|p| p.2).collect();
        let total: usize = multi.iter().filter(|&&m| m > 1).map(|&m| m).product();
        if total > MAX_PARALLEL_TRIALS {
            return Err(Error::Unsupported("too many parallel edge bundles to match".into()));
        }
        let mut last_err = None;
        for trial in 0..total.max(1) {
            let mut code = trial;
            let mut rot: Vec<Vec<HalfEdge>> = rotation.iter().map(|l| vec![usize::MAX; l.len()]).collect();
            let mut e = 0;
            for &(u, w, m) in &pairs {
                let offset = if m > 1 {
                    let o = code % m;
                    code /= m;
                    o
                } else {
                    0
                };
                let pu = &occ[&(u, w)];
                let pw = &occ[&(w, u)];
                for i in 0..m {
                    rot[u][pu[i]] = 2 * (e + i);
                    rot[w][pw[(offset + m - i) % m]] = 2 * (e + i) + 1;
                }
                e += m;
            }
            match Self::assemble(n, &edges, &rot, None, labels.clone()) {
                Ok(g) => return Ok(g),
                Err(err) => last_err = Some(err),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Embedding("empty rotation".into())))
    }

    /// Two vertices joined by one edge.
    pub fn single_edge(j: f64) -> Self {
        Self::path(1, j).expect("valid")
    }

    /// Two vertices joined by two parallel edges.
    pub fn doubled_edge(j: f64) -> Self {
        let edges = [(0, 1, j), (0, 1, j)];
        let rotation = vec![vec![0, 2], vec![3, 1]];
        Self::assemble(2, &edges, &rotation, None, None).expect("valid")
    }

    /// Path with `len` edges along the x-axis.
    pub fn path(len: usize, j: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::Argument("path needs at least one edge".into()));
        }
        let pts: Vec<[f64; 2]> = (0..=len).map(|i| [i as f64, 0.0]).collect();
        let edges: Vec<_> = (0..len).map(|i| (i, i + 1)).collect();
        Self::from_coordinates(&pts, &edges, j)
    }

    /// Cycle on `k ≥ 3` vertices drawn counterclockwise.
    pub fn cycle(k: usize, j: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::Argument("cycle needs at least three vertices".into()));
        }
        let pts: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        Self::from_coordinates(&pts, &edges, j)
    }

    /// Two vertices joined by three internally disjoint paths of lengths 1, 2, 2.
    pub fn theta(j: f64) -> Self {
        let pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, -1.0]];
        let edges = [(0, 1), (0, 2), (2, 1), (0, 3), (3, 1)];
        Self::from_coordinates(&pts, &edges, j).expect("valid")
    }

    /// Hub vertex 0 joined to a rim cycle of `k ≥ 3` vertices.
    pub fn wheel(k: usize, j: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::Argument("wheel needs at least three rim vertices".into()));
        }
        let mut pts = vec![[0.0, 0.0]];
        for i in 0..k {
            let t = std::f64::consts::TAU * i as f64 / k as f64;
            pts.push([t.cos(), t.sin()]);
        }
        let mut edges = Vec::new();
        for i in 0..k {
            edges.push((0, i + 1));
            edges.push((i + 1, (i + 1) % k + 1));
        }
        Self::from_coordinates(&pts, &edges, j)
    }

    /// Rectangle `{0..=n} × {0..=m}` of the square lattice; vertex `(x, y)` has
    /// index `y * (n + 1) + x`.
    pub fn box_lattice(n: usize, m: usize, j: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Argument("box sides must be at least 1".into()));
        }
        let w = n + 1;
        let idx = |x: usize, y: usize| y * w + x;
        let mut pts = Vec::with_capacity(w * (m + 1));
        for y in 0..=m {
            for x in 0..=n {
                pts.push([x as f64, y as f64]);
            }
        }
        let mut edges = Vec::new();
        for y in 0..=m {
            for x in 0..=n {
                if x < n {
                    edges.push((idx(x, y), idx(x + 1, y)));
                }
                if y < m {
                    edges.push((idx(x, y), idx(x, y + 1)));
                }
            }
        }
        Self::from_coordinates(&pts, &edges, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_face_counts() {
        assert_eq!(PlanarGraph::doubled_edge(1.0).num_faces(), 2);
        assert_eq!(PlanarGraph::path(2, 1.0).unwrap().num_faces(), 1);
        assert_eq!(PlanarGraph::theta(1.0).num_faces(), 3);
        assert_eq!(PlanarGraph::wheel(5, 1.0).unwrap().num_faces(), 6);
        assert_eq!(PlanarGraph::box_lattice(1, 1, 1.0).unwrap().num_faces(), 2);
    }

    #[test]
    fn box_1x1_is_four_cycle() {
        let g = PlanarGraph::box_lattice(1, 1, 1.0).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (4, 4));
        assert!((0..4).all(|v| g.degree(v) == 2));
    }

    #[test]
    fn neighbor_rotation_matches_coordinates() {
        let g = PlanarGraph::box_lattice(2, 1, 1.0).unwrap();
        let rotation: Vec<Vec<usize>> = (0..g.num_vertices()).map(|v| g.neighbors(v)).collect();
        let h = PlanarGraph::from_neighbor_rotation(&rotation, None, |_, _, _| Ok(1.0)).unwrap();
        assert_eq!(h.num_faces(), g.num_faces());
    }

    #[test]
    fn neighbor_rotation_with_parallel_edges() {
        // Triple edge between 0 and 1: three faces.
        let rotation = vec![vec![1, 1, 1], vec![0, 0, 0]];
        let g = PlanarGraph::from_neighbor_rotation(&rotation, None, |_, _, i| Ok(1.0 + i as f64)).unwrap();
        assert_eq!((g.num_edges(), g.num_faces()), (3, 3));
    }

    #[test]
    fn neighbor_rotation_asymmetric_is_embedding_error() {
        let rotation = vec![vec![1, 2], vec![0], vec![1]];
        let err = PlanarGraph::from_neighbor_rotation(&rotation, None, |_, _, _| Ok(1.0));
        assert!(matches!(err, Err(Error::Embedding(_))));
    }
}
