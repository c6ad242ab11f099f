use super::{edge_of, FaceId, PlanarGraph, VertexId};
use crate::error::{Error, Result};

/// Finite piece of a cut through a distinguished face: a vertex path split
/// into the part above and the part below the face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutPath {
    pub plus_side: Vec<VertexId>,
    pub minus_side: Vec<VertexId>,
    pub face_anchor: FaceId,
}

/// Cycles are searched exhaustively only up to this many edges.
const CYCLE_SEARCH_MAX_EDGES: usize = 40;

impl CutPath {
    /// Vertical cut through the left side of `anchor` in a box with coordinates.
    pub fn vertical_through(g: &PlanarGraph, anchor: FaceId) -> Result<Self> {
        let c = g
            .coords()
            .ok_or_else(|| Error::Argument("vertical cut needs vertex coordinates".into()))?;
        if g.is_outer(anchor) {
            return Err(Error::Argument("cut anchor must be an inner face".into()));
        }
        let centre = g.face_centroid(anchor).expect("coordinates");
        let x0 = g
            .face_walk(anchor)
            .iter()
            .map(|&h| c[g.origin(h)][0])
            .fold(f64::INFINITY, f64::min);
        let column: Vec<VertexId> = (0..g.num_vertices()).filter(|&v| c[v][0] == x0).collect();
        let mut plus: Vec<VertexId> = column.iter().copied().filter(|&v| c[v][1] > centre[1]).collect();
        let mut minus: Vec<VertexId> = column.iter().copied().filter(|&v| c[v][1] < centre[1]).collect();
        plus.sort_by(|&a, &b| c[a][1].total_cmp(&c[b][1]));
        minus.sort_by(|&a, &b| c[b][1].total_cmp(&c[a][1]));
        Ok(CutPath {
            plus_side: plus,
            minus_side: minus,
            face_anchor: anchor,
        })
    }

    /// Checks disjointness and, on small graphs, that every simple cycle
    /// surrounding the anchor face meets both sides.
    pub fn validate(&self, g: &PlanarGraph) -> Result<()> {
        if self.face_anchor >= g.num_faces() {
            return Err(Error::Argument("cut anchor is not a face".into()));
        }
        let mut side = vec![0u8; g.num_vertices()];
        for &v in &self.plus_side {
            side[v] |= 1;
        }
        for &v in &self.minus_side {
            if side[v] & 1 == 1 {
                return Err(Error::Validation(format!("vertex {} lies on both sides of the cut", g.label(v))));
            }
            side[v] |= 2;
        }
        if g.num_edges() > CYCLE_SEARCH_MAX_EDGES {
            return Ok(());
        }
        let mut crossing = vec![false; g.num_edges()];
        for h in g.dual_path_to(self.face_anchor) {
            crossing[edge_of(h)] ^= true;
        }
        let mut failure = None;
        for_each_simple_cycle(g, |cycle_edges, cycle_vertices| {
            let odd = cycle_edges.iter().filter(|&&e| crossing[e]).count() % 2 == 1;
            if odd {
                let hits = cycle_vertices.iter().fold(0u8, |acc, &v| acc | side[v]);
                if hits != 3 {
                    failure = Some(cycle_vertices.to_vec());
                    return false;
                }
            }
            true
        });
        match failure {
            None => Ok(()),
            Some(vs) => Err(Error::Validation(format!(
                "cycle through {:?} surrounds the anchor face but misses a side of the cut",
                vs.iter().map(|&v| g.label(v).to_string()).collect::<Vec<_>>()
            ))),
        }
    }
}

/// Calls `visit(edges, vertices)` for every simple cycle (including 2-cycles
/// formed by parallel edges) until it returns `false`.
pub(crate) fn for_each_simple_cycle<F>(g: &PlanarGraph, mut visit: F)
where
    F: FnMut(&[usize], &[VertexId]) -> bool,
{
    let n = g.num_vertices();
    let mut on_path = vec![false; n];
    let mut vpath = Vec::new();
    let mut epath = Vec::new();
    for start in 0..n {
        on_path[start] = true;
        vpath.push(start);
        let go = dfs(g, start, start, &mut on_path, &mut vpath, &mut epath, &mut visit);
        vpath.pop();
        on_path[start] = false;
        if !go {
            return;
        }
    }
}

fn dfs<F>(
    g: &PlanarGraph,
    start: VertexId,
    v: VertexId,
    on_path: &mut [bool],
    vpath: &mut Vec<VertexId>,
    epath: &mut Vec<usize>,
    visit: &mut F,
) -> bool
where
    F: FnMut(&[usize], &[VertexId]) -> bool,
{
    for h in g.out_half_edges(v) {
        let w = g.head(h);
        let e = edge_of(h);
        if w < start || epath.last() == Some(&e) {
            continue;
        }
        if w == start {
            // each cycle is seen in both directions; keep the one whose
            // first edge id is smaller than its last
            if epath.len() >= 1 && epath[0] < e {
                epath.push(e);
                let go = visit(epath, vpath);
                epath.pop();
                if !go {
                    return false;
                }
            }
            continue;
        }
        if on_path[w] {
            continue;
        }
        on_path[w] = true;
        vpath.push(w);
        epath.push(e);
        let go = dfs(g, start, w, on_path, vpath, epath, visit);
        epath.pop();
        vpath.pop();
        on_path[w] = false;
        if !go {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_counts() {
        let mut count = 0;
        for_each_simple_cycle(&PlanarGraph::cycle(4, 1.0).unwrap(), |_, _| {
            count += 1;
            true
        });
        assert_eq!(count, 1);
        count = 0;
        for_each_simple_cycle(&PlanarGraph::theta(1.0), |_, _| {
            count += 1;
            true
        });
        assert_eq!(count, 3);
        count = 0;
        for_each_simple_cycle(&PlanarGraph::doubled_edge(1.0), |_, _| {
            count += 1;
            true
        });
        assert_eq!(count, 1);
        // 2x2 box: 4 unit squares, 4 dominoes, 4 L-trominoes, 1 boundary
        count = 0;
        for_each_simple_cycle(&PlanarGraph::box_lattice(2, 2, 1.0).unwrap(), |_, _| {
            count += 1;
            true
        });
        assert_eq!(count, 13);
    }

    #[test]
    fn vertical_cut_valid_on_box() {
        let g = PlanarGraph::box_lattice(4, 4, 1.0).unwrap();
        let anchor = g
            .inner_faces()
            .into_iter()
            .find(|&f| g.face_centroid(f) == Some([1.5, 1.5]))
            .unwrap();
        let cut = CutPath::vertical_through(&g, anchor).unwrap();
        assert_eq!(cut.plus_side.len(), 3);
        assert_eq!(cut.minus_side.len(), 2);
        // 40 edges: still searched exhaustively
        cut.validate(&g).unwrap();
    }

    #[test]
    fn one_sided_cut_rejected() {
        let g = PlanarGraph::box_lattice(2, 2, 1.0).unwrap();
        let anchor = g.inner_faces()[0];
        let mut cut = CutPath::vertical_through(&g, anchor).unwrap();
        cut.minus_side.clear();
        assert!(cut.validate(&g).is_err());
    }
}
