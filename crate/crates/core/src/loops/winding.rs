use super::config::{LoopConfig, Traversal};
use crate::current::HeightField;
use crate::error::{Error, Result};
use crate::graph::{twin, FaceId, HalfEdge, PlanarGraph};

/// Signed turning of all traversals around `p`, in full turns. Every
/// traversal must be a closed loop and `p` must avoid the drawing.
pub fn geometric_winding(g: &PlanarGraph, cfg: &LoopConfig, p: [f64; 2]) -> Result<f64> {
    let coords = g
        .coords()
        .ok_or_else(|| Error::Unsupported("geometric winding needs vertex coordinates".into()))?;
    let mut total = 0.0;
    for t in cfg.traversals(g) {
        let Traversal::Loop(cycle) = t else {
            return Err(Error::Argument("winding is defined for closed loops only".into()));
        };
        let pts: Vec<[f64; 2]> = cycle.iter().map(|&c| coords[cfg.copy_origin(g, c)]).collect();
        total += polygon_turning(&pts, p);
    }
    Ok(total)
}

fn polygon_turning(pts: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for i in 0..pts.len() {
        let q = pts[i];
        let r = pts[(i + 1) % pts.len()];
        let (ax, ay) = (q[0] - p[0], q[1] - p[1]);
        let (bx, by) = (r[0] - p[0], r[1] - p[1]);
        acc += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    acc / std::f64::consts::TAU
}

fn segment_distance(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    let (dx, dy) = (r[0] - q[0], r[1] - q[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - q[0]) * dx + (p[1] - q[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (x, y) = (q[0] + t * dx - p[0], q[1] + t * dy - p[1]);
    (x * x + y * y).sqrt()
}

/// A point strictly inside inner face `f` and away from every edge of the drawing.
fn interior_point(g: &PlanarGraph, f: FaceId) -> Option<[f64; 2]> {
    let coords = g.coords()?;
    let walk: Vec<[f64; 2]> = g.face_walk(f).iter().map(|&h| coords[g.origin(h)]).collect();
    let k = walk.len();
    let mut candidates = Vec::new();
    if let Some(c) = g.face_centroid(f) {
        candidates.push(c);
    }
    for i in 0..k {
        let (a, b, c) = (walk[(i + k - 1) % k], walk[i], walk[(i + 1) % k]);
        candidates.push([0.5 * b[0] + 0.25 * (a[0] + c[0]), 0.5 * b[1] + 0.25 * (a[1] + c[1])]);
    }
    let scale = walk
        .iter()
        .zip(walk.iter().skip(1))
        .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    candidates.into_iter().find(|&p| {
        (polygon_turning(&walk, p) - 1.0).abs() < 1e-6
            && (0..g.num_edges()).all(|e| {
                let (u, v) = g.endpoints(e);
                segment_distance(p, coords[u], coords[v]) > 1e-6 * scale.max(1.0)
            })
    })
}

/// Depth-first dual tree from the outer faces; same orientation convention
/// as the breadth-first tree (`left(parent[f]) = f`).
fn dual_dfs_tree(g: &PlanarGraph) -> Vec<Option<HalfEdge>> {
    let mut parent = vec![None; g.num_faces()];
    let mut seen = vec![false; g.num_faces()];
    let mut stack: Vec<FaceId> = g.outer_faces().to_vec();
    for &f in &stack {
        seen[f] = true;
    }
    while let Some(f) = stack.pop() {
        for &h in g.face_walk(f) {
            let r = g.right_face(h);
            if !seen[r] {
                seen[r] = true;
                parent[r] = Some(twin(h));
                stack.push(r);
            }
        }
    }
    parent
}

fn closed_only(g: &PlanarGraph, cfg: &LoopConfig) -> Result<()> {
    if cfg.traversals(g).iter().any(|t| matches!(t, Traversal::Path(_))) {
        return Err(Error::Argument("winding is defined for configurations without open paths".into()));
    }
    Ok(())
}

fn winding_with_tree(g: &PlanarGraph, cfg: &LoopConfig, f: FaceId, parent: &[Option<HalfEdge>]) -> Result<i64> {
    if g.is_outer(f) {
        return Ok(0);
    }
    if let Some(p) = interior_point(g, f) {
        return Ok(geometric_winding(g, cfg, p)?.round() as i64);
    }
    let mut path = Vec::new();
    let mut cur = f;
    while let Some(h) = parent[cur] {
        path.push(h);
        cur = g.right_face(h);
    }
    let mut w = 0i64;
    for &c in &cfg.multigraph.copies {
        for &h in &path {
            if c == h {
                w += 1;
            } else if c == twin(h) {
                w -= 1;
            }
        }
    }
    Ok(w)
}

/// Net winding of the loops around one face; see [`winding_field`].
pub fn winding_at(g: &PlanarGraph, cfg: &LoopConfig, f: FaceId) -> Result<i64> {
    closed_only(g, cfg)?;
    winding_with_tree(g, cfg, f, &dual_dfs_tree(g))
}

/// Net winding of the loops around every face.
///
/// With coordinates, the turning angle around an interior point of each
/// face is summed along every loop. Otherwise, or for faces without a usable
/// interior point, signed crossings of a depth-first dual path from the
/// outer face are counted.
pub fn winding_field(g: &PlanarGraph, cfg: &LoopConfig) -> Result<HeightField> {
    closed_only(g, cfg)?;
    let parent = dual_dfs_tree(g);
    let values = (0..g.num_faces())
        .map(|f| winding_with_tree(g, cfg, f, &parent))
        .collect::<Result<Vec<_>>>()?;
    Ok(HeightField { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::current::{height_from_current, Current};
    use crate::loops::enumerate_consistent;

    #[test]
    fn empty_configuration_has_zero_winding() {
        let g = PlanarGraph::box_lattice(2, 2, 1.0).unwrap();
        let cfg = LoopConfig::empty(&g, vec![false; 9]);
        assert_eq!(winding_field(&g, &cfg).unwrap(), HeightField::zero(&g));
    }

    #[test]
    fn one_lap_winds_once() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let mut n = Current::zero(&g);
        let inner = g.inner_faces()[0];
        for &h in g.face_walk(inner) {
            n.add(h, 1);
        }
        let cfg = enumerate_consistent(&g, &n, &[]).unwrap().remove(0);
        assert_eq!(winding_field(&g, &cfg).unwrap().get(inner), 1);
        assert_eq!(winding_field(&g, &cfg.reversed()).unwrap().get(inner), -1);
    }

    #[test]
    fn back_and_forth_is_null() {
        let g = PlanarGraph::cycle(4, 1.0).unwrap();
        let mut n = Current::zero(&g);
        n.set(0, 1);
        n.set(1, 1);
        for cfg in enumerate_consistent(&g, &n, &[]).unwrap() {
            assert_eq!(winding_field(&g, &cfg).unwrap(), HeightField::zero(&g));
        }
    }

    #[test]
    fn crossing_route_agrees_without_coordinates() {
        let g = PlanarGraph::doubled_edge(1.0);
        let n = Current::from_pairs(&[(2, 1), (1, 2)]);
        for cfg in enumerate_consistent(&g, &n, &[]).unwrap() {
            assert_eq!(winding_field(&g, &cfg).unwrap(), height_from_current(&g, &n).unwrap());
        }
    }
}
