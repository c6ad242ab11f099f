use super::{edge_of, HalfEdge, PlanarGraph, VertexId};
use crate::error::{Error, Result};

impl PlanarGraph {
    /// Replaces every edge by a path of `s` edges.
    ///
    /// Edge `e` becomes edges `e * s .. e * s + s` in order from its first
    /// endpoint; the `s - 1` fresh vertices of edge `e` are numbered
    /// `V + e * (s - 1) ..`. Couplings are copied unchanged.
    pub fn subdivide_edges(&self, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::Argument("subdivision factor must be at least 1".into()));
        }
        if s == 1 {
            return Ok(self.clone());
        }
        let nv = self.num_vertices();
        let ne = self.num_edges();
        let total = nv + ne * (s - 1);
        let mid = |e: usize, i: usize| -> VertexId { nv + e * (s - 1) + (i - 1) };
        let mut edges = Vec::with_capacity(ne * s);
        for e in 0..ne {
            let (u, v) = self.endpoints(e);
            for i in 0..s {
                let a = if i == 0 { u } else { mid(e, i) };
                let b = if i + 1 == s { v } else { mid(e, i + 1) };
                edges.push((a, b, self.coupling(e)));
            }
        }
        let mut rotation: Vec<Vec<HalfEdge>> = vec![Vec::new(); total];
        for (v, slot) in rotation.iter_mut().enumerate().take(nv) {
            *slot = self
                .out_half_edges(v)
                .into_iter()
                .map(|h| {
                    let e = edge_of(h);
                    if h & 1 == 0 {
                        2 * (e * s)
                    } else {
                        2 * (e * s + s - 1) + 1
                    }
                })
                .collect();
        }
        for e in 0..ne {
            for i in 1..s {
                // interior vertex between segment i-1 and segment i
                rotation[mid(e, i)] = vec![2 * (e * s + i), 2 * (e * s + i - 1) + 1];
            }
        }
        let coords = self.coords().map(|c| {
            let mut out = c.to_vec();
            for e in 0..ne {
                let (u, v) = self.endpoints(e);
                for i in 1..s {
                    let t = i as f64 / s as f64;
                    out.push([c[u][0] + t * (c[v][0] - c[u][0]), c[u][1] + t * (c[v][1] - c[u][1])]);
                }
            }
            out
        });
        let mut labels = self.labels().to_vec();
        for e in 0..ne {
            for i in 1..s {
                labels.push(format!("e{e}.{i}"));
            }
        }
        let mut g = Self::assemble(total, &edges, &rotation, coords, Some(labels))?;
        // keep the outer face of the original embedding
        let outer: Vec<HalfEdge> = self
            .outer_faces()
            .iter()
            .map(|&f| {
                let h = self.face_walk(f)[0];
                let e = edge_of(h);
                if h & 1 == 0 {
                    2 * (e * s)
                } else {
                    2 * (e * s + s - 1) + 1
                }
            })
            .collect();
        for h in outer {
            g.set_outer_face_left_of(h)?;
        }
        Ok(g)
    }

    /// Side lengths `(n, m)` if this graph is exactly a square-lattice box
    /// as produced by [`PlanarGraph::box_lattice`].
    pub fn box_dimensions(&self) -> Option<(usize, usize)> {
        let c = self.coords()?;
        let n = c.iter().map(|p| p[0]).fold(0.0, f64::max).round() as usize;
        let m = c.iter().map(|p| p[1]).fold(0.0, f64::max).round() as usize;
        if n == 0 || m == 0 || self.num_vertices() != (n + 1) * (m + 1) {
            return None;
        }
        let w = n + 1;
        for (v, p) in c.iter().enumerate() {
            if p[0] != (v % w) as f64 || p[1] != (v / w) as f64 {
                return None;
            }
        }
        if self.num_edges() != n * (m + 1) + m * (n + 1) {
            return None;
        }
        for e in 0..self.num_edges() {
            let (u, v) = self.endpoints(e);
            let d = (c[u][0] - c[v][0]).abs() + (c[u][1] - c[v][1]).abs();
            if d != 1.0 {
                return None;
            }
        }
        Some((n, m))
    }

    /// Square-lattice box turned into squares with a subdivided diagonal.
    ///
    /// Every lattice edge is kept once with half its coupling. Each unit
    /// square with lower-left corner `(x, y)` gains a vertex at
    /// `(x + 1/2, y + 1/2)` joined to `(x + 1, y)` and `(x, y + 1)`, both at
    /// half the coupling of the square's bottom edge. Midpoint vertices are
    /// numbered after the lattice vertices, row by row.
    pub fn triangulate_square_lattice(&self) -> Result<Self> {
        let (n, m) = self
            .box_dimensions()
            .ok_or_else(|| Error::Unsupported("triangulation needs a square-lattice box".into()))?;
        let w = n + 1;
        let nv = w * (m + 1);
        let c = self.coords().expect("boxes carry coordinates");
        let mut pts = c.to_vec();
        let mut edges: Vec<(usize, usize, f64)> = (0..self.num_edges())
            .map(|e| {
                let (u, v) = self.endpoints(e);
                (u, v, self.coupling(e) / 2.0)
            })
            .collect();
        for y in 0..m {
            for x in 0..n {
                let bottom = self
                    .half_edge_between(y * w + x, y * w + x + 1)
                    .map(|h| self.coupling(edge_of(h)))
                    .expect("box edge");
                let mid = pts.len();
                pts.push([x as f64 + 0.5, y as f64 + 0.5]);
                edges.push((mid, y * w + x + 1, bottom / 2.0));
                edges.push((mid, (y + 1) * w + x, bottom / 2.0));
            }
        }
        debug_assert_eq!(pts.len(), nv + n * m);
        Self::from_coordinates_weighted(&pts, &edges)
    }

    /// Number of sides of every inner face once the listed degree-two
    /// vertices are smoothed away. For a triangulated box with midpoints
    /// `first_series..` every entry is 3.
    pub fn inner_face_sides(&self, first_series: VertexId) -> Vec<usize> {
        self.inner_faces()
            .into_iter()
            .map(|f| {
                self.face_walk(f)
                    .iter()
                    .filter(|&&h| !(self.origin(h) >= first_series && self.degree(self.origin(h)) == 2))
                    .count()
            })
            .collect()
    }
}
