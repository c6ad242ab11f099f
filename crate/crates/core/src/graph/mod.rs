//! Planar graphs given by a rotation system.
//!
//! Every undirected edge `e` owns the two half-edges `2e` (from its first
//! endpoint to its second) and `2e + 1`. The rotation at a vertex lists its
//! outgoing half-edges in counterclockwise order. Faces are traced keeping
//! the face on the left of each half-edge, so the unbounded face of a
//! straight-line drawing is walked clockwise.

mod build;
mod cut;
mod io;
mod transform;

pub use cut::CutPath;
pub use io::GraphFile;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type HalfEdge = usize;
pub type FaceId = usize;

#[inline]
pub fn twin(h: HalfEdge) -> HalfEdge {
    h ^ 1
}

#[inline]
pub fn edge_of(h: HalfEdge) -> EdgeId {
    h >> 1
}

#[derive(Clone, Debug)]
pub struct PlanarGraph {
    num_vertices: usize,
    origin: Vec<VertexId>,
    rot_next: Vec<HalfEdge>,
    rot_prev: Vec<HalfEdge>,
    first_out: Vec<Option<HalfEdge>>,
    couplings: Vec<f64>,
    face_of: Vec<FaceId>,
    faces: Vec<Vec<HalfEdge>>,
    component: Vec<usize>,
    num_components: usize,
    outer_faces: Vec<FaceId>,
    is_outer: Vec<bool>,
    coords: Option<Vec<[f64; 2]>>,
    labels: Vec<String>,
}

impl PlanarGraph {
    /// Builds a graph from explicit edges and per-vertex rotations of
    /// half-edge ids.
    pub fn from_half_edge_rotation(
        num_vertices: usize,
        edges: &[(VertexId, VertexId, f64)],
        rotation: &[Vec<HalfEdge>],
    ) -> Result<Self> {
        Self::assemble(num_vertices, edges, rotation, None, None)
    }

    pub(crate) fn assemble(
        num_vertices: usize,
        edges: &[(VertexId, VertexId, f64)],
        rotation: &[Vec<HalfEdge>],
        coords: Option<Vec<[f64; 2]>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let labels = labels.unwrap_or_else(|| (0..num_vertices).map(|v| v.to_string()).collect());
        if rotation.len() != num_vertices {
            return Err(Error::Embedding(format!(
                "rotation given for {} vertices, expected {num_vertices}",
                rotation.len()
            )));
        }
        let num_half = 2 * edges.len();
        let mut origin = vec![0; num_half];
        let mut couplings = Vec::with_capacity(edges.len());
        for (e, &(u, v, j)) in edges.iter().enumerate() {
            let name = || format!("edge {}-{}", label_or(&labels, u), label_or(&labels, v));
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::Embedding(format!("{} references a missing vertex", name())));
            }
            if u == v {
                return Err(Error::Unsupported(format!("{} is a self-loop", name())));
            }
            if !(j.is_finite() && j > 0.0) {
                return Err(Error::Validation(format!(
                    "{} has coupling {j}; couplings must be positive and finite",
                    name()
                )));
            }
            origin[2 * e] = u;
            origin[2 * e + 1] = v;
            couplings.push(j);
        }
        let mut seen = vec![false; num_half];
        let mut rot_next = vec![usize::MAX; num_half];
        let mut rot_prev = vec![usize::MAX; num_half];
        let mut first_out = vec![None; num_vertices];
        for (v, list) in rotation.iter().enumerate() {
            for &h in list {
                if h >= num_half || origin[h] != v {
                    return Err(Error::Embedding(format!(
                        "rotation at vertex {} lists a half-edge that does not start there",
                        labels[v]
                    )));
                }
                if seen[h] {
                    return Err(Error::Embedding(format!(
                        "rotation at vertex {} repeats edge {}-{}",
                        labels[v],
                        labels[origin[h]],
                        labels[origin[twin(h)]]
                    )));
                }
                seen[h] = true;
            }
            for (i, &h) in list.iter().enumerate() {
                let nxt = list[(i + 1) % list.len()];
                rot_next[h] = nxt;
                rot_prev[nxt] = h;
            }
            first_out[v] = list.first().copied();
        }
        if let Some(h) = seen.iter().position(|s| !s) {
            return Err(Error::Embedding(format!(
                "edge {}-{} is missing from the rotation at vertex {}",
                labels[origin[h]],
                labels[origin[twin(h)]],
                labels[origin[h]]
            )));
        }

        let mut g = PlanarGraph {
            num_vertices,
            origin,
            rot_next,
            rot_prev,
            first_out,
            couplings,
            face_of: vec![usize::MAX; num_half],
            faces: Vec::new(),
            component: vec![0; num_vertices],
            num_components: 0,
            outer_faces: Vec::new(),
            is_outer: Vec::new(),
            coords,
            labels,
        };
        g.trace_faces();
        g.label_components();
        g.check_euler()?;
        g.pick_outer_faces();
        Ok(g)
    }

    fn trace_faces(&mut self) {
        for start in 0..self.origin.len() {
            if self.face_of[start] != usize::MAX {
                continue;
            }
            let f = self.faces.len();
            let mut walk = Vec::new();
            let mut h = start;
            loop {
                self.face_of[h] = f;
                walk.push(h);
                h = self.face_next(h);
                if h == start {
                    break;
                }
            }
            self.faces.push(walk);
        }
    }

    fn label_components(&mut self) {
        let mut comp = vec![usize::MAX; self.num_vertices];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.num_vertices {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for h in self.out_half_edges(v) {
                    let w = self.head(h);
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        self.component = comp;
        self.num_components = count;
    }

    fn check_euler(&self) -> Result<()> {
        let c = self.num_components;
        let mut v = vec![0i64; c];
        let mut e = vec![0i64; c];
        let mut f = vec![0i64; c];
        for x in 0..self.num_vertices {
            v[self.component[x]] += 1;
        }
        for ed in 0..self.num_edges() {
            e[self.component[self.origin[2 * ed]]] += 1;
        }
        for walk in &self.faces {
            f[self.component[self.origin[walk[0]]]] += 1;
        }
        for k in 0..c {
            if e[k] == 0 {
                continue;
            }
            let chi = v[k] - e[k] + f[k];
            if chi != 2 {
                return Err(Error::Embedding(format!(
                    "rotation system is not planar: component has V={} E={} F={} (genus {})",
                    v[k],
                    e[k],
                    f[k],
                    (2 - chi) / 2
                )));
            }
        }
        Ok(())
    }

    fn pick_outer_faces(&mut self) {
        let mut best: Vec<Option<(FaceId, usize, f64)>> = vec![None; self.num_components];
        for (f, walk) in self.faces.iter().enumerate() {
            let c = self.component[self.origin[walk[0]]];
            let area = self.signed_area(f).unwrap_or(0.0);
            let better = match best[c] {
                None => true,
                Some((_, len, a)) => walk.len() > len || (walk.len() == len && area < a),
            };
            if better {
                best[c] = Some((f, walk.len(), area));
            }
        }
        self.outer_faces = best.iter().flatten().map(|b| b.0).collect();
        self.refresh_outer_flags();
    }

    fn refresh_outer_flags(&mut self) {
        self.is_outer = vec![false; self.faces.len()];
        for &f in &self.outer_faces {
            self.is_outer[f] = true;
        }
    }

    /// Declares the face on the left of `h` to be the outer face of its
    /// component.
    pub fn set_outer_face_left_of(&mut self, h: HalfEdge) -> Result<()> {
        if h >= self.origin.len() {
            return Err(Error::Argument(format!("half-edge {h} out of range")));
        }
        let f = self.face_of[h];
        let c = self.component[self.origin[h]];
        for slot in self.outer_faces.iter_mut() {
            if self.component[self.origin[self.faces[*slot][0]]] == c {
                *slot = f;
            }
        }
        self.refresh_outer_flags();
        Ok(())
    }

    /// Twice the signed area enclosed by a face walk, if coordinates exist.
    pub fn signed_area(&self, f: FaceId) -> Option<f64> {
        let coords = self.coords.as_ref()?;
        let mut acc = 0.0;
        for &h in &self.faces[f] {
            let p = coords[self.origin[h]];
            let q = coords[self.head(h)];
            acc += p[0] * q[1] - p[1] * q[0];
        }
        Some(acc)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.couplings.len()
    }

    pub fn num_half_edges(&self) -> usize {
        self.origin.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_components(&self) -> usize {
        self.num_components
    }

    pub fn component_of(&self, v: VertexId) -> usize {
        self.component[v]
    }

    pub fn origin(&self, h: HalfEdge) -> VertexId {
        self.origin[h]
    }

    pub fn head(&self, h: HalfEdge) -> VertexId {
        self.origin[twin(h)]
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        (self.origin[2 * e], self.origin[2 * e + 1])
    }

    pub fn coupling(&self, e: EdgeId) -> f64 {
        self.couplings[e]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Same embedding with new couplings.
    pub fn with_couplings(&self, couplings: Vec<f64>) -> Result<Self> {
        if couplings.len() != self.num_edges() {
            return Err(Error::Argument("coupling vector has the wrong length".into()));
        }
        for (e, &j) in couplings.iter().enumerate() {
            if !(j.is_finite() && j > 0.0) {
                let (u, v) = self.endpoints(e);
                return Err(Error::Validation(format!(
                    "edge {}-{} has coupling {j}; couplings must be positive and finite",
                    self.labels[u], self.labels[v]
                )));
            }
        }
        let mut g = self.clone();
        g.couplings = couplings;
        Ok(g)
    }

    pub fn rot_next(&self, h: HalfEdge) -> HalfEdge {
        self.rot_next[h]
    }

    pub fn rot_prev(&self, h: HalfEdge) -> HalfEdge {
        self.rot_prev[h]
    }

    /// Successor of `h` in the walk of the face on its left.
    pub fn face_next(&self, h: HalfEdge) -> HalfEdge {
        self.rot_prev[twin(h)]
    }

    /// Outgoing half-edges of `v` in counterclockwise order.
    pub fn out_half_edges(&self, v: VertexId) -> Vec<HalfEdge> {
        let mut out = Vec::new();
        if let Some(start) = self.first_out[v] {
            let mut h = start;
            loop {
                out.push(h);
                h = self.rot_next[h];
                if h == start {
                    break;
                }
            }
        }
        out
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.out_half_edges(v).len()
    }

    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.out_half_edges(v).into_iter().map(|h| self.head(h)).collect()
    }

    /// Half-edge from `u` to `v`, first in rotation order when parallel edges exist.
    pub fn half_edge_between(&self, u: VertexId, v: VertexId) -> Option<HalfEdge> {
        self.out_half_edges(u).into_iter().find(|&h| self.head(h) == v)
    }

    pub fn left_face(&self, h: HalfEdge) -> FaceId {
        self.face_of[h]
    }

    pub fn right_face(&self, h: HalfEdge) -> FaceId {
        self.face_of[twin(h)]
    }

    pub fn face_walk(&self, f: FaceId) -> &[HalfEdge] {
        &self.faces[f]
    }

    pub fn faces(&self) -> &[Vec<HalfEdge>] {
        &self.faces
    }

    pub fn outer_faces(&self) -> &[FaceId] {
        &self.outer_faces
    }

    /// Outer face of the component holding vertex 0 (or of the only component).
    pub fn outer_face(&self) -> Option<FaceId> {
        self.outer_faces.first().copied()
    }

    pub fn is_outer(&self, f: FaceId) -> bool {
        self.is_outer[f]
    }

    pub fn inner_faces(&self) -> Vec<FaceId> {
        (0..self.faces.len()).filter(|&f| !self.is_outer[f]).collect()
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn coord(&self, v: VertexId) -> Option<[f64; 2]> {
        self.coords.as_ref().map(|c| c[v])
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Euclidean distance between two vertices when coordinates are present.
    pub fn distance(&self, u: VertexId, v: VertexId) -> Option<f64> {
        let c = self.coords.as_ref()?;
        Some(((c[u][0] - c[v][0]).powi(2) + (c[u][1] - c[v][1]).powi(2)).sqrt())
    }

    /// Vertex at exactly the given coordinates.
    pub fn vertex_at(&self, p: [f64; 2]) -> Option<VertexId> {
        let c = self.coords.as_ref()?;
        c.iter()
            .position(|q| (q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9)
    }

    /// Centroid of a face walk when coordinates exist.
    pub fn face_centroid(&self, f: FaceId) -> Option<[f64; 2]> {
        let c = self.coords.as_ref()?;
        let walk = &self.faces[f];
        let mut s = [0.0, 0.0];
        for &h in walk {
            let p = c[self.origin[h]];
            s[0] += p[0];
            s[1] += p[1];
        }
        let n = walk.len() as f64;
        Some([s[0] / n, s[1] / n])
    }

    /// Vertices lying on the boundary walk of some outer face.
    pub fn boundary_vertices(&self) -> Vec<VertexId> {
        let mut on = vec![false; self.num_vertices];
        for &f in &self.outer_faces {
            for &h in &self.faces[f] {
                on[self.origin[h]] = true;
            }
        }
        (0..self.num_vertices).filter(|&v| on[v]).collect()
    }

    /// Breadth-first tree of the dual graph rooted at the outer faces.
    ///
    /// Returns for every face the half-edge whose left face is that face and
    /// whose right face is its parent, or `None` for roots.
    pub fn dual_bfs_tree(&self) -> Vec<Option<HalfEdge>> {
        let nf = self.faces.len();
        let mut parent = vec![None; nf];
        let mut seen = vec![false; nf];
        let mut queue = std::collections::VecDeque::new();
        for &f in &self.outer_faces {
            seen[f] = true;
            queue.push_back(f);
        }
        while let Some(f) = queue.pop_front() {
            for &h in &self.faces[f] {
                // h has f on its left; crossing h from left to right reaches right_face(h).
                let g = self.right_face(h);
                if !seen[g] {
                    seen[g] = true;
                    parent[g] = Some(h ^ 1);
                    queue.push_back(g);
                }
            }
        }
        parent
    }

    /// Dual path from an outer face to `f` as a list of crossed half-edges,
    /// each oriented so that the path steps from its right face to its left face.
    pub fn dual_path_to(&self, f: FaceId) -> Vec<HalfEdge> {
        let parent = self.dual_bfs_tree();
        let mut path = Vec::new();
        let mut cur = f;
        while let Some(h) = parent[cur] {
            path.push(h);
            cur = self.right_face(h);
        }
        path.reverse();
        path
    }

    /// Multi-source BFS distances in the graph.
    pub fn graph_distances(&self, from: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_vertices];
        dist[from] = Some(0);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for w in self.neighbors(v) {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Induced subgraph on `keep` (in the given order), inheriting the embedding.
    pub fn induced_subgraph(&self, keep: &[VertexId]) -> Result<(Self, Vec<EdgeId>)> {
        let mut new_id = vec![usize::MAX; self.num_vertices];
        for (i, &v) in keep.iter().enumerate() {
            new_id[v] = i;
        }
        let mut kept_edges = Vec::new();
        let mut edges = Vec::new();
        let mut new_edge = vec![usize::MAX; self.num_edges()];
        for e in 0..self.num_edges() {
            let (u, v) = self.endpoints(e);
            if new_id[u] != usize::MAX && new_id[v] != usize::MAX {
                new_edge[e] = edges.len();
                edges.push((new_id[u], new_id[v], self.couplings[e]));
                kept_edges.push(e);
            }
        }
        let rotation: Vec<Vec<HalfEdge>> = keep
            .iter()
            .map(|&v| {
                self.out_half_edges(v)
                    .into_iter()
                    .filter(|&h| new_edge[edge_of(h)] != usize::MAX)
                    .map(|h| 2 * new_edge[edge_of(h)] + (h & 1))
                    .collect()
            })
            .collect();
        let coords = self.coords.as_ref().map(|c| keep.iter().map(|&v| c[v]).collect());
        let labels = keep.iter().map(|&v| self.labels[v].clone()).collect();
        let g = Self::assemble(keep.len(), &edges, &rotation, coords, Some(labels))?;
        Ok((g, kept_edges))
    }

    /// Removes the listed edges, keeping all vertices and the inherited embedding.
    pub fn remove_edges(&self, drop: &[EdgeId]) -> Result<Self> {
        let mut gone = vec![false; self.num_edges()];
        for &e in drop {
            gone[e] = true;
        }
        let mut new_edge = vec![usize::MAX; self.num_edges()];
        let mut edges = Vec::new();
        for e in 0..self.num_edges() {
            if !gone[e] {
                new_edge[e] = edges.len();
                let (u, v) = self.endpoints(e);
                edges.push((u, v, self.couplings[e]));
            }
        }
        let rotation: Vec<Vec<HalfEdge>> = (0..self.num_vertices)
            .map(|v| {
                self.out_half_edges(v)
                    .into_iter()
                    .filter(|&h| !gone[edge_of(h)])
                    .map(|h| 2 * new_edge[edge_of(h)] + (h & 1))
                    .collect()
            })
            .collect();
        Self::assemble(
            self.num_vertices,
            &edges,
            &rotation,
            self.coords.clone(),
            Some(self.labels.clone()),
        )
    }
}

fn label_or(labels: &[String], v: usize) -> String {
    labels.get(v).cloned().unwrap_or_else(|| v.to_string())
}
