use crate::current::Current;
use crate::error::{Error, Result};
use crate::graph::{edge_of, twin, HalfEdge, PlanarGraph, VertexId};

/// Labelled edge copies; copy `i` is traversed along half-edge `copies[i]`.
///
/// Copies of one undirected edge share that edge's block of identifiers,
/// so relabelling within a block permutes configurations of one current.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopMultigraph {
    pub copies: Vec<HalfEdge>,
}

impl LoopMultigraph {
    /// Canonical labelling: edges ascending, forward copies first.
    pub fn from_current(n: &Current) -> Self {
        let mut copies = Vec::new();
        for e in 0..n.num_edges() {
            for _ in 0..n.get(2 * e) {
                copies.push(2 * e);
            }
            for _ in 0..n.get(2 * e + 1) {
                copies.push(2 * e + 1);
            }
        }
        LoopMultigraph { copies }
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    /// `M_e` per undirected edge.
    pub fn edge_counts(&self, g: &PlanarGraph) -> Vec<u32> {
        let mut m = vec![0u32; g.num_edges()];
        for &h in &self.copies {
            m[edge_of(h)] += 1;
        }
        m
    }

    /// `deg_M(v)`.
    pub fn degrees(&self, g: &PlanarGraph) -> Vec<u32> {
        let mut d = vec![0u32; g.num_vertices()];
        for &h in &self.copies {
            d[g.origin(h)] += 1;
            d[g.head(h)] += 1;
        }
        d
    }

    pub fn current(&self, g: &PlanarGraph) -> Current {
        let mut n = Current::zero(g);
        for &h in &self.copies {
            n.add(h, 1);
        }
        n
    }
}

/// One traversal of a configuration, as a list of copy identifiers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Traversal {
    /// Rotated to start at its smallest copy identifier.
    Loop(Vec<usize>),
    Path(Vec<usize>),
}

/// A multigraph with pairings at every vertex outside the source set.
///
/// `succ[c]` is the copy leaving the head of `c` that is paired with `c`;
/// it is `None` exactly when the head of `c` lies in the source set or is an
/// unmatched incoming end.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopConfig {
    pub multigraph: LoopMultigraph,
    pub succ: Vec<Option<usize>>,
    pub source_set: Vec<bool>,
}

impl LoopConfig {
    pub fn empty(g: &PlanarGraph, source_set: Vec<bool>) -> Self {
        debug_assert_eq!(source_set.len(), g.num_vertices());
        LoopConfig {
            multigraph: LoopMultigraph { copies: Vec::new() },
            succ: Vec::new(),
            source_set,
        }
    }

    pub fn in_source_set(&self, v: VertexId) -> bool {
        self.source_set[v]
    }

    pub fn copy_origin(&self, g: &PlanarGraph, c: usize) -> VertexId {
        g.origin(self.multigraph.copies[c])
    }

    pub fn copy_head(&self, g: &PlanarGraph, c: usize) -> VertexId {
        g.head(self.multigraph.copies[c])
    }

    /// Checks the pairing: a bijection from incoming to outgoing copies at
    /// every vertex outside the source set, nothing paired inside it.
    pub fn validate(&self, g: &PlanarGraph) -> Result<()> {
        let k = self.multigraph.len();
        if self.succ.len() != k {
            return Err(Error::Consistency("one successor entry per copy is required".into()));
        }
        let mut used = vec![false; k];
        for c in 0..k {
            let v = self.copy_head(g, c);
            match self.succ[c] {
                Some(d) => {
                    if self.source_set[v] {
                        return Err(Error::Consistency(format!("copy {c} is paired at source-set vertex {v}")));
                    }
                    if d >= k || self.copy_origin(g, d) != v {
                        return Err(Error::Consistency(format!("copy {c} is paired with a copy not leaving {v}")));
                    }
                    if used[d] {
                        return Err(Error::Consistency(format!("copy {d} is paired twice")));
                    }
                    used[d] = true;
                }
                None => {
                    if !self.source_set[v] {
                        return Err(Error::Consistency(format!("copy {c} is unpaired at vertex {v}")));
                    }
                }
            }
        }
        for (d, &u) in used.iter().enumerate() {
            if !u && !self.source_set[self.copy_origin(g, d)] {
                return Err(Error::Consistency(format!("copy {d} has no predecessor")));
            }
        }
        Ok(())
    }

    /// Copies that no other copy is paired into: starts of open paths.
    pub fn path_starts(&self) -> Vec<usize> {
        let mut has_pred = vec![false; self.succ.len()];
        for d in self.succ.iter().flatten() {
            has_pred[*d] = true;
        }
        (0..self.succ.len()).filter(|&c| !has_pred[c]).collect()
    }

    /// Open paths followed by loops, each loop rotated to its minimal copy.
    pub fn traversals(&self, _g: &PlanarGraph) -> Vec<Traversal> {
        let k = self.multigraph.len();
        let mut seen = vec![false; k];
        let mut out = Vec::new();
        for c in self.path_starts() {
            let mut path = vec![c];
            seen[c] = true;
            let mut cur = c;
            while let Some(d) = self.succ[cur] {
                seen[d] = true;
                path.push(d);
                cur = d;
            }
            out.push(Traversal::Path(path));
        }
        for c in 0..k {
            if !seen[c] {
                let mut cycle = vec![c];
                seen[c] = true;
                let mut cur = self.succ[c].expect("copy inside a loop has a successor");
                while cur != c {
                    seen[cur] = true;
                    cycle.push(cur);
                    cur = self.succ[cur].expect("copy inside a loop has a successor");
                }
                out.push(Traversal::Loop(cycle));
            }
        }
        out
    }

    pub fn current(&self, g: &PlanarGraph) -> Current {
        self.multigraph.current(g)
    }

    /// Global orientation reversal: every copy flipped, pairings inverted.
    pub fn reversed(&self) -> Self {
        let copies = self.multigraph.copies.iter().map(|&h| twin(h)).collect();
        let mut succ = vec![None; self.succ.len()];
        for (c, s) in self.succ.iter().enumerate() {
            if let Some(d) = s {
                succ[*d] = Some(c);
            }
        }
        LoopConfig {
            multigraph: LoopMultigraph { copies },
            succ,
            source_set: self.source_set.clone(),
        }
    }

    /// `ρ`: forgets the pairings at the vertices of `s` not already in the source set.
    pub fn cut(&self, g: &PlanarGraph, s: &[VertexId]) -> Self {
        let mut out = self.clone();
        for &v in s {
            out.source_set[v] = true;
        }
        for c in 0..out.succ.len() {
            if out.source_set[self.copy_head(g, c)] {
                out.succ[c] = None;
            }
        }
        out
    }

    /// Number of pieces leaving `a` that reach `b` before returning to `a`,
    /// after cutting every traversal at `a` and `b`.
    pub fn count_m(&self, g: &PlanarGraph, a: VertexId, b: VertexId) -> Result<usize> {
        if a == b {
            return Err(Error::Argument("m_{a,b} needs distinct vertices".into()));
        }
        let mut m = 0;
        for c in 0..self.multigraph.len() {
            if self.copy_origin(g, c) != a {
                continue;
            }
            let mut cur = c;
            loop {
                let v = self.copy_head(g, cur);
                if v == b {
                    m += 1;
                    break;
                }
                if v == a {
                    break;
                }
                match self.succ[cur] {
                    Some(d) => cur = d,
                    None => break,
                }
            }
        }
        Ok(m)
    }

    /// Paths running from `a` to `b`.
    pub fn paths_between(&self, g: &PlanarGraph, a: VertexId, b: VertexId) -> Vec<Vec<usize>> {
        self.traversals(g)
            .into_iter()
            .filter_map(|t| match t {
                Traversal::Path(p)
                    if self.copy_origin(g, p[0]) == a && self.copy_head(g, *p.last().unwrap()) == b =>
                {
                    Some(p)
                }
                _ => None,
            })
            .collect()
    }

    /// Reverses the orientation of the given path of this configuration.
    pub fn reverse_path(&self, g: &PlanarGraph, path: &[usize]) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::Argument("empty path".into()));
        }
        for w in path.windows(2) {
            if self.succ[w[0]] != Some(w[1]) {
                return Err(Error::Argument("copies do not form a path of the configuration".into()));
            }
        }
        let first = self.copy_origin(g, path[0]);
        let last = self.copy_head(g, *path.last().unwrap());
        if !self.source_set[first] || !self.source_set[last] || self.succ[*path.last().unwrap()].is_some() {
            return Err(Error::Argument("path must run between source-set vertices".into()));
        }
        let mut out = self.clone();
        for &c in path {
            out.multigraph.copies[c] = twin(out.multigraph.copies[c]);
            out.succ[c] = None;
        }
        for w in path.windows(2) {
            out.succ[w[1]] = Some(w[0]);
        }
        Ok(out)
    }
}
