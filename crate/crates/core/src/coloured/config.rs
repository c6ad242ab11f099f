use crate::current::{divergence, Current, SourceFunction};
use crate::error::{Error, Result};
use crate::graph::{twin, PlanarGraph, VertexId};
use crate::loops::{LoopConfig, LoopMultigraph, Traversal};
use crate::scalar::ln_factorial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Colour {
    Red,
    Blue,
}

impl Colour {
    pub fn swapped(self) -> Self {
        match self {
            Colour::Red => Colour::Blue,
            Colour::Blue => Colour::Red,
        }
    }
}

/// Two-coloured loop configuration outside a source set, with sources
/// wherever incoming and outgoing copies do not balance.
///
/// `succ[c]` pairs copy `c` with a copy leaving its head; at a vertex outside
/// the source set with `φ_v > 0` exactly `φ_v` outgoing copies stay without a
/// predecessor, and with `φ_v < 0` exactly `−φ_v` incoming copies stay without
/// a successor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColouredLoopConfig {
    pub multigraph: LoopMultigraph,
    pub colours: Vec<Colour>,
    pub succ: Vec<Option<usize>>,
    pub source_set: Vec<bool>,
}

impl ColouredLoopConfig {
    pub fn len(&self) -> usize {
        self.multigraph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multigraph.is_empty()
    }

    /// Sources `φ = δ(r + b)` of the configuration.
    pub fn sources(&self, g: &PlanarGraph) -> SourceFunction {
        divergence(g, &self.multigraph.current(g))
    }

    fn coloured_current(&self, g: &PlanarGraph, colour: Colour) -> Current {
        let mut n = Current::zero(g);
        for (c, &h) in self.multigraph.copies.iter().enumerate() {
            if self.colours[c] == colour {
                n.add(h, 1);
            }
        }
        n
    }

    pub fn red(&self, g: &PlanarGraph) -> Current {
        self.coloured_current(g, Colour::Red)
    }

    pub fn blue(&self, g: &PlanarGraph) -> Current {
        self.coloured_current(g, Colour::Blue)
    }

    /// The same traversals with colours forgotten.
    pub fn uncoloured(&self) -> LoopConfig {
        LoopConfig {
            multigraph: self.multigraph.clone(),
            succ: self.succ.clone(),
            source_set: self.source_set.clone(),
        }
    }

    pub fn validate(&self, g: &PlanarGraph) -> Result<()> {
        let k = self.len();
        if self.succ.len() != k || self.colours.len() != k {
            return Err(Error::Consistency("one colour and one successor entry per copy are required".into()));
        }
        let phi = self.sources(g);
        let deg = self.multigraph.degrees(g);
        let nv = g.num_vertices();
        let mut unmatched_in = vec![0i64; nv];
        let mut has_pred = vec![false; k];
        for c in 0..k {
            let v = g.head(self.multigraph.copies[c]);
            match self.succ[c] {
                Some(d) => {
                    if self.source_set[v] {
                        return Err(Error::Consistency(format!("copy {c} is paired at source-set vertex {v}")));
                    }
                    if d >= k || g.origin(self.multigraph.copies[d]) != v {
                        return Err(Error::Consistency(format!("copy {c} is paired with a copy not leaving {v}")));
                    }
                    if has_pred[d] {
                        return Err(Error::Consistency(format!("copy {d} is paired twice")));
                    }
                    has_pred[d] = true;
                }
                None => unmatched_in[v] += 1,
            }
        }
        let mut unmatched_out = vec![0i64; nv];
        for (d, &p) in has_pred.iter().enumerate() {
            if !p {
                unmatched_out[g.origin(self.multigraph.copies[d])] += 1;
            }
        }
        for v in 0..nv {
            if self.source_set[v] {
                continue;
            }
            if (deg[v] as i64 + phi[v].abs()) % 2 != 0 {
                return Err(Error::Validation(format!("degree plus |φ| is odd at vertex {v}")));
            }
            if unmatched_out[v] != phi[v].max(0) || unmatched_in[v] != (-phi[v]).max(0) {
                return Err(Error::Consistency(format!("wrong number of unmatched ends at vertex {v}")));
            }
        }
        Ok(())
    }

    /// Open paths ordered by start vertex, then by first copy.
    pub fn paths(&self, g: &PlanarGraph) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .uncoloured()
            .traversals(g)
            .into_iter()
            .filter_map(|t| match t {
                Traversal::Path(p) => Some(p),
                Traversal::Loop(_) => None,
            })
            .collect();
        out.sort_by_key(|p| (g.origin(self.multigraph.copies[p[0]]), p[0]));
        out
    }

    /// Paths from `a` to `b`, in canonical order.
    pub fn paths_between(&self, g: &PlanarGraph, a: VertexId, b: VertexId) -> Vec<Vec<usize>> {
        self.paths(g)
            .into_iter()
            .filter(|p| {
                g.origin(self.multigraph.copies[p[0]]) == a && g.head(self.multigraph.copies[*p.last().unwrap()]) == b
            })
            .collect()
    }

    /// Path switching: reverses the path and swaps the colours along it.
    pub fn switch_path(&self, path: &[usize]) -> Result<Self> {
        let k = self.len();
        if path.is_empty() || path.iter().any(|&c| c >= k) {
            return Err(Error::Argument("not a path of the configuration".into()));
        }
        for w in path.windows(2) {
            if self.succ[w[0]] != Some(w[1]) {
                return Err(Error::Argument("copies do not form a path of the configuration".into()));
            }
        }
        let last = *path.last().unwrap();
        if self.succ[last].is_some() || self.succ.iter().any(|s| *s == Some(path[0])) {
            return Err(Error::Argument("the copies are not a maximal open path".into()));
        }
        let mut out = self.clone();
        for &c in path {
            out.multigraph.copies[c] = twin(out.multigraph.copies[c]);
            out.colours[c] = out.colours[c].swapped();
            out.succ[c] = None;
        }
        for w in path.windows(2) {
            out.succ[w[1]] = Some(w[0]);
        }
        Ok(out)
    }
}

/// `log λ̃^S_β`; depends on the multigraph, `S` and `|φ|`.
pub fn weight_lambda_tilde(g: &PlanarGraph, cfg: &ColouredLoopConfig, beta: f64) -> Result<f64> {
    let phi = cfg.sources(g);
    let deg = cfg.multigraph.degrees(g);
    let m = cfg.multigraph.edge_counts(g);
    let mut acc = 0.0;
    for v in 0..g.num_vertices() {
        if cfg.source_set[v] {
            continue;
        }
        let t = deg[v] as u64 + phi[v].unsigned_abs();
        if t % 2 != 0 {
            return Err(Error::Validation(format!("degree plus |φ| is odd at vertex {v}")));
        }
        acc += ln_factorial::<f64>(phi[v].unsigned_abs()) - ln_factorial::<f64>(t / 2);
    }
    for (e, &me) in m.iter().enumerate() {
        if me > 0 {
            acc += me as f64 * (beta * g.coupling(e) / 2.0).ln() - ln_factorial::<f64>(me as u64);
        }
    }
    Ok(acc)
}
