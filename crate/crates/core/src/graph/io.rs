//! JSON graph files.
//!
//! ```json
//! {"vertices": ["a", "b", "c"],
//!  "rotation": {"a": ["b", "c"], "b": ["c", "a"], "c": ["a", "b"]},
//!  "couplings": {"a-b": 1.0, "b-c": 1.0, "a-c": [1.0]},
//!  "outer_face": ["a", "c"]}
//! ```
//!
//! Rotations list neighbours counterclockwise. A coupling entry may be an
//! array to give parallel edges distinct values. `outer_face` names the
//! face on the left of the directed edge `u -> v`. Optional `coordinates`
//! map vertices to `[x, y]`.

use super::PlanarGraph;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<Value>,
    pub rotation: BTreeMap<String, Vec<Value>>,
    pub couplings: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_face: Option<(Value, Value)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<BTreeMap<String, [f64; 2]>>,
}

fn id_string(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Validation(format!("vertex id {other} is neither a string nor a number"))),
    }
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_graph(&self) -> Result<PlanarGraph> {
        let labels: Vec<String> = self.vertices.iter().map(id_string).collect::<Result<_>>()?;
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Validation(format!("vertex {l} listed twice")));
            }
        }
        for key in self.rotation.keys() {
            if !index.contains_key(key) {
                return Err(Error::Validation(format!("rotation given for unknown vertex {key}")));
            }
        }
        let mut rotation = vec![Vec::new(); labels.len()];
        for (i, l) in labels.iter().enumerate() {
            if let Some(list) = self.rotation.get(l) {
                for w in list {
                    let w = id_string(w)?;
                    let j = *index.get(&w).ok_or_else(|| {
                        Error::Embedding(format!("edge {l}-{w}: vertex {w} is not declared"))
                    })?;
                    rotation[i].push(j);
                }
            }
        }
        let lookup = |u: usize, w: usize, k: usize| -> Result<f64> {
            let a = &labels[u];
            let b = &labels[w];
            let value = self
                .couplings
                .get(&format!("{a}-{b}"))
                .or_else(|| self.couplings.get(&format!("{b}-{a}")))
                .ok_or_else(|| Error::Validation(format!("edge {a}-{b} has no coupling")))?;
            let j = match value {
                Value::Number(x) => x.as_f64(),
                Value::Array(xs) => xs.get(k).and_then(|x| x.as_f64()),
                _ => None,
            };
            let j = j.ok_or_else(|| {
                Error::Validation(format!("edge {a}-{b}: coupling {value} is not a number for copy {k}"))
            })?;
            if !(j.is_finite() && j > 0.0) {
                return Err(Error::Validation(format!(
                    "edge {a}-{b} has coupling {j}; couplings must be positive and finite"
                )));
            }
            Ok(j)
        };
        let mut g = PlanarGraph::from_neighbor_rotation(&rotation, Some(labels.clone()), lookup)?;
        if let Some(coords) = &self.coordinates {
            let mut pts = vec![[0.0, 0.0]; labels.len()];
            for (i, l) in labels.iter().enumerate() {
                pts[i] = *coords
                    .get(l)
                    .ok_or_else(|| Error::Validation(format!("vertex {l} has no coordinates")))?;
            }
            g.coords = Some(pts);
        }
        if let Some((u, v)) = &self.outer_face {
            let (u, v) = (id_string(u)?, id_string(v)?);
            let h = match (index.get(&u), index.get(&v)) {
                (Some(&a), Some(&b)) => g.half_edge_between(a, b),
                _ => None,
            }
            .ok_or_else(|| Error::Validation(format!("outer_face hint {u}-{v} is not an edge")))?;
            g.set_outer_face_left_of(h)?;
        }
        Ok(g)
    }

    pub fn from_graph(g: &PlanarGraph) -> Self {
        let labels = g.labels();
        let vertices = labels.iter().map(|l| Value::String(l.clone())).collect();
        let mut rotation = BTreeMap::new();
        for v in 0..g.num_vertices() {
            rotation.insert(
                labels[v].clone(),
                g.neighbors(v).into_iter().map(|w| Value::String(labels[w].clone())).collect(),
            );
        }
        let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for u in 0..g.num_vertices() {
            for h in g.out_half_edges(u) {
                let w = g.head(h);
                if u < w {
                    grouped
                        .entry(format!("{}-{}", labels[u], labels[w]))
                        .or_default()
                        .push(g.coupling(super::edge_of(h)));
                }
            }
        }
        let couplings = grouped
            .into_iter()
            .map(|(k, js)| {
                let v = if js.len() == 1 { Value::from(js[0]) } else { Value::from(js) };
                (k, v)
            })
            .collect();
        let outer_face = g.outer_face().map(|f| {
            let h = g.face_walk(f)[0];
            (Value::String(labels[g.origin(h)].clone()), Value::String(labels[g.head(h)].clone()))
        });
        let coordinates = g
            .coords()
            .map(|c| labels.iter().cloned().zip(c.iter().copied()).collect());
        GraphFile {
            vertices,
            rotation,
            couplings,
            outer_face,
            coordinates,
        }
    }
}
