//! Attribute-annotated road maps and per-edge / per-path utilities.
//!
//! Utility tables:
//!
//! | surface       | road condition |     | greenery | aesthetic base |
//! |---------------|----------------|-----|----------|----------------|
//! | `smooth`      | 1.0            |     | `trees`  | 1.0            |
//! | `fine_stone`  | 0.6            |     | `bushes` | 0.6            |
//! | `rough_stone` | 0.2            |     | `none`   | 0.3            |
//!
//! A noisy edge loses 0.3 aesthetic utility (clamped at 0). Efficiency is
//! route-level: shortest start→goal length divided by the route length.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{AttributeId, PreferenceVector, DEFAULT_ATTRIBUTES};
use crate::error::{Error, Result};

const NOISE_DEDUCTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    RoughStone,
    FineStone,
    Smooth,
}

impl Surface {
    pub fn utility(self) -> f64 {
        match self {
            Surface::Smooth => 1.0,
            Surface::FineStone => 0.6,
            Surface::RoughStone => 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Greenery {
    None,
    Bushes,
    Trees,
}

impl Greenery {
    pub fn utility(self) -> f64 {
        match self {
            Greenery::Trees => 1.0,
            Greenery::Bushes => 0.6,
            Greenery::None => 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: u32,
    pub surface: Surface,
    pub greenery: Greenery,
    pub noisy: bool,
}

impl Edge {
    /// Per-edge utility for road condition or aesthetic appeal.
    pub fn utility(&self, attr: AttributeId) -> Result<f64> {
        match attr {
            AttributeId::ROAD_CONDITION => Ok(self.surface.utility()),
            AttributeId::AESTHETIC_APPEAL => {
                let deduction = if self.noisy { NOISE_DEDUCTION } else { 0.0 };
                Ok((self.greenery.utility() - deduction).clamp(0.0, 1.0))
            }
            AttributeId::EFFICIENCY => Err(Error::EfficiencyIsRouteLevel),
            other => Err(Error::UnknownAttribute(other.index())),
        }
    }
}

/// Per-attribute utilities of a route, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeUtilities(pub Vec<f64>);

impl AttributeUtilities {
    pub fn get(&self, attr: AttributeId) -> f64 {
        self.0[attr.position()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Weighted aggregate `Σ wᵢ·uᵢ`.
    pub fn aggregate(&self, p: &PreferenceVector) -> f64 {
        p.dot(&self.0)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDocument {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    start: String,
    goal: String,
}

/// Validated, immutable road network with a designated start and goal.
#[derive(Debug, Clone, Serialize)]
pub struct MapGraph {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    start: String,
    goal: String,
    #[serde(skip)]
    node_index: HashMap<String, usize>,
    #[serde(skip)]
    edge_index: HashMap<String, usize>,
    /// `adjacency[node]` lists `(edge, neighbour)` pairs; edges are traversable both ways.
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
    #[serde(skip)]
    shortest_length: u32,
}

impl MapGraph {
    /// Parses and validates a map JSON document.
    pub fn from_json(document: &str) -> Result<Self> {
        let doc: MapDocument = serde_json::from_str(document)?;
        Self::build(doc.name, doc.nodes, doc.edges, doc.start, doc.goal)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn build(
        name: String,
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        start: String,
        goal: String,
    ) -> Result<Self> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(Error::SchemaViolation(format!("node `{}` has non-finite coordinates", node.id)));
            }
            if node_index.insert(node.id.clone(), i).is_some() {
                return Err(Error::SchemaViolation(format!("duplicate node id `{}`", node.id)));
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, edge) in edges.iter().enumerate() {
            if edge_index.insert(edge.id.clone(), i).is_some() {
                return Err(Error::SchemaViolation(format!("duplicate edge id `{}`", edge.id)));
            }
            let lookup = |id: &str| {
                node_index.get(id).copied().ok_or_else(|| {
                    Error::SchemaViolation(format!("edge `{}` references unknown node `{id}`", edge.id))
                })
            };
            let (a, b) = (lookup(&edge.from)?, lookup(&edge.to)?);
            if a == b {
                return Err(Error::SchemaViolation(format!("edge `{}` is a self-loop", edge.id)));
            }
            if edge.length == 0 {
                return Err(Error::SchemaViolation(format!("edge `{}` has zero length", edge.id)));
            }
            adjacency[a].push((i, b));
            adjacency[b].push((i, a));
        }
        for endpoint in [&start, &goal] {
            if !node_index.contains_key(endpoint) {
                return Err(Error::SchemaViolation(format!("unknown start/goal node `{endpoint}`")));
            }
        }
        if start == goal {
            return Err(Error::SchemaViolation("start and goal coincide".into()));
        }
        let mut map = MapGraph {
            name,
            nodes,
            edges,
            start,
            goal,
            node_index,
            edge_index,
            adjacency,
            shortest_length: 0,
        };
        map.shortest_length = map.compute_shortest_length().ok_or_else(|| Error::DisconnectedMap {
            start: map.start.clone(),
            goal: map.goal.clone(),
        })?;
        Ok(map)
    }

    fn compute_shortest_length(&self) -> Option<u32> {
        let (s, g) = (self.start_index(), self.goal_index());
        let mut dist = vec![u32::MAX; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[s] = 0;
        heap.push(Reverse((0u32, s)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if v == g {
                return Some(d);
            }
            if d > dist[v] {
                continue;
            }
            for &(e, w) in &self.adjacency[v] {
                let nd = d + self.edges[e].length;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        None
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn goal(&self) -> &str {
        &self.goal
    }

    pub fn start_index(&self) -> usize {
        self.node_index[&self.start]
    }

    pub fn goal_index(&self) -> usize {
        self.node_index[&self.goal]
    }

    pub fn node_position(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edge_position(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub(crate) fn adjacency(&self) -> &[Vec<(usize, usize)>] {
        &self.adjacency
    }

    /// Number of quality attributes scored on this map.
    pub fn attribute_count(&self) -> usize {
        DEFAULT_ATTRIBUTES
    }

    /// Length in segments of the shortest start→goal path.
    pub fn shortest_length(&self) -> u32 {
        self.shortest_length
    }

    /// Checks that `edge_path` (edge positions) is a simple start→goal path
    /// and returns its node sequence (node positions).
    pub fn trace_path(&self, edge_path: &[usize]) -> Result<Vec<usize>> {
        if edge_path.is_empty() {
            return Err(Error::InvalidRoute("route has no edges".into()));
        }
        let mut current = self.start_index();
        let mut seq = vec![current];
        let mut seen = HashSet::from([current]);
        for &e in edge_path {
            let edge = self
                .edges
                .get(e)
                .ok_or_else(|| Error::InvalidRoute(format!("edge position {e} out of range")))?;
            let (a, b) = (self.node_index[&edge.from], self.node_index[&edge.to]);
            let next = if a == current {
                b
            } else if b == current {
                a
            } else {
                return Err(Error::InvalidRoute(format!("edge `{}` is not incident to the path", edge.id)));
            };
            if !seen.insert(next) {
                return Err(Error::InvalidRoute(format!("node `{}` visited twice", self.nodes[next].id)));
            }
            seq.push(next);
            current = next;
        }
        if current != self.goal_index() {
            return Err(Error::InvalidRoute("route does not end at the goal".into()));
        }
        Ok(seq)
    }

    pub fn path_length(&self, edge_path: &[usize]) -> u32 {
        edge_path.iter().map(|&e| self.edges[e].length).sum()
    }

    /// Length-weighted per-attribute utilities of a path; efficiency is
    /// `shortest / length`. The path is assumed valid.
    pub fn path_utilities(&self, edge_path: &[usize]) -> AttributeUtilities {
        let length = self.path_length(edge_path) as f64;
        let mut road = 0.0;
        let mut aesthetic = 0.0;
        for &e in edge_path {
            let edge = &self.edges[e];
            let len = edge.length as f64;
            road += edge.utility(AttributeId::ROAD_CONDITION).unwrap() * len;
            aesthetic += edge.utility(AttributeId::AESTHETIC_APPEAL).unwrap() * len;
        }
        AttributeUtilities(vec![
            road / length,
            self.shortest_length as f64 / length,
            aesthetic / length,
        ])
    }
}

/// Maps shipped with the crate, in session order.
/// Random connected map on `n_nodes` nodes (at least 2) with `extra_edges`
/// edges beyond a spanning tree. Start is `n0`, goal is the last node.
pub fn random_map<R: rand::Rng + ?Sized>(rng: &mut R, n_nodes: usize, extra_edges: usize) -> MapGraph {
    assert!(n_nodes >= 2, "a map needs at least two nodes");
    let nodes: Vec<Node> = (0..n_nodes)
        .map(|i| Node {
            id: format!("n{i}"),
            x: rng.random_range(0.0..100.0),
            y: rng.random_range(0.0..100.0),
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (1..n_nodes).map(|i| (rng.random_range(0..i), i)).collect();
    let mut attempts = 0;
    while pairs.len() < n_nodes - 1 + extra_edges && attempts < 100 * (extra_edges + 1) {
        attempts += 1;
        let (a, b) = (rng.random_range(0..n_nodes), rng.random_range(0..n_nodes));
        let key = (a.min(b), a.max(b));
        if a != b && !pairs.iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
            pairs.push(key);
        }
    }
    let edges = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| Edge {
            id: format!("e{i}"),
            from: format!("n{a}"),
            to: format!("n{b}"),
            length: rng.random_range(1..=10),
            surface: [Surface::RoughStone, Surface::FineStone, Surface::Smooth][rng.random_range(0..3)],
            greenery: [Greenery::None, Greenery::Bushes, Greenery::Trees][rng.random_range(0..3)],
            noisy: rng.random_bool(0.4),
        })
        .collect();
    MapGraph::build(
        format!("random{n_nodes}"),
        nodes,
        edges,
        "n0".to_string(),
        format!("n{}", n_nodes - 1),
    )
    .expect("spanning tree keeps the map connected")
}

pub mod bundled {
    use super::MapGraph;

    pub const FILES: [(&str, &str); 3] = [
        ("scenario1.map.json", include_str!("../maps/scenario1.map.json")),
        ("scenario2.map.json", include_str!("../maps/scenario2.map.json")),
        ("scenario3.map.json", include_str!("../maps/scenario3.map.json")),
    ];

    pub fn load_all() -> Vec<MapGraph> {
        FILES
            .iter()
            .map(|(file, text)| {
                MapGraph::from_json(text).unwrap_or_else(|e| panic!("bundled map {file} is invalid: {e}"))
            })
            .collect()
    }

    /// Looks up a bundled map by file name (`scenario1.map.json`) or map name.
    pub fn by_name(name: &str) -> Option<MapGraph> {
        FILES.iter().find_map(|(file, text)| {
            let map = MapGraph::from_json(text).ok()?;
            (*file == name || map.name() == name).then_some(map)
        })
    }
}
