//! Route enumeration and utility-maximising route choice.
//!
//! [`RouteSet`] enumerates every simple start→goal path once and caches the
//! per-attribute utilities, so choosing the best route for a preference
//! vector is a dot-product argmax. [`cost_graph_best_route`] is an
//! independent planner that searches the map directly on per-edge
//! disutility cost and is used to cross-check the exhaustive one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::PreferenceVector;
use crate::error::{Error, Result};
use crate::map::{AttributeUtilities, MapGraph};

pub const DEFAULT_MAX_ROUTES: usize = 10_000;

/// A simple start→goal path with cached utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOption {
    /// 1-based position in the enumeration order of its map.
    pub id: usize,
    pub edges: Vec<String>,
    pub nodes: Vec<String>,
    pub length: u32,
    pub utilities: AttributeUtilities,
}

impl RouteOption {
    pub fn utility(&self, p: &PreferenceVector) -> f64 {
        self.utilities.aggregate(p)
    }
}

/// Builds a route from edge ids, validating it against the map.
pub fn route_from_edges(map: &MapGraph, edge_ids: &[&str], id: usize) -> Result<RouteOption> {
    let positions = edge_ids
        .iter()
        .map(|e| {
            map.edge_position(e)
                .ok_or_else(|| Error::InvalidRoute(format!("unknown edge `{e}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    route_from_positions(map, &positions, id)
}

fn route_from_positions(map: &MapGraph, positions: &[usize], id: usize) -> Result<RouteOption> {
    let node_seq = map.trace_path(positions)?;
    Ok(RouteOption {
        id,
        edges: positions.iter().map(|&e| map.edges()[e].id.clone()).collect(),
        nodes: node_seq.iter().map(|&n| map.nodes()[n].id.clone()).collect(),
        length: map.path_length(positions),
        utilities: map.path_utilities(positions),
    })
}

/// Recomputes a route's utilities from the map, validating the path.
pub fn route_utilities(map: &MapGraph, route: &RouteOption) -> Result<AttributeUtilities> {
    let refs: Vec<&str> = route.edges.iter().map(String::as_str).collect();
    Ok(route_from_edges(map, &refs, route.id)?.utilities)
}

/// `U(route) = Σ wᵢ·uᵢ(route)`, computed from the map.
pub fn route_utility(map: &MapGraph, route: &RouteOption, p: &PreferenceVector) -> Result<f64> {
    Ok(route_utilities(map, route)?.aggregate(p))
}

/// All simple start→goal paths, ordered by node sequence then edge ids.
pub fn enumerate_routes(map: &MapGraph, max_routes: usize) -> Result<Vec<RouteOption>> {
    let adjacency = map.adjacency();
    let goal = map.goal_index();
    let mut visited = vec![false; map.nodes().len()];
    let mut raw: Vec<Vec<usize>> = Vec::new();
    let mut path: Vec<usize> = Vec::new();

    // Iterative DFS; each frame holds (node, next adjacency slot).
    let start = map.start_index();
    visited[start] = true;
    let mut stack = vec![(start, 0usize)];
    while let Some(&mut (node, ref mut slot)) = stack.last_mut() {
        if let Some(&(edge, next)) = adjacency[node].get(*slot) {
            *slot += 1;
            if visited[next] {
                continue;
            }
            path.push(edge);
            if next == goal {
                raw.push(path.clone());
                if raw.len() > max_routes {
                    return Err(Error::RouteExplosion { limit: max_routes });
                }
                path.pop();
            } else {
                visited[next] = true;
                stack.push((next, 0));
            }
        } else {
            stack.pop();
            visited[node] = false;
            if !stack.is_empty() {
                path.pop();
            }
        }
    }

    let mut routes = raw
        .iter()
        .map(|p| route_from_positions(map, p, 0))
        .collect::<Result<Vec<_>>>()?;
    routes.sort_by(|a, b| a.nodes.cmp(&b.nodes).then_with(|| a.edges.cmp(&b.edges)));
    for (i, r) in routes.iter_mut().enumerate() {
        r.id = i + 1;
    }
    Ok(routes)
}

/// Index of the maximum, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// A map together with its enumerated routes.
#[derive(Debug, Clone)]
pub struct RouteSet {
    map: MapGraph,
    routes: Vec<RouteOption>,
}

impl RouteSet {
    pub fn new(map: MapGraph) -> Result<Self> {
        Self::with_limit(map, DEFAULT_MAX_ROUTES)
    }

    pub fn with_limit(map: MapGraph, max_routes: usize) -> Result<Self> {
        let routes = enumerate_routes(&map, max_routes)?;
        Ok(RouteSet { map, routes })
    }

    pub fn map(&self) -> &MapGraph {
        &self.map
    }

    pub fn routes(&self) -> &[RouteOption] {
        &self.routes
    }

    pub fn route(&self, id: usize) -> Option<&RouteOption> {
        id.checked_sub(1).and_then(|i| self.routes.get(i))
    }

    /// Position (0-based) of the utility-maximising route.
    pub fn best_index(&self, p: &PreferenceVector) -> usize {
        argmax(self.routes.iter().map(|r| r.utility(p))).expect("a valid map has at least one route")
    }

    pub fn best_route(&self, p: &PreferenceVector) -> &RouteOption {
        &self.routes[self.best_index(p)]
    }

    /// Routes sorted by utility, descending; ties keep enumeration order.
    pub fn rank_routes(&self, p: &PreferenceVector) -> Vec<(&RouteOption, f64)> {
        let mut ranked: Vec<_> = self.routes.iter().map(|r| (r, r.utility(p))).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked
    }
}

pub fn best_route(map: &MapGraph, p: &PreferenceVector) -> Result<RouteOption> {
    let set = RouteSet::new(map.clone())?;
    Ok(set.best_route(p).clone())
}

pub fn rank_routes(map: &MapGraph, p: &PreferenceVector) -> Result<Vec<(RouteOption, f64)>> {
    let set = RouteSet::new(map.clone())?;
    Ok(set.rank_routes(p).into_iter().map(|(r, u)| (r.clone(), u)).collect())
}

#[derive(Debug, Clone)]
struct Label {
    node: usize,
    visited: u128,
    cost: f64,
    parent: Option<usize>,
    edge: usize,
}

/// Best route found by searching the map on per-edge disutility cost.
///
/// Each edge costs `Σ_{i≠eff} wᵢ·(1 − uᵢ(edge))·length`. For a route of
/// length `L` and cost `C`, `U = 1 − (C + w_eff·(L − L_min)) / L`, so the
/// search keeps, for every node and every reached length, the non-dominated
/// elementary labels (lower cost, subset of visited nodes) and expands them
/// in order of length. Maps are limited to 128 nodes.
pub fn cost_graph_best_route(map: &MapGraph, p: &PreferenceVector) -> Result<RouteOption> {
    let n_nodes = map.nodes().len();
    if n_nodes > 128 {
        return Err(Error::InvalidRoute("cost-graph planner supports at most 128 nodes".into()));
    }
    let w = p.weights();
    let (w_road, w_eff, w_aes) = (w[0], w[1], w[2]);
    let edge_cost: Vec<f64> = map
        .edges()
        .iter()
        .map(|e| {
            let road = 1.0 - e.surface.utility();
            let aes = 1.0 - e.utility(crate::domain::AttributeId::AESTHETIC_APPEAL).unwrap();
            (w_road * road + w_aes * aes) * e.length as f64
        })
        .collect();

    let adjacency = map.adjacency();
    let (start, goal) = (map.start_index(), map.goal_index());
    let l_min = map.shortest_length() as f64;

    let mut labels: Vec<Label> = vec![Label {
        node: start,
        visited: 1u128 << start,
        cost: 0.0,
        parent: None,
        edge: usize::MAX,
    }];
    // length -> label indices waiting to be expanded at that length
    let mut buckets: BTreeMap<u32, Vec<usize>> = BTreeMap::from([(0, vec![0])]);
    // (node, length) -> non-dominated label indices
    let mut frontier: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    let mut alive = vec![true];
    let mut best: Option<(f64, usize)> = None;

    while let Some((length, bucket)) = buckets.pop_first() {
        for li in bucket {
            let Label { node, visited, cost, .. } = labels[li];
            if !alive[li] {
                continue;
            }
            if node == goal {
                let l = length as f64;
                let u = 1.0 - (cost + w_eff * (l - l_min)) / l;
                if best.is_none_or(|(b, _)| u > b) {
                    best = Some((u, li));
                }
                continue;
            }
            for &(e, next) in &adjacency[node] {
                if visited & (1u128 << next) != 0 {
                    continue;
                }
                let cand = Label {
                    node: next,
                    visited: visited | (1u128 << next),
                    cost: cost + edge_cost[e],
                    parent: Some(li),
                    edge: e,
                };
                let key = (next, length + map.edges()[e].length);
                let front = frontier.entry(key).or_default();
                let dominated = front.iter().any(|&o| {
                    let other = &labels[o];
                    other.cost <= cand.cost && other.visited & cand.visited == other.visited
                });
                if dominated {
                    continue;
                }
                front.retain(|&o| {
                    let other = &labels[o];
                    let keep = !(cand.cost <= other.cost && cand.visited & other.visited == cand.visited);
                    if !keep {
                        alive[o] = false;
                    }
                    keep
                });
                let idx = labels.len();
                alive.push(true);
                front.push(idx);
                labels.push(cand);
                buckets.entry(key.1).or_default().push(idx);
            }
        }
    }

    let (_, mut li) = best.ok_or_else(|| Error::DisconnectedMap {
        start: map.start().to_string(),
        goal: map.goal().to_string(),
    })?;
    let mut positions = Vec::new();
    while let Some(parent) = labels[li].parent {
        positions.push(labels[li].edge);
        li = parent;
    }
    positions.reverse();
    route_from_positions(map, &positions, 0)
}
