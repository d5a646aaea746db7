//! Noncompliant drivers under a level-0/1/2 cognitive hierarchy.
//!
//! A level-`l` driver minimises its path time against the compliant edge
//! flows plus the flows of levels below `l`; it never anticipates its own
//! level. Every driver of one level and trip takes the same path.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DemandTable, Network, NodeId, Trip, LEVELS};

/// A simple directed path with its cost under the costs it was computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Single-source shortest path tree over nonnegative edge costs. With
/// `forward == false` the search runs on reversed edges, giving distances
/// *to* `root`.
pub(crate) struct Tree {
    pub dist: Vec<f64>,
    /// Edge through which each node was settled.
    pub via: Vec<Option<usize>>,
}

pub(crate) fn dijkstra(network: &Network, costs: &[f64], root: usize, forward: bool) -> Tree {
    let n = network.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut via = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    heap.push(Reverse((Dist(0.0), root)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        let incident = if forward {
            network.out_edges(u)
        } else {
            network.in_edges(u)
        };
        for &e in incident {
            let v = if forward { network.head(e) } else { network.tail(e) };
            let nd = d + costs[e];
            if nd < dist[v] {
                dist[v] = nd;
                via[v] = Some(e);
                heap.push(Reverse((Dist(nd), v)));
            }
        }
    }
    Tree { dist, via }
}

impl Tree {
    /// Edges from the root to `target` in a forward tree, in travel order.
    pub fn edges_to(&self, network: &Network, target: usize) -> Vec<usize> {
        let mut edges = Vec::new();
        let mut v = target;
        while let Some(e) = self.via[v] {
            edges.push(e);
            v = network.tail(e);
        }
        edges.reverse();
        edges
    }
}

fn check_costs(costs: &[f64], network: &Network) -> Result<()> {
    if costs.len() != network.edge_count() {
        return Err(Error::InvalidInput(format!(
            "{} edge costs for {} edges",
            costs.len(),
            network.edge_count()
        )));
    }
    if let Some((e, c)) = costs
        .iter()
        .enumerate()
        .find(|(_, &c)| !(c > 0.0) || !c.is_finite())
    {
        return Err(Error::InvalidInput(format!(
            "edge #{e} has non-positive cost {c}"
        )));
    }
    Ok(())
}

/// Minimum-cost path from `origin` to `destination` under strictly positive
/// `costs`. Among equal-cost paths the lexicographically smallest node
/// sequence is returned.
pub fn shortest_path(
    network: &Network,
    costs: &[f64],
    origin: NodeId,
    destination: NodeId,
) -> Result<Path> {
    check_costs(costs, network)?;
    let unreachable = || Error::Unreachable {
        origin,
        destination,
    };
    let src = network.node_index(origin).ok_or_else(unreachable)?;
    let dst = network.node_index(destination).ok_or_else(unreachable)?;
    let to_dst = dijkstra(network, costs, dst, false).dist;
    if !to_dst[src].is_finite() {
        return Err(unreachable());
    }

    // Walk forward taking the smallest-id successor that stays on some
    // shortest path; node indices are ordered like node ids.
    let mut nodes = vec![origin];
    let mut edges = Vec::new();
    let mut cost = 0.0;
    let mut u = src;
    while u != dst {
        let slack = 1e-12 * to_dst[u].max(1.0);
        let next = network
            .out_edges(u)
            .iter()
            .copied()
            .filter(|&e| costs[e] + to_dst[network.head(e)] <= to_dst[u] + slack)
            .min_by_key(|&e| network.head(e))
            .expect("a node with finite distance has a tight out-edge");
        cost += costs[next];
        edges.push(next);
        u = network.head(next);
        nodes.push(network.node_id(u));
    }
    Ok(Path { nodes, edges, cost })
}

/// Best response of a noncompliant driver on `trip` who anticipates the
/// compliant flows plus the flows of all lower levels.
pub fn best_response(
    network: &Network,
    compliant_totals: &[f64],
    lower_level_flows: &[f64],
    trip: &Trip,
) -> Result<Path> {
    let m = network.edge_count();
    if compliant_totals.len() != m || lower_level_flows.len() != m {
        return Err(Error::InvalidInput("flow vectors must have one entry per edge".into()));
    }
    let times: Vec<f64> = (0..m)
        .map(|e| network.bpr_time(e, compliant_totals[e] + lower_level_flows[e]))
        .collect::<Result<_>>()?;
    shortest_path(network, &times, trip.origin, trip.destination)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpvRoute {
    pub level: usize,
    pub trip: usize,
    pub path: Path,
}

/// One path per (level, trip) with positive noncompliant demand, ordered by
/// level then trip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NpvAssignment {
    pub routes: Vec<NpvRoute>,
}

impl NpvAssignment {
    pub fn route(&self, level: usize, trip: usize) -> Option<&NpvRoute> {
        self.routes
            .iter()
            .find(|r| r.level == level && r.trip == trip)
    }

    /// The assignment indicator: whether the (level, trip) path uses edge `e`.
    pub fn uses(&self, e: usize, level: usize, trip: usize) -> bool {
        self.route(level, trip)
            .is_some_and(|r| r.path.edges.contains(&e))
    }

    /// True when both assignments route every (level, trip) over the same
    /// edges, ignoring path costs.
    pub fn same_paths(&self, other: &NpvAssignment) -> bool {
        self.routes.len() == other.routes.len()
            && self.routes.iter().zip(&other.routes).all(|(a, b)| {
                a.level == b.level && a.trip == b.trip && a.path.edges == b.path.edges
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpvFlows {
    pub by_level: [Vec<f64>; LEVELS],
    pub total: Vec<f64>,
}

impl NpvFlows {
    pub fn zeros(edges: usize) -> Self {
        NpvFlows {
            by_level: [vec![0.0; edges], vec![0.0; edges], vec![0.0; edges]],
            total: vec![0.0; edges],
        }
    }

    /// Rebuilds level and total flows from an assignment.
    pub fn aggregate(edges: usize, assignment: &NpvAssignment, demand: &DemandTable) -> Self {
        let mut flows = NpvFlows::zeros(edges);
        for r in &assignment.routes {
            let q = demand.npv_rate(r.level, r.trip);
            for &e in &r.path.edges {
                flows.by_level[r.level][e] += q;
            }
        }
        for e in 0..edges {
            flows.total[e] = (0..LEVELS).map(|l| flows.by_level[l][e]).sum();
        }
        flows
    }
}

/// Evaluates levels 0, 1, 2 in order against `compliant_totals`.
pub fn npv_phase(
    network: &Network,
    compliant_totals: &[f64],
    demand: &DemandTable,
) -> Result<(NpvAssignment, NpvFlows)> {
    let m = network.edge_count();
    let mut assignment = NpvAssignment::default();
    let mut flows = NpvFlows::zeros(m);
    let mut lower = vec![0.0; m];
    for level in 0..LEVELS {
        for (n, trip) in demand.trips.iter().enumerate() {
            let q = demand.npv_rate(level, n);
            if q <= 0.0 {
                continue;
            }
            let path = best_response(network, compliant_totals, &lower, trip)?;
            for &e in &path.edges {
                flows.by_level[level][e] += q;
            }
            assignment.routes.push(NpvRoute {
                level,
                trip: n,
                path,
            });
        }
        for e in 0..m {
            lower[e] += flows.by_level[level][e];
        }
    }
    for e in 0..m {
        flows.total[e] = (0..LEVELS).map(|l| flows.by_level[l][e]).sum();
    }
    Ok((assignment, flows))
}
