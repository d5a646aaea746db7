//! Road network, trips, demand and BPR link performance.
//!
//! Flows are in vehicles per unit time and times in abstract time units;
//! there is no unit conversion layer.

mod sample;
mod scenario;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sample::{generate_sample_network, sample_scenario, SampleConfig};
pub use scenario::{load_scenario, serialize_scenario, Scenario, ScenarioDoc};

pub type NodeId = u32;

/// Number of cognitive levels modelled for noncompliant drivers (0, 1, 2).
pub const LEVELS: usize = 3;

/// Bureau of Public Roads link performance curve `t0 * (1 + a * (v / c)^b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bpr {
    pub coefficient: f64,
    pub exponent: f64,
}

impl Default for Bpr {
    fn default() -> Self {
        Bpr {
            coefficient: 0.15,
            exponent: 4.0,
        }
    }
}

impl Bpr {
    #[inline]
    pub fn time(&self, free_flow_time: f64, capacity: f64, flow: f64) -> f64 {
        free_flow_time * (1.0 + self.coefficient * self.pow(flow / capacity, self.exponent))
    }

    #[inline]
    fn pow(&self, base: f64, exponent: f64) -> f64 {
        if exponent == 4.0 {
            let sq = base * base;
            sq * sq
        } else if exponent == 3.0 {
            base * base * base
        } else if exponent == 2.0 {
            base * base
        } else if exponent == 1.0 {
            base
        } else {
            base.powf(exponent)
        }
    }

    /// Derivative of [`Bpr::time`] with respect to flow.
    #[inline]
    pub fn derivative(&self, free_flow_time: f64, capacity: f64, flow: f64) -> f64 {
        if flow <= 0.0 {
            // exponent > 1 for every sensible curve; the limit at zero is zero
            return if self.exponent > 1.0 {
                0.0
            } else {
                free_flow_time * self.coefficient / capacity
            };
        }
        free_flow_time * self.coefficient * self.exponent / capacity
            * self.pow(flow / capacity, self.exponent - 1.0)
    }

    /// Second derivative of [`Bpr::time`] with respect to flow; zero at zero
    /// flow unless the exponent is below 2.
    #[inline]
    pub fn second_derivative(&self, free_flow_time: f64, capacity: f64, flow: f64) -> f64 {
        let p = self.exponent;
        if flow <= 0.0 && p >= 2.0 {
            return if p == 2.0 {
                2.0 * free_flow_time * self.coefficient / (capacity * capacity)
            } else {
                0.0
            };
        }
        free_flow_time * self.coefficient * p * (p - 1.0) / (capacity * capacity)
            * self.pow(flow.max(0.0) / capacity, p - 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// Free-flow travel time.
    pub free_flow_time: f64,
    pub capacity: f64,
}

/// Travel time on `edge` carrying `total_flow`, rejecting negative flows.
pub fn bpr_time(edge: &Edge, bpr: &Bpr, total_flow: f64) -> Result<f64> {
    if !(total_flow >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "flow must be nonnegative, got {total_flow}"
        )));
    }
    Ok(bpr.time(edge.free_flow_time, edge.capacity, total_flow))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trip {
    pub origin: NodeId,
    pub destination: NodeId,
}

/// Directed road graph with origin and destination sets.
///
/// Construction never fails; [`Network::validate`] reports every broken
/// invariant. Nodes are kept sorted by identifier so that node indices order
/// the same way identifiers do.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<NodeId>,
    edges: Vec<Edge>,
    origins: Vec<NodeId>,
    destinations: Vec<NodeId>,
    bpr: Bpr,
    index: HashMap<NodeId, usize>,
    ends: Vec<Option<(usize, usize)>>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    duplicate_nodes: Vec<NodeId>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.origins == other.origins
            && self.destinations == other.destinations
            && self.bpr == other.bpr
    }
}

impl Network {
    pub fn new(
        nodes: Vec<NodeId>,
        edges: Vec<Edge>,
        origins: Vec<NodeId>,
        destinations: Vec<NodeId>,
    ) -> Self {
        Self::with_bpr(nodes, edges, origins, destinations, Bpr::default())
    }

    pub fn with_bpr(
        mut nodes: Vec<NodeId>,
        edges: Vec<Edge>,
        origins: Vec<NodeId>,
        destinations: Vec<NodeId>,
        bpr: Bpr,
    ) -> Self {
        nodes.sort_unstable();
        let mut duplicate_nodes: Vec<NodeId> = nodes.windows(2).filter(|w| w[0] == w[1]).map(|w| w[0]).collect();
        duplicate_nodes.dedup();
        nodes.dedup();

        let index: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        let ends: Vec<Option<(usize, usize)>> = edges
            .iter()
            .map(|e| match (index.get(&e.from), index.get(&e.to)) {
                (Some(&t), Some(&h)) => Some((t, h)),
                _ => None,
            })
            .collect();
        for (k, end) in ends.iter().enumerate() {
            if let Some((t, h)) = *end {
                out_edges[t].push(k);
                in_edges[h].push(k);
            }
        }
        // neighbour order by head (resp. tail) index keeps searches deterministic
        for list in &mut out_edges {
            list.sort_by_key(|&k| (ends[k].map(|(_, h)| h), k));
        }
        for list in &mut in_edges {
            list.sort_by_key(|&k| (ends[k].map(|(t, _)| t), k));
        }

        Network {
            nodes,
            edges,
            origins,
            destinations,
            bpr,
            index,
            ends,
            out_edges,
            in_edges,
            duplicate_nodes,
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn origins(&self) -> &[NodeId] {
        &self.origins
    }

    pub fn destinations(&self) -> &[NodeId] {
        &self.destinations
    }

    pub fn bpr(&self) -> &Bpr {
        &self.bpr
    }

    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn node_id(&self, index: usize) -> NodeId {
        self.nodes[index]
    }

    /// Tail node index of edge `e`. Panics on dangling edges; callers work on
    /// validated networks.
    #[inline]
    pub fn tail(&self, e: usize) -> usize {
        self.ends[e].expect("edge references an unknown node").0
    }

    #[inline]
    pub fn head(&self, e: usize) -> usize {
        self.ends[e].expect("edge references an unknown node").1
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn find_edge(&self, from: NodeId, to: NodeId) -> Option<usize> {
        let t = self.node_index(from)?;
        let h = self.node_index(to)?;
        self.out_edges[t].iter().copied().find(|&k| self.head(k) == h)
    }

    /// BPR travel time on edge `e` at `total_flow`; negative flow is an error.
    pub fn bpr_time(&self, e: usize, total_flow: f64) -> Result<f64> {
        if !(total_flow >= 0.0) {
            return Err(Error::NegativeFlow {
                edge: e,
                flow: total_flow,
            });
        }
        Ok(self.link_time(e, total_flow))
    }

    /// Unchecked BPR travel time.
    #[inline]
    pub fn link_time(&self, e: usize, total_flow: f64) -> f64 {
        let edge = &self.edges[e];
        self.bpr.time(edge.free_flow_time, edge.capacity, total_flow)
    }

    #[inline]
    pub fn link_derivative(&self, e: usize, total_flow: f64) -> f64 {
        let edge = &self.edges[e];
        self.bpr
            .derivative(edge.free_flow_time, edge.capacity, total_flow)
    }

    pub fn link_second_derivative(&self, e: usize, total_flow: f64) -> f64 {
        let edge = &self.edges[e];
        self.bpr
            .second_derivative(edge.free_flow_time, edge.capacity, total_flow)
    }

    /// Link times for a whole vector of edge flows.
    pub fn link_times(&self, totals: &[f64]) -> Vec<f64> {
        totals
            .iter()
            .enumerate()
            .map(|(e, &x)| self.link_time(e, x))
            .collect()
    }

    pub fn free_flow_times(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.free_flow_time).collect()
    }

    /// Node indices reachable from `source` along directed edges.
    pub fn reachable_from(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([source]);
        seen[source] = true;
        while let Some(u) = queue.pop_front() {
            for &k in &self.out_edges[u] {
                let v = self.head(k);
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Checks every structural invariant; an empty list means the network is
    /// valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out: Vec<Violation> = self
            .duplicate_nodes
            .iter()
            .map(|&node| Violation::DuplicateNode { node })
            .collect();
        let mut seen_pairs: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        for (k, e) in self.edges.iter().enumerate() {
            for node in [e.from, e.to] {
                if !self.index.contains_key(&node) {
                    out.push(Violation::DanglingNode { edge: k, node });
                }
            }
            if e.from == e.to {
                out.push(Violation::SelfLoop { edge: k, node: e.from });
            }
            if let Some(&first) = seen_pairs.get(&(e.from, e.to)) {
                out.push(Violation::DuplicateEdge {
                    edge: k,
                    first,
                    from: e.from,
                    to: e.to,
                });
            } else {
                seen_pairs.insert((e.from, e.to), k);
            }
            if !(e.capacity > 0.0) || !e.capacity.is_finite() {
                out.push(Violation::NonPositiveCapacity {
                    edge: k,
                    from: e.from,
                    to: e.to,
                    capacity: e.capacity,
                });
            }
            if !(e.free_flow_time > 0.0) || !e.free_flow_time.is_finite() {
                out.push(Violation::NonPositiveFreeFlowTime {
                    edge: k,
                    from: e.from,
                    to: e.to,
                    time: e.free_flow_time,
                });
            }
        }
        for &o in &self.origins {
            if !self.index.contains_key(&o) {
                out.push(Violation::UnknownOrigin { node: o });
            }
        }
        for &d in &self.destinations {
            if !self.index.contains_key(&d) {
                out.push(Violation::UnknownDestination { node: d });
            }
        }
        if !(self.bpr.coefficient >= 0.0 && self.bpr.exponent >= 1.0)
            || !self.bpr.coefficient.is_finite()
            || !self.bpr.exponent.is_finite()
        {
            out.push(Violation::InvalidBpr {
                coefficient: self.bpr.coefficient,
                exponent: self.bpr.exponent,
            });
        }

        // reachability only makes sense once the topology is sound
        let broken_ends = self.ends.iter().any(Option::is_none);
        if !broken_ends {
            for &o in &self.origins {
                let Some(oi) = self.node_index(o) else { continue };
                let reach = self.reachable_from(oi);
                for &d in &self.destinations {
                    if let Some(di) = self.node_index(d) {
                        if di != oi && !reach[di] {
                            out.push(Violation::Unreachable {
                                origin: o,
                                destination: d,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One broken invariant of a network or scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateNode { node: NodeId },
    DanglingNode { edge: usize, node: NodeId },
    SelfLoop { edge: usize, node: NodeId },
    DuplicateEdge { edge: usize, first: usize, from: NodeId, to: NodeId },
    NonPositiveCapacity { edge: usize, from: NodeId, to: NodeId, capacity: f64 },
    NonPositiveFreeFlowTime { edge: usize, from: NodeId, to: NodeId, time: f64 },
    InvalidBpr { coefficient: f64, exponent: f64 },
    UnknownOrigin { node: NodeId },
    UnknownDestination { node: NodeId },
    Unreachable { origin: NodeId, destination: NodeId },
    TripEndpoints { trip: usize, origin: NodeId, destination: NodeId, reason: String },
    DuplicateTrip { trip: usize, first: usize },
    Demand { detail: String },
    Modes { detail: String },
    Mem { detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode { node } => write!(f, "node {node} listed more than once"),
            Violation::DanglingNode { edge, node } => {
                write!(f, "edge #{edge} references unknown node {node}")
            }
            Violation::SelfLoop { edge, node } => write!(f, "edge #{edge} is a self-loop at {node}"),
            Violation::DuplicateEdge { edge, first, from, to } => {
                write!(f, "edge #{edge} ({from}->{to}) duplicates edge #{first}")
            }
            Violation::NonPositiveCapacity { edge, from, to, capacity } => {
                write!(f, "edge #{edge} ({from}->{to}) has nonpositive capacity {capacity}")
            }
            Violation::NonPositiveFreeFlowTime { edge, from, to, time } => {
                write!(f, "edge #{edge} ({from}->{to}) has nonpositive free-flow time {time}")
            }
            Violation::InvalidBpr { coefficient, exponent } => write!(
                f,
                "BPR coefficient {coefficient} / exponent {exponent} out of range (need a >= 0, b >= 1)"
            ),
            Violation::UnknownOrigin { node } => write!(f, "origin {node} is not a node"),
            Violation::UnknownDestination { node } => write!(f, "destination {node} is not a node"),
            Violation::Unreachable { origin, destination } => {
                write!(f, "destination {destination} unreachable from origin {origin}")
            }
            Violation::TripEndpoints { trip, origin, destination, reason } => {
                write!(f, "trip #{trip} ({origin}->{destination}): {reason}")
            }
            Violation::DuplicateTrip { trip, first } => {
                write!(f, "trip #{trip} repeats the origin-destination pair of trip #{first}")
            }
            Violation::Demand { detail } => write!(f, "demand: {detail}"),
            Violation::Modes { detail } => write!(f, "modes: {detail}"),
            Violation::Mem { detail } => write!(f, "mem: {detail}"),
        }
    }
}

/// Ordered transportation modes available to system routing.
///
/// The public-transport mode is the one named `public` (else the first), and
/// the compliant private vehicle mode is the one named `cpv` (else the last).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSet {
    names: Vec<String>,
}

impl ModeSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidInput("mode set is empty".into()));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidInput("mode names must be unique".into()));
        }
        Ok(ModeSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, m: usize) -> &str {
        &self.names[m]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn public(&self) -> usize {
        self.index_of("public").unwrap_or(0)
    }

    pub fn private(&self) -> usize {
        self.index_of("cpv").unwrap_or(self.names.len() - 1)
    }
}

/// Per-trip demand: compliant rates per mode and noncompliant rates per
/// cognitive level.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandTable {
    pub trips: Vec<Trip>,
    /// `compliant[m][n]`
    pub compliant: Vec<Vec<f64>>,
    /// `noncompliant[level][n]`
    pub noncompliant: [Vec<f64>; LEVELS],
}

impl DemandTable {
    pub fn zeros(trips: Vec<Trip>, modes: usize) -> Self {
        let n = trips.len();
        DemandTable {
            trips,
            compliant: vec![vec![0.0; n]; modes],
            noncompliant: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn trip_count(&self) -> usize {
        self.trips.len()
    }

    pub fn mode_count(&self) -> usize {
        self.compliant.len()
    }

    pub fn compliant_rate(&self, mode: usize, trip: usize) -> f64 {
        self.compliant[mode][trip]
    }

    pub fn npv_rate(&self, level: usize, trip: usize) -> f64 {
        self.noncompliant[level][trip]
    }

    pub fn total_compliant(&self) -> f64 {
        self.compliant.iter().flatten().sum()
    }

    pub fn total_npv(&self) -> f64 {
        self.noncompliant.iter().flatten().sum()
    }

    pub fn total(&self) -> f64 {
        self.total_compliant() + self.total_npv()
    }

    pub fn trip_index(&self, origin: NodeId, destination: NodeId) -> Option<usize> {
        self.trips
            .iter()
            .position(|t| t.origin == origin && t.destination == destination)
    }

    /// Checks rates and trip endpoints against `network`.
    pub fn validate(&self, network: &Network) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen: HashMap<Trip, usize> = HashMap::new();
        for (n, t) in self.trips.iter().enumerate() {
            let bad = |reason: &str| Violation::TripEndpoints {
                trip: n,
                origin: t.origin,
                destination: t.destination,
                reason: reason.to_string(),
            };
            if t.origin == t.destination {
                out.push(bad("origin equals destination"));
            }
            if !network.origins().contains(&t.origin) {
                out.push(bad("origin is not in the origin set"));
            }
            if !network.destinations().contains(&t.destination) {
                out.push(bad("destination is not in the destination set"));
            }
            if let Some(&first) = seen.get(t) {
                out.push(Violation::DuplicateTrip { trip: n, first });
            } else {
                seen.insert(*t, n);
            }
        }
        let n = self.trips.len();
        for (m, row) in self.compliant.iter().enumerate() {
            if row.len() != n {
                out.push(Violation::Demand {
                    detail: format!("mode #{m} has {} rates for {n} trips", row.len()),
                });
            }
            for (k, &r) in row.iter().enumerate() {
                if !(r >= 0.0) || !r.is_finite() {
                    out.push(Violation::Demand {
                        detail: format!("compliant rate {r} for mode #{m}, trip #{k}"),
                    });
                }
            }
        }
        for (l, row) in self.noncompliant.iter().enumerate() {
            if row.len() != n {
                out.push(Violation::Demand {
                    detail: format!("level {l} has {} rates for {n} trips", row.len()),
                });
            }
            for (k, &r) in row.iter().enumerate() {
                if !(r >= 0.0) || !r.is_finite() {
                    out.push(Violation::Demand {
                        detail: format!("noncompliant rate {r} for level {l}, trip #{k}"),
                    });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edge(from: NodeId, to: NodeId, t0: f64, cap: f64) -> Edge {
        Edge {
            from,
            to,
            free_flow_time: t0,
            capacity: cap,
        }
    }

    #[test]
    fn bpr_reference_values() {
        let bpr = Bpr::default();
        assert_eq!(bpr_time(&edge(1, 2, 1.0, 10.0), &bpr, 0.0).unwrap(), 1.0);
        assert!((bpr_time(&edge(1, 2, 1.0, 10.0), &bpr, 10.0).unwrap() - 1.15).abs() < 1e-15);
        assert!((bpr_time(&edge(1, 2, 2.0, 10.0), &bpr, 20.0).unwrap() - 6.8).abs() < 1e-12);
    }

    #[test]
    fn negative_flow_rejected() {
        let net = Network::new(vec![1, 2], vec![edge(1, 2, 1.0, 10.0)], vec![1], vec![2]);
        assert!(matches!(net.bpr_time(0, -1.0), Err(Error::NegativeFlow { edge: 0, .. })));
        assert!(bpr_time(net.edge(0), net.bpr(), f64::NAN).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let bpr = Bpr::default();
        for &x in &[0.5, 3.0, 10.0, 27.0] {
            let h = 1e-5;
            let fd = (bpr.time(1.3, 9.0, x + h) - bpr.time(1.3, 9.0, x - h)) / (2.0 * h);
            let d = bpr.derivative(1.3, 9.0, x);
            assert!((fd - d).abs() <= 1e-7 * d.abs().max(1.0), "{fd} vs {d}");
        }
        assert_eq!(bpr.derivative(1.0, 5.0, 0.0), 0.0);
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        for bpr in [Bpr::default(), Bpr { coefficient: 0.4, exponent: 2.5 }] {
            for &x in &[0.5, 3.0, 10.0, 27.0] {
                let h = 1e-5;
                let fd = (bpr.derivative(1.3, 9.0, x + h) - bpr.derivative(1.3, 9.0, x - h)) / (2.0 * h);
                let d = bpr.second_derivative(1.3, 9.0, x);
                assert!((fd - d).abs() <= 1e-7 * d.abs().max(1.0), "{fd} vs {d}");
            }
        }
        assert_eq!(Bpr::default().second_derivative(1.0, 5.0, 0.0), 0.0);
    }

    #[test]
    fn validate_reports_unreachable_destination() {
        let net = Network::new(
            vec![1, 2, 3],
            vec![edge(1, 2, 1.0, 5.0), edge(3, 2, 1.0, 5.0)],
            vec![1],
            vec![2, 3],
        );
        let v = net.validate();
        assert_eq!(v, vec![Violation::Unreachable { origin: 1, destination: 3 }]);
    }

    #[test]
    fn validate_reports_duplicate_edge() {
        let net = Network::new(
            vec![1, 2],
            vec![edge(1, 2, 1.0, 5.0), edge(1, 2, 2.0, 5.0)],
            vec![1],
            vec![2],
        );
        let v = net.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::DuplicateEdge { edge: 1, first: 0, .. }));
    }

    #[test]
    fn validate_reports_dangling_and_self_loop() {
        let net = Network::new(
            vec![1, 2],
            vec![edge(1, 2, 1.0, 5.0), edge(2, 2, 1.0, 5.0), edge(2, 7, 1.0, 5.0)],
            vec![1],
            vec![2],
        );
        let v = net.validate();
        assert!(v.contains(&Violation::SelfLoop { edge: 1, node: 2 }));
        assert!(v.contains(&Violation::DanglingNode { edge: 2, node: 7 }));
    }

    #[test]
    fn validate_reports_bad_capacity_with_edge_identity() {
        let net = Network::new(vec![1, 2], vec![edge(1, 2, 1.0, 0.0)], vec![1], vec![2]);
        let v = net.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("edge #0 (1->2)"));
    }

    #[test]
    fn mode_roles() {
        let modes = ModeSet::new(vec!["bus".into(), "cpv".into(), "car".into()]).unwrap();
        assert_eq!(modes.public(), 0);
        assert_eq!(modes.private(), 1);
        assert!(ModeSet::new(vec![]).is_err());
        assert!(ModeSet::new(vec!["a".into(), "a".into()]).is_err());
    }

    proptest! {
        #[test]
        fn bpr_is_monotone(t0 in 0.1f64..10.0, cap in 0.5f64..50.0, a in 0.0f64..100.0, d in 1e-3f64..50.0) {
            let bpr = Bpr::default();
            prop_assert!(bpr.time(t0, cap, a) < bpr.time(t0, cap, a + d));
        }

        #[test]
        fn bpr_is_convex(t0 in 0.1f64..10.0, cap in 0.5f64..50.0, a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let bpr = Bpr::default();
            for i in 0..=20 {
                let lam = i as f64 / 20.0;
                let mid = bpr.time(t0, cap, lam * a + (1.0 - lam) * b);
                let chord = lam * bpr.time(t0, cap, a) + (1.0 - lam) * bpr.time(t0, cap, b);
                prop_assert!(mid <= chord * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
