//! Path-flow state for the system solve: every (mode, trip) commodity keeps
//! the paths it uses and their flows, so flow can be moved between two paths
//! of one commodity with an exact one-dimensional search.

use crate::error::{Error, Result};
use crate::network::{DemandTable, Network};
use crate::router::dijkstra;

use super::{CompliantFlows, Weights};

struct PathFlow {
    /// Sorted edge indices; a simple path is determined by its edge set.
    edges: Vec<usize>,
    flow: f64,
}

struct Commodity {
    mode: usize,
    trip: usize,
    demand: f64,
    paths: Vec<PathFlow>,
}

/// Shortest path of every commodity under one cost table.
pub(super) struct Targets {
    edges: Vec<Vec<usize>>,
    cost: Vec<f64>,
}

pub(super) struct PathState<'a> {
    network: &'a Network,
    weights: &'a [f64],
    npv: &'a [f64],
    commodities: Vec<Commodity>,
    /// Commodity indices grouped by (mode, origin index), so one tree serves
    /// every trip of the group.
    groups: Vec<(usize, usize, Vec<usize>)>,
    total: Vec<f64>,
    weighted: Vec<f64>,
    time: Vec<f64>,
    slope: Vec<f64>,
    curvature: Vec<f64>,
}

impl<'a> PathState<'a> {
    /// Every positive commodity on its free-flow shortest path (against
    /// `npv` alone), or on a decomposition of `warm` into paths.
    pub(super) fn new(
        network: &'a Network,
        demand: &DemandTable,
        weights: &'a Weights,
        npv: &'a [f64],
        warm: Option<&CompliantFlows>,
    ) -> Result<Self> {
        let edges = network.edge_count();
        let mut commodities = Vec::new();
        let mut groups: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        for m in 0..demand.mode_count() {
            for (n, trip) in demand.trips.iter().enumerate() {
                let alpha = demand.compliant_rate(m, n);
                if alpha <= 0.0 {
                    continue;
                }
                let root = network.node_index(trip.origin).expect("validated trip");
                let k = commodities.len();
                commodities.push(Commodity {
                    mode: m,
                    trip: n,
                    demand: alpha,
                    paths: Vec::new(),
                });
                match groups.iter_mut().find(|(gm, r, _)| *gm == m && *r == root) {
                    Some(g) => g.2.push(k),
                    None => groups.push((m, root, vec![k])),
                }
            }
        }
        let mut state = PathState {
            network,
            weights: weights.as_slice(),
            npv,
            commodities,
            groups,
            total: vec![0.0; edges],
            weighted: vec![0.0; edges],
            time: vec![0.0; edges],
            slope: vec![0.0; edges],
            curvature: vec![0.0; edges],
        };
        (0..edges).for_each(|e| state.refresh(e));
        let targets = state.shortest_paths(demand)?;
        for (k, c) in state.commodities.iter_mut().enumerate() {
            let start = warm
                .map(|w| decompose(network, demand, c, w.commodity(c.mode, c.trip)))
                .filter(|p| !p.is_empty());
            c.paths = start.unwrap_or_else(|| {
                vec![PathFlow {
                    edges: targets.edges[k].clone(),
                    flow: c.demand,
                }]
            });
        }
        for c in &state.commodities {
            let w = state.weights[c.mode];
            for p in &c.paths {
                for &e in &p.edges {
                    state.total[e] += p.flow;
                    state.weighted[e] += w * p.flow;
                }
            }
        }
        (0..edges).for_each(|e| state.refresh(e));
        Ok(state)
    }

    fn refresh(&mut self, e: usize) {
        let x = self.total[e] + self.npv[e];
        self.time[e] = self.network.link_time(e, x);
        self.slope[e] = self.network.link_derivative(e, x);
        self.curvature[e] = self.network.link_second_derivative(e, x);
    }

    #[inline]
    fn cost(&self, mode: usize, e: usize) -> f64 {
        self.weights[mode] * self.time[e] + self.slope[e] * self.weighted[e]
    }

    pub(super) fn objective(&self) -> f64 {
        self.time.iter().zip(&self.weighted).map(|(t, l)| t * l).sum()
    }

    pub(super) fn total(&self) -> &[f64] {
        &self.total
    }

    pub(super) fn weighted(&self) -> &[f64] {
        &self.weighted
    }

    /// Minimum marginal-cost path of every commodity at the current flows.
    pub(super) fn shortest_paths(&self, demand: &DemandTable) -> Result<Targets> {
        let edges = self.network.edge_count();
        let k = self.commodities.len();
        let mut out = Targets {
            edges: vec![Vec::new(); k],
            cost: vec![0.0; k],
        };
        let mut costs = vec![0.0; edges];
        for (m, root, members) in &self.groups {
            for (e, c) in costs.iter_mut().enumerate() {
                *c = self.cost(*m, e).max(0.0);
            }
            let tree = dijkstra(self.network, &costs, *root, true);
            for &i in members {
                let trip = demand.trips[self.commodities[i].trip];
                let dst = self.network.node_index(trip.destination).expect("validated trip");
                if !tree.dist[dst].is_finite() {
                    return Err(Error::InfeasibleTrip {
                        trip: self.commodities[i].trip,
                        origin: trip.origin,
                        destination: trip.destination,
                    });
                }
                let mut path = tree.edges_to(self.network, dst);
                path.sort_unstable();
                out.edges[i] = path;
                out.cost[i] = tree.dist[dst];
            }
        }
        Ok(out)
    }

    /// `sum_k (sum_p h_p C_p - alpha_k C_k*)`: the Frank-Wolfe gap at the
    /// current flows when `targets` are the current shortest paths.
    pub(super) fn gap(&self, targets: &Targets) -> f64 {
        let mut gap = 0.0;
        for (k, c) in self.commodities.iter().enumerate() {
            let used: f64 = c
                .paths
                .iter()
                .map(|p| p.flow * p.edges.iter().map(|&e| self.cost(c.mode, e)).sum::<f64>())
                .sum();
            gap += used - c.demand * targets.cost[k];
        }
        gap.max(0.0)
    }

    /// Adds each commodity's target path and moves flow from every costlier
    /// used path onto the cheapest one. Each move is an exact line search,
    /// so the objective never increases.
    pub(super) fn equilibrate(&mut self, targets: Targets) {
        for (k, target) in targets.edges.into_iter().enumerate() {
            let c = &mut self.commodities[k];
            if !c.paths.iter().any(|p| p.edges == target) {
                c.paths.push(PathFlow {
                    edges: target,
                    flow: 0.0,
                });
            }
            self.balance(k);
        }
    }

    fn path_cost(&self, mode: usize, edges: &[usize]) -> f64 {
        edges.iter().map(|&e| self.cost(mode, e)).sum()
    }

    fn balance(&mut self, k: usize) {
        let mode = self.commodities[k].mode;
        let count = self.commodities[k].paths.len();
        if count < 2 {
            return;
        }
        for p in 0..count {
            let costs: Vec<f64> = self.commodities[k]
                .paths
                .iter()
                .map(|q| self.path_cost(mode, &q.edges))
                .collect();
            let s = (0..count).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).expect("paths");
            let h = self.commodities[k].paths[p].flow;
            if p == s || h <= 0.0 || costs[p] <= costs[s] {
                continue;
            }
            let (plus, minus) = {
                let paths = &self.commodities[k].paths;
                difference(&paths[s].edges, &paths[p].edges)
            };
            let delta = self.shift_amount(mode, &plus, &minus, h);
            if delta <= 0.0 {
                continue;
            }
            self.apply(mode, &plus, &minus, delta);
            let paths = &mut self.commodities[k].paths;
            paths[p].flow = if delta >= h { 0.0 } else { h - delta };
            paths[s].flow += delta;
        }
        self.commodities[k].paths.retain(|p| p.flow > 0.0);
    }

    /// First and second derivative of the objective after moving `delta`
    /// of `mode` onto `plus` edges and off `minus` edges.
    fn shift_derivatives(&self, mode: usize, plus: &[usize], minus: &[usize], delta: f64) -> (f64, f64) {
        let w = self.weights[mode];
        let n = self.network;
        let (mut d1, mut d2) = (0.0, 0.0);
        for (edges, sign) in [(plus, 1.0), (minus, -1.0)] {
            for &e in edges {
                let x = (self.total[e] + self.npv[e] + sign * delta).max(0.0);
                let l = (self.weighted[e] + sign * w * delta).max(0.0);
                let (t, t1, t2) = if delta == 0.0 {
                    (self.time[e], self.slope[e], self.curvature[e])
                } else {
                    (n.link_time(e, x), n.link_derivative(e, x), n.link_second_derivative(e, x))
                };
                d1 += sign * (w * t + t1 * l);
                d2 += 2.0 * w * t1 + t2 * l;
            }
        }
        (d1, d2)
    }

    /// Minimiser over `[0, limit]` of the objective along the move, which is
    /// convex in the amount moved: Newton steps kept inside a bisection
    /// bracket on the derivative.
    fn shift_amount(&self, mode: usize, plus: &[usize], minus: &[usize], limit: f64) -> f64 {
        let (d0, c0) = self.shift_derivatives(mode, plus, minus, 0.0);
        if d0 >= 0.0 {
            return 0.0;
        }
        if self.shift_derivatives(mode, plus, minus, limit).0 <= 0.0 {
            return limit;
        }
        let (mut lo, mut hi) = (0.0, limit);
        let mut s = if c0 > 0.0 { (-d0 / c0).min(limit) } else { 0.5 * limit };
        let mut d = d0;
        for _ in 0..60 {
            let c;
            (d, c) = self.shift_derivatives(mode, plus, minus, s);
            if d < 0.0 {
                lo = s;
            } else if d > 0.0 {
                hi = s;
            } else {
                return s;
            }
            if hi - lo <= 1e-15 * limit || d.abs() <= 1e-13 * d0.abs() {
                break;
            }
            let newton = s - d / c;
            s = if c > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        // Newton approaches from the right, where the derivative is
        // positive; past the minimiser by a negligible slope is still descent
        if d <= 0.0 || d <= 1e-9 * d0.abs() {
            s
        } else {
            lo
        }
    }

    fn apply(&mut self, mode: usize, plus: &[usize], minus: &[usize], delta: f64) {
        let w = self.weights[mode];
        for &e in plus {
            self.total[e] += delta;
            self.weighted[e] += w * delta;
            self.refresh(e);
        }
        for &e in minus {
            self.total[e] = (self.total[e] - delta).max(0.0);
            self.weighted[e] = (self.weighted[e] - w * delta).max(0.0);
            self.refresh(e);
        }
    }

    pub(super) fn flows(&self, demand: &DemandTable) -> CompliantFlows {
        let mut out = CompliantFlows::zeros(self.network.edge_count(), demand.mode_count(), demand.trip_count());
        for c in &self.commodities {
            let f = out.commodity_mut(c.mode, c.trip);
            for p in &c.paths {
                for &e in &p.edges {
                    f[e] += p.flow;
                }
            }
        }
        out
    }
}

/// Edges of sorted `a` not in `b`, and of `b` not in `a`.
fn difference(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let (mut only_a, mut only_b) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                only_a.push(*x);
                i += 1;
            }
            (Some(x), None) => {
                only_a.push(*x);
                i += 1;
            }
            (_, Some(y)) => {
                only_b.push(*y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    (only_a, only_b)
}

/// Greedy path decomposition of one commodity's edge flows, following the
/// heaviest edge out of each node. Whatever cannot be routed (cycles,
/// rounding dust) is dropped and the paths are rescaled to the demand.
fn decompose(network: &Network, demand: &DemandTable, c: &Commodity, flows: &[f64]) -> Vec<PathFlow> {
    let trip = demand.trips[c.trip];
    let o = network.node_index(trip.origin).expect("validated trip");
    let d = network.node_index(trip.destination).expect("validated trip");
    let floor = 1e-12 * c.demand;
    let mut left = flows.to_vec();
    let mut paths: Vec<PathFlow> = Vec::new();
    for _ in 0..=network.edge_count() {
        let mut seen = vec![false; network.node_count()];
        let mut v = o;
        let mut edges = Vec::new();
        seen[v] = true;
        while v != d {
            let next = network
                .out_edges(v)
                .iter()
                .copied()
                .filter(|&e| left[e] > floor && !seen[network.head(e)])
                .max_by(|&a, &b| left[a].total_cmp(&left[b]));
            match next {
                Some(e) => {
                    edges.push(e);
                    v = network.head(e);
                    seen[v] = true;
                }
                None => break,
            }
        }
        if v != d {
            break;
        }
        let amount = edges.iter().map(|&e| left[e]).fold(f64::INFINITY, f64::min);
        edges.iter().for_each(|&e| left[e] -= amount);
        edges.sort_unstable();
        match paths.iter_mut().find(|p| p.edges == edges) {
            Some(p) => p.flow += amount,
            None => paths.push(PathFlow { edges, flow: amount }),
        }
    }
    let routed: f64 = paths.iter().map(|p| p.flow).sum();
    if routed <= 0.0 {
        return Vec::new();
    }
    let scale = c.demand / routed;
    paths.iter_mut().for_each(|p| p.flow *= scale);
    paths
}
