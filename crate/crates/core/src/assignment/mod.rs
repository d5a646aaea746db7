//! Weighted system-centric assignment of compliant traffic.
//!
//! The objective is `sum_m w_m sum_e t_e(x_e + q_e) * x_{e,m}` where `x_{e,m}`
//! sums the flow of mode `m` over all trips and `q_e` is the (fixed)
//! noncompliant flow. Each (mode, trip) commodity keeps the paths it uses;
//! an iteration finds every commodity's minimum marginal-cost path (the
//! all-or-nothing target of Frank-Wolfe) and moves flow onto the cheapest
//! used path with an exact line search. The stopping test is the
//! Frank-Wolfe gap against those targets.

mod paths;
mod redistribute;
pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DemandTable, Network};
use crate::router::dijkstra;

use paths::PathState;

pub use redistribute::{frozen_objective, redistribute_fixed_totals};

/// Nonnegative mode weights on the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("weights are empty".into()));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(format!("weights must be finite and >= 0: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weights must sum to 1, got {sum}")));
        }
        Ok(Weights(w))
    }

    pub fn uniform(modes: usize) -> Self {
        Weights(vec![1.0 / modes as f64; modes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, m: usize) -> f64 {
        self.0[m]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Compliant edge flows indexed by (edge, mode, trip).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompliantFlows {
    edges: usize,
    modes: usize,
    trips: usize,
    /// Laid out commodity-major: `((m * trips) + n) * edges + e`.
    values: Vec<f64>,
}

impl CompliantFlows {
    pub fn zeros(edges: usize, modes: usize, trips: usize) -> Self {
        CompliantFlows {
            edges,
            modes,
            trips,
            values: vec![0.0; edges * modes * trips],
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn trip_count(&self) -> usize {
        self.trips
    }

    #[inline]
    fn offset(&self, mode: usize, trip: usize) -> usize {
        (mode * self.trips + trip) * self.edges
    }

    #[inline]
    pub fn get(&self, edge: usize, mode: usize, trip: usize) -> f64 {
        self.values[self.offset(mode, trip) + edge]
    }

    #[inline]
    pub fn set(&mut self, edge: usize, mode: usize, trip: usize, value: f64) {
        let k = self.offset(mode, trip) + edge;
        self.values[k] = value;
    }

    /// Edge flows of one (mode, trip) commodity.
    pub fn commodity(&self, mode: usize, trip: usize) -> &[f64] {
        let k = self.offset(mode, trip);
        &self.values[k..k + self.edges]
    }

    pub fn commodity_mut(&mut self, mode: usize, trip: usize) -> &mut [f64] {
        let k = self.offset(mode, trip);
        &mut self.values[k..k + self.edges]
    }

    /// Per-edge flow of one mode summed over trips.
    pub fn mode_totals(&self, mode: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.edges];
        for n in 0..self.trips {
            for (o, &v) in out.iter_mut().zip(self.commodity(mode, n)) {
                *o += v;
            }
        }
        out
    }

    /// Per-edge compliant totals `x_e`.
    pub fn edge_totals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.edges];
        for chunk in self.values.chunks_exact(self.edges.max(1)) {
            for (o, &v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// Checks nonnegativity, demand at both trip ends and conservation
    /// elsewhere, each to `rel_tol` relative to the commodity's demand.
    pub fn check_feasible(&self, network: &Network, demand: &DemandTable, rel_tol: f64) -> Result<()> {
        for m in 0..self.modes {
            for (n, trip) in demand.trips.iter().enumerate() {
                let alpha = demand.compliant_rate(m, n);
                let flow = self.commodity(m, n);
                let tol = rel_tol * alpha.max(1.0);
                if let Some((e, &v)) = flow.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
                    return Err(Error::InvalidInput(format!(
                        "negative flow {v} on edge #{e} for mode #{m}, trip #{n}"
                    )));
                }
                let o = network.node_index(trip.origin).expect("validated trip");
                let d = network.node_index(trip.destination).expect("validated trip");
                for v in 0..network.node_count() {
                    let out: f64 = network.out_edges(v).iter().map(|&e| flow[e]).sum();
                    let inn: f64 = network.in_edges(v).iter().map(|&e| flow[e]).sum();
                    let (ok, what) = if v == o {
                        ((out - alpha).abs() <= tol, "origin out-flow")
                    } else if v == d {
                        ((inn - alpha).abs() <= tol, "destination in-flow")
                    } else {
                        ((out - inn).abs() <= tol, "conservation")
                    };
                    if !ok {
                        return Err(Error::InvalidInput(format!(
                            "{what} violated at node {} for mode #{m}, trip #{n} (out {out}, in {inn}, demand {alpha})",
                            network.node_id(v)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: f64,
    /// Frank-Wolfe linearisation gap at the returned flows.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once `gap <= relative_gap * |objective|`.
    pub relative_gap: f64,
    pub max_iterations: usize,
    /// Keep the objective after every iteration (see [`Solution::history`]).
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            relative_gap: 1e-6,
            max_iterations: 10_000,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub flows: CompliantFlows,
    pub report: SolveReport,
    /// Objective before the first step and after each accepted step, when
    /// requested.
    pub history: Vec<f64>,
}

fn check_npv(network: &Network, npv: &[f64]) -> Result<()> {
    if npv.len() != network.edge_count() {
        return Err(Error::InvalidInput(format!(
            "{} noncompliant flows for {} edges",
            npv.len(),
            network.edge_count()
        )));
    }
    if let Some((e, &q)) = npv.iter().enumerate().find(|(_, &q)| !(q >= 0.0)) {
        return Err(Error::NegativeFlow { edge: e, flow: q });
    }
    Ok(())
}

/// Per-edge weighted flow `sum_m w_m x_{e,m}` and compliant total `x_e`.
fn aggregates(flows: &CompliantFlows, weights: &Weights) -> (Vec<f64>, Vec<f64>) {
    let mut weighted = vec![0.0; flows.edges];
    let mut total = vec![0.0; flows.edges];
    for m in 0..flows.modes {
        let w = weights.get(m);
        for n in 0..flows.trips {
            for (e, &v) in flows.commodity(m, n).iter().enumerate() {
                weighted[e] += w * v;
                total[e] += v;
            }
        }
    }
    (weighted, total)
}

/// The weighted system objective of `flows` given noncompliant flows `npv`.
pub fn objective(network: &Network, flows: &CompliantFlows, weights: &Weights, npv: &[f64]) -> f64 {
    let (weighted, total) = aggregates(flows, weights);
    (0..network.edge_count())
        .map(|e| network.link_time(e, total[e] + npv[e]) * weighted[e])
        .sum()
}

/// Marginal objective cost of one more unit of `mode` on `edge`:
/// `w_m t(X) + t'(X) sum_m' w_m' x_{e,m'}` with `X = x_e + q_e`. It does not
/// depend on the trip.
pub fn objective_gradient(
    network: &Network,
    flows: &CompliantFlows,
    weights: &Weights,
    npv: &[f64],
    edge: usize,
    mode: usize,
) -> f64 {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for m in 0..flows.modes {
        for n in 0..flows.trips {
            let v = flows.get(edge, m, n);
            weighted += weights.get(m) * v;
            total += v;
        }
    }
    let x = total + npv[edge];
    weights.get(mode) * network.link_time(edge, x) + network.link_derivative(edge, x) * weighted
}

/// Loads every positive (mode, trip) demand onto one minimum-cost path
/// under that mode's `edge_costs[mode]` (nonnegative). Trips sharing an
/// origin share one shortest-path tree per mode.
pub fn all_or_nothing(
    network: &Network,
    edge_costs: &[Vec<f64>],
    demand: &DemandTable,
) -> Result<CompliantFlows> {
    let modes = demand.mode_count();
    if edge_costs.len() != modes {
        return Err(Error::InvalidInput(format!(
            "{} cost vectors for {modes} modes",
            edge_costs.len()
        )));
    }
    for costs in edge_costs {
        if costs.len() != network.edge_count() || costs.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput(
                "edge costs must be finite, nonnegative and one per edge".into(),
            ));
        }
    }
    let mut flows = CompliantFlows::zeros(network.edge_count(), modes, demand.trip_count());
    for (m, costs) in edge_costs.iter().enumerate() {
        for &origin in network.origins() {
            let trips: Vec<usize> = (0..demand.trip_count())
                .filter(|&n| demand.trips[n].origin == origin && demand.compliant_rate(m, n) > 0.0)
                .collect();
            if trips.is_empty() {
                continue;
            }
            let root = network.node_index(origin).expect("validated origin");
            let tree = dijkstra(network, costs, root, true);
            for n in trips {
                let trip = demand.trips[n];
                let dst = network.node_index(trip.destination).expect("validated destination");
                if !tree.dist[dst].is_finite() {
                    return Err(Error::InfeasibleTrip {
                        trip: n,
                        origin: trip.origin,
                        destination: trip.destination,
                    });
                }
                let alpha = demand.compliant_rate(m, n);
                let commodity = flows.commodity_mut(m, n);
                for e in tree.edges_to(network, dst) {
                    commodity[e] += alpha;
                }
            }
        }
    }
    Ok(flows)
}

/// Solves the weighted system-centric problem with the default
/// [`SolverConfig`] from a cold start.
pub fn solve_system_optimal(
    network: &Network,
    demand: &DemandTable,
    weights: &Weights,
    npv: &[f64],
) -> Result<(CompliantFlows, SolveReport)> {
    let s = solve_system_optimal_with(network, demand, weights, npv, &SolverConfig::default(), None)?;
    Ok((s.flows, s.report))
}

/// Frank-Wolfe solve, optionally warm-started from feasible flows for the
/// same demand. Hitting the iteration cap is not an error: the flows come
/// back with `converged == false`.
pub fn solve_system_optimal_with(
    network: &Network,
    demand: &DemandTable,
    weights: &Weights,
    npv: &[f64],
    config: &SolverConfig,
    warm_start: Option<&CompliantFlows>,
) -> Result<Solution> {
    check_npv(network, npv)?;
    if weights.len() != demand.mode_count() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} modes",
            weights.len(),
            demand.mode_count()
        )));
    }
    let mut state = PathState::new(network, demand, weights, npv, warm_start)?;
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let obj = state.objective();
        if config.record_history && history.is_empty() {
            history.push(obj);
        }
        let targets = state.shortest_paths(demand)?;
        let gap = state.gap(&targets);
        let done = gap <= config.relative_gap * obj.abs() + 1e-14;
        if done || iterations >= config.max_iterations {
            return Ok(Solution {
                flows: state.flows(demand),
                report: SolveReport {
                    objective: obj,
                    gap,
                    iterations,
                    converged: done,
                },
                history,
            });
        }
        state.equilibrate(targets);
        iterations += 1;
        if config.record_history {
            history.push(objective_from_totals(network, state.total(), state.weighted(), npv));
        }
    }
}

fn objective_from_totals(network: &Network, total: &[f64], weighted: &[f64], npv: &[f64]) -> f64 {
    (0..total.len())
        .map(|e| network.link_time(e, total[e] + npv[e]) * weighted[e])
        .sum()
}
