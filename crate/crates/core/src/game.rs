//! Fixed-point play between system routing of compliant traffic and the
//! noncompliant cognitive hierarchy.
//!
//! Each outer iteration solves the system problem against the current
//! noncompliant flows, then lets levels 0..2 respond to the new compliant
//! flows. Play starts from zero noncompliant flow. When the edge totals
//! start cycling, compliant totals are frozen and redistributed across modes
//! once, which leaves noncompliant drivers with nothing to react to.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assignment::{
    frozen_objective, redistribute_fixed_totals, solve_system_optimal_with, CompliantFlows,
    SolveReport, SolverConfig, Weights,
};
use crate::error::{Error, Result};
use crate::network::{DemandTable, Network, LEVELS};
use crate::router::{npv_phase, NpvAssignment, NpvFlows};

/// How per-trip travel times are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeFormula {
    /// Flow-weighted mean edge time, `sum t x / sum x`, applied to every
    /// party (for a noncompliant path this is the mean time of its edges).
    #[default]
    Paper,
    /// Experienced time per unit demand: `sum t x / demand` for modes, the
    /// path time for noncompliant drivers.
    Path,
}

impl std::str::FromStr for TimeFormula {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(TimeFormula::Paper),
            "path" => Ok(TimeFormula::Path),
            other => Err(format!("unknown time formula '{other}' (expected paper or path)")),
        }
    }
}

/// How the CPV/NPV time gap aggregates over trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    /// Demand-weighted CPV mean minus demand-weighted NPV mean.
    #[default]
    MeanDifference,
    /// CPV-demand-weighted mean of per-trip differences, over trips served by
    /// both.
    PairedTrips,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub max_iterations: usize,
    /// Convergence and cycle-matching tolerance, relative to total demand,
    /// on the max-norm of edge-total differences.
    pub flow_tolerance: f64,
    pub chatter_window: usize,
    /// Upper bound on the CPV/NPV time gap used by the weight sweep.
    pub gap_limit: f64,
    pub time_formula: TimeFormula,
    pub gap_mode: GapMode,
    pub solver: SolverConfig,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            max_iterations: 100,
            flow_tolerance: 1e-4,
            chatter_window: 6,
            gap_limit: f64::INFINITY,
            time_formula: TimeFormula::Paper,
            gap_mode: GapMode::MeanDifference,
            solver: SolverConfig::default(),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 2 {
            return Err(Error::InvalidInput("max_iterations must be at least 2".into()));
        }
        if !(self.flow_tolerance > 0.0) {
            return Err(Error::InvalidInput("flow_tolerance must be positive".into()));
        }
        if self.chatter_window < 2 {
            return Err(Error::InvalidInput("chatter_window must be at least 2".into()));
        }
        if self.gap_limit.is_nan() {
            return Err(Error::InvalidInput("gap_limit is NaN".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStatus {
    Converged,
    ChatterResolved,
    MaxIterations,
}

impl fmt::Display for GameStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameStatus::Converged => "converged",
            GameStatus::ChatterResolved => "chatter_resolved",
            GameStatus::MaxIterations => "max_iterations",
        })
    }
}

impl std::str::FromStr for GameStatus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "converged" => Ok(GameStatus::Converged),
            "chatter_resolved" => Ok(GameStatus::ChatterResolved),
            "max_iterations" => Ok(GameStatus::MaxIterations),
            other => Err(format!("unknown status '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Compliant plus noncompliant flow per edge after this iteration.
    pub edge_totals: Vec<f64>,
    /// Weighted system objective reported by the solve of this iteration.
    pub objective: f64,
    pub solver: SolveReport,
    /// Set on the record appended by chatter resolution.
    pub redistribution: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Redistribution {
    /// Compliant flows the redistribution started from.
    pub before: CompliantFlows,
    /// Link times frozen by the pinned totals.
    pub frozen_times: Vec<f64>,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub compliant: CompliantFlows,
    pub npv_assignment: NpvAssignment,
    pub npv_flows: NpvFlows,
    pub edge_totals: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub status: GameStatus,
    pub redistribution: Option<Redistribution>,
}

impl EquilibriumResult {
    pub fn iterations(&self) -> usize {
        self.trace.iter().filter(|r| !r.redistribution).count()
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// True when the newest vector of `trace` repeats an earlier vector inside
/// the last `window` entries (within `tol`, max-norm) while differing from
/// its immediate predecessor.
pub fn detect_chatter(trace: &[Vec<f64>], window: usize, tol: f64) -> bool {
    let n = trace.len();
    if n < 3 {
        return false;
    }
    let last = &trace[n - 1];
    if max_abs_diff(last, &trace[n - 2]) < tol {
        return false;
    }
    let start = n.saturating_sub(window);
    trace[start..n - 2]
        .iter()
        .any(|earlier| max_abs_diff(last, earlier) < tol)
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Plays the routing game to a fixed point, a resolved cycle, or the
/// iteration cap.
pub fn play_game(
    network: &Network,
    demand: &DemandTable,
    weights: &Weights,
    config: &GameConfig,
) -> Result<EquilibriumResult> {
    config.validate()?;
    let edges = network.edge_count();
    let tol = config.flow_tolerance * demand.total().max(1.0);

    let mut assignment = NpvAssignment::default();
    let mut npv = NpvFlows::zeros(edges);
    let mut compliant: Option<CompliantFlows> = None;
    let mut trace: Vec<IterationRecord> = Vec::new();

    for k in 1..=config.max_iterations {
        let sol = solve_system_optimal_with(
            network,
            demand,
            weights,
            &npv.total,
            &config.solver,
            compliant.as_ref(),
        )?;
        if !sol.report.converged {
            log::debug!(
                "iteration {k}: system solve stopped at gap {} after {} steps",
                sol.report.gap,
                sol.report.iterations
            );
        }
        let x_totals = sol.flows.edge_totals();
        let (next_assignment, next_npv) = npv_phase(network, &x_totals, demand)?;
        let totals = add(&x_totals, &next_npv.total);

        // same paths as the ones the system just planned against: the next
        // solve would be warm-started at an optimum of the same problem
        let fixed_point = next_assignment.same_paths(&assignment);
        let small_step = trace
            .last()
            .is_some_and(|prev| max_abs_diff(&totals, &prev.edge_totals) < tol);

        trace.push(IterationRecord {
            edge_totals: totals.clone(),
            objective: sol.report.objective,
            solver: sol.report,
            redistribution: false,
        });
        compliant = Some(sol.flows);
        assignment = next_assignment;
        npv = next_npv;

        if fixed_point || small_step {
            log::debug!("converged after {k} iteration(s)");
            return Ok(EquilibriumResult {
                compliant: compliant.expect("set above"),
                npv_assignment: assignment,
                npv_flows: npv,
                edge_totals: totals,
                trace,
                status: GameStatus::Converged,
                redistribution: None,
            });
        }

        let history: Vec<Vec<f64>> = trace.iter().map(|r| r.edge_totals.clone()).collect();
        if k < config.max_iterations && detect_chatter(&history, config.chatter_window, tol) {
            log::debug!("chatter detected at iteration {k}; redistributing");
            let before = compliant.take().expect("set above");
            return resolve_chatter(network, demand, weights, before, assignment, npv, trace);
        }
    }

    let compliant = compliant.expect("at least one iteration ran");
    let edge_totals = add(&compliant.edge_totals(), &npv.total);
    Ok(EquilibriumResult {
        compliant,
        npv_assignment: assignment,
        npv_flows: npv,
        edge_totals,
        trace,
        status: GameStatus::MaxIterations,
        redistribution: None,
    })
}

fn resolve_chatter(
    network: &Network,
    demand: &DemandTable,
    weights: &Weights,
    before: CompliantFlows,
    assignment: NpvAssignment,
    npv: NpvFlows,
    mut trace: Vec<IterationRecord>,
) -> Result<EquilibriumResult> {
    let fixed = before.edge_totals();
    let after = redistribute_fixed_totals(network, demand, weights, &fixed, &npv.total)?;
    let frozen_times = network.link_times(&add(&fixed, &npv.total));
    let objective_before = frozen_objective(&before, weights, &frozen_times);
    let objective_after = frozen_objective(&after, weights, &frozen_times);

    let (check_assignment, check_npv) = npv_phase(network, &after.edge_totals(), demand)?;
    if !check_assignment.same_paths(&assignment) {
        let moved: Vec<String> = check_assignment
            .routes
            .iter()
            .filter(|r| assignment.route(r.level, r.trip).map(|o| &o.path.edges) != Some(&r.path.edges))
            .map(|r| format!("level {} trip #{}", r.level, r.trip))
            .collect();
        return Err(Error::RedistributionShift(moved.join(", ")));
    }

    let edge_totals = add(&after.edge_totals(), &check_npv.total);
    let solver = trace.last().map(|r| r.solver).expect("chatter needs a trace");
    trace.push(IterationRecord {
        edge_totals: edge_totals.clone(),
        objective: crate::assignment::objective(network, &after, weights, &check_npv.total),
        solver,
        redistribution: true,
    });
    Ok(EquilibriumResult {
        compliant: after,
        npv_assignment: check_assignment,
        npv_flows: check_npv,
        edge_totals,
        trace,
        status: GameStatus::ChatterResolved,
        redistribution: Some(Redistribution {
            before,
            frozen_times,
            objective_before,
            objective_after,
        }),
    })
}

/// A travelling party: a system-routed mode or a noncompliant level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Mode(usize),
    Level(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEntry {
    pub party: Party,
    pub trip: usize,
    pub time: f64,
}

/// Average travel time per (party, trip); parties without flow on a trip
/// have no entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TravelTimes {
    pub entries: Vec<TimeEntry>,
}

impl TravelTimes {
    pub fn get(&self, party: Party, trip: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|t| t.party == party && t.trip == trip)
            .map(|t| t.time)
    }

    /// Demand-weighted mean time of one mode over its trips.
    pub fn mode_mean(&self, mode: usize, demand: &DemandTable) -> Option<f64> {
        weighted_mean(self.entries.iter().filter_map(|t| match t.party {
            Party::Mode(m) if m == mode => Some((demand.compliant_rate(m, t.trip), t.time)),
            _ => None,
        }))
    }

    /// Demand-weighted mean time of all noncompliant drivers.
    pub fn npv_mean(&self, demand: &DemandTable) -> Option<f64> {
        weighted_mean(self.entries.iter().filter_map(|t| match t.party {
            Party::Level(l) => Some((demand.npv_rate(l, t.trip), t.time)),
            _ => None,
        }))
    }
}

fn weighted_mean(items: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (w, t) in items {
        num += w * t;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

/// Per-trip travel times of every mode and level under the final edge
/// totals of `result`.
pub fn travel_times(
    network: &Network,
    result: &EquilibriumResult,
    demand: &DemandTable,
    formula: TimeFormula,
) -> TravelTimes {
    let times = network.link_times(&result.edge_totals);
    let x = &result.compliant;
    let mut entries = Vec::new();
    for m in 0..demand.mode_count() {
        for n in 0..demand.trip_count() {
            let flow = x.commodity(m, n);
            let weighted: f64 = flow.iter().zip(&times).map(|(f, t)| f * t).sum();
            let denom = match formula {
                TimeFormula::Paper => flow.iter().sum::<f64>(),
                TimeFormula::Path => demand.compliant_rate(m, n),
            };
            if denom > 0.0 {
                entries.push(TimeEntry {
                    party: Party::Mode(m),
                    trip: n,
                    time: weighted / denom,
                });
            }
        }
    }
    for level in 0..LEVELS {
        for n in 0..demand.trip_count() {
            if let Some(r) = result.npv_assignment.route(level, n) {
                let edges = &r.path.edges;
                let sum: f64 = edges.iter().map(|&e| times[e]).sum();
                let time = match formula {
                    TimeFormula::Paper => sum / edges.len().max(1) as f64,
                    TimeFormula::Path => sum,
                };
                entries.push(TimeEntry {
                    party: Party::Level(level),
                    trip: n,
                    time,
                });
            }
        }
    }
    TravelTimes { entries }
}

/// Average travel-time gap between compliant private vehicles
/// (`private_mode`) and noncompliant drivers. Zero when either side has no
/// demand.
pub fn delta_pv(times: &TravelTimes, demand: &DemandTable, private_mode: usize, mode: GapMode) -> f64 {
    match mode {
        GapMode::MeanDifference => {
            match (times.mode_mean(private_mode, demand), times.npv_mean(demand)) {
                (Some(cpv), Some(npv)) => cpv - npv,
                _ => 0.0,
            }
        }
        GapMode::PairedTrips => {
            let pairs = (0..demand.trip_count()).filter_map(|n| {
                let cpv = times.get(Party::Mode(private_mode), n)?;
                let npv = weighted_mean((0..LEVELS).filter_map(|l| {
                    times.get(Party::Level(l), n).map(|t| (demand.npv_rate(l, n), t))
                }))?;
                Some((demand.compliant_rate(private_mode, n), cpv - npv))
            });
            weighted_mean(pairs).unwrap_or(0.0)
        }
    }
}
