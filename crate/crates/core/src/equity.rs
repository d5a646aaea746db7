//! Mobility equity metric (MEM) and its maximisation over mode weights.
//!
//! `MEM = sum_m exp(-kappa c_m) * sum_s beta_s sigma_m^s`, where `sigma_m^s`
//! is the demand-weighted average, over origins, of the number of
//! destinations supplying service `s` that mode `m` reaches within its
//! threshold `tau_m`. Reachability uses either the exact indicator or the
//! logistic approximation `1 - 1 / (1 + exp(-k (t - tau)))`.

use serde::{Deserialize, Serialize};

use crate::assignment::Weights;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::{delta_pv, play_game, travel_times, EquilibriumResult, GameConfig, GameStatus, Party, TimeFormula, TravelTimes};
use crate::network::{DemandTable, ModeSet, Network, NodeId, Scenario};
use crate::router::shortest_path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorKind {
    Exact,
    #[default]
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub name: String,
    pub destinations: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceMap {
    pub services: Vec<Service>,
}

impl ServiceMap {
    /// One service supplied by every destination.
    pub fn single(network: &Network) -> Self {
        ServiceMap {
            services: vec![Service {
                name: "essential".into(),
                destinations: network.destinations().to_vec(),
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemParams {
    /// Price sensitivity.
    pub kappa: f64,
    /// Cost per passenger mile, per mode.
    pub cost: Vec<f64>,
    /// Priority per service, aligned with `services`.
    pub priority: Vec<f64>,
    /// Time threshold per mode; `None` resolves to the 60th percentile of
    /// free-flow trip times (see [`resolve_thresholds`]).
    pub threshold: Vec<Option<f64>>,
    /// Logistic slope `k`.
    pub slope: f64,
    pub indicator: IndicatorKind,
    pub services: ServiceMap,
}

/// Percentile of free-flow trip times used for missing thresholds.
pub const DEFAULT_THRESHOLD_PERCENTILE: f64 = 60.0;

impl MemParams {
    /// kappa 1, cost 0.3 for `public` and 1.0 otherwise, priority 1, slope 2,
    /// logistic indicator, one service at every destination.
    pub fn defaults(modes: &ModeSet, network: &Network) -> Self {
        let cost = modes
            .names()
            .iter()
            .map(|n| if n == "public" { 0.3 } else { 1.0 })
            .collect();
        MemParams {
            kappa: 1.0,
            cost,
            priority: vec![1.0],
            threshold: vec![None; modes.len()],
            slope: 2.0,
            indicator: IndicatorKind::Sigmoid,
            services: ServiceMap::single(network),
        }
    }
}

/// Logistic stand-in for `t <= tau`, evaluated without overflow.
pub fn smooth_indicator(t: f64, tau: f64, k: f64) -> f64 {
    let z = k * (t - tau);
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

pub fn indicator(t: f64, tau: f64, k: f64, kind: IndicatorKind) -> f64 {
    match kind {
        IndicatorKind::Exact => {
            if t <= tau {
                1.0
            } else {
                0.0
            }
        }
        IndicatorKind::Sigmoid => smooth_indicator(t, tau, k),
    }
}

/// Average number of `service` destinations reachable by `mode` within
/// `threshold`, weighted by each origin's departing demand for the mode.
/// Destinations without a travel time for the mode count as unreachable.
pub fn sigma(
    times: &TravelTimes,
    demand: &DemandTable,
    mode: usize,
    service: &Service,
    params: &MemParams,
    threshold: f64,
) -> Result<f64> {
    let mut origins: Vec<NodeId> = Vec::new();
    for t in &demand.trips {
        if !origins.contains(&t.origin) {
            origins.push(t.origin);
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for o in origins {
        let alpha: f64 = demand
            .trips
            .iter()
            .enumerate()
            .filter(|(_, t)| t.origin == o)
            .map(|(n, _)| demand.compliant_rate(mode, n))
            .sum();
        if alpha <= 0.0 {
            continue;
        }
        let count: f64 = service
            .destinations
            .iter()
            .filter_map(|&d| demand.trip_index(o, d))
            .filter_map(|n| times.get(Party::Mode(mode), n))
            .map(|t| indicator(t, threshold, params.slope, params.indicator))
            .sum();
        num += alpha * count;
        den += alpha;
    }
    if den <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "mode #{mode} has no demand; its accessibility average is undefined"
        )));
    }
    Ok(num / den)
}

/// The metric from per-(mode, service) accessibilities `sigmas[m][s]`.
pub fn mem(sigmas: &[Vec<f64>], params: &MemParams) -> f64 {
    sigmas
        .iter()
        .enumerate()
        .map(|(m, per_service)| {
            let inner: f64 = per_service
                .iter()
                .zip(&params.priority)
                .map(|(s, b)| b * s)
                .sum();
            (-params.kappa * params.cost[m]).exp() * inner
        })
        .sum()
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fills missing thresholds with the 60th percentile (linear interpolation)
/// of free-flow trip times, each trip routed on its free-flow shortest path
/// and timed under `formula`.
pub fn resolve_thresholds(
    network: &Network,
    demand: &DemandTable,
    params: &MemParams,
    formula: TimeFormula,
) -> Result<Vec<f64>> {
    if params.threshold.iter().all(Option::is_some) {
        return Ok(params.threshold.iter().map(|t| t.unwrap()).collect());
    }
    let t0 = network.free_flow_times();
    let mut free: Vec<f64> = demand
        .trips
        .iter()
        .map(|t| {
            let p = shortest_path(network, &t0, t.origin, t.destination)?;
            Ok(match formula {
                TimeFormula::Paper => p.cost / p.edges.len() as f64,
                TimeFormula::Path => p.cost,
            })
        })
        .collect::<Result<_>>()?;
    if free.is_empty() {
        return Err(Error::InvalidInput("no trips to derive a threshold from".into()));
    }
    free.sort_by(f64::total_cmp);
    let default = percentile(&free, DEFAULT_THRESHOLD_PERCENTILE);
    Ok(params.threshold.iter().map(|t| t.unwrap_or(default)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemEvaluation {
    pub thresholds: Vec<f64>,
    /// `sigmas[m][s]`; modes without demand contribute zeros.
    pub sigmas: Vec<Vec<f64>>,
    pub mem: f64,
}

pub fn evaluate_mem(
    network: &Network,
    demand: &DemandTable,
    times: &TravelTimes,
    params: &MemParams,
    formula: TimeFormula,
) -> Result<MemEvaluation> {
    let thresholds = resolve_thresholds(network, demand, params, formula)?;
    let mut sigmas = Vec::with_capacity(demand.mode_count());
    for m in 0..demand.mode_count() {
        let has_demand = demand.compliant[m].iter().any(|&a| a > 0.0);
        let row = params
            .services
            .services
            .iter()
            .map(|s| {
                if has_demand {
                    sigma(times, demand, m, s, params, thresholds[m])
                } else {
                    Ok(0.0)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        sigmas.push(row);
    }
    let value = mem(&sigmas, params);
    Ok(MemEvaluation {
        thresholds,
        sigmas,
        mem: value,
    })
}

/// One evaluated weight point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub weights: Vec<f64>,
    pub ncr: Option<f64>,
    pub mem: f64,
    pub delta_pv: f64,
    pub times: TravelTimes,
    pub status: GameStatus,
    pub iterations: usize,
    /// `delta_pv <= gap_limit`.
    pub feasible: bool,
}

/// Plays the game at `weights` and scores the outcome.
pub fn evaluate_point(
    scenario: &Scenario,
    weights: &Weights,
    config: &GameConfig,
) -> Result<(EquilibriumResult, SweepRecord, MemEvaluation)> {
    let result = play_game(&scenario.network, &scenario.demand, weights, config)?;
    let times = travel_times(&scenario.network, &result, &scenario.demand, config.time_formula);
    let eval = evaluate_mem(&scenario.network, &scenario.demand, &times, &scenario.mem, config.time_formula)?;
    let gap = delta_pv(&times, &scenario.demand, scenario.modes.private(), config.gap_mode);
    let record = SweepRecord {
        weights: weights.as_slice().to_vec(),
        ncr: None,
        mem: eval.mem,
        delta_pv: gap,
        times,
        status: result.status,
        iterations: result.iterations(),
        feasible: gap <= config.gap_limit,
    };
    Ok((result, record, eval))
}

/// Lattice points of the weight simplex with spacing `step`, ordered
/// lexicographically with the first mode's weight ascending.
pub fn simplex_grid(modes: usize, step: f64) -> Result<Vec<Weights>> {
    if modes == 0 || !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput(format!("grid step must be in (0, 1], got {step}")));
    }
    let k = (1.0 / step).round() as usize;
    if ((k as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("grid step {step} does not divide 1")));
    }
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(left - i, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut parts = Vec::new();
    rec(k, modes, &mut Vec::new(), &mut parts);
    parts
        .into_iter()
        .map(|p| Weights::new(p.into_iter().map(|i| i as f64 / k as f64).collect()))
        .collect()
}

/// Index of the feasible record with the largest metric; ties go to the
/// smaller weight on `public_mode`.
pub fn best_feasible(records: &[SweepRecord], public_mode: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if !r.feasible {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &records[b];
                if r.mem > cur.mem || (r.mem == cur.mem && r.weights[public_mode] < cur.weights[public_mode]) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Maximises the metric over `grid` subject to `delta_pv <= gap_limit`.
/// Every point is recorded, in grid order, whatever the outcome.
pub fn maximize_mem(
    scenario: &Scenario,
    gap_limit: f64,
    grid: &[Weights],
    config: &GameConfig,
    exec: Execution,
) -> Result<(Weights, Vec<SweepRecord>)> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("weight grid is empty".into()));
    }
    let config = GameConfig {
        gap_limit,
        ..config.clone()
    };
    let records = exec
        .map(grid, |w| evaluate_point(scenario, w, &config).map(|(_, r, _)| r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    match best_feasible(&records, scenario.modes.public()) {
        Some(i) => Ok((grid[i].clone(), records)),
        None => Err(Error::InfeasibleSweep { gap_limit, records }),
    }
}
