//! Operations behind the command-line tool: NCR rescaling, single runs,
//! weight x NCR sweeps, the chatter demonstration, and their output files.
//!
//! Tables are comma-separated with a one-line header; run records are
//! pretty-printed JSON. Floats are written in shortest round-trip form, so
//! every table reads back bit-for-bit.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assignment::Weights;
use crate::equity::{best_feasible, evaluate_point, simplex_grid, MemEvaluation, SweepRecord};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::{
    play_game, travel_times, EquilibriumResult, GameConfig, GameStatus, Party, TimeFormula, TravelTimes,
};
use crate::network::{serialize_scenario, DemandTable, ModeSet, Scenario, LEVELS};
use crate::router::npv_phase;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_LEVEL_SPLIT: [f64; LEVELS] = [0.5, 0.3, 0.2];

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const NON_CONVERGENCE: i32 = 5;
    pub const IO: i32 = 6;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Validation(_) | Error::InvalidInput(_) | Error::NegativeFlow { .. } => {
            exit::VALIDATION
        }
        Error::Unreachable { .. }
        | Error::InfeasibleTrip { .. }
        | Error::InfeasibleLp(_)
        | Error::RedistributionShift(_)
        | Error::InfeasibleSweep { .. } => exit::INFEASIBLE,
        Error::Io(_) => exit::IO,
    }
}

/// Noncompliance rates and the split of noncompliant demand over levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcrSpec {
    pub rates: Vec<f64>,
    pub level_split: [f64; LEVELS],
}

impl NcrSpec {
    pub fn new(rates: Vec<f64>, level_split: [f64; LEVELS]) -> Result<Self> {
        if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidInput(format!("noncompliance rate {r} outside [0, 1]")));
        }
        validate_split(&level_split)?;
        Ok(NcrSpec { rates, level_split })
    }
}

fn validate_split(split: &[f64; LEVELS]) -> Result<()> {
    let sum: f64 = split.iter().sum();
    if split.iter().any(|s| !(*s >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "level split {split:?} must be nonnegative and sum to 1"
        )));
    }
    Ok(())
}

/// Rescales private demand: per trip, the base `cpv + sum of npv levels`
/// becomes `(1 - ncr)` compliant on `private_mode` and `ncr * split[l]` on
/// level `l`. Other modes are untouched.
pub fn apply_ncr(demand: &DemandTable, private_mode: usize, ncr: f64, split: &[f64; LEVELS]) -> Result<DemandTable> {
    if !(0.0..=1.0).contains(&ncr) {
        return Err(Error::InvalidInput(format!("noncompliance rate {ncr} outside [0, 1]")));
    }
    validate_split(split)?;
    let mut out = demand.clone();
    for n in 0..demand.trip_count() {
        let base = demand.compliant_rate(private_mode, n) + (0..LEVELS).map(|l| demand.npv_rate(l, n)).sum::<f64>();
        out.compliant[private_mode][n] = (1.0 - ncr) * base;
        for (l, s) in split.iter().enumerate() {
            out.noncompliant[l][n] = ncr * s * base;
        }
    }
    Ok(out)
}

/// SHA-256 of a JSON document in canonical form (object keys sorted, no
/// whitespace), so key order and formatting do not matter.
pub fn document_digest(document: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    let canonical = serde_json::to_string(&value).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

pub fn scenario_digest(scenario: &Scenario) -> String {
    document_digest(&serialize_scenario(scenario)).expect("serialized scenarios are valid JSON")
}

pub fn parse_weights(text: &str) -> Result<Weights> {
    Weights::new(parse_list(text)?)
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("'{s}' is not a number")))
        })
        .collect()
}

pub fn parse_split(text: &str) -> Result<[f64; LEVELS]> {
    let v = parse_list(text)?;
    let split: [f64; LEVELS] = v
        .try_into()
        .map_err(|_| Error::InvalidInput(format!("level split needs {LEVELS} values")))?;
    validate_split(&split)?;
    Ok(split)
}

fn party_name(modes: &ModeSet, party: Party) -> String {
    match party {
        Party::Mode(m) => modes.name(m).to_string(),
        Party::Level(l) => format!("npv_l{l}"),
    }
}

fn parse_party(modes: &ModeSet, name: &str) -> Result<Party> {
    if let Some(l) = name.strip_prefix("npv_l").and_then(|s| s.parse::<usize>().ok()) {
        if l < LEVELS {
            return Ok(Party::Level(l));
        }
    }
    modes
        .index_of(name)
        .map(Party::Mode)
        .ok_or_else(|| Error::Parse(format!("unknown party '{name}'")))
}

pub const TIMES_HEADER: [&str; 5] = ["trip", "origin", "destination", "party", "time"];

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

fn csv_rows(text: &str, header: &[String]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if found.iter().ne(header.iter().map(String::as_str)) {
        return Err(Error::Parse(format!("unexpected table header '{}'", found.iter().collect::<Vec<_>>().join(","))));
    }
    r.records().map(|rec| rec.map_err(|e| Error::Parse(e.to_string()))).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).unwrap_or_default();
    s.parse()
        .map_err(|_| Error::Parse(format!("bad field '{s}' in column {i} of row {:?}", rec.iter().collect::<Vec<_>>())))
}

fn opt_field(rec: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    if rec.get(i).unwrap_or_default().is_empty() {
        Ok(None)
    } else {
        field(rec, i).map(Some)
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// One row per (trip, party) with flow, trips in table order, modes before
/// levels.
pub fn write_times_table(times: &TravelTimes, demand: &DemandTable, modes: &ModeSet) -> String {
    let mut rows: Vec<_> = times.entries.iter().collect();
    rows.sort_by_key(|t| (t.trip, t.party));
    csv_text(
        &strings(&TIMES_HEADER),
        rows.into_iter().map(|t| {
            let trip = &demand.trips[t.trip];
            vec![
                t.trip.to_string(),
                trip.origin.to_string(),
                trip.destination.to_string(),
                party_name(modes, t.party),
                t.time.to_string(),
            ]
        }),
    )
}

pub fn read_times_table(text: &str, modes: &ModeSet) -> Result<TravelTimes> {
    let entries = csv_rows(text, &strings(&TIMES_HEADER))?
        .iter()
        .map(|rec| {
            Ok(crate::game::TimeEntry {
                trip: field(rec, 0)?,
                party: parse_party(modes, rec.get(3).unwrap_or_default())?,
                time: field(rec, 4)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TravelTimes { entries })
}

/// One row of the sweep results table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub weights: Vec<f64>,
    pub ncr: Option<f64>,
    pub mem: f64,
    pub delta_pv: f64,
    pub feasible: bool,
    pub status: GameStatus,
}

impl From<&SweepRecord> for SweepRow {
    fn from(r: &SweepRecord) -> Self {
        SweepRow {
            weights: r.weights.clone(),
            ncr: r.ncr,
            mem: r.mem,
            delta_pv: r.delta_pv,
            feasible: r.feasible,
            status: r.status,
        }
    }
}

pub fn sweep_header(modes: &ModeSet) -> Vec<String> {
    let mut h: Vec<String> = modes.names().iter().map(|m| format!("w_{m}")).collect();
    h.extend(strings(&["ncr", "mem", "delta_pv", "feasible", "status"]));
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_table(rows: &[SweepRow], modes: &ModeSet) -> String {
    csv_text(
        &sweep_header(modes),
        rows.iter().map(|r| {
            let mut rec: Vec<String> = r.weights.iter().map(f64::to_string).collect();
            rec.extend([
                opt(r.ncr),
                r.mem.to_string(),
                r.delta_pv.to_string(),
                r.feasible.to_string(),
                r.status.to_string(),
            ]);
            rec
        }),
    )
}

pub fn read_sweep_table(text: &str, modes: &ModeSet) -> Result<Vec<SweepRow>> {
    let m = modes.len();
    csv_rows(text, &sweep_header(modes))?
        .iter()
        .map(|rec| {
            Ok(SweepRow {
                weights: (0..m).map(|i| field(rec, i)).collect::<Result<_>>()?,
                ncr: opt_field(rec, m)?,
                mem: field(rec, m + 1)?,
                delta_pv: field(rec, m + 2)?,
                feasible: field(rec, m + 3)?,
                status: rec.get(m + 4).unwrap_or_default().parse().map_err(Error::Parse)?,
            })
        })
        .collect()
}

/// Best feasible weights for one NCR, or `None` when no point is feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestWeights {
    pub ncr: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub mem: Option<f64>,
    pub delta_pv: Option<f64>,
}

pub fn best_header(modes: &ModeSet) -> Vec<String> {
    let mut h = vec!["ncr".to_string()];
    h.extend(modes.names().iter().map(|m| format!("w_{m}")));
    h.extend(strings(&["mem", "delta_pv", "result"]));
    h
}

pub fn write_best_table(best: &[BestWeights], modes: &ModeSet) -> String {
    csv_text(
        &best_header(modes),
        best.iter().map(|b| {
            let mut rec = vec![opt(b.ncr)];
            match &b.weights {
                Some(w) => rec.extend(w.iter().map(f64::to_string)),
                None => rec.extend(std::iter::repeat_n(String::new(), modes.len())),
            }
            let result = if b.weights.is_some() { "optimal" } else { "infeasible" };
            rec.extend([opt(b.mem), opt(b.delta_pv), result.to_string()]);
            rec
        }),
    )
}

pub fn read_best_table(text: &str, modes: &ModeSet) -> Result<Vec<BestWeights>> {
    let m = modes.len();
    csv_rows(text, &best_header(modes))?
        .iter()
        .map(|rec| {
            let feasible = rec.get(m + 3) == Some("optimal");
            Ok(BestWeights {
                ncr: opt_field(rec, 0)?,
                weights: if feasible {
                    Some((1..=m).map(|i| field(rec, i)).collect::<Result<_>>()?)
                } else {
                    None
                },
                mem: opt_field(rec, m + 1)?,
                delta_pv: opt_field(rec, m + 2)?,
            })
        })
        .collect()
}

/// Scenario with the private demand rescaled to `ncr`, or unchanged.
pub fn scenario_at(scenario: &Scenario, ncr: Option<f64>, split: &[f64; LEVELS]) -> Result<Scenario> {
    let mut s = scenario.clone();
    if let Some(r) = ncr {
        s.demand = apply_ncr(&scenario.demand, scenario.modes.private(), r, split)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    pub weights: Vec<f64>,
    pub ncr: Option<f64>,
    pub level_split: [f64; LEVELS],
    pub time_formula: TimeFormula,
}

/// Final state of a game, without the per-commodity flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub status: GameStatus,
    pub iterations: usize,
    pub objective: f64,
    pub delta_pv: f64,
    pub edge_totals: Vec<f64>,
    pub mode_edge_totals: Vec<Vec<f64>>,
    pub npv_edge_totals: Vec<f64>,
    pub trace: Vec<crate::game::IterationRecord>,
    pub redistributed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub command: String,
    pub scenario_digest: String,
    pub params: SolveParams,
    pub summary: Option<ResultSummary>,
    pub times: Option<TravelTimes>,
    pub mem: Option<MemEvaluation>,
    pub error: Option<String>,
    pub elapsed_seconds: f64,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("run records serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub scenario: Scenario,
    pub result: Option<EquilibriumResult>,
    pub record: RunRecord,
    /// The failure, if any; the record describes it too.
    pub error: Option<Error>,
}

impl SolveOutcome {
    pub fn exit_code(&self) -> i32 {
        match (&self.error, &self.record.summary) {
            (Some(e), _) => exit_code(e),
            (None, Some(s)) if s.status == GameStatus::MaxIterations => exit::NON_CONVERGENCE,
            _ => exit::OK,
        }
    }
}

/// Plays one game. Model failures are captured in the outcome rather than
/// returned, so a diagnostic record can always be written; only invalid
/// parameters are returned as errors.
pub fn run_solve(scenario: &Scenario, params: &SolveParams, config: &GameConfig) -> Result<SolveOutcome> {
    let start = Instant::now();
    let weights = Weights::new(params.weights.clone())?;
    if weights.as_slice().len() != scenario.modes.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights given for {} modes",
            weights.as_slice().len(),
            scenario.modes.len()
        )));
    }
    let scenario = scenario_at(scenario, params.ncr, &params.level_split)?;
    let config = GameConfig {
        time_formula: params.time_formula,
        ..config.clone()
    };
    let mut record = RunRecord {
        version: VERSION.to_string(),
        command: "solve".into(),
        scenario_digest: scenario_digest(&scenario),
        params: params.clone(),
        summary: None,
        times: None,
        mem: None,
        error: None,
        elapsed_seconds: 0.0,
    };
    let outcome = evaluate_point(&scenario, &weights, &config);
    record.elapsed_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((result, sweep, eval)) => {
            record.summary = Some(ResultSummary {
                status: result.status,
                iterations: result.iterations(),
                objective: result.trace.last().map(|r| r.objective).unwrap_or(0.0),
                delta_pv: sweep.delta_pv,
                edge_totals: result.edge_totals.clone(),
                mode_edge_totals: (0..scenario.modes.len()).map(|m| result.compliant.mode_totals(m)).collect(),
                npv_edge_totals: result.npv_flows.total.clone(),
                trace: result.trace.clone(),
                redistributed: result.redistribution.is_some(),
            });
            record.times = Some(sweep.times);
            record.mem = Some(eval);
            Ok(SolveOutcome {
                scenario,
                result: Some(result),
                record,
                error: None,
            })
        }
        Err(e) => {
            record.error = Some(e.to_string());
            Ok(SolveOutcome {
                scenario,
                result: None,
                record,
                error: Some(e),
            })
        }
    }
}

/// Writes `run_record.json` and, on success, `times.csv` into `dir`.
pub fn write_solve_outputs(outcome: &SolveOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("run_record.json"), outcome.record.to_json())?;
    if let Some(times) = &outcome.record.times {
        fs::write(
            dir.join("times.csv"),
            write_times_table(times, &outcome.scenario.demand, &outcome.scenario.modes),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub grid_step: f64,
    /// `None` keeps the scenario's own rates.
    pub ncr: Option<NcrSpec>,
    pub gap_limit: f64,
    pub config: GameConfig,
    pub exec: Execution,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Grouped by NCR in the given order, weights in grid order.
    pub records: Vec<SweepRecord>,
    pub best: Vec<BestWeights>,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.records.iter().map(SweepRow::from).collect()
    }
}

/// Evaluates every (NCR, weight) pair, then picks the best feasible weights
/// per NCR. An NCR without feasible points is reported, not fatal.
pub fn run_sweep(scenario: &Scenario, options: &SweepOptions) -> Result<SweepOutcome> {
    if options.gap_limit.is_nan() {
        return Err(Error::InvalidInput("gap limit is NaN".into()));
    }
    let grid = simplex_grid(scenario.modes.len(), options.grid_step)?;
    let (rates, split): (Vec<Option<f64>>, [f64; LEVELS]) = match &options.ncr {
        Some(spec) => (spec.rates.iter().copied().map(Some).collect(), spec.level_split),
        None => (vec![None], DEFAULT_LEVEL_SPLIT),
    };
    let scenarios = rates
        .iter()
        .map(|&r| scenario_at(scenario, r, &split))
        .collect::<Result<Vec<_>>>()?;
    let config = GameConfig {
        gap_limit: options.gap_limit,
        ..options.config.clone()
    };
    let jobs: Vec<(usize, &Weights)> = (0..rates.len()).flat_map(|i| grid.iter().map(move |w| (i, w))).collect();
    let records = options
        .exec
        .map(&jobs, |&(i, w)| {
            evaluate_point(&scenarios[i], w, &config).map(|(_, mut r, _)| {
                r.ncr = rates[i];
                r
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let public = scenario.modes.public();
    let best = records
        .chunks(grid.len())
        .zip(&rates)
        .map(|(chunk, &ncr)| match best_feasible(chunk, public) {
            Some(i) => BestWeights {
                ncr,
                weights: Some(chunk[i].weights.clone()),
                mem: Some(chunk[i].mem),
                delta_pv: Some(chunk[i].delta_pv),
            },
            None => {
                log::warn!("no weights satisfy the gap limit {} at ncr {:?}", options.gap_limit, ncr);
                BestWeights {
                    ncr,
                    weights: None,
                    mem: None,
                    delta_pv: None,
                }
            }
        })
        .collect();
    Ok(SweepOutcome { records, best })
}

/// Writes `sweep.csv` and `best.csv` into `dir`.
pub fn write_sweep_outputs(outcome: &SweepOutcome, modes: &ModeSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("sweep.csv"), write_sweep_table(&outcome.rows(), modes))?;
    fs::write(dir.join("best.csv"), write_best_table(&outcome.best, modes))?;
    Ok(())
}

/// Invariants of a redistribution step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedistributionChecks {
    /// Largest per-edge change in compliant totals.
    pub max_total_change: f64,
    pub totals_preserved: bool,
    pub npv_paths_unchanged: bool,
    pub public_time_not_increased: bool,
    pub objective_not_increased: bool,
}

impl RedistributionChecks {
    pub fn all(&self) -> bool {
        self.totals_preserved && self.npv_paths_unchanged && self.public_time_not_increased && self.objective_not_increased
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub result: EquilibriumResult,
    /// Travel times of the last iteration before redistribution, then after
    /// it; a single entry when play did not chatter.
    pub columns: Vec<TravelTimes>,
    pub checks: Option<RedistributionChecks>,
}

/// Absolute tolerance on preserved compliant totals.
pub const TOTALS_TOLERANCE: f64 = 1e-9;

/// Plays the game and, if it chattered, compares the state just before
/// redistribution with the state after it.
pub fn iterate_demo(scenario: &Scenario, weights: &Weights, config: &GameConfig) -> Result<DemoOutcome> {
    let result = play_game(&scenario.network, &scenario.demand, weights, config)?;
    let after = travel_times(&scenario.network, &result, &scenario.demand, config.time_formula);
    let Some(redist) = &result.redistribution else {
        return Ok(DemoOutcome {
            result,
            columns: vec![after],
            checks: None,
        });
    };
    let before_state = EquilibriumResult {
        compliant: redist.before.clone(),
        edge_totals: result.trace[result.trace.len() - 2].edge_totals.clone(),
        redistribution: None,
        ..result.clone()
    };
    let before = travel_times(&scenario.network, &before_state, &scenario.demand, config.time_formula);
    let max_total_change = redist
        .before
        .edge_totals()
        .iter()
        .zip(result.compliant.edge_totals())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let public = scenario.modes.public();
    let pt = |t: &TravelTimes| t.mode_mean(public, &scenario.demand);
    let public_time_not_increased = match (pt(&before), pt(&after)) {
        (Some(b), Some(a)) => a <= b + 1e-9 * b.abs().max(1.0),
        _ => true,
    };
    let (paths_before, _) = npv_phase(&scenario.network, &redist.before.edge_totals(), &scenario.demand)?;
    let (paths_after, _) = npv_phase(&scenario.network, &result.compliant.edge_totals(), &scenario.demand)?;
    let checks = RedistributionChecks {
        max_total_change,
        totals_preserved: max_total_change <= TOTALS_TOLERANCE,
        npv_paths_unchanged: paths_before.same_paths(&paths_after),
        public_time_not_increased,
        objective_not_increased: redist.objective_after
            <= redist.objective_before + 1e-9 * redist.objective_before.abs().max(1.0),
    };
    Ok(DemoOutcome {
        result,
        columns: vec![before, after],
        checks: Some(checks),
    })
}

pub const DEMO_COLUMNS: [&str; 2] = ["before_redistribution", "after_redistribution"];

/// Demand-weighted mean time per mode and level, one column per state.
pub fn write_demo_table(demo: &DemoOutcome, scenario: &Scenario) -> String {
    let mut header = vec!["party".to_string()];
    if demo.columns.len() == 1 {
        header.push("final".into());
    } else {
        header.extend(strings(&DEMO_COLUMNS));
    }
    let d = &scenario.demand;
    let mut rows = Vec::new();
    for m in 0..scenario.modes.len() {
        let mut rec = vec![scenario.modes.name(m).to_string()];
        rec.extend(demo.columns.iter().map(|t| opt(t.mode_mean(m, d))));
        rows.push(rec);
    }
    for l in 0..LEVELS {
        let mut rec = vec![format!("npv_l{l}")];
        rec.extend(demo.columns.iter().map(|t| {
            let (num, den) = t
                .entries
                .iter()
                .filter(|e| e.party == Party::Level(l))
                .fold((0.0, 0.0), |(n, dd), e| (n + d.npv_rate(l, e.trip) * e.time, dd + d.npv_rate(l, e.trip)));
            opt((den > 0.0).then(|| num / den))
        }));
        rows.push(rec);
    }
    csv_text(&header, rows)
}

pub fn write_demo_outputs(demo: &DemoOutcome, scenario: &Scenario, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("iterations.csv"), write_demo_table(demo, scenario))?;
    let mut checks = match &demo.checks {
        Some(c) => serde_json::to_string_pretty(c).expect("checks serialize"),
        None => "null".to_string(),
    };
    checks.push('\n');
    fs::write(dir.join("checks.json"), checks)?;
    Ok(())
}
