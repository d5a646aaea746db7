//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Tolerances and sizes are fixed here, not tuned per run.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use equiroute::assignment::{CompliantFlows, Weights};
use equiroute::equity::{
    evaluate_point, maximize_mem, mem, sigma, simplex_grid, smooth_indicator, IndicatorKind, MemParams, Service,
    ServiceMap,
};
use equiroute::experiments::{scenario_at, DEFAULT_LEVEL_SPLIT};
use equiroute::game::{play_game, GameConfig, GameStatus, Party, TimeEntry, TimeFormula, TravelTimes};
use equiroute::{presets, DemandTable, Error, Execution, Network, Trip};
use support::{oracles, suites};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(number: usize, title: &str, budget: Option<Duration>, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check));
    let elapsed = start.elapsed();
    let mut o = result.unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    if let Some(limit) = budget {
        if elapsed > limit {
            o.pass = false;
            o.detail = format!("{}; over the {:.0} s budget", o.detail, limit.as_secs_f64());
        }
    }
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("{verdict} {number:>2} {title} ({:.2} s): {}", elapsed.as_secs_f64(), o.detail);
    o.pass
}

/// Optimality against brute force over path flows on a 4-node, 2-trip fixture.
fn oracle_optimality() -> Outcome {
    let (ours, oracle, converged) = suites::diamond_objectives();
    let rel = (ours - oracle).abs() / oracle;
    outcome(
        converged && rel <= 1e-4,
        format!("solver {ours:.8}, brute force {oracle:.8}, relative difference {rel:.2e} (limit 1e-4)"),
    )
}

fn gradient() -> Outcome {
    let s = presets::sample();
    let worst = suites::gradient_suite(&s.network, &s.demand, 100, 2024);
    outcome(worst <= 1e-6, format!("worst relative mismatch {worst:.2e} over 100 states (limit 1e-6)"))
}

fn level_k() -> Outcome {
    let (compared, mismatches) = suites::level_k_suite(200, 7);
    let first = mismatches.first().cloned().unwrap_or_default();
    outcome(
        mismatches.is_empty(),
        format!("{} mismatches in {compared} paths over 200 graphs {first}", mismatches.len()),
    )
}

/// Mean time of `mode` per unit demand under fixed link `times`.
fn mode_time(flows: &CompliantFlows, mode: usize, times: &[f64], demand: &DemandTable) -> f64 {
    let totals = flows.mode_totals(mode);
    let load: f64 = totals.iter().zip(times).map(|(x, t)| x * t).sum();
    let alpha: f64 = (0..demand.trip_count()).map(|n| demand.compliant_rate(mode, n)).sum();
    load / alpha
}

fn frozen_objective(flows: &CompliantFlows, weights: &Weights, times: &[f64]) -> f64 {
    (0..weights.len())
        .map(|m| {
            let load: f64 = flows.mode_totals(m).iter().zip(times).map(|(x, t)| x * t).sum();
            weights.get(m) * load
        })
        .sum()
}

fn npv_totals(network: &Network, paths: &[Vec<Option<Vec<usize>>>], demand: &DemandTable) -> Vec<f64> {
    let mut q = vec![0.0; network.edge_count()];
    for (level, per_trip) in paths.iter().enumerate() {
        for (n, p) in per_trip.iter().enumerate() {
            for &e in p.iter().flatten() {
                q[e] += demand.noncompliant[level][n];
            }
        }
    }
    q
}

/// The four redistribution invariants, recomputed from the flows before and
/// after the redistribution step.
fn chatter() -> Outcome {
    let s = presets::chatter();
    let w = presets::chatter_weights();
    let r = play_game(&s.network, &s.demand, &w, &GameConfig::default()).expect("chatter preset plays");
    if r.status != GameStatus::ChatterResolved {
        return outcome(false, format!("play ended as {:?}, not in a resolved cycle", r.status));
    }
    let before = &r.redistribution.as_ref().expect("resolved play records the redistribution").before;
    let after = &r.compliant;
    let (tb, ta) = (before.edge_totals(), after.edge_totals());
    let drift = tb.iter().zip(&ta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let paths_before = oracles::level_k_paths(&s.network, &tb, &s.demand);
    let paths_after = oracles::level_k_paths(&s.network, &ta, &s.demand);
    let q = npv_totals(&s.network, &paths_before, &s.demand);
    let times: Vec<f64> = (0..s.network.edge_count())
        .map(|e| oracles::link_time(&s.network, e, tb[e] + q[e]))
        .collect();
    let public = s.modes.public();
    let (pt_before, pt_after) = (mode_time(before, public, &times, &s.demand), mode_time(after, public, &times, &s.demand));
    let (obj_before, obj_after) = (frozen_objective(before, &w, &times), frozen_objective(after, &w, &times));

    let totals_ok = drift <= 1e-9;
    let paths_ok = paths_before == paths_after;
    let public_ok = pt_after <= pt_before;
    let objective_ok = obj_after <= obj_before;
    outcome(
        totals_ok && paths_ok && public_ok && objective_ok,
        format!(
            "totals drift {drift:.1e} (limit 1e-9), NPV paths unchanged {paths_ok}, public time {pt_before:.4} -> {pt_after:.4}, frozen objective {obj_before:.4} -> {obj_after:.4}"
        ),
    )
}

fn path_time_config() -> GameConfig {
    GameConfig {
        time_formula: TimeFormula::Path,
        ..GameConfig::default()
    }
}

fn ncr_trend() -> Outcome {
    let s = presets::sample();
    let cfg = path_time_config();
    let mems: Vec<f64> = [0.2, 0.4, 0.6, 0.8]
        .iter()
        .map(|&ncr| {
            let sc = scenario_at(&s, Some(ncr), &DEFAULT_LEVEL_SPLIT).unwrap();
            evaluate_point(&sc, &Weights::uniform(2), &cfg).unwrap().1.mem
        })
        .collect();
    let non_increasing = mems.windows(2).all(|p| p[1] <= p[0]);
    let drop = mems[0] - mems[3];
    outcome(
        non_increasing && drop > 0.0,
        format!("MEM at NCR 0.2..0.8 = {mems:.5?}, MEM(0.2) - MEM(0.8) = {drop:.5}"),
    )
}

fn weight_trend() -> Outcome {
    let s = presets::sample();
    let cfg = path_time_config();
    let sc = scenario_at(&s, Some(0.4), &DEFAULT_LEVEL_SPLIT).unwrap();
    let public = sc.modes.public();
    let deltas: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&wp| {
            let mut w = vec![0.0; 2];
            w[public] = wp;
            w[1 - public] = 1.0 - wp;
            evaluate_point(&sc, &Weights::new(w).unwrap(), &cfg).unwrap().1.delta_pv
        })
        .collect();
    let rho = oracles::spearman_with_index(&deltas);
    outcome(
        rho >= 0.9 && deltas[4] > deltas[0],
        format!("delta_pv over public weight 0..1 = {deltas:.4?}, Spearman {rho:.2} (limit 0.9)"),
    )
}

fn mem_params(cost: Vec<f64>, kappa: f64, kind: IndicatorKind, slope: f64) -> MemParams {
    let modes = cost.len();
    MemParams {
        kappa,
        cost,
        priority: vec![1.0],
        threshold: vec![Some(5.0); modes],
        slope,
        indicator: kind,
        services: ServiceMap {
            services: vec![Service {
                name: "s".into(),
                destinations: vec![10, 11],
            }],
        },
    }
}

fn mem_closed_forms() -> Outcome {
    let mut notes = Vec::new();
    let identity = mem(&[vec![2.7]], &mem_params(vec![0.4], 0.0, IndicatorKind::Exact, 1.0));
    notes.push(((identity - 2.7).abs() <= 1e-9, format!("identity {identity}")));

    let base = mem(&[vec![2.0]], &mem_params(vec![0.6], 1.0, IndicatorKind::Exact, 1.0));
    let doubled = mem(&[vec![2.0]], &mem_params(vec![1.2], 1.0, IndicatorKind::Exact, 1.0));
    let law = base * (-0.6f64).exp();
    notes.push(((doubled - law).abs() <= 1e-9, format!("doubled cost {doubled:.10} vs {law:.10}")));

    let two = mem(&[vec![3.0], vec![2.0]], &mem_params(vec![0.2, 1.0], 1.0, IndicatorKind::Exact, 1.0));
    let arithmetic = (-0.2f64).exp() * 3.0 + (-1.0f64).exp() * 2.0;
    let rounded = (two * 1e4).round() / 1e4;
    notes.push((
        (two - arithmetic).abs() <= 1e-9 && rounded == 3.192,
        format!("two modes {two:.6}"),
    ));

    let midpoints = [(0.0, 1.0), (5.0, 2.0), (-3.5, 1e3), (12.25, 1e-3)]
        .iter()
        .all(|&(tau, k)| smooth_indicator(tau, tau, k) == 0.5);
    notes.push((midpoints, format!("indicator at threshold is 0.5: {midpoints}")));
    outcome(notes.iter().all(|n| n.0), notes.into_iter().map(|n| n.1).collect::<Vec<_>>().join(", "))
}

/// Origins 1 (demand 3) and 2 (demand 1), service destinations 10 and 11.
fn two_origin_demand() -> DemandTable {
    let trips = vec![
        Trip { origin: 1, destination: 10 },
        Trip { origin: 1, destination: 11 },
        Trip { origin: 2, destination: 10 },
        Trip { origin: 2, destination: 11 },
    ];
    let mut d = DemandTable::zeros(trips, 1);
    d.compliant[0] = vec![1.5, 1.5, 0.5, 0.5];
    d
}

fn times(values: [f64; 4]) -> TravelTimes {
    TravelTimes {
        entries: values
            .iter()
            .enumerate()
            .map(|(n, &time)| TimeEntry {
                party: Party::Mode(0),
                trip: n,
                time,
            })
            .collect(),
    }
}

fn sigma_cases() -> Outcome {
    let d = two_origin_demand();
    let exact = mem_params(vec![1.0], 1.0, IndicatorKind::Exact, 1.0);
    let service = &exact.services.services[0];
    let tau = 5.0;
    let s = |t: [f64; 4], p: &MemParams| sigma(&times(t), &d, 0, service, p, tau).unwrap();
    let all = s([1.0; 4], &exact);
    let none = s([9.0; 4], &exact);
    let mixed = s([1.0, 2.0, 9.0, 9.0], &exact);
    let exact_ok = all == 2.0 && none == 0.0 && mixed == 1.5;

    // sigmoid with k = 1000 against exact mode for times at least 0.01 from tau
    let smooth = mem_params(vec![1.0], 1.0, IndicatorKind::Sigmoid, 1e3);
    let mut worst: f64 = 0.0;
    let offsets = [-3.0, -0.5, -0.05, -0.01, 0.01, 0.02, 0.3, 4.0];
    for a in offsets {
        for b in offsets {
            let t = [tau + a, tau + b, tau - b, tau + a.abs()];
            worst = worst.max((s(t, &smooth) - s(t, &exact)).abs());
        }
    }
    outcome(
        exact_ok && worst <= 1e-3,
        format!("exact mode: all {all}, none {none}, weighted {mixed}; sigmoid vs exact worst {worst:.1e} (limit 1e-3)"),
    )
}

fn sweep_once(out: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_equiroute"))
        .args(["sweep", "preset:sample", "--grid-step", "0.05", "--ncr-list", "0.2,0.4,0.6,0.8", "--out"])
        .arg(out)
        .env_remove("EQUIROUTE_LOG")
        .output()
        .map_err(|e| format!("could not start the CLI: {e}"))?;
    if !status.status.success() {
        return Err(format!(
            "sweep exited with {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    Ok(start.elapsed())
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut elapsed = Vec::new();
    for d in &dirs {
        match sweep_once(d.path()) {
            Ok(t) => elapsed.push(t),
            Err(e) => return outcome(false, e),
        }
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap_or_default();
    let same = ["sweep.csv", "best.csv"]
        .iter()
        .all(|f| !read(&dirs[0], f).is_empty() && read(&dirs[0], f) == read(&dirs[1], f));
    let rows = String::from_utf8(read(&dirs[0], "sweep.csv")).unwrap_or_default().lines().count() - 1;
    let fast = elapsed.iter().all(|t| t.as_secs_f64() < 60.0);
    outcome(
        same && fast && rows == 84,
        format!(
            "{rows} rows, runs took {:.2} s and {:.2} s (limit 60 s each), tables identical: {same}",
            elapsed[0].as_secs_f64(),
            elapsed[1].as_secs_f64()
        ),
    )
}

fn feasibility() -> Outcome {
    let s = presets::sample();
    let sc = scenario_at(&s, Some(0.4), &DEFAULT_LEVEL_SPLIT).unwrap();
    let grid = simplex_grid(2, 0.05).unwrap();
    let cfg = GameConfig::default();
    let (best, records) = match maximize_mem(&sc, f64::INFINITY, &grid, &cfg, Execution::default()) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("unconstrained sweep failed: {e}")),
    };
    // independent scan: highest metric, ties to the smaller public weight
    let public = sc.modes.public();
    let top = records.iter().map(|r| r.mem).fold(f64::NEG_INFINITY, f64::max);
    let expect = records
        .iter()
        .filter(|r| r.mem == top)
        .min_by(|a, b| a.weights[public].total_cmp(&b.weights[public]))
        .expect("non-empty grid");
    let argmax_ok = best.as_slice() == expect.weights.as_slice();

    let lowest = records.iter().map(|r| r.delta_pv).fold(f64::INFINITY, f64::min);
    let limit = lowest - 1.0;
    let infeasible_ok = match maximize_mem(&sc, limit, &grid, &cfg, Execution::default()) {
        Err(Error::InfeasibleSweep { records: r, .. }) => r.len() == grid.len() && r.iter().all(|x| !x.feasible),
        _ => false,
    };
    outcome(
        argmax_ok && infeasible_ok,
        format!(
            "argmax {:?} vs scan {:?}; limit {limit:.4} below min delta_pv gives an infeasible sweep with all {} records: {infeasible_ok}",
            best.as_slice(),
            expect.weights,
            grid.len()
        ),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "system optimum matches brute force", Some(secs(5)), oracle_optimality),
        run(2, "gradient matches central differences", Some(secs(10)), gradient),
        run(3, "level-k paths match enumeration", Some(secs(30)), level_k),
        run(4, "chatter redistribution invariants", None, chatter),
        run(5, "MEM falls as noncompliance rises", Some(secs(60)), ncr_trend),
        run(6, "CPV/NPV time gap rises with public weight", None, weight_trend),
        run(7, "MEM closed forms", None, mem_closed_forms),
        run(8, "accessibility average", None, sigma_cases),
        run(9, "sweep determinism and runtime", None, determinism),
        run(10, "gap-limit feasibility", None, feasibility),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
