use equiroute::assignment::{all_or_nothing, objective, objective_gradient, solve_system_optimal, CompliantFlows, Weights};
use equiroute::network::LEVELS;
use equiroute::router::{best_response, npv_phase};
use equiroute::{DemandTable, Edge, Network, NodeId, Trip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles;

fn edge(from: NodeId, to: NodeId, t0: f64, capacity: f64) -> Edge {
    Edge {
        from,
        to,
        free_flow_time: t0,
        capacity,
    }
}

/// 4 nodes, one mode; trip 1->4 has three simple paths and trip 2->4 two.
pub fn diamond() -> (Network, DemandTable, Vec<f64>) {
    let net = Network::new(
        vec![1, 2, 3, 4],
        vec![
            edge(1, 2, 1.0, 3.0),
            edge(1, 3, 2.0, 4.0),
            edge(2, 3, 0.5, 2.0),
            edge(2, 4, 2.0, 3.0),
            edge(3, 4, 1.0, 3.0),
        ],
        vec![1, 2],
        vec![4],
    );
    let mut d = DemandTable::zeros(
        vec![
            Trip { origin: 1, destination: 4 },
            Trip { origin: 2, destination: 4 },
        ],
        1,
    );
    d.compliant[0] = vec![6.0, 3.0];
    (net, d, vec![0.5, 0.0, 0.0, 1.0, 0.0])
}

/// Solver objective and brute-force minimum on [`diamond`].
pub fn diamond_objectives() -> (f64, f64, bool) {
    let (net, d, npv) = diamond();
    let paths: Vec<Vec<Vec<usize>>> = d
        .trips
        .iter()
        .map(|t| oracles::simple_paths(&net, net.node_index(t.origin).unwrap(), net.node_index(t.destination).unwrap()))
        .collect();
    assert_eq!(paths.iter().map(Vec::len).collect::<Vec<_>>(), [3, 2]);
    let oracle = oracles::brute_force_minimum(&net, &paths, &d.compliant[0], &npv, 60);
    let (x, rep) = solve_system_optimal(&net, &d, &Weights::uniform(1), &npv).unwrap();
    (objective(&net, &x, &Weights::uniform(1), &npv), oracle, rep.converged)
}

pub fn random_weights(rng: &mut ChaCha8Rng, modes: usize) -> Weights {
    let raw: Vec<f64> = (0..modes).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    Weights::new(raw.iter().map(|v| v / s).collect()).unwrap()
}

/// A feasible state: a random convex combination of three all-or-nothing
/// loads under random positive costs.
pub fn random_state(rng: &mut ChaCha8Rng, net: &Network, d: &DemandTable) -> CompliantFlows {
    let modes = d.mode_count();
    let mut out = CompliantFlows::zeros(net.edge_count(), modes, d.trip_count());
    let mut remaining = 1.0;
    for k in 0..3 {
        let costs: Vec<Vec<f64>> = (0..modes)
            .map(|_| (0..net.edge_count()).map(|_| rng.random_range(0.1..5.0)).collect())
            .collect();
        let load = all_or_nothing(net, &costs, d).unwrap();
        let share = if k == 2 { remaining } else { remaining * rng.random_range(0.2..0.8) };
        remaining -= share;
        for m in 0..modes {
            for n in 0..d.trip_count() {
                for e in 0..net.edge_count() {
                    out.set(e, m, n, out.get(e, m, n) + share * load.get(e, m, n));
                }
            }
        }
    }
    out
}

/// Largest relative mismatch between the analytic gradient and central
/// differences of the objective over every (edge, mode) of one trip.
pub fn gradient_mismatch(net: &Network, x: &CompliantFlows, w: &Weights, npv: &[f64], trip: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..x.mode_count() {
        for e in 0..net.edge_count() {
            let v = x.get(e, m, trip);
            let h = 1e-4 * v.abs().max(1.0);
            let mut plus = x.clone();
            plus.set(e, m, trip, v + h);
            let mut minus = x.clone();
            minus.set(e, m, trip, v - h);
            let fd = (objective(net, &plus, w, npv) - objective(net, &minus, w, npv)) / (2.0 * h);
            let g = objective_gradient(net, x, w, npv, e, m);
            worst = worst.max((fd - g).abs() / g.abs());
        }
    }
    worst
}

/// Worst gradient mismatch over `states` random feasible states of
/// `scenario`, each with random weights, noncompliant flows and trip.
pub fn gradient_suite(net: &Network, d: &DemandTable, states: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let x = random_state(&mut rng, net, d);
        x.check_feasible(net, d, 1e-9).unwrap();
        let w = random_weights(&mut rng, d.mode_count());
        let npv: Vec<f64> = (0..net.edge_count()).map(|_| rng.random_range(0.0..3.0)).collect();
        let trip = rng.random_range(0..d.trip_count());
        worst = worst.max(gradient_mismatch(net, &x, &w, &npv, trip));
    }
    worst
}

/// Random graphs of 2 to 6 nodes with random compliant flows and random
/// noncompliant demand on up to three trips. Returns the number of
/// (graph, level, trip) paths compared and the mismatches found.
pub fn level_k_suite(graphs: usize, seed: u64) -> (usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for g in 0..graphs {
        let nodes = rng.random_range(2..=6);
        let net = oracles::random_graph(&mut rng, nodes);
        let mut trips = vec![Trip { origin: 1, destination: nodes as u32 }];
        for _ in 0..rng.random_range(0..3) {
            let a = rng.random_range(1..=nodes as u32);
            let b = rng.random_range(1..=nodes as u32);
            // forward along the spine is always reachable
            if a < b && !trips.contains(&Trip { origin: a, destination: b }) {
                trips.push(Trip { origin: a, destination: b });
            }
        }
        let mut d = DemandTable::zeros(trips, 1);
        for level in 0..LEVELS {
            for n in 0..d.trip_count() {
                d.noncompliant[level][n] = if rng.random_bool(0.8) { rng.random_range(0.5..4.0) } else { 0.0 };
            }
        }
        let x: Vec<f64> = (0..net.edge_count()).map(|_| rng.random_range(0.0..6.0)).collect();

        let oracle = oracles::level_k_paths(&net, &x, &d);
        let (assignment, _) = npv_phase(&net, &x, &d).unwrap();
        for (level, per_trip) in oracle.iter().enumerate() {
            for (n, expect) in per_trip.iter().enumerate() {
                let got = assignment.route(level, n).map(|r| r.path.edges.clone());
                compared += 1;
                if got.as_ref() != expect.as_ref() {
                    mismatches.push(format!("graph {g}, level {level}, trip {n}: router {got:?}, enumeration {expect:?}"));
                }
            }
        }

        // level 0 sees the compliant flows alone
        let trip = d.trips[0];
        let direct = best_response(&net, &x, &vec![0.0; net.edge_count()], &trip).unwrap();
        let times: Vec<f64> = (0..net.edge_count()).map(|e| oracles::link_time(&net, e, x[e])).collect();
        let (cost, path) = oracles::cheapest_path(&net, &times, trip.origin, trip.destination).unwrap();
        compared += 1;
        if direct.edges != path || (direct.cost - cost).abs() > 1e-9 * cost {
            mismatches.push(format!("graph {g}: direct best response {:?} vs {path:?}", direct.edges));
        }
    }
    (compared, mismatches)
}
