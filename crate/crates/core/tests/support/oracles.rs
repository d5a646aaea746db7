//! Reference computations for the integration and acceptance tests. None of
//! them call the solver, router or metric code under test; they rebuild each
//! quantity from the network data by enumeration or direct formulas.

use equiroute::{DemandTable, Network, NodeId};
use rand::Rng;

/// `t0 * (1 + 0.15 (v / c)^4)` written out directly.
pub fn bpr(t0: f64, capacity: f64, flow: f64) -> f64 {
    t0 * (1.0 + 0.15 * (flow / capacity).powi(4))
}

pub fn link_time(network: &Network, e: usize, flow: f64) -> f64 {
    let edge = network.edge(e);
    bpr(edge.free_flow_time, edge.capacity, flow)
}

/// Every simple directed path from node index `o` to `d`, as edge lists in
/// travel order, by exhaustive depth-first search.
pub fn simple_paths(network: &Network, o: usize, d: usize) -> Vec<Vec<usize>> {
    fn walk(network: &Network, v: usize, d: usize, seen: &mut Vec<bool>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if v == d {
            out.push(path.clone());
            return;
        }
        for e in 0..network.edge_count() {
            if network.tail(e) != v {
                continue;
            }
            let w = network.head(e);
            if seen[w] {
                continue;
            }
            seen[w] = true;
            path.push(e);
            walk(network, w, d, seen, path, out);
            path.pop();
            seen[w] = false;
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; network.node_count()];
    seen[o] = true;
    walk(network, o, d, &mut seen, &mut Vec::new(), &mut out);
    out
}

pub fn path_nodes(network: &Network, origin: NodeId, edges: &[usize]) -> Vec<NodeId> {
    let mut nodes = vec![origin];
    nodes.extend(edges.iter().map(|&e| network.edge(e).to));
    nodes
}

/// Cheapest simple path under `costs` by enumeration, ties broken by the
/// lexicographically smallest node-id sequence. Also returns the minimum
/// cost. `None` when `destination` is unreachable.
pub fn cheapest_path(network: &Network, costs: &[f64], origin: NodeId, destination: NodeId) -> Option<(f64, Vec<usize>)> {
    let o = network.node_index(origin)?;
    let d = network.node_index(destination)?;
    let paths = simple_paths(network, o, d);
    let cost = |p: &Vec<usize>| p.iter().map(|&e| costs[e]).sum::<f64>();
    let best = paths.iter().map(cost).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let tol = 1e-12 * best.max(1.0);
    paths
        .into_iter()
        .filter(|p| cost(p) <= best + tol)
        .min_by_key(|p| path_nodes(network, origin, p))
        .map(|p| (best, p))
}

/// Level-by-level noncompliant routing by enumeration: level `l` drivers of
/// every trip face the compliant totals plus the flows of levels below `l`.
/// Returns `paths[l][n]` for positive demand.
pub fn level_k_paths(network: &Network, compliant_totals: &[f64], demand: &DemandTable) -> Vec<Vec<Option<Vec<usize>>>> {
    let m = network.edge_count();
    let mut lower = vec![0.0; m];
    let mut out = Vec::new();
    for level in 0..3 {
        let times: Vec<f64> = (0..m).map(|e| link_time(network, e, compliant_totals[e] + lower[e])).collect();
        let mut this_level = Vec::new();
        let mut added = vec![0.0; m];
        for (n, trip) in demand.trips.iter().enumerate() {
            let q = demand.noncompliant[level][n];
            if q <= 0.0 {
                this_level.push(None);
                continue;
            }
            let (_, p) = cheapest_path(network, &times, trip.origin, trip.destination).expect("reachable trip");
            for &e in &p {
                added[e] += q;
            }
            this_level.push(Some(p));
        }
        for e in 0..m {
            lower[e] += added[e];
        }
        out.push(this_level);
    }
    out
}

/// The one-mode system objective `sum_e t(x_e + q_e) x_e` over path flows:
/// `paths[n]` lists trip `n`'s candidate paths and `flows[n]` their flows.
pub fn path_objective(network: &Network, paths: &[Vec<Vec<usize>>], flows: &[Vec<f64>], npv: &[f64]) -> f64 {
    let mut x = vec![0.0; network.edge_count()];
    for (trip_paths, trip_flows) in paths.iter().zip(flows) {
        for (p, &h) in trip_paths.iter().zip(trip_flows) {
            for &e in p {
                x[e] += h;
            }
        }
    }
    (0..x.len()).map(|e| link_time(network, e, x[e] + npv[e]) * x[e]).sum()
}

/// Points of the simplex `{h >= 0, sum h = total}` in `k` coordinates on a
/// grid of `steps` intervals.
fn simplex_points(k: usize, steps: usize, total: f64) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, total: f64, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(total * left as f64 / steps as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(total * i as f64 / steps as f64);
            rec(k - 1, left - i, steps, total, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, total, &mut Vec::new(), &mut out);
    out
}

/// Brute-force minimum of the one-mode objective over path flows: a full
/// grid over every trip's path simplex, then a pattern search that moves
/// flow between pairs of paths with shrinking steps.
pub fn brute_force_minimum(network: &Network, paths: &[Vec<Vec<usize>>], demands: &[f64], npv: &[f64], steps: usize) -> f64 {
    let grids: Vec<Vec<Vec<f64>>> = paths
        .iter()
        .zip(demands)
        .map(|(p, &a)| simplex_points(p.len(), steps, a))
        .collect();
    let mut best_flows: Vec<Vec<f64>> = grids.iter().map(|g| g[0].clone()).collect();
    let mut best = f64::INFINITY;
    let mut index = vec![0usize; grids.len()];
    loop {
        let flows: Vec<Vec<f64>> = index.iter().zip(&grids).map(|(&i, g)| g[i].clone()).collect();
        let v = path_objective(network, paths, &flows, npv);
        if v < best {
            best = v;
            best_flows = flows;
        }
        // odometer over the product of grids
        let mut k = 0;
        loop {
            if k == index.len() {
                return polish(network, paths, demands, npv, best_flows, best);
            }
            index[k] += 1;
            if index[k] < grids[k].len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

fn polish(network: &Network, paths: &[Vec<Vec<usize>>], demands: &[f64], npv: &[f64], mut flows: Vec<Vec<f64>>, mut best: f64) -> f64 {
    let mut step = demands.iter().cloned().fold(0.0, f64::max) * 0.05;
    while step > 1e-12 {
        let mut improved = false;
        for n in 0..paths.len() {
            for i in 0..paths[n].len() {
                for j in 0..paths[n].len() {
                    if i == j {
                        continue;
                    }
                    let moved = step.min(flows[n][i]);
                    if moved <= 0.0 {
                        continue;
                    }
                    let mut trial = flows.clone();
                    trial[n][i] -= moved;
                    trial[n][j] += moved;
                    let v = path_objective(network, paths, &trial, npv);
                    if v < best {
                        best = v;
                        flows = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Minimiser of `x t_a(x) + (D - x) t_b(D - x)` for two routes with free-flow
/// times `ta`, `tb` and a common capacity: bisection on the difference of
/// marginal costs `t0 (1 + 0.75 (v / c)^4)`.
pub fn two_route_split(ta: f64, tb: f64, capacity: f64, total: f64) -> f64 {
    let marginal = |t0: f64, v: f64| t0 * (1.0 + 0.75 * (v / capacity).powi(4));
    let excess = |x: f64| marginal(ta, x) - marginal(tb, total - x);
    if excess(total) <= 0.0 {
        return total;
    }
    if excess(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, total);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Spearman rank correlation of `values` with their positions (no ties
/// expected).
pub fn spearman_with_index(values: &[f64]) -> f64 {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut rank = vec![0.0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as f64;
    }
    let d2: f64 = rank.iter().enumerate().map(|(i, r)| (r - i as f64).powi(2)).sum();
    let n = n as f64;
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// A random directed graph on `nodes` nodes (ids 1..=nodes) that contains a
/// path from node 1 to node `nodes`, with random free-flow times and
/// capacities.
pub fn random_graph<R: Rng>(rng: &mut R, nodes: usize) -> Network {
    use equiroute::Edge;
    let ids: Vec<NodeId> = (1..=nodes as NodeId).collect();
    let mut edges = Vec::new();
    for a in 1..=nodes as NodeId {
        for b in 1..=nodes as NodeId {
            // a Hamiltonian spine guarantees reachability
            let spine = b == a + 1;
            if a != b && (spine || rng.random_bool(0.45)) {
                edges.push(Edge {
                    from: a,
                    to: b,
                    free_flow_time: rng.random_range(0.5..3.0),
                    capacity: rng.random_range(2.0..8.0),
                });
            }
        }
    }
    Network::new(ids, edges, vec![1], vec![nodes as NodeId])
}
