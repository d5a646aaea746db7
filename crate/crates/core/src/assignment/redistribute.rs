//! Re-splitting compliant flow across modes and trips with the per-edge
//! compliant totals pinned.
//!
//! With totals fixed, every link time is fixed at `t(f_e + q_e)` and the
//! weighted objective becomes linear, so the problem is an arc-flow LP
//! solved exactly with [`super::simplex`].

use super::simplex::{self, LinearProgram};
use super::{CompliantFlows, Weights};
use crate::error::{Error, Result};
use crate::network::{DemandTable, Network};

const TOTALS_TOL: f64 = 1e-9;

/// `sum_m w_m sum_e times[e] * x_{e,m}` with link times held fixed.
pub fn frozen_objective(flows: &CompliantFlows, weights: &Weights, times: &[f64]) -> f64 {
    (0..flows.mode_count())
        .map(|m| {
            let w = weights.get(m);
            if w == 0.0 {
                return 0.0;
            }
            w * flows
                .mode_totals(m)
                .iter()
                .zip(times)
                .map(|(x, t)| x * t)
                .sum::<f64>()
        })
        .sum()
}

/// Minimises the frozen-time weighted objective over compliant flows whose
/// per-edge totals equal `fixed_totals`.
pub fn redistribute_fixed_totals(
    network: &Network,
    demand: &DemandTable,
    weights: &Weights,
    fixed_totals: &[f64],
    npv: &[f64],
) -> Result<CompliantFlows> {
    let edges = network.edge_count();
    if fixed_totals.len() != edges || npv.len() != edges {
        return Err(Error::InvalidInput("totals and npv flows need one entry per edge".into()));
    }
    if let Some((e, &f)) = fixed_totals.iter().enumerate().find(|(_, &f)| !(f >= 0.0)) {
        return Err(Error::NegativeFlow { edge: e, flow: f });
    }
    let times: Vec<f64> = (0..edges)
        .map(|e| network.bpr_time(e, fixed_totals[e] + npv[e]))
        .collect::<Result<_>>()?;

    // one variable per (commodity, usable edge); a commodity never enters its
    // origin nor leaves its destination
    struct Var {
        mode: usize,
        trip: usize,
        edge: usize,
    }
    let mut vars = Vec::new();
    let mut commodities = Vec::new();
    for m in 0..demand.mode_count() {
        for (n, trip) in demand.trips.iter().enumerate() {
            if demand.compliant_rate(m, n) <= 0.0 {
                continue;
            }
            let o = network.node_index(trip.origin).expect("validated trip");
            let d = network.node_index(trip.destination).expect("validated trip");
            let first = vars.len();
            for e in 0..edges {
                if network.head(e) != o && network.tail(e) != d {
                    vars.push(Var { mode: m, trip: n, edge: e });
                }
            }
            commodities.push((m, n, o, d, first, vars.len()));
        }
    }
    let cols = vars.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &(m, n, o, d, first, last) in &commodities {
        for v in 0..network.node_count() {
            if v == d {
                continue;
            }
            let mut row = vec![0.0; cols];
            for (k, var) in vars[first..last].iter().enumerate() {
                if network.tail(var.edge) == v {
                    row[first + k] += 1.0;
                }
                if network.head(var.edge) == v {
                    row[first + k] -= 1.0;
                }
            }
            a.push(row);
            b.push(if v == o { demand.compliant_rate(m, n) } else { 0.0 });
        }
    }
    for e in 0..edges {
        let mut row = vec![0.0; cols];
        for (k, var) in vars.iter().enumerate() {
            if var.edge == e {
                row[k] = 1.0;
            }
        }
        a.push(row);
        b.push(fixed_totals[e]);
    }
    let c: Vec<f64> = vars
        .iter()
        .map(|v| weights.get(v.mode) * times[v.edge])
        .collect();

    let sol = simplex::solve(&LinearProgram { a, b, c })
        .map_err(|e| Error::InfeasibleLp(e.to_string()))?;

    let mut flows = CompliantFlows::zeros(edges, demand.mode_count(), demand.trip_count());
    for (var, &x) in vars.iter().zip(&sol.x) {
        flows.set(var.edge, var.mode, var.trip, x);
    }

    let totals = flows.edge_totals();
    if let Some(e) = (0..edges).find(|&e| (totals[e] - fixed_totals[e]).abs() > TOTALS_TOL) {
        return Err(Error::InfeasibleLp(format!(
            "edge #{e} total {} differs from the fixed {}",
            totals[e], fixed_totals[e]
        )));
    }
    flows.check_feasible(network, demand, 1e-9)?;
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{objective, solve_system_optimal};
    use crate::network::{Edge, Trip};

    /// Two disjoint two-edge routes between 1 and 2: fast via 3, slow via 4.
    fn two_routes() -> Network {
        let links = [(1, 3, 1.0), (3, 2, 1.0), (1, 4, 2.0), (4, 2, 2.0)];
        Network::new(
            vec![1, 2, 3, 4],
            links
                .iter()
                .map(|&(from, to, t0)| Edge { from, to, free_flow_time: t0, capacity: 10.0 })
                .collect(),
            vec![1],
            vec![2],
        )
    }

    fn two_mode_demand(a: f64, b: f64) -> DemandTable {
        let mut d = DemandTable::zeros(vec![Trip { origin: 1, destination: 2 }], 2);
        d.compliant[0][0] = a;
        d.compliant[1][0] = b;
        d
    }

    #[test]
    fn favoured_mode_moves_to_the_fast_route() {
        let net = two_routes();
        let d = two_mode_demand(3.0, 3.0);
        let mut input = CompliantFlows::zeros(4, 2, 1);
        // mode A (favoured) on the slow route, B on the fast one
        for e in [2, 3] {
            input.set(e, 0, 0, 3.0);
        }
        for e in [0, 1] {
            input.set(e, 1, 0, 3.0);
        }
        let w = Weights::new(vec![0.9, 0.1]).unwrap();
        let totals = input.edge_totals();
        let out = redistribute_fixed_totals(&net, &d, &w, &totals, &[0.0; 4]).unwrap();
        assert_eq!(out.edge_totals(), totals);
        for e in [0, 1] {
            assert!((out.get(e, 0, 0) - 3.0).abs() < 1e-12);
        }
        for e in [2, 3] {
            assert!((out.get(e, 1, 0) - 3.0).abs() < 1e-12);
        }
        let times = net.link_times(&totals);
        assert!(frozen_objective(&out, &w, &times) < frozen_objective(&input, &w, &times));
    }

    #[test]
    fn single_mode_keeps_its_objective() {
        let net = two_routes();
        let d = {
            let mut d = DemandTable::zeros(vec![Trip { origin: 1, destination: 2 }], 1);
            d.compliant[0][0] = 12.0;
            d
        };
        let w = Weights::uniform(1);
        let q = [1.0, 0.0, 0.0, 2.0];
        let (x, _) = solve_system_optimal(&net, &d, &w, &q).unwrap();
        let out = redistribute_fixed_totals(&net, &d, &w, &x.edge_totals(), &q).unwrap();
        let a = objective(&net, &x, &w, &q);
        let b = objective(&net, &out, &w, &q);
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn equal_weights_keep_the_objective() {
        let net = two_routes();
        let d = two_mode_demand(2.0, 5.0);
        let w = Weights::uniform(2);
        let (x, _) = solve_system_optimal(&net, &d, &w, &[0.0; 4]).unwrap();
        let totals = x.edge_totals();
        let out = redistribute_fixed_totals(&net, &d, &w, &totals, &[0.0; 4]).unwrap();
        let times = net.link_times(&totals);
        let (a, b) = (frozen_objective(&x, &w, &times), frozen_objective(&out, &w, &times));
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn inconsistent_totals_are_infeasible() {
        let net = two_routes();
        let d = two_mode_demand(2.0, 2.0);
        let err = redistribute_fixed_totals(&net, &d, &Weights::uniform(2), &[1.0, 1.0, 1.0, 1.0], &[0.0; 4])
            .unwrap_err();
        assert!(matches!(err, Error::InfeasibleLp(_)), "{err:?}");
    }
}
