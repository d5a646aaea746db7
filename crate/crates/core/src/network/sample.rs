//! Deterministic 12-node, 54-edge sample network with 2 origins, 5
//! destinations and a trip for every origin-destination pair.
//!
//! Layout is a 3x4 grid (node id `4 * row + col + 1`) with bidirectional
//! street links and ten bidirectional diagonal shortcuts. Topology, link
//! times and capacities do not depend on the seed; only demand rates do.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Bpr, DemandTable, Edge, ModeSet, Network, NodeId, Scenario, Trip};
use crate::equity::MemParams;

const ROWS: usize = 3;
const COLS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    /// Inclusive range for the per-trip public and private demand draws.
    pub demand_range: (f64, f64),
    /// Share of private demand that is noncompliant.
    pub ncr: f64,
    /// Split of noncompliant demand across levels 0, 1, 2.
    pub level_split: [f64; 3],
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            demand_range: (1.0, 5.0),
            ncr: 0.2,
            level_split: [0.5, 0.3, 0.2],
        }
    }
}

fn id(row: usize, col: usize) -> NodeId {
    (row * COLS + col + 1) as NodeId
}

fn link(edges: &mut Vec<Edge>, a: NodeId, b: NodeId, t0: f64, capacity: f64) {
    for (from, to) in [(a, b), (b, a)] {
        edges.push(Edge {
            from,
            to,
            free_flow_time: t0,
            capacity,
        });
    }
}

fn sample_topology() -> Network {
    let nodes: Vec<NodeId> = (0..ROWS * COLS).map(|k| k as NodeId + 1).collect();
    let mut edges = Vec::with_capacity(54);

    // streets: 9 horizontal + 8 vertical links, 34 directed edges
    for r in 0..ROWS {
        for c in 0..COLS - 1 {
            let t0 = 1.0 + 0.2 * ((r + c) % 3) as f64;
            link(&mut edges, id(r, c), id(r, c + 1), t0, 10.0);
        }
    }
    for r in 0..ROWS - 1 {
        for c in 0..COLS {
            let t0 = 1.2 + 0.2 * ((r + 2 * c) % 3) as f64;
            link(&mut edges, id(r, c), id(r + 1, c), t0, 8.0);
        }
    }
    // shortcuts: both diagonals of every cell except two, 20 directed edges
    for r in 0..ROWS - 1 {
        for c in 0..COLS - 1 {
            link(&mut edges, id(r, c), id(r + 1, c + 1), 1.7, 6.0);
            if !matches!((r, c), (0, 1) | (1, 2)) {
                link(&mut edges, id(r, c + 1), id(r + 1, c), 1.7, 6.0);
            }
        }
    }
    debug_assert_eq!(edges.len(), 54);

    let origins = vec![id(0, 0), id(2, 0)];
    let destinations = vec![id(0, 2), id(1, 1), id(1, 3), id(2, 2), id(2, 3)];
    Network::with_bpr(nodes, edges, origins, destinations, Bpr::default())
}

/// Sample network and demand for `seed` with the default [`SampleConfig`].
/// Demand uses two modes, public transport and compliant private vehicles.
pub fn generate_sample_network(seed: u64) -> (Network, DemandTable) {
    generate_sample_with(seed, &SampleConfig::default())
}

pub fn generate_sample_with(seed: u64, config: &SampleConfig) -> (Network, DemandTable) {
    let network = sample_topology();
    let trips: Vec<Trip> = network
        .origins()
        .iter()
        .flat_map(|&o| {
            network.destinations().iter().map(move |&d| Trip {
                origin: o,
                destination: d,
            })
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = config.demand_range;
    let mut draw = || round3(rng.random_range(lo..=hi));

    let mut demand = DemandTable::zeros(trips, 2);
    for n in 0..demand.trip_count() {
        let public = draw();
        let private = draw();
        demand.compliant[0][n] = public;
        demand.compliant[1][n] = round3(private * (1.0 - config.ncr));
        for (l, share) in config.level_split.iter().enumerate() {
            demand.noncompliant[l][n] = round3(private * config.ncr * share);
        }
    }
    (network, demand)
}

/// The sample network wrapped as a complete scenario with default MEM
/// parameters.
pub fn sample_scenario(seed: u64) -> Scenario {
    let (network, demand) = generate_sample_network(seed);
    let modes = ModeSet::new(vec!["public".into(), "cpv".into()]).expect("two distinct modes");
    let mem = MemParams::defaults(&modes, &network);
    Scenario {
        network,
        demand,
        modes,
        mem,
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}
