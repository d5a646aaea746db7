use thiserror::Error;

use crate::equity::SweepRecord;
use crate::network::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error("invalid scenario ({} violation(s)): {}", .0.len(), join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("negative flow {flow} on edge #{edge}")]
    NegativeFlow { edge: usize, flow: f64 },

    #[error("no path from node {origin} to node {destination}")]
    Unreachable { origin: u32, destination: u32 },

    #[error("no feasible flow for trip #{trip} ({origin} -> {destination})")]
    InfeasibleTrip {
        trip: usize,
        origin: u32,
        destination: u32,
    },

    #[error("linear program infeasible: {0}")]
    InfeasibleLp(String),

    #[error("noncompliant paths changed after redistribution: {0}")]
    RedistributionShift(String),

    #[error("no weight point satisfies the time-gap limit {gap_limit} ({} points evaluated)", records.len())]
    InfeasibleSweep {
        gap_limit: f64,
        records: Vec<SweepRecord>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
