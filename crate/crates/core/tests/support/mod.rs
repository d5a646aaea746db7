//! Shared by the integration tests and the acceptance suite: `oracles`
//! recomputes quantities independently, `suites` runs the code under test
//! against them.

#![allow(dead_code)]

pub mod oracles;
pub mod suites;
