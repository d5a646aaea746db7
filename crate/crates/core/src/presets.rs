//! Scenarios shipped with the crate.
//!
//! `sample` is the generated 12-node network for [`SAMPLE_SEED`]. `chatter` is a
//! single origin-destination pair with two routes on which play cycles;
//! with [`chatter_weights`] the redistribution that breaks the cycle lowers
//! both the public-transport time and the weighted objective.

use crate::assignment::Weights;
use crate::network::{load_scenario, ModeSet, Scenario};

pub const SAMPLE_SEED: u64 = 6;
pub const SAMPLE: &str = include_str!("../presets/sample.json");
pub const CHATTER: &str = include_str!("../presets/chatter.json");

pub fn sample() -> Scenario {
    load_scenario(SAMPLE).expect("shipped sample preset is valid")
}

pub fn chatter() -> Scenario {
    load_scenario(CHATTER).expect("shipped chatter preset is valid")
}

/// Weight on public transport used by the chatter demonstration.
pub const DEMO_PUBLIC_WEIGHT: f64 = 0.7;

/// [`DEMO_PUBLIC_WEIGHT`] on the public mode, the rest split evenly.
pub fn demo_weights(modes: &ModeSet) -> Weights {
    let n = modes.len();
    if n == 1 {
        return Weights::uniform(1);
    }
    let rest = (1.0 - DEMO_PUBLIC_WEIGHT) / (n - 1) as f64;
    let public = modes.public();
    Weights::new((0..n).map(|m| if m == public { DEMO_PUBLIC_WEIGHT } else { rest }).collect())
        .expect("weights sum to one")
}

pub fn chatter_weights() -> Weights {
    demo_weights(&chatter().modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::iterate_demo;
    use crate::game::{GameConfig, GameStatus, TimeFormula};
    use crate::network::{sample_scenario, serialize_scenario};

    #[test]
    fn sample_preset_matches_generator() {
        assert_eq!(serialize_scenario(&sample()), SAMPLE);
        assert_eq!(sample(), sample_scenario(SAMPLE_SEED));
    }

    #[test]
    fn chatter_preset_cycles_and_resolves() {
        let s = chatter();
        for formula in [TimeFormula::Paper, TimeFormula::Path] {
            let config = GameConfig {
                time_formula: formula,
                ..GameConfig::default()
            };
            let demo = iterate_demo(&s, &chatter_weights(), &config).unwrap();
            assert_eq!(demo.result.status, GameStatus::ChatterResolved);
            let checks = demo.checks.unwrap();
            assert!(checks.all(), "{formula:?}: {checks:?}");
        }
    }
}
