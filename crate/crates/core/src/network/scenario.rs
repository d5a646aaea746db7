//! Scenario documents (JSON) and their validated in-memory form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Bpr, DemandTable, Edge, ModeSet, Network, NodeId, Trip, Violation, LEVELS};
use crate::equity::{IndicatorKind, MemParams, Service, ServiceMap};
use crate::error::{Error, Result};

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    pub demand: DemandTable,
    pub modes: ModeSet,
    pub mem: MemParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub from: NodeId,
    pub to: NodeId,
    pub t0: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripDoc {
    pub origin: NodeId,
    pub dest: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandDoc {
    /// mode name -> trip index -> rate
    #[serde(default)]
    pub compliant: BTreeMap<String, BTreeMap<usize, f64>>,
    /// level -> trip index -> rate
    #[serde(default)]
    pub noncompliant: BTreeMap<usize, BTreeMap<usize, f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cost: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub priority: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub threshold: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator: Option<IndicatorKind>,
    /// service name -> destinations supplying it
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub services: Option<BTreeMap<String, Vec<NodeId>>>,
}

/// On-disk scenario schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeDoc>,
    pub origins: Vec<NodeId>,
    pub destinations: Vec<NodeId>,
    pub trips: Vec<TripDoc>,
    #[serde(default)]
    pub demand: DemandDoc,
    pub modes: Vec<String>,
    #[serde(default)]
    pub mem: MemDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bpr: Option<Bpr>,
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario> {
    let doc: ScenarioDoc =
        serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    Scenario::from_doc(doc)
}

/// Pretty-printed JSON document; [`load_scenario`] inverts it.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(&scenario.to_doc())
        .expect("scenario documents always serialize");
    s.push('\n');
    s
}

impl Scenario {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Self> {
        let mut violations = Vec::new();

        let edges = doc
            .edges
            .iter()
            .map(|e| Edge {
                from: e.from,
                to: e.to,
                free_flow_time: e.t0,
                capacity: e.capacity,
            })
            .collect();
        let network = Network::with_bpr(
            doc.nodes.clone(),
            edges,
            doc.origins.clone(),
            doc.destinations.clone(),
            doc.bpr.unwrap_or_default(),
        );
        violations.extend(network.validate());

        let modes = match ModeSet::new(doc.modes.clone()) {
            Ok(m) => m,
            Err(e) => {
                violations.push(Violation::Modes {
                    detail: e.to_string(),
                });
                return Err(Error::Validation(violations));
            }
        };

        let trips: Vec<Trip> = doc
            .trips
            .iter()
            .map(|t| Trip {
                origin: t.origin,
                destination: t.dest,
            })
            .collect();
        let mut demand = DemandTable::zeros(trips, modes.len());
        let n = demand.trip_count();
        for (mode, rates) in &doc.demand.compliant {
            let Some(m) = modes.index_of(mode) else {
                violations.push(Violation::Demand {
                    detail: format!("unknown mode '{mode}'"),
                });
                continue;
            };
            for (&trip, &rate) in rates {
                if trip >= n {
                    violations.push(Violation::Demand {
                        detail: format!("mode '{mode}' references trip #{trip} of {n}"),
                    });
                } else {
                    demand.compliant[m][trip] = rate;
                }
            }
        }
        for (&level, rates) in &doc.demand.noncompliant {
            if level >= LEVELS {
                violations.push(Violation::Demand {
                    detail: format!("level {level} outside 0..={}", LEVELS - 1),
                });
                continue;
            }
            for (&trip, &rate) in rates {
                if trip >= n {
                    violations.push(Violation::Demand {
                        detail: format!("level {level} references trip #{trip} of {n}"),
                    });
                } else {
                    demand.noncompliant[level][trip] = rate;
                }
            }
        }
        violations.extend(demand.validate(&network));

        let mem = mem_from_doc(&doc.mem, &modes, &network, &mut violations);

        if violations.is_empty() {
            Ok(Scenario {
                network,
                demand,
                modes,
                mem,
            })
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn to_doc(&self) -> ScenarioDoc {
        let net = &self.network;
        let mut compliant = BTreeMap::new();
        for (m, row) in self.demand.compliant.iter().enumerate() {
            let rates: BTreeMap<usize, f64> = nonzero(row);
            if !rates.is_empty() {
                compliant.insert(self.modes.name(m).to_string(), rates);
            }
        }
        let mut noncompliant = BTreeMap::new();
        for (l, row) in self.demand.noncompliant.iter().enumerate() {
            let rates = nonzero(row);
            if !rates.is_empty() {
                noncompliant.insert(l, rates);
            }
        }
        let mem = &self.mem;
        let by_mode = |v: &[f64]| -> BTreeMap<String, f64> {
            v.iter()
                .enumerate()
                .map(|(m, &c)| (self.modes.name(m).to_string(), c))
                .collect()
        };
        let threshold = mem
            .threshold
            .iter()
            .enumerate()
            .filter_map(|(m, t)| t.map(|t| (self.modes.name(m).to_string(), t)))
            .collect();
        let services = mem
            .services
            .services
            .iter()
            .map(|s| (s.name.clone(), s.destinations.clone()))
            .collect();
        let priority = mem
            .services
            .services
            .iter()
            .zip(&mem.priority)
            .map(|(s, &b)| (s.name.clone(), b))
            .collect();

        ScenarioDoc {
            nodes: net.nodes().to_vec(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    from: e.from,
                    to: e.to,
                    t0: e.free_flow_time,
                    capacity: e.capacity,
                })
                .collect(),
            origins: net.origins().to_vec(),
            destinations: net.destinations().to_vec(),
            trips: self
                .demand
                .trips
                .iter()
                .map(|t| TripDoc {
                    origin: t.origin,
                    dest: t.destination,
                })
                .collect(),
            demand: DemandDoc {
                compliant,
                noncompliant,
            },
            modes: self.modes.names().to_vec(),
            mem: MemDoc {
                kappa: Some(mem.kappa),
                cost: by_mode(&mem.cost),
                priority,
                threshold,
                slope: Some(mem.slope),
                indicator: Some(mem.indicator),
                services: Some(services),
            },
            bpr: (*net.bpr() != Bpr::default()).then_some(*net.bpr()),
        }
    }
}

fn nonzero(row: &[f64]) -> BTreeMap<usize, f64> {
    row.iter()
        .enumerate()
        .filter(|(_, &r)| r != 0.0)
        .map(|(n, &r)| (n, r))
        .collect()
}

fn mem_from_doc(
    doc: &MemDoc,
    modes: &ModeSet,
    network: &Network,
    violations: &mut Vec<Violation>,
) -> MemParams {
    let mut mem = MemParams::defaults(modes, network);
    let mut bad = |detail: String| violations.push(Violation::Mem { detail });

    if let Some(k) = doc.kappa {
        if !(k >= 0.0) || !k.is_finite() {
            bad(format!("kappa must be finite and >= 0, got {k}"));
        }
        mem.kappa = k;
    }
    if let Some(k) = doc.slope {
        if !(k > 0.0) || !k.is_finite() {
            bad(format!("slope must be finite and > 0, got {k}"));
        }
        mem.slope = k;
    }
    if let Some(kind) = doc.indicator {
        mem.indicator = kind;
    }
    for (name, &c) in &doc.cost {
        match modes.index_of(name) {
            Some(m) => {
                if !(c >= 0.0) || !c.is_finite() {
                    bad(format!("cost for '{name}' must be >= 0, got {c}"));
                }
                mem.cost[m] = c;
            }
            None => bad(format!("cost given for unknown mode '{name}'")),
        }
    }
    for (name, &t) in &doc.threshold {
        match modes.index_of(name) {
            Some(m) => {
                if !(t > 0.0) || !t.is_finite() {
                    bad(format!("threshold for '{name}' must be > 0, got {t}"));
                }
                mem.threshold[m] = Some(t);
            }
            None => bad(format!("threshold given for unknown mode '{name}'")),
        }
    }
    if let Some(services) = &doc.services {
        if services.is_empty() {
            bad("service map is empty".into());
        }
        mem.services = ServiceMap {
            services: services
                .iter()
                .map(|(name, dests)| Service {
                    name: name.clone(),
                    destinations: dests.clone(),
                })
                .collect(),
        };
        mem.priority = vec![1.0; mem.services.services.len()];
    }
    for s in &mem.services.services {
        if s.destinations.is_empty() {
            bad(format!("service '{}' has no destinations", s.name));
        }
        for d in &s.destinations {
            if !network.destinations().contains(d) {
                bad(format!("service '{}' lists {d}, which is not a destination", s.name));
            }
        }
    }
    for (name, &b) in &doc.priority {
        match mem.services.services.iter().position(|s| &s.name == name) {
            Some(s) => {
                if !(b >= 0.0) || !b.is_finite() {
                    bad(format!("priority for '{name}' must be >= 0, got {b}"));
                }
                mem.priority[s] = b;
            }
            None => bad(format!("priority given for unknown service '{name}'")),
        }
    }
    mem
}
