//! TOML scenario documents.
//!
//! ```toml
//! nodes = [1, 2, 3]
//! links = [[1, 2], [2, 3]]
//! capacity = 10
//! classes = [{ d = 3, mu = 1.0 }, { d = 4, mu = 1.0 }]
//! od_pairs = [{ origin = 1, dest = 2 }, { origin = 1, dest = 3, route = [1, 2, 3] }]
//! mode = "rf"
//! engine = "exact"
//! loads = [0.1, 0.6]
//! ```
//!
//! `od_pairs = "all"` expands to every ordered node pair. Routes are node
//! sequences; missing routes are filled by [`shortest_path`]. Per-OD `rates`
//! are optional when `loads` is present, in which case the first load is
//! split uniformly over OD pairs and classes.

use std::path::Path;

use serde::Deserialize;

use super::{
    shortest_path, DemandClass, Engine, Link, NodeId, OdPair, OperationMode, ScenarioConfig, Settings, Topology,
    Variant,
};
use crate::error::ConfigError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    nodes: Vec<NodeId>,
    links: Vec<[NodeId; 2]>,
    #[serde(default)]
    bidirectional: bool,
    capacity: usize,
    classes: Vec<RawClass>,
    od_pairs: RawOdPairs,
    mode: Option<String>,
    engine: Option<String>,
    variant: Option<String>,
    #[serde(default)]
    loads: Vec<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
    solver_tol: Option<f64>,
    state_cap: Option<usize>,
    seed: Option<u64>,
    requests: Option<u64>,
    warmup: Option<f64>,
    batches: Option<usize>,
    replications: Option<usize>,
    ff_enum_max_capacity: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    d: usize,
    mu: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawOdPairs {
    Keyword(String),
    List(Vec<RawOd>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOd {
    origin: NodeId,
    dest: NodeId,
    route: Option<Vec<NodeId>>,
    rates: Option<Vec<f64>>,
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    load_config(&text)
}

/// Parses and validates a scenario document.
pub fn load_config(source: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| ConfigError::Syntax(e.to_string()))?;

    let mut links: Vec<Link> = raw.links.iter().map(|[s, t]| Link { source: *s, target: *t }).collect();
    if raw.bidirectional {
        let reverse: Vec<Link> =
            links.iter().map(|l| Link { source: l.target, target: l.source }).filter(|l| !links.contains(l)).collect();
        links.extend(reverse);
    }
    let topology = Topology::new(raw.nodes.clone(), links, raw.capacity)?;
    let capacity = topology.capacity();

    if raw.classes.is_empty() {
        return Err(ConfigError::invalid("classes", "at least one demand class is required"));
    }
    let mut classes = Vec::with_capacity(raw.classes.len());
    for (i, c) in raw.classes.iter().enumerate() {
        if c.d == 0 {
            return Err(ConfigError::invalid(format!("classes[{i}].d"), "class width must be positive"));
        }
        if c.d > capacity {
            return Err(ConfigError::invalid(
                format!("classes[{i}].d"),
                format!("class width exceeds capacity ({} > {capacity})", c.d),
            ));
        }
        if !(c.mu.is_finite() && c.mu > 0.0) {
            return Err(ConfigError::invalid(format!("classes[{i}].mu"), "holding rate must be positive"));
        }
        classes.push(DemandClass { width: c.d, holding_rate: c.mu });
    }

    for (i, l) in raw.loads.iter().enumerate() {
        if !(l.is_finite() && *l >= 0.0) {
            return Err(ConfigError::invalid(format!("loads[{i}]"), "offered load must be non-negative"));
        }
    }

    let raw_ods: Vec<RawOd> = match raw.od_pairs {
        RawOdPairs::Keyword(k) if k == "all" => {
            let mut out = Vec::new();
            for &o in &raw.nodes {
                for &d in &raw.nodes {
                    if o != d {
                        out.push(RawOd { origin: o, dest: d, route: None, rates: None });
                    }
                }
            }
            out
        }
        RawOdPairs::Keyword(k) => {
            return Err(ConfigError::invalid("od_pairs", format!("expected a list or \"all\", got \"{k}\"")))
        }
        RawOdPairs::List(list) => list,
    };
    if raw_ods.is_empty() {
        return Err(ConfigError::invalid("od_pairs", "at least one OD pair is required"));
    }

    let explicit = raw_ods.iter().filter(|o| o.rates.is_some()).count();
    if explicit != 0 && explicit != raw_ods.len() {
        return Err(ConfigError::invalid("od_pairs", "either every OD pair lists `rates` or none does"));
    }
    if explicit == 0 && raw.loads.is_empty() {
        return Err(ConfigError::invalid("loads", "no arrival rates: provide `loads` or per-OD `rates`"));
    }

    let mut od_pairs = Vec::with_capacity(raw_ods.len());
    for (i, od) in raw_ods.into_iter().enumerate() {
        let path = format!("od_pairs[{i}]");
        let route = match &od.route {
            Some(nodes) => route_from_nodes(&topology, &od, nodes, &path)?,
            None => shortest_path(&topology, od.origin, od.dest)
                .map_err(|e| ConfigError::invalid(path.clone(), e.to_string()))?,
        };
        let arrival_rates = match od.rates {
            Some(rates) => {
                if rates.len() != classes.len() {
                    return Err(ConfigError::invalid(
                        format!("{path}.rates"),
                        format!("expected {} rates, one per class", classes.len()),
                    ));
                }
                for (k, r) in rates.iter().enumerate() {
                    if !(r.is_finite() && *r >= 0.0) {
                        return Err(ConfigError::invalid(format!("{path}.rates[{k}]"), "negative rate"));
                    }
                }
                rates
            }
            None => vec![0.0; classes.len()],
        };
        od_pairs.push(OdPair { origin: od.origin, destination: od.dest, route, arrival_rates });
    }

    let mode: OperationMode =
        raw.mode.as_deref().unwrap_or("rf").parse().map_err(|e: String| ConfigError::invalid("mode", e))?;
    let engine: Engine =
        raw.engine.as_deref().unwrap_or("approx").parse().map_err(|e: String| ConfigError::invalid("engine", e))?;
    let variant: Variant =
        raw.variant.as_deref().unwrap_or("ees").parse().map_err(|e: String| ConfigError::invalid("variant", e))?;

    let defaults = Settings::default();
    let settings = Settings {
        epsilon: raw.epsilon.unwrap_or(defaults.epsilon),
        max_iters: raw.max_iters.unwrap_or(defaults.max_iters),
        solver_tol: raw.solver_tol.unwrap_or(defaults.solver_tol),
        state_cap: raw.state_cap.unwrap_or(defaults.state_cap),
        seed: raw.seed.unwrap_or(defaults.seed),
        requests: raw.requests.unwrap_or(defaults.requests),
        warmup_fraction: raw.warmup.unwrap_or(defaults.warmup_fraction),
        batches: raw.batches.unwrap_or(defaults.batches),
        replications: raw.replications.unwrap_or(defaults.replications),
        ff_enum_max_capacity: raw.ff_enum_max_capacity.unwrap_or(defaults.ff_enum_max_capacity),
    };
    if !(settings.epsilon.is_finite() && settings.epsilon > 0.0) {
        return Err(ConfigError::invalid("epsilon", "epsilon must be positive"));
    }
    if !(settings.solver_tol.is_finite() && settings.solver_tol > 0.0) {
        return Err(ConfigError::invalid("solver_tol", "solver tolerance must be positive"));
    }
    if settings.max_iters == 0 {
        return Err(ConfigError::invalid("max_iters", "max_iters must be at least 1"));
    }
    if !(0.0..1.0).contains(&settings.warmup_fraction) {
        return Err(ConfigError::invalid("warmup", "warm-up fraction must lie in [0, 1)"));
    }
    if settings.batches < 10 {
        return Err(ConfigError::invalid("batches", "at least 10 batches are required"));
    }
    if settings.replications == 0 {
        return Err(ConfigError::invalid("replications", "replications must be at least 1"));
    }

    let config = ScenarioConfig { topology, classes, od_pairs, mode, engine, variant, loads: raw.loads, settings };
    Ok(if explicit == 0 { config.at_load(config.loads[0]) } else { config })
}

fn route_from_nodes(topology: &Topology, od: &RawOd, nodes: &[NodeId], path: &str) -> Result<Vec<usize>, ConfigError> {
    if nodes.first() != Some(&od.origin) || nodes.last() != Some(&od.dest) || nodes.len() < 2 {
        return Err(ConfigError::invalid(format!("{path}.route"), "route must start at origin and end at dest"));
    }
    nodes
        .windows(2)
        .map(|w| {
            topology
                .link_index(w[0], w[1])
                .ok_or_else(|| ConfigError::invalid(format!("{path}.route"), format!("no link {}->{}", w[0], w[1])))
        })
        .collect()
}
