//! Network, traffic and scenario description shared by every engine.

mod config;
mod routing;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub use config::{load_config, load_config_file};
pub use routing::shortest_path;

pub type NodeId = u32;

/// A unidirectional fiber link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub source: NodeId,
    pub target: NodeId,
}

/// Nodes, unidirectional links and the per-link slice count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    nodes: Vec<NodeId>,
    links: Vec<Link>,
    capacity: usize,
}

impl Topology {
    pub fn new(nodes: Vec<NodeId>, links: Vec<Link>, capacity: usize) -> Result<Self, ConfigError> {
        if capacity == 0 {
            return Err(ConfigError::invalid("capacity", "capacity must be at least 1 slice"));
        }
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].contains(n) {
                return Err(ConfigError::invalid(format!("nodes[{i}]"), format!("duplicate node {n}")));
            }
        }
        for (i, l) in links.iter().enumerate() {
            for (side, node) in [("0", l.source), ("1", l.target)] {
                if !nodes.contains(&node) {
                    return Err(ConfigError::invalid(format!("links[{i}][{side}]"), format!("unknown node {node}")));
                }
            }
            if l.source == l.target {
                return Err(ConfigError::invalid(format!("links[{i}]"), "self-loop link"));
            }
            if links[..i].contains(l) {
                return Err(ConfigError::invalid(
                    format!("links[{i}]"),
                    format!("duplicate link {}->{}", l.source, l.target),
                ));
            }
        }
        Ok(Topology { nodes, links, capacity })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn link_index(&self, source: NodeId, target: NodeId) -> Option<usize> {
        self.links.iter().position(|l| l.source == source && l.target == target)
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }
}

/// A demand class: slice width `d_k` and holding rate `mu_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandClass {
    pub width: usize,
    pub holding_rate: f64,
}

/// An origin-destination pair with its fixed route (link indices) and
/// per-class Poisson arrival rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdPair {
    pub origin: NodeId,
    pub destination: NodeId,
    pub route: Vec<usize>,
    pub arrival_rates: Vec<f64>,
}

impl OdPair {
    pub fn hops(&self) -> usize {
        self.route.len()
    }

    pub fn uses_link(&self, link: usize) -> bool {
        self.route.contains(&link)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    RandomFit,
    FirstFit,
}

/// Spectrum allocation policy plus whether nodes carry spectrum converters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperationMode {
    pub policy: Policy,
    pub spectrum_conversion: bool,
}

impl OperationMode {
    pub const RF: OperationMode = OperationMode { policy: Policy::RandomFit, spectrum_conversion: false };
    pub const FF: OperationMode = OperationMode { policy: Policy::FirstFit, spectrum_conversion: false };
    pub const RF_SC: OperationMode = OperationMode { policy: Policy::RandomFit, spectrum_conversion: true };
    pub const FF_SC: OperationMode = OperationMode { policy: Policy::FirstFit, spectrum_conversion: true };

    pub const ALL: [OperationMode; 4] = [Self::RF, Self::FF, Self::RF_SC, Self::FF_SC];
}

impl fmt::Display for OperationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.policy {
            Policy::RandomFit => "rf",
            Policy::FirstFit => "ff",
        };
        if self.spectrum_conversion {
            write!(f, "{p}-sc")
        } else {
            f.write_str(p)
        }
    }
}

impl FromStr for OperationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(Self::RF),
            "ff" => Ok(Self::FF),
            "rf-sc" => Ok(Self::RF_SC),
            "ff-sc" => Ok(Self::FF_SC),
            other => Err(format!("unknown mode '{other}' (expected rf, ff, rf-sc or ff-sc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Engine {
    Exact,
    Approx,
    Sim,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Exact => "exact",
            Engine::Approx => "approx",
            Engine::Sim => "sim",
        })
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Engine::Exact),
            "approx" => Ok(Engine::Approx),
            "sim" => Ok(Engine::Sim),
            other => Err(format!("unknown engine '{other}'")),
        }
    }
}

/// Acceptance-probability approximation used by the reduced-load engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Equiprobable exact states.
    Ees,
    /// Slice-occupancy correlation (load dependent).
    Soc,
    /// Slices occupied uniformly at random.
    Uniform,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Ees => "ees",
            Variant::Soc => "soc",
            Variant::Uniform => "uniform",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ees" => Ok(Variant::Ees),
            "soc" => Ok(Variant::Soc),
            "uniform" | "uni" => Ok(Variant::Uniform),
            other => Err(format!("unknown variant '{other}' (expected ees, soc or uniform)")),
        }
    }
}

/// Numerical and simulation knobs. Defaults are what the CLI uses when the
/// document leaves a field out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Fixed-point termination threshold on the max per-(o,k) BP change.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Residual bound for stationary solves.
    pub solver_tol: f64,
    pub state_cap: usize,
    pub seed: u64,
    pub requests: u64,
    pub warmup_fraction: f64,
    pub batches: usize,
    pub replications: usize,
    /// FF acceptance counts come from explicit enumeration up to this
    /// capacity; above it the RF closed forms are used.
    pub ff_enum_max_capacity: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            epsilon: 1e-6,
            max_iters: 1000,
            solver_tol: 1e-10,
            state_cap: 2_000_000,
            seed: 1,
            requests: 1_000_000,
            warmup_fraction: 0.02,
            batches: 30,
            replications: 1,
            ff_enum_max_capacity: 10,
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub classes: Vec<DemandClass>,
    pub od_pairs: Vec<OdPair>,
    pub mode: OperationMode,
    pub engine: Engine,
    pub variant: Variant,
    pub loads: Vec<f64>,
    pub settings: Settings,
}

impl ScenarioConfig {
    pub fn capacity(&self) -> usize {
        self.topology.capacity()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.width).collect()
    }

    pub fn holding_rates(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.holding_rate).collect()
    }

    pub fn total_arrival_rate(&self) -> f64 {
        self.od_pairs.iter().flat_map(|o| o.arrival_rates.iter()).sum()
    }

    /// Rates split uniformly over OD pairs and classes so that the offered
    /// load equals `load`: `lambda_k^o = load * mu_k / (|O| * K)`.
    pub fn at_load(&self, load: f64) -> ScenarioConfig {
        let mut out = self.clone();
        let share = (self.od_pairs.len() * self.classes.len()) as f64;
        for od in &mut out.od_pairs {
            od.arrival_rates = self.classes.iter().map(|c| load * c.holding_rate / share).collect();
        }
        out
    }

    /// Rescales the current rates so the offered load equals `load`, keeping
    /// their proportions. Falls back to [`Self::at_load`] when nothing is
    /// offered yet.
    pub fn scaled_to_load(&self, load: f64) -> ScenarioConfig {
        let current = offered_load(self);
        if current == load {
            return self.clone();
        }
        if current <= 0.0 {
            return self.at_load(load);
        }
        let mut out = self.clone();
        for od in &mut out.od_pairs {
            for r in &mut od.arrival_rates {
                *r *= load / current;
            }
        }
        out
    }

    pub fn with_mode(&self, mode: OperationMode) -> ScenarioConfig {
        ScenarioConfig { mode, ..self.clone() }
    }
}

/// Blocking probability per `(od, class)` plus the arrival-weighted overall
/// value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingTable {
    pub per_od: Vec<Vec<f64>>,
    pub overall: f64,
}

impl BlockingTable {
    pub fn new(per_od: Vec<Vec<f64>>, config: &ScenarioConfig) -> Self {
        let mut num = 0.0;
        let mut den = 0.0;
        for (od, row) in config.od_pairs.iter().zip(&per_od) {
            for (&lambda, &bp) in od.arrival_rates.iter().zip(row) {
                num += lambda * bp;
                den += lambda;
            }
        }
        let overall = if den > 0.0 { num / den } else { 0.0 };
        BlockingTable { per_od, overall }
    }

    pub fn get(&self, od: usize, class: usize) -> f64 {
        self.per_od[od][class]
    }
}

/// `sum_k sum_o lambda_k^o / mu_k`.
pub fn offered_load(config: &ScenarioConfig) -> f64 {
    config
        .od_pairs
        .iter()
        .map(|od| od.arrival_rates.iter().zip(&config.classes).map(|(l, c)| l / c.holding_rate).sum::<f64>())
        .sum()
}
