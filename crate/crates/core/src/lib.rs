//! Connection-blocking analysis for elastic optical networks.

pub mod approx;
pub mod error;
pub mod exact;
pub mod model;
pub mod numeric;
pub mod report;
pub mod scenarios;
pub mod sim;
pub mod solver;
pub mod statecount;
pub mod sweep;

pub use error::{ConfigError, EngineError, ReportError, RouteError, SimError, SolverError};
pub use model::{
    load_config, load_config_file, offered_load, shortest_path, BlockingTable, DemandClass, Engine, Link, NodeId,
    OdPair, OperationMode, Policy, ScenarioConfig, Settings, Topology, Variant,
};
