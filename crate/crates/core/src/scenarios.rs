//! Reference scenarios: single link, 2-link chain, bidirectional rings and
//! the 14-node NSFNET. All use unit holding rates and split `load` uniformly.

use crate::model::{
    shortest_path, DemandClass, Engine, Link, NodeId, OdPair, OperationMode, ScenarioConfig, Settings, Topology,
    Variant,
};

/// NSFNET links, each used in both directions.
pub const NSFNET_LINKS: [(NodeId, NodeId); 21] = [
    (1, 2),
    (1, 3),
    (1, 8),
    (2, 3),
    (2, 4),
    (3, 6),
    (4, 5),
    (4, 11),
    (5, 6),
    (5, 7),
    (6, 10),
    (6, 13),
    (7, 8),
    (8, 9),
    (9, 10),
    (9, 12),
    (9, 14),
    (11, 12),
    (11, 14),
    (12, 13),
    (13, 14),
];

pub fn from_parts(
    nodes: Vec<NodeId>,
    links: Vec<Link>,
    capacity: usize,
    widths: &[usize],
    pairs: &[(NodeId, NodeId)],
    load: f64,
) -> ScenarioConfig {
    let topology = Topology::new(nodes, links, capacity).expect("reference topology is valid");
    let od_pairs = pairs
        .iter()
        .map(|&(origin, destination)| OdPair {
            origin,
            destination,
            route: shortest_path(&topology, origin, destination).expect("reference route exists"),
            arrival_rates: vec![0.0; widths.len()],
        })
        .collect();
    ScenarioConfig {
        topology,
        classes: widths.iter().map(|&width| DemandClass { width, holding_rate: 1.0 }).collect(),
        od_pairs,
        mode: OperationMode::RF,
        engine: Engine::Exact,
        variant: Variant::Ees,
        loads: vec![load],
        settings: Settings::default(),
    }
    .at_load(load)
}

pub fn single_link(capacity: usize, widths: &[usize], load: f64) -> ScenarioConfig {
    from_parts(vec![1, 2], vec![Link { source: 1, target: 2 }], capacity, widths, &[(1, 2)], load)
}

/// Chain 1→2→3 with OD pairs (1,2), (2,3) and the two-hop (1,3).
pub fn two_link(capacity: usize, widths: &[usize], load: f64) -> ScenarioConfig {
    from_parts(
        vec![1, 2, 3],
        vec![Link { source: 1, target: 2 }, Link { source: 2, target: 3 }],
        capacity,
        widths,
        &[(1, 2), (2, 3), (1, 3)],
        load,
    )
}

fn bidirectional(edges: &[(NodeId, NodeId)]) -> Vec<Link> {
    edges.iter().flat_map(|&(a, b)| [Link { source: a, target: b }, Link { source: b, target: a }]).collect()
}

fn all_pairs(nodes: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    nodes.iter().flat_map(|&a| nodes.iter().filter(move |&&b| b != a).map(move |&b| (a, b))).collect()
}

/// Bidirectional ring over nodes `1..=n` with every ordered node pair as an OD.
pub fn ring(n: NodeId, capacity: usize, widths: &[usize], load: f64) -> ScenarioConfig {
    let nodes: Vec<NodeId> = (1..=n).collect();
    let edges: Vec<(NodeId, NodeId)> = (1..=n).map(|i| (i, i % n + 1)).collect();
    from_parts(nodes.clone(), bidirectional(&edges), capacity, widths, &all_pairs(&nodes), load)
}

pub fn nsfnet(capacity: usize, widths: &[usize], load: f64) -> ScenarioConfig {
    let nodes: Vec<NodeId> = (1..=14).collect();
    from_parts(nodes.clone(), bidirectional(&NSFNET_LINKS), capacity, widths, &all_pairs(&nodes), load)
}
