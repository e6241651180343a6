//! Exact CTMC over full per-slice network states.

mod alloc;
mod space;
mod state;

use std::time::Instant;

pub use alloc::{
    allocate_candidates, allocation_candidates, apply_placement, deallocate_candidates, Candidates, Departure,
};
pub use space::{build_rate_matrix, build_state_space, StateSpace, Transition, TransitionKind};
pub use state::{largest_free_block, Cell, NetworkState};

use crate::error::EngineError;
use crate::model::{BlockingTable, ScenarioConfig, Topology};
use crate::solver::solve_stationary;

/// `BP_k^o = sum_i pi_i B(i, o, k)`. Pairs with no offered traffic report 0.
pub fn exact_blocking(space: &StateSpace, pi: &[f64], config: &ScenarioConfig) -> BlockingTable {
    let per_od = config
        .od_pairs
        .iter()
        .enumerate()
        .map(|(o, od)| {
            (0..config.num_classes())
                .map(|k| {
                    if od.arrival_rates[k] == 0.0 {
                        return 0.0;
                    }
                    pi.iter().enumerate().filter(|&(i, _)| space.is_blocked(i, o, k)).map(|(_, p)| p).sum()
                })
                .collect()
        })
        .collect();
    BlockingTable::new(per_od, config)
}

/// Links coupled through shared routes, and the OD pairs using them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub links: Vec<usize>,
    pub od_pairs: Vec<usize>,
}

/// Splits the network into groups of links that no route connects. The
/// exact chain is the product of the chains of these groups.
pub fn components(config: &ScenarioConfig) -> Vec<Component> {
    let n = config.topology.links().len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for od in &config.od_pairs {
        for w in od.route.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out: Vec<Component> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for (o, od) in config.od_pairs.iter().enumerate() {
        let Some(&first) = od.route.first() else { continue };
        let root = find(&mut parent, first);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push(Component { links: Vec::new(), od_pairs: Vec::new() });
        }
        let c = &mut out[slot[root]];
        c.od_pairs.push(o);
        for &l in &od.route {
            if !c.links.contains(&l) {
                c.links.push(l);
            }
        }
    }
    for c in &mut out {
        c.links.sort_unstable();
    }
    out
}

/// The scenario restricted to one component, with links renumbered.
pub fn component_config(config: &ScenarioConfig, component: &Component) -> ScenarioConfig {
    let links = component.links.iter().map(|&l| config.topology.links()[l]).collect();
    let topology = Topology::new(config.topology.nodes().to_vec(), links, config.capacity())
        .expect("a subset of a valid topology is valid");
    let od_pairs = component
        .od_pairs
        .iter()
        .map(|&o| {
            let mut od = config.od_pairs[o].clone();
            for l in &mut od.route {
                *l = component.links.binary_search(l).expect("route link in component");
            }
            od
        })
        .collect();
    ScenarioConfig { topology, od_pairs, ..config.clone() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub blocking: BlockingTable,
    /// Total states over all components.
    pub states: usize,
    pub components: usize,
    pub runtime_s: f64,
}

/// Builds, solves and evaluates the exact chain of every component.
pub fn solve_exact(config: &ScenarioConfig) -> Result<ExactSolution, EngineError> {
    let started = Instant::now();
    let mut per_od = vec![vec![0.0; config.num_classes()]; config.od_pairs.len()];
    let comps = components(config);
    let mut states = 0;
    for comp in &comps {
        let sub = component_config(config, comp);
        let space = build_state_space(&sub)?;
        let q = build_rate_matrix(&space, &sub);
        let pi = solve_stationary(&q, config.settings.solver_tol, None)?;
        let table = exact_blocking(&space, &pi, &sub);
        for (i, &o) in comp.od_pairs.iter().enumerate() {
            per_od[o] = table.per_od[i].clone();
        }
        states += space.len();
    }
    Ok(ExactSolution {
        blocking: BlockingTable::new(per_od, config),
        states,
        components: comps.len(),
        runtime_s: started.elapsed().as_secs_f64(),
    })
}
