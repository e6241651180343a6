use std::collections::HashMap;
use std::io::{self, Write};

use super::alloc::{allocate_candidates, deallocate_candidates};
use super::state::NetworkState;
use crate::error::EngineError;
use crate::model::{OperationMode, ScenarioConfig};
use crate::solver::SparseRateSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Arrival,
    Departure,
}

/// A transition record `A(i, t, o, k)`. The rate is `lambda_k^o * weight`
/// for arrivals (`weight = 1 / |Γ⁺|`) and `mu_k * weight` for departures.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub od: usize,
    pub class: usize,
    pub kind: TransitionKind,
    pub multiplicity: u32,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<NetworkState>,
    index: HashMap<NetworkState, usize>,
    transitions: Vec<Transition>,
    blocked: Vec<bool>,
    num_ods: usize,
    num_classes: usize,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[NetworkState] {
        &self.states
    }

    pub fn index_of(&self, state: &NetworkState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// `B(i, o, k)`.
    pub fn is_blocked(&self, state: usize, od: usize, class: usize) -> bool {
        self.blocked[(state * self.num_ods + od) * self.num_classes + class]
    }

    /// One line per state: index, then the canonical cell layout.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, s) in self.states.iter().enumerate() {
            writeln!(out, "{i}\t{s}")?;
        }
        Ok(())
    }
}

/// Breadth-first closure of the network states reachable from the empty
/// state. For every state, arrivals of each `(o, k)` are expanded before
/// departures, so the discovery order is deterministic.
pub fn build_state_space(config: &ScenarioConfig) -> Result<StateSpace, EngineError> {
    let routes: Vec<&[usize]> = config.od_pairs.iter().map(|o| o.route.as_slice()).collect();
    let widths = config.widths();
    let mode: OperationMode = config.mode;
    let cap = config.settings.state_cap;
    let (num_ods, num_classes) = (routes.len(), widths.len());

    let empty = NetworkState::empty(config.topology.links().len(), config.capacity(), num_classes);
    let mut states = vec![empty.clone()];
    let mut index = HashMap::from([(empty, 0usize)]);
    let mut transitions = Vec::new();
    let mut blocked = Vec::new();

    let mut intern = |s: NetworkState, states: &mut Vec<NetworkState>| -> Result<usize, EngineError> {
        if let Some(&i) = index.get(&s) {
            return Ok(i);
        }
        if states.len() >= cap {
            return Err(EngineError::StateCapExceeded { cap, reached: states.len() + 1 });
        }
        index.insert(s.clone(), states.len());
        states.push(s);
        Ok(states.len() - 1)
    };

    let mut i = 0;
    while i < states.len() {
        let current = states[i].clone();
        for (o, route) in routes.iter().enumerate() {
            for (k, &w) in widths.iter().enumerate() {
                let next = allocate_candidates(&current, route, w, o, k, mode);
                blocked.push(next.is_empty());
                let weight = 1.0 / next.len() as f64;
                for s in next {
                    let to = intern(s, &mut states)?;
                    transitions.push(Transition {
                        from: i,
                        to,
                        od: o,
                        class: k,
                        kind: TransitionKind::Arrival,
                        multiplicity: 1,
                        weight,
                    });
                }
            }
        }
        for (o, route) in routes.iter().enumerate() {
            for (k, &w) in widths.iter().enumerate() {
                for d in deallocate_candidates(&current, route, w, o, k, mode.spectrum_conversion) {
                    let weight = d.weight();
                    let to = intern(d.state, &mut states)?;
                    transitions.push(Transition {
                        from: i,
                        to,
                        od: o,
                        class: k,
                        kind: TransitionKind::Departure,
                        multiplicity: d.multiplicity,
                        weight,
                    });
                }
            }
        }
        i += 1;
    }
    Ok(StateSpace { states, index, transitions, blocked, num_ods, num_classes })
}

/// Generator matrix of the exact chain.
pub fn build_rate_matrix(space: &StateSpace, config: &ScenarioConfig) -> SparseRateSystem {
    let rates = space.transitions.iter().map(|t| {
        let r = match t.kind {
            TransitionKind::Arrival => config.od_pairs[t.od].arrival_rates[t.class],
            TransitionKind::Departure => config.classes[t.class].holding_rate,
        };
        (t.from, t.to, r * t.weight)
    });
    SparseRateSystem::from_triplets(space.len(), rates)
}
