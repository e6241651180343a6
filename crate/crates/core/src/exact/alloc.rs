use super::state::NetworkState;
use crate::model::{OperationMode, Policy};

/// The placements a request may take, before a concrete one is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidates {
    Blocked,
    /// Same start index on every route link.
    Aligned(Vec<usize>),
    /// Independent start lists per route link (spectrum conversion only);
    /// every combination is a candidate.
    PerLink(Vec<Vec<usize>>),
}

impl Candidates {
    pub fn is_blocked(&self) -> bool {
        matches!(self, Candidates::Blocked)
    }

    /// `|Γ⁺|`.
    pub fn len(&self) -> usize {
        match self {
            Candidates::Blocked => 0,
            Candidates::Aligned(s) => s.len(),
            Candidates::PerLink(lists) => lists.iter().map(Vec::len).product(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start index per route link for the `i`-th candidate, in enumeration
    /// order (aligned starts ascending; per-link combinations with the first
    /// link varying slowest).
    pub fn placement(&self, route_len: usize, mut i: usize) -> Vec<usize> {
        match self {
            Candidates::Blocked => panic!("no placement for a blocked request"),
            Candidates::Aligned(s) => vec![s[i]; route_len],
            Candidates::PerLink(lists) => {
                let mut out = vec![0; lists.len()];
                for (slot, list) in out.iter_mut().zip(lists).rev() {
                    *slot = list[i % list.len()];
                    i /= list.len();
                }
                out
            }
        }
    }
}

/// Admissible placements of a `width`-slice request on `route` under `mode`.
///
/// Aligned placements are preferred whenever one exists; per-link placements
/// are only considered with spectrum conversion and only when no aligned one
/// fits. First fit keeps the lowest aligned start, or the lowest start per
/// link.
pub fn allocation_candidates(state: &NetworkState, route: &[usize], width: usize, mode: OperationMode) -> Candidates {
    let capacity = state.capacity();
    if width > capacity {
        return Candidates::Blocked;
    }
    let first_fit = mode.policy == Policy::FirstFit;
    let mut aligned = Vec::new();
    for s in 0..=capacity - width {
        if route.iter().all(|&l| state.is_free(l, s, width)) {
            aligned.push(s);
            if first_fit {
                break;
            }
        }
    }
    if !aligned.is_empty() {
        return Candidates::Aligned(aligned);
    }
    if !mode.spectrum_conversion || route.len() < 2 {
        return Candidates::Blocked;
    }
    let mut lists = Vec::with_capacity(route.len());
    for &l in route {
        let mut starts = state.free_starts(l, width);
        if starts.is_empty() {
            return Candidates::Blocked;
        }
        if first_fit {
            starts.truncate(1);
        }
        lists.push(starts);
    }
    Candidates::PerLink(lists)
}

pub fn apply_placement(
    state: &NetworkState,
    route: &[usize],
    starts: &[usize],
    width: usize,
    od: usize,
    class: usize,
) -> NetworkState {
    let mut next = state.clone();
    for (&l, &s) in route.iter().zip(starts) {
        next.place(l, s, width, od, class);
    }
    next
}

/// `Γ⁺`: successor states of an `(od, class)` arrival.
pub fn allocate_candidates(
    state: &NetworkState,
    route: &[usize],
    width: usize,
    od: usize,
    class: usize,
    mode: OperationMode,
) -> Vec<NetworkState> {
    let cands = allocation_candidates(state, route, width, mode);
    (0..cands.len())
        .map(|i| apply_placement(state, route, &cands.placement(route.len(), i), width, od, class))
        .collect()
}

/// One element of `Γ⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct Departure {
    pub state: NetworkState,
    /// Number of block combinations that lead to `state`.
    pub multiplicity: u32,
    /// Number of combinations each live connection accounts for: `n^(l-1)`
    /// with spectrum conversion (pairings across links are not tracked), 1
    /// otherwise. The departure rate is `multiplicity / pairings * mu`.
    pub pairings: u32,
}

impl Departure {
    pub fn weight(&self) -> f64 {
        f64::from(self.multiplicity) / f64::from(self.pairings)
    }
}

/// `Γ⁻`: successor states of an `(od, class)` departure, duplicates merged.
pub fn deallocate_candidates(
    state: &NetworkState,
    route: &[usize],
    width: usize,
    od: usize,
    class: usize,
    spectrum_conversion: bool,
) -> Vec<Departure> {
    let Some(&first) = route.first() else {
        return Vec::new();
    };
    let mut out: Vec<Departure> = Vec::new();
    let mut push = |next: NetworkState, pairings: u32| {
        if let Some(d) = out.iter_mut().find(|d| d.state == next) {
            d.multiplicity += 1;
        } else {
            out.push(Departure { state: next, multiplicity: 1, pairings });
        }
    };
    if !spectrum_conversion || route.len() == 1 {
        for s in state.block_starts(first, od, class) {
            let mut next = state.clone();
            for &l in route {
                next.release(l, s, width);
            }
            push(next, 1);
        }
        return out;
    }
    let blocks: Vec<Vec<usize>> = route.iter().map(|&l| state.block_starts(l, od, class)).collect();
    let n = blocks[0].len();
    if n == 0 {
        return out;
    }
    debug_assert!(blocks.iter().all(|b| b.len() == n));
    let pairings = (n as u32).pow(route.len() as u32 - 1);
    let combos = Candidates::PerLink(blocks);
    for i in 0..combos.len() {
        let starts = combos.placement(route.len(), i);
        let mut next = state.clone();
        for (&l, &s) in route.iter().zip(&starts) {
            next.release(l, s, width);
        }
        push(next, pairings);
    }
    out
}
