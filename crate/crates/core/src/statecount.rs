//! Exact link-state counts per occupancy: closed forms for random fit and
//! explicit enumeration for any policy.

use std::io::Write;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::error::EngineError;
use crate::exact::{build_state_space, NetworkState};
use crate::model::{OperationMode, Policy};
use crate::numeric::{multinomial, uratio_to_f64, Binomials};
use crate::scenarios::single_link;

/// Per-class connection counts `n` on a link.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Macrostate {
    pub counts: Vec<u32>,
}

impl Macrostate {
    /// `x = n · d`.
    pub fn occupied(&self, widths: &[usize]) -> usize {
        self.counts.iter().zip(widths).map(|(&n, &d)| n as usize * d).sum()
    }

    /// `N(n)`.
    pub fn connections(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// All `n >= 0` with `n · d = x`, in lexicographic order.
pub fn enumerate_macrostates(capacity: usize, widths: &[usize], x: usize) -> Vec<Macrostate> {
    fn rec(widths: &[usize], rem: usize, cur: &mut Vec<u32>, out: &mut Vec<Macrostate>) {
        match widths.split_first() {
            None => {
                if rem == 0 {
                    out.push(Macrostate { counts: cur.clone() });
                }
            }
            Some((&w, rest)) => {
                for n in 0..=rem / w {
                    cur.push(n as u32);
                    rec(rest, rem - n * w, cur, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    if x <= capacity {
        rec(widths, x, &mut Vec::with_capacity(widths.len()), &mut out);
    }
    out
}

/// Sum of multinomials of the macrostates at `x`, grouped by connection count `N`.
fn multinomials_by_n(capacity: usize, widths: &[usize], x: usize) -> Vec<(i64, BigUint)> {
    let mut by_n: Vec<BigUint> = Vec::new();
    for m in enumerate_macrostates(capacity, widths, x) {
        let n = m.connections() as usize;
        if by_n.len() <= n {
            by_n.resize(n + 1, BigUint::zero());
        }
        by_n[n] += multinomial(&m.counts);
    }
    by_n.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(n, v)| (n as i64, v)).collect()
}

fn total_from(groups: &[(i64, BigUint)], free: i64, binom: &Binomials) -> BigUint {
    groups.iter().map(|(n, m)| m * binom.get(free + n, *n)).sum()
}

/// `W(n)`: placements of `N` blocks among `E` free slices leaving a free run
/// of at least `d`, by inclusion-exclusion over the `N + 1` gaps.
fn nonblocking_arrangements(n: i64, free: i64, d: i64, binom: &Binomials) -> BigInt {
    let mut acc = BigInt::zero();
    for i in 1..=n + 1 {
        let term = BigInt::from(binom.get(n + 1, i) * binom.get(free + n - i * d, n));
        if i % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

fn nonblocking_from(groups: &[(i64, BigUint)], free: i64, d: i64, binom: &Binomials) -> BigUint {
    let total: BigInt =
        groups.iter().map(|(n, m)| nonblocking_arrangements(*n, free, d, binom) * BigInt::from(m.clone())).sum();
    total.to_biguint().expect("inclusion-exclusion count is non-negative")
}

/// `|Ω_S(x)|` under random fit.
pub fn count_total(x: usize, capacity: usize, widths: &[usize]) -> BigUint {
    let binom = Binomials::new(capacity + 1);
    total_from(&multinomials_by_n(capacity, widths, x), (capacity - x.min(capacity)) as i64, &binom)
}

/// `|NB(x, k)|` under random fit.
pub fn count_nonblocking(x: usize, k: usize, capacity: usize, widths: &[usize]) -> BigUint {
    if x > capacity {
        return BigUint::zero();
    }
    let binom = Binomials::new(capacity + 1);
    let groups = multinomials_by_n(capacity, widths, x);
    nonblocking_from(&groups, (capacity - x) as i64, widths[k] as i64, &binom)
}

/// `|FB(x, k)|` under random fit.
pub fn count_frag_blocking(x: usize, k: usize, capacity: usize, widths: &[usize]) -> BigUint {
    if x + widths[k] > capacity {
        return BigUint::zero();
    }
    count_total(x, capacity, widths) - count_nonblocking(x, k, capacity, widths)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateClassCounts {
    pub total: BigUint,
    pub non_blocking: BigUint,
    pub frag_blocking: BigUint,
    pub resource_blocking: BigUint,
}

impl StateClassCounts {
    fn from_total_nb(total: BigUint, non_blocking: BigUint, x: usize, capacity: usize, d: usize) -> Self {
        let frag_blocking = if x + d <= capacity { &total - &non_blocking } else { BigUint::zero() };
        let resource_blocking = &total - &non_blocking - &frag_blocking;
        StateClassCounts { total, non_blocking, frag_blocking, resource_blocking }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountSource {
    ClosedForm,
    Enumerated(Policy),
}

/// Class counts for every `(x, k)` of one link, plus their float ratios.
#[derive(Debug, Clone)]
pub struct CountTable {
    capacity: usize,
    widths: Vec<usize>,
    source: CountSource,
    /// `rows[x][k]`; empty for occupancies no state has.
    rows: Vec<Vec<StateClassCounts>>,
    nb_fraction: Vec<Vec<f64>>,
    fb_fraction: Vec<Vec<f64>>,
}

impl CountTable {
    /// Random-fit counts from the closed forms.
    pub fn closed_form(capacity: usize, widths: &[usize]) -> Self {
        let binom = Binomials::new(capacity + 1);
        let rows = (0..=capacity)
            .map(|x| {
                let groups = multinomials_by_n(capacity, widths, x);
                if groups.is_empty() {
                    return Vec::new();
                }
                let free = (capacity - x) as i64;
                let total = total_from(&groups, free, &binom);
                widths
                    .iter()
                    .map(|&d| {
                        let nb = nonblocking_from(&groups, free, d as i64, &binom);
                        StateClassCounts::from_total_nb(total.clone(), nb, x, capacity, d)
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(capacity, widths, CountSource::ClosedForm, rows)
    }

    /// Counts by classifying explicitly enumerated single-link states.
    pub fn from_states(capacity: usize, widths: &[usize], policy: Policy, states: &[NetworkState]) -> Self {
        let mut tally = vec![(0u64, vec![0u64; widths.len()]); capacity + 1];
        for s in states {
            let x = s.occupied(0);
            let fm = s.largest_free_block(0);
            tally[x].0 += 1;
            for (k, &d) in widths.iter().enumerate() {
                if fm >= d {
                    tally[x].1[k] += 1;
                }
            }
        }
        let rows = tally
            .into_iter()
            .enumerate()
            .map(|(x, (total, nb))| {
                if total == 0 {
                    return Vec::new();
                }
                widths
                    .iter()
                    .zip(nb)
                    .map(|(&d, nb)| StateClassCounts::from_total_nb(total.into(), nb.into(), x, capacity, d))
                    .collect()
            })
            .collect();
        Self::from_rows(capacity, widths, CountSource::Enumerated(policy), rows)
    }

    /// Counts used by the reduced-load model: enumeration for first fit up to
    /// `ff_enum_max_capacity`, the random-fit closed forms otherwise.
    pub fn for_policy(
        policy: Policy,
        capacity: usize,
        widths: &[usize],
        ff_enum_max_capacity: usize,
        state_cap: usize,
    ) -> Result<Self, EngineError> {
        if policy == Policy::FirstFit && capacity <= ff_enum_max_capacity {
            Ok(enumerate_link_states(policy, capacity, widths, state_cap)?.counts)
        } else {
            Ok(Self::closed_form(capacity, widths))
        }
    }

    fn from_rows(capacity: usize, widths: &[usize], source: CountSource, rows: Vec<Vec<StateClassCounts>>) -> Self {
        let frac = |pick: fn(&StateClassCounts) -> &BigUint| -> Vec<Vec<f64>> {
            rows.iter().map(|row| row.iter().map(|c| uratio_to_f64(pick(c), &c.total)).collect()).collect()
        };
        let nb_fraction = frac(|c| &c.non_blocking);
        let fb_fraction = frac(|c| &c.frag_blocking);
        CountTable { capacity, widths: widths.to_vec(), source, rows, nb_fraction, fb_fraction }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn source(&self) -> CountSource {
        self.source
    }

    pub fn is_valid(&self, x: usize) -> bool {
        x <= self.capacity && !self.rows[x].is_empty()
    }

    pub fn valid_microstates(&self) -> Vec<usize> {
        (0..=self.capacity).filter(|&x| self.is_valid(x)).collect()
    }

    pub fn get(&self, x: usize, k: usize) -> Option<&StateClassCounts> {
        self.rows.get(x).and_then(|r| r.get(k))
    }

    /// `|NB(x,k)| / |Ω_S(x)|`, 0 for invalid `x`.
    pub fn nb_fraction(&self, x: usize, k: usize) -> f64 {
        self.nb_fraction.get(x).and_then(|r| r.get(k)).copied().unwrap_or(0.0)
    }

    /// `|FB(x,k)| / |Ω_S(x)|`, 0 for invalid `x`.
    pub fn fb_fraction(&self, x: usize, k: usize) -> f64 {
        self.fb_fraction.get(x).and_then(|r| r.get(k)).copied().unwrap_or(0.0)
    }

    /// Total number of link states over all occupancies.
    pub fn total_states(&self) -> BigUint {
        self.rows.iter().filter_map(|r| r.first()).map(|c| &c.total).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "k", "d", "total", "non_blocking", "frag_blocking", "resource_blocking"])?;
        for (x, row) in self.rows.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                w.write_record([
                    x.to_string(),
                    (k + 1).to_string(),
                    self.widths[k].to_string(),
                    c.total.to_string(),
                    c.non_blocking.to_string(),
                    c.frag_blocking.to_string(),
                    c.resource_blocking.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Explicit single-link states under `policy` with their classification.
#[derive(Debug, Clone)]
pub struct LinkEnumeration {
    pub states: Vec<NetworkState>,
    pub counts: CountTable,
}

/// Closure of the single-route, single-link chain under `policy`.
pub fn enumerate_link_states(
    policy: Policy,
    capacity: usize,
    widths: &[usize],
    state_cap: usize,
) -> Result<LinkEnumeration, EngineError> {
    let mut config = single_link(capacity, widths, 0.0);
    config.mode = OperationMode { policy, spectrum_conversion: false };
    config.settings.state_cap = state_cap;
    let states = build_state_space(&config)?.states().to_vec();
    let counts = CountTable::from_states(capacity, widths, policy, &states);
    Ok(LinkEnumeration { states, counts })
}
