//! Discrete-event simulation of the loss network with the same allocation
//! rules as the exact chain.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::SimError;
use crate::exact::{allocation_candidates, Candidates, NetworkState};
use crate::model::{BlockingTable, Policy, ScenarioConfig};

pub const MIN_BATCHES: usize = 10;
pub const RNG_NAME: &str = "ChaCha8";

/// 95% normal-approximation half-width of the mean of `batch_means`.
pub fn ci_halfwidth(batch_means: &[f64]) -> Result<f64, SimError> {
    let b = batch_means.len();
    if b < MIN_BATCHES {
        return Err(SimError::TooFewBatches { required: MIN_BATCHES, got: b });
    }
    let mean = batch_means.iter().sum::<f64>() / b as f64;
    let var = batch_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Ok(1.96 * (var / b as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub blocking: BlockingTable,
    /// CI half-width per `(o,k)`; NaN when too few batches saw that pair.
    pub ci: Vec<Vec<f64>>,
    pub overall_ci: f64,
    pub offered: Vec<Vec<u64>>,
    pub blocked: Vec<Vec<u64>>,
    /// Requests generated, warm-up included.
    pub requests: u64,
    pub batches: usize,
    pub seed: u64,
    pub rng: &'static str,
    pub runtime_s: f64,
}

struct Departure {
    time: f64,
    od: usize,
    class: usize,
    starts: Vec<usize>,
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.time.total_cmp(&other.time) == Ordering::Equal
    }
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed so that the max-heap pops the earliest departure
impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time)
    }
}

/// Picks one candidate placement: uniformly under random fit, the single
/// candidate under first fit. Returns a start index per route link.
pub fn sample_placement<R: Rng + ?Sized>(
    cands: &Candidates,
    route_len: usize,
    policy: Policy,
    rng: &mut R,
) -> Option<Vec<usize>> {
    if cands.is_blocked() {
        return None;
    }
    let i = match policy {
        Policy::FirstFit => 0,
        Policy::RandomFit => rng.random_range(0..cands.len()),
    };
    Some(cands.placement(route_len, i))
}

/// Per-batch offered and blocked counts, flattened over `(o,k)`.
struct Batch {
    offered: Vec<u64>,
    blocked: Vec<u64>,
}

fn replicate(config: &ScenarioConfig, stream: u64, requests: u64) -> Vec<Batch> {
    let settings = &config.settings;
    let num_classes = config.num_classes();
    let pairs: Vec<(usize, usize)> =
        (0..config.od_pairs.len()).flat_map(|o| (0..num_classes).map(move |k| (o, k))).collect();
    let weights: Vec<f64> = pairs.iter().map(|&(o, k)| config.od_pairs[o].arrival_rates[k]).collect();
    let total: f64 = weights.iter().sum();
    let pick = WeightedIndex::new(&weights).expect("positive total rate");
    let interarrival = Exp::new(total).expect("positive total rate");
    let holding: Vec<Exp<f64>> =
        config.classes.iter().map(|c| Exp::new(c.holding_rate).expect("positive holding rate")).collect();
    let widths = config.widths();

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(stream);

    let warmup = (settings.warmup_fraction * requests as f64).floor() as u64;
    let measured = requests - warmup;
    let nb = settings.batches as u64;
    let mut batches: Vec<Batch> =
        (0..nb).map(|_| Batch { offered: vec![0; pairs.len()], blocked: vec![0; pairs.len()] }).collect();

    let mut state = NetworkState::empty(config.topology.links().len(), config.capacity(), num_classes);
    let mut pending: BinaryHeap<Departure> = BinaryHeap::new();
    let mut now = 0.0;
    for n in 0..requests {
        now += interarrival.sample(&mut rng);
        while pending.peek().is_some_and(|d| d.time <= now) {
            let d = pending.pop().unwrap();
            for (&l, &s) in config.od_pairs[d.od].route.iter().zip(&d.starts) {
                state.release(l, s, widths[d.class]);
            }
        }
        let p = pick.sample(&mut rng);
        let (o, k) = pairs[p];
        let route = &config.od_pairs[o].route;
        let cands = allocation_candidates(&state, route, widths[k], config.mode);
        let placed = sample_placement(&cands, route.len(), config.mode.policy, &mut rng);
        if n >= warmup {
            let b = (((n - warmup) * nb) / measured) as usize;
            batches[b].offered[p] += 1;
            if placed.is_none() {
                batches[b].blocked[p] += 1;
            }
        }
        if let Some(starts) = placed {
            for (&l, &s) in route.iter().zip(&starts) {
                state.place(l, s, widths[k], o, k);
            }
            pending.push(Departure { time: now + holding[k].sample(&mut rng), od: o, class: k, starts });
        }
    }
    batches
}

/// Simulates `settings.requests` arrivals split over `settings.replications`
/// independent streams and pools their batches.
pub fn run_sim(config: &ScenarioConfig) -> Result<SimResult, SimError> {
    let started = Instant::now();
    let settings = &config.settings;
    let (num_ods, num_classes) = (config.od_pairs.len(), config.num_classes());
    if settings.batches < MIN_BATCHES {
        return Err(SimError::TooFewBatches { required: MIN_BATCHES, got: settings.batches });
    }
    if config.total_arrival_rate() <= 0.0 || settings.requests == 0 {
        return Ok(SimResult {
            blocking: BlockingTable::new(vec![vec![0.0; num_classes]; num_ods], config),
            ci: vec![vec![0.0; num_classes]; num_ods],
            overall_ci: 0.0,
            offered: vec![vec![0; num_classes]; num_ods],
            blocked: vec![vec![0; num_classes]; num_ods],
            requests: 0,
            batches: 0,
            seed: settings.seed,
            rng: RNG_NAME,
            runtime_s: started.elapsed().as_secs_f64(),
        });
    }
    let reps = settings.replications.max(1) as u64;
    let per_rep = settings.requests.div_ceil(reps);
    let batches: Vec<Batch> = (0..reps)
        .into_par_iter()
        .map(|r| replicate(config, r, per_rep))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let width = num_ods * num_classes;
    let mut offered = vec![0u64; width];
    let mut blocked = vec![0u64; width];
    for b in &batches {
        for p in 0..width {
            offered[p] += b.offered[p];
            blocked[p] += b.blocked[p];
        }
    }
    let ratio = |b: u64, o: u64| if o == 0 { 0.0 } else { b as f64 / o as f64 };
    let overall_means: Vec<f64> =
        batches.iter().map(|b| ratio(b.blocked.iter().sum(), b.offered.iter().sum())).collect();
    let overall_ci = ci_halfwidth(&overall_means)?;
    let ci_of = |p: usize| {
        let means: Vec<f64> =
            batches.iter().filter(|b| b.offered[p] > 0).map(|b| ratio(b.blocked[p], b.offered[p])).collect();
        ci_halfwidth(&means).unwrap_or(f64::NAN)
    };
    let grid = |v: Vec<f64>| v.chunks(num_classes).map(<[f64]>::to_vec).collect::<Vec<_>>();
    let bp: Vec<f64> = (0..width).map(|p| ratio(blocked[p], offered[p])).collect();
    let total_offered: u64 = offered.iter().sum();
    let total_blocked: u64 = blocked.iter().sum();
    let mut blocking = BlockingTable::new(grid(bp), config);
    blocking.overall = ratio(total_blocked, total_offered);
    Ok(SimResult {
        blocking,
        ci: grid((0..width).map(ci_of).collect()),
        overall_ci,
        offered: offered.chunks(num_classes).map(<[u64]>::to_vec).collect(),
        blocked: blocked.chunks(num_classes).map(<[u64]>::to_vec).collect(),
        requests: per_rep * reps,
        batches: batches.len(),
        seed: settings.seed,
        rng: RNG_NAME,
        runtime_s: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{allocate_candidates, apply_placement};
    use crate::model::OperationMode;
    use crate::scenarios::two_link;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn ci_edge_cases() {
        assert_eq!(ci_halfwidth(&[0.25; 12]).unwrap(), 0.0);
        assert_eq!(ci_halfwidth(&[0.1, 0.2]), Err(SimError::TooFewBatches { required: 10, got: 2 }));
    }

    #[test]
    fn ci_matches_binomial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (p, per, b) = (0.01, 10_000, 100);
        let means: Vec<f64> =
            (0..b).map(|_| (0..per).filter(|_| rng.random_bool(p)).count() as f64 / per as f64).collect();
        let exact = 1.96 * (p * (1.0 - p) / (per * b) as f64).sqrt();
        let got = ci_halfwidth(&means).unwrap();
        assert!((got - exact).abs() < 0.2 * exact, "{got} vs {exact}");
    }

    #[test]
    fn zero_rate() {
        let r = run_sim(&two_link(10, &[3, 4], 0.0)).unwrap();
        assert_eq!(r.blocking.overall, 0.0);
        assert_eq!(r.requests, 0);
        assert!(r.blocked.iter().flatten().all(|&b| b == 0));
    }

    #[test]
    fn reproducible() {
        let mut c = two_link(10, &[3, 4], 1.5);
        c.settings.requests = 20_000;
        c.settings.replications = 2;
        let a = run_sim(&c).unwrap();
        let b = run_sim(&c).unwrap();
        assert_eq!((a.blocking.clone(), a.ci.clone(), a.blocked.clone()), (b.blocking, b.ci, b.blocked));
        assert_eq!(a.batches, 60);
        c.settings.seed = 2;
        assert_ne!(run_sim(&c).unwrap().blocked, a.blocked);
    }

    #[test]
    fn too_few_batches() {
        let mut c = two_link(10, &[3, 4], 0.5);
        c.settings.batches = 5;
        assert!(run_sim(&c).is_err());
    }

    #[test]
    fn agrees_with_exact_on_small_chain() {
        let mut c = two_link(6, &[2, 3], 2.0);
        c.settings.requests = 200_000;
        let sim = run_sim(&c).unwrap();
        let exact = crate::exact::solve_exact(&c).unwrap();
        let diff = (sim.blocking.overall - exact.blocking.overall).abs();
        assert!(
            diff <= 3.0 * sim.overall_ci,
            "{} vs {} ci {}",
            sim.blocking.overall,
            exact.blocking.overall,
            sim.overall_ci
        );
    }

    fn random_state(ops: &[(usize, usize, usize)], mode: OperationMode) -> NetworkState {
        let routes: [&[usize]; 3] = [&[0], &[1], &[0, 1]];
        let widths = [1, 2];
        let mut s = NetworkState::empty(2, 6, 2);
        for &(o, k, pick) in ops {
            let c = allocation_candidates(&s, routes[o], widths[k], mode);
            if !c.is_blocked() {
                s = apply_placement(&s, routes[o], &c.placement(routes[o].len(), pick % c.len()), widths[k], o, k);
            }
        }
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sampling_stays_within_exact_successors(
            ops in proptest::collection::vec((0usize..3, 0usize..2, 0usize..64), 0..8),
            mode_ix in 0usize..4,
            o in 0usize..3,
            k in 0usize..2,
        ) {
            let mode = OperationMode::ALL[mode_ix];
            let routes: [&[usize]; 3] = [&[0], &[1], &[0, 1]];
            let widths = [1, 2];
            let s = random_state(&ops, mode);
            let exact: HashSet<NetworkState> =
                allocate_candidates(&s, routes[o], widths[k], o, k, mode).into_iter().collect();
            let cands = allocation_candidates(&s, routes[o], widths[k], mode);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut seen = HashSet::new();
            for _ in 0..200 {
                match sample_placement(&cands, routes[o].len(), mode.policy, &mut rng) {
                    None => prop_assert!(exact.is_empty()),
                    Some(starts) => {
                        let t = apply_placement(&s, routes[o], &starts, widths[k], o, k);
                        prop_assert!(exact.contains(&t));
                        seen.insert(t);
                    }
                }
            }
            prop_assert_eq!(seen.len(), exact.len());
        }
    }
}
