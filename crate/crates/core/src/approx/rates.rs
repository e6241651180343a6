use super::acceptance::AcceptanceModel;
use crate::error::SolverError;
use crate::model::{BlockingTable, DemandClass, ScenarioConfig};
use crate::solver::{solve_stationary, SparseRateSystem};
use crate::statecount::enumerate_macrostates;

/// Occupancy distribution and rates of one link in the reduced model. All
/// per-occupancy vectors have length `C + 1` and are zero at occupancies no
/// macrostate realizes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkOccupancyModel {
    pub link: usize,
    pub valid: Vec<usize>,
    pub pi: Vec<f64>,
    pub mean_occupancy: f64,
    /// `alpha[k][x]`.
    pub setup_rates: Vec<Vec<f64>>,
}

impl LinkOccupancyModel {
    pub fn new(link: usize, valid: Vec<usize>, capacity: usize, num_classes: usize) -> Self {
        let mut pi = vec![0.0; capacity + 1];
        pi[0] = 1.0;
        LinkOccupancyModel {
            link,
            valid,
            pi,
            mean_occupancy: capacity as f64 / 2.0,
            setup_rates: vec![vec![0.0; capacity + 1]; num_classes],
        }
    }
}

/// `gamma[x][k] = mu_k * E[n_k | x]`, averaging uniformly over the
/// macrostates at `x`. Empty rows mark occupancies with no macrostate.
pub fn departure_rates(capacity: usize, classes: &[DemandClass]) -> Vec<Vec<f64>> {
    let widths: Vec<usize> = classes.iter().map(|c| c.width).collect();
    (0..=capacity)
        .map(|x| {
            let ms = enumerate_macrostates(capacity, &widths, x);
            if ms.is_empty() {
                return Vec::new();
            }
            classes
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let mean = ms.iter().map(|m| m.counts[k] as f64).sum::<f64>() / ms.len() as f64;
                    c.holding_rate * mean
                })
                .collect()
        })
        .collect()
}

/// Stationary distribution of the occupancy chain: class `k` moves `x` to
/// `x + d_k` at `alpha[k][x]` and to `x - d_k` at `gamma[x][k]`.
pub fn reduced_gbe_solve(
    widths: &[usize],
    valid: &[usize],
    alpha: &[Vec<f64>],
    gamma: &[Vec<f64>],
    tolerance: f64,
) -> Result<Vec<f64>, SolverError> {
    let capacity = gamma.len() - 1;
    let mut index = vec![usize::MAX; capacity + 1];
    for (i, &x) in valid.iter().enumerate() {
        index[x] = i;
    }
    let mut rates = Vec::new();
    for (i, &x) in valid.iter().enumerate() {
        for (k, &d) in widths.iter().enumerate() {
            if x + d <= capacity && alpha[k][x] > 0.0 {
                rates.push((i, index[x + d], alpha[k][x]));
            }
            if x >= d && gamma[x][k] > 0.0 {
                rates.push((i, index[x - d], gamma[x][k]));
            }
        }
    }
    let q = SparseRateSystem::from_triplets(valid.len(), rates);
    let solved = solve_stationary(&q, tolerance, None)?;
    let mut pi = vec![0.0; capacity + 1];
    for (&x, p) in valid.iter().zip(solved) {
        pi[x] = p;
    }
    Ok(pi)
}

fn exponent(model: &AcceptanceModel, hops: usize) -> i32 {
    if model.spectrum_conversion() {
        1
    } else {
        hops as i32
    }
}

/// `sum_x pi_i(x) p_i(x, k)^e`.
fn marginal(model: &AcceptanceModel, link: &LinkOccupancyModel, k: usize, e: i32) -> f64 {
    link.valid.iter().map(|&x| link.pi[x] * model.link(x, k, link.mean_occupancy).powi(e)).sum()
}

/// Acceptance of OD `o`'s class-`k` request given link `fixed.0` sits at
/// occupancy `fixed.1` (unconditional when `fixed` is `None`), in
/// factorized form.
fn route_acceptance(
    model: &AcceptanceModel,
    links: &[LinkOccupancyModel],
    route: &[usize],
    k: usize,
    fixed: Option<(usize, usize)>,
) -> f64 {
    if model.uses_pair_table(route.len()) {
        let (a, b) = (&links[route[0]], &links[route[1]]);
        return match fixed {
            Some((j, x)) if j == route[0] => b.valid.iter().map(|&y| b.pi[y] * model.pair(k, x, y)).sum(),
            Some((j, x)) if j == route[1] => a.valid.iter().map(|&y| a.pi[y] * model.pair(k, y, x)).sum(),
            _ => a
                .valid
                .iter()
                .map(|&x| a.pi[x] * b.valid.iter().map(|&y| b.pi[y] * model.pair(k, x, y)).sum::<f64>())
                .sum(),
        };
    }
    let e = exponent(model, route.len());
    route
        .iter()
        .map(|&i| match fixed {
            Some((j, x)) if j == i => model.link(x, k, links[i].mean_occupancy).powi(e),
            _ => marginal(model, &links[i], k, e),
        })
        .product()
}

/// `alpha_k^j(x)` for every class and occupancy of link `j`.
pub fn setup_rates(
    j: usize,
    links: &[LinkOccupancyModel],
    config: &ScenarioConfig,
    model: &AcceptanceModel,
) -> Vec<Vec<f64>> {
    let capacity = config.capacity();
    let mut alpha = vec![vec![0.0; capacity + 1]; config.num_classes()];
    for od in config.od_pairs.iter().filter(|o| o.uses_link(j)) {
        for (k, row) in alpha.iter_mut().enumerate() {
            let lambda = od.arrival_rates[k];
            if lambda == 0.0 {
                continue;
            }
            for &x in &links[j].valid {
                row[x] += lambda * route_acceptance(model, links, &od.route, k, Some((j, x)));
            }
        }
    }
    alpha
}

/// Per-`(o,k)` blocking `1 - P(accept)` under link independence.
pub fn network_blocking(
    links: &[LinkOccupancyModel],
    config: &ScenarioConfig,
    model: &AcceptanceModel,
) -> BlockingTable {
    let per_od = config
        .od_pairs
        .iter()
        .map(|od| {
            (0..config.num_classes())
                .map(|k| (1.0 - route_acceptance(model, links, &od.route, k, None)).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    BlockingTable::new(per_od, config)
}

/// Direct sum over every joint occupancy of the route's links.
fn nested_acceptance(
    model: &AcceptanceModel,
    links: &[LinkOccupancyModel],
    route: &[usize],
    k: usize,
    fixed: Option<(usize, usize)>,
) -> f64 {
    fn rec(
        model: &AcceptanceModel,
        links: &[LinkOccupancyModel],
        route: &[usize],
        k: usize,
        fixed: Option<(usize, usize)>,
        xs: &mut Vec<usize>,
        weight: f64,
    ) -> f64 {
        let depth = xs.len();
        if depth == route.len() {
            let means: Vec<f64> = route.iter().map(|&i| links[i].mean_occupancy).collect();
            return weight * model.route(xs, &means, k);
        }
        let link = &links[route[depth]];
        let choices: Vec<(usize, f64)> = match fixed {
            Some((j, x)) if j == route[depth] => vec![(x, 1.0)],
            _ => link.valid.iter().map(|&x| (x, link.pi[x])).collect(),
        };
        let mut acc = 0.0;
        for (x, p) in choices {
            xs.push(x);
            acc += rec(model, links, route, k, fixed, xs, weight * p);
            xs.pop();
        }
        acc
    }
    rec(model, links, route, k, fixed, &mut Vec::with_capacity(route.len()), 1.0)
}

/// [`setup_rates`] by explicit summation over the other links' occupancies.
pub fn setup_rates_nested(
    j: usize,
    links: &[LinkOccupancyModel],
    config: &ScenarioConfig,
    model: &AcceptanceModel,
) -> Vec<Vec<f64>> {
    let capacity = config.capacity();
    let mut alpha = vec![vec![0.0; capacity + 1]; config.num_classes()];
    for od in config.od_pairs.iter().filter(|o| o.uses_link(j)) {
        for (k, row) in alpha.iter_mut().enumerate() {
            for &x in &links[j].valid {
                row[x] += od.arrival_rates[k] * nested_acceptance(model, links, &od.route, k, Some((j, x)));
            }
        }
    }
    alpha
}

/// [`network_blocking`] by explicit summation over joint occupancies.
pub fn network_blocking_nested(
    links: &[LinkOccupancyModel],
    config: &ScenarioConfig,
    model: &AcceptanceModel,
) -> BlockingTable {
    let per_od = config
        .od_pairs
        .iter()
        .map(|od| {
            (0..config.num_classes())
                .map(|k| (1.0 - nested_acceptance(model, links, &od.route, k, None)).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    BlockingTable::new(per_od, config)
}
