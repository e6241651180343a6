//! Reduced-load approximation: per-link occupancy chains coupled through
//! thinned arrival rates, iterated to a fixed point.

mod acceptance;
mod rates;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

pub use acceptance::{
    p_accept_ees, p_accept_route, p_accept_soc, p_accept_uniform_link_sc, p_accept_uniform_route, uniform_overlap_pmf,
    AcceptanceModel,
};
pub use rates::{
    departure_rates, network_blocking, network_blocking_nested, reduced_gbe_solve, setup_rates, setup_rates_nested,
    LinkOccupancyModel,
};

use crate::error::EngineError;
use crate::model::{BlockingTable, ScenarioConfig, Variant};
use crate::statecount::CountTable;

/// Damping weight on the previous setup rates once oscillation is detected.
pub const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub max_delta: f64,
    pub mean_occupancy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub iterations: usize,
    pub max_delta: f64,
    pub converged: bool,
    pub damped: bool,
    pub blocking: BlockingTable,
    pub links: Vec<LinkOccupancyModel>,
    pub trace: Vec<TraceRow>,
    pub runtime_s: f64,
}

impl FixedPointReport {
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string(), "max_delta".to_string()];
        header.extend(self.links.iter().map(|l| format!("xbar_{}", l.link)));
        w.write_record(&header)?;
        for row in &self.trace {
            let mut rec = vec![row.iteration.to_string(), row.max_delta.to_string()];
            rec.extend(row.mean_occupancy.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Acceptance model for `config` under `variant`, with the count table its
/// allocation policy calls for.
pub fn acceptance_model(config: &ScenarioConfig, variant: Variant) -> Result<AcceptanceModel, EngineError> {
    let widths = config.widths();
    let counts = match variant {
        Variant::Uniform => None,
        Variant::Ees | Variant::Soc => Some(CountTable::for_policy(
            config.mode.policy,
            config.capacity(),
            &widths,
            config.settings.ff_enum_max_capacity,
            config.settings.state_cap,
        )?),
    };
    Ok(AcceptanceModel::new(variant, config.mode.spectrum_conversion, config.capacity(), &widths, counts))
}

/// Iterates per-link stationary solves, mean occupancies, setup rates and
/// blocking until the largest per-`(o,k)` change drops below `epsilon`.
/// Without convergence the last iterate is returned with `converged = false`.
pub fn fixed_point(config: &ScenarioConfig, variant: Variant) -> Result<FixedPointReport, EngineError> {
    let started = Instant::now();
    let model = acceptance_model(config, variant)?;
    fixed_point_with(config, &model, started)
}

fn fixed_point_with(
    config: &ScenarioConfig,
    model: &AcceptanceModel,
    started: Instant,
) -> Result<FixedPointReport, EngineError> {
    let capacity = config.capacity();
    let widths = config.widths();
    let gamma = departure_rates(capacity, &config.classes);
    let valid: Vec<usize> = (0..=capacity).filter(|&x| !gamma[x].is_empty()).collect();
    let num_links = config.topology.links().len();
    let settings = &config.settings;

    let mut links: Vec<LinkOccupancyModel> = (0..num_links)
        .map(|j| {
            let mut m = LinkOccupancyModel::new(j, valid.clone(), capacity, widths.len());
            for od in config.od_pairs.iter().filter(|o| o.uses_link(j)) {
                for (k, &d) in widths.iter().enumerate() {
                    for &x in valid.iter().filter(|&&x| x + d <= capacity) {
                        m.setup_rates[k][x] += od.arrival_rates[k];
                    }
                }
            }
            m
        })
        .collect();

    let mut previous = vec![vec![0.0; widths.len()]; config.od_pairs.len()];
    let mut blocking = BlockingTable::new(previous.clone(), config);
    let mut trace = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut damped = false;
    let mut max_delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iters {
        iterations += 1;
        let pis: Vec<Vec<f64>> = links
            .par_iter()
            .map(|l| reduced_gbe_solve(&widths, &valid, &l.setup_rates, &gamma, settings.solver_tol))
            .collect::<Result<_, _>>()?;
        for (l, pi) in links.iter_mut().zip(pis) {
            l.mean_occupancy = valid.iter().map(|&x| x as f64 * pi[x]).sum();
            l.pi = pi;
        }
        let fresh: Vec<Vec<Vec<f64>>> =
            (0..num_links).into_par_iter().map(|j| setup_rates(j, &links, config, model)).collect();
        blocking = network_blocking(&links, config, model);

        let mut signed = 0.0f64;
        for (row, prev) in blocking.per_od.iter().zip(&previous) {
            for (b, p) in row.iter().zip(prev) {
                if (b - p).abs() > signed.abs() {
                    signed = b - p;
                }
            }
        }
        max_delta = signed.abs();
        previous = blocking.per_od.clone();
        signs.push(signed.signum());
        if !damped && signs.len() >= 3 {
            let s = &signs[signs.len() - 3..];
            damped = s[0] != 0.0 && s[0] == -s[1] && s[1] == -s[2];
        }

        for (l, new) in links.iter_mut().zip(fresh) {
            if damped {
                for (old_row, new_row) in l.setup_rates.iter_mut().zip(new) {
                    for (o, n) in old_row.iter_mut().zip(new_row) {
                        *o = DAMPING * *o + (1.0 - DAMPING) * n;
                    }
                }
            } else {
                l.setup_rates = new;
            }
        }
        trace.push(TraceRow {
            iteration: iterations,
            max_delta,
            mean_occupancy: links.iter().map(|l| l.mean_occupancy).collect(),
        });
        if max_delta < settings.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FixedPointReport {
        iterations,
        max_delta,
        converged,
        damped,
        blocking,
        links,
        trace,
        runtime_s: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests;
