//! Evaluates one engine over a grid of (mode, variant, load) points.

use rayon::prelude::*;

use crate::approx::fixed_point;
use crate::exact::solve_exact;
use crate::model::{Engine, OperationMode, ScenarioConfig, Variant};
use crate::report::{format_meta, rows_for, ReportRow};
use crate::sim::run_sim;
use crate::EngineError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub mode: OperationMode,
    pub engine: Engine,
    /// Only meaningful for the approximation engine.
    pub variant: Option<Variant>,
    pub load: f64,
}

/// Cartesian product in mode-major, then variant, then load order.
pub fn grid(engine: Engine, modes: &[OperationMode], variants: &[Variant], loads: &[f64]) -> Vec<SweepPoint> {
    let variants: Vec<Option<Variant>> = match engine {
        Engine::Approx => variants.iter().copied().map(Some).collect(),
        _ => vec![None],
    };
    let mut out = Vec::new();
    for &mode in modes {
        for &variant in &variants {
            for &load in loads {
                out.push(SweepPoint { mode, engine, variant, load });
            }
        }
    }
    out
}

/// Report rows for one point. The base config's rates are rescaled to the
/// point's load with their proportions kept.
pub fn run_point(base: &ScenarioConfig, point: &SweepPoint) -> Result<Vec<ReportRow>, EngineError> {
    let config = base.scaled_to_load(point.load).with_mode(point.mode);
    let rows = match point.engine {
        Engine::Exact => {
            let sol = solve_exact(&config)?;
            let meta = format_meta(&[("states", sol.states.to_string()), ("components", sol.components.to_string())]);
            rows_for(
                &config,
                point.mode,
                Engine::Exact,
                None,
                point.load,
                &sol.blocking,
                sol.runtime_s,
                &meta,
                |_, _| String::new(),
            )
        }
        Engine::Approx => {
            let variant = point.variant.unwrap_or(base.variant);
            let fp = fixed_point(&config, variant)?;
            let meta = format_meta(&[
                ("iterations", fp.iterations.to_string()),
                ("converged", fp.converged.to_string()),
                ("damped", fp.damped.to_string()),
                ("max_delta", format!("{:e}", fp.max_delta)),
            ]);
            rows_for(
                &config,
                point.mode,
                Engine::Approx,
                Some(variant),
                point.load,
                &fp.blocking,
                fp.runtime_s,
                &meta,
                |_, _| String::new(),
            )
        }
        Engine::Sim => {
            let res = run_sim(&config)?;
            let meta = format_meta(&[
                ("ci", format!("{:e}", res.overall_ci)),
                ("requests", res.requests.to_string()),
                ("batches", res.batches.to_string()),
                ("seed", res.seed.to_string()),
                ("rng", res.rng.to_string()),
            ]);
            rows_for(&config, point.mode, Engine::Sim, None, point.load, &res.blocking, res.runtime_s, &meta, |o, k| {
                format!("ci={:e}", res.ci[o][k])
            })
        }
    };
    Ok(rows)
}

/// Runs every point on the current rayon pool and concatenates the rows in
/// point order. The first failing point aborts the sweep.
pub fn run_sweep(base: &ScenarioConfig, points: &[SweepPoint]) -> Result<Vec<ReportRow>, EngineError> {
    let chunks: Vec<Vec<ReportRow>> = points.par_iter().map(|p| run_point(base, p)).collect::<Result<_, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}
