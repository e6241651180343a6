//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs::File;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use eon_core::approx::{
    acceptance_model, fixed_point, network_blocking, network_blocking_nested, setup_rates, setup_rates_nested,
    uniform_overlap_pmf,
};
use eon_core::exact::{build_rate_matrix, build_state_space};
use eon_core::report::{compare, read_csv, ReportRow, ToleranceSpec};
use eon_core::scenarios::{nsfnet, ring, single_link, two_link};
use eon_core::solver::solve_stationary;
use eon_core::statecount::{count_nonblocking, count_total, enumerate_link_states, CountTable};
use eon_core::sweep::{grid, run_sweep};
use eon_core::{Engine, OperationMode, Policy, ScenarioConfig, Variant};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> Vec<ReportRow> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    read_csv(File::open(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn sig2() -> ToleranceSpec {
    "sig:2".parse().unwrap()
}

fn overall(rows: Vec<ReportRow>) -> Vec<ReportRow> {
    rows.into_iter().filter(ReportRow::is_overall).collect()
}

fn select<'a>(rows: &'a [ReportRow], pred: impl Fn(&ReportRow) -> bool + 'a) -> Vec<ReportRow> {
    rows.iter().filter(|r| pred(r)).cloned().collect()
}

/// Compares and renders the outcome; `max_runtime` bounds the per-row
/// runtime of the computed rows.
fn check(expected: &[ReportRow], actual: &[ReportRow], tol: ToleranceSpec, max_runtime: f64) -> Outcome {
    let summary = compare(expected, actual, tol).map_err(|e| e.to_string())?;
    let slowest = actual.iter().map(|r| r.runtime_s).fold(0.0, f64::max);
    let mut detail: Vec<String> = summary
        .entries
        .iter()
        .map(|e| format!("{}={:.3e}/{:.1e}{}", e.key, e.actual, e.expected, if e.pass { "" } else { "!" }))
        .collect();
    detail.push(format!("slowest point {slowest:.2}s"));
    let detail = detail.join(" ");
    if summary.passed() && slowest < max_runtime {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn both(a: Outcome, b: Outcome) -> Outcome {
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(format!("{a} | {b}")),
        (a, b) => Err(format!("{} | {}", a.unwrap_or_else(|e| e), b.unwrap_or_else(|e| e))),
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut cells = 0usize;
    for widths in [vec![3, 4], vec![3, 4, 5]] {
        for c in 5..=14 {
            let closed = CountTable::closed_form(c, &widths);
            let enumerated =
                enumerate_link_states(Policy::RandomFit, c, &widths, 1_000_000).map_err(|e| e.to_string())?.counts;
            for x in 0..=c {
                for k in 0..widths.len() {
                    if closed.get(x, k) != enumerated.get(x, k) {
                        return Err(format!(
                            "C={c} d={widths:?} x={x} k={k}: {:?} vs {:?}",
                            closed.get(x, k),
                            enumerated.get(x, k)
                        ));
                    }
                    cells += 1;
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let detail = format!("{cells} (C,d,x,k) cells equal, {secs:.2}s");
    if secs < 30.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Outcome {
    let widths = [3, 4];
    let states = enumerate_link_states(Policy::RandomFit, 7, &widths, 1000).map_err(|e| e.to_string())?.states.len();
    let omega3 = count_total(3, 7, &widths);
    let nb3 = count_nonblocking(3, 1, 7, &widths);
    let ff = enumerate_link_states(Policy::FirstFit, 7, &widths, 1000).map_err(|e| e.to_string())?.counts;
    let ff3 = ff.get(3, 1).ok_or("FF has no states at x=3")?;
    let detail = format!(
        "RF states {states}, |Omega(3)| {omega3}, |NB(3,d=4)| {nb3}, FF NB(3,d=4) {} of {}",
        ff3.non_blocking, ff3.total
    );
    let ok = states == 15
        && omega3 == 5u32.into()
        && nb3 == 2u32.into()
        && ff3.non_blocking == 2u32.into()
        && ff3.total == 3u32.into();
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let expected = select(&fixture("link_c10.csv"), |r| r.engine == "exact");
    let points = grid(Engine::Exact, &[OperationMode::RF, OperationMode::FF], &[], &[0.1, 0.6, 1.2]);
    let rows = run_sweep(&single_link(10, &[3, 4], 0.1), &points).map_err(|e| e.to_string())?;
    check(&expected, &overall(rows), sig2(), 10.0)
}

fn criterion_4() -> Outcome {
    let expected = select(&fixture("link_c10.csv"), |r| r.engine == "approx" && r.mode == "rf");
    let points = grid(Engine::Approx, &[OperationMode::RF], &[Variant::Ees, Variant::Soc], &[0.1, 0.6, 1.2]);
    let rows = run_sweep(&single_link(10, &[3, 4], 0.1), &points).map_err(|e| e.to_string())?;
    let small = check(&expected, &overall(rows), sig2(), 60.0);

    let expected = select(&fixture("link_c100.csv"), |r| r.load == 8.0 || r.load == 20.0);
    let points = grid(Engine::Approx, &[OperationMode::RF], &[Variant::Ees, Variant::Soc], &[8.0, 20.0]);
    let rows = run_sweep(&single_link(100, &[3, 4, 6], 8.0), &points).map_err(|e| e.to_string())?;
    both(small, check(&expected, &overall(rows), sig2(), 60.0))
}

fn criterion_5() -> Outcome {
    let table = fixture("two_link.csv");
    let base = two_link(10, &[3, 4], 0.1);
    let expected = select(&table, |r| r.engine == "exact");
    let rows = run_sweep(&base, &grid(Engine::Exact, &OperationMode::ALL, &[], &[0.1])).map_err(|e| e.to_string())?;
    let exact = check(&expected, &overall(rows), sig2(), 60.0);

    let expected = select(&table, |r| r.engine == "approx" && r.mode == "rf");
    let points = grid(Engine::Approx, &[OperationMode::RF], &[Variant::Ees, Variant::Soc, Variant::Uniform], &[0.1]);
    let rows = run_sweep(&base, &points).map_err(|e| e.to_string())?;
    both(exact, check(&expected, &overall(rows), sig2(), 60.0))
}

fn sim_vs_exact(name: &str, base: &ScenarioConfig, load: f64) -> Outcome {
    let mut base = base.clone();
    base.settings.requests = 1_000_000;
    let exact = run_sweep(&base, &grid(Engine::Exact, &OperationMode::ALL, &[], &[load])).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let sim = run_sweep(&base, &grid(Engine::Sim, &OperationMode::ALL, &[], &[load])).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let out = check(&overall(exact), &overall(sim), "ci:3".parse().unwrap(), 120.0);
    let tag = |s: String| format!("{name}: {s}, {secs:.1}s for all modes");
    match out {
        Ok(s) if secs < 120.0 => Ok(tag(s)),
        Ok(s) | Err(s) => Err(tag(s)),
    }
}

fn criterion_6() -> Outcome {
    both(
        sim_vs_exact("2-link C=10", &two_link(10, &[3, 4], 0.1), 0.1),
        sim_vs_exact("ring3 C=7", &ring(3, 7, &[3, 4], 1.2), 1.2),
    )
}

fn random_widths(rng: &mut ChaCha8Rng, capacity: usize) -> Vec<usize> {
    let k = rng.random_range(1..=3);
    let mut w: Vec<usize> = (0..k).map(|_| rng.random_range(1..=capacity.min(6))).collect();
    w.sort_unstable();
    w.dedup();
    w
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let variants = [Variant::Ees, Variant::Soc, Variant::Uniform];
    let mut checks = 0usize;
    let fail = |what: String| Err::<String, String>(what);

    for _ in 0..30 {
        let capacity = rng.random_range(4..=9);
        let widths = random_widths(&mut rng, capacity);
        let load = rng.random_range(0.05..3.0);
        let mode = *OperationMode::ALL.choose(&mut rng).unwrap();
        let config = if rng.random_bool(0.5) {
            single_link(capacity, &widths, load)
        } else {
            two_link(capacity.min(7), &widths, load)
        }
        .with_mode(mode);
        if widths.iter().any(|&d| d > config.capacity()) {
            continue;
        }
        let space = build_state_space(&config).map_err(|e| e.to_string())?;
        let q = build_rate_matrix(&space, &config);
        if q.max_row_sum() > 1e-10 {
            return fail(format!("row sum {:e} on {widths:?} C={capacity}", q.max_row_sum()));
        }
        let pi = solve_stationary(&q, config.settings.solver_tol, None).map_err(|e| e.to_string())?;
        let sum: f64 = pi.iter().sum();
        if (sum - 1.0).abs() > 1e-8 || pi.iter().any(|&p| p < 0.0) {
            return fail(format!("pi sums to {sum} on {widths:?} C={capacity}"));
        }
        checks += 2;
    }

    for _ in 0..40 {
        let capacity = rng.random_range(3..=40);
        let widths = random_widths(&mut rng, capacity);
        let table = CountTable::closed_form(capacity, &widths);
        for x in 0..=capacity {
            for k in 0..widths.len() {
                if let Some(c) = table.get(x, k) {
                    if &c.non_blocking + &c.frag_blocking + &c.resource_blocking != c.total {
                        return fail(format!("partition at C={capacity} d={widths:?} x={x} k={k}"));
                    }
                    checks += 1;
                }
            }
        }
        for variant in variants {
            for sc in [false, true] {
                let counts = (variant != Variant::Uniform).then(|| table.clone());
                let model = eon_core::approx::AcceptanceModel::new(variant, sc, capacity, &widths, counts);
                let xbar = rng.random_range(0.0..capacity as f64);
                for x in table.valid_microstates() {
                    for (k, &d) in widths.iter().enumerate() {
                        let p = model.link(x, k, xbar);
                        if !(0.0..=1.0).contains(&p) || (x + d > capacity && p != 0.0) {
                            return fail(format!("{variant} acceptance {p} at C={capacity} x={x} d={d}"));
                        }
                        checks += 1;
                    }
                }
            }
        }
        let occ: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(0..=capacity)).collect();
        let g = uniform_overlap_pmf(capacity, &occ);
        let total: f64 = g.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return fail(format!("g_n sums to {total} for C={capacity} occupancy {occ:?}"));
        }
        checks += 1;
    }

    for _ in 0..20 {
        let capacity = rng.random_range(5..=10);
        let widths = random_widths(&mut rng, capacity);
        let mode = *OperationMode::ALL.choose(&mut rng).unwrap();
        let variant = *variants.choose(&mut rng).unwrap();
        let config = two_link(capacity, &widths, rng.random_range(0.05..4.0)).with_mode(mode);
        let model = acceptance_model(&config, variant).map_err(|e| e.to_string())?;
        let links = fixed_point(&config, variant).map_err(|e| e.to_string())?.links;
        let a = network_blocking(&links, &config, &model);
        let b = network_blocking_nested(&links, &config, &model);
        let mut worst =
            a.per_od.iter().flatten().zip(b.per_od.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        for j in 0..2 {
            let a = setup_rates(j, &links, &config, &model);
            let b = setup_rates_nested(j, &links, &config, &model);
            worst = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
        }
        if worst > 1e-12 {
            return fail(format!(
                "factorized vs nested differ by {worst:e} ({mode} {variant} C={capacity} d={widths:?})"
            ));
        }
        checks += 1;
    }

    let mut runs: Vec<(String, ScenarioConfig, Vec<f64>, Vec<OperationMode>)> = vec![
        ("link C=10".into(), single_link(10, &[3, 4], 0.1), vec![0.1, 0.6, 1.2], OperationMode::ALL[..2].to_vec()),
        (
            "link C=100".into(),
            single_link(100, &[3, 4, 6], 8.0),
            vec![8.0, 12.0, 16.0, 20.0],
            OperationMode::ALL[..2].to_vec(),
        ),
        ("2-link".into(), two_link(10, &[3, 4], 0.1), vec![0.1], OperationMode::ALL.to_vec()),
        ("NSFNET C=10".into(), nsfnet(10, &[3, 4], 0.1), vec![0.1, 0.6, 1.2, 7.2], OperationMode::ALL.to_vec()),
    ];
    let mut max_iters = 0;
    for (name, base, loads, modes) in runs.drain(..) {
        for mode in modes {
            for variant in variants {
                for &load in &loads {
                    let config = base.at_load(load).with_mode(mode);
                    let r = fixed_point(&config, variant).map_err(|e| e.to_string())?;
                    if !r.converged || r.iterations > 200 || config.settings.epsilon != 1e-6 {
                        return fail(format!(
                            "{name} {mode} {variant} load {load}: {} iterations, converged={}",
                            r.iterations, r.converged
                        ));
                    }
                    max_iters = max_iters.max(r.iterations);
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{checks} randomized and fixture checks hold; fixed point needs at most {max_iters} iterations"))
}

fn criterion_8() -> Outcome {
    let expected = fixture("nsfnet_c10.csv");
    let mut base = nsfnet(10, &[3, 4], 0.1);
    base.settings.requests = 1_000_000;
    let loads = [0.1, 0.6, 1.2, 7.2];
    let factor: ToleranceSpec = "factor:3".parse().unwrap();

    let mut points = grid(Engine::Approx, &[OperationMode::RF, OperationMode::RF_SC], &[Variant::Ees], &loads);
    points.extend(grid(Engine::Approx, &[OperationMode::FF, OperationMode::FF_SC], &[Variant::Soc], &loads));
    let approx = overall(run_sweep(&base, &points).map_err(|e| e.to_string())?);
    let sim =
        overall(run_sweep(&base, &grid(Engine::Sim, &OperationMode::ALL, &[], &loads)).map_err(|e| e.to_string())?);
    both(check(&expected, &approx, factor, 60.0), check(&expected, &sim, factor, 120.0))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("counting closed forms equal random-fit enumeration", criterion_1),
        ("single-link micro fixtures", criterion_2),
        ("single-link exact blocking", criterion_3),
        ("single-link approximations", criterion_4),
        ("two-link chain", criterion_5),
        ("simulation within 3 CI of exact", criterion_6),
        ("property suites", criterion_7),
        ("NSFNET C=10 within a factor of 3", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
