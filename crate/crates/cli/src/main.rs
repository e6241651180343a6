use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eon_core::approx::fixed_point;
use eon_core::exact::{build_state_space, component_config, components};
use eon_core::report::{compare, read_csv, read_json, write_csv, write_json, ReportRow, ToleranceSpec};
use eon_core::statecount::{enumerate_link_states, CountTable};
use eon_core::sweep::{grid, run_sweep, SweepPoint};
use eon_core::{load_config_file, offered_load, Engine, OperationMode, Policy, ScenarioConfig, Variant};

#[derive(Parser)]
#[command(name = "eonbp", version, about = "Connection blocking in elastic optical networks")]
struct Cli {
    /// Worker threads for the sweep (defaults to one per core).
    #[arg(long, global = true, env = "EON_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the exact chain.
    Exact {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Write the discovered states of every component here.
        #[arg(long, value_name = "DIR")]
        dump_states: Option<PathBuf>,
    },
    /// Reduced-load fixed point.
    Approx {
        #[command(flatten)]
        sweep: SweepArgs,
        /// ees, soc, uniform or all; repeatable or comma separated.
        #[arg(long, value_delimiter = ',')]
        variant: Vec<VariantArg>,
        /// Write the per-iteration trace of every point here.
        #[arg(long, value_name = "DIR")]
        trace: Option<PathBuf>,
    },
    /// Discrete-event simulation.
    Sim {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        requests: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Per-(x,k) state classification of a single link.
    Counts {
        #[arg(long = "C", value_name = "C")]
        capacity: usize,
        #[arg(long = "d", value_delimiter = ',', required = true, value_name = "D")]
        widths: Vec<usize>,
        #[arg(long, default_value = "rf")]
        policy: PolicyArg,
        #[arg(long, default_value_t = 2_000_000)]
        state_cap: usize,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diff two reports (CSV or JSON) and exit 1 if any row is out of tolerance.
    Compare {
        expected: PathBuf,
        actual: PathBuf,
        /// rel:x, abs:x, ci:m, factor:x or sig:s[:u].
        #[arg(long, default_value = "rel:0.05")]
        tol: ToleranceSpec,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Offered loads; defaults to the config's loads, then to its current rates.
    #[arg(long, value_delimiter = ',')]
    loads: Vec<f64>,
    /// rf, ff, rf-sc, ff-sc or all; defaults to the config's mode.
    #[arg(long, value_delimiter = ',')]
    mode: Vec<String>,
    /// Writes PREFIX.csv and PREFIX.json; CSV goes to stdout when absent.
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Ees,
    Soc,
    Uniform,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Rf,
    Ff,
}

struct Plan {
    config: ScenarioConfig,
    modes: Vec<OperationMode>,
    loads: Vec<f64>,
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn plan(&self) -> Result<Plan> {
        let config = load_config_file(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        let mut modes = Vec::new();
        for m in &self.mode {
            if m.eq_ignore_ascii_case("all") {
                modes.extend(OperationMode::ALL);
            } else {
                modes.push(m.parse::<OperationMode>().map_err(anyhow::Error::msg)?);
            }
        }
        if modes.is_empty() {
            modes.push(config.mode);
        }
        modes.dedup();
        let loads = if !self.loads.is_empty() {
            self.loads.clone()
        } else if !config.loads.is_empty() {
            config.loads.clone()
        } else {
            vec![offered_load(&config)]
        };
        if let Some(bad) = loads.iter().find(|l| !l.is_finite() || **l < 0.0) {
            bail!("invalid load {bad}");
        }
        Ok(Plan { config, modes, loads, out: self.out.clone() })
    }
}

fn variants(args: &[VariantArg], default: Variant) -> Vec<Variant> {
    let mut out = Vec::new();
    for a in args {
        match a {
            VariantArg::Ees => out.push(Variant::Ees),
            VariantArg::Soc => out.push(Variant::Soc),
            VariantArg::Uniform => out.push(Variant::Uniform),
            VariantArg::All => out.extend([Variant::Ees, Variant::Soc, Variant::Uniform]),
        }
    }
    if out.is_empty() {
        out.push(default);
    }
    out.dedup();
    out
}

fn emit(rows: &[ReportRow], out: Option<&Path>) -> Result<()> {
    match out {
        None => {
            let stdout = io::stdout();
            write_csv(rows, stdout.lock())?;
        }
        Some(prefix) => {
            let csv = prefix.with_extension("csv");
            let json = prefix.with_extension("json");
            if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            write_csv(
                rows,
                BufWriter::new(File::create(&csv).with_context(|| format!("creating {}", csv.display()))?),
            )?;
            write_json(
                rows,
                BufWriter::new(File::create(&json).with_context(|| format!("creating {}", json.display()))?),
            )?;
            eprintln!("wrote {} rows to {} and {}", rows.len(), csv.display(), json.display());
        }
    }
    Ok(())
}

fn sweep(plan: &Plan, points: &[SweepPoint]) -> Result<()> {
    let rows = run_sweep(&plan.config, points).context("engine failed")?;
    emit(&rows, plan.out.as_deref())
}

fn point_stem(p: &SweepPoint) -> String {
    match p.variant {
        Some(v) => format!("{}_{}_{}", p.mode, v, p.load),
        None => format!("{}_{}", p.mode, p.load),
    }
}

fn dump_states(plan: &Plan, points: &[SweepPoint], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for p in points {
        let config = plan.config.scaled_to_load(p.load).with_mode(p.mode);
        for (i, comp) in components(&config).iter().enumerate() {
            let space = build_state_space(&component_config(&config, comp))?;
            let path = dir.join(format!("states_{}_c{i}.txt", point_stem(p)));
            space
                .write_dump(BufWriter::new(File::create(&path)?))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn write_traces(plan: &Plan, points: &[SweepPoint], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for p in points {
        let config = plan.config.scaled_to_load(p.load).with_mode(p.mode);
        let report = fixed_point(&config, p.variant.unwrap_or(config.variant))?;
        let path = dir.join(format!("trace_{}.csv", point_stem(p)));
        report
            .write_trace_csv(BufWriter::new(File::create(&path)?))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json(file),
        _ => read_csv(file),
    };
    rows.with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("EON_WORKERS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Exact { sweep: args, dump_states: dump } => {
            let plan = args.plan()?;
            let points = grid(Engine::Exact, &plan.modes, &[], &plan.loads);
            if let Some(dir) = dump {
                dump_states(&plan, &points, &dir)?;
            }
            sweep(&plan, &points)?;
        }
        Command::Approx { sweep: args, variant, trace } => {
            let plan = args.plan()?;
            let points = grid(Engine::Approx, &plan.modes, &variants(&variant, plan.config.variant), &plan.loads);
            if let Some(dir) = trace {
                write_traces(&plan, &points, &dir)?;
            }
            sweep(&plan, &points)?;
        }
        Command::Sim { sweep: args, requests, seed, replications } => {
            let mut plan = args.plan()?;
            let s = &mut plan.config.settings;
            s.requests = requests.unwrap_or(s.requests);
            s.seed = seed.unwrap_or(s.seed);
            s.replications = replications.unwrap_or(s.replications);
            if s.replications == 0 {
                bail!("--replications must be at least 1");
            }
            let points = grid(Engine::Sim, &plan.modes, &[], &plan.loads);
            sweep(&plan, &points)?;
        }
        Command::Counts { capacity, widths, policy, state_cap, out } => {
            if widths.iter().any(|&d| d == 0 || d > capacity) {
                bail!("--d: widths must lie in 1..={capacity}");
            }
            let table = match policy {
                PolicyArg::Rf => CountTable::closed_form(capacity, &widths),
                PolicyArg::Ff => enumerate_link_states(Policy::FirstFit, capacity, &widths, state_cap)?.counts,
            };
            match out {
                Some(path) => {
                    table.write_csv(File::create(&path).with_context(|| format!("creating {}", path.display()))?)?
                }
                None => table.write_csv(io::stdout().lock())?,
            }
        }
        Command::Compare { expected, actual, tol } => {
            let summary = compare(&read_report(&expected)?, &read_report(&actual)?, tol)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{summary}")?;
            if !summary.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
